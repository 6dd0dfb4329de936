//! The decision-basis snapshot: the fold of a ledger.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::discrepancy::{Discrepancy, DiscrepancyStatus, Linkage};
use crate::error::{Error, Result};
use crate::ids::{
    ActionId, DiscrepancyId, EvidenceId, ExpectationId, FrameworkId, LinkId, ObjectId, PremiseId,
    ProbeId, SessionId,
};
use crate::ledger::{canonical_bytes, verify_chain, ChainStatus, Event, LedgerEvent};
use crate::model::{
    ActionStatus, DependencyLink, EvidenceRecord, Expectation, FrameworkObject, PendingAction,
    Premise, Probe, Session,
};

/// Immutable-by-convention view of every object in a basis. The only way
/// to change one is [`Basis::apply`], which the engine calls with freshly
/// sealed ledger events, and which replay calls with logged ones.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    premises: BTreeMap<PremiseId, Premise>,
    evidence: BTreeMap<EvidenceId, EvidenceRecord>,
    actions: BTreeMap<ActionId, PendingAction>,
    expectations: BTreeMap<ExpectationId, Expectation>,
    /// Full revision history per framework object; the last entry is current.
    framework: BTreeMap<FrameworkId, Vec<FrameworkObject>>,
    links: BTreeMap<LinkId, DependencyLink>,
    discrepancies: BTreeMap<DiscrepancyId, Discrepancy>,
    probes: BTreeMap<ProbeId, Probe>,
    sessions: BTreeMap<SessionId, Session>,
    event_count: u64,
}

fn next_key<K: Copy, V>(map: &BTreeMap<K, V>, raw: impl Fn(K) -> u32) -> u32 {
    map.keys().next_back().map_or(1, |&k| raw(k) + 1)
}

impl Basis {
    pub fn new() -> Basis {
        Basis::default()
    }

    /// Folds a verified log into a snapshot.
    pub fn replay(events: &[LedgerEvent]) -> Result<Basis> {
        if let ChainStatus::Broken { index } = verify_chain(events) {
            return Err(Error::ChainBroken(index));
        }
        let mut basis = Basis::new();
        for ev in events {
            basis.apply(ev)?;
        }
        Ok(basis)
    }

    /// Canonical serialization, used to compare snapshots byte for byte.
    pub fn canonical(&self) -> Vec<u8> {
        canonical_bytes(&serde_json::to_value(self).expect("basis serializes"))
    }

    /// Number of events folded so far; also the index the next event gets.
    pub fn event_count(&self) -> u64 {
        self.event_count
    }

    pub fn premise(&self, id: PremiseId) -> Result<&Premise> {
        self.premises.get(&id).ok_or(Error::UnknownPremise(id))
    }

    pub fn action(&self, id: ActionId) -> Result<&PendingAction> {
        self.actions.get(&id).ok_or(Error::UnknownAction(id))
    }

    pub fn evidence(&self, id: EvidenceId) -> Result<&EvidenceRecord> {
        self.evidence.get(&id).ok_or(Error::UnknownEvidence(id))
    }

    pub fn expectation(&self, id: ExpectationId) -> Result<&Expectation> {
        self.expectations.get(&id).ok_or(Error::UnknownObject(id.into()))
    }

    /// Current revision of a framework object.
    pub fn framework(&self, id: FrameworkId) -> Result<&FrameworkObject> {
        self.framework
            .get(&id)
            .and_then(|h| h.last())
            .ok_or(Error::UnknownObject(id.into()))
    }

    /// All revisions of a framework object, oldest first.
    pub fn framework_history(&self, id: FrameworkId) -> Result<&[FrameworkObject]> {
        self.framework.get(&id).map(Vec::as_slice).ok_or(Error::UnknownObject(id.into()))
    }

    pub fn discrepancy(&self, id: DiscrepancyId) -> Result<&Discrepancy> {
        self.discrepancies.get(&id).ok_or(Error::UnknownDiscrepancy(id))
    }

    pub fn probe(&self, id: ProbeId) -> Result<&Probe> {
        self.probes.get(&id).ok_or(Error::UnknownProbe(id))
    }

    pub fn session(&self, id: SessionId) -> Option<&Session> {
        self.sessions.get(&id)
    }

    pub fn premises(&self) -> impl DoubleEndedIterator<Item = &Premise> {
        self.premises.values()
    }

    pub fn actions(&self) -> impl DoubleEndedIterator<Item = &PendingAction> {
        self.actions.values()
    }

    pub fn pending_actions(&self) -> impl DoubleEndedIterator<Item = &PendingAction> {
        self.actions.values().filter(|a| a.status == ActionStatus::Pending)
    }

    pub fn evidence_records(&self) -> impl DoubleEndedIterator<Item = &EvidenceRecord> {
        self.evidence.values()
    }

    pub fn expectations(&self) -> impl DoubleEndedIterator<Item = &Expectation> {
        self.expectations.values()
    }

    pub fn framework_objects(&self) -> impl DoubleEndedIterator<Item = &FrameworkObject> {
        self.framework.values().filter_map(|h| h.last())
    }

    pub fn links(&self) -> impl DoubleEndedIterator<Item = &DependencyLink> {
        self.links.values()
    }

    pub fn discrepancies(&self) -> impl DoubleEndedIterator<Item = &Discrepancy> {
        self.discrepancies.values()
    }

    pub fn probes(&self) -> impl DoubleEndedIterator<Item = &Probe> {
        self.probes.values()
    }

    pub fn sessions(&self) -> impl DoubleEndedIterator<Item = &Session> {
        self.sessions.values()
    }

    /// Most recently opened session that is still open.
    pub fn latest_open_session(&self) -> Option<&Session> {
        self.sessions.values().rev().find(|s| s.open)
    }

    /// Whether `id` names an object in this basis.
    pub fn contains(&self, id: ObjectId) -> bool {
        match id {
            ObjectId::PremiseId(p) => self.premises.contains_key(&p),
            ObjectId::EvidenceId(e) => self.evidence.contains_key(&e),
            ObjectId::ActionId(a) => self.actions.contains_key(&a),
            ObjectId::ExpectationId(x) => self.expectations.contains_key(&x),
            ObjectId::FrameworkId(f) => self.framework.contains_key(&f),
            ObjectId::LinkId(l) => self.links.contains_key(&l),
            ObjectId::DiscrepancyId(d) => self.discrepancies.contains_key(&d),
            ObjectId::ProbeId(q) => self.probes.contains_key(&q),
            ObjectId::SessionId(s) => self.sessions.contains_key(&s),
        }
    }

    pub fn next_premise_id(&self) -> PremiseId {
        PremiseId(next_key(&self.premises, |k| k.0))
    }

    pub fn next_evidence_id(&self) -> EvidenceId {
        EvidenceId(next_key(&self.evidence, |k| k.0))
    }

    pub fn next_action_id(&self) -> ActionId {
        ActionId(next_key(&self.actions, |k| k.0))
    }

    pub fn next_expectation_id(&self) -> ExpectationId {
        ExpectationId(next_key(&self.expectations, |k| k.0))
    }

    pub fn next_framework_id(&self) -> FrameworkId {
        FrameworkId(next_key(&self.framework, |k| k.0))
    }

    pub fn next_link_id(&self) -> LinkId {
        LinkId(next_key(&self.links, |k| k.0))
    }

    pub fn next_discrepancy_id(&self) -> DiscrepancyId {
        DiscrepancyId(next_key(&self.discrepancies, |k| k.0))
    }

    pub fn next_probe_id(&self) -> ProbeId {
        ProbeId(next_key(&self.probes, |k| k.0))
    }

    pub fn next_session_id(&self) -> SessionId {
        SessionId(next_key(&self.sessions, |k| k.0))
    }

    /// Folds one sealed event into the snapshot.
    pub fn apply(&mut self, sealed: &LedgerEvent) -> Result<()> {
        let index = sealed.index;
        if index != self.event_count {
            return Err(inconsistent(index, format!("expected index {}", self.event_count)));
        }
        match &sealed.event {
            Event::SessionOpened { session, actor, role } => {
                self.sessions.insert(
                    *session,
                    Session { id: *session, actor: actor.clone(), role: *role, open: true },
                );
            }
            Event::SessionClosed { session } => {
                self.sessions
                    .get_mut(session)
                    .ok_or_else(|| inconsistent(index, format!("unknown session {session}")))?
                    .open = false;
            }
            Event::FrameworkRevised { object } => {
                self.framework.entry(object.id).or_default().push(object.clone());
            }
            Event::PremiseCreated { premise } => {
                self.premises.insert(premise.id, premise.clone());
            }
            Event::CredenceRevised { premise, credence } => {
                self.premise_mut(index, *premise)?.credence = *credence;
            }
            Event::ActionProposed { action } => {
                self.actions.insert(action.id, action.clone());
            }
            Event::ActionWithdrawn { action } => {
                self.action_mut(index, *action)?.status = ActionStatus::Withdrawn;
            }
            Event::ExpectationAdded { expectation } => {
                self.expectations.insert(expectation.id, expectation.clone());
            }
            Event::EvidenceAttached { record, premise } => {
                if let Some(p) = premise {
                    self.premise_mut(index, *p)?.evidence_ids.push(record.id);
                }
                self.evidence.insert(record.id, record.clone());
            }
            Event::TransitionApplied { premise, to, .. } => {
                self.premise_mut(index, *premise)?.status = *to;
            }
            Event::LinkAdded { link } => {
                self.links.insert(link.id, link.clone());
            }
            Event::DiscrepancyOpened { discrepancy } => {
                self.discrepancies.insert(discrepancy.id, discrepancy.clone());
            }
            Event::DiscrepancyLinked { discrepancy, violated_object, axis, impact } => {
                let d = self.discrepancy_mut(index, *discrepancy)?;
                d.violated_object = Some(*violated_object);
                d.axis = Some(*axis);
                d.impact = impact.clone();
                d.linkage = Linkage::Linked;
            }
            Event::DiscrepancyTyped { discrepancy, axis } => {
                self.discrepancy_mut(index, *discrepancy)?.axis = Some(*axis);
            }
            Event::DiscrepancyResolved { discrepancy, evidence } => {
                let d = self.discrepancy_mut(index, *discrepancy)?;
                d.status = DiscrepancyStatus::Resolved;
                d.resolution = Some(*evidence);
            }
            Event::ChallengeIssued { record, .. } => {
                self.evidence.insert(record.id, record.clone());
            }
            Event::ProbeProposed { probe } => {
                self.probes.insert(probe.id, probe.clone());
            }
            Event::ProbeResulted { probe, record, .. } => {
                let target = self
                    .probes
                    .get(probe)
                    .ok_or_else(|| inconsistent(index, format!("unknown probe {probe}")))?
                    .premise;
                self.premise_mut(index, target)?.evidence_ids.push(record.id);
                self.evidence.insert(record.id, record.clone());
            }
            Event::CommitGranted { action, .. } | Event::OverrideGranted { action, .. } => {
                self.action_mut(index, *action)?.status = ActionStatus::Committed;
            }
            Event::TransitionProposed { .. }
            | Event::TransitionRejected { .. }
            | Event::GateChecked { .. }
            | Event::SliceCompiled { .. }
            | Event::PolicyDecided { .. } => {}
        }
        self.event_count = index + 1;
        Ok(())
    }

    fn premise_mut(&mut self, index: u64, id: PremiseId) -> Result<&mut Premise> {
        self.premises.get_mut(&id).ok_or_else(|| inconsistent(index, format!("unknown premise {id}")))
    }

    fn action_mut(&mut self, index: u64, id: ActionId) -> Result<&mut PendingAction> {
        self.actions.get_mut(&id).ok_or_else(|| inconsistent(index, format!("unknown action {id}")))
    }

    fn discrepancy_mut(&mut self, index: u64, id: DiscrepancyId) -> Result<&mut Discrepancy> {
        self.discrepancies
            .get_mut(&id)
            .ok_or_else(|| inconsistent(index, format!("unknown discrepancy {id}")))
    }
}

fn inconsistent(index: u64, reason: String) -> Error {
    Error::InconsistentLog { index, reason }
}
