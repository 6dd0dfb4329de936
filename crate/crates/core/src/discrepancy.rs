//! Discrepancies: first-class records of a mismatch between what the
//! committed basis expects and what was observed or asserted.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::basis::Basis;
use crate::engine::{Ctx, Engine};
use crate::error::{require_finite, require_unit, Error, Result};
use crate::graph;
use crate::ids::{ActionId, DiscrepancyId, EvidenceId, ObjectId, PremiseId, ProbeId};
use crate::ledger::Event;
use crate::lifecycle::TransitionOutcome;
use crate::model::{
    kebab_enum, Axis, Direction, EvidenceRecord, EvidenceSource, Expectation, Predicate, PremiseStatus,
    Probe,
};

kebab_enum!(DiscrepancyStatus { Open => "open", Resolved => "resolved" });
kebab_enum!(Linkage { Linked => "linked", Unlinked => "unlinked" });
kebab_enum!(
    /// Repair operators. `confirm-commit` is offered only when nothing
    /// blocks the action.
    RepairKind {
        Reframe => "reframe",
        Investigate => "investigate",
        Negotiate => "negotiate",
        ConservativeAlternative => "conservative-alternative",
        ConfirmCommit => "confirm-commit",
    }
);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub id: DiscrepancyId,
    pub trigger: EvidenceId,
    pub violated_object: Option<ObjectId>,
    /// `None` serializes as `"unknown"`.
    #[serde(with = "axis_or_unknown")]
    pub axis: Option<Axis>,
    pub impact: Vec<ActionId>,
    pub status: DiscrepancyStatus,
    pub linkage: Linkage,
    pub resolution: Option<EvidenceId>,
}

impl Discrepancy {
    pub fn is_open(&self) -> bool {
        self.status == DiscrepancyStatus::Open
    }

    pub fn is_linked(&self) -> bool {
        self.linkage == Linkage::Linked
    }
}

mod axis_or_unknown {
    use super::*;

    pub fn serialize<S: Serializer>(axis: &Option<Axis>, s: S) -> Result<S::Ok, S::Error> {
        match axis {
            Some(a) => a.serialize(s),
            None => s.serialize_str("unknown"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Axis>, D::Error> {
        let text = String::deserialize(d)?;
        if text == "unknown" {
            return Ok(None);
        }
        text.parse().map(Some).map_err(serde::de::Error::custom)
    }
}

/// A probe as offered in a repair option; `probe` is set when it refers to
/// a registered probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub probe: Option<ProbeId>,
    pub description: String,
    pub discrimination: f64,
    pub cost: f64,
}

impl From<&Probe> for ProbeSpec {
    fn from(p: &Probe) -> Self {
        ProbeSpec {
            probe: Some(p.id),
            description: p.description.clone(),
            discrimination: p.discrimination,
            cost: p.cost,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairOption {
    pub kind: RepairKind,
    pub target: ObjectId,
    pub description: String,
    pub probe: Option<ProbeSpec>,
    pub risk_note_required: bool,
}

impl RepairOption {
    pub fn reframe(target: ObjectId) -> RepairOption {
        RepairOption {
            kind: RepairKind::Reframe,
            target,
            description: format!("revise the goal, constraint, or priority behind {target}"),
            probe: None,
            risk_note_required: false,
        }
    }

    pub fn investigate(target: ObjectId, probe: ProbeSpec) -> RepairOption {
        RepairOption {
            kind: RepairKind::Investigate,
            target,
            description: format!("run a discriminating probe on {target}: {}", probe.description),
            probe: Some(probe),
            risk_note_required: false,
        }
    }

    pub fn negotiate(target: ObjectId) -> RepairOption {
        RepairOption {
            kind: RepairKind::Negotiate,
            target,
            description: format!("clarify the threshold, protocol, or role behind {target}"),
            probe: None,
            risk_note_required: false,
        }
    }

    /// Act on `target` anyway, or switch to it, under a logged risk note.
    pub fn conservative(target: ObjectId, description: String) -> RepairOption {
        RepairOption {
            kind: RepairKind::ConservativeAlternative,
            target,
            description,
            probe: None,
            risk_note_required: true,
        }
    }

    pub fn confirm_commit(action: ActionId) -> RepairOption {
        RepairOption {
            kind: RepairKind::ConfirmCommit,
            target: action.into(),
            description: format!("gate passes; confirm commit of {action}"),
            probe: None,
            risk_note_required: false,
        }
    }

    /// Invariants every option must satisfy.
    pub fn is_well_formed(&self) -> bool {
        match self.kind {
            RepairKind::Investigate => self.probe.is_some(),
            RepairKind::ConservativeAlternative => self.risk_note_required,
            _ => true,
        }
    }
}

/// The repair operator for each axis.
pub fn route_axis(axis: Axis) -> RepairKind {
    match axis {
        Axis::Teleological => RepairKind::Reframe,
        Axis::Epistemic => RepairKind::Investigate,
        Axis::Procedural => RepairKind::Negotiate,
    }
}

/// Routes a typed discrepancy to its repair operator.
pub fn route(basis: &Basis, id: DiscrepancyId) -> Result<RepairKind> {
    let d = basis.discrepancy(id)?;
    d.axis.map(route_axis).ok_or(Error::UntypedDiscrepancy(id))
}

/// Axis class of an object a discrepancy can violate. Expectations are
/// causal claims about observables and so are always epistemic.
pub fn axis_of(basis: &Basis, object: ObjectId) -> Result<Axis> {
    if !basis.contains(object) {
        return Err(Error::UnknownObject(object));
    }
    match object {
        ObjectId::PremiseId(p) => Ok(basis.premise(p)?.axis),
        ObjectId::ExpectationId(x) => basis.expectation(x).map(|_| Axis::Epistemic),
        ObjectId::FrameworkId(f) => Ok(basis.framework(f)?.axis()),
        other => Err(Error::InvalidValue {
            field: "violated_object",
            reason: format!("{other} is not a premise, expectation, or framework object"),
        }),
    }
}

/// The premise whose status answers for a violated object: the premise
/// itself, or the ground of an expectation.
pub fn grounding_premise(basis: &Basis, object: ObjectId) -> Option<PremiseId> {
    match object {
        ObjectId::PremiseId(p) => Some(p),
        ObjectId::ExpectationId(x) => basis.expectation(x).ok().map(|e| e.premise_id),
        _ => None,
    }
}

/// Pending actions downstream of the violated object (and, for an
/// expectation, of its grounding premise).
pub fn impact_of(basis: &Basis, object: ObjectId) -> Vec<ActionId> {
    let mut out = graph::downstream_actions(basis, object);
    if let (ObjectId::ExpectationId(_), Some(p)) = (object, grounding_premise(basis, object)) {
        out.extend(graph::downstream_actions(basis, p.into()));
    }
    out.sort();
    out.dedup();
    out
}

/// Open linked discrepancies whose violated object is exactly `object`,
/// most recent first.
pub fn open_on_object(basis: &Basis, object: ObjectId) -> Vec<&Discrepancy> {
    basis
        .discrepancies()
        .rev()
        .filter(|d| d.is_open() && d.violated_object == Some(object))
        .collect()
}

/// Open linked discrepancies bearing on a premise, directly or through one
/// of its expectations, most recent first.
pub fn open_on_premise(basis: &Basis, premise: PremiseId) -> Vec<&Discrepancy> {
    basis
        .discrepancies()
        .rev()
        .filter(|d| {
            d.is_open() && d.violated_object.and_then(|o| grounding_premise(basis, o)) == Some(premise)
        })
        .collect()
}

/// Expectations that take part in detection: those grounded in a
/// committed premise.
pub fn active_expectations<'a>(
    basis: &'a Basis,
    variable: &'a str,
) -> impl Iterator<Item = &'a Expectation> + 'a {
    basis.expectations().filter(move |x| {
        x.variable == variable
            && basis.premise(x.premise_id).is_ok_and(|p| p.status == PremiseStatus::Committed)
    })
}

/// Expectations an observation violates.
pub fn detect<'a>(basis: &'a Basis, variable: &'a str, value: f64) -> Vec<&'a Expectation> {
    active_expectations(basis, variable).filter(|x| !x.predicate.holds(value)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationOutcome {
    pub record: EvidenceRecord,
    pub discrepancies: Vec<Discrepancy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChallengeOutcome {
    pub record: EvidenceRecord,
    pub discrepancy: Discrepancy,
    pub transition: Option<TransitionOutcome>,
}

impl Engine {
    pub fn add_expectation(
        &mut self,
        ctx: &Ctx,
        premise: PremiseId,
        variable: String,
        predicate: Predicate,
    ) -> Result<Expectation> {
        self.check_session(ctx)?;
        self.basis().premise(premise)?;
        if variable.trim().is_empty() {
            return Err(Error::EmptyStatement);
        }
        predicate.validate()?;
        let expectation = Expectation {
            id: self.basis().next_expectation_id(),
            premise_id: premise,
            variable,
            predicate,
        };
        self.emit(ctx, Event::ExpectationAdded { expectation: expectation.clone() })?;
        Ok(expectation)
    }

    /// Records an observation and materializes a discrepancy for every
    /// active expectation it violates. An observation of a variable no
    /// active expectation covers yields one unlinked discrepancy, but only
    /// when the caller flags it anomalous.
    pub fn ingest_observation(
        &mut self,
        ctx: &Ctx,
        variable: &str,
        value: f64,
        anomalous: bool,
    ) -> Result<ObservationOutcome> {
        self.check_session(ctx)?;
        require_finite("observation", value)?;
        let violated: Vec<_> = detect(self.basis(), variable, value).iter().map(|x| x.id).collect();
        let covered = active_expectations(self.basis(), variable).next().is_some();
        let unlinked = !covered && anomalous;
        let direction =
            if violated.is_empty() && !unlinked { Direction::Supports } else { Direction::Refutes };
        let record = self.new_record(
            ctx,
            format!("{variable} = {value}"),
            direction,
            1.0,
            EvidenceSource::Observation,
        );
        let ts = record.provenance.timestamp;
        self.emit_at(ctx, Event::EvidenceAttached { record: record.clone(), premise: None }, ts)?;

        let mut discrepancies = Vec::new();
        for x in violated {
            discrepancies.push(self.open_linked_discrepancy(ctx, record.id, x.into())?);
        }
        if unlinked {
            let d = Discrepancy {
                id: self.basis().next_discrepancy_id(),
                trigger: record.id,
                violated_object: None,
                axis: None,
                impact: Vec::new(),
                status: DiscrepancyStatus::Open,
                linkage: Linkage::Unlinked,
                resolution: None,
            };
            self.emit(ctx, Event::DiscrepancyOpened { discrepancy: d.clone() })?;
            discrepancies.push(d);
        }
        Ok(ObservationOutcome { record, discrepancies })
    }

    /// Opens a linked discrepancy on `object` and contests the premise that
    /// answers for it.
    pub(crate) fn open_linked_discrepancy(
        &mut self,
        ctx: &Ctx,
        trigger: EvidenceId,
        object: ObjectId,
    ) -> Result<Discrepancy> {
        let d = Discrepancy {
            id: self.basis().next_discrepancy_id(),
            trigger,
            violated_object: Some(object),
            axis: Some(axis_of(self.basis(), object)?),
            impact: impact_of(self.basis(), object),
            status: DiscrepancyStatus::Open,
            linkage: Linkage::Linked,
            resolution: None,
        };
        self.emit(ctx, Event::DiscrepancyOpened { discrepancy: d.clone() })?;
        self.contest_grounding(ctx, object)?;
        Ok(d)
    }

    fn contest_grounding(&mut self, ctx: &Ctx, object: ObjectId) -> Result<Option<TransitionOutcome>> {
        let Some(p) = grounding_premise(self.basis(), object) else {
            return Ok(None);
        };
        match self.basis().premise(p)?.status {
            PremiseStatus::Draft | PremiseStatus::Committed => {
                self.propose_transition(ctx, p, PremiseStatus::Contested).map(Some)
            }
            _ => Ok(None),
        }
    }

    /// Expert negotiation step: binds an unlinked discrepancy to the object
    /// it violates. Axis and impact are derived from the basis.
    pub fn link_discrepancy(
        &mut self,
        ctx: &Ctx,
        id: DiscrepancyId,
        violated_object: ObjectId,
    ) -> Result<Discrepancy> {
        self.check_session(ctx)?;
        Engine::require_expert(ctx)?;
        let d = self.basis().discrepancy(id)?;
        if d.is_linked() {
            return Err(Error::AlreadyLinked(id));
        }
        if !d.is_open() {
            return Err(Error::AlreadyResolved(id));
        }
        let axis = axis_of(self.basis(), violated_object)?;
        let impact = impact_of(self.basis(), violated_object);
        self.emit(ctx, Event::DiscrepancyLinked { discrepancy: id, violated_object, axis, impact })?;
        self.contest_grounding(ctx, violated_object)?;
        Ok(self.basis().discrepancy(id)?.clone())
    }

    /// Re-derives and logs the axis of a linked discrepancy.
    pub fn type_discrepancy(&mut self, ctx: &Ctx, id: DiscrepancyId) -> Result<Axis> {
        self.check_session(ctx)?;
        let d = self.basis().discrepancy(id)?;
        let object = d.violated_object.ok_or(Error::UnlinkedDiscrepancy(id))?;
        let axis = axis_of(self.basis(), object)?;
        self.emit(ctx, Event::DiscrepancyTyped { discrepancy: id, axis })?;
        Ok(axis)
    }

    /// Closes a discrepancy against the evidence that repaired it. Premise
    /// statuses are left alone; commits stay explicit transitions.
    pub fn resolve_discrepancy(
        &mut self,
        ctx: &Ctx,
        id: DiscrepancyId,
        evidence: EvidenceId,
    ) -> Result<Discrepancy> {
        self.check_session(ctx)?;
        if !self.basis().discrepancy(id)?.is_open() {
            return Err(Error::AlreadyResolved(id));
        }
        self.basis().evidence(evidence)?;
        self.emit(ctx, Event::DiscrepancyResolved { discrepancy: id, evidence })?;
        Ok(self.basis().discrepancy(id)?.clone())
    }

    /// Challenges a premise: logs the challenge as an expert-assertion
    /// record (not counted towards the premise's score), opens a
    /// discrepancy naming the premise, and contests it.
    pub fn challenge(&mut self, ctx: &Ctx, premise: PremiseId, rationale: &str) -> Result<ChallengeOutcome> {
        self.check_session(ctx)?;
        self.basis().premise(premise)?;
        if rationale.trim().is_empty() {
            return Err(Error::EmptyStatement);
        }
        let record = self.new_record(
            ctx,
            rationale.to_string(),
            Direction::Refutes,
            0.0,
            EvidenceSource::ExpertAssertion,
        );
        let discrepancy = Discrepancy {
            id: self.basis().next_discrepancy_id(),
            trigger: record.id,
            violated_object: Some(premise.into()),
            axis: Some(axis_of(self.basis(), premise.into())?),
            impact: impact_of(self.basis(), premise.into()),
            status: DiscrepancyStatus::Open,
            linkage: Linkage::Linked,
            resolution: None,
        };
        let ts = record.provenance.timestamp;
        self.emit_at(
            ctx,
            Event::ChallengeIssued {
                premise,
                discrepancy: discrepancy.id,
                record: record.clone(),
                rationale: rationale.to_string(),
            },
            ts,
        )?;
        self.emit(ctx, Event::DiscrepancyOpened { discrepancy: discrepancy.clone() })?;
        let transition = self.contest_grounding(ctx, premise.into())?;
        Ok(ChallengeOutcome { record, discrepancy, transition })
    }

    pub fn register_probe(
        &mut self,
        ctx: &Ctx,
        premise: PremiseId,
        description: String,
        discrimination: f64,
        cost: f64,
    ) -> Result<Probe> {
        self.check_session(ctx)?;
        self.basis().premise(premise)?;
        if description.trim().is_empty() {
            return Err(Error::EmptyStatement);
        }
        check_probe(discrimination, cost)?;
        let probe = Probe { id: self.basis().next_probe_id(), premise, description, discrimination, cost };
        self.emit(ctx, Event::ProbeProposed { probe: probe.clone() })?;
        Ok(probe)
    }

    /// Records a probe outcome as evidence on the probed premise: supporting
    /// when it passed, refuting when it failed.
    pub fn record_probe_result(
        &mut self,
        ctx: &Ctx,
        probe: ProbeId,
        passed: bool,
        weight: f64,
    ) -> Result<EvidenceRecord> {
        self.check_session(ctx)?;
        require_unit("weight", weight)?;
        let p = self.basis().probe(probe)?.clone();
        let record = self.new_record(
            ctx,
            format!("{}: {}", p.description, if passed { "passed" } else { "failed" }),
            if passed { Direction::Supports } else { Direction::Refutes },
            weight,
            EvidenceSource::ProbeResult,
        );
        let ts = record.provenance.timestamp;
        self.emit_at(ctx, Event::ProbeResulted { probe, passed, record: record.clone() }, ts)?;
        Ok(record)
    }
}

pub(crate) fn check_probe(discrimination: f64, cost: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&discrimination) {
        return Err(Error::InvalidDiscrimination(discrimination));
    }
    require_finite("cost", cost)?;
    if cost < 0.0 {
        return Err(Error::InvalidValue { field: "cost", reason: format!("{cost} is negative") });
    }
    Ok(())
}
