use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};
use sha2::{Digest as _, Sha256};

use crate::discrepancy::Discrepancy;
use crate::error::{Error, Result};
use crate::graph::{BlockingPremise, GateIntent, GateResult};
use crate::ids::{
    ActionId, DiscrepancyId, EvidenceId, FrameworkId, ObjectId, PremiseId, ProbeId, SessionId,
};
use crate::lifecycle::RejectReason;
use crate::model::{
    Axis, DependencyLink, EvidenceRecord, Expectation, FrameworkObject, PendingAction, Premise,
    PremiseStatus, Probe, Role,
};
use crate::policy::EpistemicDecision;
use crate::slice::DecisionSlice;

/// A SHA-256 digest, serialized as lowercase hex.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0; 32]);

    pub fn of(bytes: &[u8]) -> Digest {
        Digest(Sha256::digest(bytes).into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Digest> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s.trim(), &mut out)
            .map_err(|e| Error::BadRequest(format!("bad digest `{s}`: {e}")))?;
        Ok(Digest(out))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Digest {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Digest {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Digest::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Everything that can happen to a basis. State is the fold of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum Event {
    SessionOpened { session: SessionId, actor: String, role: Role },
    SessionClosed { session: SessionId },
    FrameworkRevised { object: FrameworkObject },
    PremiseCreated { premise: Premise },
    CredenceRevised { premise: PremiseId, credence: f64 },
    ActionProposed { action: PendingAction },
    ActionWithdrawn { action: ActionId },
    ExpectationAdded { expectation: Expectation },
    EvidenceAttached { record: EvidenceRecord, premise: Option<PremiseId> },
    TransitionProposed { premise: PremiseId, from: PremiseStatus, to: PremiseStatus },
    TransitionApplied {
        premise: PremiseId,
        from: PremiseStatus,
        to: PremiseStatus,
        score: f64,
        threshold: f64,
        evidence: Vec<EvidenceId>,
        discrepancy: Option<DiscrepancyId>,
    },
    TransitionRejected {
        premise: PremiseId,
        from: PremiseStatus,
        to: PremiseStatus,
        reason: RejectReason,
    },
    LinkAdded { link: DependencyLink },
    DiscrepancyOpened { discrepancy: Discrepancy },
    DiscrepancyLinked {
        discrepancy: DiscrepancyId,
        violated_object: ObjectId,
        axis: Axis,
        impact: Vec<ActionId>,
    },
    DiscrepancyTyped { discrepancy: DiscrepancyId, axis: Axis },
    DiscrepancyResolved { discrepancy: DiscrepancyId, evidence: EvidenceId },
    ChallengeIssued {
        premise: PremiseId,
        discrepancy: DiscrepancyId,
        record: EvidenceRecord,
        rationale: String,
    },
    ProbeProposed { probe: Probe },
    ProbeResulted { probe: ProbeId, passed: bool, record: EvidenceRecord },
    GateChecked { result: GateResult, intent: GateIntent },
    CommitGranted { action: ActionId, advisory_blocking: Vec<BlockingPremise> },
    OverrideGranted { action: ActionId, risk_note: String, blocking: Vec<BlockingPremise> },
    SliceCompiled { slice: DecisionSlice },
    PolicyDecided { decision: EpistemicDecision },
}

impl Event {
    /// All event kind names, in declaration order.
    pub const KINDS: &'static [&'static str] = &[
        "SessionOpened",
        "SessionClosed",
        "FrameworkRevised",
        "PremiseCreated",
        "CredenceRevised",
        "ActionProposed",
        "ActionWithdrawn",
        "ExpectationAdded",
        "EvidenceAttached",
        "TransitionProposed",
        "TransitionApplied",
        "TransitionRejected",
        "LinkAdded",
        "DiscrepancyOpened",
        "DiscrepancyLinked",
        "DiscrepancyTyped",
        "DiscrepancyResolved",
        "ChallengeIssued",
        "ProbeProposed",
        "ProbeResulted",
        "GateChecked",
        "CommitGranted",
        "OverrideGranted",
        "SliceCompiled",
        "PolicyDecided",
    ];

    pub fn kind(&self) -> &'static str {
        match self {
            Event::SessionOpened { .. } => "SessionOpened",
            Event::SessionClosed { .. } => "SessionClosed",
            Event::FrameworkRevised { .. } => "FrameworkRevised",
            Event::PremiseCreated { .. } => "PremiseCreated",
            Event::CredenceRevised { .. } => "CredenceRevised",
            Event::ActionProposed { .. } => "ActionProposed",
            Event::ActionWithdrawn { .. } => "ActionWithdrawn",
            Event::ExpectationAdded { .. } => "ExpectationAdded",
            Event::EvidenceAttached { .. } => "EvidenceAttached",
            Event::TransitionProposed { .. } => "TransitionProposed",
            Event::TransitionApplied { .. } => "TransitionApplied",
            Event::TransitionRejected { .. } => "TransitionRejected",
            Event::LinkAdded { .. } => "LinkAdded",
            Event::DiscrepancyOpened { .. } => "DiscrepancyOpened",
            Event::DiscrepancyLinked { .. } => "DiscrepancyLinked",
            Event::DiscrepancyTyped { .. } => "DiscrepancyTyped",
            Event::DiscrepancyResolved { .. } => "DiscrepancyResolved",
            Event::ChallengeIssued { .. } => "ChallengeIssued",
            Event::ProbeProposed { .. } => "ProbeProposed",
            Event::ProbeResulted { .. } => "ProbeResulted",
            Event::GateChecked { .. } => "GateChecked",
            Event::CommitGranted { .. } => "CommitGranted",
            Event::OverrideGranted { .. } => "OverrideGranted",
            Event::SliceCompiled { .. } => "SliceCompiled",
            Event::PolicyDecided { .. } => "PolicyDecided",
        }
    }

    /// Objects this event is about, used for provenance queries.
    pub fn touches(&self) -> Vec<ObjectId> {
        let mut out: Vec<ObjectId> = match self {
            Event::SessionOpened { session, .. } | Event::SessionClosed { session } => {
                vec![(*session).into()]
            }
            Event::FrameworkRevised { object } => vec![object.id.into()],
            Event::PremiseCreated { premise } => {
                let mut v = vec![premise.id.into()];
                v.extend(premise.created_from.map(ObjectId::from));
                v
            }
            Event::CredenceRevised { premise, .. } => vec![(*premise).into()],
            Event::ActionProposed { action } => vec![action.id.into()],
            Event::ActionWithdrawn { action } => vec![(*action).into()],
            Event::ExpectationAdded { expectation } => {
                vec![expectation.id.into(), expectation.premise_id.into()]
            }
            Event::EvidenceAttached { record, premise } => {
                let mut v = vec![record.id.into()];
                v.extend(premise.map(ObjectId::from));
                v
            }
            Event::TransitionProposed { premise, .. } | Event::TransitionRejected { premise, .. } => {
                vec![(*premise).into()]
            }
            Event::TransitionApplied { premise, evidence, discrepancy, .. } => {
                let mut v = vec![(*premise).into()];
                v.extend(evidence.iter().map(|&e| ObjectId::from(e)));
                v.extend(discrepancy.map(ObjectId::from));
                v
            }
            Event::LinkAdded { link } => vec![link.id.into(), link.from, link.to],
            Event::DiscrepancyOpened { discrepancy } => {
                let mut v = vec![discrepancy.id.into(), discrepancy.trigger.into()];
                v.extend(discrepancy.violated_object);
                v.extend(discrepancy.impact.iter().map(|&a| ObjectId::from(a)));
                v
            }
            Event::DiscrepancyLinked { discrepancy, violated_object, impact, .. } => {
                let mut v = vec![(*discrepancy).into(), *violated_object];
                v.extend(impact.iter().map(|&a| ObjectId::from(a)));
                v
            }
            Event::DiscrepancyTyped { discrepancy, .. } => vec![(*discrepancy).into()],
            Event::DiscrepancyResolved { discrepancy, evidence } => {
                vec![(*discrepancy).into(), (*evidence).into()]
            }
            Event::ChallengeIssued { premise, discrepancy, record, .. } => {
                vec![(*premise).into(), (*discrepancy).into(), record.id.into()]
            }
            Event::ProbeProposed { probe } => vec![probe.id.into(), probe.premise.into()],
            Event::ProbeResulted { probe, record, .. } => vec![(*probe).into(), record.id.into()],
            Event::GateChecked { result, .. } => {
                let mut v = vec![result.action.into()];
                v.extend(result.blocking_premises.iter().map(|b| ObjectId::from(b.premise)));
                v
            }
            Event::CommitGranted { action, advisory_blocking: blocking }
            | Event::OverrideGranted { action, blocking, .. } => {
                let mut v = vec![(*action).into()];
                v.extend(blocking.iter().map(|b| ObjectId::from(b.premise)));
                v
            }
            Event::SliceCompiled { slice } => {
                let mut v = vec![slice.action_id.into()];
                v.extend(slice.premises.iter().map(|p| ObjectId::from(p.premise)));
                v.extend(slice.discrepant_evidence.iter().map(|e| ObjectId::from(e.evidence)));
                v
            }
            Event::PolicyDecided { decision } => {
                let mut v = vec![decision.for_action.into()];
                v.extend(decision.justification.premises.iter().map(|&p| ObjectId::from(p)));
                v.extend(decision.justification.discrepancies.iter().map(|&d| ObjectId::from(d)));
                v
            }
        };
        out.sort();
        out.dedup();
        out
    }

    /// Framework id touched by a revision, if this is one.
    pub fn framework(&self) -> Option<FrameworkId> {
        match self {
            Event::FrameworkRevised { object } => Some(object.id),
            _ => None,
        }
    }

    fn to_parts(&self) -> (Value, Value) {
        let mut value = serde_json::to_value(self).expect("events always serialize");
        let map = value.as_object_mut().expect("adjacently tagged");
        let kind = map.remove("kind").unwrap_or(Value::Null);
        let payload = map.remove("payload").unwrap_or_else(|| json!({}));
        (kind, payload)
    }

    fn from_parts(kind: &str, payload: Value) -> Result<Event> {
        if !Event::KINDS.contains(&kind) {
            return Err(Error::UnknownEventKind(kind.to_string()));
        }
        serde_json::from_value(json!({ "kind": kind, "payload": payload }))
            .map_err(|e| Error::BadRequest(format!("malformed {kind} payload: {e}")))
    }
}

/// A sealed, hash-chained ledger entry.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEvent {
    pub index: u64,
    pub event: Event,
    pub actor: String,
    pub session: SessionId,
    pub timestamp: u64,
    pub prev_hash: Digest,
    pub hash: Digest,
}

/// Everything needed to seal an event.
#[derive(Debug, Clone, PartialEq)]
pub struct EventDraft {
    pub event: Event,
    pub actor: String,
    pub session: SessionId,
    pub timestamp: u64,
}

fn hashed_body(
    index: u64,
    event: &Event,
    actor: &str,
    session: SessionId,
    timestamp: u64,
    prev_hash: &Digest,
) -> Value {
    let (kind, payload) = event.to_parts();
    json!({
        "index": index,
        "kind": kind,
        "payload": payload,
        "actor": actor,
        "session": session,
        "timestamp": timestamp,
        "prev_hash": prev_hash.to_hex(),
    })
}

/// Canonical bytes: compact JSON with lexicographically sorted keys.
pub fn canonical_bytes(value: &Value) -> Vec<u8> {
    // serde_json's default map is a BTreeMap, so keys come out sorted.
    serde_json::to_vec(value).expect("json values always serialize")
}

impl LedgerEvent {
    pub fn seal(index: u64, prev_hash: Digest, draft: EventDraft) -> LedgerEvent {
        let body =
            hashed_body(index, &draft.event, &draft.actor, draft.session, draft.timestamp, &prev_hash);
        let hash = Digest::of(&canonical_bytes(&body));
        LedgerEvent {
            index,
            event: draft.event,
            actor: draft.actor,
            session: draft.session,
            timestamp: draft.timestamp,
            prev_hash,
            hash,
        }
    }

    /// Hash recomputed from content; equals `hash` for an untampered event.
    pub fn computed_hash(&self) -> Digest {
        let body = hashed_body(
            self.index,
            &self.event,
            &self.actor,
            self.session,
            self.timestamp,
            &self.prev_hash,
        );
        Digest::of(&canonical_bytes(&body))
    }

    pub fn kind(&self) -> &'static str {
        self.event.kind()
    }

    pub fn to_value(&self) -> Value {
        let mut body = hashed_body(
            self.index,
            &self.event,
            &self.actor,
            self.session,
            self.timestamp,
            &self.prev_hash,
        );
        body.as_object_mut()
            .expect("object")
            .insert("hash".into(), Value::String(self.hash.to_hex()));
        body
    }

    /// One `events.jsonl` line, without the trailing newline.
    pub fn to_line(&self) -> Vec<u8> {
        canonical_bytes(&self.to_value())
    }

    pub fn from_value(value: Value) -> Result<LedgerEvent> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            index: u64,
            kind: String,
            payload: Value,
            actor: String,
            session: SessionId,
            timestamp: u64,
            prev_hash: Digest,
            hash: Digest,
        }
        let raw: Raw = serde_json::from_value(value)
            .map_err(|e| Error::BadRequest(format!("malformed ledger event: {e}")))?;
        Ok(LedgerEvent {
            index: raw.index,
            event: Event::from_parts(&raw.kind, raw.payload)?,
            actor: raw.actor,
            session: raw.session,
            timestamp: raw.timestamp,
            prev_hash: raw.prev_hash,
            hash: raw.hash,
        })
    }

    pub fn from_line(line: &[u8]) -> Result<LedgerEvent> {
        let value: Value = serde_json::from_slice(line)
            .map_err(|e| Error::BadRequest(format!("malformed ledger line: {e}")))?;
        LedgerEvent::from_value(value)
    }
}

impl Serialize for LedgerEvent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_value().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LedgerEvent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        LedgerEvent::from_value(value).map_err(serde::de::Error::custom)
    }
}
