use thiserror::Error;

use crate::ids::{ActionId, DiscrepancyId, EvidenceId, ObjectId, PremiseId, ProbeId, SessionId};
use crate::model::{ActionStatus, PremiseStatus};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine can report. Each variant has a stable,
/// machine-readable code (see [`Error::code`]) that the gateway and CLI
/// surface verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed id `{0}`")]
    BadId(String),
    #[error("statement must not be empty")]
    EmptyStatement,
    #[error("invalid {field}: {reason}")]
    InvalidValue { field: &'static str, reason: String },
    #[error("predecessor {predecessor} is {status}, not rejected")]
    PredecessorNotRejected { predecessor: PremiseId, status: PremiseStatus },
    #[error("unknown premise {0}")]
    UnknownPremise(PremiseId),
    #[error("unknown action {0}")]
    UnknownAction(ActionId),
    #[error("unknown evidence {0}")]
    UnknownEvidence(EvidenceId),
    #[error("unknown discrepancy {0}")]
    UnknownDiscrepancy(DiscrepancyId),
    #[error("unknown probe {0}")]
    UnknownProbe(ProbeId),
    #[error("unknown object {0}")]
    UnknownObject(ObjectId),
    #[error("unknown link endpoint {0}")]
    UnknownEndpoint(ObjectId),
    #[error("a link may not run from {from} to {to}")]
    InvalidEndpoint { from: ObjectId, to: ObjectId },
    #[error("link {from} -> {to} already exists")]
    DuplicateLink { from: ObjectId, to: ObjectId },
    #[error("link {from} -> {to} would close a cycle")]
    CycleDetected { from: ObjectId, to: ObjectId },
    #[error("action {action} is {status}, not pending")]
    ActionNotPending { action: ActionId, status: ActionStatus },
    #[error("action {action} is blocked by uncommitted load-bearing premises; an expert override under logged risk is required")]
    OverrideRequired { action: ActionId, blocking: Vec<PremiseId> },
    #[error("override requires a non-empty risk note")]
    EmptyRiskNote,
    #[error("actor `{actor}` does not hold the expert role")]
    NonExpertActor { actor: String },
    #[error("gate already allows {0}; override refused")]
    GateAlreadyAllowed(ActionId),
    #[error("discrepancy {0} is unlinked; link it to a violated object first")]
    UnlinkedDiscrepancy(DiscrepancyId),
    #[error("discrepancy {0} has no axis yet")]
    UntypedDiscrepancy(DiscrepancyId),
    #[error("discrepancy {0} is already linked")]
    AlreadyLinked(DiscrepancyId),
    #[error("discrepancy {0} is already resolved")]
    AlreadyResolved(DiscrepancyId),
    #[error("probe discrimination {0} outside [0, 1]")]
    InvalidDiscrimination(f64),
    #[error("slice budget of {0} items is below the minimum of 4")]
    BudgetTooSmall(usize),
    #[error("framework object kind cannot change across revisions")]
    FrameworkKindChanged,
    #[error("no open session{}", .0.map(|s| format!(" {s}")).unwrap_or_default())]
    SessionNotOpen(Option<SessionId>),
    #[error("hash chain broken at index {0}")]
    ChainBroken(u64),
    #[error("inconsistent log at index {index}: {reason}")]
    InconsistentLog { index: u64, reason: String },
    #[error("unknown event kind `{0}`")]
    UnknownEventKind(String),
    #[error("log head does not match: {0}")]
    HeadMismatch(String),
    #[error("storage failure: {0}")]
    Storage(String),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("invalid policy `{0}`")]
    InvalidPolicy(String),
    #[error("an experiment needs at least one trial")]
    NoTrials,
    #[error("bad request: {0}")]
    BadRequest(String),
}

impl Error {
    /// Stable error code. Drawn from [`ERROR_CODES`].
    pub fn code(&self) -> &'static str {
        match self {
            Error::BadId(_) => "bad-id",
            Error::EmptyStatement => "empty-statement",
            Error::InvalidValue { .. } => "invalid-value",
            Error::PredecessorNotRejected { .. } => "predecessor-not-rejected",
            Error::UnknownPremise(_) => "unknown-premise",
            Error::UnknownAction(_) => "unknown-action",
            Error::UnknownEvidence(_) => "unknown-evidence",
            Error::UnknownDiscrepancy(_) => "unknown-discrepancy",
            Error::UnknownProbe(_) => "unknown-probe",
            Error::UnknownObject(_) => "unknown-object",
            Error::UnknownEndpoint(_) => "unknown-endpoint",
            Error::InvalidEndpoint { .. } => "invalid-endpoint",
            Error::DuplicateLink { .. } => "duplicate-link",
            Error::CycleDetected { .. } => "cycle-detected",
            Error::ActionNotPending { .. } => "action-not-pending",
            Error::OverrideRequired { .. } => "override-required",
            Error::EmptyRiskNote => "empty-risk-note",
            Error::NonExpertActor { .. } => "non-expert-actor",
            Error::GateAlreadyAllowed(_) => "gate-already-allowed",
            Error::UnlinkedDiscrepancy(_) => "unlinked-discrepancy",
            Error::UntypedDiscrepancy(_) => "untyped-discrepancy",
            Error::AlreadyLinked(_) => "already-linked",
            Error::AlreadyResolved(_) => "already-resolved",
            Error::InvalidDiscrimination(_) => "invalid-discrimination",
            Error::BudgetTooSmall(_) => "budget-too-small",
            Error::FrameworkKindChanged => "framework-kind-change",
            Error::SessionNotOpen(_) => "session-not-open",
            Error::ChainBroken(_) => "chain-broken",
            Error::InconsistentLog { .. } => "inconsistent-log",
            Error::UnknownEventKind(_) => "unknown-event-kind",
            Error::HeadMismatch(_) => "head-mismatch",
            Error::Storage(_) => "storage-failure",
            Error::BadConfig(_) => "bad-config",
            Error::InvalidPolicy(_) => "invalid-policy",
            Error::NoTrials => "no-trials",
            Error::BadRequest(_) => "bad-request",
        }
    }

    /// Objects that blocked the operation, when there are any.
    pub fn blocking_objects(&self) -> Vec<ObjectId> {
        match self {
            Error::PredecessorNotRejected { predecessor, .. } => vec![(*predecessor).into()],
            Error::OverrideRequired { blocking, .. } => {
                blocking.iter().map(|&p| p.into()).collect()
            }
            Error::CycleDetected { from, to } | Error::DuplicateLink { from, to } => {
                vec![*from, *to]
            }
            Error::UnknownEndpoint(id) | Error::UnknownObject(id) => vec![*id],
            Error::GateAlreadyAllowed(a) => vec![(*a).into()],
            Error::ActionNotPending { action, .. } => vec![(*action).into()],
            _ => Vec::new(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Storage(err.to_string())
    }
}

/// The published, closed set of error codes. Transition rejection reasons
/// share the same namespace.
pub const ERROR_CODES: &[&str] = &[
    "bad-id",
    "empty-statement",
    "invalid-value",
    "predecessor-not-rejected",
    "unknown-premise",
    "unknown-action",
    "unknown-evidence",
    "unknown-discrepancy",
    "unknown-probe",
    "unknown-object",
    "unknown-endpoint",
    "invalid-endpoint",
    "duplicate-link",
    "cycle-detected",
    "action-not-pending",
    "override-required",
    "empty-risk-note",
    "non-expert-actor",
    "gate-already-allowed",
    "unlinked-discrepancy",
    "untyped-discrepancy",
    "already-linked",
    "already-resolved",
    "invalid-discrimination",
    "budget-too-small",
    "framework-kind-change",
    "session-not-open",
    "chain-broken",
    "inconsistent-log",
    "unknown-event-kind",
    "head-mismatch",
    "storage-failure",
    "bad-config",
    "invalid-policy",
    "no-trials",
    "bad-request",
    "port-in-use",
    "illegal-transition",
    "evidence-below-threshold",
    "open-discrepancy",
    "constraint-violation",
];

pub(crate) fn require_finite(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidValue { field, reason: format!("{value} is not finite") })
    }
}

pub(crate) fn require_unit(field: &'static str, value: f64) -> Result<f64> {
    require_finite(field, value)?;
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::InvalidValue { field, reason: format!("{value} outside [0, 1]") })
    }
}
