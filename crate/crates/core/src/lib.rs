//! Governed decision bases.
//!
//! A basis holds typed premises with lifecycle status and evidence, the
//! dependency links between premises, expectations and pending actions,
//! and first-class discrepancies. Every change is an event in a
//! hash-chained ledger; the in-memory [`Basis`] is the fold of that log.
//!
//! ```
//! use basis_core::{Engine, GateIntent, LinkKind, NewPremise, Axis, Stakes, Role};
//!
//! let mut engine = Engine::in_memory();
//! let ctx = engine.open_session("dr-di", Role::Expert).unwrap();
//! let p = engine.create_premise(&ctx, NewPremise {
//!     axis: Axis::Epistemic,
//!     statement: "drill score implies transfer".into(),
//!     evidence_threshold: 1.0,
//!     stakes: Stakes::High,
//!     predecessor: None,
//! }).unwrap();
//! let a = engine.propose_action(&ctx, "advance to harder material".into(), 0.9, true).unwrap();
//! engine.add_link(&ctx, p.id.into(), a.id.into(), LinkKind::Supports).unwrap();
//! let gate = engine.gate(&ctx, a.id, GateIntent::Check).unwrap();
//! assert!(!gate.is_allowed());
//! ```

pub mod basis;
pub mod discrepancy;
pub mod engine;
pub mod error;
pub mod gateway;
pub mod graph;
pub mod harness;
pub mod ids;
pub mod ledger;
pub mod lifecycle;
pub mod model;
pub mod policy;
pub mod slice;

pub use basis::Basis;
pub use discrepancy::{
    Discrepancy, DiscrepancyStatus, Linkage, ObservationOutcome, ProbeSpec, RepairKind, RepairOption,
};
pub use engine::{Clock, Ctx, Engine, ProvenanceChain, StepClock, SystemClock};
pub use error::{Error, Result, ERROR_CODES};
pub use graph::{BlockingPremise, CommitOutcome, GateIntent, GateResult, GateVerdict, LoadBearing};
pub use ids::{
    ActionId, DiscrepancyId, EvidenceId, ExpectationId, FrameworkId, LinkId, ObjectId, PremiseId,
    ProbeId, SessionId,
};
pub use ledger::{ChainStatus, Digest, Event, Ledger, LedgerEvent};
pub use lifecycle::{NewEvidence, NewPremise, RejectReason, TransitionOutcome, TransitionResult};
pub use model::{
    ActionStatus, Axis, Direction, EvidenceRecord, EvidenceSource, Expectation, FrameworkKind,
    FrameworkObject, LinkKind, PendingAction, Predicate, Premise, PremiseStatus, Probe, Provenance,
    Role, Session, Stakes,
};
pub use policy::{EpistemicAction, EpistemicDecision, PolicyConfig, VoiScore};
pub use slice::{DecisionSlice, SliceBudget};
pub use gateway::{ApiError, AuthMode, Envelope, Gateway, GatewayConfig, Reply, Request, Response};
