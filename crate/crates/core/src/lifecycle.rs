//! Premise lifecycle: creation, evidence, and evidence-gated transitions.
//!
//! Legal edges:
//!
//! ```text
//! draft     -> contested | committed | rejected
//! contested -> committed | rejected
//! committed -> contested   (only with an open linked discrepancy, or by an expert)
//! rejected  -> (none)
//! ```
//!
//! A commit additionally needs the evidence score to meet the premise's
//! threshold, no open discrepancy on the premise, and no violated
//! constraint upstream of it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::discrepancy::{self, Discrepancy};
use crate::engine::{Ctx, Engine};
use crate::error::{require_finite, require_unit, Error, Result};
use crate::graph;
use crate::ids::{DiscrepancyId, FrameworkId, ObjectId, PremiseId};
use crate::ledger::Event;
use crate::model::{
    Axis, Direction, EvidenceRecord, EvidenceSource, FrameworkKind, FrameworkObject, Premise,
    PremiseStatus, Provenance, Stakes,
};

/// Why a proposed transition was refused. Each reason names the object
/// that blocked it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "kebab-case")]
pub enum RejectReason {
    IllegalTransition { premise: PremiseId, from: PremiseStatus, to: PremiseStatus },
    EvidenceBelowThreshold { premise: PremiseId, score: f64, threshold: f64 },
    OpenDiscrepancy { premise: PremiseId, discrepancy: DiscrepancyId },
    ConstraintViolation { premise: PremiseId, constraint: FrameworkId, discrepancy: DiscrepancyId },
}

impl RejectReason {
    pub fn code(&self) -> &'static str {
        match self {
            RejectReason::IllegalTransition { .. } => "illegal-transition",
            RejectReason::EvidenceBelowThreshold { .. } => "evidence-below-threshold",
            RejectReason::OpenDiscrepancy { .. } => "open-discrepancy",
            RejectReason::ConstraintViolation { .. } => "constraint-violation",
        }
    }

    pub fn blocking_object(&self) -> ObjectId {
        match self {
            RejectReason::IllegalTransition { premise, .. }
            | RejectReason::EvidenceBelowThreshold { premise, .. } => (*premise).into(),
            RejectReason::OpenDiscrepancy { discrepancy, .. } => (*discrepancy).into(),
            RejectReason::ConstraintViolation { constraint, .. } => (*constraint).into(),
        }
    }
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::IllegalTransition { premise, from, to } => {
                write!(f, "{premise}: {from} -> {to} is not a legal transition")
            }
            RejectReason::EvidenceBelowThreshold { premise, score, threshold } => {
                write!(f, "{premise}: evidence score {score} below threshold {threshold}")
            }
            RejectReason::OpenDiscrepancy { premise, discrepancy } => {
                write!(f, "{premise}: discrepancy {discrepancy} is still open")
            }
            RejectReason::ConstraintViolation { premise, constraint, discrepancy } => {
                write!(f, "{premise}: constraint {constraint} is violated ({discrepancy})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum TransitionResult {
    Applied,
    Rejected { reason: RejectReason },
}

impl TransitionResult {
    pub fn is_applied(&self) -> bool {
        matches!(self, TransitionResult::Applied)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionOutcome {
    pub premise: PremiseId,
    pub result: TransitionResult,
    pub event_index: u64,
}

/// Whether `from -> to` is an edge of the lifecycle table, ignoring the
/// side conditions on commits and demotions.
pub fn is_legal_edge(from: PremiseStatus, to: PremiseStatus) -> bool {
    use PremiseStatus::*;
    matches!(
        (from, to),
        (Draft, Contested | Committed | Rejected)
            | (Contested, Committed | Rejected)
            | (Committed, Contested)
    )
}

/// Signed sum of a premise's evidence weights (supports minus refutes).
pub fn score_evidence(basis: &Basis, premise: PremiseId) -> Result<f64> {
    let p = basis.premise(premise)?;
    let weights = p
        .evidence_ids
        .iter()
        .map(|&id| basis.evidence(id).map(EvidenceRecord::signed_weight))
        .collect::<Result<Vec<_>>>()?;
    Ok(exact_sum(&weights))
}

/// Correctly rounded floating-point sum (Shewchuk's algorithm), so the
/// score does not depend on the order evidence arrived in.
pub(crate) fn exact_sum(values: &[f64]) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for &v in values {
        let mut x = v;
        let mut kept = 0;
        for i in 0..partials.len() {
            let mut y = partials[i];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }
    // Sum the non-overlapping partials from the top, with half-way
    // correction as in Python's math.fsum.
    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}

/// The first open framework constraint upstream of `premise` that a
/// discrepancy currently marks as violated.
pub fn violated_constraint(basis: &Basis, premise: PremiseId) -> Option<(FrameworkId, DiscrepancyId)> {
    graph::ancestors(basis, premise.into()).into_keys().find_map(|node| {
        let fid = node.as_framework()?;
        let fw = basis.framework(fid).ok()?;
        if fw.kind != FrameworkKind::Constraint {
            return None;
        }
        discrepancy::open_on_object(basis, node).first().map(|d| (fid, d.id))
    })
}

/// Checks a proposed transition against the current snapshot. `Ok(Ok(via))`
/// means it may be applied, where `via` is the discrepancy that justified a
/// demotion from committed.
pub fn check_transition(
    basis: &Basis,
    premise: PremiseId,
    to: PremiseStatus,
    ctx: &Ctx,
) -> Result<std::result::Result<Option<DiscrepancyId>, RejectReason>> {
    let p = basis.premise(premise)?;
    let from = p.status;
    let illegal = RejectReason::IllegalTransition { premise, from, to };
    if !is_legal_edge(from, to) {
        return Ok(Err(illegal));
    }
    match to {
        PremiseStatus::Contested if from == PremiseStatus::Committed => {
            let open = discrepancy::open_on_premise(basis, premise);
            match open.first() {
                Some(d) => Ok(Ok(Some(d.id))),
                None if ctx.is_expert() => Ok(Ok(None)),
                None => Ok(Err(illegal)),
            }
        }
        PremiseStatus::Committed => {
            let score = score_evidence(basis, premise)?;
            if score < p.evidence_threshold {
                return Ok(Err(RejectReason::EvidenceBelowThreshold {
                    premise,
                    score,
                    threshold: p.evidence_threshold,
                }));
            }
            if let Some(d) = discrepancy::open_on_premise(basis, premise).first() {
                return Ok(Err(RejectReason::OpenDiscrepancy { premise, discrepancy: d.id }));
            }
            if let Some((constraint, discrepancy)) = violated_constraint(basis, premise) {
                return Ok(Err(RejectReason::ConstraintViolation {
                    premise,
                    constraint,
                    discrepancy,
                }));
            }
            Ok(Ok(None))
        }
        _ => Ok(Ok(None)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewPremise {
    pub axis: Axis,
    pub statement: String,
    pub evidence_threshold: f64,
    pub stakes: Stakes,
    #[serde(default)]
    pub predecessor: Option<PremiseId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewEvidence {
    pub payload: String,
    pub direction: Direction,
    pub weight: f64,
    pub source: EvidenceSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttachOutcome {
    pub record: EvidenceRecord,
    /// Opened when refuting evidence lands on a committed premise.
    pub discrepancy: Option<Discrepancy>,
}

impl Engine {
    /// Creates a draft premise with credence 0.5.
    pub fn create_premise(&mut self, ctx: &Ctx, new: NewPremise) -> Result<Premise> {
        self.check_session(ctx)?;
        if new.statement.trim().is_empty() {
            return Err(Error::EmptyStatement);
        }
        require_finite("evidence_threshold", new.evidence_threshold)?;
        if new.evidence_threshold < 0.0 {
            return Err(Error::InvalidValue {
                field: "evidence_threshold",
                reason: format!("{} is negative", new.evidence_threshold),
            });
        }
        if let Some(pred) = new.predecessor {
            let status = self.basis().premise(pred)?.status;
            if status != PremiseStatus::Rejected {
                return Err(Error::PredecessorNotRejected { predecessor: pred, status });
            }
        }
        let premise = Premise {
            id: self.basis().next_premise_id(),
            axis: new.axis,
            statement: new.statement,
            status: PremiseStatus::Draft,
            credence: 0.5,
            evidence_threshold: new.evidence_threshold,
            evidence_ids: Vec::new(),
            stakes: new.stakes,
            created_from: new.predecessor,
        };
        self.emit(ctx, Event::PremiseCreated { premise: premise.clone() })?;
        Ok(premise)
    }

    /// Attaches an immutable evidence record to a premise. Refuting
    /// evidence on a committed premise opens a discrepancy, which demotes
    /// the premise to contested.
    pub fn attach_evidence(
        &mut self,
        ctx: &Ctx,
        premise: PremiseId,
        new: NewEvidence,
    ) -> Result<AttachOutcome> {
        self.check_session(ctx)?;
        require_unit("weight", new.weight)?;
        let status = self.basis().premise(premise)?.status;
        let record = self.new_record(ctx, new.payload, new.direction, new.weight, new.source);
        let ts = record.provenance.timestamp;
        self.emit_at(ctx, Event::EvidenceAttached { record: record.clone(), premise: Some(premise) }, ts)?;
        let discrepancy = if status == PremiseStatus::Committed && new.direction == Direction::Refutes {
            Some(self.open_linked_discrepancy(ctx, record.id, premise.into())?)
        } else {
            None
        };
        Ok(AttachOutcome { record, discrepancy })
    }

    pub(crate) fn new_record(
        &self,
        ctx: &Ctx,
        payload: String,
        direction: Direction,
        weight: f64,
        source: EvidenceSource,
    ) -> EvidenceRecord {
        EvidenceRecord {
            id: self.basis().next_evidence_id(),
            payload,
            direction,
            weight,
            source,
            provenance: Provenance {
                actor: ctx.actor.clone(),
                session: ctx.session,
                timestamp: self.now(),
            },
        }
    }

    /// Proposes a lifecycle transition. The proposal and its verdict are
    /// both logged; a refusal is a normal result, not an error.
    pub fn propose_transition(
        &mut self,
        ctx: &Ctx,
        premise: PremiseId,
        to: PremiseStatus,
    ) -> Result<TransitionOutcome> {
        self.check_session(ctx)?;
        let from = self.basis().premise(premise)?.status;
        self.emit(ctx, Event::TransitionProposed { premise, from, to })?;
        let verdict = check_transition(self.basis(), premise, to, ctx)?;
        let (result, event_index) = match verdict {
            Ok(via) => {
                let p = self.basis().premise(premise)?;
                let event = Event::TransitionApplied {
                    premise,
                    from,
                    to,
                    score: score_evidence(self.basis(), premise)?,
                    threshold: p.evidence_threshold,
                    evidence: p.evidence_ids.clone(),
                    discrepancy: via,
                };
                (TransitionResult::Applied, self.emit(ctx, event)?)
            }
            Err(reason) => {
                let event = Event::TransitionRejected { premise, from, to, reason: reason.clone() };
                (TransitionResult::Rejected { reason }, self.emit(ctx, event)?)
            }
        };
        Ok(TransitionOutcome { premise, result, event_index })
    }

    /// Explicitly revises a premise's credence. Credence is a policy input
    /// and is never derived from the evidence score.
    pub fn revise_credence(&mut self, ctx: &Ctx, premise: PremiseId, credence: f64) -> Result<u64> {
        self.check_session(ctx)?;
        require_unit("credence", credence)?;
        self.basis().premise(premise)?;
        self.emit(ctx, Event::CredenceRevised { premise, credence })
    }

    /// Creates (when `id` is `None`) or revises a framework object. Only
    /// the expert governs the framework.
    pub fn revise_framework(
        &mut self,
        ctx: &Ctx,
        id: Option<FrameworkId>,
        kind: FrameworkKind,
        statement: String,
        params: BTreeMap<String, f64>,
    ) -> Result<FrameworkObject> {
        self.check_session(ctx)?;
        Engine::require_expert(ctx)?;
        if statement.trim().is_empty() {
            return Err(Error::EmptyStatement);
        }
        for &v in params.values() {
            require_finite("framework parameter", v)?;
        }
        let (id, revision) = match id {
            Some(id) => {
                let current = self.basis().framework(id)?;
                if current.kind != kind {
                    return Err(Error::FrameworkKindChanged);
                }
                (id, current.revision + 1)
            }
            None => (self.basis().next_framework_id(), 1),
        };
        let object = FrameworkObject { id, kind, statement, params, revision };
        self.emit(ctx, Event::FrameworkRevised { object: object.clone() })?;
        Ok(object)
    }
}
