//! Budgeted decision slices: the bounded view of a pending commitment that
//! is put in front of the expert.

use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::discrepancy::{self, ProbeSpec, RepairOption};
use crate::engine::{Ctx, Engine};
use crate::error::{Error, Result};
use crate::graph;
use crate::ids::{ActionId, DiscrepancyId, EvidenceId, PremiseId};
use crate::ledger::Event;
use crate::model::{ActionStatus, Axis, PremiseStatus, Provenance, Stakes};
use crate::policy::{self, PolicyConfig};

pub const DEFAULT_MAX_ITEMS: usize = 7;
pub const MIN_MAX_ITEMS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceBudget {
    pub max_items: usize,
}

impl Default for SliceBudget {
    fn default() -> Self {
        SliceBudget { max_items: DEFAULT_MAX_ITEMS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlicePremise {
    pub premise: PremiseId,
    pub statement: String,
    pub axis: Axis,
    pub status: PremiseStatus,
    pub stakes: Stakes,
    pub credence: f64,
    pub sensitive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceEvidence {
    pub evidence: EvidenceId,
    pub payload: String,
    pub provenance: Provenance,
    pub discrepancies: Vec<DiscrepancyId>,
}

/// What the recommendation becomes if `flip_premise` is committed or
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Consequence {
    pub text: String,
    pub flip_premise: Option<PremiseId>,
    pub if_committed: Option<ActionId>,
    pub if_rejected: Option<ActionId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionSlice {
    pub action_id: ActionId,
    pub premises: Vec<SlicePremise>,
    pub discrepant_evidence: Vec<SliceEvidence>,
    pub consequence: Consequence,
    pub repair_options: Vec<RepairOption>,
    /// Committed load-bearing premises shown for context when the budget
    /// has room left.
    pub context: Vec<SlicePremise>,
    pub budget: SliceBudget,
    pub compiled_at: u64,
}

impl DecisionSlice {
    /// Items counted against the budget, including the consequence.
    pub fn item_count(&self) -> usize {
        self.premises.len() + self.discrepant_evidence.len() + self.repair_options.len() + self.context.len() + 1
    }
}

/// Ranking of a candidate premise: sensitive first, then higher credence
/// entropy, then lower id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankKey {
    pub premise: PremiseId,
    pub sensitive: bool,
    pub entropy: f64,
}

/// Entropies are compared at 1e-9 resolution so that mathematically equal
/// values (say for credences 0.3 and 0.7) tie and fall through to the id.
pub fn entropy_bucket(entropy: f64) -> i64 {
    (entropy * 1e9).round() as i64
}

pub fn rank_cmp(a: &RankKey, b: &RankKey) -> std::cmp::Ordering {
    b.sensitive
        .cmp(&a.sensitive)
        .then(entropy_bucket(b.entropy).cmp(&entropy_bucket(a.entropy)))
        .then(a.premise.cmp(&b.premise))
}

fn describe(basis: &Basis, action: Option<ActionId>) -> String {
    match action.and_then(|a| basis.action(a).ok()) {
        Some(a) => format!("{} ({})", a.id, a.description),
        None => "no action passes its gate".into(),
    }
}

/// The probe offered for investigating `premise`: the registered probe
/// with the highest value, or a generic one when none is registered.
pub fn best_probe(basis: &Basis, premise: PremiseId, config: &PolicyConfig) -> Result<ProbeSpec> {
    let candidates = policy::pending_candidates(basis);
    let mut best: Option<(f64, ProbeSpec)> = None;
    for q in basis.probes().filter(|q| q.premise == premise) {
        let spec = ProbeSpec::from(q);
        let value = policy::voi(basis, &spec, premise, &candidates, config)?.value;
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, spec));
        }
    }
    Ok(match best {
        Some((_, spec)) => spec,
        None => ProbeSpec {
            probe: None,
            description: format!("gather discriminating evidence on {premise}: {}", basis.premise(premise)?.statement),
            discrimination: 0.5,
            cost: 1.0,
        },
    })
}

fn slice_premise(basis: &Basis, premise: PremiseId, candidates: &[ActionId]) -> Result<SlicePremise> {
    let p = basis.premise(premise)?;
    Ok(SlicePremise {
        premise,
        statement: p.statement.clone(),
        axis: p.axis,
        status: p.status,
        stakes: p.stakes,
        credence: p.credence,
        sensitive: policy::sensitivity(basis, premise, candidates)?,
    })
}

/// Compiles the slice for a pending action. Pure; see
/// [`Engine::compile_slice`] for the logged variant.
pub fn compile(basis: &Basis, action: ActionId, budget: SliceBudget, config: &PolicyConfig) -> Result<DecisionSlice> {
    let a = basis.action(action)?;
    if a.status != ActionStatus::Pending {
        return Err(Error::ActionNotPending { action, status: a.status });
    }
    if budget.max_items < MIN_MAX_ITEMS {
        return Err(Error::BudgetTooSmall(budget.max_items));
    }
    let candidates = policy::pending_candidates(basis);
    let lb = graph::load_bearing(basis, action)?;

    let mut ranked = Vec::new();
    let mut committed = Vec::new();
    for l in &lb {
        let sp = slice_premise(basis, l.premise, &candidates)?;
        if l.status == PremiseStatus::Committed {
            committed.push(sp);
        } else {
            ranked.push(sp);
        }
    }
    ranked.sort_by(|x, y| {
        rank_cmp(
            &RankKey { premise: x.premise, sensitive: x.sensitive, entropy: policy::binary_entropy(x.credence) },
            &RankKey { premise: y.premise, sensitive: y.sensitive, entropy: policy::binary_entropy(y.credence) },
        )
    });

    let top = ranked.first().map(|p| p.premise);
    let consequence = match top {
        Some(p) => {
            let if_committed = policy::recommend(basis, &candidates, Some((p, PremiseStatus::Committed)))?;
            let if_rejected = policy::recommend(basis, &candidates, Some((p, PremiseStatus::Rejected)))?;
            Consequence {
                text: format!(
                    "if {p} is committed: {}; if {p} is rejected: {}",
                    describe(basis, if_committed),
                    describe(basis, if_rejected)
                ),
                flip_premise: Some(p),
                if_committed,
                if_rejected,
            }
        }
        None => {
            let rec = policy::recommend(basis, &candidates, None)?;
            Consequence { text: "gate passes".into(), flip_premise: None, if_committed: rec, if_rejected: rec }
        }
    };

    let repair_options = match &ranked.first() {
        None => vec![RepairOption::confirm_commit(action)],
        Some(top) => {
            let dominant = ranked
                .iter()
                .find_map(|p| discrepancy::open_on_premise(basis, p.premise).first().copied());
            let (axis, object) = match dominant {
                Some(d) => (
                    d.axis.ok_or(Error::UntypedDiscrepancy(d.id))?,
                    d.violated_object.ok_or(Error::UnlinkedDiscrepancy(d.id))?,
                ),
                None => (top.axis, top.premise.into()),
            };
            let primary = match discrepancy::route_axis(axis) {
                discrepancy::RepairKind::Investigate => {
                    let target = discrepancy::grounding_premise(basis, object).unwrap_or(top.premise);
                    RepairOption::investigate(target.into(), best_probe(basis, target, config)?)
                }
                discrepancy::RepairKind::Reframe => RepairOption::reframe(object),
                _ => RepairOption::negotiate(object),
            };
            let mut options = vec![primary];
            if top.stakes == Stakes::High {
                let alt = consequence.if_rejected.filter(|&alt| alt != action);
                options.push(match alt {
                    Some(alt) => RepairOption::conservative(
                        alt.into(),
                        format!("switch to {} under a logged risk note", describe(basis, Some(alt))),
                    ),
                    None => RepairOption::conservative(
                        action.into(),
                        format!("commit {action} over the gate under a logged risk note"),
                    ),
                });
            }
            options
        }
    };

    let mut slots = budget.max_items - 1 - repair_options.len();
    let mut premises = Vec::new();
    let mut evidence_ids: Vec<EvidenceId> = Vec::new();
    for p in &ranked {
        if slots == 0 {
            break;
        }
        premises.push(p.clone());
        slots -= 1;
        if let Some(d) = discrepancy::open_on_premise(basis, p.premise).first() {
            if slots > 0 && !evidence_ids.contains(&d.trigger) {
                evidence_ids.push(d.trigger);
                slots -= 1;
            }
        }
    }
    for p in &premises {
        for d in discrepancy::open_on_premise(basis, p.premise) {
            if slots > 0 && !evidence_ids.contains(&d.trigger) {
                evidence_ids.push(d.trigger);
                slots -= 1;
            }
        }
    }
    let context: Vec<SlicePremise> = committed.into_iter().take(slots).collect();

    evidence_ids.sort_by(|a, b| b.cmp(a));
    let discrepant_evidence = evidence_ids
        .into_iter()
        .map(|id| {
            let rec = basis.evidence(id)?;
            let mut discrepancies: Vec<DiscrepancyId> = premises
                .iter()
                .flat_map(|p| discrepancy::open_on_premise(basis, p.premise))
                .filter(|d| d.trigger == id)
                .map(|d| d.id)
                .collect();
            discrepancies.sort();
            discrepancies.dedup();
            Ok(SliceEvidence { evidence: id, payload: rec.payload.clone(), provenance: rec.provenance.clone(), discrepancies })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(DecisionSlice {
        action_id: action,
        premises,
        discrepant_evidence,
        consequence,
        repair_options,
        context,
        budget,
        compiled_at: basis.event_count(),
    })
}

impl Engine {
    pub fn compile_slice(
        &mut self,
        ctx: &Ctx,
        action: ActionId,
        budget: SliceBudget,
        config: &PolicyConfig,
    ) -> Result<DecisionSlice> {
        self.check_session(ctx)?;
        let slice = compile(self.basis(), action, budget, config)?;
        self.emit(ctx, Event::SliceCompiled { slice: slice.clone() })?;
        Ok(slice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrepancy::RepairKind;
    use crate::engine::StepClock;
    use crate::lifecycle::NewPremise;
    use crate::model::{LinkKind, Role};

    fn setup() -> (Engine, Ctx) {
        let mut engine = Engine::with_clock(Box::new(StepClock::new(0, 1)));
        let ctx = engine.open_session("dr-di", Role::Expert).unwrap();
        (engine, ctx)
    }

    fn premise(engine: &mut Engine, ctx: &Ctx, axis: Axis, stakes: Stakes) -> PremiseId {
        engine
            .create_premise(
                ctx,
                NewPremise { axis, statement: "p".into(), evidence_threshold: 0.0, stakes, predecessor: None },
            )
            .unwrap()
            .id
    }

    #[test]
    fn committed_basis_gives_gate_passes_slice() {
        let (mut engine, ctx) = setup();
        let p = premise(&mut engine, &ctx, Axis::Epistemic, Stakes::Low);
        let a = engine.propose_action(&ctx, "a".into(), 1.0, true).unwrap().id;
        engine.add_link(&ctx, p.into(), a.into(), LinkKind::Supports).unwrap();
        engine.propose_transition(&ctx, p, PremiseStatus::Committed).unwrap();
        let s = engine.compile_slice(&ctx, a, SliceBudget::default(), &PolicyConfig::default()).unwrap();
        assert!(s.premises.is_empty());
        assert_eq!(s.consequence.text, "gate passes");
        assert_eq!(s.repair_options.len(), 1);
        assert_eq!(s.repair_options[0].kind, RepairKind::ConfirmCommit);
        assert_eq!(s.context.len(), 1);
        assert_eq!(engine.events().last().unwrap().kind(), "SliceCompiled");
    }

    #[test]
    fn budget_bounds() {
        let (mut engine, ctx) = setup();
        let a = engine.propose_action(&ctx, "a".into(), 1.0, true).unwrap().id;
        for _ in 0..12 {
            let p = premise(&mut engine, &ctx, Axis::Procedural, Stakes::High);
            engine.add_link(&ctx, p.into(), a.into(), LinkKind::Supports).unwrap();
        }
        let err = compile(engine.basis(), a, SliceBudget { max_items: 3 }, &PolicyConfig::default()).unwrap_err();
        assert_eq!(err.code(), "budget-too-small");
        for max_items in 4..10 {
            let s = compile(engine.basis(), a, SliceBudget { max_items }, &PolicyConfig::default()).unwrap();
            assert!(s.item_count() <= max_items);
            assert!(!s.premises.is_empty());
            assert_eq!(s.repair_options[0].kind, RepairKind::Negotiate);
            assert_eq!(s.repair_options[1].kind, RepairKind::ConservativeAlternative);
        }
    }

    #[test]
    fn slice_is_deterministic() {
        let (mut engine, ctx) = setup();
        let a = engine.propose_action(&ctx, "a".into(), 1.0, true).unwrap().id;
        let p = premise(&mut engine, &ctx, Axis::Epistemic, Stakes::Low);
        engine.add_link(&ctx, p.into(), a.into(), LinkKind::Supports).unwrap();
        let one = compile(engine.basis(), a, SliceBudget::default(), &PolicyConfig::default()).unwrap();
        let two = compile(engine.basis(), a, SliceBudget::default(), &PolicyConfig::default()).unwrap();
        assert_eq!(serde_json::to_vec(&one).unwrap(), serde_json::to_vec(&two).unwrap());
        assert_eq!(one.repair_options.len(), 1);
        let probe = one.repair_options[0].probe.as_ref().unwrap();
        assert_eq!(probe.probe, None);
    }
}
