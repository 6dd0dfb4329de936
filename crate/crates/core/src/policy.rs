//! Value-gated epistemic control: which action the basis currently
//! recommends, which premises that recommendation is sensitive to, what a
//! probe is worth, and whether to probe, defer, escalate, or commit.

use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::discrepancy::{self, ProbeSpec, RepairOption};
use crate::engine::{Ctx, Engine};
use crate::error::{Error, Result};
use crate::graph::{self, GateIntent, StatusOverride};
use crate::ids::{ActionId, DiscrepancyId, PremiseId, ProbeId};
use crate::ledger::Event;
use crate::model::{kebab_enum, ActionStatus, Axis, PremiseStatus, Probe, Stakes};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    /// A probe is worth running only when its value exceeds this.
    pub probe_threshold: f64,
    /// Weight on probe cost (λ).
    pub cost_weight: f64,
    /// Contested load-bearing premises at which repair takes priority.
    pub contested_gate_k: u32,
    /// Most a single probe may cost.
    pub interaction_budget: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig { probe_threshold: 0.1, cost_weight: 1.0, contested_gate_k: 2, interaction_budget: 1.0 }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::BadConfig(reason));
        for (name, v) in [
            ("probe_threshold", self.probe_threshold),
            ("cost_weight", self.cost_weight),
            ("interaction_budget", self.interaction_budget),
        ] {
            if !v.is_finite() || v < 0.0 {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if self.contested_gate_k < 1 {
            return bad("contested_gate_k must be at least 1".into());
        }
        Ok(())
    }
}

/// Pending actions, in id order: the default candidate set.
pub fn pending_candidates(basis: &Basis) -> Vec<ActionId> {
    basis.pending_actions().map(|a| a.id).collect()
}

/// Highest-utility candidate whose gate is allowed; ties go to the lower id.
pub fn recommend(basis: &Basis, candidates: &[ActionId], cf: StatusOverride) -> Result<Option<ActionId>> {
    let mut best: Option<(f64, ActionId)> = None;
    for &id in candidates {
        let utility = basis.action(id)?.utility;
        if !graph::evaluate_gate(basis, id, GateIntent::Check, cf)?.is_allowed() {
            continue;
        }
        let better = match best {
            None => true,
            Some((u, b)) => utility > u || (utility == u && id < b),
        };
        if better {
            best = Some((utility, id));
        }
    }
    Ok(best.map(|(_, id)| id))
}

/// Whether the recommendation differs between `premise` forced committed
/// and forced rejected.
pub fn sensitivity(basis: &Basis, premise: PremiseId, candidates: &[ActionId]) -> Result<bool> {
    basis.premise(premise)?;
    let committed = recommend(basis, candidates, Some((premise, PremiseStatus::Committed)))?;
    let rejected = recommend(basis, candidates, Some((premise, PremiseStatus::Rejected)))?;
    Ok(committed != rejected)
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// The terms of a probe's value, kept for justification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoiScore {
    pub probe: Option<ProbeId>,
    pub premise: PremiseId,
    pub relevant: bool,
    pub sensitive: bool,
    pub entropy: f64,
    pub discrimination: f64,
    pub cost: f64,
    pub value: f64,
}

/// `R·S·H(credence)·discrimination − λ·cost`, with R and S as 0/1
/// indicators of relevance (load-bearing for some candidate) and
/// sensitivity.
pub fn voi(
    basis: &Basis,
    probe: &ProbeSpec,
    premise: PremiseId,
    candidates: &[ActionId],
    config: &PolicyConfig,
) -> Result<VoiScore> {
    discrepancy::check_probe(probe.discrimination, probe.cost)?;
    let p = basis.premise(premise)?;
    let mut relevant = false;
    for &a in candidates {
        if graph::load_bearing(basis, a)?.iter().any(|lb| lb.premise == premise) {
            relevant = true;
            break;
        }
    }
    let sensitive = sensitivity(basis, premise, candidates)?;
    let entropy = binary_entropy(p.credence);
    let gain = if relevant && sensitive { entropy * probe.discrimination } else { 0.0 };
    Ok(VoiScore {
        probe: probe.probe,
        premise,
        relevant,
        sensitive,
        entropy,
        discrimination: probe.discrimination,
        cost: probe.cost,
        value: gain - config.cost_weight * probe.cost,
    })
}

kebab_enum!(EpistemicAction { Probe => "probe", Defer => "defer", Escalate => "escalate", Commit => "commit" });

kebab_enum!(JustificationKind {
    HighStakesDiscrepancy => "high-stakes-discrepancy",
    GateAllowed => "gate-allowed",
    ContestedGate => "contested-gate",
    ProbeValue => "probe-value",
    LowValue => "low-value",
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Justification {
    pub kind: JustificationKind,
    pub premises: Vec<PremiseId>,
    pub discrepancies: Vec<DiscrepancyId>,
    pub voi: Vec<VoiScore>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpistemicDecision {
    pub for_action: ActionId,
    pub action: EpistemicAction,
    pub justification: Justification,
    pub chosen_probe: Option<RepairOption>,
}

/// Probes registered against a non-committed premise that bears on `action`.
pub fn default_probes(basis: &Basis, action: ActionId) -> Result<Vec<ProbeId>> {
    let blocking = graph::evaluate_gate(basis, action, GateIntent::Check, None)?.blocking_ids();
    Ok(basis.probes().filter(|q| blocking.contains(&q.premise)).map(|q| q.id).collect())
}

fn best_affordable<'a>(
    scores: &'a [VoiScore],
    config: &PolicyConfig,
    within: impl Fn(&VoiScore) -> bool,
) -> Option<&'a VoiScore> {
    scores
        .iter()
        .filter(|s| s.cost <= config.interaction_budget && s.value > config.probe_threshold && within(s))
        .fold(None, |best: Option<&VoiScore>, s| match best {
            Some(b) if b.value >= s.value => Some(b),
            _ => Some(s),
        })
}

/// Chooses an epistemic action for a pending action. Precedence:
///
/// 1. an open discrepancy on a high-stakes load-bearing premise escalates,
///    unless every such discrepancy is epistemic and an affordable probe on
///    one of those premises exists, in which case that probe is chosen;
/// 2. commit when the gate allows;
/// 3. with at least `contested_gate_k` contested load-bearing premises,
///    probe if affordable, else escalate;
/// 4. probe if affordable;
/// 5. defer.
pub fn decide(
    basis: &Basis,
    action: ActionId,
    probes: &[ProbeId],
    config: &PolicyConfig,
) -> Result<EpistemicDecision> {
    let a = basis.action(action)?;
    if a.status != ActionStatus::Pending {
        return Err(Error::ActionNotPending { action, status: a.status });
    }
    let candidates = pending_candidates(basis);
    let lb = graph::load_bearing(basis, action)?;
    let gate = graph::evaluate_gate(basis, action, GateIntent::Check, None)?;

    let probe_list: Vec<&Probe> = probes.iter().map(|&q| basis.probe(q)).collect::<Result<_>>()?;
    let scores: Vec<VoiScore> = probe_list
        .iter()
        .map(|q| voi(basis, &ProbeSpec::from(*q), q.premise, &candidates, config))
        .collect::<Result<_>>()?;
    let choose = |score: &VoiScore| -> Option<RepairOption> {
        let q = probe_list.iter().find(|q| Some(q.id) == score.probe)?;
        Some(RepairOption::investigate(q.premise.into(), ProbeSpec::from(*q)))
    };
    let decision = |kind, act, premises, discrepancies, chosen: Option<&VoiScore>, note: String| {
        EpistemicDecision {
            for_action: action,
            action: act,
            justification: Justification { kind, premises, discrepancies, voi: scores.clone(), note },
            chosen_probe: chosen.and_then(choose),
        }
    };

    let mut hs_premises = Vec::new();
    let mut hs_discrepancies = Vec::new();
    let mut all_epistemic = true;
    for l in &lb {
        if basis.premise(l.premise)?.stakes != Stakes::High {
            continue;
        }
        let open = discrepancy::open_on_premise(basis, l.premise);
        if open.is_empty() {
            continue;
        }
        hs_premises.push(l.premise);
        for d in open {
            all_epistemic &= d.axis == Some(Axis::Epistemic);
            hs_discrepancies.push(d.id);
        }
    }
    if !hs_premises.is_empty() {
        let probe = best_affordable(&scores, config, |s| hs_premises.contains(&s.premise));
        return Ok(match probe.filter(|_| all_epistemic) {
            Some(s) => decision(
                JustificationKind::HighStakesDiscrepancy,
                EpistemicAction::Probe,
                vec![s.premise],
                hs_discrepancies,
                Some(s),
                format!("epistemic discrepancy on contested load-bearing {}; probe value {:.3}", s.premise, s.value),
            ),
            None => decision(
                JustificationKind::HighStakesDiscrepancy,
                EpistemicAction::Escalate,
                hs_premises,
                hs_discrepancies,
                None,
                "high-stakes discrepancy requires expert adjudication".into(),
            ),
        });
    }

    if gate.is_allowed() {
        return Ok(decision(
            JustificationKind::GateAllowed,
            EpistemicAction::Commit,
            lb.iter().map(|l| l.premise).collect(),
            Vec::new(),
            None,
            "every load-bearing premise is committed".into(),
        ));
    }

    let contested: Vec<PremiseId> =
        lb.iter().filter(|l| l.status == PremiseStatus::Contested).map(|l| l.premise).collect();
    let best = best_affordable(&scores, config, |_| true);
    if contested.len() >= config.contested_gate_k as usize {
        return Ok(match best {
            Some(s) => decision(
                JustificationKind::ContestedGate,
                EpistemicAction::Probe,
                contested,
                Vec::new(),
                Some(s),
                format!("repair priority; probe on {} has value {:.3}", s.premise, s.value),
            ),
            None => decision(
                JustificationKind::ContestedGate,
                EpistemicAction::Escalate,
                contested,
                Vec::new(),
                None,
                "several load-bearing premises are contested and no probe is worth its cost".into(),
            ),
        });
    }
    if let Some(s) = best {
        return Ok(decision(
            JustificationKind::ProbeValue,
            EpistemicAction::Probe,
            vec![s.premise],
            Vec::new(),
            Some(s),
            format!("probe on {} has value {:.3}", s.premise, s.value),
        ));
    }
    Ok(decision(
        JustificationKind::LowValue,
        EpistemicAction::Defer,
        gate.blocking_ids(),
        Vec::new(),
        None,
        "VOI is low under current budget".into(),
    ))
}

impl Engine {
    /// Runs [`decide`] and logs the decision. `probes` defaults to
    /// [`default_probes`].
    pub fn decide(
        &mut self,
        ctx: &Ctx,
        action: ActionId,
        probes: Option<&[ProbeId]>,
        config: &PolicyConfig,
    ) -> Result<EpistemicDecision> {
        self.check_session(ctx)?;
        config.validate()?;
        let defaults;
        let probes = match probes {
            Some(p) => p,
            None => {
                defaults = default_probes(self.basis(), action)?;
                &defaults
            }
        };
        let decision = decide(self.basis(), action, probes, config)?;
        self.emit(ctx, Event::PolicyDecided { decision: decision.clone() })?;
        Ok(decision)
    }
}
