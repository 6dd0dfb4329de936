//! Dependency links, load-bearing premises, and the commitment gate.
//!
//! Links run from premises, expectations, or framework objects into
//! premises, expectations, or actions. An action may only be committed
//! when every premise with a path into it is committed, unless the expert
//! overrides under a logged risk note.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::basis::Basis;
use crate::engine::{Ctx, Engine};
use crate::error::{require_finite, Error, Result};
use crate::ids::{ActionId, ObjectId, PremiseId};
use crate::ledger::Event;
use crate::model::{ActionStatus, DependencyLink, LinkKind, PendingAction, PremiseStatus};

/// Adjacency view of a basis's links, built on demand.
#[derive(Debug, Default)]
pub struct Graph {
    parents: BTreeMap<ObjectId, Vec<ObjectId>>,
    children: BTreeMap<ObjectId, Vec<ObjectId>>,
}

impl Graph {
    pub fn of(basis: &Basis) -> Graph {
        let mut g = Graph::default();
        for link in basis.links() {
            g.parents.entry(link.to).or_default().push(link.from);
            g.children.entry(link.from).or_default().push(link.to);
        }
        g
    }

    /// Every node with a path into `node`, with its shortest distance.
    pub fn ancestors(&self, node: ObjectId) -> BTreeMap<ObjectId, usize> {
        bfs(&self.parents, node)
    }

    /// Every node reachable from `node`, with its shortest distance.
    pub fn descendants(&self, node: ObjectId) -> BTreeMap<ObjectId, usize> {
        bfs(&self.children, node)
    }
}

fn bfs(adj: &BTreeMap<ObjectId, Vec<ObjectId>>, start: ObjectId) -> BTreeMap<ObjectId, usize> {
    let mut seen = BTreeMap::new();
    let mut queue = VecDeque::from([(start, 0usize)]);
    while let Some((node, dist)) = queue.pop_front() {
        for &next in adj.get(&node).into_iter().flatten() {
            if next != start && !seen.contains_key(&next) {
                seen.insert(next, dist + 1);
                queue.push_back((next, dist + 1));
            }
        }
    }
    seen
}

pub fn ancestors(basis: &Basis, node: ObjectId) -> BTreeMap<ObjectId, usize> {
    Graph::of(basis).ancestors(node)
}

pub fn descendants(basis: &Basis, node: ObjectId) -> BTreeMap<ObjectId, usize> {
    Graph::of(basis).descendants(node)
}

/// Pending actions downstream of `node`.
pub fn downstream_actions(basis: &Basis, node: ObjectId) -> Vec<ActionId> {
    descendants(basis, node)
        .into_keys()
        .filter_map(ObjectId::as_action)
        .filter(|&a| basis.action(a).is_ok_and(|a| a.status == ActionStatus::Pending))
        .collect()
}

fn valid_source(id: ObjectId) -> bool {
    matches!(id, ObjectId::PremiseId(_) | ObjectId::ExpectationId(_) | ObjectId::FrameworkId(_))
}

fn valid_target(id: ObjectId) -> bool {
    matches!(id, ObjectId::PremiseId(_) | ObjectId::ExpectationId(_) | ObjectId::ActionId(_))
}

/// Checks that `from -> to` may be added to the basis.
pub fn check_link(basis: &Basis, from: ObjectId, to: ObjectId) -> Result<()> {
    for id in [from, to] {
        if !basis.contains(id) {
            return Err(Error::UnknownEndpoint(id));
        }
    }
    if !valid_source(from) || !valid_target(to) {
        return Err(Error::InvalidEndpoint { from, to });
    }
    if basis.links().any(|l| l.from == from && l.to == to) {
        return Err(Error::DuplicateLink { from, to });
    }
    if from == to || descendants(basis, to).contains_key(&from) {
        return Err(Error::CycleDetected { from, to });
    }
    Ok(())
}

/// A premise on some path into an action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadBearing {
    pub premise: PremiseId,
    pub status: PremiseStatus,
    /// Length of the shortest path into the action.
    pub distance: usize,
}

/// A counterfactual status assignment, used for sensitivity analysis.
pub type StatusOverride = Option<(PremiseId, PremiseStatus)>;

fn status_of(basis: &Basis, premise: PremiseId, cf: StatusOverride) -> Result<PremiseStatus> {
    match cf {
        Some((p, s)) if p == premise => Ok(s),
        _ => Ok(basis.premise(premise)?.status),
    }
}

/// Premises with a directed path into `action`, ordered by (shortest path
/// length, id), each tagged with its status.
pub fn load_bearing(basis: &Basis, action: ActionId) -> Result<Vec<LoadBearing>> {
    load_bearing_with(basis, action, None)
}

fn load_bearing_with(basis: &Basis, action: ActionId, cf: StatusOverride) -> Result<Vec<LoadBearing>> {
    basis.action(action)?;
    let mut out = ancestors(basis, action.into())
        .into_iter()
        .filter_map(|(node, distance)| node.as_premise().map(|p| (p, distance)))
        .map(|(premise, distance)| {
            Ok(LoadBearing { premise, status: status_of(basis, premise, cf)?, distance })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by_key(|lb| (lb.distance, lb.premise));
    Ok(out)
}

crate::model::kebab_enum!(GateVerdict {
    Allowed => "allowed",
    Blocked => "blocked",
    OverrideRequired => "override-required",
});

crate::model::kebab_enum!(GateIntent { Check => "check", CommitNow => "commit-now" });

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockingPremise {
    pub premise: PremiseId,
    pub status: PremiseStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateResult {
    pub action: ActionId,
    pub verdict: GateVerdict,
    pub blocking_premises: Vec<BlockingPremise>,
    /// Index of the event at which the gate was evaluated.
    pub checked_at: u64,
}

impl GateResult {
    pub fn is_allowed(&self) -> bool {
        self.verdict == GateVerdict::Allowed
    }

    pub fn blocking_ids(&self) -> Vec<PremiseId> {
        self.blocking_premises.iter().map(|b| b.premise).collect()
    }
}

/// The gating rule: allowed iff every load-bearing premise is committed.
/// Pure; `cf` optionally forces one premise's status.
pub fn evaluate_gate(
    basis: &Basis,
    action: ActionId,
    intent: GateIntent,
    cf: StatusOverride,
) -> Result<GateResult> {
    let a = basis.action(action)?;
    let blocking_premises: Vec<BlockingPremise> = load_bearing_with(basis, action, cf)?
        .into_iter()
        .filter(|lb| lb.status != PremiseStatus::Committed)
        .map(|lb| BlockingPremise { premise: lb.premise, status: lb.status })
        .collect();
    let verdict = if blocking_premises.is_empty() {
        GateVerdict::Allowed
    } else if intent == GateIntent::CommitNow && a.consequential {
        GateVerdict::OverrideRequired
    } else {
        GateVerdict::Blocked
    };
    Ok(GateResult { action, verdict, blocking_premises, checked_at: basis.event_count() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitOutcome {
    pub action: ActionId,
    pub gate: GateResult,
    /// True when a non-consequential action was committed over a blocked
    /// gate; the blocking set is logged with the commit.
    pub advisory: bool,
    pub event_index: u64,
}

fn require_pending(basis: &Basis, action: ActionId) -> Result<&PendingAction> {
    let a = basis.action(action)?;
    if a.status != ActionStatus::Pending {
        return Err(Error::ActionNotPending { action, status: a.status });
    }
    Ok(a)
}

impl Engine {
    pub fn add_link(
        &mut self,
        ctx: &Ctx,
        from: ObjectId,
        to: ObjectId,
        kind: LinkKind,
    ) -> Result<DependencyLink> {
        self.check_session(ctx)?;
        check_link(self.basis(), from, to)?;
        let link = DependencyLink { id: self.basis().next_link_id(), from, to, kind };
        self.emit(ctx, Event::LinkAdded { link: link.clone() })?;
        Ok(link)
    }

    pub fn propose_action(
        &mut self,
        ctx: &Ctx,
        description: String,
        utility: f64,
        consequential: bool,
    ) -> Result<PendingAction> {
        self.check_session(ctx)?;
        if description.trim().is_empty() {
            return Err(Error::EmptyStatement);
        }
        require_finite("utility", utility)?;
        let action = PendingAction {
            id: self.basis().next_action_id(),
            description,
            utility,
            consequential,
            status: ActionStatus::Pending,
        };
        self.emit(ctx, Event::ActionProposed { action: action.clone() })?;
        Ok(action)
    }

    pub fn withdraw_action(&mut self, ctx: &Ctx, action: ActionId) -> Result<u64> {
        self.check_session(ctx)?;
        require_pending(self.basis(), action)?;
        self.emit(ctx, Event::ActionWithdrawn { action })
    }

    /// Evaluates and logs the gate for a pending action.
    pub fn gate(&mut self, ctx: &Ctx, action: ActionId, intent: GateIntent) -> Result<GateResult> {
        self.check_session(ctx)?;
        require_pending(self.basis(), action)?;
        let result = evaluate_gate(self.basis(), action, intent, None)?;
        self.emit(ctx, Event::GateChecked { result: result.clone(), intent })?;
        Ok(result)
    }

    /// Commits an action through the gate. A blocked consequential action
    /// is refused with `override-required`; a blocked non-consequential one
    /// is committed with the blocking set recorded as advisory.
    pub fn commit_action(&mut self, ctx: &Ctx, action: ActionId) -> Result<CommitOutcome> {
        let gate = self.gate(ctx, action, GateIntent::CommitNow)?;
        if gate.verdict == GateVerdict::OverrideRequired {
            return Err(Error::OverrideRequired { action, blocking: gate.blocking_ids() });
        }
        let advisory = !gate.is_allowed();
        let event_index = self.emit(
            ctx,
            Event::CommitGranted { action, advisory_blocking: gate.blocking_premises.clone() },
        )?;
        Ok(CommitOutcome { action, gate, advisory, event_index })
    }

    /// Expert-only commit over a closed gate. The risk note and the full
    /// blocking set are logged.
    pub fn override_commit(
        &mut self,
        ctx: &Ctx,
        action: ActionId,
        risk_note: &str,
    ) -> Result<CommitOutcome> {
        self.check_session(ctx)?;
        require_pending(self.basis(), action)?;
        Engine::require_expert(ctx)?;
        if risk_note.trim().is_empty() {
            return Err(Error::EmptyRiskNote);
        }
        if evaluate_gate(self.basis(), action, GateIntent::CommitNow, None)?.is_allowed() {
            return Err(Error::GateAlreadyAllowed(action));
        }
        let gate = self.gate(ctx, action, GateIntent::CommitNow)?;
        let event_index = self.emit(
            ctx,
            Event::OverrideGranted {
                action,
                risk_note: risk_note.to_string(),
                blocking: gate.blocking_premises.clone(),
            },
        )?;
        Ok(CommitOutcome { action, gate, advisory: false, event_index })
    }
}

/// Set of premise ids in a load-bearing list.
pub fn premise_set(lb: &[LoadBearing]) -> BTreeSet<PremiseId> {
    lb.iter().map(|l| l.premise).collect()
}
