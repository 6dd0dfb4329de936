//! Shared fixtures: brute-force oracles, random bases and a gateway fuzzer.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use basis_core::ledger::write_log;
use basis_core::{
    ActionId, Axis, Basis, Direction, Engine, Envelope, Event, EvidenceSource, FrameworkKind, Gateway,
    GatewayConfig, GateIntent, LedgerEvent, LinkKind, ObjectId, Predicate, PremiseId, PremiseStatus,
    Request, Role, Stakes, StepClock,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- oracles

/// Edges as plain pairs.
fn edges(basis: &Basis) -> Vec<(ObjectId, ObjectId)> {
    basis.links().map(|l| (l.from, l.to)).collect()
}

/// Every simple path from `from` to `to`, by exhaustive depth-first search.
pub fn all_simple_paths(basis: &Basis, from: ObjectId, to: ObjectId) -> Vec<Vec<ObjectId>> {
    fn walk(
        edges: &[(ObjectId, ObjectId)],
        at: ObjectId,
        to: ObjectId,
        path: &mut Vec<ObjectId>,
        out: &mut Vec<Vec<ObjectId>>,
    ) {
        if at == to {
            out.push(path.clone());
            return;
        }
        for &(a, b) in edges {
            if a == at && !path.contains(&b) {
                path.push(b);
                walk(edges, b, to, path, out);
                path.pop();
            }
        }
    }
    let e = edges(basis);
    let mut out = Vec::new();
    walk(&e, from, to, &mut vec![from], &mut out);
    out
}

/// Premises with a path into the action, with the shortest path length.
pub fn oracle_load_bearing(basis: &Basis, action: ActionId) -> Vec<(PremiseId, usize)> {
    let mut out: Vec<(PremiseId, usize)> = basis
        .premises()
        .filter_map(|p| {
            all_simple_paths(basis, p.id.into(), action.into())
                .iter()
                .map(|path| path.len() - 1)
                .min()
                .map(|d| (p.id, d))
        })
        .collect();
    out.sort_by_key(|&(p, d)| (d, p));
    out
}

fn forced_status(basis: &Basis, p: PremiseId, force: Option<(PremiseId, PremiseStatus)>) -> PremiseStatus {
    match force {
        Some((q, s)) if q == p => s,
        _ => basis.premise(p).unwrap().status,
    }
}

/// Literal gating rule: the non-committed premises among the load-bearing.
pub fn oracle_blocking(
    basis: &Basis,
    action: ActionId,
    force: Option<(PremiseId, PremiseStatus)>,
) -> Vec<PremiseId> {
    oracle_load_bearing(basis, action)
        .into_iter()
        .map(|(p, _)| p)
        .filter(|&p| forced_status(basis, p, force) != PremiseStatus::Committed)
        .collect()
}

pub fn oracle_recommend(
    basis: &Basis,
    candidates: &[ActionId],
    force: Option<(PremiseId, PremiseStatus)>,
) -> Option<ActionId> {
    let mut allowed: Vec<(f64, ActionId)> = candidates
        .iter()
        .filter(|&&a| oracle_blocking(basis, a, force).is_empty())
        .map(|&a| (basis.action(a).unwrap().utility, a))
        .collect();
    // highest utility first, then lowest id
    allowed.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then(x.1.cmp(&y.1)));
    allowed.first().map(|&(_, a)| a)
}

pub fn oracle_sensitivity(basis: &Basis, premise: PremiseId, candidates: &[ActionId]) -> bool {
    oracle_recommend(basis, candidates, Some((premise, PremiseStatus::Committed)))
        != oracle_recommend(basis, candidates, Some((premise, PremiseStatus::Rejected)))
}

fn predicate_fails(p: &Predicate, v: f64) -> bool {
    match *p {
        Predicate::Equals { value } => v != value,
        Predicate::InRange { low, high } => v < low || v > high,
        Predicate::AtLeast { value } => v < value,
        Predicate::AtMost { value } => v > value,
    }
}

/// Expectations an observation violates: same variable, grounded in a
/// committed premise, predicate false.
pub fn oracle_detect(basis: &Basis, variable: &str, value: f64) -> BTreeSet<basis_core::ExpectationId> {
    basis
        .expectations()
        .filter(|x| x.variable == variable)
        .filter(|x| basis.premise(x.premise_id).unwrap().status == PremiseStatus::Committed)
        .filter(|x| predicate_fails(&x.predicate, value))
        .map(|x| x.id)
        .collect()
}

pub fn oracle_entropy(p: f64) -> f64 {
    if p == 0.0 || p == 1.0 {
        0.0
    } else {
        -p * p.ln() / std::f64::consts::LN_2 - (1.0 - p) * (1.0 - p).ln() / std::f64::consts::LN_2
    }
}

// ---------------------------------------------------------- random bases

pub const VARIABLES: [&str; 3] = ["x", "y", "z"];

pub fn random_predicate(rng: &mut ChaCha8Rng) -> Predicate {
    let v = (rng.random_range(0..=10) as f64) / 10.0;
    match rng.random_range(0..4) {
        0 => Predicate::Equals { value: v },
        1 => {
            let w = (rng.random_range(0..=10) as f64) / 10.0;
            Predicate::InRange { low: v.min(w), high: v.max(w) }
        }
        2 => Predicate::AtLeast { value: v },
        _ => Predicate::AtMost { value: v },
    }
}

fn random_status(rng: &mut ChaCha8Rng) -> PremiseStatus {
    [PremiseStatus::Draft, PremiseStatus::Contested, PremiseStatus::Committed, PremiseStatus::Rejected]
        [rng.random_range(0..4)]
}

/// A random basis of at most `max_nodes` premises, expectations and actions
/// with random acyclic links and statuses, built through the engine API.
pub fn random_basis(seed: u64, max_nodes: usize) -> Engine {
    let mut rng = rng(seed);
    let mut engine = Engine::with_clock(Box::new(StepClock::new(0, 1)));
    let ctx = engine.open_session("oracle", Role::Expert).unwrap();
    let n = rng.random_range(2..=max_nodes);
    let mut premises = Vec::new();
    let mut nodes: Vec<ObjectId> = Vec::new();
    let mut actions = Vec::new();
    for _ in 0..n {
        let kind = rng.random_range(0..10);
        if kind < 5 || premises.is_empty() {
            let p = engine
                .create_premise(
                    &ctx,
                    basis_core::NewPremise {
                        axis: Axis::Epistemic,
                        statement: format!("p{}", premises.len()),
                        evidence_threshold: 0.0,
                        stakes: if rng.random_bool(0.5) { Stakes::High } else { Stakes::Low },
                        predecessor: None,
                    },
                )
                .unwrap();
            premises.push(p.id);
            nodes.push(p.id.into());
        } else if kind < 7 {
            let p = premises[rng.random_range(0..premises.len())];
            let var = VARIABLES[rng.random_range(0..VARIABLES.len())];
            let x = engine.add_expectation(&ctx, p, var.into(), random_predicate(&mut rng)).unwrap();
            nodes.push(x.id.into());
        } else {
            // utilities on a coarse grid so ties happen
            let u = rng.random_range(0..4) as f64 / 4.0;
            let a = engine.propose_action(&ctx, format!("a{}", actions.len()), u, rng.random_bool(0.7)).unwrap();
            actions.push(a.id);
            nodes.push(a.id.into());
        }
    }
    if actions.is_empty() {
        let a = engine.propose_action(&ctx, "a0".into(), 0.5, true).unwrap();
        actions.push(a.id);
        nodes.push(a.id.into());
    }
    let tries = rng.random_range(0..=2 * nodes.len());
    for _ in 0..tries {
        let from = nodes[rng.random_range(0..nodes.len())];
        let to = nodes[rng.random_range(0..nodes.len())];
        // invalid, duplicate and cyclic links are refused; that is fine
        let _ = engine.add_link(&ctx, from, to, LinkKind::Supports);
    }
    for &p in &premises {
        let target = random_status(&mut rng);
        let path: &[PremiseStatus] = match target {
            PremiseStatus::Draft => &[],
            PremiseStatus::Contested => &[PremiseStatus::Contested],
            PremiseStatus::Committed => &[PremiseStatus::Committed],
            PremiseStatus::Rejected => &[PremiseStatus::Rejected],
        };
        for &to in path {
            let out = engine.propose_transition(&ctx, p, to).unwrap();
            assert!(out.result.is_applied(), "{out:?}");
        }
        engine.revise_credence(&ctx, p, rng.random_range(0..=10) as f64 / 10.0).unwrap();
    }
    engine
}

// -------------------------------------------------------------- fuzzing

fn pick<T: Copy>(rng: &mut ChaCha8Rng, make: impl Fn(u32) -> T, next: u32) -> T {
    // occasionally out of range, to exercise error paths
    make(rng.random_range(1..=next.max(1) + 1))
}

fn random_object(rng: &mut ChaCha8Rng, b: &Basis) -> ObjectId {
    match rng.random_range(0..5) {
        0 | 1 => pick(rng, basis_core::PremiseId, b.next_premise_id().0).into(),
        2 => pick(rng, basis_core::ExpectationId, b.next_expectation_id().0).into(),
        3 => pick(rng, basis_core::ActionId, b.next_action_id().0).into(),
        _ => pick(rng, basis_core::FrameworkId, b.next_framework_id().0).into(),
    }
}

fn status(rng: &mut ChaCha8Rng) -> PremiseStatus {
    random_status(rng)
}

/// A random request against the current basis.
pub fn random_request(rng: &mut ChaCha8Rng, b: &Basis) -> Request {
    let p = pick(rng, basis_core::PremiseId, b.next_premise_id().0);
    let a = pick(rng, basis_core::ActionId, b.next_action_id().0);
    let d = pick(rng, basis_core::DiscrepancyId, b.next_discrepancy_id().0);
    let q = pick(rng, basis_core::ProbeId, b.next_probe_id().0);
    let e = pick(rng, basis_core::EvidenceId, b.next_evidence_id().0);
    let unit = |rng: &mut ChaCha8Rng| rng.random_range(0..=10) as f64 / 10.0;
    let var = VARIABLES[rng.random_range(0..VARIABLES.len())].to_string();
    match rng.random_range(0..30) {
        0..=3 => Request::CreatePremise {
            axis: [Axis::Teleological, Axis::Epistemic, Axis::Procedural][rng.random_range(0..3)],
            statement: format!("claim {}", rng.random_range(0..100)),
            evidence_threshold: rng.random_range(0..3) as f64 * 0.5,
            stakes: if rng.random_bool(0.5) { Stakes::High } else { Stakes::Low },
            predecessor: None,
        },
        4 | 5 => Request::AttachEvidence {
            premise: p,
            payload: "note".into(),
            direction: if rng.random_bool(0.7) { Direction::Supports } else { Direction::Refutes },
            weight: unit(rng),
            source: EvidenceSource::Observation,
        },
        6..=8 => Request::ProposeTransition { premise: p, to: status(rng) },
        9 | 10 => Request::ProposeAction {
            description: "act".into(),
            utility: unit(rng),
            consequential: rng.random_bool(0.7),
        },
        11..=13 if rng.random_bool(0.6) => Request::AddLink { from: p.into(), to: a.into(), kind: LinkKind::Supports },
        11..=13 => Request::AddLink { from: random_object(rng, b), to: random_object(rng, b), kind: LinkKind::Supports },
        14 => Request::AddExpectation { premise: p, variable: var, predicate: random_predicate(rng) },
        15 => Request::Gate { action: a, intent: if rng.random_bool(0.5) { GateIntent::Check } else { GateIntent::CommitNow } },
        16 => Request::CommitAction { action: a },
        17 | 18 => Request::OverrideCommit {
            action: a,
            risk_note: if rng.random_bool(0.8) { "accepted risk".into() } else { String::new() },
        },
        19 => Request::IngestObservation { variable: var, value: unit(rng), anomalous: rng.random_bool(0.5) },
        20 => Request::LinkDiscrepancy { discrepancy: d, violated_object: random_object(rng, b) },
        21 => Request::TypeDiscrepancy { discrepancy: d },
        22 => Request::ResolveDiscrepancy { discrepancy: d, evidence: e },
        23 => Request::Challenge { premise: p, rationale: "doubt".into() },
        24 => Request::RegisterProbe {
            premise: p,
            description: "probe".into(),
            discrimination: unit(rng),
            cost: unit(rng),
        },
        25 => Request::RecordProbeResult { probe: q, passed: rng.random_bool(0.5), weight: unit(rng) },
        26 => Request::CompileSlice { action: a, max_items: Some(rng.random_range(3..=9)) },
        27 => Request::Decide { action: a, probes: None },
        28 => Request::ReviseFramework {
            id: None,
            kind: [FrameworkKind::Goal, FrameworkKind::Constraint, FrameworkKind::Threshold][rng.random_range(0..3)],
            statement: "frame".into(),
            params: Default::default(),
        },
        _ => match rng.random_range(0..4) {
            0 => Request::WithdrawAction { action: a },
            1 => Request::ReviseCredence { premise: p, credence: unit(rng) },
            2 => Request::LoadBearing { action: a },
            _ => Request::Recommend { candidates: None },
        },
    }
}

/// Outcome of one fuzz run.
pub struct FuzzRun {
    pub gateway: Gateway,
    pub requests: usize,
    pub errors: usize,
    /// Requests that changed the snapshot without appending an event.
    pub silent_changes: Vec<String>,
}

impl FuzzRun {
    pub fn events(&self) -> &[LedgerEvent] {
        self.gateway.engine().events()
    }

    pub fn log_bytes(&self) -> Vec<u8> {
        write_log(self.events())
    }
}

/// Drives the gateway with `steps` random requests from random roles.
/// With `check_silent` the snapshot is compared around every request.
pub fn fuzz_run(seed: u64, steps: usize, check_silent: bool) -> FuzzRun {
    let mut rng = rng(seed);
    let engine = Engine::with_clock(Box::new(StepClock::new(0, 1)));
    let mut gw = Gateway::new(engine, GatewayConfig::default());
    let open = |gw: &mut Gateway, role: Role| {
        gw.handle(Envelope::new(Request::OpenSession {}).actor("fuzz").role(role)).unwrap();
    };
    open(&mut gw, Role::Expert);
    let mut errors = 0;
    let mut silent = Vec::new();
    for _ in 0..steps {
        let role = if rng.random_bool(0.6) { Role::Expert } else { Role::Assistant };
        let req = if rng.random_range(0..40) == 0 {
            Request::CloseSession {}
        } else {
            random_request(&mut rng, gw.engine().basis())
        };
        let before_len = gw.engine().events().len();
        let before = check_silent.then(|| gw.engine().basis().canonical());
        let closing = matches!(req, Request::CloseSession {});
        let desc = format!("{req:?}");
        if gw.handle(Envelope::new(req).actor("fuzz").role(role)).is_err() {
            errors += 1;
        }
        if let Some(before) = before {
            if gw.engine().events().len() == before_len && gw.engine().basis().canonical() != before {
                silent.push(desc);
            }
        }
        if closing {
            open(&mut gw, if rng.random_bool(0.5) { Role::Expert } else { Role::Assistant });
        }
    }
    FuzzRun { gateway: gw, requests: steps, errors, silent_changes: silent }
}

// ------------------------------------------------------- log properties

/// Commits of consequential actions not immediately justified by an
/// allowed gate check or an override naming the action.
pub fn unjustified_commits(events: &[LedgerEvent]) -> Vec<u64> {
    let mut consequential: BTreeMap<ActionId, bool> = BTreeMap::new();
    let mut bad = Vec::new();
    for (k, ev) in events.iter().enumerate() {
        match &ev.event {
            Event::ActionProposed { action } => {
                consequential.insert(action.id, action.consequential);
            }
            Event::CommitGranted { action, .. } => {
                if consequential.get(action).copied().unwrap_or(true) {
                    let justified = k > 0
                        && matches!(&events[k - 1].event,
                            Event::GateChecked { result, .. }
                                if result.action == *action && result.is_allowed());
                    if !justified {
                        bad.push(ev.index);
                    }
                }
            }
            Event::OverrideGranted { .. } => {}
            _ => {}
        }
    }
    bad
}

/// Actions whose status is committed in the snapshot, paired with whether
/// the log holds a justifying event for each.
pub fn committed_consequential(basis: &Basis) -> Vec<ActionId> {
    basis
        .actions()
        .filter(|a| a.consequential && a.status == basis_core::ActionStatus::Committed)
        .map(|a| a.id)
        .collect()
}

/// Challenge and discrepancy events that neither name a violated object
/// nor are explicitly unlinked.
pub fn unanchored(events: &[LedgerEvent]) -> Vec<u64> {
    let mut out = Vec::new();
    for ev in events {
        let ok = match &ev.event {
            Event::DiscrepancyOpened { discrepancy: d } => match d.linkage {
                basis_core::Linkage::Linked => d.violated_object.is_some() && d.axis.is_some(),
                basis_core::Linkage::Unlinked => d.violated_object.is_none() && d.axis.is_none(),
            },
            Event::DiscrepancyLinked { .. } => true,
            Event::ChallengeIssued { premise, discrepancy, .. } => events.iter().any(|o| {
                matches!(&o.event, Event::DiscrepancyOpened { discrepancy: d }
                    if d.id == *discrepancy && d.violated_object == Some((*premise).into()))
            }),
            _ => true,
        };
        if !ok {
            out.push(ev.index);
        }
    }
    out
}

/// Slices whose repair option count is outside 1..=2.
pub fn bad_slices(events: &[LedgerEvent]) -> Vec<u64> {
    events
        .iter()
        .filter_map(|ev| match &ev.event {
            Event::SliceCompiled { slice } if !(1..=2).contains(&slice.repair_options.len()) => Some(ev.index),
            _ => None,
        })
        .collect()
}

// ------------------------------------------------------ policy fixtures

/// A random basis with probes on some premises and a few observations, so
/// that every branch of the epistemic policy is reachable.
pub fn policy_basis(seed: u64) -> (Engine, Vec<basis_core::ProbeId>) {
    let mut engine = random_basis(seed, 12);
    let mut rng = rng(seed ^ 0xab);
    let ctx = engine.open_session("policy", Role::Expert).unwrap();
    let premises: Vec<PremiseId> = engine.basis().premises().map(|p| p.id).collect();
    let mut probes = Vec::new();
    for &p in &premises {
        if rng.random_bool(0.6) {
            let q = engine
                .register_probe(
                    &ctx,
                    p,
                    "check".into(),
                    rng.random_range(0..=10) as f64 / 10.0,
                    rng.random_range(0..=6) as f64 / 10.0,
                )
                .unwrap();
            probes.push(q.id);
        }
    }
    for _ in 0..rng.random_range(0..3) {
        let var = VARIABLES[rng.random_range(0..VARIABLES.len())];
        let _ = engine.ingest_observation(&ctx, var, rng.random_range(0..=10) as f64 / 10.0, false);
    }
    (engine, probes)
}

/// The value formula written out directly.
pub fn oracle_voi(basis: &Basis, premise: PremiseId, discrimination: f64, cost: f64, lambda: f64) -> f64 {
    let candidates: Vec<ActionId> = basis.pending_actions().map(|a| a.id).collect();
    let relevant = candidates.iter().any(|&a| oracle_load_bearing(basis, a).iter().any(|&(p, _)| p == premise));
    let sensitive = oracle_sensitivity(basis, premise, &candidates);
    let h = oracle_entropy(basis.premise(premise).unwrap().credence);
    let gain = if relevant && sensitive { h * discrimination } else { 0.0 };
    gain - lambda * cost
}

// ------------------------------------------------------ golden scenario

/// Everything the scenario checks along the way.
pub struct Golden {
    pub gateway: Gateway,
    pub drill_discrepancies: usize,
    pub contested_after_link: PremiseStatus,
    pub blocked: basis_core::GateResult,
    pub slice: basis_core::DecisionSlice,
    pub decision: basis_core::EpistemicDecision,
    pub commit_after_probe: basis_core::TransitionOutcome,
    pub allowed: basis_core::GateResult,
}

fn call(gw: &mut Gateway, req: Request) -> basis_core::Reply {
    gw.handle(Envelope::new(req).actor("dr-di").role(Role::Expert)).unwrap().result
}

macro_rules! expect {
    ($reply:expr, $pat:pat => $out:expr) => {
        match $reply {
            $pat => $out,
            other => panic!("unexpected reply {other:?}"),
        }
    };
}

/// The tutoring scenario: drill accuracy meets its 0.8 target, transfer
/// does not, the drill-implies-transfer premise is contested and probed.
pub fn golden_trace(clock: Box<dyn basis_core::Clock>) -> Golden {
    use basis_core::Reply;
    let mut gw = Gateway::new(Engine::with_clock(clock), GatewayConfig::default());
    call(&mut gw, Request::OpenSession {});
    call(
        &mut gw,
        Request::ReviseFramework {
            id: None,
            kind: FrameworkKind::Goal,
            statement: "Ty builds understanding that transfers to new contexts".into(),
            params: Default::default(),
        },
    );
    call(
        &mut gw,
        Request::ReviseFramework {
            id: None,
            kind: FrameworkKind::Threshold,
            statement: "drill accuracy target".into(),
            params: [("target".to_string(), 0.8)].into_iter().collect(),
        },
    );
    let p1 = expect!(call(&mut gw, Request::CreatePremise {
        axis: Axis::Teleological,
        statement: "transferable understanding is the objective".into(),
        evidence_threshold: 0.0,
        stakes: Stakes::High,
        predecessor: None,
    }), Reply::Premise(p) => p.id);
    let p2 = expect!(call(&mut gw, Request::CreatePremise {
        axis: Axis::Epistemic,
        statement: "drill score implies transfer".into(),
        evidence_threshold: 1.0,
        stakes: Stakes::High,
        predecessor: None,
    }), Reply::Premise(p) => p.id);
    let advance = expect!(call(&mut gw, Request::ProposeAction {
        description: "advance Ty to more complex material".into(),
        utility: 0.9,
        consequential: true,
    }), Reply::Action(a) => a.id);
    let explain = expect!(call(&mut gw, Request::ProposeAction {
        description: "explanation-first intervention".into(),
        utility: 0.6,
        consequential: true,
    }), Reply::Action(a) => a.id);
    for (from, to) in [(p1, advance), (p1, explain), (p2, advance)] {
        call(&mut gw, Request::AddLink { from: from.into(), to: to.into(), kind: LinkKind::Supports });
    }
    call(&mut gw, Request::ProposeTransition { premise: p1, to: PremiseStatus::Committed });
    call(&mut gw, Request::AddExpectation {
        premise: p1,
        variable: "drill-accuracy".into(),
        predicate: Predicate::AtLeast { value: 0.8 },
    });
    let drill = expect!(call(&mut gw, Request::IngestObservation {
        variable: "drill-accuracy".into(),
        value: 0.85,
        anomalous: false,
    }), Reply::Observation(o) => o);
    let probe = expect!(call(&mut gw, Request::RegisterProbe {
        premise: p2,
        description: "structured teach-back with rubric + near-transfer item".into(),
        discrimination: 0.9,
        cost: 0.2,
    }), Reply::Probe(q) => q.id);
    let transfer = expect!(call(&mut gw, Request::IngestObservation {
        variable: "transfer-score".into(),
        value: 0.3,
        anomalous: true,
    }), Reply::Observation(o) => o);
    let d1 = transfer.discrepancies[0].id;
    call(&mut gw, Request::LinkDiscrepancy { discrepancy: d1, violated_object: p2.into() });
    let contested_after_link = gw.engine().basis().premise(p2).unwrap().status;
    call(&mut gw, Request::TypeDiscrepancy { discrepancy: d1 });
    let blocked = expect!(call(&mut gw, Request::Gate { action: advance, intent: GateIntent::Check }), Reply::Gate(g) => g);
    let slice = expect!(call(&mut gw, Request::CompileSlice { action: advance, max_items: None }), Reply::Slice(s) => s);
    let decision = expect!(call(&mut gw, Request::Decide { action: advance, probes: None }), Reply::Decision(d) => d);
    let result = expect!(call(&mut gw, Request::RecordProbeResult { probe, passed: true, weight: 0.6 }), Reply::ProbeResult(r) => r);
    call(&mut gw, Request::AttachEvidence {
        premise: p2,
        payload: "near-transfer item solved unaided".into(),
        direction: Direction::Supports,
        weight: 0.6,
        source: EvidenceSource::Observation,
    });
    call(&mut gw, Request::ResolveDiscrepancy { discrepancy: d1, evidence: result.id });
    let commit_after_probe = expect!(
        call(&mut gw, Request::ProposeTransition { premise: p2, to: PremiseStatus::Committed }),
        Reply::Transition(t) => t
    );
    let allowed = expect!(call(&mut gw, Request::Gate { action: advance, intent: GateIntent::Check }), Reply::Gate(g) => g);
    call(&mut gw, Request::CommitAction { action: advance });
    call(&mut gw, Request::CloseSession {});
    Golden {
        gateway: gw,
        drill_discrepancies: drill.discrepancies.len(),
        contested_after_link,
        blocked,
        slice,
        decision,
        commit_after_probe,
        allowed,
    }
}

pub const GOLDEN_CLOCK_START: u64 = 1_700_000_000_000;

/// Log lines with timestamps and the hashes that depend on them removed.
pub fn normalized_log(events: &[LedgerEvent]) -> Vec<serde_json::Value> {
    events
        .iter()
        .map(|e| {
            let mut v = e.to_value();
            strip(&mut v);
            v
        })
        .collect()
}

fn strip(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(m) => {
            for k in ["timestamp", "hash", "prev_hash"] {
                m.remove(k);
            }
            m.values_mut().for_each(strip);
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(strip),
        _ => {}
    }
}
