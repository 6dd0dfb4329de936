mod common;

use std::collections::BTreeSet;

use basis_core::graph::{evaluate_gate, load_bearing};
use basis_core::lifecycle::{is_legal_edge, score_evidence};
use basis_core::{
    Axis, Basis, Direction, Engine, EvidenceSource, GateIntent, LinkKind, NewEvidence, NewPremise, ObjectId,
    PremiseStatus, Role, Stakes, StepClock,
};
use common::*;
use proptest::prelude::*;

fn premise(engine: &mut Engine, ctx: &basis_core::Ctx) -> basis_core::PremiseId {
    engine
        .create_premise(
            ctx,
            NewPremise {
                axis: Axis::Epistemic,
                statement: "p".into(),
                evidence_threshold: 0.0,
                stakes: Stakes::Low,
                predecessor: None,
            },
        )
        .unwrap()
        .id
}

fn is_acyclic(b: &Basis) -> bool {
    // Kahn's algorithm over the link set
    let edges: Vec<(ObjectId, ObjectId)> = b.links().map(|l| (l.from, l.to)).collect();
    let mut nodes: BTreeSet<ObjectId> = edges.iter().flat_map(|&(a, c)| [a, c]).collect();
    let mut remaining = edges.clone();
    loop {
        let sources: Vec<ObjectId> =
            nodes.iter().copied().filter(|n| !remaining.iter().any(|&(_, to)| to == *n)).collect();
        if sources.is_empty() {
            return nodes.is_empty();
        }
        for s in sources {
            nodes.remove(&s);
            remaining.retain(|&(from, _)| from != s);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn score_is_independent_of_evidence_order(
        weights in prop::collection::vec((0.0f64..=1.0, any::<bool>()), 1..12),
        seed in any::<u64>(),
    ) {
        let mut shuffled = weights.clone();
        let mut rng = rng(seed);
        rand::seq::SliceRandom::shuffle(&mut shuffled[..], &mut rng);
        let score = |ws: &[(f64, bool)]| {
            let mut engine = Engine::with_clock(Box::new(StepClock::new(0, 1)));
            let ctx = engine.open_session("s", Role::Expert).unwrap();
            let p = premise(&mut engine, &ctx);
            for &(w, sup) in ws {
                engine.attach_evidence(&ctx, p, NewEvidence {
                    payload: "e".into(),
                    direction: if sup { Direction::Supports } else { Direction::Refutes },
                    weight: w,
                    source: EvidenceSource::Observation,
                }).unwrap();
            }
            score_evidence(engine.basis(), p).unwrap()
        };
        prop_assert_eq!(score(&weights).to_bits(), score(&shuffled).to_bits());
    }

    #[test]
    fn load_bearing_is_monotone_and_graph_stays_acyclic(seed in any::<u64>(), extra in prop::collection::vec((0usize..64, 0usize..64), 1..10)) {
        let mut engine = random_basis(seed, 12);
        let ctx = engine.open_session("m", Role::Expert).unwrap();
        let nodes: Vec<ObjectId> = {
            let b = engine.basis();
            b.premises().map(|p| p.id.into())
                .chain(b.expectations().map(|x| x.id.into()))
                .chain(b.actions().map(|a| a.id.into()))
                .collect()
        };
        for (i, j) in extra {
            let before: Vec<_> = engine.basis().actions().map(|a| {
                load_bearing(engine.basis(), a.id).unwrap().into_iter().map(|l| l.premise).collect::<BTreeSet<_>>()
            }).collect();
            let from = nodes[i % nodes.len()];
            let to = nodes[j % nodes.len()];
            let accepted = engine.add_link(&ctx, from, to, LinkKind::Supports).is_ok();
            prop_assert!(is_acyclic(engine.basis()));
            let after: Vec<_> = engine.basis().actions().map(|a| {
                load_bearing(engine.basis(), a.id).unwrap().into_iter().map(|l| l.premise).collect::<BTreeSet<_>>()
            }).collect();
            for (b, a) in before.iter().zip(&after) {
                prop_assert!(b.is_subset(a));
                if !accepted {
                    prop_assert_eq!(b, a);
                }
            }
        }
    }

    #[test]
    fn gate_opens_only_through_its_blocking_premises(seed in any::<u64>(), pick in 0usize..64) {
        let mut engine = random_basis(seed, 12);
        let ctx = engine.open_session("g", Role::Expert).unwrap();
        let actions: Vec<_> = engine.basis().pending_actions().map(|a| a.id).collect();
        let premises: Vec<_> = engine.basis().premises().map(|p| p.id).collect();
        let p = premises[pick % premises.len()];
        let before: Vec<_> = actions.iter().map(|&a| evaluate_gate(engine.basis(), a, GateIntent::Check, None).unwrap()).collect();
        let status = engine.basis().premise(p).unwrap().status;
        if status != PremiseStatus::Committed && status != PremiseStatus::Rejected {
            engine.propose_transition(&ctx, p, PremiseStatus::Committed).unwrap();
        }
        for (g, &a) in before.iter().zip(&actions) {
            let now = evaluate_gate(engine.basis(), a, GateIntent::Check, None).unwrap();
            if !g.is_allowed() && now.is_allowed() {
                prop_assert_eq!(g.blocking_ids(), vec![p]);
            }
        }
    }

    #[test]
    fn replay_reproduces_every_prefix(seed in 0u64..2000) {
        let run = fuzz_run(seed, 40, false);
        let events = run.events();
        let mut live = Basis::new();
        for (k, ev) in events.iter().enumerate() {
            live.apply(ev).unwrap();
            if k % 7 == 0 {
                prop_assert_eq!(Basis::replay(&events[..=k]).unwrap().canonical(), live.canonical());
            }
        }
        prop_assert_eq!(live.canonical(), run.gateway.engine().basis().canonical());
    }

    #[test]
    fn events_survive_the_disk_round_trip(seed in 0u64..500) {
        let dir = tempfile::tempdir().unwrap();
        let run = fuzz_run(seed, 25, false);
        std::fs::write(dir.path().join("events.jsonl"), run.log_bytes()).unwrap();
        let reopened = Engine::open(dir.path(), Box::new(StepClock::new(0, 1))).unwrap();
        prop_assert_eq!(reopened.events(), run.events());
        prop_assert_eq!(reopened.basis().canonical(), run.gateway.engine().basis().canonical());
    }
}

#[test]
fn lifecycle_edge_table_is_exact() {
    use PremiseStatus::*;
    let all = [Draft, Contested, Committed, Rejected];
    let legal: BTreeSet<(&str, &str)> = [
        ("draft", "contested"),
        ("draft", "committed"),
        ("draft", "rejected"),
        ("contested", "committed"),
        ("contested", "rejected"),
        ("committed", "contested"),
    ]
    .into_iter()
    .collect();
    for from in all {
        for to in all {
            assert_eq!(is_legal_edge(from, to), legal.contains(&(from.as_str(), to.as_str())), "{from}->{to}");
        }
    }
}
