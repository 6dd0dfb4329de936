mod common;

use basis_core::discrepancy::detect;
use basis_core::graph::{evaluate_gate, load_bearing};
use basis_core::policy::{pending_candidates, recommend, sensitivity};
use basis_core::{GateIntent, GateVerdict, PremiseStatus};
use common::*;
use rand::Rng;

const INSTANCES: u64 = 300;

#[test]
fn load_bearing_matches_path_enumeration() {
    let mut nontrivial = 0;
    for seed in 0..INSTANCES {
        let engine = random_basis(seed, 12);
        let b = engine.basis();
        for a in b.actions() {
            let got: Vec<_> = load_bearing(b, a.id).unwrap().iter().map(|l| (l.premise, l.distance)).collect();
            assert_eq!(got, oracle_load_bearing(b, a.id), "seed {seed} action {}", a.id);
            nontrivial += usize::from(got.iter().any(|&(_, d)| d > 1));
        }
    }
    // the generator must actually produce multi-hop dependencies
    assert!(nontrivial >= 50, "only {nontrivial} actions with indirect premises");
}

#[test]
fn gate_matches_literal_rule() {
    for seed in 0..INSTANCES {
        let engine = random_basis(seed, 12);
        let b = engine.basis();
        for a in b.actions() {
            for intent in [GateIntent::Check, GateIntent::CommitNow] {
                let g = evaluate_gate(b, a.id, intent, None).unwrap();
                let want = oracle_blocking(b, a.id, None);
                assert_eq!(g.blocking_ids(), want, "seed {seed}");
                let verdict = match (want.is_empty(), intent, a.consequential) {
                    (true, _, _) => GateVerdict::Allowed,
                    (false, GateIntent::CommitNow, true) => GateVerdict::OverrideRequired,
                    _ => GateVerdict::Blocked,
                };
                assert_eq!(g.verdict, verdict, "seed {seed}");
            }
        }
    }
}

#[test]
fn recommend_and_sensitivity_match_double_evaluation() {
    let mut sensitive = 0;
    for seed in 0..INSTANCES {
        let engine = random_basis(seed, 12);
        let b = engine.basis();
        let candidates = pending_candidates(b);
        assert_eq!(recommend(b, &candidates, None).unwrap(), oracle_recommend(b, &candidates, None));
        for p in b.premises() {
            assert_eq!(
                sensitivity(b, p.id, &candidates).unwrap(),
                oracle_sensitivity(b, p.id, &candidates),
                "seed {seed} premise {}",
                p.id
            );
            sensitive += usize::from(oracle_sensitivity(b, p.id, &candidates));
        }
    }
    assert!(sensitive >= 50, "only {sensitive} sensitive premises");
}

#[test]
fn detection_matches_predicate_brute_force() {
    let mut rng = rng(77);
    for seed in 0..INSTANCES {
        let engine = random_basis(seed, 12);
        let b = engine.basis();
        for _ in 0..5 {
            let var = VARIABLES[rng.random_range(0..VARIABLES.len())];
            let value = rng.random_range(0..=10) as f64 / 10.0;
            let got: std::collections::BTreeSet<_> = detect(b, var, value).iter().map(|x| x.id).collect();
            assert_eq!(got, oracle_detect(b, var, value), "seed {seed} {var}={value}");
        }
    }
}

#[test]
fn ingest_produces_exactly_the_detected_discrepancies() {
    let mut rng = rng(5);
    for seed in 0..100 {
        let mut engine = random_basis(seed, 12);
        let ctx = engine.open_session("obs", basis_core::Role::Assistant).unwrap();
        let var = VARIABLES[rng.random_range(0..VARIABLES.len())];
        let value = rng.random_range(0..=10) as f64 / 10.0;
        let want = oracle_detect(engine.basis(), var, value);
        let covered = engine
            .basis()
            .expectations()
            .any(|x| x.variable == var && engine.basis().premise(x.premise_id).unwrap().status == PremiseStatus::Committed);
        let out = engine.ingest_observation(&ctx, var, value, true).unwrap();
        let linked: std::collections::BTreeSet<_> = out
            .discrepancies
            .iter()
            .filter_map(|d| d.violated_object.and_then(|o| o.as_expectation()))
            .collect();
        assert_eq!(linked, want);
        let unlinked = out.discrepancies.iter().filter(|d| !d.is_linked()).count();
        assert_eq!(unlinked, usize::from(!covered));
    }
}
