mod common;

use std::path::PathBuf;

use basis_core::ledger::{parse_log, write_log};
use basis_core::{
    EpistemicAction, GateVerdict, PremiseId, PremiseStatus, RepairKind, StepClock, SystemClock,
};
use common::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn stepped() -> Golden {
    golden_trace(Box::new(StepClock::new(GOLDEN_CLOCK_START, 1000)))
}

/// With `BLESS=1` the fixtures are rewritten instead of compared.
fn check_fixture(name: &str, actual: &[u8]) {
    let path = fixture(name);
    if std::env::var_os("BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(expected == actual, "{name} differs from the frozen fixture");
}

#[test]
fn scenario_outcomes() {
    let g = stepped();
    let p2 = PremiseId(2);
    assert_eq!(g.drill_discrepancies, 0, "0.85 meets the 0.8 target");
    assert_eq!(g.contested_after_link, PremiseStatus::Contested);
    assert_eq!(g.blocked.verdict, GateVerdict::Blocked);
    assert_eq!(g.blocked.blocking_ids(), vec![p2]);

    assert!(g.slice.premises.iter().any(|p| p.premise == p2 && p.sensitive));
    let investigate = g.slice.repair_options.iter().find(|o| o.kind == RepairKind::Investigate).unwrap();
    let probe = investigate.probe.as_ref().unwrap();
    assert!(probe.description.contains("teach-back"));
    assert_eq!((probe.discrimination, probe.cost), (0.9, 0.2));
    assert_ne!(g.slice.consequence.if_committed, g.slice.consequence.if_rejected);
    assert!(g.slice.item_count() <= g.slice.budget.max_items);

    assert_eq!(g.decision.action, EpistemicAction::Probe);
    assert_eq!(g.decision.justification.premises, vec![p2]);
    // H(0.5) * 0.9 - 1.0 * 0.2
    let v = g.decision.justification.voi.iter().find(|s| s.premise == p2).unwrap().value;
    assert!((v - 0.7).abs() < 1e-12, "{v}");

    assert!(g.commit_after_probe.result.is_applied());
    assert!(g.allowed.is_allowed());
    let advance = g.gateway.engine().basis().actions().next().unwrap();
    assert_eq!(advance.status, basis_core::ActionStatus::Committed);
}

#[test]
fn event_log_matches_fixture_byte_for_byte() {
    let g = stepped();
    let bytes = write_log(g.gateway.engine().events());
    check_fixture("golden_events.jsonl", &bytes);
    // and the frozen file is itself a valid chain
    let frozen = std::fs::read(fixture("golden_events.jsonl")).unwrap();
    assert!(basis_core::ledger::verify_bytes(&frozen).is_valid());
}

#[test]
fn slice_matches_fixture() {
    let g = stepped();
    let mut json = serde_json::to_vec_pretty(&g.slice).unwrap();
    json.push(b'\n');
    check_fixture("golden_slice.json", &json);
}

#[test]
fn wall_clock_run_matches_after_normalization() {
    let live = golden_trace(Box::new(SystemClock));
    let frozen = parse_log(&std::fs::read(fixture("golden_events.jsonl")).unwrap()).unwrap();
    assert_eq!(normalized_log(live.gateway.engine().events()), normalized_log(&frozen));
}
