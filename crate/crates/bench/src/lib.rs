//! Fixtures shared by the engine benchmarks.

use basis_core::{
    ActionId, Axis, Engine, LedgerEvent, LinkKind, NewPremise, PremiseId, ProbeId, Role, Stakes, StepClock,
};

/// A layered dependency graph: `depth` layers of `width` premises, each
/// linked to two premises of the next layer, the last layer feeding every
/// action. Half the premises carry a probe.
pub struct Layered {
    pub engine: Engine,
    pub actions: Vec<ActionId>,
    pub probes: Vec<ProbeId>,
}

pub fn layered(width: usize, depth: usize, actions: usize) -> Layered {
    let mut engine = Engine::with_clock(Box::new(StepClock::new(0, 1)));
    let ctx = engine.open_session("bench", Role::Expert).unwrap();
    let mut layers: Vec<Vec<PremiseId>> = Vec::new();
    let mut probes = Vec::new();
    for d in 0..depth {
        let mut layer = Vec::new();
        for w in 0..width {
            let p = engine
                .create_premise(
                    &ctx,
                    NewPremise {
                        axis: [Axis::Epistemic, Axis::Teleological, Axis::Procedural][(d + w) % 3],
                        statement: format!("premise {d}.{w}"),
                        evidence_threshold: 1.0,
                        stakes: if w % 2 == 0 { Stakes::High } else { Stakes::Low },
                        predecessor: None,
                    },
                )
                .unwrap();
            if w % 2 == 0 {
                probes.push(engine.register_probe(&ctx, p.id, format!("probe {d}.{w}"), 0.8, 0.1).unwrap().id);
            }
            layer.push(p.id);
        }
        if let Some(prev) = layers.last() {
            for (i, &from) in prev.iter().enumerate() {
                for to in [layer[i], layer[(i + 1) % width]] {
                    let _ = engine.add_link(&ctx, from.into(), to.into(), LinkKind::Supports);
                }
            }
        }
        layers.push(layer);
    }
    let mut ids = Vec::new();
    for k in 0..actions {
        let a = engine.propose_action(&ctx, format!("action {k}"), 1.0 - k as f64 / 10.0, true).unwrap();
        for &p in layers.last().unwrap() {
            engine.add_link(&ctx, p.into(), a.id.into(), LinkKind::Supports).unwrap();
        }
        ids.push(a.id);
    }
    Layered { engine, actions: ids, probes }
}

/// A sealed log of exactly `n` events.
pub fn log_of(n: usize) -> Vec<LedgerEvent> {
    let mut engine = Engine::with_clock(Box::new(StepClock::new(0, 1)));
    let ctx = engine.open_session("bench", Role::Expert).unwrap();
    let mut premises = Vec::new();
    while engine.events().len() < n {
        let i = engine.events().len();
        if premises.len() < 50 || i.is_multiple_of(3) {
            let p = engine
                .create_premise(
                    &ctx,
                    NewPremise {
                        axis: Axis::Epistemic,
                        statement: format!("premise {i}"),
                        evidence_threshold: 1.0,
                        stakes: Stakes::Low,
                        predecessor: None,
                    },
                )
                .unwrap();
            premises.push(p.id);
        } else {
            let p = premises[i % premises.len()];
            engine.revise_credence(&ctx, p, (i % 100) as f64 / 100.0).unwrap();
        }
    }
    engine.events().to_vec()
}
