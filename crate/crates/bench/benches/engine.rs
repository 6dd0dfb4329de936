use basis_bench::{layered, log_of};
use basis_core::graph::{evaluate_gate, load_bearing};
use basis_core::ledger::verify_chain;
use basis_core::policy::decide;
use basis_core::slice::compile;
use basis_core::{Basis, GateIntent, PolicyConfig, SliceBudget};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn gate(c: &mut Criterion) {
    let mut g = c.benchmark_group("gate");
    for (width, depth) in [(4, 3), (8, 6), (16, 8)] {
        let l = layered(width, depth, 3);
        let b = l.engine.basis();
        let a = l.actions[0];
        g.bench_with_input(BenchmarkId::new("evaluate", width * depth), &a, |bench, &a| {
            bench.iter(|| evaluate_gate(black_box(b), a, GateIntent::Check, None).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("load_bearing", width * depth), &a, |bench, &a| {
            bench.iter(|| load_bearing(black_box(b), a).unwrap())
        });
    }
    g.finish();
}

fn replay(c: &mut Criterion) {
    let log = log_of(1000);
    c.bench_function("replay/1000", |b| b.iter(|| Basis::replay(black_box(&log)).unwrap()));
    c.bench_function("verify_chain/1000", |b| b.iter(|| verify_chain(black_box(&log))));
}

fn slice_and_decide(c: &mut Criterion) {
    let l = layered(8, 4, 4);
    let b = l.engine.basis();
    let cfg = PolicyConfig::default();
    c.bench_function("compile_slice/32", |bench| {
        bench.iter(|| compile(black_box(b), l.actions[0], SliceBudget::default(), &cfg).unwrap())
    });
    c.bench_function("decide/32", |bench| {
        bench.iter(|| decide(black_box(b), l.actions[0], &l.probes, &cfg).unwrap())
    });
}

criterion_group!(benches, gate, replay, slice_and_decide);
criterion_main!(benches);
