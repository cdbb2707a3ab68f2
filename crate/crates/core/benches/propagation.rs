//! Parallel vs sequential execution: block propagator construction on the
//! three-resonator model and a short three-point sweep.

use std::hint::black_box;

use aqec::experiments::{load_config, run_sweep, ScenarioId};
use aqec::lindblad::{liouvillian, BlockPropagator};
use aqec::models::{build_three_resonator_full, corrupted_psi0, ProtocolKnobs};
use aqec::{DensityMatrix, ExecPolicy};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const POLICIES: [(&str, ExecPolicy); 2] = [
    ("parallel", ExecPolicy::Parallel),
    ("sequential", ExecPolicy::Sequential),
];

fn propagator(c: &mut Criterion) {
    let model = build_three_resonator_full(&ProtocolKnobs::default().to_params()).unwrap();
    let l = liouvillian(&model);
    // blocks reachable from a corrupted logical state, as in a real run
    let rho0 = DensityMatrix::from_pure(&corrupted_psi0(model.space(), 0).unwrap());
    let support: Vec<usize> = rho0
        .data()
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > 0.0)
        .map(|(i, _)| i)
        .collect();
    let mut group = c.benchmark_group("block_propagator");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| BlockPropagator::new(black_box(&l), 0.005, &support, exec).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let overrides = [
        "model=\"three_qubit_reduced\"",
        "horizon=1",
        "steps=50",
        "sweep_key=\"omega_p\"",
        "sweep_values=[100.0, 200.0, 300.0]",
    ]
    .map(String::from);
    let base = load_config(Some(ScenarioId::Custom), None, &overrides).unwrap();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        let mut cfg = base.clone();
        cfg.exec = exec;
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_sweep(black_box(&cfg), false).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, propagator, sweep);
criterion_main!(benches);
