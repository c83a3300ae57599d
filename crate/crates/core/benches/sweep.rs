use criterion::{criterion_group, criterion_main, Criterion};

use bimotion::circuit::{build_bidirectional, CircuitParams, DelayPlan};
use bimotion::engine::SimConfig;
use bimotion::stimulus::Scenario;
use bimotion::sweep::{sweep_sequential, velocity_grid};

fn velocity_sweep(c: &mut Criterion) {
    let circuit = build_bidirectional(8, DelayPlan::default(), CircuitParams::default()).unwrap();
    let mut template = Scenario::single_crossing();
    template.array.n_sensors = 8;
    let grid = velocity_grid(0.2, 1.0, 0.005).unwrap();
    let config = SimConfig::default();

    let mut group = c.benchmark_group("velocity_sweep");
    group.sample_size(20);
    group.bench_function("sequential", |b| b.iter(|| sweep_sequential(&circuit, &template, &grid, &config).unwrap()));
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| {
        b.iter(|| bimotion::sweep::sweep_parallel(&circuit, &template, &grid, &config).unwrap())
    });
    group.finish();
}

criterion_group!(benches, velocity_sweep);
criterion_main!(benches);
