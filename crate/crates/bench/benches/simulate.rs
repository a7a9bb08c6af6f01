use criterion::{black_box, criterion_group, criterion_main, Criterion};

use chainq_bench::priority_config;
use chainq_core::analytics::empirical::{chain_estimates, ArrivalCountLaw};
use chainq_core::queue::run_simulation;

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulation");
    group.sample_size(10);
    group.bench_function("priority_beta5_load05_10k_blocks", |b| {
        let config = priority_config(5, 0.5, 10_000);
        b.iter(|| run_simulation(black_box(&config)).unwrap())
    });
    group.bench_function("priority_beta50_load09_10k_blocks", |b| {
        let config = priority_config(50, 0.9, 10_000);
        b.iter(|| run_simulation(black_box(&config)).unwrap())
    });
    group.finish();
}

fn estimators(c: &mut Criterion) {
    let config = priority_config(5, 0.9, 50_000);
    let trace = run_simulation(&config).unwrap();
    let law = ArrivalCountLaw::geometric(4.5 / 5.5).unwrap();
    c.bench_function("chain_estimates_beta5_load09_50k", |b| {
        b.iter(|| chain_estimates(black_box(&trace.embedded_chain), 5, &law, 2000).unwrap())
    });
}

criterion_group!(benches, simulation, estimators);
criterion_main!(benches);
