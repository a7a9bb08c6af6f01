use std::sync::Arc;

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use chainq_core::cfmm::{exchange_out, memoryless_sandwich_payoff, CfmmState, Cpmm, MarketOrder};
use chainq_core::orderflow::{mc_execution_price, KModel, OrderSizeLaw};

fn pool() -> CfmmState {
    CfmmState::new(100.0, Arc::new(Cpmm::new(10_000.0).unwrap())).unwrap()
}

fn swap_math(c: &mut Criterion) {
    let state = pool();
    c.bench_function("exchange_out", |b| {
        b.iter(|| exchange_out(black_box(&state), black_box(10.0)))
    });
    c.bench_function("sandwich_payoff", |b| {
        b.iter(|| memoryless_sandwich_payoff(black_box(&state), 10.0, 10.0))
    });
}

fn monte_carlo(c: &mut Criterion) {
    let state = pool();
    let law = OrderSizeLaw::UniformSymmetric { l: 1.0 };
    let k_model = KModel::Geometric { p: 30.0 / 31.0 };
    let order = MarketOrder::new(1.0).unwrap();
    let mut group = c.benchmark_group("mc_price");
    group.sample_size(10);
    group.bench_function("10k_replications", |b| {
        b.iter(|| mc_execution_price(&state, &law, &k_model, &order, 10_000, 7).unwrap())
    });
    group.finish();
}

criterion_group!(benches, swap_math, monte_carlo);
criterion_main!(benches);
