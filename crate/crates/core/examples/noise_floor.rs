//! Measures the seed-to-seed spread of the load-0.9 acceptance statistics:
//! ten independent 1e5-block runs per grid point, reporting the
//! total-variation distances of the conditional estimators against the
//! exact tables.
//!
//!   cargo run --release -p chainq-core --example noise_floor

use chainq_core::analytics::empirical::{chain_estimates, ArrivalCountLaw};
use chainq_core::analytics::{exact_k_distributions, PriorityQueueModel};
use chainq_core::queue::{run_simulation, BlockTimeLaw, SchedulerKind, SimConfig};
use chainq_core::stats::tv_distance;

fn main() {
    println!(
        "{:>6} {:>6} {:>6}  {:>8} {:>8}",
        "beta", "load", "seed", "TV(N)", "TV(K')"
    );
    for beta in [2usize, 5, 50] {
        let load = 0.9;
        let lambda = load * beta as f64;
        let model = PriorityQueueModel::new(lambda, 1.0, beta).unwrap();
        let exact = exact_k_distributions(&model, 6_000).unwrap();
        let s_law = ArrivalCountLaw::geometric(model.q).unwrap();
        for seed in 0..10u64 {
            let config = SimConfig {
                lambda,
                mu: 1.0,
                beta,
                block_time_law: BlockTimeLaw::Exponential,
                scheduler: SchedulerKind::Priority,
                horizon_blocks: 102_000,
                warmup_blocks: Some(2_000),
                seed: 1_000 + seed,
                reference_priority: None,
                orderflow: None,
                pool: None,
            };
            let trace = run_simulation(&config).unwrap();
            let est = chain_estimates(trace.post_warmup_chain(), beta, &s_law, 6_000).unwrap();
            let geo = model.n_pmf(est.n_pmf.len());
            println!(
                "{:>6} {:>6} {:>6}  {:>8.4} {:>8.4}",
                beta,
                load,
                seed,
                tv_distance(&est.n_pmf, &geo),
                tv_distance(&est.kprime, &exact.kprime)
            );
        }
    }
}
