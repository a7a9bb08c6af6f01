//! Convergence companion to `noise_floor`: at 5e6 post-warmup blocks the
//! load-0.9 total-variation distances collapse to the 1e-3 scale, scaling
//! as 1/sqrt(blocks) from the 1e5-block values, which pins the 1e5-block
//! deviations on sampling noise rather than any analytic bias.
//!
//!   cargo run --release -p chainq-core --example convergence

use chainq_core::analytics::empirical::{chain_estimates, ArrivalCountLaw};
use chainq_core::analytics::{exact_k_distributions, PriorityQueueModel};
use chainq_core::queue::{run_simulation, BlockTimeLaw, SchedulerKind, SimConfig};
use chainq_core::stats::tv_distance;

fn main() {
    for (beta, load) in [(2usize, 0.9f64), (5, 0.9)] {
        let lambda = load * beta as f64;
        let config = SimConfig {
            lambda,
            mu: 1.0,
            beta,
            block_time_law: BlockTimeLaw::Exponential,
            scheduler: SchedulerKind::Priority,
            horizon_blocks: 5_002_000,
            warmup_blocks: Some(2_000),
            seed: 40_404,
            reference_priority: None,
            orderflow: None,
            pool: None,
        };
        let trace = run_simulation(&config).unwrap();
        let model = PriorityQueueModel::new(lambda, 1.0, beta).unwrap();
        let s_law = ArrivalCountLaw::geometric(model.q).unwrap();
        let est = chain_estimates(trace.post_warmup_chain(), beta, &s_law, 8_000).unwrap();
        let exact = exact_k_distributions(&model, 8_000).unwrap();
        let geo = model.n_pmf(est.n_pmf.len());
        println!(
            "beta={beta} load={load} 5e6 blocks: TV(N)={:.5} TV(K')={:.5} TV(K''|>0)={:.5}",
            tv_distance(&est.n_pmf, &geo),
            tv_distance(&est.kprime, &exact.kprime),
            tv_distance(&est.kpp_later, &exact.kpp_later),
        );
    }
}
