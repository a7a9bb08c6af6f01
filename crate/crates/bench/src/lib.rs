//! Shared fixtures for the benchmark targets.

use chainq_core::queue::{BlockTimeLaw, SchedulerKind, SimConfig};

/// Priority-scheduler simulation at the given load and size.
pub fn priority_config(beta: usize, load: f64, horizon: usize) -> SimConfig {
    SimConfig {
        lambda: load * beta as f64,
        mu: 1.0,
        beta,
        block_time_law: BlockTimeLaw::Exponential,
        scheduler: SchedulerKind::Priority,
        horizon_blocks: horizon,
        warmup_blocks: Some(0),
        seed: 1,
        reference_priority: None,
        orderflow: None,
        pool: None,
    }
}
