//! Discrete-event mempool simulation: Poisson arrivals, i.i.d. block
//! intervals, pluggable schedulers and per-message outcome records.

pub mod export;
pub mod scheduler;
pub mod sim;

use serde::{Deserialize, Serialize};

use crate::cfmm::MarketOrder;
use crate::error::{Error, Result};
use crate::orderflow::OrderSizeLaw;

pub use scheduler::{naive_schedule, priority_schedule, sandwich_schedule, MessageFactory};
pub use sim::{run_simulation, sample_arrivals};

/// A queue element. Priorities of distinct messages are almost surely
/// distinct; the generator enforces it by rejection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub id: u64,
    pub arrival_time: f64,
    pub priority: f64,
    pub payload: Option<MarketOrder>,
    pub injected: bool,
}

/// One produced block: the ordered messages plus the pool snapshot taken
/// just before production.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub index: usize,
    pub interval: f64,
    pub messages: Vec<Message>,
    pub pool_size_before: usize,
    pub high_priority_before: usize,
}

impl BlockRecord {
    pub fn injected_count(&self) -> usize {
        self.messages.iter().filter(|m| m.injected).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockTimeLaw {
    Constant,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchedulerKind {
    /// Every block position is independently injected with probability
    /// `p_inj`, otherwise filled FIFO from the pool.
    Naive { p_inj: f64 },
    /// Top-beta of the pool by priority, sorted descending.
    Priority,
    /// Priority blocks whose included market orders get wrapped in
    /// memoryless sandwiches, spending up to `budget` units of the numeraire
    /// per front-run leg.
    Sandwicher { budget: f64 },
}

/// Zero-intelligence order flow attached to arriving messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderFlowConfig {
    /// Probability that an arriving message carries a market order.
    pub order_fraction: f64,
    pub law: OrderSizeLaw,
}

/// CFMM pool attached to the simulation (required by the sandwicher).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfmmConfig {
    /// Rule name: "cpmm" or "constant_sum".
    pub rule: String,
    pub level: f64,
    pub initial_reserve_a: f64,
}

impl CfmmConfig {
    pub fn build(&self) -> Result<crate::cfmm::CfmmState> {
        use std::sync::Arc;
        let rule: Arc<dyn crate::cfmm::PricingRule> = match self.rule.as_str() {
            "cpmm" => Arc::new(crate::cfmm::Cpmm::new(self.level)?),
            "constant_sum" => Arc::new(crate::cfmm::ConstantSum::new(self.level)?),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown pricing rule '{other}'"
                )))
            }
        };
        crate::cfmm::CfmmState::new(self.initial_reserve_a, rule)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Arrival rate (messages per second).
    pub lambda: f64,
    /// Block rate (blocks per second).
    pub mu: f64,
    /// Maximum block length.
    pub beta: usize,
    pub block_time_law: BlockTimeLaw,
    pub scheduler: SchedulerKind,
    pub horizon_blocks: usize,
    /// Blocks discarded before stationary statistics; defaults to
    /// 10 * beta / max(1, beta - lambda/mu).
    #[serde(default)]
    pub warmup_blocks: Option<usize>,
    pub seed: u64,
    /// Threshold for the per-block high-priority pool count; defaults to
    /// negative infinity (count everything).
    #[serde(default)]
    pub reference_priority: Option<f64>,
    #[serde(default)]
    pub orderflow: Option<OrderFlowConfig>,
    #[serde(default)]
    pub pool: Option<CfmmConfig>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        if !self.mu.is_finite() || self.mu <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "mu must be positive, got {}",
                self.mu
            )));
        }
        if self.beta == 0 {
            return Err(Error::InvalidParameter("beta must be at least 1".into()));
        }
        let warmup = self.warmup();
        if self.horizon_blocks <= warmup {
            return Err(Error::InvalidParameter(format!(
                "horizon_blocks ({}) must exceed warmup_blocks ({warmup})",
                self.horizon_blocks
            )));
        }
        match self.scheduler {
            SchedulerKind::Naive { p_inj } => {
                if !(0.0..=1.0).contains(&p_inj) {
                    return Err(Error::InvalidParameter(format!(
                        "p_inj must lie in [0, 1], got {p_inj}"
                    )));
                }
            }
            SchedulerKind::Priority => {}
            SchedulerKind::Sandwicher { budget } => {
                if budget.is_nan() || budget < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "sandwich budget must be non-negative, got {budget}"
                    )));
                }
                if self.pool.is_none() {
                    return Err(Error::InvalidParameter(
                        "sandwicher scheduler requires a pool".into(),
                    ));
                }
            }
        }
        if let Some(flow) = &self.orderflow {
            if !(0.0..=1.0).contains(&flow.order_fraction) {
                return Err(Error::InvalidParameter(format!(
                    "order_fraction must lie in [0, 1], got {}",
                    flow.order_fraction
                )));
            }
            flow.law.validate()?;
        }
        Ok(())
    }

    /// Effective warmup length.
    pub fn warmup(&self) -> usize {
        self.warmup_blocks.unwrap_or_else(|| {
            let slack = (self.beta as f64 - self.lambda / self.mu).max(1.0);
            (10.0 * self.beta as f64 / slack).ceil() as usize
        })
    }
}

/// Outcome of one included, non-injected message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageOutcome {
    pub id: u64,
    pub arrival_time: f64,
    pub priority: f64,
    /// Blocks waited: 0 for the first block produced after arrival.
    pub k_prime: usize,
    /// Position within the block, indexed from 0.
    pub k_double_prime: usize,
    /// Message number k = beta * k' + k''.
    pub k: usize,
}

/// One executed sandwich.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichEvent {
    pub block: usize,
    pub victim_id: u64,
    pub epsilon: f64,
    pub payoff_b: f64,
}

/// Per-block audit of the sandwicher guarantee: every included victim must
/// be sandwiched, or the block is (nearly) full, or the injected swap volume
/// has reached the budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockAudit {
    pub block: usize,
    pub emitted_len: usize,
    pub victims_included: usize,
    pub victims_sandwiched: usize,
    pub injected_volume: f64,
    pub trichotomy_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub config: SimConfig,
    pub blocks: Vec<BlockRecord>,
    /// Pool size just before each block.
    pub embedded_chain: Vec<usize>,
    pub message_outcomes: Vec<MessageOutcome>,
    /// Messages still pending at the horizon.
    pub censored_ids: Vec<u64>,
    pub sandwich_events: Vec<SandwichEvent>,
    pub block_audits: Vec<BlockAudit>,
    /// Final CFMM reserves, when a pool was attached.
    pub final_reserves: Option<(f64, f64)>,
}

impl SimTrace {
    pub fn warmup(&self) -> usize {
        self.config.warmup()
    }

    /// The embedded chain with the warmup prefix dropped.
    pub fn post_warmup_chain(&self) -> &[usize] {
        &self.embedded_chain[self.warmup().min(self.embedded_chain.len())..]
    }

    pub fn post_warmup_blocks(&self) -> &[BlockRecord] {
        &self.blocks[self.warmup().min(self.blocks.len())..]
    }
}
