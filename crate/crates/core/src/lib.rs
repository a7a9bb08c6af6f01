//! Mempool queueing analytics and simulation.
//!
//! The crate models a blockchain mempool as a bulk-service queue with a
//! priority discipline: Poisson message arrivals, i.i.d. block intervals,
//! and up to `beta` messages served per block. It provides
//!
//! * closed-form and exact distributions of a tagged message's relative
//!   block number, in-block position and message number ([`analytics`]);
//! * a deterministic discrete-event simulator with naive, priority and
//!   sandwiching schedulers ([`queue`]);
//! * CFMM pricing with sandwich construction and payoff analysis ([`cfmm`]);
//! * zero-intelligence order flow and Monte Carlo execution-price
//!   statistics with Chebyshev execution guarantees ([`orderflow`]);
//! * estimation of the model's determining lists from confirmed-block CSV
//!   exports ([`ingest`]).

pub mod analytics;
pub mod cfmm;
pub mod error;
pub mod ingest;
pub mod orderflow;
pub mod queue;
pub mod state;
pub mod stats;

pub use analytics::{
    chi_root_approximation, exact_k_distributions, geometric_inputs, solve_chi_root,
    EmpiricalQueueInputs, ExactKDistributions, KDistributions, PriorityQueueModel,
    TransitionInputs,
};
pub use cfmm::{
    apply_order, cpmm_rule, exchange_out, is_strictly_convex, memoryless_sandwich_payoff,
    swap_payoff, CfmmState, ConstantSum, Cpmm, MarketOrder, PricingRule, SandwichTriple,
};
pub use error::{Error, Result};
pub use ingest::{estimate, load_blocks, BlockDataRow, EmpiricalEstimate};
pub use orderflow::{
    chebyshev_guarantee, geometric_reserve_moments, mc_execution_price, reserve_moments_wald,
    sample_zi_flow, KModel, McReport, OrderSizeLaw,
};
pub use queue::{
    run_simulation, sample_arrivals, BlockRecord, BlockTimeLaw, Message, SchedulerKind, SimConfig,
    SimTrace,
};
pub use state::{
    apply_translation, apply_value_transfer, BalancedTranslation, TokenBalanceState, ValueTransfer,
};
