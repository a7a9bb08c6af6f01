use thiserror::Error;

/// Errors produced by the analytics, simulation and ingestion layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The high-priority queue is unstable (arrival rate >= service capacity),
    /// so the characteristic polynomial has no root in (0, 1).
    #[error(
        "unstable queue (lambda_high = {lambda_high}, mu*beta = {capacity}): no root in (0, 1)"
    )]
    UnstableQueue { lambda_high: f64, capacity: f64 },

    #[error("root solver did not converge: |chi(p)| = {residual:.3e} at p = {p}")]
    RootNotConverged { p: f64, residual: f64 },

    #[error("conditioning event has zero mass: {0}")]
    ZeroMassConditioning(String),

    /// A balanced translation whose per-token column sums are not zero.
    #[error("malformed translation: token {token} has column sum {sum:.3e}")]
    UnbalancedTranslation { token: String, sum: f64 },

    #[error(
        "priority tie among candidates (priority = {0}); diffuse-priority hypothesis violated"
    )]
    PriorityTie(f64),

    #[error("injected message priority {injected} does not dominate pool priority {pool}")]
    InjectedNotDominant { injected: f64, pool: f64 },

    /// A SELL leg would drive the numeraire reserve to or below zero.
    #[error("reserves exhausted: sell of {amount} from reserve {reserve}")]
    ReservesExhausted { amount: f64, reserve: f64 },

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
