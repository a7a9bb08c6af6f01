//! Zero-intelligence order flow and Monte Carlo execution-price statistics.
//!
//! An order executes after a random prefix of K i.i.d. market orders has
//! moved the pool. The numeraire reserve at execution is a random walk
//! stopped after K steps, so its moments follow from Wald's identity and the
//! law of total variance:
//!
//! ```text
//! E[Phi_A]   = phi_0 + E[K] E[X]
//! Var[Phi_A] = Var[K] E[X]^2 + E[K] Var[X]
//! ```
//!
//! The realised execution price itself goes through the pricing rule, where
//! closed forms stop being convenient; `mc_execution_price` estimates its
//! moments by Monte Carlo with deterministic per-replication seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cfmm::{apply_order, CfmmState, MarketOrder};
use crate::error::{Error, Result};
use crate::stats::{mean_variance, pairwise_sum};

/// Signed order-size law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrderSizeLaw {
    /// Uniform on [-l, l] \ {0}: zero mean, variance l^2 / 3.
    UniformSymmetric { l: f64 },
    /// Resampling from an observed list of signed sizes.
    Empirical { sizes: Vec<f64> },
}

impl OrderSizeLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::UniformSymmetric { l } => {
                if !l.is_finite() || *l <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "uniform size bound must be positive, got {l}"
                    )));
                }
            }
            Self::Empirical { sizes } => {
                if sizes.is_empty() {
                    return Err(Error::InvalidParameter(
                        "empirical law needs at least one size".into(),
                    ));
                }
                if sizes.iter().any(|s| !s.is_finite() || *s == 0.0) {
                    return Err(Error::InvalidParameter(
                        "empirical sizes must be finite and non-zero".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::UniformSymmetric { .. } => 0.0,
            Self::Empirical { sizes } => pairwise_sum(sizes) / sizes.len() as f64,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Self::UniformSymmetric { l } => l * l / 3.0,
            Self::Empirical { sizes } => {
                let m = self.mean();
                let sq: Vec<f64> = sizes.iter().map(|s| (s - m) * (s - m)).collect();
                pairwise_sum(&sq) / sizes.len() as f64
            }
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            Self::UniformSymmetric { l } => loop {
                let x = rng.gen_range(-*l..=*l);
                if x != 0.0 {
                    return x;
                }
            },
            Self::Empirical { sizes } => sizes[rng.gen_range(0..sizes.len())],
        }
    }
}

/// Law of the prefix length K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KModel {
    Fixed {
        k: usize,
    },
    /// P(K = k) = (1 - p) p^k.
    Geometric {
        p: f64,
    },
    /// Explicit pmf table; any missing mass goes to the last index.
    Table {
        pmf: Vec<f64>,
    },
}

impl KModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Fixed { .. } => Ok(()),
            Self::Geometric { p } => {
                if !(0.0..1.0).contains(p) {
                    return Err(Error::InvalidParameter(format!(
                        "geometric parameter {p} outside [0, 1)"
                    )));
                }
                Ok(())
            }
            Self::Table { pmf } => {
                if pmf.is_empty() || pmf.iter().any(|v| *v < 0.0) {
                    return Err(Error::InvalidParameter(
                        "pmf table must be non-empty and non-negative".into(),
                    ));
                }
                let total: f64 = pmf.iter().sum();
                if total <= 0.0 || total > 1.0 + 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "pmf table mass {total} outside (0, 1]"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        match self {
            Self::Fixed { k } => *k,
            Self::Geometric { p } => {
                if *p == 0.0 {
                    return 0;
                }
                let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                (u.ln() / p.ln()).floor() as usize
            }
            Self::Table { pmf } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (k, &w) in pmf.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        return k;
                    }
                }
                pmf.len() - 1
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Fixed { k } => *k as f64,
            Self::Geometric { p } => p / (1.0 - p),
            Self::Table { pmf } => pmf.iter().enumerate().map(|(k, w)| k as f64 * w).sum(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Self::Fixed { .. } => 0.0,
            Self::Geometric { p } => p / ((1.0 - p) * (1.0 - p)),
            Self::Table { pmf } => {
                let m = self.mean();
                pmf.iter()
                    .enumerate()
                    .map(|(k, w)| (k as f64 - m) * (k as f64 - m) * w)
                    .sum()
            }
        }
    }
}

/// n i.i.d. draws from the size law.
pub fn sample_zi_flow(law: &OrderSizeLaw, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| law.sample(rng)).collect()
}

/// Wald / total-variance moments of the stopped reserve walk:
/// `(E[K] E[X], Var[K] E[X]^2 + E[K] Var[X])`.
pub fn reserve_moments_wald(e_k: f64, var_k: f64, law: &OrderSizeLaw) -> (f64, f64) {
    let ex = law.mean();
    let vx = law.variance();
    (e_k * ex, var_k * ex * ex + e_k * vx)
}

/// Geometric-K specialisation: `E[K] = p/(1-p)`, `Var[K] = p/(1-p)^2`, shifted
/// to the starting reserve.
pub fn geometric_reserve_moments(p: f64, law: &OrderSizeLaw, phi_a0: f64) -> (f64, f64) {
    assert!((0.0..1.0).contains(&p), "p must lie in [0, 1)");
    let e_k = p / (1.0 - p);
    let var_k = p / ((1.0 - p) * (1.0 - p));
    let (shift, var) = reserve_moments_wald(e_k, var_k, law);
    (phi_a0 + shift, var)
}

/// Chebyshev band: deviations of at least `k * cv` around the forecast have
/// probability at most 1/k^2.
pub fn chebyshev_guarantee(cv: f64, k: f64) -> (f64, f64) {
    assert!(cv >= 0.0 && k > 0.0);
    (k * cv, 1.0 / (k * k))
}

/// Monte Carlo summary of the execution price and the pre-execution reserve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub n_samples: usize,
    pub n_rejected: usize,
    pub rejection_fraction: f64,
    /// Quote at the starting reserves (zero-prefix price).
    pub forecast_price: f64,
    pub mean_price: f64,
    pub var_price: f64,
    /// Coefficient of variation sigma / mean.
    pub cv_price: f64,
    pub mean_reserve_a: f64,
    pub var_reserve_a: f64,
}

impl McReport {
    /// Price interval derived only from (mean, cv): outside it with
    /// probability at most 1/k^2.
    pub fn chebyshev_band(&self, k: f64) -> (f64, f64) {
        let (halfwidth, _) = chebyshev_guarantee(self.cv_price, k);
        (
            self.mean_price * (1.0 - halfwidth),
            self.mean_price * (1.0 + halfwidth),
        )
    }
}

/// One replication's record, for optional per-replication dumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub index: usize,
    pub k: usize,
    pub reserve_a: f64,
    pub price: f64,
    pub rejected: bool,
}

/// Documented replication seeding: splitmix64 of master + (index + 1) *
/// golden gamma. Replications are independent given their streams and the
/// merge is order-stable, so thread count never changes the report.
pub fn replication_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add((index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Average price (B received or paid per unit A) of executing `order` at the
/// given state, and the UPDATED state. SELL orders that exhaust reserves are
/// errors.
fn execute_tagged(state: &CfmmState, order: &MarketOrder) -> Result<(f64, CfmmState)> {
    let after = apply_order(state, order)?;
    let delta_b = (after.reserve_b - state.reserve_b).abs();
    Ok((delta_b / order.signed_amount.abs(), after))
}

/// Monte Carlo execution-price statistics. Per replication: draw K, apply K
/// zero-intelligence orders, execute the tagged order and record its average
/// price. Replications in which any leg exhausts the reserves are rejected
/// and counted. Deterministic in (seed, inputs) regardless of thread count.
pub fn mc_execution_price(
    pool: &CfmmState,
    law: &OrderSizeLaw,
    k_model: &KModel,
    order: &MarketOrder,
    n_samples: usize,
    seed: u64,
) -> Result<McReport> {
    let (report, _) =
        mc_execution_price_with_samples(pool, law, k_model, order, n_samples, seed, false)?;
    Ok(report)
}

/// As `mc_execution_price`, optionally returning every replication record.
pub fn mc_execution_price_with_samples(
    pool: &CfmmState,
    law: &OrderSizeLaw,
    k_model: &KModel,
    order: &MarketOrder,
    n_samples: usize,
    seed: u64,
    record: bool,
) -> Result<(McReport, Option<Vec<Replication>>)> {
    if n_samples < 2 {
        return Err(Error::InvalidParameter(
            "need at least two replications".into(),
        ));
    }
    law.validate()?;
    k_model.validate()?;

    let (forecast_price, _) = execute_tagged(pool, order)?;

    let reps: Vec<Replication> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(replication_seed(seed, i as u64));
            let k = k_model.sample(&mut rng);
            let mut state = pool.clone();
            for _ in 0..k {
                let size = law.sample(&mut rng);
                match apply_order(
                    &state,
                    &MarketOrder {
                        signed_amount: size,
                    },
                ) {
                    Ok(next) => state = next,
                    Err(_) => {
                        return Replication {
                            index: i,
                            k,
                            reserve_a: state.reserve_a,
                            price: f64::NAN,
                            rejected: true,
                        }
                    }
                }
            }
            match execute_tagged(&state, order) {
                Ok((price, _)) => Replication {
                    index: i,
                    k,
                    reserve_a: state.reserve_a,
                    price,
                    rejected: false,
                },
                Err(_) => Replication {
                    index: i,
                    k,
                    reserve_a: state.reserve_a,
                    price: f64::NAN,
                    rejected: true,
                },
            }
        })
        .collect();

    let accepted: Vec<&Replication> = reps.iter().filter(|r| !r.rejected).collect();
    let n_rejected = n_samples - accepted.len();
    if accepted.len() < 2 {
        return Err(Error::NumericalInstability(format!(
            "only {} replications accepted",
            accepted.len()
        )));
    }

    let prices: Vec<f64> = accepted.iter().map(|r| r.price).collect();
    let reserves: Vec<f64> = accepted.iter().map(|r| r.reserve_a).collect();
    let (mean_price, var_price) = mean_variance(&prices);
    let (mean_reserve_a, var_reserve_a) = mean_variance(&reserves);

    let report = McReport {
        n_samples,
        n_rejected,
        rejection_fraction: n_rejected as f64 / n_samples as f64,
        forecast_price,
        mean_price,
        var_price,
        cv_price: var_price.sqrt() / mean_price,
        mean_reserve_a,
        var_reserve_a,
    };
    Ok((report, record.then_some(reps)))
}
