//! Exact K-distributions for the geometric (exponential block time) model by
//! forward iteration of the run-conditioned embedded chain.
//!
//! The assembled `KDistributions` tables treat consecutive full blocks as a
//! memoryless coin, i.e. they approximate the conditional law of the pool
//! size during a run of full blocks by its one-step version. That is exact
//! for K' in {0, 1} but drifts for longer runs: surviving a full block tilts
//! the pool upward, so escape hazards decay below the one-step value and the
//! true K' tail is heavier than geometric. At high load the gap is large
//! (total variation around 0.3 at load 0.9).
//!
//! This module computes the exact joint law instead. Starting from the
//! stationary pmf, repeatedly restrict to {N >= beta}, shift by the served
//! batch and convolve with the arrival count S. The sub-probability vector
//! after k steps evaluated below beta is exactly P(K' = k, position = x) for
//! an observer whose first block is a stationary one.

use serde::{Deserialize, Serialize};

use super::PriorityQueueModel;
use crate::error::{Error, Result};

/// Residual run mass at which the sweep stops.
const MASS_EPS: f64 = 1e-12;

/// Truncation tolerance for the stationary support.
const SUPPORT_EPS: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactKDistributions {
    pub beta: usize,
    /// P(K' = k) for k below the table length.
    pub kprime: Vec<f64>,
    /// Run mass beyond the table (unescaped within the sweep horizon).
    pub kprime_tail: f64,
    /// P(K'' = k | K' = 0), length beta. Identical to the one-step table.
    pub kpp_first: Vec<f64>,
    /// P(K'' = k | K' > 0) pooled over all later blocks, length beta.
    pub kpp_later: Vec<f64>,
    /// Stationary pool-size pmf used by the sweep.
    pub n_pmf: Vec<f64>,
}

/// Runs the sweep for at most `kmax` blocks. The state cap is chosen so the
/// neglected stationary tail is below 1e-13; the returned `kprime_tail`
/// reports whatever run mass is still alive after `kmax` steps.
pub fn exact_k_distributions(
    model: &PriorityQueueModel,
    kmax: usize,
) -> Result<ExactKDistributions> {
    let beta = model.beta;
    let p = model.p;
    let sigma = model.q;
    if kmax == 0 {
        return Err(Error::InvalidParameter("kmax must be positive".into()));
    }

    if p == 0.0 {
        // empty queue: the observer always lands in the first block at slot 0
        let mut first = vec![0.0; beta];
        first[0] = 1.0;
        return Ok(ExactKDistributions {
            beta,
            kprime: vec![1.0],
            kprime_tail: 0.0,
            kpp_first: first,
            kpp_later: vec![0.0; beta],
            n_pmf: {
                let mut v = vec![0.0; beta];
                v[0] = 1.0;
                v
            },
        });
    }

    let cap = support_cap(p, beta);
    let n_pmf: Vec<f64> = {
        let mut pmf = Vec::with_capacity(cap + 1);
        let mut mass = 1.0 - p;
        for _ in 0..=cap {
            pmf.push(mass);
            mass *= p;
        }
        pmf
    };

    let mut nu = n_pmf.clone();
    let mut kprime = Vec::new();
    let mut kpp_first = vec![0.0; beta];
    let mut kpp_later = vec![0.0; beta];
    let mut shifted = vec![0.0; cap + 1];

    for k in 0..kmax {
        let escaped: f64 = nu[..beta.min(nu.len())].iter().sum();
        kprime.push(escaped);
        if k == 0 {
            kpp_first.copy_from_slice(&nu[..beta]);
        } else {
            for x in 0..beta {
                kpp_later[x] += nu[x];
            }
        }

        // restrict to {N >= beta} and serve one batch
        shifted.iter_mut().for_each(|v| *v = 0.0);
        let mut alive = 0.0;
        for i in beta..=cap {
            shifted[i - beta] = nu[i];
            alive += nu[i];
        }
        if alive < MASS_EPS {
            let first_mass: f64 = kpp_first.iter().sum();
            let later_mass: f64 = kpp_later.iter().sum();
            return Ok(ExactKDistributions {
                beta,
                kprime,
                kprime_tail: alive,
                kpp_first: normalise(kpp_first, first_mass),
                kpp_later: normalise(kpp_later, later_mass),
                n_pmf,
            });
        }

        // convolve with geometric S via the one-pole recurrence:
        // out[m] = sigma * out[m-1] + (1-sigma) * shifted[m]
        let mut acc = 0.0;
        for m in 0..=cap {
            acc = sigma * acc + (1.0 - sigma) * shifted[m];
            nu[m] = acc;
        }
    }

    let alive: f64 = nu.iter().sum();
    let first_mass: f64 = kpp_first.iter().sum();
    let later_mass: f64 = kpp_later.iter().sum();
    Ok(ExactKDistributions {
        beta,
        kprime,
        kprime_tail: alive,
        kpp_first: normalise(kpp_first, first_mass),
        kpp_later: normalise(kpp_later, later_mass),
        n_pmf,
    })
}

fn normalise(mut table: Vec<f64>, mass: f64) -> Vec<f64> {
    if mass > 0.0 {
        table.iter_mut().for_each(|v| *v /= mass);
    }
    table
}

fn support_cap(p: f64, beta: usize) -> usize {
    let from_tail = (SUPPORT_EPS.ln() / p.ln()).ceil() as usize;
    from_tail.max(8 * beta).max(64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{geometric_inputs, KDistributions};
    use crate::stats::tv_distance;

    #[test]
    fn matches_one_step_formulas_where_they_are_exact() {
        // P(K' = 0), P(K' = 1) and the first-block position law agree with
        // the assembled tables for any load.
        for (lam, beta) in [(0.5, 1usize), (1.8, 2), (4.5, 5)] {
            let model = PriorityQueueModel::new(lam, 1.0, beta).unwrap();
            let exact = exact_k_distributions(&model, 2000).unwrap();
            let formula = KDistributions::from_inputs(&geometric_inputs(&model), 64).unwrap();
            assert!((exact.kprime[0] - formula.p_kprime[0]).abs() < 1e-10);
            assert!((exact.kprime[1] - formula.p_kprime[1]).abs() < 1e-10);
            assert!(tv_distance(&exact.kpp_first, &formula.p_kpp_first) < 1e-10);
        }
    }

    #[test]
    fn mm1_two_step_run_probability() {
        // beta = 1, lambda = 1, mu = 2: p = 1/2, S geometric with failure 1/3.
        // P(K' = 2) = P(N0 >= 1, N1 >= 1, N2 = 0) = 5/54, strictly below the
        // memoryless value 1/9.
        let model = PriorityQueueModel::new(1.0, 2.0, 1).unwrap();
        let exact = exact_k_distributions(&model, 2000).unwrap();
        assert!((exact.kprime[2] - 5.0 / 54.0).abs() < 1e-12);
        let formula = KDistributions::from_inputs(&geometric_inputs(&model), 8).unwrap();
        assert!((formula.p_kprime[2] - 1.0 / 9.0).abs() < 1e-12);
        assert!(exact.kprime[2] < formula.p_kprime[2]);
    }

    #[test]
    fn mass_accounting() {
        let model = PriorityQueueModel::new(4.5, 1.0, 5).unwrap();
        let exact = exact_k_distributions(&model, 4000).unwrap();
        let total: f64 = exact.kprime.iter().sum::<f64>() + exact.kprime_tail;
        assert!((total - 1.0).abs() < 1e-9);
        assert!((exact.kpp_first.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((exact.kpp_later.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn light_load_agrees_with_memoryless_tables() {
        let model = PriorityQueueModel::new(1.0, 1.0, 5).unwrap();
        let exact = exact_k_distributions(&model, 2000).unwrap();
        let formula = KDistributions::from_inputs(&geometric_inputs(&model), 256).unwrap();
        let formula_kprime: Vec<f64> = (0..exact.kprime.len())
            .map(|k| formula.kprime_pmf(k))
            .collect();
        assert!(tv_distance(&exact.kprime, &formula_kprime) < 1e-3);
        assert!(tv_distance(&exact.kpp_later, &formula.p_kpp_later) < 5e-3);
    }

    #[test]
    fn heavy_load_tail_is_heavier_than_memoryless() {
        let model = PriorityQueueModel::new(1.8, 1.0, 2).unwrap();
        let exact = exact_k_distributions(&model, 4000).unwrap();
        let formula = KDistributions::from_inputs(&geometric_inputs(&model), 256).unwrap();
        let formula_kprime: Vec<f64> = (0..exact.kprime.len())
            .map(|k| formula.kprime_pmf(k))
            .collect();
        let tv = tv_distance(&exact.kprime, &formula_kprime);
        assert!(tv > 0.2, "expected a large gap at load 0.9, got {tv}");
    }

    #[test]
    fn zero_arrivals_degenerate_case() {
        let model = PriorityQueueModel::new(0.0, 1.0, 3).unwrap();
        let exact = exact_k_distributions(&model, 100).unwrap();
        assert_eq!(exact.kprime, vec![1.0]);
        assert_eq!(exact.kpp_first[0], 1.0);
    }
}
