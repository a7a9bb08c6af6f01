//! Distributions of a tagged message's relative block number K', in-block
//! position K'' and message number K = beta*K' + K'' for the work-conserving
//! priority mempool.
//!
//! The embedded pool-size chain just before each block is a random walk
//! N' = max(N - beta, 0) + S with a barrier at zero, where S is the number of
//! high-priority arrivals per block interval. Everything a tagged observer
//! experiences is a functional of this chain:
//!
//!   * K' = 0 when the first block has room (N < beta), else the number of
//!     consecutive full blocks before one has room;
//!   * K'' is the number of higher-priority messages sharing its block.
//!
//! With Poisson arrivals and exponential block times N is stationary
//! geometric with failure probability p, the root of
//! chi(p) = mu p^(beta+1) - (lambda+mu) p + lambda in (0, 1), and S is
//! geometric with failure probability q = lambda / (lambda + mu).

pub mod chi;
pub mod empirical;
pub mod exact;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::neumaier_sum;

pub use chi::{chi, chi_root_approximation, solve_chi_root, CHI_RTOL};
pub use exact::{exact_k_distributions, ExactKDistributions};

/// Tolerance for "table sums to one" validation.
pub const TABLE_ATOL: f64 = 1e-9;

/// Stable priority-queue model: rates, block size and the derived geometric
/// parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorityQueueModel {
    pub lambda_high: f64,
    pub mu: f64,
    pub beta: usize,
    /// Failure probability of the stationary pool size N: root of chi in [0, 1).
    pub p: f64,
    /// Failure (continuation) probability of the per-interval arrival count S:
    /// q = lambda / (lambda + mu), so P(S = k) = (1 - q) q^k.
    pub q: f64,
}

impl PriorityQueueModel {
    pub fn new(lambda_high: f64, mu: f64, beta: usize) -> Result<Self> {
        let p = solve_chi_root(lambda_high, mu, beta)?;
        let q = lambda_high / (lambda_high + mu);
        Ok(Self {
            lambda_high,
            mu,
            beta,
            p,
            q,
        })
    }

    /// Stationary pool-size pmf P(N = n) = (1-p) p^n up to `support`.
    pub fn n_pmf(&self, support: usize) -> Vec<f64> {
        geometric_pmf(self.p, support)
    }

    /// Arrivals-per-interval pmf P(S = k) = (1-q) q^k up to `support`.
    pub fn s_pmf(&self, support: usize) -> Vec<f64> {
        geometric_pmf(self.q, support)
    }
}

fn geometric_pmf(failure: f64, support: usize) -> Vec<f64> {
    let mut pmf = Vec::with_capacity(support);
    let mut mass = 1.0 - failure;
    for _ in 0..support {
        pmf.push(mass);
        mass *= failure;
    }
    pmf
}

/// The finite determining lists for the message-number distribution:
/// P(N = n) for n < 2*beta and P(S = k) for k < beta. Everything the K
/// pipeline needs reduces to these 3*beta numbers.
///
/// `tail_mass` is P(N >= 2*beta), the pool-size mass beyond the stored
/// window. It is mathematically redundant (1 minus the table sum) but
/// evaluating that difference in doubles loses all precision when the tail
/// is small, and the tail is exactly what conditions the transition row;
/// constructors that know it exactly set it explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalQueueInputs {
    pub beta: usize,
    /// P(N = n) for n = 0 .. 2*beta - 1.
    pub prob_n: Vec<f64>,
    /// P(S = k) for k = 0 .. beta - 1.
    pub prob_s: Vec<f64>,
    /// P(N >= 2*beta).
    pub tail_mass: f64,
}

impl EmpiricalQueueInputs {
    /// Builds inputs from bare tables, inferring the tail mass from the
    /// complement of the table sum (compensated summation; fine for
    /// measured tables whose estimation noise dominates).
    pub fn new(beta: usize, prob_n: Vec<f64>, prob_s: Vec<f64>) -> Result<Self> {
        let (sum, comp) = neumaier_sum(&prob_n);
        let tail = ((1.0 - sum) - comp).max(0.0);
        Self::with_tail_mass(beta, prob_n, prob_s, tail)
    }

    /// Builds inputs with an explicitly known P(N >= 2*beta).
    pub fn with_tail_mass(
        beta: usize,
        prob_n: Vec<f64>,
        prob_s: Vec<f64>,
        tail_mass: f64,
    ) -> Result<Self> {
        if beta == 0 {
            return Err(Error::InvalidParameter("beta must be at least 1".into()));
        }
        if prob_n.len() != 2 * beta {
            return Err(Error::InvalidParameter(format!(
                "prob_n must have 2*beta = {} entries, got {}",
                2 * beta,
                prob_n.len()
            )));
        }
        if prob_s.len() != beta {
            return Err(Error::InvalidParameter(format!(
                "prob_s must have beta = {beta} entries, got {}",
                prob_s.len()
            )));
        }
        if !(0.0..=1.0).contains(&tail_mass) {
            return Err(Error::InvalidParameter(format!(
                "tail mass {tail_mass} outside [0, 1]"
            )));
        }
        for table in [&prob_n, &prob_s] {
            let mut partial = 0.0;
            for &v in table.iter() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidParameter(format!(
                        "table entry {v} outside [0, 1]"
                    )));
                }
                partial += v;
            }
            if partial > 1.0 + TABLE_ATOL {
                return Err(Error::InvalidParameter(format!(
                    "table partial sum {partial} exceeds 1"
                )));
            }
        }
        Ok(Self {
            beta,
            prob_n,
            prob_s,
            tail_mass,
        })
    }

    /// Inputs for independently chosen geometric laws: N with failure
    /// probability `p`, S with failure probability `q`. The tail mass is
    /// p^(2*beta) exactly.
    pub fn geometric(p: f64, q: f64, beta: usize) -> Result<Self> {
        for v in [p, q] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "geometric failure probability {v} outside [0, 1)"
                )));
            }
        }
        Self::with_tail_mass(
            beta,
            geometric_pmf(p, 2 * beta),
            geometric_pmf(q, beta),
            p.powi(2 * beta as i32),
        )
    }

    /// P(N < beta).
    pub fn prob_n_below(&self) -> f64 {
        self.prob_n[..self.beta].iter().sum()
    }

    /// P(N >= beta): the stored window [beta, 2*beta) plus the explicit
    /// tail. All terms are non-negative, so no cancellation.
    pub fn prob_n_geq(&self) -> f64 {
        self.prob_n[self.beta..].iter().sum::<f64>() + self.tail_mass
    }

    /// P(S = k), zero beyond the stored table.
    fn s(&self, k: isize) -> f64 {
        if k < 0 {
            0.0
        } else {
            self.prob_s.get(k as usize).copied().unwrap_or(0.0)
        }
    }
}

impl From<&PriorityQueueModel> for EmpiricalQueueInputs {
    fn from(model: &PriorityQueueModel) -> Self {
        Self::geometric(model.p, model.q, model.beta).expect("model parameters are in range")
    }
}

/// Geometric-case determining lists for the given model.
pub fn geometric_inputs(model: &PriorityQueueModel) -> EmpiricalQueueInputs {
    EmpiricalQueueInputs::from(model)
}

/// One-step transition probability out of a full pool into a block with k
/// spare-slots-filling high-priority messages:
///
///   P^{>=beta}_k = sum_{j=0..beta-1} P(N = beta + j) P(S = k - j) / P(N >= beta)
///
/// for 0 <= k < beta. States N >= 2*beta cannot reach any k < beta in one
/// step (the walk drops by at most beta), so the numerator window
/// [beta, 2*beta - 1] is exhaustive and the stored tables determine the value
/// exactly; the denominator is the full tail mass P(N >= beta).
pub fn transition_prob(inputs: &EmpiricalQueueInputs, target_k: usize) -> Result<f64> {
    let beta = inputs.beta;
    if target_k >= beta {
        return Err(Error::InvalidParameter(format!(
            "target_k must be below beta = {beta}, got {target_k}"
        )));
    }
    let denom = inputs.prob_n_geq();
    if denom <= 0.0 {
        return Err(Error::ZeroMassConditioning("P(N >= beta) = 0".into()));
    }
    let mut num = 0.0;
    for j in 0..beta.min(target_k + 1) {
        num += inputs.prob_n[beta + j] * inputs.s(target_k as isize - j as isize);
    }
    Ok(num / denom)
}

/// All transition probabilities P^{>=beta}_k for k = 0 .. beta - 1.
pub fn transition_table(inputs: &EmpiricalQueueInputs) -> Result<Vec<f64>> {
    (0..inputs.beta)
        .map(|k| transition_prob(inputs, k))
        .collect()
}

/// Geometric-case closed form of the transition probability:
///
///   P^{>=beta}_k = (1-p)(1-q) sum_{i=0..k} p^i q^(k-i)
pub fn transition_prob_closed_form(p: f64, q: f64, k: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..=k {
        sum += p.powi(i as i32) * q.powi((k - i) as i32);
    }
    (1.0 - p) * (1.0 - q) * sum
}

/// Geometric-case closed form of the escape mass:
///
///   P^{>=beta}_{<beta} = (1-p) sum_{i=0..beta-1} p^i (1 - q^(beta-i))
pub fn escape_mass_closed_form(p: f64, q: f64, beta: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..beta {
        sum += p.powi(i as i32) * (1.0 - q.powi((beta - i) as i32));
    }
    (1.0 - p) * sum
}

/// The alternative finite determining lists: the head of the pool-size law
/// and the measured transition row, as estimated from confirmed blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionInputs {
    pub beta: usize,
    /// P(N = n) for n = 0 .. beta - 1.
    pub prob_n_head: Vec<f64>,
    /// P^{>=beta}_k for k = 0 .. beta - 1.
    pub trans: Vec<f64>,
}

impl TransitionInputs {
    pub fn new(beta: usize, prob_n_head: Vec<f64>, trans: Vec<f64>) -> Result<Self> {
        if beta == 0 {
            return Err(Error::InvalidParameter("beta must be at least 1".into()));
        }
        if prob_n_head.len() != beta || trans.len() != beta {
            return Err(Error::InvalidParameter(format!(
                "prob_n_head and trans must both have beta = {beta} entries"
            )));
        }
        for table in [&prob_n_head, &trans] {
            let sum: f64 = table.iter().sum();
            if table.iter().any(|v| !(0.0..=1.0).contains(v)) || sum > 1.0 + TABLE_ATOL {
                return Err(Error::InvalidParameter(
                    "table entries must lie in [0, 1] with sum at most 1".into(),
                ));
            }
        }
        Ok(Self {
            beta,
            prob_n_head,
            trans,
        })
    }
}

/// The assembled distribution tables for K', K'' and the head of K.
///
/// K' is stored as a finite table plus the geometric continuation ratio
/// P^{>=beta}_{>=beta}; the tail beyond the table follows
/// P(K' = k+1) = ratio * P(K' = k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KDistributions {
    pub beta: usize,
    /// P(K' = k) for k = 0 .. table length - 1.
    pub p_kprime: Vec<f64>,
    /// Geometric continuation ratio of the K' tail.
    pub kprime_cont: f64,
    /// P(K'' = k | K' = 0), length beta.
    pub p_kpp_first: Vec<f64>,
    /// P(K'' = k | K' > 0), length beta; conditionally independent of K'
    /// given K' > 0, so one table serves every later block.
    pub p_kpp_later: Vec<f64>,
    /// P(K = k) = P(N = k) for k < beta.
    pub p_k_head: Vec<f64>,
}

impl KDistributions {
    /// Builds every table from the (P(N), P(S)) determining lists via the
    /// transition row.
    pub fn from_inputs(inputs: &EmpiricalQueueInputs, kprime_len: usize) -> Result<Self> {
        let trans = transition_table(inputs)?;
        let head: Vec<f64> = inputs.prob_n[..inputs.beta].to_vec();
        Self::assemble(inputs.beta, head, trans, inputs.prob_n_geq(), kprime_len)
    }

    /// Builds every table from the measured (N head, transition row) lists.
    pub fn from_transitions(inputs: &TransitionInputs, kprime_len: usize) -> Result<Self> {
        let (sum, comp) = neumaier_sum(&inputs.prob_n_head);
        let geq = ((1.0 - sum) - comp).max(0.0);
        Self::assemble(
            inputs.beta,
            inputs.prob_n_head.clone(),
            inputs.trans.clone(),
            geq,
            kprime_len,
        )
    }

    fn assemble(
        beta: usize,
        prob_n_head: Vec<f64>,
        trans: Vec<f64>,
        geq: f64,
        kprime_len: usize,
    ) -> Result<Self> {
        if kprime_len == 0 {
            return Err(Error::InvalidParameter(
                "kprime table needs at least one entry".into(),
            ));
        }
        let below = prob_n_head.iter().sum::<f64>().min(1.0);
        let escape: f64 = trans.iter().sum();
        let cont = (1.0 - escape).max(0.0);

        // P(K' = 0) = P(N < beta); for k >= 1 the conditional run is
        // geometric: P(K' = k) = P(N >= beta) cont^(k-1) escape.
        let mut p_kprime = Vec::with_capacity(kprime_len);
        p_kprime.push(below);
        let mut mass = geq * escape;
        for _ in 1..kprime_len {
            p_kprime.push(mass);
            mass *= cont;
        }

        let p_kpp_first = if below > 0.0 {
            prob_n_head.iter().map(|v| v / below).collect()
        } else {
            return Err(Error::ZeroMassConditioning("P(N < beta) = 0".into()));
        };

        let p_kpp_later: Vec<f64> = if geq == 0.0 {
            // the first block always has room; the later-block table is
            // never sampled and stays empty
            vec![0.0; beta]
        } else if escape > 0.0 {
            trans.iter().map(|v| v / escape).collect()
        } else {
            return Err(Error::ZeroMassConditioning("P^{>=beta}_{<beta} = 0".into()));
        };

        Ok(Self {
            beta,
            p_kprime,
            kprime_cont: cont,
            p_kpp_first,
            p_kpp_later,
            p_k_head: prob_n_head,
        })
    }

    /// P(K' = k) including the geometric tail beyond the stored table.
    pub fn kprime_pmf(&self, k: usize) -> f64 {
        if k < self.p_kprime.len() {
            self.p_kprime[k]
        } else {
            let last = *self.p_kprime.last().unwrap();
            last * self.kprime_cont.powi((k - self.p_kprime.len() + 1) as i32)
        }
    }

    /// Total K' mass accounting for the geometric tail closure.
    pub fn kprime_total_mass(&self) -> f64 {
        let head: f64 = self.p_kprime.iter().sum();
        let tail = if self.kprime_cont < 1.0 && self.p_kprime.len() > 1 {
            self.p_kprime.last().unwrap() * self.kprime_cont / (1.0 - self.kprime_cont)
        } else {
            0.0
        };
        head + tail
    }

    /// P(K = k) for k <= k_max via K = beta K' + K'', plus the unreported
    /// tail mass. The head (k < beta) equals P(N = k); later blocks compose
    /// the K' pmf with the later-block position table.
    pub fn full_k(&self, k_max: usize) -> (Vec<f64>, f64) {
        let mut pmf = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            let kp = k / self.beta;
            let kpp = k % self.beta;
            let v = if kp == 0 {
                self.p_k_head[kpp]
            } else {
                self.kprime_pmf(kp) * self.p_kpp_later[kpp]
            };
            pmf.push(v);
        }
        let tail = (1.0 - pmf.iter().sum::<f64>()).max(0.0);
        (pmf, tail)
    }

    /// Checks non-negativity and closure of every table.
    pub fn validate(&self) -> Result<()> {
        for (name, table) in [
            ("kpp_first", &self.p_kpp_first),
            ("kpp_later", &self.p_kpp_later),
        ] {
            if table.iter().any(|v| *v < 0.0) {
                return Err(Error::NumericalInstability(format!(
                    "{name} has a negative entry"
                )));
            }
            let sum: f64 = table.iter().sum();
            if name == "kpp_later" && sum == 0.0 {
                continue;
            }
            if (sum - 1.0).abs() > TABLE_ATOL {
                return Err(Error::NumericalInstability(format!(
                    "{name} sums to {sum}, expected 1"
                )));
            }
        }
        let total = self.kprime_total_mass();
        if (total - 1.0).abs() > TABLE_ATOL {
            return Err(Error::NumericalInstability(format!(
                "K' mass with tail closure is {total}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Distribution of the relative block number K'.
pub fn kprime_distribution(inputs: &EmpiricalQueueInputs, len: usize) -> Result<KDistributions> {
    KDistributions::from_inputs(inputs, len)
}

/// P(K'' = k | K' = 0): the pool-size head renormalised to {N < beta}.
pub fn kpp_first_block(inputs: &EmpiricalQueueInputs) -> Result<Vec<f64>> {
    Ok(KDistributions::from_inputs(inputs, 2)?.p_kpp_first)
}

/// P(K'' = k | K' > 0): the transition row renormalised to its escape mass.
pub fn kpp_later_blocks(inputs: &EmpiricalQueueInputs) -> Result<Vec<f64>> {
    let dists = KDistributions::from_inputs(inputs, 2)?;
    if dists.p_kpp_later.iter().sum::<f64>() == 0.0 {
        return Err(Error::ZeroMassConditioning("P(K' > 0) = 0".into()));
    }
    Ok(dists.p_kpp_later)
}

/// P(K = k) = P(N = k) for k < beta.
pub fn k_head_distribution(inputs: &EmpiricalQueueInputs) -> Vec<f64> {
    inputs.prob_n[..inputs.beta].to_vec()
}

/// P(K = k) for k <= k_max with the unreported tail mass.
pub fn full_k_distribution(inputs: &EmpiricalQueueInputs, k_max: usize) -> Result<(Vec<f64>, f64)> {
    let len = k_max / inputs.beta + 2;
    Ok(KDistributions::from_inputs(inputs, len)?.full_k(k_max))
}

/// Poisson pmf table, for the arrivals-per-interval law under constant block
/// times (S ~ Poisson(lambda / mu)).
pub fn poisson_pmf(rate: f64, support: usize) -> Vec<f64> {
    assert!(rate >= 0.0 && rate.is_finite());
    let mut pmf = Vec::with_capacity(support);
    let mut mass = (-rate).exp();
    for k in 0..support {
        pmf.push(mass);
        mass *= rate / (k as f64 + 1.0);
    }
    pmf
}
