//! Root solver for the characteristic polynomial of the stationary
//! high-priority pool size under exponential block times:
//!
//!   chi(p) = mu * p^(beta+1) - (lambda + mu) * p + lambda
//!
//! chi always has the root p = 1; factoring it out,
//!
//!   chi(p) = (p - 1) * (mu * (p + p^2 + ... + p^beta) - lambda),
//!
//! so the root in (0, 1) solves g(p) = sum_{j=1}^{beta} p^j - lambda/mu,
//! which is strictly increasing with g(0) < 0 and g(1) = beta - lambda/mu.
//! A root in (0, 1) exists exactly when the queue is stable
//! (lambda < mu * beta), and g is monotone so bisection is safe; a Newton
//! polish recovers full double precision. Only the ratio lambda/mu enters,
//! which makes the root exactly scale invariant.

use crate::error::{Error, Result};

/// Residual bound for the solved root: |chi(p)| <= CHI_RTOL * (lambda + mu).
pub const CHI_RTOL: f64 = 1e-12;

/// geometric series sum_{j=1}^{beta} p^j and its derivative, by Horner.
fn series_and_deriv(p: f64, beta: usize) -> (f64, f64) {
    let mut s = 0.0;
    let mut ds = 0.0;
    for _ in 0..beta {
        ds = (1.0 + s) + p * ds;
        s = p * (1.0 + s);
    }
    (s, ds)
}

/// chi evaluated through the factored form, avoiding cancellation near p = 1.
pub fn chi(p: f64, lambda_high: f64, mu: f64, beta: usize) -> f64 {
    let (s, _) = series_and_deriv(p, beta);
    (p - 1.0) * (mu * s - lambda_high)
}

/// The unique root of chi in (0, 1) for a stable queue; 0 when
/// lambda_high = 0. Errors when lambda_high >= mu * beta.
pub fn solve_chi_root(lambda_high: f64, mu: f64, beta: usize) -> Result<f64> {
    if !lambda_high.is_finite() || lambda_high < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "lambda_high must be a non-negative finite number, got {lambda_high}"
        )));
    }
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "mu must be positive, got {mu}"
        )));
    }
    if beta == 0 {
        return Err(Error::InvalidParameter("beta must be at least 1".into()));
    }
    if lambda_high == 0.0 {
        return Ok(0.0);
    }
    let ratio = lambda_high / mu;
    if ratio >= beta as f64 {
        return Err(Error::UnstableQueue {
            lambda_high,
            capacity: mu * beta as f64,
        });
    }

    let g = |p: f64| series_and_deriv(p, beta).0 - ratio;

    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1e-300) {
            break;
        }
    }

    let mut p = 0.5 * (lo + hi);
    for _ in 0..8 {
        let (s, ds) = series_and_deriv(p, beta);
        if ds <= 0.0 {
            break;
        }
        let step = (s - ratio) / ds;
        let next = p - step;
        if !(0.0..1.0).contains(&next) {
            break;
        }
        p = next;
        if step.abs() <= f64::EPSILON * p {
            break;
        }
    }

    let residual = chi(p, lambda_high, mu, beta).abs();
    if residual > CHI_RTOL * (lambda_high + mu) {
        return Err(Error::RootNotConverged { p, residual });
    }
    Ok(p)
}

/// Large-beta approximation of the root: lambda / (lambda + mu), the
/// proportion of pool events that are arrivals. Good for moderate loads, but
/// its error is amplified by the exponent beta in quantities like 1 - p^beta.
pub fn chi_root_approximation(lambda_high: f64, mu: f64) -> f64 {
    assert!(mu > 0.0, "mu must be positive");
    lambda_high / (lambda_high + mu)
}
