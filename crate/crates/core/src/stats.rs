//! Small statistical helpers shared across the crate.

/// Pairwise (cascade) summation. Order-stable: the result depends only on the
/// order of `xs`, never on chunking by threads, so parallel producers that
/// collect into index order get bit-identical reductions.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BASE: usize = 128;
    if xs.len() <= BASE {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Neumaier-compensated summation: returns (sum, compensation) with
/// sum + compensation accurate to a few ulps of the true total even under
/// heavy cancellation against the running sum.
pub fn neumaier_sum(xs: &[f64]) -> (f64, f64) {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for &x in xs {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    (s, c)
}

/// Sample mean and unbiased sample variance (two-pass, pairwise sums).
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 2, "need at least two samples");
    let mean = pairwise_sum(xs) / n as f64;
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n as f64 - 1.0);
    (mean, var)
}

/// Fourth central sample moment, used for the standard error of a variance
/// estimate: se(s^2) ~ sqrt((m4 - s^4)/n).
pub fn fourth_central_moment(xs: &[f64], mean: f64) -> f64 {
    let q: Vec<f64> = xs
        .iter()
        .map(|x| {
            let d = x - mean;
            d * d * d * d
        })
        .collect();
    pairwise_sum(&q) / xs.len() as f64
}

/// Total variation distance between two (sub-)probability vectors.
///
/// Vectors are zero-padded to a common length and any mass missing from
/// either table (1 - sum, clamped at zero) is compared as one lumped tail
/// cell, so distributions with infinite support can be compared through
/// finite tables.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    let mut acc = 0.0;
    let mut mass_p = 0.0;
    let mut mass_q = 0.0;
    for i in 0..len {
        let a = p.get(i).copied().unwrap_or(0.0);
        let b = q.get(i).copied().unwrap_or(0.0);
        acc += (a - b).abs();
        mass_p += a;
        mass_q += b;
    }
    let tail_p = (1.0 - mass_p).max(0.0);
    let tail_q = (1.0 - mass_q).max(0.0);
    0.5 * (acc + (tail_p - tail_q).abs())
}

/// Normalised histogram of non-negative integer samples.
pub fn histogram(samples: impl IntoIterator<Item = usize>, support: usize) -> Vec<f64> {
    let mut counts = vec![0u64; support];
    let mut total = 0u64;
    for s in samples {
        if s < support {
            counts[s] += 1;
        }
        // values beyond the support stay in the implicit tail cell
        total += 1;
    }
    if total == 0 {
        return vec![0.0; support];
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // clamp so the interval always contains the point estimate despite
    // rounding at the endpoints
    (
        ((centre - spread) / denom).max(0.0).min(p),
        ((centre + spread) / denom).min(1.0).max(p),
    )
}

/// One-sample Kolmogorov-Smirnov statistic against Exp(rate).
pub fn ks_statistic_exponential(samples: &mut [f64], rate: f64) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in samples.iter().enumerate() {
        let cdf = 1.0 - (-rate * x).exp();
        let hi = (i as f64 + 1.0) / n - cdf;
        let lo = cdf - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
    }

    #[test]
    fn tv_of_identical_tables_is_zero() {
        let p = [0.5, 0.25, 0.25];
        assert_eq!(tv_distance(&p, &p), 0.0);
    }

    #[test]
    fn tv_counts_lumped_tails() {
        // p has 0.5 unaccounted tail mass, q is fully accounted.
        let p = [0.5];
        let q = [0.5, 0.5];
        assert!((tv_distance(&p, &q) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tv_is_symmetric_and_bounded() {
        let p = [0.2, 0.3, 0.5];
        let q = [0.6, 0.4];
        assert!((tv_distance(&p, &q) - tv_distance(&q, &p)).abs() < 1e-15);
        assert!(tv_distance(&p, &q) <= 1.0);
    }

    #[test]
    fn wilson_contains_point_estimate() {
        let (lo, hi) = wilson_interval(30, 100, 1.96);
        assert!(lo < 0.3 && 0.3 < hi);
        assert!(lo > 0.2 && hi < 0.41);
    }

    #[test]
    fn wilson_edge_cases() {
        let (lo, hi) = wilson_interval(0, 50, 1.96);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.15);
        let (lo, hi) = wilson_interval(50, 50, 1.96);
        assert!(lo > 0.9 && hi == 1.0);
    }

    #[test]
    fn mean_variance_of_constant_sequence() {
        let xs = [3.0; 10];
        let (m, v) = mean_variance(&xs);
        assert_eq!(m, 3.0);
        assert_eq!(v, 0.0);
    }
}
