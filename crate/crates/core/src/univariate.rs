//! Univariate mean estimators on `ℝ ∪ {⋆}`.

use crate::error::{Error, Result};
use crate::kolmogorov::{dist_to_realisable, EmpiricalSummary, RealisableSetSpec};
use crate::rng::Stream;
use crate::special::{golden_min, mean, median_in_place};
use crate::types::{observed_values, ExtendedValue};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// An estimate plus whatever diagnostics the estimator reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniEstimate {
    pub value: f64,
    #[serde(default)]
    pub meta: Map<String, Value>,
}

impl UniEstimate {
    fn new(value: f64) -> Self {
        Self {
            value,
            meta: Map::new(),
        }
    }

    fn with(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.meta.insert(key.to_string(), v.into());
        self
    }
}

/// Midrange of the observed values; 0 when nothing is observed.
pub fn average_of_extremes(sample: &[ExtendedValue]) -> UniEstimate {
    let obs = observed_values(sample);
    if obs.is_empty() {
        return UniEstimate::new(0.0).with("m_observed", 0);
    }
    let lo = obs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = obs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    UniEstimate::new(0.5 * (lo + hi)).with("m_observed", obs.len())
}

/// Mean of the observed entries.
pub fn observed_mean(sample: &[ExtendedValue]) -> Result<UniEstimate> {
    let obs = observed_values(sample);
    if obs.is_empty() {
        return Err(Error::Estimation("empty observed set".into()));
    }
    Ok(UniEstimate::new(mean(&obs)).with("m_observed", obs.len()))
}

/// Sizes of `m` blocks covering `n` points, the first `n mod m` one larger.
pub(crate) fn balanced_sizes(n: usize, m: usize) -> Vec<usize> {
    let (q, r) = (n / m, n % m);
    (0..m).map(|k| q + usize::from(k < r)).collect()
}

/// Median of block means over a seeded random partition into `m` blocks.
pub fn median_of_means(data: &[f64], m: usize, seed: u64) -> Result<UniEstimate> {
    let n = data.len();
    if n == 0 {
        return Err(Error::domain("median of means of empty data"));
    }
    if m == 0 || m > n {
        return Err(Error::domain(format!(
            "need 1 <= M <= n, got M = {m}, n = {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    Stream::new(seed).shuffle(&mut idx);
    let mut means = Vec::with_capacity(m);
    let mut start = 0;
    for size in balanced_sizes(n, m) {
        let block = &idx[start..start + size];
        // Anchored at the first entry, so constant blocks average exactly.
        let x0 = data[block[0]];
        let dev = block.iter().map(|&i| data[i] - x0).sum::<f64>() / size as f64;
        means.push(x0 + dev);
        start += size;
    }
    let value = median_in_place(&mut means);
    Ok(UniEstimate::new(value).with("blocks", m))
}

/// `T_{α,β}(x)`: `x` clamped to `[α, β]`.
pub fn clamp_to(x: f64, alpha: f64, beta: f64) -> f64 {
    if x >= beta {
        beta
    } else if x <= alpha {
        alpha
    } else {
        x
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Trimming thresholds `(η, rank_α, rank_β)` for a sample of size `n`;
/// ranks are 1-based within the second half.
pub fn trim_ranks(n: usize, epsilon: f64, delta: f64) -> (f64, usize, usize) {
    let nf = n as f64;
    let raw = 8.0 * epsilon + 24.0 * (4.0 / delta).ln() / nf;
    let eta = raw.max(2.0 / nf).min(0.5 - 1.0 / nf);
    let half = n / 2;
    let r_lo = round_half_up(nf * eta / 2.0).clamp(1, half);
    let r_hi = round_half_up(nf * (1.0 - eta) / 2.0).clamp(1, half);
    (eta, r_lo, r_hi)
}

/// Split-sample trimmed mean: thresholds from one half, clamped mean of
/// the other.
pub fn trimmed_mean(data: &[f64], epsilon: f64, delta: f64, seed: u64) -> Result<UniEstimate> {
    let n = data.len();
    if n < 4 {
        return Err(Error::size(format!("trimmed mean needs n >= 4, got {n}")));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::domain(format!("epsilon = {epsilon} outside [0, 1)")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::domain(format!("delta = {delta} outside (0, 1]")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    Stream::new(seed).shuffle(&mut idx);
    let first = n.div_ceil(2);
    let mut second: Vec<f64> = idx[first..].iter().map(|&i| data[i]).collect();
    second.sort_by(f64::total_cmp);
    let (eta, r_lo, r_hi) = trim_ranks(n, epsilon, delta);
    let (alpha, beta) = (second[r_lo - 1], second[r_hi - 1]);
    let value = idx[..first]
        .iter()
        .map(|&i| clamp_to(data[i], alpha, beta))
        .sum::<f64>()
        / first as f64;
    Ok(UniEstimate::new(value)
        .with("eta", eta)
        .with("alpha", alpha)
        .with("beta", beta))
}

/// Grid resolution of the coarse scan in [`mk_estimate`].
pub const MK_GRID: usize = 512;

/// The minimum Kolmogorov distance estimator for a Gaussian location
/// family with known `σ`: the smallest minimiser of
/// `θ ↦ d_K(R̂_n, ℛ(N(θ, σ²), ε, q))`.
pub fn mk_estimate(
    sample: &[ExtendedValue],
    epsilon: f64,
    q: f64,
    sigma: f64,
) -> Result<UniEstimate> {
    let emp = EmpiricalSummary::from_sample(sample)?;
    mk_from_summary(&emp, epsilon, q, sigma)
}

pub fn mk_from_summary(
    emp: &EmpiricalSummary,
    epsilon: f64,
    q: f64,
    sigma: f64,
) -> Result<UniEstimate> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma = {sigma} must be positive")));
    }
    crate::types::effective_contamination(epsilon, q)?;
    let obs = emp.sorted_observed();
    if obs.is_empty() {
        // The objective does not depend on θ; report the bracket centre.
        let v = objective(emp, 0.0, sigma, epsilon, q);
        return Ok(UniEstimate::new(0.0)
            .with("m_observed", 0)
            .with("kolmogorov_value", v));
    }
    let (lo, hi) = (obs[0] - 6.0 * sigma, obs[obs.len() - 1] + 6.0 * sigma);
    let f = |theta: f64| objective(emp, theta, sigma, epsilon, q);

    let h = (hi - lo) / (MK_GRID - 1) as f64;
    let grid: Vec<f64> = (0..MK_GRID).map(|k| lo + k as f64 * h).collect();
    let values = crate::par::map_slice(&grid, |&t| f(t));
    let mut k_best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v < values[k_best] {
            k_best = k;
        }
    }
    let a = grid[k_best.saturating_sub(1)];
    let b = grid[(k_best + 1).min(MK_GRID - 1)];
    let tol = 1e-7 * sigma;
    let (mut theta, mut f_star) = golden_min(f, a, b, tol);
    if values[k_best] <= f_star {
        theta = grid[k_best];
        f_star = values[k_best];
    }

    // Walk to the left end of the level set {f <= f*}.
    let level = f_star + 1e-9;
    // The plateau can extend past the neighbouring cell, so step out a cell
    // at a time before bisecting.
    let (mut left, mut right) = (a, theta);
    while f(left) <= level && left > lo {
        right = left;
        left = (left - h).max(lo);
    }
    if f(left) <= level {
        right = left;
    }
    while right - left > 1e-9 * sigma {
        let mid = 0.5 * (left + right);
        if f(mid) <= level {
            right = mid;
        } else {
            left = mid;
        }
    }
    let value = right;
    Ok(UniEstimate::new(value)
        .with("m_observed", obs.len())
        .with("kolmogorov_value", f(value))
        .with("bracket_lo", lo)
        .with("bracket_hi", hi))
}

/// `θ ↦ d_K(R̂_n, ℛ(N(θ, σ²), ε, q))`.
pub fn mk_objective(
    sample: &[ExtendedValue],
    theta: f64,
    epsilon: f64,
    q: f64,
    sigma: f64,
) -> Result<f64> {
    let emp = EmpiricalSummary::from_sample(sample)?;
    RealisableSetSpec::gaussian(theta, sigma, epsilon, q)?;
    Ok(objective(&emp, theta, sigma, epsilon, q))
}

fn objective(emp: &EmpiricalSummary, theta: f64, sigma: f64, epsilon: f64, q: f64) -> f64 {
    let set = RealisableSetSpec::gaussian(theta, sigma, epsilon, q).expect("validated parameters");
    dist_to_realisable(emp, &set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{AdversaryDensity, AdversaryName};
    use crate::rng::Stream;

    fn obs(xs: &[f64]) -> Vec<ExtendedValue> {
        xs.iter().map(|&x| ExtendedValue::Observed(x)).collect()
    }

    #[test]
    fn average_of_extremes_examples() {
        let star = ExtendedValue::Missing;
        assert_eq!(average_of_extremes(&[star, star]).value, 0.0);
        let s = [
            ExtendedValue::Observed(1.0),
            ExtendedValue::Observed(3.0),
            star,
        ];
        assert_eq!(average_of_extremes(&s).value, 2.0);
        assert_eq!(average_of_extremes(&obs(&[-5.0, 0.0, 7.0])).value, 1.0);
    }

    #[test]
    fn observed_mean_examples() {
        let s = [
            ExtendedValue::Observed(1.0),
            ExtendedValue::Missing,
            ExtendedValue::Observed(3.0),
        ];
        assert_eq!(observed_mean(&s).unwrap().value, 2.0);
        assert_eq!(observed_mean(&obs(&[5.0])).unwrap().value, 5.0);
        assert!(matches!(
            observed_mean(&[ExtendedValue::Missing]),
            Err(Error::Estimation(_))
        ));
    }

    #[test]
    fn mom_examples() {
        assert_eq!(
            median_of_means(&[1.0, 2.0, 3.0, 4.0], 1, 9).unwrap().value,
            2.5
        );
        assert_eq!(
            median_of_means(&[1.0, 2.0, 100.0], 3, 9).unwrap().value,
            2.0
        );
        assert!(median_of_means(&[], 1, 0).is_err());
        assert!(median_of_means(&[1.0, 2.0], 3, 0).is_err());
    }

    #[test]
    fn mom_pinned_value() {
        let v = median_of_means(&[0.0, 0.0, 10.0, 10.0], 2, 2024)
            .unwrap()
            .value;
        assert!([0.0, 5.0, 10.0].contains(&v));
        assert_eq!(v, 5.0);
        let v = median_of_means(&[0.0, 0.0, 10.0, 10.0], 2, 7)
            .unwrap()
            .value;
        assert_eq!(v, 5.0);
    }

    #[test]
    fn balanced_block_sizes() {
        assert_eq!(balanced_sizes(10, 3), vec![4, 3, 3]);
        assert_eq!(balanced_sizes(9, 3), vec![3, 3, 3]);
        assert_eq!(balanced_sizes(5, 5), vec![1; 5]);
    }

    #[test]
    fn clamp_primitive() {
        assert_eq!(clamp_to(2.0, 0.0, 1.0), 1.0);
        assert_eq!(clamp_to(-3.0, 0.0, 1.0), 0.0);
        assert_eq!(clamp_to(0.4, 0.0, 1.0), 0.4);
    }

    #[test]
    fn trimmed_mean_needs_four_points() {
        assert!(matches!(
            trimmed_mean(&[1.0, 2.0, 3.0], 0.0, 0.5, 0),
            Err(Error::Size(_))
        ));
        assert!(trimmed_mean(&[1.0, 2.0, 3.0, 4.0], 0.0, 0.5, 0).is_ok());
    }

    #[test]
    fn trim_ranks_are_clamped() {
        let (eta, lo, hi) = trim_ranks(4, 0.0, 0.01);
        assert_eq!(eta, 0.25);
        assert_eq!((lo, hi), (1, 2));
        let (eta, lo, hi) = trim_ranks(1_000_000, 0.0, 1.0);
        assert!((eta - 24.0 * 4f64.ln() / 1e6).abs() < 1e-15);
        assert_eq!(lo, 17);
        assert_eq!(hi, 499_983);
    }

    #[test]
    fn trimmed_mean_close_to_half_mean_for_light_trimming() {
        let n = 200_000;
        let mut s = Stream::new(5);
        let data: Vec<f64> = (0..n).map(|_| s.uniform()).collect();
        let est = trimmed_mean(&data, 0.0, 1.0, 11).unwrap();
        let mut idx: Vec<usize> = (0..n).collect();
        Stream::new(11).shuffle(&mut idx);
        let half_mean = mean(&idx[..n / 2].iter().map(|&i| data[i]).collect::<Vec<_>>());
        let eta = est.meta["eta"].as_f64().unwrap();
        // At most about η·n points are clamped, each by at most the range.
        assert!((est.value - half_mean).abs() <= 4.0 * eta);
    }

    #[test]
    fn trimmed_mean_two_point_data_stays_in_range() {
        let data: Vec<f64> = (0..40)
            .map(|i| if i % 2 == 0 { -3.0 } else { 3.0 })
            .collect();
        for seed in 0..20 {
            let v = trimmed_mean(&data, 0.1, 0.5, seed).unwrap().value;
            assert!((-3.0..=3.0).contains(&v));
            let neg: Vec<f64> = data.iter().map(|x| -x).collect();
            assert_eq!(trimmed_mean(&neg, 0.1, 0.5, seed).unwrap().value, -v);
        }
    }

    #[test]
    fn mk_recovers_gaussian_mean() {
        let mut s = Stream::new(42);
        let sample: Vec<ExtendedValue> = (0..10_000)
            .map(|_| ExtendedValue::Observed(2.0 + s.normal()))
            .collect();
        let est = mk_estimate(&sample, 0.0, 1.0, 1.0).unwrap();
        assert!((est.value - 2.0).abs() <= 0.1, "{}", est.value);
    }

    #[test]
    fn mk_translation_equivariant() {
        let mut s = Stream::new(3);
        let sample: Vec<ExtendedValue> = (0..500)
            .map(|_| {
                if s.bernoulli(0.3) {
                    ExtendedValue::Missing
                } else {
                    ExtendedValue::Observed(s.normal())
                }
            })
            .collect();
        let base = mk_estimate(&sample, 0.1, 0.7, 1.0).unwrap().value;
        for c in [-7.5, 0.25, 40.0] {
            let shifted: Vec<_> = sample.iter().map(|z| z.shifted(c)).collect();
            let v = mk_estimate(&shifted, 0.1, 0.7, 1.0).unwrap().value;
            assert!((v - base - c).abs() <= 1e-6, "{c}: {v} vs {}", base + c);
        }
    }

    #[test]
    fn mk_probe_audit() {
        let mut s = Stream::new(8);
        let sample: Vec<ExtendedValue> = (0..300)
            .map(|_| {
                if s.bernoulli(0.2) {
                    ExtendedValue::Missing
                } else {
                    ExtendedValue::Observed(1.0 + 2.0 * s.normal())
                }
            })
            .collect();
        let est = mk_estimate(&sample, 0.05, 0.8, 2.0).unwrap();
        let f_hat = mk_objective(&sample, est.value, 0.05, 0.8, 2.0).unwrap();
        for _ in 0..64 {
            let t = -12.0 + 26.0 * s.uniform();
            assert!(f_hat <= mk_objective(&sample, t, 0.05, 0.8, 2.0).unwrap() + 1e-9);
        }
        // Smallest minimiser: slightly to the left the objective is worse.
        let left = mk_objective(&sample, est.value - 1e-6, 0.05, 0.8, 2.0).unwrap();
        assert!(left > f_hat);
    }

    #[test]
    fn mk_empty_sample_falls_back() {
        let est = mk_estimate(&[ExtendedValue::Missing; 5], 0.1, 0.5, 1.0).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn mk_beats_observed_mean_on_adversary() {
        let (a, sigma, eps, q) = (1.0, 1.0, 0.2, 0.8);
        let adv = AdversaryDensity::new(AdversaryName::F1, a, sigma, eps, q).unwrap();
        let sample = adv.sample(20_000, 17);
        let mk = mk_estimate(&sample, eps, q, sigma).unwrap().value;
        let om = observed_mean(&sample).unwrap().value;
        let bias = adv.conditional_observed_mean() - adv.theta0();
        assert!(bias > 0.05, "construction bias {bias}");
        assert!((om - adv.theta0() - bias).abs() < 0.05);
        // f₁ is realisable for both -a and a, so the MK estimate lies within
        // the band of indistinguishable centres.
        assert!(mk >= -a - 0.2 && mk <= a + 0.2, "{mk}");
    }
}
