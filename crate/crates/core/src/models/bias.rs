//! Bias of the observed-sample mean under realisable contamination.

use super::base::BaseDistribution;
use super::law::RealisableLaw;
use super::mechanism::MnarMechanism;
use crate::error::Result;

/// `E(Z | Z ≠ ⋆) - θ₀` for a univariate continuous base.
pub fn observed_mean_bias(
    base: &BaseDistribution,
    epsilon: f64,
    q: f64,
    mechanism: &MnarMechanism,
) -> Result<f64> {
    let law = RealisableLaw::new(base.clone(), epsilon, q, mechanism.clone())?;
    Ok(law.conditional_observed_mean() - base.mean()[0])
}

/// `σ · min(κ, κ^{1/r})`, the worst-case bias over bases with `r`-th
/// moment at most `σ^r`.
pub fn bias_bound_lr(sigma: f64, kappa: f64, r: f64) -> f64 {
    sigma * kappa.min(kappa.powf(1.0 / r))
}

/// `σ · min(2κ, log^{1/r}(2 + 2κ))` for sub-Weibull bases.
pub fn bias_bound_psi(sigma: f64, kappa: f64, r: f64) -> f64 {
    sigma * (2.0 * kappa).min((2.0 + 2.0 * kappa).ln().powf(1.0 / r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{norm_cdf, norm_pdf};

    #[test]
    fn threshold_bias_closed_form() {
        let base = BaseDistribution::normal(0.0, 1.0).unwrap();
        for &(eps, q, t) in &[(0.1, 0.5, 0.0), (0.3, 1.0, 1.2), (0.5, 0.5, -0.7)] {
            let b = observed_mean_bias(&base, eps, q, &MnarMechanism::ThresholdAbove(t)).unwrap();
            let exact = eps * norm_pdf(t) / (q * (1.0 - eps) + eps * (1.0 - norm_cdf(t)));
            assert!((b - exact).abs() < 1e-9, "{eps} {q} {t}: {b} vs {exact}");
        }
    }

    #[test]
    fn bias_is_translation_invariant() {
        let m = MnarMechanism::TailsOnly(0.5);
        let b0 = observed_mean_bias(&BaseDistribution::normal(0.0, 1.0).unwrap(), 0.2, 0.7, &m);
        let shifted = MnarMechanism::custom(vec![2.5, 3.5], vec![1.0, 0.0, 1.0]).unwrap();
        let b3 = observed_mean_bias(
            &BaseDistribution::normal(3.0, 1.0).unwrap(),
            0.2,
            0.7,
            &shifted,
        );
        assert!((b0.unwrap() - b3.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn sub_weibull_bias_within_bound() {
        let base = BaseDistribution::sub_weibull_folded(0.0, 1.0, 1.0).unwrap();
        for t in [-1.0, 0.0, 0.5, 1.0, 2.0, 4.0] {
            for &(eps, q) in &[(0.1, 1.0), (0.4, 0.5)] {
                let kappa = eps / (q * (1.0 - eps));
                let b =
                    observed_mean_bias(&base, eps, q, &MnarMechanism::ThresholdAbove(t)).unwrap();
                assert!(b.abs() <= bias_bound_psi(1.0, kappa, 1.0) + 1e-9);
            }
        }
    }
}
