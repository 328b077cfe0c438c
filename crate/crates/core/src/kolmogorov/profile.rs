//! Lower bound on the Kolmogorov distance between two Gaussian realisable
//! sets whose means are `2a` apart.

use crate::error::{Error, Result};
use crate::special::norm_cdf;

/// `b = ½ log(1 + 4κ)`.
pub fn profile_b(epsilon: f64, q: f64) -> Result<f64> {
    let kappa = crate::types::effective_contamination(epsilon, q)?;
    Ok(0.5 * (4.0 * kappa).ln_1p())
}

/// `f_{K,b}(a) = q(1-ε) Φ(a/σ - w) - {q(1-ε)+ε} Φ(-a/σ - w)` with window
/// `w = σb/a` when `b ≤ ½` and `w = 2σb/a` otherwise.
pub fn separation_profile(a: f64, b: f64, sigma: f64, epsilon: f64, q: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::domain(format!("a = {a} must be positive")));
    }
    if !(sigma > 0.0) {
        return Err(Error::domain(format!("sigma = {sigma} must be positive")));
    }
    crate::types::effective_contamination(epsilon, q)?;
    let low = q * (1.0 - epsilon);
    let w = if b <= 0.5 {
        sigma * b / a
    } else {
        2.0 * sigma * b / a
    };
    Ok(low * norm_cdf(a / sigma - w) - (low + epsilon) * norm_cdf(-a / sigma - w))
}
