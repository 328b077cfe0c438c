//! Analytic laws on `ℝ_⋆` induced by a realisable contamination, and the
//! empirical sandwich check against them.

use super::base::BaseDistribution;
use super::mechanism::MnarMechanism;
use crate::error::{Error, Result};
use crate::special::integrate;
use crate::types::ExtendedValue;

/// The law of `Z` under `ℛ(P, ε, q)` with MNAR mechanism `m`; observed part
/// has density `{q(1-ε) + ε m(z)} p(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealisableLaw {
    pub base: BaseDistribution,
    pub epsilon: f64,
    pub q: f64,
    pub mechanism: MnarMechanism,
}

impl RealisableLaw {
    pub fn new(
        base: BaseDistribution,
        epsilon: f64,
        q: f64,
        mechanism: MnarMechanism,
    ) -> Result<Self> {
        if base.dim() != 1 {
            return Err(Error::Dimension {
                expected: 1,
                got: base.dim(),
            });
        }
        if !base.is_absolutely_continuous() {
            return Err(Error::Model(
                "realisable law needs a continuous base".into(),
            ));
        }
        crate::types::effective_contamination(epsilon, q)?;
        mechanism.validate()?;
        Ok(Self {
            base,
            epsilon,
            q,
            mechanism,
        })
    }

    fn base_cdf(&self, t: f64) -> f64 {
        self.base.cdf(t).expect("univariate base")
    }

    /// `R((-∞, t])`.
    pub fn cdf(&self, t: f64) -> f64 {
        let mcar = self.q * (1.0 - self.epsilon) * self.base_cdf(t);
        let mnar: f64 = self
            .mechanism
            .pieces()
            .into_iter()
            .filter(|&(lo, _, v)| v > 0.0 && lo < t)
            .map(|(lo, hi, v)| v * (self.base_cdf(hi.min(t)) - self.base_cdf(lo)))
            .sum();
        mcar + self.epsilon * mnar
    }

    pub fn observed_mass(&self) -> f64 {
        self.cdf(f64::INFINITY)
    }

    pub fn star_mass(&self) -> f64 {
        1.0 - self.observed_mass()
    }

    /// Mechanism knots; the CDF is smooth between them.
    pub fn knots(&self) -> Vec<f64> {
        self.mechanism
            .pieces()
            .into_iter()
            .map(|(lo, _, _)| lo)
            .filter(|x| x.is_finite())
            .collect()
    }

    /// `E(Z | Z ≠ ⋆)` by adaptive quadrature over the mechanism pieces.
    pub fn conditional_observed_mean(&self) -> f64 {
        let (lo, hi) = self.base.effective_support().expect("univariate base");
        let low = self.q * (1.0 - self.epsilon);
        let mut num = 0.0;
        for (a, b, v) in self.mechanism.pieces() {
            let (a, b) = (a.max(lo), b.min(hi));
            if a >= b {
                continue;
            }
            let w = low + self.epsilon * v;
            let g = |x: f64| x * self.base.pdf(x).expect("continuous base");
            num += w * integrate(&g, a, b, 1e-13);
        }
        num / self.observed_mass()
    }
}

/// Outcome of the empirical sandwich check.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub slack: f64,
    /// Largest violation of either side over the grid (≤ 0 means pass).
    pub worst_excess: f64,
    pub passed: bool,
}

/// Checks `q(1-ε)F(t) - δ_n ≤ #{Z_i ≤ t}/n ≤ {q(1-ε)+ε}F(t) + δ_n` on a
/// 100-point grid with `δ_n = 3 √(log n / n)`.
pub fn sandwich_check(
    sample: &[ExtendedValue],
    base: &BaseDistribution,
    epsilon: f64,
    q: f64,
) -> Result<SandwichReport> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::size("sandwich check needs at least two draws"));
    }
    let mut obs = crate::types::observed_values(sample);
    obs.sort_by(f64::total_cmp);
    let slack = 3.0 * ((n as f64).ln() / n as f64).sqrt();
    let (lo, hi) = {
        let m = base.mean()[0];
        let s = base.sd(0);
        (m - 4.0 * s, m + 4.0 * s)
    };
    let low = q * (1.0 - epsilon);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..100 {
        let t = lo + (hi - lo) * k as f64 / 99.0;
        let f = base.cdf(t)?;
        let emp = obs.partition_point(|&x| x <= t) as f64 / n as f64;
        worst = worst
            .max(low * f - slack - emp)
            .max(emp - (low + epsilon) * f - slack);
    }
    Ok(SandwichReport {
        slack,
        worst_excess: worst,
        passed: worst <= 0.0,
    })
}
