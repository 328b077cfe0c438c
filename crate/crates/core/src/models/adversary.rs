//! The lower-bound constructions: the Gaussian pair `f₁`/`f₂` and the
//! two-point pair sharing one observable law.

use super::base::BaseDistribution;
use super::mechanism::MnarMechanism;
use super::sampler::ContaminationSpec;
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::special::{gauss_cdf, gauss_pdf};
use crate::types::ExtendedValue;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdversaryName {
    F1,
    F2,
}

/// Sub-probability density on `ℝ` plus the remaining mass at ⋆.
///
/// `f₁` lies in `ℛ(N(-a, σ²), ε, q)` and `f₂(x) = f₁(-x)` in
/// `ℛ(N(a, σ²), ε, q)`; they agree on `[-τ, τ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryDensity {
    pub name: AdversaryName,
    pub a: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub q: f64,
}

impl AdversaryDensity {
    pub fn new(name: AdversaryName, a: f64, sigma: f64, epsilon: f64, q: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::domain(format!("a = {a} must be positive")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("sigma = {sigma} must be positive")));
        }
        crate::types::effective_contamination(epsilon, q)?;
        Ok(Self {
            name,
            a,
            sigma,
            epsilon,
            q,
        })
    }

    fn low(&self) -> f64 {
        self.q * (1.0 - self.epsilon)
    }

    fn high(&self) -> f64 {
        self.low() + self.epsilon
    }

    /// `τ = σ²/(2a) · log(1 + κ)`.
    pub fn tau(&self) -> f64 {
        let kappa = self.epsilon / self.low();
        self.sigma * self.sigma / (2.0 * self.a) * kappa.ln_1p()
    }

    /// Mean of the Gaussian the density is realisable for.
    pub fn theta0(&self) -> f64 {
        match self.name {
            AdversaryName::F1 => -self.a,
            AdversaryName::F2 => self.a,
        }
    }

    pub fn base(&self) -> BaseDistribution {
        BaseDistribution::normal(self.theta0(), self.sigma).expect("validated parameters")
    }

    fn f1(&self, x: f64) -> f64 {
        let (a, s) = (self.a, self.sigma);
        if x <= 0.0 {
            self.low() * gauss_pdf(x, -a, s)
        } else if x <= self.tau() {
            self.low() * gauss_pdf(x, a, s)
        } else {
            self.high() * gauss_pdf(x, -a, s)
        }
    }

    /// `∫_{-∞}^t f₁`.
    fn f1_cdf(&self, t: f64) -> f64 {
        let (a, s, tau) = (self.a, self.sigma, self.tau());
        let c = self.low();
        if t <= 0.0 {
            return c * gauss_cdf(t, -a, s);
        }
        let mut acc = c * gauss_cdf(0.0, -a, s);
        let upto = t.min(tau);
        acc += c * (gauss_cdf(upto, a, s) - gauss_cdf(0.0, a, s));
        if t > tau {
            acc += self.high() * (gauss_cdf(t, -a, s) - gauss_cdf(tau, -a, s));
        }
        acc
    }

    /// The density on `ℝ`.
    pub fn density(&self, x: f64) -> f64 {
        match self.name {
            AdversaryName::F1 => self.f1(x),
            AdversaryName::F2 => self.f1(-x),
        }
    }

    /// Observed-mass CDF `t ↦ ∫_{-∞}^t f`.
    pub fn cdf(&self, t: f64) -> f64 {
        match self.name {
            AdversaryName::F1 => self.f1_cdf(t),
            AdversaryName::F2 => self.observed_mass() - self.f1_cdf(-t),
        }
    }

    pub fn observed_mass(&self) -> f64 {
        self.f1_cdf(f64::INFINITY)
    }

    pub fn star_mass(&self) -> f64 {
        1.0 - self.observed_mass()
    }

    /// `E(Z | Z ≠ ⋆)` in closed form.
    pub fn conditional_observed_mean(&self) -> f64 {
        use crate::special::gauss_partial_first_moment as pm;
        let (a, s, tau) = (self.a, self.sigma, self.tau());
        let inf = f64::INFINITY;
        let m1 = self.low() * pm(-inf, 0.0, -a, s)
            + self.low() * pm(0.0, tau, a, s)
            + self.high() * pm(tau, inf, -a, s);
        let m = m1 / self.observed_mass();
        match self.name {
            AdversaryName::F1 => m,
            AdversaryName::F2 => -m,
        }
    }

    /// Inverse of the observed-mass CDF by bisection to `1e-12`.
    fn invert(&self, u: f64) -> f64 {
        let s = self.sigma;
        let (mut lo, mut hi) = (
            -self.a - self.tau() - 10.0 * s,
            self.a + self.tau() + 10.0 * s,
        );
        while self.cdf(lo) > u {
            lo -= 10.0 * s;
        }
        while self.cdf(hi) < u {
            hi += 10.0 * s;
        }
        while hi - lo > 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// One uniform per draw: values above the observed mass map to ⋆.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<ExtendedValue> {
        let mut stream = Stream::new(seed);
        let mass = self.observed_mass();
        (0..n)
            .map(|_| {
                let u = stream.uniform();
                if u >= mass {
                    ExtendedValue::Missing
                } else {
                    ExtendedValue::Observed(self.invert(u))
                }
            })
            .collect()
    }
}

/// A pair of laws with means `θ₁ < θ₂` whose realisable sets share the
/// three-atom law `R₀` on `{-b, b, ⋆}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPointPair {
    pub a: f64,
    pub b: f64,
    pub theta1: f64,
    pub theta2: f64,
    /// `R₀({-b}) = R₀({b})`.
    pub atom_mass: f64,
    pub star_mass: f64,
    pub first: ContaminationSpec,
    pub second: ContaminationSpec,
}

impl TwoPointPair {
    pub fn mean_gap(&self) -> f64 {
        self.theta2 - self.theta1
    }
}

/// `a = q(1-ε)/(q(1-ε)+ε)`, `b = (σ/2)·a^{-1/r}`; `P₁` puts `1/(a+1)` on `-b`
/// and `P₂` mirrors it. The MNAR branch reveals only the heavier atom.
pub fn adversary_two_point(r: f64, sigma: f64, epsilon: f64, q: f64) -> Result<TwoPointPair> {
    if !(r >= 2.0 && r.is_finite()) {
        return Err(Error::domain(format!("r = {r} must be at least 2")));
    }
    if !(sigma > 0.0) {
        return Err(Error::domain(format!("sigma = {sigma} must be positive")));
    }
    crate::types::effective_contamination(epsilon, q)?;
    let low = q * (1.0 - epsilon);
    let a = low / (low + epsilon);
    let b = 0.5 * sigma * a.powf(-1.0 / r);
    let theta2 = (1.0 - a) * b / (a + 1.0);
    let first = ContaminationSpec::Realisable {
        base: BaseDistribution::two_point(-b, b, a / (a + 1.0))?,
        epsilon,
        q,
        mechanism: MnarMechanism::ThresholdAbove(0.0),
        direction: None,
    };
    let second = ContaminationSpec::Realisable {
        base: BaseDistribution::two_point(-b, b, 1.0 / (a + 1.0))?,
        epsilon,
        q,
        mechanism: MnarMechanism::ThresholdBelow(0.0),
        direction: None,
    };
    Ok(TwoPointPair {
        a,
        b,
        theta1: -theta2,
        theta2,
        atom_mass: low / (a + 1.0),
        star_mass: 1.0 - 2.0 * low / (a + 1.0),
        first,
        second,
    })
}
