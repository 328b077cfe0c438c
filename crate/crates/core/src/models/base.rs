//! Base (uncontaminated) distributions.

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::special::{gauss_cdf, gauss_pdf};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// A base law `P` with a closed-form mean.
///
/// Draw costs: `Gaussian` 2 words per coordinate, `TwoPoint` and
/// `BoundedUniform` 1 word, `SubWeibullFolded` 2 words (sign, magnitude).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BaseRepr", into = "BaseRepr")]
pub enum BaseDistribution {
    Gaussian {
        mean: Vec<f64>,
        cov: DMatrix<f64>,
        chol: DMatrix<f64>,
    },
    TwoPoint {
        low: f64,
        high: f64,
        p_high: f64,
    },
    BoundedUniform {
        lo: f64,
        hi: f64,
    },
    /// `center ± c·E^{1/r}` with `E ~ Exp(1)` and `c = σ·2^{-1/r}`; the
    /// density is `∝ exp(-(|x - center|/c)^r)`.
    SubWeibullFolded {
        center: f64,
        r: f64,
        sigma: f64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum BaseRepr {
    Gaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
    TwoPoint { low: f64, high: f64, p_high: f64 },
    BoundedUniform { lo: f64, hi: f64 },
    SubWeibullFolded { center: f64, r: f64, sigma: f64 },
}

impl TryFrom<BaseRepr> for BaseDistribution {
    type Error = Error;

    fn try_from(r: BaseRepr) -> Result<Self> {
        match r {
            BaseRepr::Gaussian { mean, cov } => {
                let d = mean.len();
                if cov.len() != d || cov.iter().any(|row| row.len() != d) {
                    return Err(Error::Dimension {
                        expected: d,
                        got: cov.len(),
                    });
                }
                let flat: Vec<f64> = cov.into_iter().flatten().collect();
                Self::gaussian(mean, DMatrix::from_row_slice(d, d, &flat))
            }
            BaseRepr::TwoPoint { low, high, p_high } => Self::two_point(low, high, p_high),
            BaseRepr::BoundedUniform { lo, hi } => Self::bounded_uniform(lo, hi),
            BaseRepr::SubWeibullFolded { center, r, sigma } => {
                Self::sub_weibull_folded(center, r, sigma)
            }
        }
    }
}

impl From<BaseDistribution> for BaseRepr {
    fn from(b: BaseDistribution) -> Self {
        match b {
            BaseDistribution::Gaussian { mean, cov, .. } => BaseRepr::Gaussian {
                cov: (0..cov.nrows())
                    .map(|i| cov.row(i).iter().copied().collect())
                    .collect(),
                mean,
            },
            BaseDistribution::TwoPoint { low, high, p_high } => {
                BaseRepr::TwoPoint { low, high, p_high }
            }
            BaseDistribution::BoundedUniform { lo, hi } => BaseRepr::BoundedUniform { lo, hi },
            BaseDistribution::SubWeibullFolded { center, r, sigma } => {
                BaseRepr::SubWeibullFolded { center, r, sigma }
            }
        }
    }
}

impl BaseDistribution {
    pub fn gaussian(mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::domain("empty mean vector"));
        }
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::Dimension {
                expected: d,
                got: cov.nrows(),
            });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite Gaussian parameter"));
        }
        if cov != cov.transpose() {
            return Err(Error::domain("covariance is not symmetric"));
        }
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::domain("covariance is not positive definite"))?
            .l();
        Ok(BaseDistribution::Gaussian { mean, cov, chol })
    }

    /// `N(mean, sd²)` on the line.
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) {
            return Err(Error::domain(format!("sigma = {sd} must be positive")));
        }
        Self::gaussian(vec![mean], DMatrix::from_element(1, 1, sd * sd))
    }

    /// `N(mean, I_d)`.
    pub fn standard_gaussian(mean: Vec<f64>) -> Result<Self> {
        let d = mean.len();
        Self::gaussian(mean, DMatrix::identity(d, d))
    }

    pub fn two_point(low: f64, high: f64, p_high: f64) -> Result<Self> {
        if !(low.is_finite() && high.is_finite() && low <= high) {
            return Err(Error::domain("two-point support must satisfy low <= high"));
        }
        if !(0.0..=1.0).contains(&p_high) {
            return Err(Error::domain(format!("p_high = {p_high} outside [0, 1]")));
        }
        Ok(BaseDistribution::TwoPoint { low, high, p_high })
    }

    pub fn bounded_uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::domain("uniform support must satisfy lo < hi"));
        }
        Ok(BaseDistribution::BoundedUniform { lo, hi })
    }

    pub fn sub_weibull_folded(center: f64, r: f64, sigma: f64) -> Result<Self> {
        if !(r >= 1.0 && r.is_finite()) {
            return Err(Error::domain(format!("r = {r} must be at least 1")));
        }
        if !(sigma > 0.0 && sigma.is_finite() && center.is_finite()) {
            return Err(Error::domain(
                "sub-Weibull needs finite center and sigma > 0",
            ));
        }
        Ok(BaseDistribution::SubWeibullFolded { center, r, sigma })
    }

    pub fn dim(&self) -> usize {
        match self {
            BaseDistribution::Gaussian { mean, .. } => mean.len(),
            _ => 1,
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        match self {
            BaseDistribution::Gaussian { mean, .. } => mean.clone(),
            BaseDistribution::TwoPoint { low, high, p_high } => {
                vec![low + p_high * (high - low)]
            }
            BaseDistribution::BoundedUniform { lo, hi } => vec![0.5 * (lo + hi)],
            BaseDistribution::SubWeibullFolded { center, .. } => vec![*center],
        }
    }

    /// Marginal standard deviation of coordinate `j`.
    pub fn sd(&self, j: usize) -> f64 {
        match self {
            BaseDistribution::Gaussian { cov, .. } => cov[(j, j)].sqrt(),
            BaseDistribution::TwoPoint { low, high, p_high } => {
                (high - low) * (p_high * (1.0 - p_high)).sqrt()
            }
            BaseDistribution::BoundedUniform { lo, hi } => (hi - lo) / 12f64.sqrt(),
            BaseDistribution::SubWeibullFolded { r, sigma, .. } => {
                let c = sigma * 2f64.powf(-1.0 / r);
                c * libm::tgamma(1.0 + 2.0 / r).sqrt()
            }
        }
    }

    pub fn is_absolutely_continuous(&self) -> bool {
        !matches!(self, BaseDistribution::TwoPoint { .. })
    }

    fn require_univariate(&self) -> Result<()> {
        if self.dim() == 1 {
            Ok(())
        } else {
            Err(Error::Dimension {
                expected: 1,
                got: self.dim(),
            })
        }
    }

    /// The law of `vᵀX`; only Gaussians (and univariate bases with `v = ±1`)
    /// project in closed form.
    pub fn project(&self, v: &[f64]) -> Result<BaseDistribution> {
        if v.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: v.len(),
            });
        }
        match self {
            BaseDistribution::Gaussian { mean, cov, .. } => {
                let vv = DVector::from_column_slice(v);
                let m = mean.iter().zip(v).map(|(a, b)| a * b).sum();
                let var = (vv.transpose() * cov * &vv)[(0, 0)];
                Self::normal(m, var.sqrt())
            }
            _ if v[0] == 1.0 => Ok(self.clone()),
            BaseDistribution::TwoPoint { low, high, p_high } if v[0] == -1.0 => {
                Self::two_point(-high, -low, 1.0 - p_high)
            }
            BaseDistribution::BoundedUniform { lo, hi } if v[0] == -1.0 => {
                Self::bounded_uniform(-hi, -lo)
            }
            BaseDistribution::SubWeibullFolded { center, r, sigma } if v[0] == -1.0 => {
                Self::sub_weibull_folded(-center, *r, *sigma)
            }
            _ => Err(Error::Model(
                "only Gaussian bases project onto arbitrary directions".into(),
            )),
        }
    }

    /// One draw of `X`.
    pub fn sample(&self, stream: &mut Stream) -> Vec<f64> {
        match self {
            BaseDistribution::Gaussian { mean, chol, .. } => {
                let d = mean.len();
                let z: Vec<f64> = (0..d).map(|_| stream.normal()).collect();
                (0..d)
                    .map(|i| mean[i] + (0..=i).map(|k| chol[(i, k)] * z[k]).sum::<f64>())
                    .collect()
            }
            _ => vec![self.sample_scalar(stream)],
        }
    }

    /// One draw of a univariate base (first coordinate for Gaussians).
    pub fn sample_scalar(&self, stream: &mut Stream) -> f64 {
        match self {
            BaseDistribution::Gaussian { mean, cov, .. } => {
                mean[0] + cov[(0, 0)].sqrt() * stream.normal()
            }
            BaseDistribution::TwoPoint { low, high, p_high } => {
                if stream.uniform() < *p_high {
                    *high
                } else {
                    *low
                }
            }
            BaseDistribution::BoundedUniform { lo, hi } => lo + (hi - lo) * stream.uniform(),
            BaseDistribution::SubWeibullFolded { center, r, sigma } => {
                let negative = stream.uniform() < 0.5;
                let e = -(1.0 - stream.uniform()).ln();
                let mag = sigma * 2f64.powf(-1.0 / r) * e.powf(1.0 / r);
                if negative {
                    center - mag
                } else {
                    center + mag
                }
            }
        }
    }

    /// CDF of a univariate base.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.require_univariate()?;
        Ok(match self {
            BaseDistribution::Gaussian { mean, cov, .. } => {
                gauss_cdf(x, mean[0], cov[(0, 0)].sqrt())
            }
            BaseDistribution::TwoPoint { low, high, p_high } => {
                if x >= *high {
                    1.0
                } else if x >= *low {
                    1.0 - p_high
                } else {
                    0.0
                }
            }
            BaseDistribution::BoundedUniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            BaseDistribution::SubWeibullFolded { center, r, sigma } => {
                let c = sigma * 2f64.powf(-1.0 / r);
                let tail = 0.5 * (-((x - center).abs() / c).powf(*r)).exp();
                if x >= *center {
                    1.0 - tail
                } else {
                    tail
                }
            }
        })
    }

    /// Density of a univariate, absolutely continuous base.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.require_univariate()?;
        match self {
            BaseDistribution::Gaussian { mean, cov, .. } => {
                Ok(gauss_pdf(x, mean[0], cov[(0, 0)].sqrt()))
            }
            BaseDistribution::TwoPoint { .. } => {
                Err(Error::Model("two-point base has no density".into()))
            }
            BaseDistribution::BoundedUniform { lo, hi } => Ok(if (*lo..=*hi).contains(&x) {
                1.0 / (hi - lo)
            } else {
                0.0
            }),
            BaseDistribution::SubWeibullFolded { center, r, sigma } => {
                let c = sigma * 2f64.powf(-1.0 / r);
                let u = (x - center).abs() / c;
                Ok(0.5 * r / c * u.powf(r - 1.0) * (-u.powf(*r)).exp())
            }
        }
    }

    /// An interval carrying all but a negligible amount of mass, used to
    /// bound quadrature and grids.
    pub fn effective_support(&self) -> Result<(f64, f64)> {
        self.require_univariate()?;
        Ok(match self {
            BaseDistribution::Gaussian { mean, cov, .. } => {
                let s = cov[(0, 0)].sqrt();
                (mean[0] - 12.0 * s, mean[0] + 12.0 * s)
            }
            BaseDistribution::TwoPoint { low, high, .. } => (*low, *high),
            BaseDistribution::BoundedUniform { lo, hi } => (*lo, *hi),
            BaseDistribution::SubWeibullFolded { center, r, sigma } => {
                let c = sigma * 2f64.powf(-1.0 / r);
                let w = c * 40f64.powf(1.0 / r);
                (center - w, center + w)
            }
        })
    }

    /// The same law shifted by `by` (coordinatewise).
    pub fn shifted(&self, by: &[f64]) -> Result<Self> {
        if by.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: by.len(),
            });
        }
        match self {
            BaseDistribution::Gaussian { mean, cov, .. } => Self::gaussian(
                mean.iter().zip(by).map(|(a, b)| a + b).collect(),
                cov.clone(),
            ),
            BaseDistribution::TwoPoint { low, high, p_high } => {
                Self::two_point(low + by[0], high + by[0], *p_high)
            }
            BaseDistribution::BoundedUniform { lo, hi } => {
                Self::bounded_uniform(lo + by[0], hi + by[0])
            }
            BaseDistribution::SubWeibullFolded { center, r, sigma } => {
                Self::sub_weibull_folded(center + by[0], *r, *sigma)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::integrate;

    #[test]
    fn constructors_validate() {
        assert!(BaseDistribution::normal(0.0, 0.0).is_err());
        assert!(BaseDistribution::two_point(1.0, 0.0, 0.5).is_err());
        assert!(BaseDistribution::bounded_uniform(1.0, 1.0).is_err());
        assert!(BaseDistribution::sub_weibull_folded(0.0, 0.5, 1.0).is_err());
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(BaseDistribution::gaussian(vec![0.0, 0.0], bad).is_err());
    }

    #[test]
    fn densities_integrate_to_one_and_match_cdf() {
        let laws = [
            BaseDistribution::normal(1.0, 2.0).unwrap(),
            BaseDistribution::bounded_uniform(-1.0, 3.0).unwrap(),
            BaseDistribution::sub_weibull_folded(0.5, 1.0, 1.0).unwrap(),
            BaseDistribution::sub_weibull_folded(0.0, 2.5, 1.5).unwrap(),
        ];
        for law in &laws {
            let (lo, hi) = law.effective_support().unwrap();
            let f = |x: f64| law.pdf(x).unwrap();
            assert!((integrate(&f, lo, hi, 1e-11) - 1.0).abs() < 1e-8, "{law:?}");
            let t = law.mean()[0] + 0.3;
            let part = integrate(&f, lo, t, 1e-11);
            assert!((part - law.cdf(t).unwrap()).abs() < 1e-8, "{law:?}");
        }
    }

    #[test]
    fn sample_means_match() {
        let laws = [
            BaseDistribution::normal(1.0, 2.0).unwrap(),
            BaseDistribution::two_point(-1.0, 3.0, 0.25).unwrap(),
            BaseDistribution::bounded_uniform(-1.0, 3.0).unwrap(),
            BaseDistribution::sub_weibull_folded(0.5, 1.5, 1.0).unwrap(),
        ];
        for law in &laws {
            let mut s = Stream::new(8);
            let n = 100_000;
            let m: f64 = (0..n).map(|_| law.sample(&mut s)[0]).sum::<f64>() / n as f64;
            let tol = 5.0 * law.sd(0) / (n as f64).sqrt();
            assert!((m - law.mean()[0]).abs() < tol, "{law:?}: {m}");
        }
    }

    #[test]
    fn correlated_gaussian_covariance() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.8, 0.8, 1.0]);
        let law = BaseDistribution::gaussian(vec![0.0, 0.0], cov).unwrap();
        let mut s = Stream::new(4);
        let n = 100_000;
        let c01: f64 = (0..n)
            .map(|_| {
                let x = law.sample(&mut s);
                x[0] * x[1]
            })
            .sum::<f64>()
            / n as f64;
        assert!((c01 - 0.8).abs() < 0.03);
    }

    #[test]
    fn projection_of_gaussian() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let law = BaseDistribution::gaussian(vec![1.0, -1.0], cov).unwrap();
        let p = law.project(&[0.6, 0.8]).unwrap();
        assert!((p.mean()[0] - (-0.2)).abs() < 1e-12);
        let var = 0.36 * 2.0 + 2.0 * 0.48 * 0.5 + 0.64;
        assert!((p.sd(0) - f64::sqrt(var)).abs() < 1e-12);
    }

    #[test]
    fn serde_round_trip() {
        let law = BaseDistribution::gaussian(vec![1.0, 2.0], DMatrix::identity(2, 2)).unwrap();
        let json = serde_json::to_string(&law).unwrap();
        let back: BaseDistribution = serde_json::from_str(&json).unwrap();
        assert_eq!(back, law);
    }
}
