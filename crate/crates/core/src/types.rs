//! The extended observation space `ℝ ∪ {⋆}`, revelation patterns, pattern
//! laws and the inverse-propensity-weighted covariance.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt;

/// A coordinate that is either an observed finite real or the missing token ⋆.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtendedValue {
    Observed(f64),
    Missing,
}

impl ExtendedValue {
    /// Validating constructor; NaN and infinities are rejected.
    pub fn observed(x: f64) -> Result<Self> {
        if x.is_finite() {
            Ok(ExtendedValue::Observed(x))
        } else {
            Err(Error::domain(format!("non-finite observation {x}")))
        }
    }

    #[inline]
    pub fn value(self) -> Option<f64> {
        match self {
            ExtendedValue::Observed(x) => Some(x),
            ExtendedValue::Missing => None,
        }
    }

    #[inline]
    pub fn is_missing(self) -> bool {
        matches!(self, ExtendedValue::Missing)
    }

    /// Shifts an observed value; ⋆ stays ⋆.
    pub fn shifted(self, by: f64) -> Self {
        match self {
            ExtendedValue::Observed(x) => ExtendedValue::Observed(x + by),
            ExtendedValue::Missing => ExtendedValue::Missing,
        }
    }

    pub fn scaled(self, by: f64) -> Self {
        match self {
            ExtendedValue::Observed(x) => ExtendedValue::Observed(x * by),
            ExtendedValue::Missing => ExtendedValue::Missing,
        }
    }
}

impl fmt::Display for ExtendedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedValue::Observed(x) => write!(f, "{x}"),
            ExtendedValue::Missing => f.write_str("⋆"),
        }
    }
}

/// Observed values of a univariate sample, in input order.
pub fn observed_values(sample: &[ExtendedValue]) -> Vec<f64> {
    sample.iter().filter_map(|z| z.value()).collect()
}

/// A point of `ℝ_⋆^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedVector {
    coords: Vec<ExtendedValue>,
}

impl ExtendedVector {
    pub fn new(coords: Vec<ExtendedValue>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Dimension {
                expected: 1,
                got: 0,
            });
        }
        Ok(Self { coords })
    }

    /// A fully observed vector.
    pub fn from_reals(x: &[f64]) -> Result<Self> {
        let coords = x
            .iter()
            .map(|&v| ExtendedValue::observed(v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(coords)
    }

    pub fn missing(d: usize) -> Self {
        Self {
            coords: vec![ExtendedValue::Missing; d.max(1)],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    #[inline]
    pub fn get(&self, j: usize) -> ExtendedValue {
        self.coords[j]
    }

    pub fn coords(&self) -> &[ExtendedValue] {
        &self.coords
    }

    pub fn is_fully_observed(&self) -> bool {
        self.coords.iter().all(|c| !c.is_missing())
    }

    pub fn is_fully_missing(&self) -> bool {
        self.coords.iter().all(|c| c.is_missing())
    }

    /// The real vector when every coordinate is observed.
    pub fn to_reals(&self) -> Option<Vec<f64>> {
        self.coords.iter().map(|c| c.value()).collect()
    }

    pub fn pattern(&self) -> RevelationPattern {
        RevelationPattern(self.coords.iter().map(|c| !c.is_missing()).collect())
    }

    pub fn shifted(&self, by: &[f64]) -> Self {
        Self {
            coords: self
                .coords
                .iter()
                .zip(by)
                .map(|(c, b)| c.shifted(*b))
                .collect(),
        }
    }
}

/// A revelation vector `ω ∈ {0,1}^d`; `true` means observed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RevelationPattern(pub Vec<bool>);

impl RevelationPattern {
    pub fn full(d: usize) -> Self {
        Self(vec![true; d])
    }

    pub fn empty(d: usize) -> Self {
        Self(vec![false; d])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reveals(&self, j: usize) -> bool {
        self.0[j]
    }
}

/// `x ⊛ ω`: coordinate `j` is `x_j` where `ω_j = 1` and ⋆ otherwise.
pub fn make_observation(x: &[f64], omega: &RevelationPattern) -> Result<ExtendedVector> {
    if x.len() != omega.len() {
        return Err(Error::Dimension {
            expected: omega.len(),
            got: x.len(),
        });
    }
    let coords = x
        .iter()
        .zip(&omega.0)
        .map(|(&v, &seen)| {
            if seen {
                ExtendedValue::observed(v)
            } else {
                Ok(ExtendedValue::Missing)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    ExtendedVector::new(coords)
}

/// Masks an already extended vector a second time.
pub fn remask(z: &ExtendedVector, omega: &RevelationPattern) -> Result<ExtendedVector> {
    if z.dim() != omega.len() {
        return Err(Error::Dimension {
            expected: omega.len(),
            got: z.dim(),
        });
    }
    let coords = z
        .coords
        .iter()
        .zip(&omega.0)
        .map(|(&c, &seen)| if seen { c } else { ExtendedValue::Missing })
        .collect();
    ExtendedVector::new(coords)
}

/// Indices of rows whose every coordinate is observed, in increasing order.
pub fn observed_indices(sample: &[ExtendedVector]) -> Vec<usize> {
    sample
        .iter()
        .enumerate()
        .filter(|(_, z)| z.is_fully_observed())
        .map(|(i, _)| i)
        .collect()
}

/// Per-coordinate observed row indices: entry `j` lists the rows with
/// coordinate `j` observed.
pub fn observed_indices_by_coordinate(sample: &[ExtendedVector], d: usize) -> Vec<Vec<usize>> {
    (0..d)
        .map(|j| {
            sample
                .iter()
                .enumerate()
                .filter(|(_, z)| !z.get(j).is_missing())
                .map(|(i, _)| i)
                .collect()
        })
        .collect()
}

/// A law `π` on revelation patterns with sparse support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PatternDistributionRepr", into = "PatternDistributionRepr")]
pub struct PatternDistribution {
    dim: usize,
    support: Vec<RevelationPattern>,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PatternDistributionRepr {
    dim: usize,
    support: Vec<Vec<bool>>,
    probs: Vec<f64>,
}

impl TryFrom<PatternDistributionRepr> for PatternDistribution {
    type Error = Error;

    fn try_from(r: PatternDistributionRepr) -> Result<Self> {
        let entries = r
            .support
            .into_iter()
            .map(RevelationPattern)
            .zip(r.probs)
            .collect();
        PatternDistribution::new(r.dim, entries)
    }
}

impl From<PatternDistribution> for PatternDistributionRepr {
    fn from(p: PatternDistribution) -> Self {
        Self {
            dim: p.dim,
            support: p.support.into_iter().map(|s| s.0).collect(),
            probs: p.probs,
        }
    }
}

const PROB_SUM_TOL: f64 = 1e-12;

impl PatternDistribution {
    /// Validates and normalises. Probabilities must be nonnegative and sum to
    /// one within `1e-12`; patterns must be distinct and of length `d`.
    /// Zero-probability entries are dropped.
    pub fn new(d: usize, entries: Vec<(RevelationPattern, f64)>) -> Result<Self> {
        if d == 0 {
            return Err(Error::domain("pattern dimension must be at least 1"));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut total = 0.0;
        for (s, p) in &entries {
            if s.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: s.len(),
                });
            }
            if !(p.is_finite() && *p >= 0.0) {
                return Err(Error::domain(format!("invalid pattern probability {p}")));
            }
            if !seen.insert(s.clone()) {
                return Err(Error::domain("duplicate revelation pattern"));
            }
            total += p;
        }
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::domain(format!(
                "pattern probabilities sum to {total}, not 1"
            )));
        }
        let (support, probs) = entries
            .into_iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(s, p)| (s, p / total))
            .unzip();
        Ok(Self {
            dim: d,
            support,
            probs,
        })
    }

    /// Univariate shorthand: observed with probability `q`.
    pub fn univariate(q: f64) -> Result<Self> {
        Self::all_or_nothing(1, q)
    }

    /// `π([d]) = q`, `π(∅) = 1 - q`.
    pub fn all_or_nothing(d: usize, q: f64) -> Result<Self> {
        check_unit(q, "q")?;
        Self::new(
            d,
            vec![
                (RevelationPattern::full(d), q),
                (RevelationPattern::empty(d), 1.0 - q),
            ],
        )
    }

    /// Each coordinate observed independently with its own rate.
    pub fn independent(rates: &[f64]) -> Result<Self> {
        let d = rates.len();
        if d == 0 || d > 20 {
            return Err(Error::domain("independent patterns need 1 <= d <= 20"));
        }
        for &q in rates {
            check_unit(q, "coordinate rate")?;
        }
        let mut entries = Vec::with_capacity(1 << d);
        // Enumerate so that the all-observed pattern comes first.
        for mask in 0u32..(1 << d) {
            let bits: Vec<bool> = (0..d).map(|j| mask & (1 << j) == 0).collect();
            let p = bits
                .iter()
                .zip(rates)
                .map(|(&b, &q)| if b { q } else { 1.0 - q })
                .product::<f64>();
            entries.push((RevelationPattern(bits), p));
        }
        Self::new(d, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> impl Iterator<Item = (&RevelationPattern, f64)> {
        self.support.iter().zip(self.probs.iter().copied())
    }

    /// `q_{jk} = π({S : {j, k} ⊆ S})`.
    pub fn pair_rate(&self, j: usize, k: usize) -> f64 {
        self.support()
            .filter(|(s, _)| s.reveals(j) && s.reveals(k))
            .map(|(_, p)| p)
            .sum()
    }

    /// `q_j = q_{jj}`.
    pub fn coordinate_rate(&self, j: usize) -> f64 {
        self.pair_rate(j, j)
    }

    /// Mass of the fully observed pattern.
    pub fn full_rate(&self) -> f64 {
        self.support()
            .filter(|(s, _)| s.0.iter().all(|&b| b))
            .map(|(_, p)| p)
            .sum()
    }

    /// True when every pattern in the support is `∅` or `[d]`.
    pub fn is_all_or_nothing(&self) -> bool {
        self.support
            .iter()
            .all(|s| s.0.iter().all(|&b| b) || s.0.iter().all(|&b| !b))
    }

    /// One draw; consumes a single uniform and walks the support in order.
    pub fn sample(&self, stream: &mut crate::rng::Stream) -> RevelationPattern {
        let u = stream.uniform();
        let mut acc = 0.0;
        for (s, p) in self.support() {
            acc += p;
            if u < acc {
                return s.clone();
            }
        }
        self.support
            .last()
            .cloned()
            .unwrap_or_else(|| RevelationPattern::empty(self.dim))
    }
}

/// How often coordinates are revealed under the MCAR component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Missingness {
    /// Univariate / all-or-nothing rate `q = π([d])`.
    Rate(f64),
    Patterns(PatternDistribution),
}

/// `(ε, q or π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationParams {
    pub epsilon: f64,
    pub missingness: Missingness,
}

impl ContaminationParams {
    pub fn new(epsilon: f64, missingness: Missingness) -> Result<Self> {
        let params = Self {
            epsilon,
            missingness,
        };
        params.kappa()?;
        Ok(params)
    }

    /// The rate entering `κ`: `q`, or `min_j q_j` for a pattern law.
    pub fn q(&self) -> f64 {
        match &self.missingness {
            Missingness::Rate(q) => *q,
            Missingness::Patterns(p) => (0..p.dim())
                .map(|j| p.coordinate_rate(j))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn kappa(&self) -> Result<f64> {
        effective_contamination(self.epsilon, self.q())
    }
}

fn check_unit(x: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} = {x} outside [0, 1]")))
    }
}

/// `κ = ε / (q (1 - ε))`.
pub fn effective_contamination(epsilon: f64, q: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::domain(format!("epsilon = {epsilon} outside [0, 1)")));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::domain(format!("q = {q} outside (0, 1]")));
    }
    Ok(epsilon / (q * (1.0 - epsilon)))
}

/// `(Σ^IPW)_{jk} = q_{jk} / (q_j q_k) · Σ_{jk}`.
pub fn sigma_ipw(sigma: &DMatrix<f64>, pi: &PatternDistribution) -> Result<DMatrix<f64>> {
    let d = pi.dim();
    if sigma.nrows() != d || sigma.ncols() != d {
        return Err(Error::Dimension {
            expected: d,
            got: sigma.nrows(),
        });
    }
    for j in 0..d {
        for k in 0..j {
            if sigma[(j, k)] != sigma[(k, j)] {
                return Err(Error::domain("covariance matrix is not symmetric"));
            }
        }
    }
    let rates: Vec<f64> = (0..d).map(|j| pi.coordinate_rate(j)).collect();
    if let Some(j) = rates.iter().position(|&q| q <= 0.0) {
        return Err(Error::domain(format!("coordinate {j} never observed")));
    }
    let mut out = DMatrix::zeros(d, d);
    for j in 0..d {
        for k in j..d {
            let v = pi.pair_rate(j, k) / (rates[j] * rates[k]) * sigma[(j, k)];
            out[(j, k)] = v;
            out[(k, j)] = v;
        }
    }
    Ok(out)
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn op_norm_sym(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// `r(A) = tr(A) / ‖A‖_op` with `0/0 := 0`.
pub fn effective_rank(a: &DMatrix<f64>) -> f64 {
    let op = op_norm_sym(a);
    if op == 0.0 {
        0.0
    } else {
        a.trace() / op
    }
}

/// Smallest eigenvalue relative to the operator norm; `Σ^IPW` should be PSD
/// up to `-1e-8` on this scale.
pub fn relative_min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let op = op_norm_sym(a);
    if op == 0.0 {
        return 0.0;
    }
    a.clone().symmetric_eigenvalues().min() / op
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn observation_examples() {
        let z = make_observation(&[1.5, -2.0], &RevelationPattern(vec![true, false])).unwrap();
        assert_eq!(
            z.coords(),
            &[ExtendedValue::Observed(1.5), ExtendedValue::Missing]
        );
        let z = make_observation(&[0.0], &RevelationPattern(vec![true])).unwrap();
        assert_eq!(z.coords(), &[ExtendedValue::Observed(0.0)]);
        let z = make_observation(&[3.0, 4.0], &RevelationPattern::empty(2)).unwrap();
        assert!(z.is_fully_missing());
    }

    #[test]
    fn observation_rejects_mismatch_and_nan() {
        assert!(matches!(
            make_observation(&[1.0], &RevelationPattern::full(2)),
            Err(Error::Dimension { .. })
        ));
        assert!(make_observation(&[f64::NAN], &RevelationPattern::full(1)).is_err());
        // A NaN behind a zero bit is never inspected.
        assert!(make_observation(&[f64::NAN], &RevelationPattern::empty(1)).is_ok());
    }

    #[test]
    fn remask_is_idempotent() {
        let omega = RevelationPattern(vec![true, false, true]);
        let z = make_observation(&[1.0, 2.0, 3.0], &omega).unwrap();
        assert_eq!(remask(&z, &omega).unwrap(), z);
    }

    #[test]
    fn observed_index_examples() {
        let m = ExtendedValue::Missing;
        let o = ExtendedValue::Observed;
        let rows = vec![
            ExtendedVector::new(vec![o(1.0), m]).unwrap(),
            ExtendedVector::new(vec![m, m]).unwrap(),
            ExtendedVector::new(vec![o(2.0), o(3.0)]).unwrap(),
        ];
        assert_eq!(observed_indices(&rows), vec![2]);
        assert!(observed_indices(&[]).is_empty());
        let uni: Vec<_> = [m, o(5.0), m]
            .into_iter()
            .map(|c| ExtendedVector::new(vec![c]).unwrap())
            .collect();
        assert_eq!(observed_indices(&uni), vec![1]);
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(effective_contamination(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(effective_contamination(0.5, 0.5).unwrap(), 2.0);
        assert!((effective_contamination(0.8, 1.0).unwrap() - 4.0).abs() < 1e-12);
        assert!(effective_contamination(0.5, 0.0).is_err());
        assert!(effective_contamination(1.0, 0.5).is_err());
    }

    #[test]
    fn kappa_monotone_on_grid() {
        let eps: Vec<f64> = (0..20).map(|i| i as f64 * 0.049).collect();
        let qs: Vec<f64> = (1..=20).map(|i| i as f64 * 0.05).collect();
        for &q in &qs {
            for w in eps.windows(2) {
                assert!(
                    effective_contamination(w[1], q).unwrap()
                        > effective_contamination(w[0], q).unwrap()
                );
            }
        }
        for &e in &eps[1..] {
            for w in qs.windows(2) {
                assert!(
                    effective_contamination(e, w[1]).unwrap()
                        < effective_contamination(e, w[0]).unwrap()
                );
            }
        }
    }

    #[test]
    fn pattern_distribution_validation() {
        let p = RevelationPattern::full(2);
        assert!(PatternDistribution::new(2, vec![(p.clone(), 0.5)]).is_err());
        assert!(PatternDistribution::new(2, vec![(p.clone(), 0.5), (p.clone(), 0.5)]).is_err());
        assert!(PatternDistribution::new(2, vec![(p, 1.0 + 1e-13)]).is_ok());
        assert!(PatternDistribution::univariate(1.2).is_err());
    }

    #[test]
    fn pattern_sampling_frequency() {
        let pi = PatternDistribution::independent(&[0.3, 0.9]).unwrap();
        let mut s = Stream::new(1);
        let n = 100_000;
        let mut c = [0usize; 2];
        for _ in 0..n {
            let w = pi.sample(&mut s);
            c[0] += w.reveals(0) as usize;
            c[1] += w.reveals(1) as usize;
        }
        assert!((c[0] as f64 / n as f64 - 0.3).abs() < 0.01);
        assert!((c[1] as f64 / n as f64 - 0.9).abs() < 0.01);
    }

    #[test]
    fn sigma_ipw_no_missingness_is_identity_map() {
        let pi = PatternDistribution::all_or_nothing(2, 1.0).unwrap();
        let out = sigma_ipw(&DMatrix::identity(2, 2), &pi).unwrap();
        assert_eq!(out, DMatrix::identity(2, 2));
    }

    #[test]
    fn sigma_ipw_heterogeneous_rates() {
        // Σ = I + 11ᵀ, q1 = 1/2, q2 = 1 independent: I + 11ᵀ + 2 e1 e1ᵀ.
        let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let pi = PatternDistribution::independent(&[0.5, 1.0]).unwrap();
        let out = sigma_ipw(&sigma, &pi).unwrap();
        assert_eq!(out, DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 2.0]));
    }

    #[test]
    fn sigma_ipw_diagonal_case() {
        let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let pi = PatternDistribution::independent(&[0.5, 0.5]).unwrap();
        assert!((pi.pair_rate(0, 1) - 0.25).abs() < 1e-15);
        let out = sigma_ipw(&sigma, &pi).unwrap();
        assert_eq!(out, DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 6.0]));
    }

    #[test]
    fn sigma_ipw_all_or_nothing_scales() {
        let sigma = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.3, 1.0, 0.2, -0.1, 0.2, 1.5]);
        let pi = PatternDistribution::all_or_nothing(3, 0.4).unwrap();
        let out = sigma_ipw(&sigma, &pi).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                assert!((out[(j, k)] - sigma[(j, k)] / 0.4).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sigma_ipw_rejects_unobserved_coordinate() {
        let pi = PatternDistribution::independent(&[0.0, 1.0]).unwrap();
        assert!(sigma_ipw(&DMatrix::identity(2, 2), &pi).is_err());
    }

    #[test]
    fn effective_rank_conventions() {
        assert_eq!(effective_rank(&DMatrix::zeros(3, 3)), 0.0);
        assert!((effective_rank(&DMatrix::identity(4, 4)) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_ipw_psd_on_random_patterns() {
        // Recorded rather than asserted beyond the stated tolerance.
        let mut s = Stream::new(99);
        let mut worst = f64::INFINITY;
        for _ in 0..200 {
            let rates: Vec<f64> = (0..3).map(|_| 0.05 + 0.95 * s.uniform()).collect();
            let pi = PatternDistribution::independent(&rates).unwrap();
            let a = DMatrix::from_fn(3, 3, |_, _| s.normal());
            let sigma = &a * a.transpose();
            let ipw = sigma_ipw(&sigma, &pi).unwrap();
            let out = ipw.clone();
            assert_eq!(out, out.transpose());
            for j in 0..3 {
                assert!((ipw[(j, j)] - sigma[(j, j)] / rates[j]).abs() < 1e-12 * sigma[(j, j)]);
            }
            worst = worst.min(relative_min_eigenvalue(&ipw));
        }
        eprintln!("sigma_ipw: smallest relative eigenvalue over 200 draws = {worst:e}");
        assert!(worst >= -1e-8);
    }
}
