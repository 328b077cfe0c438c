//! Distributions on `ℝ_⋆` seen through their lower half-line masses, and
//! the (symmetrised) Kolmogorov distance between two of them.

use crate::error::{Error, Result};
use crate::models::{AdversaryDensity, BaseDistribution, RealisableLaw};
use crate::special::INV_PHI;
use crate::types::ExtendedValue;

/// A law on `ℝ_⋆` given by `t ↦ R((-∞, t])`, its left limits and `R({⋆})`.
pub trait ExtendedCdf {
    /// `R((-∞, t])`.
    fn cdf(&self, t: f64) -> f64;
    /// `R((-∞, t))`.
    fn cdf_left(&self, t: f64) -> f64;
    /// `R(ℝ)`.
    fn observed_mass(&self) -> f64;
    fn star_mass(&self) -> f64 {
        1.0 - self.observed_mass()
    }
    /// Points where the CDF jumps or changes form; for smooth laws a grid
    /// fine enough that the difference of two laws is well resolved.
    fn critical_points(&self) -> Vec<f64>;
    /// True when the law has atoms only (the CDF is a step function).
    fn is_step(&self) -> bool {
        false
    }
}

/// Sorted observed values and the total count, missing included.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSummary {
    sorted: Vec<f64>,
    n_total: usize,
}

impl EmpiricalSummary {
    pub fn new(mut observed: Vec<f64>, n_total: usize) -> Result<Self> {
        if observed.len() > n_total {
            return Err(Error::domain("more observed values than draws"));
        }
        if observed.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("non-finite observation"));
        }
        if n_total == 0 {
            return Err(Error::size("empty sample"));
        }
        observed.sort_by(f64::total_cmp);
        Ok(Self {
            sorted: observed,
            n_total,
        })
    }

    pub fn from_sample(sample: &[ExtendedValue]) -> Result<Self> {
        Self::new(crate::types::observed_values(sample), sample.len())
    }

    pub fn sorted_observed(&self) -> &[f64] {
        &self.sorted
    }

    pub fn m(&self) -> usize {
        self.sorted.len()
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    /// Every observed value moved by `by`.
    pub fn shifted(&self, by: f64) -> Self {
        Self {
            sorted: self.sorted.iter().map(|x| x + by).collect(),
            n_total: self.n_total,
        }
    }
}

impl ExtendedCdf for EmpiricalSummary {
    fn cdf(&self, t: f64) -> f64 {
        self.sorted.partition_point(|&x| x <= t) as f64 / self.n_total as f64
    }

    fn cdf_left(&self, t: f64) -> f64 {
        self.sorted.partition_point(|&x| x < t) as f64 / self.n_total as f64
    }

    fn observed_mass(&self) -> f64 {
        self.m() as f64 / self.n_total as f64
    }

    fn critical_points(&self) -> Vec<f64> {
        let mut v = self.sorted.clone();
        v.dedup();
        v
    }

    fn is_step(&self) -> bool {
        true
    }
}

/// Finitely many atoms on `ℝ` plus the rest at ⋆.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteLaw {
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if atoms.iter().any(|&(x, p)| !x.is_finite() || !(p >= 0.0)) || total > 1.0 + 1e-12 {
            return Err(Error::domain("invalid atoms"));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { atoms })
    }

    pub fn point_mass(x: f64) -> Self {
        Self {
            atoms: vec![(x, 1.0)],
        }
    }

    /// All mass at ⋆.
    pub fn missing() -> Self {
        Self { atoms: Vec::new() }
    }
}

impl ExtendedCdf for DiscreteLaw {
    fn cdf(&self, t: f64) -> f64 {
        self.atoms.iter().filter(|a| a.0 <= t).map(|a| a.1).sum()
    }

    fn cdf_left(&self, t: f64) -> f64 {
        self.atoms.iter().filter(|a| a.0 < t).map(|a| a.1).sum()
    }

    fn observed_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    fn critical_points(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.atoms.iter().map(|a| a.0).collect();
        v.dedup();
        v
    }

    fn is_step(&self) -> bool {
        true
    }
}

const GRID_POINTS: usize = 1025;

fn grid(lo: f64, hi: f64) -> Vec<f64> {
    (0..GRID_POINTS)
        .map(|k| lo + (hi - lo) * k as f64 / (GRID_POINTS - 1) as f64)
        .collect()
}

/// A continuous base law carrying observed mass `mass`; the rest is at ⋆.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledLaw {
    base: BaseDistribution,
    mass: f64,
}

impl ScaledLaw {
    pub fn new(base: BaseDistribution, mass: f64) -> Result<Self> {
        if base.dim() != 1 || !base.is_absolutely_continuous() {
            return Err(Error::Model(
                "scaled law needs a univariate continuous base".into(),
            ));
        }
        if !(0.0..=1.0).contains(&mass) {
            return Err(Error::domain(format!("mass {mass} outside [0, 1]")));
        }
        Ok(Self { base, mass })
    }
}

impl ExtendedCdf for ScaledLaw {
    fn cdf(&self, t: f64) -> f64 {
        self.mass * self.base.cdf(t).expect("univariate")
    }

    fn cdf_left(&self, t: f64) -> f64 {
        self.cdf(t)
    }

    fn observed_mass(&self) -> f64 {
        self.mass
    }

    fn critical_points(&self) -> Vec<f64> {
        let (m, s) = (self.base.mean()[0], self.base.sd(0));
        grid(m - 12.0 * s, m + 12.0 * s)
    }
}

impl ExtendedCdf for AdversaryDensity {
    fn cdf(&self, t: f64) -> f64 {
        AdversaryDensity::cdf(self, t)
    }

    fn cdf_left(&self, t: f64) -> f64 {
        AdversaryDensity::cdf(self, t)
    }

    fn observed_mass(&self) -> f64 {
        AdversaryDensity::observed_mass(self)
    }

    fn critical_points(&self) -> Vec<f64> {
        let span = self.a + self.tau() + 12.0 * self.sigma;
        let mut v = grid(-span, span);
        v.extend([-self.tau(), 0.0, self.tau()]);
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

impl ExtendedCdf for RealisableLaw {
    fn cdf(&self, t: f64) -> f64 {
        RealisableLaw::cdf(self, t)
    }

    fn cdf_left(&self, t: f64) -> f64 {
        RealisableLaw::cdf(self, t)
    }

    fn observed_mass(&self) -> f64 {
        RealisableLaw::observed_mass(self)
    }

    fn critical_points(&self) -> Vec<f64> {
        let (m, s) = (self.base.mean()[0], self.base.sd(0));
        let mut v = grid(m - 12.0 * s, m + 12.0 * s);
        v.extend(self.knots());
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

fn merged_points(f1: &dyn ExtendedCdf, f2: &dyn ExtendedCdf) -> Vec<f64> {
    let mut pts = f1.critical_points();
    pts.extend(f2.critical_points());
    pts.retain(|x| x.is_finite());
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Maximises `g` on `(lo, hi)` by golden section; used only between
/// critical points of two smooth laws.
fn golden_max<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..60 {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d);
        }
    }
    gc.max(gd)
}

fn distance_impl(f1: &dyn ExtendedCdf, f2: &dyn ExtendedCdf, symmetric: bool) -> f64 {
    let (o1, o2) = (f1.observed_mass(), f2.observed_mass());
    // The half-lines (-∞, t] as t → ±∞ give 0 and the observed masses.
    let mut best = (o1 - o2).abs();
    let pts = merged_points(f1, f2);
    let lower = |t: f64| (f1.cdf(t) - f2.cdf(t)).abs();
    let lower_left = |t: f64| (f1.cdf_left(t) - f2.cdf_left(t)).abs();
    let upper = |t: f64| ((o1 - f1.cdf_left(t)) - (o2 - f2.cdf_left(t))).abs();
    let upper_open = |t: f64| ((o1 - f1.cdf(t)) - (o2 - f2.cdf(t))).abs();
    for &p in &pts {
        best = best.max(lower(p)).max(lower_left(p));
        if symmetric {
            best = best.max(upper(p)).max(upper_open(p));
        }
    }
    if !(f1.is_step() || f2.is_step()) {
        for w in pts.windows(2) {
            best = best.max(golden_max(lower, w[0], w[1]));
            if symmetric {
                best = best.max(golden_max(upper, w[0], w[1]));
            }
        }
    }
    best
}

/// `sup_t |R₁((-∞, t]) - R₂((-∞, t])|`, exact for step laws and for a step
/// law against a continuous one.
pub fn kolmogorov_distance(f1: &dyn ExtendedCdf, f2: &dyn ExtendedCdf) -> f64 {
    distance_impl(f1, f2, false)
}

/// As [`kolmogorov_distance`] but also over the upper half-lines `[t, ∞)`.
pub fn sym_kolmogorov_distance(f1: &dyn ExtendedCdf, f2: &dyn ExtendedCdf) -> f64 {
    distance_impl(f1, f2, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emp(values: &[f64], n: usize) -> EmpiricalSummary {
        EmpiricalSummary::new(values.to_vec(), n).unwrap()
    }

    fn std_normal_law() -> ScaledLaw {
        ScaledLaw::new(BaseDistribution::normal(0.0, 1.0).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn plain_examples() {
        let e = emp(&[0.3, -1.0, 2.0], 5);
        assert_eq!(kolmogorov_distance(&e, &e), 0.0);
        let p0 = DiscreteLaw::point_mass(0.0);
        let p1 = DiscreteLaw::point_mass(1.0);
        assert_eq!(kolmogorov_distance(&p0, &p1), 1.0);
        let d = kolmogorov_distance(&emp(&[0.0, 1.0], 2), &std_normal_law());
        assert!((d - 0.5).abs() < 1e-12, "{d}");
    }

    #[test]
    fn symmetric_examples() {
        let e = emp(&[0.3, -1.0, 2.0], 5);
        assert_eq!(sym_kolmogorov_distance(&e, &e), 0.0);
        let d = sym_kolmogorov_distance(&DiscreteLaw::missing(), &DiscreteLaw::point_mass(0.0));
        assert_eq!(d, 1.0);
        let a = emp(&[0.1, 0.5, 0.9, 1.3], 10);
        // Two of the four observations turned into ⋆.
        let b = emp(&[0.1, 0.9], 10);
        assert!(sym_kolmogorov_distance(&a, &b) >= 2.0 / 10.0 - 1e-15);
        // Equal ⋆-mass: the upper half-lines add nothing beyond the plain distance
        // for laws whose lower CDFs differ only by a shift in the middle.
        let c = emp(&[0.1, 0.6, 0.9, 1.3], 10);
        assert!((sym_kolmogorov_distance(&a, &c) - kolmogorov_distance(&a, &c)).abs() < 1e-15);
    }

    #[test]
    fn sym_dominates_plain() {
        let a = emp(&[0.1, 0.5, 0.9], 4);
        let b = emp(&[-0.2, 0.4, 1.0, 1.5], 6);
        assert!(sym_kolmogorov_distance(&a, &b) >= kolmogorov_distance(&a, &b));
    }

    #[test]
    fn two_gaussians_distance() {
        let f = ScaledLaw::new(BaseDistribution::normal(0.0, 1.0).unwrap(), 1.0).unwrap();
        let g = ScaledLaw::new(BaseDistribution::normal(1.0, 1.0).unwrap(), 1.0).unwrap();
        let exact = crate::special::norm_cdf(0.5) - crate::special::norm_cdf(-0.5);
        assert!((kolmogorov_distance(&f, &g) - exact).abs() < 1e-10);
    }
}
