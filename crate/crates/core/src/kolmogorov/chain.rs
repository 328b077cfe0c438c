//! Distance from an empirical law to a realisable set `ℛ(P, ε, q)`.
//!
//! With `V_k` the model mass below the `k`-th order statistic, the distance
//! is the smallest `t` for which the chain
//! `V_0 = 0`, `L_k ≤ V_{k+1} - V_k ≤ U_k`
//! fits inside per-node windows `[α_k - t, β_k + t] ∩ [lc_k, hc_k]`. Every
//! constraint is a difference constraint on a path, so feasibility at level
//! `t` holds iff no cycle through one lower and one upper window bound is
//! negative. Each such cycle is linear in `t`; taking the worst one over all
//! node pairs with prefix maxima gives the exact optimum in `O(m)`.

use super::distance::EmpiricalSummary;
use crate::error::{Error, Result};
use crate::models::BaseDistribution;
use serde::{Deserialize, Serialize};

/// `(P, ε, q)` for a univariate, absolutely continuous `P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealisableSetSpec {
    pub base: BaseDistribution,
    pub epsilon: f64,
    pub q: f64,
}

impl RealisableSetSpec {
    pub fn new(base: BaseDistribution, epsilon: f64, q: f64) -> Result<Self> {
        if base.dim() != 1 {
            return Err(Error::Dimension {
                expected: 1,
                got: base.dim(),
            });
        }
        if !base.is_absolutely_continuous() {
            return Err(Error::Model(
                "realisable set distances need an absolutely continuous base".into(),
            ));
        }
        crate::types::effective_contamination(epsilon, q)?;
        Ok(Self { base, epsilon, q })
    }

    /// `ℛ(N(θ, σ²), ε, q)`.
    pub fn gaussian(theta: f64, sigma: f64, epsilon: f64, q: f64) -> Result<Self> {
        Self::new(BaseDistribution::normal(theta, sigma)?, epsilon, q)
    }

    /// The residual set `ℛ(N(0, σ²), 1 - q(1-ε), 1)` of the regression model.
    pub fn linear_residual(sigma: f64, epsilon: f64, q: f64) -> Result<Self> {
        crate::types::effective_contamination(epsilon, q)?;
        Self::gaussian(0.0, sigma, 1.0 - q * (1.0 - epsilon), 1.0)
    }

    pub fn lower_rate(&self) -> f64 {
        self.q * (1.0 - self.epsilon)
    }

    pub fn upper_rate(&self) -> f64 {
        self.lower_rate() + self.epsilon
    }
}

/// Per-gap increment bounds `L_i ≤ V_{i+1} - V_i ≤ U_i`, `i = 0..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ChainBounds {
    pub fn new(emp: &EmpiricalSummary, set: &RealisableSetSpec) -> Self {
        let (lo_rate, hi_rate) = (set.lower_rate(), set.upper_rate());
        let z = emp.sorted_observed();
        let mut prev = 0.0;
        let mut lower = Vec::with_capacity(z.len() + 1);
        let mut upper = Vec::with_capacity(z.len() + 1);
        for &x in z.iter().chain(std::iter::once(&f64::INFINITY)) {
            let f = if x.is_finite() {
                set.base.cdf(x).expect("univariate base")
            } else {
                1.0
            };
            let gap = (f - prev).max(0.0);
            prev = f;
            lower.push(lo_rate * gap);
            upper.push(hi_rate * gap);
        }
        Self { lower, upper }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }
}

/// Node windows: `V_k ∈ [max(α_k - t, lc_k), min(β_k + t, hc_k)]`.
#[derive(Debug, Clone)]
pub(crate) struct Windows {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub lc: Vec<f64>,
    pub hc: Vec<f64>,
    /// Extra lower bound on `t` not expressed through the windows.
    pub t_floor: f64,
}

impl Windows {
    /// Windows of the plain program for `m` observations out of `n`.
    pub fn plain(m: usize, n: usize) -> Self {
        let nf = n as f64;
        let mut w = Self::with_origin(m);
        for k in 1..=m {
            w.alpha[k] = k as f64 / nf;
            w.beta[k] = (k - 1) as f64 / nf;
        }
        w.alpha[m + 1] = m as f64 / nf;
        w.beta[m + 1] = m as f64 / nf;
        w
    }

    /// Windows of the symmetrised program with `V_{m+1} = w` held fixed.
    pub fn symmetric(m: usize, n: usize, w_total: f64) -> Self {
        let nf = n as f64;
        let mut w = Self::with_origin(m);
        for k in 1..=m {
            w.alpha[k] = (k as f64 / nf).max(w_total - (m - k) as f64 / nf);
            w.beta[k] = ((k - 1) as f64 / nf).min(w_total - (m - k + 1) as f64 / nf);
        }
        w.alpha[m + 1] = f64::NEG_INFINITY;
        w.beta[m + 1] = f64::INFINITY;
        w.lc[m + 1] = w_total;
        w.hc[m + 1] = w_total;
        w.t_floor = (w_total - m as f64 / nf).abs();
        w
    }

    fn with_origin(m: usize) -> Self {
        let len = m + 2;
        let mut w = Self {
            alpha: vec![0.0; len],
            beta: vec![0.0; len],
            lc: vec![0.0; len],
            hc: vec![1.0; len],
            t_floor: 0.0,
        };
        w.alpha[0] = f64::NEG_INFINITY;
        w.beta[0] = f64::INFINITY;
        w.hc[0] = 0.0;
        w
    }

    pub fn lo(&self, k: usize, t: f64) -> f64 {
        (self.alpha[k] - t).max(self.lc[k])
    }

    pub fn hi(&self, k: usize, t: f64) -> f64 {
        (self.beta[k] + t).min(self.hc[k])
    }
}

/// Prefix sums `CL_k = Σ_{i<k} L_i` and `CU_k = Σ_{i<k} U_i`, `k = 0..=m+1`.
pub(crate) fn prefix_sums(bounds: &ChainBounds) -> (Vec<f64>, Vec<f64>) {
    let len = bounds.len() + 1;
    let mut cl = vec![0.0; len];
    let mut cu = vec![0.0; len];
    for k in 1..len {
        cl[k] = cl[k - 1] + bounds.lower[k - 1];
        cu[k] = cu[k - 1] + bounds.upper[k - 1];
    }
    (cl, cu)
}

/// Smallest feasible `t` (or `∞`) by the pairwise cycle conditions.
pub(crate) fn min_level(win: &Windows, bounds: &ChainBounds) -> f64 {
    debug_assert_eq!(bounds.len() + 1, win.alpha.len());
    let (cl, cu) = prefix_sums(bounds);
    min_level_with(&cl, &cu, win.t_floor, |k| {
        (win.alpha[k], win.beta[k], win.lc[k], win.hc[k])
    })
}

/// [`min_level`] with windows `(α_k, β_k, lc_k, hc_k)` supplied per node.
#[inline]
pub(crate) fn min_level_with<W: Fn(usize) -> (f64, f64, f64, f64)>(
    cl: &[f64],
    cu: &[f64],
    t_floor: f64,
    window: W,
) -> f64 {
    let len = cl.len();
    let neg = f64::NEG_INFINITY;
    let mut t = t_floor.max(0.0);
    // Prefix maxima over j < k.
    let (mut pu_beta, mut pu_hc) = (neg, neg); // CU_j - β_j, CU_j - hc_j
    let (mut pl_alpha, mut pl_lc) = (neg, neg); // α_j - CL_j, lc_j - CL_j
    for k in 0..len {
        let (a, b, lc, hc) = window(k);
        if lc > hc {
            return f64::INFINITY;
        }
        t = t.max(0.5 * (a - b)).max(a - hc).max(lc - b);
        if k > 0 {
            let (ak, lk) = (a - cu[k], lc - cu[k]);
            t = t
                .max(0.5 * (ak + pu_beta))
                .max(ak + pu_hc)
                .max(lk + pu_beta);
            if lk + pu_hc > 0.0 {
                return f64::INFINITY;
            }
            let (bk, hk) = (cl[k] - b, cl[k] - hc);
            t = t
                .max(0.5 * (pl_alpha + bk))
                .max(pl_alpha + hk)
                .max(pl_lc + bk);
            if pl_lc + hk > 0.0 {
                return f64::INFINITY;
            }
        }
        pu_beta = pu_beta.max(cu[k] - b);
        pu_hc = pu_hc.max(cu[k] - hc);
        pl_alpha = pl_alpha.max(a - cl[k]);
        pl_lc = pl_lc.max(lc - cl[k]);
    }
    t
}

/// The symmetrised program at fixed `w = V_{m+1}`, without building
/// [`Windows`].
#[cfg(test)]
fn sym_level(cl: &[f64], cu: &[f64], m: usize, n: usize, w: f64) -> f64 {
    let nf = n as f64;
    let inf = f64::INFINITY;
    min_level_with(cl, cu, (w - m as f64 / nf).abs(), |k| {
        if k == 0 {
            (-inf, inf, 0.0, 0.0)
        } else if k <= m {
            let a = (k as f64 / nf).max(w - (m - k) as f64 / nf);
            let b = ((k - 1) as f64 / nf).min(w - (m - k + 1) as f64 / nf);
            (a, b, 0.0, 1.0)
        } else {
            (-inf, inf, w, w)
        }
    })
}

/// Forward interval propagation: feasible iff every propagated window is
/// nonempty.
pub(crate) fn feasible(win: &Windows, bounds: &ChainBounds, t: f64) -> bool {
    if t < win.t_floor {
        return false;
    }
    let (mut lo, mut hi) = (win.lo(0, t), win.hi(0, t));
    if lo > hi {
        return false;
    }
    for k in 1..win.alpha.len() {
        lo = (lo + bounds.lower[k - 1]).max(win.lo(k, t));
        hi = (hi + bounds.upper[k - 1]).min(win.hi(k, t));
        if lo > hi + 1e-15 {
            return false;
        }
    }
    true
}

/// `d_K(R̂_n, ℛ(P, ε, q))`, exact up to rounding.
pub fn dist_to_realisable(emp: &EmpiricalSummary, set: &RealisableSetSpec) -> f64 {
    let bounds = ChainBounds::new(emp, set);
    min_level(&Windows::plain(emp.m(), emp.n_total()), &bounds)
}

/// The same value by bisection on `t` with interval propagation; monotone
/// feasibility is asserted along the way.
pub fn dist_to_realisable_bisection(emp: &EmpiricalSummary, set: &RealisableSetSpec) -> f64 {
    let bounds = ChainBounds::new(emp, set);
    let win = Windows::plain(emp.m(), emp.n_total());
    bisect_level(&win, &bounds)
}

pub(crate) fn bisect_level(win: &Windows, bounds: &ChainBounds) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    if !feasible(win, bounds, hi) {
        return f64::INFINITY;
    }
    if feasible(win, bounds, lo) {
        return 0.0;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if feasible(win, bounds, mid) {
            assert!(
                feasible(win, bounds, 0.5 * (mid + hi)),
                "feasibility not monotone"
            );
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// The symmetrised distance `d_K^sym(R̂_n, ℛ(P, ε, q))`.
///
/// For a fixed total observed mass `w = V_{m+1}` the program is the plain
/// one with tightened windows; its value `g(w)` is convex in `w` (a
/// projection of a polyhedron), so `w` is found by golden section over
/// `[Σ L, Σ U] ∩ [0, 1]`.
pub fn dist_to_realisable_sym(emp: &EmpiricalSummary, set: &RealisableSetSpec) -> f64 {
    let bounds = ChainBounds::new(emp, set);
    let profile = SymProfile::new(&bounds, emp.m(), emp.n_total());
    let (w_lo, w_hi) = profile.range;
    if w_hi < w_lo {
        return f64::INFINITY;
    }
    let g = |w: f64| profile.level(w);
    if w_hi == w_lo {
        return g(w_lo);
    }
    let (_, best) = crate::special::golden_min(g, w_lo, w_hi, 1e-15);
    best.min(g(w_lo)).min(g(w_hi))
}

/// The symmetrised level as a function of `w` alone. With
/// `c = w - m/n` every window bound is its `c = 0` value shifted by `c⁺`
/// (lower ends) or `c⁻` (upper ends), so each cycle condition has one of
/// six shapes and only their worst constants need to be kept:
/// `t(w) = max(|c|, A + |c|/2, B + c⁺, C + c⁻, D + w + c⁻, E - w + c⁺)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SymProfile {
    pub consts: [f64; 5],
    pub m_over_n: f64,
    /// Feasible `w`.
    pub range: (f64, f64),
}

impl SymProfile {
    pub fn new(bounds: &ChainBounds, m: usize, n: usize) -> Self {
        let (cl, cu) = prefix_sums(bounds);
        let nf = n as f64;
        let neg = f64::NEG_INFINITY;
        let (mut a, mut b, mut c) = (neg, neg, neg);
        let (mut pu_beta, mut pu_hc, mut pl_alpha) = (neg, 0.0_f64, neg);
        for k in 1..=m {
            let (a0, b0) = (k as f64 / nf, (k - 1) as f64 / nf);
            a = a.max(0.5 * (a0 - b0));
            b = b.max(a0 - 1.0);
            c = c.max(-b0);
            let ak = a0 - cu[k];
            a = a.max(0.5 * (ak + pu_beta));
            b = b.max(ak + pu_hc);
            c = c.max(-cu[k] + pu_beta);
            let bk = cl[k] - b0;
            a = a.max(0.5 * (pl_alpha + bk));
            b = b.max(pl_alpha + cl[k] - 1.0);
            c = c.max(bk);
            pu_beta = pu_beta.max(cu[k] - b0);
            pu_hc = pu_hc.max(cu[k] - 1.0);
            pl_alpha = pl_alpha.max(a0 - cl[k]);
        }
        let d = pu_beta - cu[m + 1];
        let e = pl_alpha + cl[m + 1];
        Self {
            consts: [a, b, c, d, e],
            m_over_n: m as f64 / nf,
            range: (cl[m + 1].max(0.0), (cu[m + 1] - pu_hc).min(1.0)),
        }
    }

    pub fn level(&self, w: f64) -> f64 {
        let [a, b, c, d, e] = self.consts;
        let s = w - self.m_over_n;
        let (sp, sn) = (s.max(0.0), (-s).max(0.0));
        s.abs()
            .max(a + 0.5 * s.abs())
            .max(b + sp)
            .max(c + sn)
            .max(d + w + sn)
            .max(e - w + sp)
    }
}

/// The symmetrised distance by a scan of `w` on a `1e-4` grid followed by
/// local bisection of the level; a slower cross-check.
pub fn dist_to_realisable_sym_scan(emp: &EmpiricalSummary, set: &RealisableSetSpec) -> f64 {
    let bounds = ChainBounds::new(emp, set);
    let (m, n) = (emp.m(), emp.n_total());
    let w_lo = bounds.lower.iter().sum::<f64>().max(0.0);
    let w_hi = bounds.upper.iter().sum::<f64>().min(1.0);
    let steps = ((w_hi - w_lo) / 1e-4).ceil().max(1.0) as usize;
    let mut best = f64::INFINITY;
    let mut best_w = w_lo;
    for s in 0..=steps {
        let w = (w_lo + s as f64 * 1e-4).min(w_hi);
        let v = bisect_level(&Windows::symmetric(m, n, w), &bounds);
        if v < best {
            best = v;
            best_w = w;
        }
    }
    let (a, b) = ((best_w - 1e-4).max(w_lo), (best_w + 1e-4).min(w_hi));
    let g = |w: f64| bisect_level(&Windows::symmetric(m, n, w), &bounds);
    let (_, refined) = crate::special::golden_min(g, a, b, 1e-12);
    best.min(refined)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn gauss_set(eps: f64, q: f64) -> RealisableSetSpec {
        RealisableSetSpec::gaussian(0.0, 1.0, eps, q).unwrap()
    }

    #[test]
    fn all_missing_case() {
        for &(eps, q) in &[(0.0, 1.0), (0.3, 0.5), (0.7, 0.9)] {
            let emp = EmpiricalSummary::new(vec![], 7).unwrap();
            let d = dist_to_realisable(&emp, &gauss_set(eps, q));
            assert!((d - q * (1.0 - eps)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_point_case() {
        let emp = EmpiricalSummary::new(vec![0.0], 1).unwrap();
        let d = dist_to_realisable(&emp, &gauss_set(0.0, 1.0));
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exact_matches_bisection() {
        let mut s = Stream::new(21);
        for _ in 0..300 {
            let n = 1 + s.index(30);
            let m = s.index(n + 1);
            let obs: Vec<f64> = (0..m).map(|_| 0.7 * s.normal() + 0.3).collect();
            let emp = EmpiricalSummary::new(obs, n).unwrap();
            let set = gauss_set(0.9 * s.uniform(), 0.05 + 0.95 * s.uniform());
            let a = dist_to_realisable(&emp, &set);
            let b = dist_to_realisable_bisection(&emp, &set);
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn sym_golden_matches_scan() {
        let mut s = Stream::new(5);
        for _ in 0..40 {
            let n = 1 + s.index(12);
            let m = s.index(n + 1);
            let obs: Vec<f64> = (0..m).map(|_| s.normal()).collect();
            let emp = EmpiricalSummary::new(obs, n).unwrap();
            let set = gauss_set(0.8 * s.uniform(), 0.1 + 0.9 * s.uniform());
            let a = dist_to_realisable_sym(&emp, &set);
            let b = dist_to_realisable_sym_scan(&emp, &set);
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn inline_sym_windows_match_built_windows() {
        let mut s = Stream::new(77);
        for _ in 0..100 {
            let n = 1 + s.index(20);
            let m = s.index(n + 1);
            let obs: Vec<f64> = (0..m).map(|_| s.normal()).collect();
            let emp = EmpiricalSummary::new(obs, n).unwrap();
            let bounds =
                ChainBounds::new(&emp, &gauss_set(0.6 * s.uniform(), 0.2 + 0.8 * s.uniform()));
            let (cl, cu) = prefix_sums(&bounds);
            let w = s.uniform();
            let a = sym_level(&cl, &cu, m, n, w);
            let p = SymProfile::new(&bounds, m, n);
            if w >= p.range.0 && w <= p.range.1 {
                assert!((p.level(w) - a).abs() < 1e-12, "{} vs {a}", p.level(w));
            }
            let b = min_level(&Windows::symmetric(m, n, w), &bounds);
            assert!(a == b || (a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn sym_all_missing_case() {
        let emp = EmpiricalSummary::new(vec![], 4).unwrap();
        let d = dist_to_realisable_sym(&emp, &gauss_set(0.2, 0.5));
        assert!((d - 0.4).abs() < 1e-9);
    }

    #[test]
    fn sym_floor_for_matching_quantiles() {
        // A continuous law can come no closer than half an atom to an
        // empirical law; quantile data under full freedom attain that floor.
        let set = RealisableSetSpec::linear_residual(1.0, 0.999, 0.001).unwrap();
        let n = 40;
        let obs: Vec<f64> = (1..=n)
            .map(|k| crate::special::norm_quantile((k as f64 - 0.5) / n as f64))
            .collect();
        let emp = EmpiricalSummary::new(obs, n).unwrap();
        let d = dist_to_realisable_sym(&emp, &set);
        assert!((d - 0.5 / n as f64).abs() < 1e-9, "{d}");
    }

    #[test]
    fn residual_set_parameters() {
        let set = RealisableSetSpec::linear_residual(2.0, 0.4, 0.5).unwrap();
        assert!((set.epsilon - 0.7).abs() < 1e-15);
        assert_eq!(set.q, 1.0);
        assert!((set.lower_rate() - 0.3).abs() < 1e-15);
        assert!((set.upper_rate() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn discrete_base_rejected() {
        let b = BaseDistribution::two_point(-1.0, 1.0, 0.5).unwrap();
        assert!(RealisableSetSpec::new(b, 0.1, 0.5).is_err());
    }
}
