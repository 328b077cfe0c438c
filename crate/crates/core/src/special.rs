//! Scalar numerics shared across modules: Gaussian functions, quadrature,
//! order statistics and one-dimensional search.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal quantile by bisection on [`norm_cdf`].
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if norm_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Density of `N(mean, sd^2)`.
#[inline]
pub fn gauss_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    norm_pdf((x - mean) / sd) / sd
}

#[inline]
pub fn gauss_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    norm_cdf((x - mean) / sd)
}

/// `∫_lo^hi x φ_{(mean, sd)}(x) dx` in closed form.
pub fn gauss_partial_first_moment(lo: f64, hi: f64, mean: f64, sd: f64) -> f64 {
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    let pa = if a.is_finite() { norm_pdf(a) } else { 0.0 };
    let pb = if b.is_finite() { norm_pdf(b) } else { 0.0 };
    mean * (norm_cdf(b) - norm_cdf(a)) + sd * (pa - pb)
}

/// Adaptive Simpson quadrature on a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    // Start from a fixed partition so narrow features are not stepped over.
    let pieces = 64;
    let h = (hi - lo) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let a = lo + k as f64 * h;
            let b = if k + 1 == pieces { hi } else { a + h };
            let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
            let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            simpson_step(f, a, b, fa, fm, fb, whole, tol / pieces as f64, 40)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// `a_(⌊k/2⌋+1)`: the upper of the two middle order statistics for even `k`.
///
/// Panics on an empty slice.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    median_in_place(&mut v)
}

/// As [`median`], reordering the buffer.
pub fn median_in_place(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sequence");
    let k = values.len() / 2;
    let (_, m, _) = values.select_nth_unstable_by(k, f64::total_cmp);
    *m
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub(crate) const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a minimiser of `f` on `[lo, hi]`, stopping when
/// the bracket is narrower than `tol`. Returns `(x, f(x))` for the best point
/// evaluated.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            if fc < best.1 || (fc == best.1 && c < best.0) {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            if fd < best.1 || (fd == best.1 && d < best.0) {
                best = (d, fd);
            }
        }
    }
    best
}
