//! Linear regression with a realisably missing response: a design
//! regularity diagnostic and the symmetrised Kolmogorov estimator.

use crate::error::{Error, Result};
use crate::kolmogorov::{dist_to_realisable_sym, EmpiricalSummary, RealisableSetSpec};
use crate::rng::{tag, Stream};
use crate::types::ExtendedValue;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// `n` covariate rows in `ℝ^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    rows: Vec<Vec<f64>>,
}

impl DesignMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if d == 0 {
            return Err(Error::size("design needs at least one row and one column"));
        }
        if rows.len() < d {
            return Err(Error::size(format!(
                "design has n = {} < d = {d}",
                rows.len()
            )));
        }
        for r in &rows {
            if r.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: r.len(),
                });
            }
            if r.iter().any(|x| !x.is_finite()) {
                return Err(Error::domain("design entries must be finite"));
            }
        }
        Ok(Self { rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    fn fit(&self, i: usize, theta: &[f64]) -> f64 {
        self.rows[i].iter().zip(theta).map(|(a, b)| a * b).sum()
    }
}

/// Monte Carlo estimate (exact for `d = 1`) of the regularity constant:
/// half the smallest fraction of rows with `|x_iᵀv| > γ` over the tested
/// unit directions. It is an estimate, not a certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub beta_hat: f64,
    pub gamma: f64,
    pub worst_direction: Vec<f64>,
    pub n_directions_tested: usize,
}

pub fn check_regular_design(
    x: &DesignMatrix,
    gamma: f64,
    n_dirs: usize,
    seed: u64,
) -> Result<RegularityReport> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::domain(format!("gamma = {gamma} must be positive")));
    }
    let d = x.dim();
    let dirs: Vec<Vec<f64>> = if d == 1 {
        vec![vec![1.0]]
    } else {
        if n_dirs == 0 {
            return Err(Error::size("need at least one test direction"));
        }
        let mut s = Stream::child(seed, tag::DESIGN, 1);
        (0..n_dirs)
            .map(|_| loop {
                let v: Vec<f64> = (0..d).map(|_| s.normal()).collect();
                let r = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                if r > 1e-12 {
                    break v.iter().map(|a| a / r).collect();
                }
            })
            .collect()
    };
    let fractions = crate::par::map_slice(&dirs, |v| {
        let hits = (0..x.n()).filter(|&i| x.fit(i, v).abs() > gamma).count();
        hits as f64 / x.n() as f64
    });
    let worst = fractions
        .iter()
        .enumerate()
        .fold(0, |b, (i, &f)| if f < fractions[b] { i } else { b });
    Ok(RegularityReport {
        beta_hat: fractions[worst] / 2.0,
        gamma,
        worst_direction: dirs[worst].clone(),
        n_directions_tested: dirs.len(),
    })
}

/// Residual law `R̂_{n,θ}`: `Z_i - x_iᵀθ`, with ⋆ kept.
pub fn residual_summary(
    x: &DesignMatrix,
    z: &[ExtendedValue],
    theta: &[f64],
) -> Result<EmpiricalSummary> {
    let res = z
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.value().map(|y| y - x.fit(i, theta)))
        .collect();
    EmpiricalSummary::new(res, z.len())
}

/// `d_K^sym(R̂_{n,θ}, ℛ(N(0, σ²), 1 - q(1-ε), 1))`.
pub fn regression_objective(
    x: &DesignMatrix,
    z: &[ExtendedValue],
    theta: &[f64],
    set: &RealisableSetSpec,
) -> Result<f64> {
    Ok(dist_to_realisable_sym(&residual_summary(x, z, theta)?, set))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionEstimate {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub meta: Map<String, Value>,
}

pub const NM_MAX_EVALS: usize = 2000;
pub const NM_RESTARTS: usize = 5;

/// Constant of the residual-membership radius, calibrated on Gaussian
/// designs with `d = 2` over `n ∈ {200, 1000, 5000}`.
pub const MEMBERSHIP_C: f64 = 1.0;

/// `C·√((d + log(1/δ))/n)`: the symmetrised distance the true residual law
/// should stay under with probability `1 - δ`.
pub fn membership_radius(n: usize, d: usize, delta: f64) -> f64 {
    MEMBERSHIP_C * ((d as f64 + (1.0 / delta).ln()) / n as f64).sqrt()
}

struct NmResult {
    x: Vec<f64>,
    f: f64,
    evals: usize,
}

/// Nelder–Mead with the standard coefficients (1, 2, 1/2, 1/2).
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    start: &[f64],
    step: f64,
    max_evals: usize,
    xtol: f64,
) -> NmResult {
    let d = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((start.to_vec(), f(start)));
    for j in 0..d {
        let mut p = start.to_vec();
        p[j] += step;
        let v = f(&p);
        simplex.push((p, v));
    }
    let mut evals = d + 1;
    let centroid = |s: &[(Vec<f64>, f64)]| {
        let mut c = vec![0.0; d];
        for (p, _) in &s[..d] {
            for (cj, pj) in c.iter_mut().zip(p) {
                *cj += pj / d as f64;
            }
        }
        c
    };
    let along = |c: &[f64], p: &[f64], t: f64| -> Vec<f64> {
        c.iter().zip(p).map(|(a, b)| a + t * (b - a)).collect()
    };
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[d].1 - simplex[0].1;
        let diam = simplex[1..]
            .iter()
            .map(|(p, _)| {
                p.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diam <= xtol || (spread <= 1e-13 && diam <= 1e3 * xtol) {
            break;
        }
        let c = centroid(&simplex);
        let worst = simplex[d].clone();
        let xr = along(&c, &worst.0, -1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = along(&c, &worst.0, -2.0);
            let fe = f(&xe);
            evals += 1;
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = along(&c, &xr, 0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(&c, &worst.0, 0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < worst.1.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for (p, v) in simplex.iter_mut().skip(1) {
                    *p = along(&best, p, 0.5);
                    *v = f(p);
                }
                evals += d;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    NmResult { x, f, evals }
}

/// OLS on the rows with an observed response; `None` when that design is
/// rank deficient. Also returns `‖X⁺‖_op`.
fn observed_ols(x: &DesignMatrix, z: &[ExtendedValue]) -> Option<(Vec<f64>, f64)> {
    let d = x.dim();
    let mut xtx = DMatrix::<f64>::zeros(d, d);
    let mut xty = DVector::<f64>::zeros(d);
    for (row, y) in x.rows().iter().zip(z) {
        if let Some(y) = y.value() {
            let r = DVector::from_column_slice(row);
            xtx += &r * r.transpose();
            xty += r * y;
        }
    }
    let lam_min = xtx.clone().symmetric_eigenvalues().min();
    let scale = xtx.clone().symmetric_eigenvalues().max();
    if !(lam_min > 1e-12 * scale.max(1e-300)) {
        return None;
    }
    let theta = xtx.cholesky()?.solve(&xty);
    Some((theta.iter().copied().collect(), 1.0 / lam_min.sqrt()))
}

/// `argmin_θ d_K^sym(R̂_{n,θ}, ℛ(N(0, σ²), 1 - q(1-ε), 1))` by Nelder–Mead
/// from the observed-row OLS fit and four seeded perturbations of it.
pub fn ks_regression_estimate(
    x: &DesignMatrix,
    z: &[ExtendedValue],
    sigma: f64,
    epsilon: f64,
    q: f64,
    seed: u64,
) -> Result<RegressionEstimate> {
    if z.len() != x.n() {
        return Err(Error::Dimension {
            expected: x.n(),
            got: z.len(),
        });
    }
    if z.iter().all(|v| v.is_missing()) {
        return Err(Error::Estimation("no observed responses".into()));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma = {sigma} must be positive")));
    }
    let set = RealisableSetSpec::linear_residual(sigma, epsilon, q)?;
    let d = x.dim();
    let mut meta = Map::new();
    let (init, pinv_norm) = match observed_ols(x, z) {
        Some(v) => v,
        None => {
            meta.insert(
                "warning".into(),
                "observed design is rank deficient; started from zero".into(),
            );
            (vec![0.0; d], 1.0)
        }
    };
    let m = z.iter().filter(|v| !v.is_missing()).count() as f64;
    let perturb = sigma * pinv_norm;
    // A simplex edge that moves the residuals by about σ/2.
    let step = 0.5 * perturb * m.sqrt();
    let mut s = Stream::child(seed, tag::DESIGN, 2);
    let starts: Vec<Vec<f64>> = (0..NM_RESTARTS)
        .map(|k| {
            if k == 0 {
                init.clone()
            } else {
                init.iter().map(|t| t + perturb * s.normal()).collect()
            }
        })
        .collect();
    let objective =
        |theta: &[f64]| regression_objective(x, z, theta, &set).expect("residuals are finite");
    let runs = crate::par::map_slice(&starts, |st| {
        nelder_mead(&objective, st, step, NM_MAX_EVALS, 1e-9 * step)
    });
    let best = runs
        .iter()
        .enumerate()
        .fold(0, |b, (i, r)| if r.f < runs[b].f { i } else { b });
    for (st, r) in starts.iter().zip(&runs) {
        assert!(r.f <= objective(st), "restart ended above its start");
    }
    meta.insert("restart".into(), best.into());
    meta.insert(
        "evaluations".into(),
        runs.iter().map(|r| r.evals).sum::<usize>().into(),
    );
    meta.insert("objective".into(), runs[best].f.into());
    meta.insert("ols_init".into(), init.clone().into());
    Ok(RegressionEstimate {
        theta: runs[best].x.clone(),
        objective: runs[best].f,
        meta,
    })
}

/// Least squares on the rows with an observed response.
pub fn ols_observed(x: &DesignMatrix, z: &[ExtendedValue]) -> Result<Vec<f64>> {
    observed_ols(x, z)
        .map(|(t, _)| t)
        .ok_or_else(|| Error::Estimation("observed design is rank deficient".into()))
}
