//! Iterative robust descent with imputation of unobserved coordinates.

use super::descent::{random_blocks, robust_block_descent, DEFAULT_SDP_ITERS};
use super::sdp::BlockMeans;
use crate::error::{Error, Result};
use crate::rng::{child_seed, tag, Stream};
use crate::special::median;
use crate::types::{effective_rank, ExtendedVector};
use crate::univariate::trimmed_mean;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// What is known about `Σ^IPW` when choosing the number of folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IpwHint {
    /// The matrix itself, row-major.
    Matrix(Vec<Vec<f64>>),
    /// An upper bound on its effective rank.
    RankBound(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DescentConfig {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub sdp_iters: usize,
    pub ipw_hint: Option<IpwHint>,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            a1: 1e-9,
            a2: 300.0,
            a3: 180_000.0,
            sdp_iters: DEFAULT_SDP_ITERS,
            ipw_hint: None,
        }
    }
}

impl DescentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a1 > 0.0 && self.a1.is_finite()) {
            return Err(Error::domain(format!("A1 = {} must be positive", self.a1)));
        }
        if !(self.a2 >= 1.0 && self.a3 >= 1.0) {
            return Err(Error::domain("A2 and A3 must be at least 1"));
        }
        Ok(())
    }

    /// The effective-rank value used for `T`; `d` when nothing is known.
    pub fn rank(&self, d: usize) -> Result<f64> {
        match &self.ipw_hint {
            None => Ok(d as f64),
            Some(IpwHint::RankBound(r)) => Ok(*r),
            Some(IpwHint::Matrix(rows)) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Dimension {
                        expected: d,
                        got: rows.len(),
                    });
                }
                let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
                Ok(effective_rank(&m))
            }
        }
    }
}

/// Fold count, inflated contamination and block count for one call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentPlan {
    pub folds: usize,
    pub eps_prime: f64,
    pub blocks: usize,
}

impl DescentPlan {
    pub fn new(
        n: usize,
        d: usize,
        epsilon: f64,
        delta: f64,
        config: &DescentConfig,
    ) -> Result<Self> {
        config.validate()?;
        let r = config.rank(d)?;
        let log_plus = |x: f64| x.ln().max(1.0);
        let folds = 1 + log_plus(config.a1 * (r + (24.0 * d as f64 / delta).ln())).ceil() as usize;
        let t = folds as f64;
        let eps_prime = 2.0 * epsilon + 2.0 * t * (3.0 * t / delta).ln() / n as f64;
        let blocks = (config.a2 * n as f64 * eps_prime / t)
            .max(config.a3 * (6.0 * t / delta).ln())
            .ceil() as usize;
        Ok(Self {
            folds,
            eps_prime,
            blocks,
        })
    }

    /// Smallest `n` with `n >= T(M+1)`.
    pub fn min_n(&self) -> usize {
        self.folds * (self.blocks + 1)
    }
}

/// Per-coordinate trimmed mean on the observed entries; the median for
/// one to three entries and 0 for none.
fn coordinate_start(values: &[f64], epsilon: f64, delta: f64, seed: u64) -> Result<f64> {
    match values.len() {
        0 => Ok(0.0),
        1..=3 => Ok(median(values)),
        _ => Ok(trimmed_mean(values, epsilon, delta.min(1.0), seed)?.value),
    }
}

pub fn iterative_robust_descent(
    sample: &[ExtendedVector],
    epsilon: f64,
    delta: f64,
    config: &DescentConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    let n = sample.len();
    if n == 0 {
        return Err(Error::size("iterative robust descent needs data"));
    }
    if !(0.0..0.5).contains(&epsilon) {
        return Err(Error::domain(format!(
            "epsilon = {epsilon} outside [0, 1/2)"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta = {delta} outside (0, 1)")));
    }
    let d = sample[0].dim();
    if let Some(z) = sample.iter().find(|z| z.dim() != d) {
        return Err(Error::Dimension {
            expected: d,
            got: z.dim(),
        });
    }
    let plan = DescentPlan::new(n, d, epsilon, delta, config)?;
    if n < plan.min_n() {
        return Err(Error::size(format!(
            "n = {n} too small: T = {}, M = {} need n >= {}",
            plan.folds,
            plan.blocks,
            plan.min_n()
        )));
    }
    let (t_folds, m) = (plan.folds, plan.blocks);
    let fold_size = n / t_folds;
    let folds = random_blocks(
        t_folds * fold_size,
        t_folds,
        fold_size,
        &mut Stream::child(seed, tag::PARTITION, 0),
    );

    let mut theta: Vec<f64> = (0..d)
        .map(|j| {
            let vals: Vec<f64> = folds[0]
                .iter()
                .filter_map(|&i| sample[i].get(j).value())
                .collect();
            coordinate_start(&vals, epsilon, delta, child_seed(seed, tag::TRIM, j as u64))
        })
        .collect::<Result<_>>()?;

    let block_size = fold_size / m;
    for (t, fold) in folds.iter().enumerate().skip(1) {
        let mut stream = Stream::child(seed, tag::PARTITION, t as u64);
        let blocks = random_blocks(fold.len(), m, block_size, &mut stream);
        let means = blocks
            .iter()
            .map(|b| {
                (0..d)
                    .map(|j| {
                        let (mut sum, mut count) = (0.0, 0usize);
                        for &k in b {
                            if let Some(x) = sample[fold[k]].get(j).value() {
                                sum += x;
                                count += 1;
                            }
                        }
                        if count > 0 {
                            sum / count as f64
                        } else {
                            theta[j]
                        }
                    })
                    .collect()
            })
            .collect();
        theta = robust_block_descent(&BlockMeans::new(means)?, config.sdp_iters)?;
    }
    Ok(theta)
}
