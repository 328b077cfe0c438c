//! Linear model with a response that is missing at random on one branch
//! and not at random on the other.

use super::base::BaseDistribution;
use crate::error::{Error, Result};
use crate::rng::{tag, Stream};
use crate::types::ExtendedValue;
use serde::{Deserialize, Serialize};

/// Reveal probability `q_x` of the MAR branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarRate {
    Constant(f64),
    /// `below` when `x[coord] < threshold`, `above` otherwise.
    Step {
        coord: usize,
        threshold: f64,
        below: f64,
        above: f64,
    },
}

impl MarRate {
    pub fn prob(&self, x: &[f64]) -> f64 {
        match self {
            MarRate::Constant(q) => *q,
            MarRate::Step {
                coord,
                threshold,
                below,
                above,
            } => {
                if x[*coord] < *threshold {
                    *below
                } else {
                    *above
                }
            }
        }
    }

    /// `inf_x q_x`.
    pub fn floor(&self) -> f64 {
        match self {
            MarRate::Constant(q) => *q,
            MarRate::Step { below, above, .. } => below.min(*above),
        }
    }
}

/// Reveal probability of the MNAR branch as a function of `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseMechanism {
    Constant(f64),
    /// `1{y - xᵀθ₀ ≥ t}`.
    ResidualAbove(f64),
    /// `1{y - xᵀθ₀ ≤ t}`.
    ResidualBelow(f64),
    /// `1{y ≥ t}`.
    ResponseAbove(f64),
}

impl ResponseMechanism {
    pub fn prob(&self, x: &[f64], y: f64, theta0: &[f64]) -> f64 {
        let fit = || x.iter().zip(theta0).map(|(a, b)| a * b).sum::<f64>();
        match self {
            ResponseMechanism::Constant(c) => *c,
            ResponseMechanism::ResidualAbove(t) => (y - fit() >= *t) as u8 as f64,
            ResponseMechanism::ResidualBelow(t) => (y - fit() <= *t) as u8 as f64,
            ResponseMechanism::ResponseAbove(t) => (y >= *t) as u8 as f64,
        }
    }
}

/// Responses `Z_i` for a fixed design. Per row: `Y = xᵀθ₀ + σN` (2 words),
/// branch uniform, reveal uniform, all from one stream.
#[allow(clippy::too_many_arguments)]
pub fn sample_regression<Q, M>(
    x: &[Vec<f64>],
    theta0: &[f64],
    sigma: f64,
    epsilon: f64,
    q_x: Q,
    q_min: f64,
    mechanism2: M,
    seed: u64,
) -> Result<Vec<ExtendedValue>>
where
    Q: Fn(&[f64]) -> f64,
    M: Fn(&[f64], f64) -> f64,
{
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::domain(format!("epsilon = {epsilon} outside [0, 1)")));
    }
    if !(sigma > 0.0) {
        return Err(Error::domain(format!("sigma = {sigma} must be positive")));
    }
    if !(q_min > 0.0 && q_min <= 1.0) {
        return Err(Error::domain(format!("q = {q_min} outside (0, 1]")));
    }
    let mut stream = Stream::new(seed);
    x.iter()
        .map(|row| {
            if row.len() != theta0.len() {
                return Err(Error::Dimension {
                    expected: theta0.len(),
                    got: row.len(),
                });
            }
            let qx = q_x(row);
            if !(qx >= q_min && qx <= 1.0) {
                return Err(Error::domain(format!(
                    "q_x = {qx} below the floor q = {q_min}"
                )));
            }
            let mean: f64 = row.iter().zip(theta0).map(|(a, b)| a * b).sum();
            let y = mean + sigma * stream.normal();
            let mnar = stream.uniform() < epsilon;
            let u = stream.uniform();
            let p = if mnar { mechanism2(row, y) } else { qx };
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::domain(format!("mechanism value {p} outside [0, 1]")));
            }
            Ok(if u < p {
                ExtendedValue::observed(y)?
            } else {
                ExtendedValue::Missing
            })
        })
        .collect()
}

/// A random-design regression model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionSpec {
    pub theta0: Vec<f64>,
    pub sigma: f64,
    pub epsilon: f64,
    pub mar: MarRate,
    pub mnar: ResponseMechanism,
    /// Law of the covariate rows.
    pub design: BaseDistribution,
}

impl RegressionSpec {
    pub fn dim(&self) -> usize {
        self.theta0.len()
    }

    /// `(X, Z)`; the design comes from the `DESIGN` child stream of `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<(Vec<Vec<f64>>, Vec<ExtendedValue>)> {
        if self.design.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: self.design.dim(),
            });
        }
        let mut ds = Stream::child(seed, tag::DESIGN, 0);
        let x: Vec<Vec<f64>> = (0..n).map(|_| self.design.sample(&mut ds)).collect();
        let z = sample_regression(
            &x,
            &self.theta0,
            self.sigma,
            self.epsilon,
            |row| self.mar.prob(row),
            self.mar.floor(),
            |row, y| self.mnar.prob(row, y, &self.theta0),
            seed,
        )?;
        Ok((x, z))
    }
}
