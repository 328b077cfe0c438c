//! Reveal probabilities `m(x)` of the MNAR component.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A piecewise-constant reveal probability `m: ℝ → [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MnarMechanism {
    Constant(f64),
    /// `m(x) = 1{x ≥ t}`.
    ThresholdAbove(f64),
    /// `m(x) = 1{x ≤ t}`.
    ThresholdBelow(f64),
    /// `m(x) = 1{|x| ≥ t}`.
    TailsOnly(f64),
    /// `values[k]` holds on `(grid[k-1], grid[k]]`, with `values[0]` below the
    /// first knot and `values[len]` above the last.
    Custom {
        grid: Vec<f64>,
        values: Vec<f64>,
    },
}

impl MnarMechanism {
    pub fn constant(c: f64) -> Result<Self> {
        let m = MnarMechanism::Constant(c);
        m.validate()?;
        Ok(m)
    }

    /// Tabulated mechanism; values are clamped into `[0, 1]`.
    pub fn custom(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() + 1 {
            return Err(Error::Dimension {
                expected: grid.len() + 1,
                got: values.len(),
            });
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|g| !g.is_finite()) {
            return Err(Error::domain(
                "mechanism grid must be finite and increasing",
            ));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::domain("NaN in mechanism table"));
        }
        Ok(MnarMechanism::Custom {
            grid,
            values: values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MnarMechanism::Constant(c) if !(0.0..=1.0).contains(c) => {
                Err(Error::domain(format!("mechanism value {c} outside [0, 1]")))
            }
            MnarMechanism::ThresholdAbove(t)
            | MnarMechanism::ThresholdBelow(t)
            | MnarMechanism::TailsOnly(t)
                if t.is_nan() =>
            {
                Err(Error::domain("NaN threshold"))
            }
            MnarMechanism::Custom { grid, values } => {
                Self::custom(grid.clone(), values.clone()).map(|_| ())?;
                if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::domain("mechanism table outside [0, 1]"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `m(x)`.
    pub fn prob(&self, x: f64) -> f64 {
        match self {
            MnarMechanism::Constant(c) => *c,
            MnarMechanism::ThresholdAbove(t) => (x >= *t) as u8 as f64,
            MnarMechanism::ThresholdBelow(t) => (x <= *t) as u8 as f64,
            MnarMechanism::TailsOnly(t) => (x.abs() >= *t) as u8 as f64,
            MnarMechanism::Custom { grid, values } => values[grid.partition_point(|&g| g < x)],
        }
    }

    /// The mechanism as consecutive pieces `(lo, hi, value)` covering the
    /// line. Endpoints are immaterial for continuous bases.
    pub fn pieces(&self) -> Vec<(f64, f64, f64)> {
        let inf = f64::INFINITY;
        match self {
            MnarMechanism::Constant(c) => vec![(-inf, inf, *c)],
            MnarMechanism::ThresholdAbove(t) => vec![(-inf, *t, 0.0), (*t, inf, 1.0)],
            MnarMechanism::ThresholdBelow(t) => vec![(-inf, *t, 1.0), (*t, inf, 0.0)],
            MnarMechanism::TailsOnly(t) if *t <= 0.0 => vec![(-inf, inf, 1.0)],
            MnarMechanism::TailsOnly(t) => {
                vec![(-inf, -t, 1.0), (-t, *t, 0.0), (*t, inf, 1.0)]
            }
            MnarMechanism::Custom { grid, values } => {
                let mut knots = Vec::with_capacity(grid.len() + 2);
                knots.push(-inf);
                knots.extend_from_slice(grid);
                knots.push(inf);
                knots
                    .windows(2)
                    .zip(values)
                    .map(|(w, &v)| (w[0], w[1], v))
                    .collect()
            }
        }
    }

    /// Mirror image `x ↦ m(-x)`.
    pub fn reflected(&self) -> Self {
        match self {
            MnarMechanism::Constant(c) => MnarMechanism::Constant(*c),
            MnarMechanism::ThresholdAbove(t) => MnarMechanism::ThresholdBelow(-t),
            MnarMechanism::ThresholdBelow(t) => MnarMechanism::ThresholdAbove(-t),
            MnarMechanism::TailsOnly(t) => MnarMechanism::TailsOnly(*t),
            MnarMechanism::Custom { grid, values } => MnarMechanism::Custom {
                grid: grid.iter().rev().map(|g| -g).collect(),
                values: values.iter().rev().copied().collect(),
            },
        }
    }

    /// A short label for dataset headers.
    pub fn label(&self) -> String {
        match self {
            MnarMechanism::Constant(c) => format!("constant({c})"),
            MnarMechanism::ThresholdAbove(t) => format!("above({t})"),
            MnarMechanism::ThresholdBelow(t) => format!("below({t})"),
            MnarMechanism::TailsOnly(t) => format!("tails({t})"),
            MnarMechanism::Custom { grid, .. } => format!("custom({} knots)", grid.len()),
        }
    }
}
