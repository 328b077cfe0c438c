//! Scenario files: a model template, a list of estimators and a grid over
//! `(n, d, ε, q, σ)`.

use crate::error::{Error, Result};
use crate::models::{
    AdversaryDensity, AdversaryName, BaseDistribution, Contaminant, ContaminationSpec, MarRate,
    MnarMechanism, RegressionSpec, ResponseMechanism,
};
use crate::multivariate::{DescentConfig, MAX_NET_DIM};
use crate::types::{ExtendedValue, ExtendedVector, PatternDistribution};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    /// Rows are fully observed with probability `q`, else fully missing.
    #[default]
    AllOrNothing,
    /// Each coordinate is observed independently with probability `q`.
    Independent,
}

impl PatternKind {
    fn build(self, d: usize, q: f64) -> Result<PatternDistribution> {
        match self {
            PatternKind::AllOrNothing => PatternDistribution::all_or_nothing(d, q),
            PatternKind::Independent => PatternDistribution::independent(&vec![q; d]),
        }
    }
}

/// Model template. Each grid cell fills in `(d, ε, q, σ)`; the base law is
/// `N(center·𝟙, σ² I_d)` unless stated otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// MCAR only; every grid `ε` must be 0.
    Mcar {
        #[serde(default)]
        center: f64,
        #[serde(default)]
        pattern: PatternKind,
    },
    /// Realisable contamination acting through the first coordinate.
    /// Mechanism thresholds are on the raw scale.
    Realisable {
        #[serde(default)]
        center: f64,
        mechanism: MnarMechanism,
    },
    /// Arbitrary contamination by a point mass at `outlier·𝟙`.
    Arbitrary {
        #[serde(default)]
        center: f64,
        #[serde(default)]
        pattern: PatternKind,
        outlier: f64,
    },
    /// The univariate lower-bound densities `f₁`/`f₂`, with `θ₀ = ∓a`.
    Adversary {
        name: AdversaryName,
        #[serde(default = "one")]
        a: f64,
    },
    /// `Y = Xᵀθ₀ + σξ` with `X ~ N(design_mean, I)`, MAR rate `q` and the
    /// given MNAR response mechanism.
    Regression {
        theta0: Vec<f64>,
        #[serde(default)]
        design_mean: Option<Vec<f64>>,
        mnar: ResponseMechanism,
    },
}

fn one() -> f64 {
    1.0
}

impl ModelConfig {
    pub fn label(&self) -> &'static str {
        match self {
            ModelConfig::Mcar { .. } => "mcar",
            ModelConfig::Realisable { .. } => "realisable",
            ModelConfig::Arbitrary { .. } => "arbitrary",
            ModelConfig::Adversary {
                name: AdversaryName::F1,
                ..
            } => "adversary_f1",
            ModelConfig::Adversary {
                name: AdversaryName::F2,
                ..
            } => "adversary_f2",
            ModelConfig::Regression { .. } => "regression",
        }
    }

    pub fn is_regression(&self) -> bool {
        matches!(self, ModelConfig::Regression { .. })
    }

    /// Whether every sampled row is fully observed or fully missing.
    pub fn all_or_nothing(&self) -> bool {
        match self {
            ModelConfig::Mcar { pattern, .. } | ModelConfig::Arbitrary { pattern, .. } => {
                *pattern == PatternKind::AllOrNothing
            }
            _ => true,
        }
    }

    fn fixed_dim(&self) -> Option<usize> {
        match self {
            ModelConfig::Adversary { .. } => Some(1),
            ModelConfig::Regression { theta0, .. } => Some(theta0.len()),
            _ => None,
        }
    }
}

/// Parameters of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    pub q: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub n: Vec<usize>,
    #[serde(default = "unit_dim")]
    pub d: Vec<usize>,
    #[serde(default = "zero")]
    pub epsilon: Vec<f64>,
    #[serde(default = "unit")]
    pub q: Vec<f64>,
    #[serde(default = "unit")]
    pub sigma: Vec<f64>,
}

fn unit_dim() -> Vec<usize> {
    vec![1]
}

fn zero() -> Vec<f64> {
    vec![0.0]
}

fn unit() -> Vec<f64> {
    vec![1.0]
}

impl Grid {
    /// Cells in row-major order over `n, d, ε, q, σ`.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &n in &self.n {
            for &d in &self.d {
                for &epsilon in &self.epsilon {
                    for &q in &self.q {
                        for &sigma in &self.sigma {
                            out.push(Cell {
                                index: out.len(),
                                n,
                                d,
                                epsilon,
                                q,
                                sigma,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    ObservedMean,
    MedianOfMeans,
    TrimmedMean,
    AverageOfExtremes,
    MkEstimate,
    CompleteCaseMean,
    RobustDescent,
    IterativeRobustDescent,
    MultivariateMk,
    KsRegression,
    OlsObserved,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 11] = [
        EstimatorKind::ObservedMean,
        EstimatorKind::MedianOfMeans,
        EstimatorKind::TrimmedMean,
        EstimatorKind::AverageOfExtremes,
        EstimatorKind::MkEstimate,
        EstimatorKind::CompleteCaseMean,
        EstimatorKind::RobustDescent,
        EstimatorKind::IterativeRobustDescent,
        EstimatorKind::MultivariateMk,
        EstimatorKind::KsRegression,
        EstimatorKind::OlsObserved,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::ObservedMean => "observed_mean",
            EstimatorKind::MedianOfMeans => "median_of_means",
            EstimatorKind::TrimmedMean => "trimmed_mean",
            EstimatorKind::AverageOfExtremes => "average_of_extremes",
            EstimatorKind::MkEstimate => "mk_estimate",
            EstimatorKind::CompleteCaseMean => "complete_case_mean",
            EstimatorKind::RobustDescent => "robust_descent",
            EstimatorKind::IterativeRobustDescent => "iterative_robust_descent",
            EstimatorKind::MultivariateMk => "multivariate_mk",
            EstimatorKind::KsRegression => "ks_regression",
            EstimatorKind::OlsObserved => "ols_observed",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::config(format!("unknown estimator {name:?}")))
    }

    pub fn univariate(self) -> bool {
        matches!(
            self,
            EstimatorKind::ObservedMean
                | EstimatorKind::MedianOfMeans
                | EstimatorKind::TrimmedMean
                | EstimatorKind::AverageOfExtremes
                | EstimatorKind::MkEstimate
        )
    }

    pub fn regression(self) -> bool {
        matches!(
            self,
            EstimatorKind::KsRegression | EstimatorKind::OlsObserved
        )
    }
}

/// An estimator entry: a bare name, or `{"name": ..., "descent": {...}}`
/// to override the iterative descent constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EstimatorEntry {
    Name(String),
    Detailed {
        name: String,
        #[serde(default)]
        descent: Option<DescentConfig>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub descent: DescentConfig,
}

impl EstimatorEntry {
    pub fn resolve(&self) -> Result<EstimatorSpec> {
        let (name, descent) = match self {
            EstimatorEntry::Name(n) => (n, None),
            EstimatorEntry::Detailed { name, descent } => (name, descent.clone()),
        };
        let kind = EstimatorKind::parse(name)?;
        if descent.is_some() && kind != EstimatorKind::IterativeRobustDescent {
            return Err(Error::config(format!(
                "estimator {name} takes no descent overrides"
            )));
        }
        let descent = descent.unwrap_or_default();
        descent
            .validate()
            .map_err(|e| Error::config(format!("estimator {name}: {e}")))?;
        Ok(EstimatorSpec { kind, descent })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelConfig,
    pub estimators: Vec<EstimatorEntry>,
    pub grid: Grid,
    pub reps: usize,
    pub delta: f64,
    pub seed: u64,
}

fn nonempty<T>(v: &[T], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::config(format!("grid.{what} is empty")));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    /// Checks every grid value against the model and every estimator against
    /// every cell.
    pub fn validate(&self) -> Result<Vec<EstimatorSpec>> {
        if self.reps == 0 {
            return Err(Error::config("reps must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::config(format!(
                "delta = {} outside (0, 1]",
                self.delta
            )));
        }
        if self.estimators.is_empty() {
            return Err(Error::config("no estimators listed"));
        }
        let g = &self.grid;
        nonempty(&g.n, "n")?;
        nonempty(&g.d, "d")?;
        nonempty(&g.epsilon, "epsilon")?;
        nonempty(&g.q, "q")?;
        nonempty(&g.sigma, "sigma")?;
        if g.n.contains(&0) || g.d.contains(&0) {
            return Err(Error::config("grid n and d must be positive"));
        }
        if let Some(&e) = g.epsilon.iter().find(|e| !(0.0..1.0).contains(*e)) {
            return Err(Error::config(format!("grid epsilon {e} outside [0, 1)")));
        }
        if let Some(&q) = g.q.iter().find(|q| !(**q > 0.0 && **q <= 1.0)) {
            return Err(Error::config(format!("grid q {q} outside (0, 1]")));
        }
        if let Some(&s) = g.sigma.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::config(format!("grid sigma {s} must be positive")));
        }
        if let Some(fixed) = self.model.fixed_dim() {
            if g.d.iter().any(|&d| d != fixed) {
                return Err(Error::config(format!(
                    "model {} has dimension {fixed}; grid d must be [{fixed}]",
                    self.model.label()
                )));
            }
        }
        if matches!(self.model, ModelConfig::Mcar { .. }) && g.epsilon.iter().any(|&e| e != 0.0) {
            return Err(Error::config("model mcar needs grid epsilon = [0]"));
        }
        let specs = self
            .estimators
            .iter()
            .map(EstimatorEntry::resolve)
            .collect::<Result<Vec<_>>>()?;
        for s in &specs {
            self.check_pair(s.kind)?;
        }
        // Build one model per cell so bad parameters surface before any run.
        for cell in g.cells() {
            self.model.instantiate(&cell).map_err(|e| {
                Error::config(format!(
                    "model {} at cell {}: {e}",
                    self.model.label(),
                    cell.index
                ))
            })?;
        }
        Ok(specs)
    }

    fn check_pair(&self, kind: EstimatorKind) -> Result<()> {
        let model = self.model.label();
        let bad = |why: &str| {
            Err(Error::config(format!(
                "estimator {} on model {model}: {why}",
                kind.name()
            )))
        };
        let max_d = self.grid.d.iter().copied().max().unwrap_or(1);
        if kind.regression() != self.model.is_regression() {
            return bad(if kind.regression() {
                "needs a regression model"
            } else {
                "does not apply to regression data"
            });
        }
        if kind.univariate() && max_d > 1 {
            return bad("univariate estimator on multivariate data");
        }
        if kind == EstimatorKind::MultivariateMk {
            if !self.model.all_or_nothing() {
                return bad("needs all-or-nothing missingness");
            }
            if max_d > MAX_NET_DIM {
                return bad(&format!("net dimension is limited to {MAX_NET_DIM}"));
            }
        }
        Ok(())
    }
}

/// A model instantiated for one cell.
#[derive(Debug, Clone)]
pub enum CellModel {
    Vectors(ContaminationSpec),
    Adversary(AdversaryDensity),
    Regression(RegressionSpec),
}

/// One replication's data.
#[derive(Debug, Clone)]
pub enum CellData {
    Vectors(Vec<ExtendedVector>),
    Regression(Vec<Vec<f64>>, Vec<ExtendedValue>),
}

impl CellModel {
    pub fn theta0(&self) -> Vec<f64> {
        match self {
            CellModel::Vectors(s) => s.theta0(),
            CellModel::Adversary(a) => vec![a.theta0()],
            CellModel::Regression(r) => r.theta0.clone(),
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<CellData> {
        Ok(match self {
            CellModel::Vectors(s) => CellData::Vectors(s.sample(n, seed)?),
            CellModel::Adversary(a) => CellData::Vectors(
                a.sample(n, seed)
                    .into_iter()
                    .map(|z| ExtendedVector::new(vec![z]))
                    .collect::<Result<_>>()?,
            ),
            CellModel::Regression(r) => {
                let (x, z) = r.sample(n, seed)?;
                CellData::Regression(x, z)
            }
        })
    }
}

fn isotropic(center: f64, sigma: f64, d: usize) -> Result<BaseDistribution> {
    let cov = nalgebra::DMatrix::<f64>::identity(d, d) * (sigma * sigma);
    BaseDistribution::gaussian(vec![center; d], cov)
}

impl ModelConfig {
    pub fn instantiate(&self, c: &Cell) -> Result<CellModel> {
        let d = c.d;
        Ok(match self {
            ModelConfig::Mcar { center, pattern } => CellModel::Vectors(ContaminationSpec::Mcar {
                base: isotropic(*center, c.sigma, d)?,
                pattern: pattern.build(d, c.q)?,
            }),
            ModelConfig::Realisable { center, mechanism } => {
                mechanism.validate()?;
                CellModel::Vectors(ContaminationSpec::Realisable {
                    base: isotropic(*center, c.sigma, d)?,
                    epsilon: c.epsilon,
                    q: c.q,
                    mechanism: mechanism.clone(),
                    direction: None,
                })
            }
            ModelConfig::Arbitrary {
                center,
                pattern,
                outlier,
            } => CellModel::Vectors(ContaminationSpec::Arbitrary {
                base: isotropic(*center, c.sigma, d)?,
                epsilon: c.epsilon,
                pattern: pattern.build(d, c.q)?,
                contaminant: Contaminant::point_mass(ExtendedVector::from_reals(&vec![
                    *outlier;
                    d
                ])?),
            }),
            ModelConfig::Adversary { name, a } => {
                CellModel::Adversary(AdversaryDensity::new(*name, *a, c.sigma, c.epsilon, c.q)?)
            }
            ModelConfig::Regression {
                theta0,
                design_mean,
                mnar,
            } => {
                let mean = design_mean.clone().unwrap_or_else(|| vec![1.0; d]);
                if mean.len() != d {
                    return Err(Error::config(format!(
                        "design_mean has length {}, theta0 has {d}",
                        mean.len()
                    )));
                }
                CellModel::Regression(RegressionSpec {
                    theta0: theta0.clone(),
                    sigma: c.sigma,
                    epsilon: c.epsilon,
                    mar: MarRate::Constant(c.q),
                    mnar: mnar.clone(),
                    design: BaseDistribution::standard_gaussian(mean)?,
                })
            }
        })
    }
}
