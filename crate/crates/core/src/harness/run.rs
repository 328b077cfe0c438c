//! Replications over a scenario grid.

use super::config::{CellData, CellModel, EstimatorKind, EstimatorSpec, ScenarioConfig};
use crate::error::{Error, Result};
use crate::multivariate::{
    iterative_robust_descent, multivariate_mk, robust_descent, robust_descent_blocks, sq_dist,
    DescentPlan,
};
use crate::regression::{ks_regression_estimate, ols_observed, DesignMatrix};
use crate::rng::{child_seed, tag};
use crate::special::mean;
use crate::types::{observed_values, ExtendedValue, ExtendedVector};
use crate::univariate::{
    average_of_extremes, median_of_means, mk_estimate, observed_mean, trimmed_mean, UniEstimate,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::time::Instant;

/// One squared-error measurement. `None` is written as `NA`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub scenario: String,
    pub estimator: String,
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    pub q: f64,
    pub sigma: f64,
    pub rep: usize,
    pub seed: u64,
    pub sq_error: Option<f64>,
    pub runtime_ms: Option<f64>,
}

impl ResultRecord {
    fn sort_key(&self) -> (&str, &str, usize, usize, u64, u64, u64, usize) {
        (
            &self.scenario,
            &self.estimator,
            self.n,
            self.d,
            self.epsilon.to_bits(),
            self.q.to_bits(),
            self.sigma.to_bits(),
            self.rep,
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Fill `runtime_ms`. Off by default so output is reproducible.
    pub timings: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<ResultRecord>,
    /// One line per NA record.
    pub failures: Vec<String>,
}

/// Seed of replication `rep` in grid cell `cell`.
pub fn replication_seed(master: u64, cell: usize, rep: usize) -> u64 {
    child_seed(master, cell as u64, rep as u64)
}

/// Seed handed to estimator `kind` for the replication seeded with `rep_seed`.
pub fn estimator_seed(rep_seed: u64, kind: EstimatorKind) -> u64 {
    let code = EstimatorKind::ALL
        .iter()
        .position(|k| *k == kind)
        .unwrap_or(0);
    child_seed(rep_seed, tag::ESTIMATOR, code as u64)
}

/// Number of blocks the harness gives median-of-means: `⌈log(2/δ)⌉`.
pub fn mom_blocks(delta: f64) -> usize {
    ((2.0 / delta).ln().ceil() as usize).max(1)
}

fn univariate(rows: &[ExtendedVector]) -> Vec<ExtendedValue> {
    rows.iter().map(|r| r.get(0)).collect()
}

fn complete_cases(rows: &[ExtendedVector]) -> Vec<Vec<f64>> {
    rows.iter().filter_map(ExtendedVector::to_reals).collect()
}

/// An estimate plus whatever the estimator reports about itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub theta: Vec<f64>,
    pub diagnostics: Map<String, Value>,
}

impl Estimate {
    fn plain(theta: Vec<f64>) -> Self {
        Self {
            theta,
            diagnostics: Map::new(),
        }
    }

    fn scalar(u: UniEstimate) -> Self {
        Self {
            theta: vec![u.value],
            diagnostics: u.meta,
        }
    }

    fn note(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.diagnostics.insert(key.to_string(), v.into());
        self
    }
}

/// Runs one estimator on one data set.
pub fn run_estimator(
    spec: &EstimatorSpec,
    data: &CellData,
    epsilon: f64,
    q: f64,
    sigma: f64,
    delta: f64,
    seed: u64,
) -> Result<Estimate> {
    use EstimatorKind as K;
    let rows = match data {
        CellData::Vectors(rows) => rows,
        CellData::Regression(x, z) => {
            let x = DesignMatrix::new(x.clone())?;
            return match spec.kind {
                K::KsRegression => {
                    let est = ks_regression_estimate(&x, z, sigma, epsilon, q, seed)?;
                    Ok(Estimate {
                        theta: est.theta,
                        diagnostics: est.meta,
                    })
                }
                K::OlsObserved => Ok(Estimate::plain(ols_observed(&x, z)?)),
                k => Err(Error::config(format!(
                    "estimator {} on regression data",
                    k.name()
                ))),
            };
        }
    };
    let d = rows.first().map_or(1, ExtendedVector::dim);
    if spec.kind.univariate() && d > 1 {
        return Err(Error::config(format!(
            "estimator {} needs univariate data, got d = {d}",
            spec.kind.name()
        )));
    }
    Ok(match spec.kind {
        K::ObservedMean => Estimate::scalar(observed_mean(&univariate(rows))?),
        K::MedianOfMeans => {
            let obs = observed_values(&univariate(rows));
            let m = mom_blocks(delta);
            Estimate::scalar(median_of_means(&obs, m, seed)?).note("blocks", m)
        }
        K::TrimmedMean => {
            let obs = observed_values(&univariate(rows));
            Estimate::scalar(trimmed_mean(&obs, epsilon, delta, seed)?)
        }
        K::AverageOfExtremes => Estimate::scalar(average_of_extremes(&univariate(rows))),
        K::MkEstimate => Estimate::scalar(mk_estimate(&univariate(rows), epsilon, q, sigma)?),
        K::CompleteCaseMean => {
            let cc = complete_cases(rows);
            if cc.is_empty() {
                return Err(Error::Estimation("no complete rows".into()));
            }
            let theta = (0..d)
                .map(|j| mean(&cc.iter().map(|r| r[j]).collect::<Vec<_>>()))
                .collect();
            Estimate::plain(theta).note("complete_rows", cc.len())
        }
        K::RobustDescent => {
            let cc = complete_cases(rows);
            let blocks = robust_descent_blocks(cc.len(), epsilon, delta);
            Estimate::plain(robust_descent(&cc, epsilon, delta, seed)?)
                .note("complete_rows", cc.len())
                .note("blocks", blocks)
        }
        K::IterativeRobustDescent => {
            let plan = DescentPlan::new(rows.len(), d, epsilon, delta, &spec.descent)?;
            Estimate::plain(iterative_robust_descent(
                rows,
                epsilon,
                delta,
                &spec.descent,
                seed,
            )?)
            .note("folds", plan.folds)
            .note("blocks", plan.blocks)
            .note("eps_prime", plan.eps_prime)
        }
        K::MultivariateMk => {
            let cov = DMatrix::<f64>::identity(d, d) * (sigma * sigma);
            let mk = multivariate_mk(rows, epsilon, q, &cov, seed)?;
            Estimate::plain(mk.theta)
                .note("objective", mk.objective)
                .note("net_size", mk.net_size)
        }
        K::KsRegression | K::OlsObserved => {
            return Err(Error::config(format!(
                "estimator {} needs regression data",
                spec.kind.name()
            )))
        }
    })
}

/// Every grid cell × replication × estimator, sorted by
/// `(scenario, estimator, n, d, ε, q, σ, rep)`.
///
/// Replication `r` of cell `c` samples with `replication_seed(seed, c, r)`;
/// estimators draw from [`estimator_seed`] of that value. Failures become
/// `NA` rows and are listed in [`RunOutput::failures`].
pub fn run_scenario(config: &ScenarioConfig, opts: RunOptions) -> Result<RunOutput> {
    let specs = config.validate()?;
    let cells = config.grid.cells();
    let models = cells
        .iter()
        .map(|c| config.model.instantiate(c))
        .collect::<Result<Vec<CellModel>>>()?;
    let scenario = config.model.label();
    let reps = config.reps;
    let tasks = crate::par::map_range(cells.len() * reps, |t| {
        let (ci, rep) = (t / reps, t % reps);
        let cell = &cells[ci];
        let seed = replication_seed(config.seed, cell.index, rep);
        let theta0 = models[ci].theta0();
        let data = models[ci].sample(cell.n, seed);
        specs
            .iter()
            .map(|spec| {
                let start = Instant::now();
                let outcome = data
                    .as_ref()
                    .map_err(|e| format!("sampling: {e}"))
                    .and_then(|data| {
                        run_estimator(
                            spec,
                            data,
                            cell.epsilon,
                            cell.q,
                            cell.sigma,
                            config.delta,
                            estimator_seed(seed, spec.kind),
                        )
                        .map_err(|e| e.to_string())
                    });
                let elapsed = start.elapsed().as_secs_f64() * 1e3;
                let (sq_error, failure) = match outcome {
                    Ok(Estimate { theta: est, .. })
                        if est.len() == theta0.len() && est.iter().all(|v| v.is_finite()) =>
                    {
                        (Some(sq_dist(&est, &theta0)), None)
                    }
                    Ok(Estimate { theta: est, .. }) => (
                        None,
                        Some(format!("non-finite or misshapen estimate {est:?}")),
                    ),
                    Err(e) => (None, Some(e)),
                };
                let record = ResultRecord {
                    scenario: scenario.to_string(),
                    estimator: spec.kind.name().to_string(),
                    n: cell.n,
                    d: cell.d,
                    epsilon: cell.epsilon,
                    q: cell.q,
                    sigma: cell.sigma,
                    rep,
                    seed,
                    sq_error,
                    runtime_ms: opts.timings.then_some(elapsed),
                };
                let failure = failure.map(|f| {
                    format!(
                        "{scenario}/{} n={} d={} epsilon={} q={} sigma={} rep={rep}: {f}",
                        record.estimator, cell.n, cell.d, cell.epsilon, cell.q, cell.sigma
                    )
                });
                (record, failure)
            })
            .collect::<Vec<_>>()
    });
    let mut pairs: Vec<(ResultRecord, Option<String>)> = tasks.into_iter().flatten().collect();
    pairs.sort_by(|a, b| a.0.sort_key().cmp(&b.0.sort_key()));
    let failures = pairs.iter().filter_map(|p| p.1.clone()).collect();
    Ok(RunOutput {
        records: pairs.into_iter().map(|p| p.0).collect(),
        failures,
    })
}
