//! Empirical quantiles and rate tables.

use super::run::ResultRecord;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Smallest order statistic with empirical coverage at least `1 - δ`:
/// rank `⌈(1 - δ)N⌉`, floored at 1.
pub fn empirical_quantile(errors: &[f64], delta: f64) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::size("quantile of an empty sample"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::domain(format!("delta = {delta} outside (0, 1]")));
    }
    if errors.iter().any(|e| e.is_nan()) {
        return Err(Error::domain("NaN in errors"));
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // The 1e-9 keeps (1 - 0.25)·4 = 3 from rounding up to 4.
    let rank = (((1.0 - delta) * n as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok(sorted[rank.min(n) - 1])
}

/// Least-squares slope of `log y` on `log x`. `None` with fewer than two
/// distinct `x` or any nonpositive value.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points
        .iter()
        .any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Record fields a rate table can keep apart. The estimator and `n` are
/// always kept apart; fields not listed are pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupField {
    Scenario,
    D,
    Epsilon,
    Q,
    Sigma,
}

impl GroupField {
    pub const ALL: [GroupField; 5] = [
        GroupField::Scenario,
        GroupField::D,
        GroupField::Epsilon,
        GroupField::Q,
        GroupField::Sigma,
    ];
}

/// One row of a rate table. Pooled fields are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub scenario: Option<String>,
    pub estimator: String,
    pub d: Option<usize>,
    pub epsilon: Option<f64>,
    pub q: Option<f64>,
    pub sigma: Option<f64>,
    pub n: usize,
    /// Records with a finite error.
    pub reps: usize,
    pub failures: usize,
    pub quantile: Option<f64>,
    /// Log-log slope of the quantile against `n` within the group; the same
    /// on every row of a group.
    pub slope: Option<f64>,
}

type GroupKey = (
    Option<String>,
    String,
    Option<usize>,
    Option<u64>,
    Option<u64>,
    Option<u64>,
);

fn group_key(r: &ResultRecord, by: &[GroupField]) -> GroupKey {
    let has = |f| by.contains(&f);
    (
        has(GroupField::Scenario).then(|| r.scenario.clone()),
        r.estimator.clone(),
        has(GroupField::D).then_some(r.d),
        has(GroupField::Epsilon).then_some(r.epsilon.to_bits()),
        has(GroupField::Q).then_some(r.q.to_bits()),
        has(GroupField::Sigma).then_some(r.sigma.to_bits()),
    )
}

/// Per group and `n`: the empirical `(1 - δ)` quantile of the squared
/// errors, and per group the log-log slope of those quantiles against `n`.
pub fn rate_table(
    records: &[ResultRecord],
    group_by: &[GroupField],
    delta: f64,
) -> Result<Vec<RateRow>> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::domain(format!("delta = {delta} outside (0, 1]")));
    }
    let mut groups: BTreeMap<GroupKey, BTreeMap<usize, (Vec<f64>, usize)>> = BTreeMap::new();
    for r in records {
        let slot = groups
            .entry(group_key(r, group_by))
            .or_default()
            .entry(r.n)
            .or_default();
        match r.sq_error {
            Some(e) if e.is_finite() => slot.0.push(e),
            _ => slot.1 += 1,
        }
    }
    let mut rows = Vec::new();
    for (key, by_n) in groups {
        let mut quantiles = Vec::new();
        for (&n, (errors, failures)) in &by_n {
            let q = if errors.is_empty() {
                None
            } else {
                Some(empirical_quantile(errors, delta)?)
            };
            quantiles.push((n, errors.len(), *failures, q));
        }
        let points: Vec<(f64, f64)> = quantiles
            .iter()
            .filter_map(|&(n, _, _, q)| q.map(|q| (n as f64, q)))
            .collect();
        let slope = if points.len() == by_n.len() {
            log_log_slope(&points)
        } else {
            None
        };
        for (n, reps, failures, quantile) in quantiles {
            rows.push(RateRow {
                scenario: key.0.clone(),
                estimator: key.1.clone(),
                d: key.2,
                epsilon: key.3.map(f64::from_bits),
                q: key.4.map(f64::from_bits),
                sigma: key.5.map(f64::from_bits),
                n,
                reps,
                failures,
                quantile,
                slope,
            });
        }
    }
    Ok(rows)
}
