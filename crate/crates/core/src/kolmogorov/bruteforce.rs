//! The distance programs written out as explicit linear programs and handed
//! to a generic simplex solver. Only meant as an oracle for small `m`.

use super::chain::{ChainBounds, RealisableSetSpec};
use super::distance::EmpiricalSummary;
use crate::error::{Error, Result};
use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};

/// Largest `m` accepted by the brute-force solvers.
pub const MAX_BRUTEFORCE_M: usize = 8;

struct Lp {
    problem: Problem,
    t: Variable,
    /// `v[0]` is `None` (fixed at zero).
    v: Vec<Option<Variable>>,
}

impl Lp {
    fn new(m: usize) -> Self {
        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let t = problem.add_var(1.0, (0.0, f64::INFINITY));
        let mut v = vec![None];
        for _ in 0..=m {
            v.push(Some(problem.add_var(0.0, (0.0, 1.0))));
        }
        Self { problem, t, v }
    }

    /// `|c - (Σ sign·V)| ≤ t` for a signed combination of nodes.
    fn abs_le_t(&mut self, c: f64, terms: &[(usize, f64)]) {
        let mut lhs: Vec<(Variable, f64)> = terms
            .iter()
            .filter_map(|&(k, s)| self.v[k].map(|var| (var, s)))
            .collect();
        lhs.push((self.t, 1.0));
        self.problem.add_constraint(&lhs[..], ComparisonOp::Ge, c);
        let mut lhs: Vec<(Variable, f64)> = terms
            .iter()
            .filter_map(|&(k, s)| self.v[k].map(|var| (var, s)))
            .collect();
        lhs.push((self.t, -1.0));
        self.problem.add_constraint(&lhs[..], ComparisonOp::Le, c);
    }

    fn chain(&mut self, bounds: &ChainBounds) {
        for i in 0..bounds.len() {
            let mut terms = vec![(self.v[i + 1].expect("node"), 1.0)];
            if let Some(prev) = self.v[i] {
                terms.push((prev, -1.0));
            }
            self.problem
                .add_constraint(&terms[..], ComparisonOp::Ge, bounds.lower[i]);
            self.problem
                .add_constraint(&terms[..], ComparisonOp::Le, bounds.upper[i]);
        }
    }

    fn solve(self) -> Result<f64> {
        match self.problem.solve() {
            Ok(sol) => Ok(sol.objective()),
            Err(minilp::Error::Infeasible) => Ok(f64::INFINITY),
            Err(e) => Err(Error::Numeric(format!("linear program: {e}"))),
        }
    }
}

fn check_size(emp: &EmpiricalSummary) -> Result<()> {
    if emp.m() > MAX_BRUTEFORCE_M {
        return Err(Error::size(format!(
            "brute-force program limited to m <= {MAX_BRUTEFORCE_M}, got {}",
            emp.m()
        )));
    }
    Ok(())
}

/// `min t` subject to `|i/n - V_i| ≤ t`, `|i/n - V_{i+1}| ≤ t` and the
/// chain bounds, as a generic LP.
pub fn dist_to_realisable_bruteforce(
    emp: &EmpiricalSummary,
    set: &RealisableSetSpec,
) -> Result<f64> {
    check_size(emp)?;
    let (m, n) = (emp.m(), emp.n_total() as f64);
    let mut lp = Lp::new(m);
    for i in 0..=m {
        let c = i as f64 / n;
        lp.abs_le_t(c, &[(i, 1.0)]);
        lp.abs_le_t(c, &[(i + 1, 1.0)]);
    }
    lp.chain(&ChainBounds::new(emp, set));
    lp.solve()
}

/// The symmetrised program: additionally `|(m-i)/n - (V_{m+1} - V_i)| ≤ t`
/// and `|(m-i+1)/n - (V_{m+1} - V_i)| ≤ t` for the upper half-lines.
pub fn dist_to_realisable_sym_bruteforce(
    emp: &EmpiricalSummary,
    set: &RealisableSetSpec,
) -> Result<f64> {
    check_size(emp)?;
    let (m, n) = (emp.m(), emp.n_total() as f64);
    let mut lp = Lp::new(m);
    for i in 0..=m {
        let c = i as f64 / n;
        lp.abs_le_t(c, &[(i, 1.0)]);
        lp.abs_le_t(c, &[(i + 1, 1.0)]);
    }
    for i in 0..=m {
        let terms = [(m + 1, 1.0), (i, -1.0)];
        lp.abs_le_t((m - i) as f64 / n, &terms);
        if i >= 1 {
            lp.abs_le_t((m - i + 1) as f64 / n, &terms);
        }
    }
    lp.chain(&ChainBounds::new(emp, set));
    lp.solve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kolmogorov::chain::{dist_to_realisable, dist_to_realisable_sym};
    use crate::rng::Stream;

    #[test]
    fn analytic_cases() {
        let set = RealisableSetSpec::gaussian(0.0, 1.0, 0.3, 0.5).unwrap();
        let emp = EmpiricalSummary::new(vec![], 5).unwrap();
        let d = dist_to_realisable_bruteforce(&emp, &set).unwrap();
        assert!((d - 0.35).abs() < 1e-9);
        let set = RealisableSetSpec::gaussian(0.0, 1.0, 0.0, 1.0).unwrap();
        let emp = EmpiricalSummary::new(vec![0.0], 1).unwrap();
        let d = dist_to_realisable_bruteforce(&emp, &set).unwrap();
        assert!((d - 0.5).abs() < 1e-9);
    }

    #[test]
    fn size_limit() {
        let set = RealisableSetSpec::gaussian(0.0, 1.0, 0.1, 0.5).unwrap();
        let emp = EmpiricalSummary::new((0..9).map(f64::from).collect(), 10).unwrap();
        assert!(matches!(
            dist_to_realisable_bruteforce(&emp, &set),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn nonincreasing_in_epsilon() {
        let mut s = Stream::new(77);
        for _ in 0..30 {
            let n = 2 + s.index(7);
            let m = 1 + s.index(n.min(8));
            let obs: Vec<f64> = (0..m).map(|_| s.normal() + 0.5).collect();
            let emp = EmpiricalSummary::new(obs, n).unwrap();
            let mut prev = f64::INFINITY;
            // Hold q(1-ε) fixed so the set grows with ε.
            for k in 0..8 {
                let eps = k as f64 * 0.1;
                let q = 0.2 / (1.0 - eps);
                let set = RealisableSetSpec::gaussian(0.0, 1.0, eps, q).unwrap();
                let d = dist_to_realisable_bruteforce(&emp, &set).unwrap();
                assert!(d <= prev + 1e-9);
                prev = d;
            }
        }
    }

    #[test]
    fn sym_agrees_with_chain_solver() {
        let mut s = Stream::new(3);
        for _ in 0..60 {
            let n = 1 + s.index(8);
            let m = s.index(n.min(6) + 1);
            let obs: Vec<f64> = (0..m).map(|_| 1.3 * s.normal()).collect();
            let emp = EmpiricalSummary::new(obs, n).unwrap();
            let set =
                RealisableSetSpec::gaussian(0.2, 1.0, 0.9 * s.uniform(), 0.1 + 0.9 * s.uniform())
                    .unwrap();
            let a = dist_to_realisable_sym(&emp, &set);
            let b = dist_to_realisable_sym_bruteforce(&emp, &set).unwrap();
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            let a = dist_to_realisable(&emp, &set);
            let b = dist_to_realisable_bruteforce(&emp, &set).unwrap();
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}
