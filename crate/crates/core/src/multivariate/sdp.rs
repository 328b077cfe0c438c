//! Approximate direction search for the block descent: a rank-one
//! relaxation of `max_V min_{w ∈ Δ_M} tr(V Σ_m w_m r_m r_mᵀ)` with
//! `r_m = x̄_m - θ` and weights capped at `10/(9M)`.

use crate::error::{Error, Result};

/// Block means `x̄_1, …, x̄_M`, all finite and of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMeans {
    means: Vec<Vec<f64>>,
}

impl BlockMeans {
    pub fn new(means: Vec<Vec<f64>>) -> Result<Self> {
        let d = means.first().map_or(0, Vec::len);
        for m in &means {
            if m.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: m.len(),
                });
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::domain("block means must be finite"));
            }
        }
        Ok(Self { means })
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn shifted(&self, by: &[f64]) -> Self {
        let means = self
            .means
            .iter()
            .map(|m| m.iter().zip(by).map(|(a, b)| a + b).collect())
            .collect();
        Self { means }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub direction: Vec<f64>,
    pub value: f64,
    /// Best value after each alternating step.
    pub trace: Vec<f64>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Capped simplex weights minimising `Σ w_m s_m`: the cap on the
/// `⌊9M/10⌋` smallest scores and the leftover mass on the next one.
pub fn capped_weights(scores: &[f64]) -> Vec<f64> {
    let m = scores.len();
    let cap = 10.0 / (9.0 * m as f64);
    let full = 9 * m / 10;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]).then(i.cmp(&j)));
    let mut w = vec![0.0; m];
    for &i in &order[..full] {
        w[i] = cap;
    }
    if full < m {
        w[order[full]] = (1.0 - full as f64 * cap).max(0.0);
    }
    w
}

fn weighted_value(resid: &[Vec<f64>], v: &[f64]) -> f64 {
    let scores: Vec<f64> = resid.iter().map(|r| dot(r, v).powi(2)).collect();
    capped_weights(&scores)
        .iter()
        .zip(&scores)
        .map(|(w, s)| w * s)
        .sum()
}

/// Top eigenvector of the PSD matrix `Σ_m c_m r_m r_mᵀ` by power
/// iteration from `start`.
fn power_iteration(resid: &[Vec<f64>], coef: &[f64], start: &[f64]) -> Vec<f64> {
    let d = start.len();
    let apply = |x: &[f64]| {
        let mut y = vec![0.0; d];
        for (r, &c) in resid.iter().zip(coef) {
            if c == 0.0 {
                continue;
            }
            let p = c * dot(r, x);
            for (yj, rj) in y.iter_mut().zip(r) {
                *yj += p * rj;
            }
        }
        y
    };
    let mut x = start.to_vec();
    let mut y = apply(&x);
    if norm(&y) == 0.0 {
        // Start orthogonal to the range; restart from the heaviest residual.
        let heavy = resid
            .iter()
            .zip(coef)
            .map(|(r, c)| c * dot(r, r))
            .enumerate()
            .fold((0, -1.0), |b, (i, v)| if v > b.1 { (i, v) } else { b })
            .0;
        x = resid[heavy].clone();
        y = apply(&x);
        if norm(&y) == 0.0 {
            return start.to_vec();
        }
    }
    for _ in 0..100 {
        let ny = norm(&y);
        let next: Vec<f64> = y.iter().map(|v| v / ny).collect();
        let change = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        x = next;
        if change < 1e-10 {
            break;
        }
        y = apply(&x);
    }
    x
}

/// Relative gap below which two values count as tied. Ties go to the
/// earlier candidate, so rounding noise from a translation cannot change
/// which residual or iterate is picked.
const TIE_TOL: f64 = 1e-9;

/// First index whose value is within `TIE_TOL` of the maximum.
fn first_near_max(values: &[f64]) -> usize {
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .position(|&v| v >= top * (1.0 - TIE_TOL))
        .unwrap_or(0)
}

/// Of `±v`, the lexicographically smaller one.
pub(crate) fn lex_smallest_sign(mut v: Vec<f64>) -> Vec<f64> {
    if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-12) {
        if first > 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    v
}

/// Alternating weight truncation and power iteration. Returns the best
/// direction seen and its capped-weight energy `min_w Σ w_m (r_mᵀv)²`.
pub fn solve_sdp_approx(means: &BlockMeans, theta: &[f64], iters: usize) -> Result<SdpSolution> {
    let m = means.len();
    if m < 2 {
        return Err(Error::size(format!(
            "direction search needs M >= 2 blocks, got {m}"
        )));
    }
    let d = theta.len();
    if means.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            got: means.dim(),
        });
    }
    let resid: Vec<Vec<f64>> = means
        .means()
        .iter()
        .map(|x| x.iter().zip(theta).map(|(a, b)| a - b).collect())
        .collect();
    let norms: Vec<f64> = resid.iter().map(|r| norm(r)).collect();
    let heavy = first_near_max(&norms);
    if norms[heavy] == 0.0 {
        let mut e1 = vec![0.0; d];
        e1[0] = 1.0;
        return Ok(SdpSolution {
            direction: e1,
            value: 0.0,
            trace: vec![0.0],
        });
    }

    let start: Vec<f64> = resid[heavy].iter().map(|x| x / norms[heavy]).collect();
    let uniform = vec![1.0 / m as f64; m];
    let mut v = power_iteration(&resid, &uniform, &start);
    let mut best = (v.clone(), weighted_value(&resid, &v));
    let mut trace = vec![best.1];
    for _ in 0..iters {
        let scores: Vec<f64> = resid.iter().map(|r| dot(r, &v).powi(2)).collect();
        let w = capped_weights(&scores);
        v = power_iteration(&resid, &w, &v);
        let val = weighted_value(&resid, &v);
        if val > best.1 * (1.0 + TIE_TOL) {
            best = (v.clone(), val);
        }
        assert!(
            best.1 >= *trace.last().unwrap(),
            "direction value decreased"
        );
        trace.push(best.1);
    }
    Ok(SdpSolution {
        direction: lex_smallest_sign(best.0),
        value: best.1,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn two_blocks_one_dimension() {
        let means = BlockMeans::new(vec![vec![4.0], vec![2.0]]).unwrap();
        let sol = solve_sdp_approx(&means, &[3.0], 20).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-12);
        assert!((sol.direction[0].abs() - 1.0).abs() < 1e-12);
        let w = capped_weights(&[1.0, 1.0]);
        assert!((w[0] - 10.0 / 18.0).abs() < 1e-15);
        assert!((w[1] - 8.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn all_means_at_theta() {
        let means = BlockMeans::new(vec![vec![1.0, 2.0]; 5]).unwrap();
        let sol = solve_sdp_approx(&means, &[1.0, 2.0], 20).unwrap();
        assert_eq!(sol.value, 0.0);
        assert_eq!(sol.direction, vec![1.0, 0.0]);
    }

    #[test]
    fn value_below_capped_top_eigenvalue() {
        let mut s = Stream::new(4);
        for _ in 0..50 {
            let m = 2 + s.index(30);
            let d = 1 + s.index(5);
            let means: Vec<Vec<f64>> = (0..m)
                .map(|_| {
                    (0..d)
                        .map(|_| s.normal() * (1.0 + 3.0 * s.uniform()))
                        .collect()
                })
                .collect();
            let theta: Vec<f64> = (0..d).map(|_| s.normal()).collect();
            let bm = BlockMeans::new(means.clone()).unwrap();
            let sol = solve_sdp_approx(&bm, &theta, 20).unwrap();
            let mut cov = nalgebra::DMatrix::<f64>::zeros(d, d);
            for x in &means {
                let r =
                    nalgebra::DVector::from_iterator(d, x.iter().zip(&theta).map(|(a, b)| a - b));
                cov += &r * r.transpose() / m as f64;
            }
            let top = cov.symmetric_eigenvalues().max();
            assert!(sol.value <= top * 10.0 / 9.0 + 1e-9);
            assert!((norm(&sol.direction) - 1.0).abs() < 1e-9);
            assert!(sol.trace.windows(2).all(|p| p[1] >= p[0]));
        }
    }

    #[test]
    fn finds_outlying_direction() {
        let mut means: Vec<Vec<f64>> = (0..40).map(|i| vec![0.01 * i as f64, 0.0, 0.0]).collect();
        for m in means.iter_mut().take(10) {
            m[1] = 5.0;
        }
        let sol = solve_sdp_approx(&BlockMeans::new(means).unwrap(), &[0.2, 0.0, 0.0], 20).unwrap();
        assert!(sol.direction[1].abs() > 0.99, "{:?}", sol.direction);
    }

    #[test]
    fn sign_convention() {
        assert_eq!(lex_smallest_sign(vec![0.6, -0.8]), vec![-0.6, 0.8]);
        assert_eq!(lex_smallest_sign(vec![0.0, 1.0]), vec![0.0, -1.0]);
    }
}
