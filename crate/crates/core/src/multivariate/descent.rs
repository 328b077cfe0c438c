//! Robust block descent and the robust descent mean estimator.

use super::sdp::{dot, solve_sdp_approx, BlockMeans};
use crate::error::{Error, Result};
use crate::rng::{tag, Stream};
use crate::special::median_in_place;

pub const DEFAULT_SDP_ITERS: usize = 20;

/// `⌈log(8√d) / log(10/9)⌉`.
pub fn descent_steps(d: usize) -> usize {
    ((8.0 * (d as f64).sqrt()).ln() / (10.0f64 / 9.0).ln()).ceil() as usize
}

/// Coordinatewise median start followed by `descent_steps(d)` median steps
/// along the direction returned by [`solve_sdp_approx`].
pub fn robust_block_descent(means: &BlockMeans, sdp_iters: usize) -> Result<Vec<f64>> {
    if means.is_empty() {
        return Err(Error::size("robust block descent needs at least one block"));
    }
    let d = means.dim();
    let mut theta: Vec<f64> = (0..d)
        .map(|j| {
            let mut col: Vec<f64> = means.means().iter().map(|x| x[j]).collect();
            median_in_place(&mut col)
        })
        .collect();
    if means.len() == 1 {
        return Ok(theta);
    }
    let mut scores = vec![0.0; means.len()];
    for _ in 0..descent_steps(d) {
        let sol = solve_sdp_approx(means, &theta, sdp_iters)?;
        if sol.value == 0.0 {
            break;
        }
        let v = sol.direction;
        for (s, x) in scores.iter_mut().zip(means.means()) {
            *s = x
                .iter()
                .zip(&theta)
                .zip(&v)
                .map(|((a, b), c)| (a - b) * c)
                .sum();
        }
        let step = median_in_place(&mut scores);
        for (t, vj) in theta.iter_mut().zip(&v) {
            *t += step * vj;
        }
    }
    Ok(theta)
}

/// Shuffles `0..n` with `stream` and cuts `blocks` consecutive pieces of
/// `size` indices each; the rest is dropped.
pub(crate) fn random_blocks(
    n: usize,
    blocks: usize,
    size: usize,
    stream: &mut Stream,
) -> Vec<Vec<usize>> {
    assert!(blocks * size <= n, "blocks do not fit");
    let mut idx: Vec<usize> = (0..n).collect();
    stream.shuffle(&mut idx);
    let out: Vec<Vec<usize>> = idx[..blocks * size]
        .chunks(size.max(1))
        .take(blocks)
        .map(<[usize]>::to_vec)
        .collect();
    let mut seen = vec![false; n];
    for &i in out.iter().flatten() {
        assert!(!seen[i], "index {i} reused across blocks");
        seen[i] = true;
    }
    out
}

/// `⌈300(2εn + log(2/δ)) ∨ 180000 log(2/δ)⌉ ∧ n`.
pub fn robust_descent_blocks(n: usize, epsilon: f64, delta: f64) -> usize {
    let l = (2.0 / delta).ln();
    let m = (300.0 * (2.0 * epsilon * n as f64 + l))
        .max(180_000.0 * l)
        .ceil();
    (m.max(1.0) as usize).min(n)
}

/// Median-of-means style descent on fully observed data.
pub fn robust_descent(data: &[Vec<f64>], epsilon: f64, delta: f64, seed: u64) -> Result<Vec<f64>> {
    robust_descent_with(data, epsilon, delta, seed, DEFAULT_SDP_ITERS)
}

pub fn robust_descent_with(
    data: &[Vec<f64>],
    epsilon: f64,
    delta: f64,
    seed: u64,
    sdp_iters: usize,
) -> Result<Vec<f64>> {
    let n = data.len();
    if n == 0 {
        return Err(Error::size("robust descent needs n >= 1"));
    }
    if !(delta > 0.0 && delta < 2.0) {
        return Err(Error::domain(format!("delta = {delta} outside (0, 2)")));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::domain(format!(
            "epsilon = {epsilon} must be nonnegative"
        )));
    }
    let m = robust_descent_blocks(n, epsilon, delta);
    let size = n / m;
    let mut stream = Stream::child(seed, tag::PARTITION, 0);
    let blocks = random_blocks(n, m, size, &mut stream);
    let d = data[0].len();
    let means = blocks
        .iter()
        .map(|b| {
            let mut acc = vec![0.0; d];
            for &i in b {
                for (a, x) in acc.iter_mut().zip(&data[i]) {
                    *a += x;
                }
            }
            acc.iter().map(|a| a / size as f64).collect()
        })
        .collect();
    robust_block_descent(&BlockMeans::new(means)?, sdp_iters)
}

/// Squared Euclidean distance.
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    dot(&diff, &diff)
}
