//! Greedy `1/4`-nets of the unit sphere.

use crate::error::{Error, Result};
use crate::rng::{tag, Stream};
use serde::{Deserialize, Serialize};

pub const NET_RADIUS: f64 = 0.25;
pub const MAX_NET_DIM: usize = 8;
const AUDIT_DRAWS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereNet {
    pub directions: Vec<Vec<f64>>,
    pub radius: f64,
}

fn unit_vector(d: usize, s: &mut Stream) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..d).map(|_| s.normal()).collect();
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > 1e-12 {
            return x.iter().map(|v| v / r).collect();
        }
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Consecutive rejections after which the greedy packing stops.
pub fn rejection_cap(d: usize) -> usize {
    (10_000.0 * 9f64.powi(d as i32)).min(1e6) as usize
}

impl SphereNet {
    pub fn dim(&self) -> usize {
        self.directions.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Largest distance from `draws` random unit vectors to the net.
    pub fn coverage_radius(&self, draws: usize, seed: u64) -> f64 {
        let d = self.dim();
        let mut s = Stream::child(seed, tag::NET, 1);
        (0..draws)
            .map(|_| {
                let u = unit_vector(d, &mut s);
                self.directions
                    .iter()
                    .map(|v| dist2(v, &u))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
            .sqrt()
    }
}

/// Keeps random unit vectors farther than `1/4` from every kept one until
/// [`rejection_cap`] draws in a row are rejected, then audits coverage.
pub fn quarter_net(d: usize, seed: u64) -> Result<SphereNet> {
    if d == 0 || d > MAX_NET_DIM {
        return Err(Error::size(format!(
            "net dimension {d} outside 1..={MAX_NET_DIM}"
        )));
    }
    let mut s = Stream::child(seed, tag::NET, 0);
    let cap = rejection_cap(d);
    let r2 = NET_RADIUS * NET_RADIUS;
    let mut kept: Vec<Vec<f64>> = Vec::new();
    let mut misses = 0;
    while misses < cap {
        let u = unit_vector(d, &mut s);
        if kept.iter().all(|v| dist2(v, &u) > r2) {
            kept.push(u);
            misses = 0;
        } else {
            misses += 1;
        }
    }
    let net = SphereNet {
        directions: kept,
        radius: NET_RADIUS,
    };
    let reach = net.coverage_radius(AUDIT_DRAWS, seed);
    if reach > NET_RADIUS + 0.02 {
        return Err(Error::Numeric(format!(
            "net coverage audit failed: a direction lies {reach:.4} from the net"
        )));
    }
    Ok(net)
}
