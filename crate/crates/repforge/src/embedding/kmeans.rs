//! k-means with k-means++ seeding and best-of-restarts selection.

use rand::Rng;

use crate::error::{Error, Result};
use crate::seeds::rng_for;

use super::squared_distance;

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
}

impl KmeansResult {
    /// Index of the centroid nearest to `point`.
    pub fn assign(&self, point: &[f64]) -> usize {
        nearest(point, &self.centroids).0
    }
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Lloyd's algorithm, k-means++ initialization, `restarts` independent runs;
/// the run with the lowest inertia wins. Deterministic under `seed`.
pub fn kmeans(x: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> Result<KmeansResult> {
    let n = x.len();
    if k < 1 {
        return Err(Error::InvalidArgument("kmeans: k must be ≥ 1".into()));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("kmeans: k={k} > n={n}")));
    }
    let mut best: Option<KmeansResult> = None;
    for restart in 0..restarts.max(1) {
        let result = run_once(x, k, seed, restart)?;
        if best.as_ref().is_none_or(|b| result.inertia < b.inertia) {
            best = Some(result);
        }
    }
    Ok(best.unwrap())
}

fn run_once(x: &[Vec<f64>], k: usize, seed: u64, restart: usize) -> Result<KmeansResult> {
    let mut rng = rng_for(seed, &format!("kmeans/restart{restart}"));
    let n = x.len();

    // k-means++ seeding
    let mut centroids: Vec<Vec<f64>> = vec![x[rng.gen_range(0..n)].clone()];
    let mut dist2: Vec<f64> = x.iter().map(|p| squared_distance(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = dist2.iter().sum();
        let next = if total <= 0.0 {
            rng.gen_range(0..n)
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = n - 1;
            for (i, d) in dist2.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.push(x[next].clone());
        for (d, p) in dist2.iter_mut().zip(x) {
            *d = d.min(squared_distance(p, centroids.last().unwrap()));
        }
    }

    let mut assignments = vec![0usize; n];
    for _iter in 0..300 {
        let mut changed = false;
        for (i, p) in x.iter().enumerate() {
            let (c, _) = nearest(p, &centroids);
            if assignments[i] != c {
                assignments[i] = c;
                changed = true;
            }
        }

        let d = x[0].len();
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in x.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // re-seed an empty cluster at the point farthest from its centroid
                let far = (0..n)
                    .max_by(|&a, &b| {
                        squared_distance(&x[a], &centroids[assignments[a]])
                            .partial_cmp(&squared_distance(&x[b], &centroids[assignments[b]]))
                            .unwrap()
                    })
                    .unwrap();
                centroids[c] = x[far].clone();
                changed = true;
            } else {
                for (s, cv) in sums[c].iter().zip(centroids[c].iter_mut()) {
                    *cv = s / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let inertia = x
        .iter()
        .zip(&assignments)
        .map(|(p, &a)| squared_distance(p, &centroids[a]))
        .sum();
    Ok(KmeansResult {
        assignments,
        centroids,
        inertia,
    })
}
