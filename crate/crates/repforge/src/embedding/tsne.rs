//! Exact (dense) t-SNE.
//!
//! The O(n²) formulation is used throughout: the rep datasets here are on
//! the order of a thousand points, where the exact gradient is cheap and
//! avoids the approximation error of tree-based variants.

use rand::Rng;

use crate::error::{Error, Result};
use crate::seeds::rng_for;

use super::squared_distance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iters: usize,
    pub learning_rate: f64,
    /// Input similarities are multiplied by this factor for the first
    /// quarter of the iterations so clusters separate early.
    pub early_exaggeration: f64,
}

impl Default for TsneParams {
    fn default() -> Self {
        TsneParams {
            perplexity: 30.0,
            iters: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
        }
    }
}

/// Embed `x` into 2-D. Deterministic under `seed`.
pub fn tsne_embed(x: &[Vec<f64>], params: &TsneParams, seed: u64) -> Result<Vec<[f64; 2]>> {
    let n = x.len();
    if (n as f64) < 3.0 * params.perplexity {
        return Err(Error::InvalidArgument(format!(
            "tsne: perplexity {} too large for n={n}",
            params.perplexity
        )));
    }

    let p = joint_probabilities(x, params.perplexity);

    let mut rng = rng_for(seed, "tsne/init");
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| {
            [
                1e-4 * gaussian(&mut rng),
                1e-4 * gaussian(&mut rng),
            ]
        })
        .collect();
    let mut velocity = vec![[0.0f64; 2]; n];

    let exaggeration_end = params.iters / 4;
    for iter in 0..params.iters {
        let exaggeration = if iter < exaggeration_end {
            params.early_exaggeration
        } else {
            1.0
        };
        let momentum = if iter < exaggeration_end { 0.5 } else { 0.8 };

        // Student-t similarities in the embedding
        let mut weights = vec![0.0; n * n];
        let mut weight_sum = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                let w = 1.0 / (1.0 + dx * dx + dy * dy);
                weights[i * n + j] = w;
                weights[j * n + i] = w;
                weight_sum += 2.0 * w;
            }
        }
        let weight_sum = weight_sum.max(1e-12);

        for i in 0..n {
            let mut grad = [0.0f64; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = weights[i * n + j];
                let q = (w / weight_sum).max(1e-12);
                let coeff = 4.0 * (exaggeration * p[i * n + j] - q) * w;
                grad[0] += coeff * (y[i][0] - y[j][0]);
                grad[1] += coeff * (y[i][1] - y[j][1]);
            }
            for d in 0..2 {
                velocity[i][d] = momentum * velocity[i][d] - params.learning_rate * grad[d];
            }
        }
        for (yi, vi) in y.iter_mut().zip(&velocity) {
            yi[0] += vi[0];
            yi[1] += vi[1];
        }

        // keep the embedding centered
        let cx: f64 = y.iter().map(|p| p[0]).sum::<f64>() / n as f64;
        let cy: f64 = y.iter().map(|p| p[1]).sum::<f64>() / n as f64;
        for yi in &mut y {
            yi[0] -= cx;
            yi[1] -= cy;
        }
    }
    Ok(y)
}

/// Symmetrized joint probabilities with per-point bandwidths found by
/// binary search on the perplexity.
fn joint_probabilities(x: &[Vec<f64>], perplexity: f64) -> Vec<f64> {
    let n = x.len();
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = squared_distance(&x[i], &x[j]);
            d2[i * n + j] = d;
            d2[j * n + i] = d;
        }
    }

    let target_entropy = perplexity.ln();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        let row = &d2[i * n..(i + 1) * n];
        let mut beta = 1.0; // 1 / (2 sigma^2)
        let mut beta_lo = 0.0f64;
        let mut beta_hi = f64::INFINITY;
        let mut conditional = vec![0.0; n];
        for _ in 0..64 {
            let mut sum = 0.0;
            for j in 0..n {
                conditional[j] = if j == i { 0.0 } else { (-beta * row[j]).exp() };
                sum += conditional[j];
            }
            let sum = sum.max(1e-300);
            let mut entropy = 0.0;
            for c in conditional.iter_mut() {
                *c /= sum;
                if *c > 1e-300 {
                    entropy -= *c * c.ln();
                }
            }
            let diff = entropy - target_entropy;
            if diff.abs() < 1e-5 {
                break;
            }
            if diff > 0.0 {
                beta_lo = beta;
                beta = if beta_hi.is_finite() {
                    0.5 * (beta + beta_hi)
                } else {
                    beta * 2.0
                };
            } else {
                beta_hi = beta;
                beta = 0.5 * (beta + beta_lo);
            }
        }
        for j in 0..n {
            p[i * n + j] = conditional[j];
        }
    }

    // symmetrize and normalize to a joint distribution
    let mut joint = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            joint[i * n + j] = ((p[i * n + j] + p[j * n + i]) / (2.0 * n as f64)).max(1e-12);
        }
    }
    for i in 0..n {
        joint[i * n + i] = 0.0;
    }
    joint
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
