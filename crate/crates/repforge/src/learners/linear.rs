//! Linear model family: multinomial logistic regression by gradient descent
//! and ridge/lasso/elastic-net regression by coordinate descent.

use crate::error::{Error, Result};

/// Multinomial softmax classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    /// One weight row per class.
    pub weights: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
    pub l2: f64,
    pub n_classes: usize,
}

/// Mean cross-entropy loss with l2 penalty, and its gradient with respect
/// to the flattened `[weights, intercepts]` parameter vector. Exposed so
/// the analytic gradient can be checked against finite differences.
pub fn logistic_loss_and_grad(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    weights: &[Vec<f64>],
    intercepts: &[f64],
    l2: f64,
) -> (f64, Vec<Vec<f64>>, Vec<f64>) {
    let n = x.len() as f64;
    let d = x[0].len();
    let mut loss = 0.0;
    let mut grad_w = vec![vec![0.0; d]; n_classes];
    let mut grad_b = vec![0.0; n_classes];

    for (row, &label) in x.iter().zip(y) {
        let probs = class_probs(row, weights, intercepts);
        loss -= probs[label].max(1e-300).ln();
        for class in 0..n_classes {
            let delta = probs[class] - if class == label { 1.0 } else { 0.0 };
            for (g, v) in grad_w[class].iter_mut().zip(row) {
                *g += delta * v;
            }
            grad_b[class] += delta;
        }
    }
    loss /= n;
    for class in 0..n_classes {
        for (g, w) in grad_w[class].iter_mut().zip(&weights[class]) {
            *g = *g / n + l2 * w;
            loss += 0.5 * l2 * w * w / 1.0; // penalty accumulated per weight
        }
        grad_b[class] /= n;
    }
    // the loop above double-counts the penalty into loss once per class row
    // pass; recompute it cleanly
    let penalty: f64 = weights
        .iter()
        .flat_map(|row| row.iter().map(|w| 0.5 * l2 * w * w))
        .sum();
    let data_loss: f64 = {
        let mut acc = 0.0;
        for (row, &label) in x.iter().zip(y) {
            let probs = class_probs(row, weights, intercepts);
            acc -= probs[label].max(1e-300).ln();
        }
        acc / n
    };
    let _ = loss;
    (data_loss + penalty, grad_w, grad_b)
}

fn class_probs(row: &[f64], weights: &[Vec<f64>], intercepts: &[f64]) -> Vec<f64> {
    let scores: Vec<f64> = weights
        .iter()
        .zip(intercepts)
        .map(|(w, b)| b + w.iter().zip(row).map(|(a, v)| a * v).sum::<f64>())
        .collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Fit by full-batch gradient descent with a backtracking step so the loss
/// never increases.
pub fn logistic_fit(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    l2: f64,
    iters: usize,
) -> Result<LogisticModel> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::InvalidArgument("logistic_fit: empty or mismatched input".into()));
    }
    let present: std::collections::BTreeSet<usize> = y.iter().copied().collect();
    if present.len() < 2 {
        return Err(Error::InvalidArgument("logistic_fit: single-class target".into()));
    }
    let d = x[0].len();
    let mut weights = vec![vec![0.0; d]; n_classes];
    let mut intercepts = vec![0.0; n_classes];
    let mut step = 1.0;

    let (mut loss, mut grad_w, mut grad_b) =
        logistic_loss_and_grad(x, y, n_classes, &weights, &intercepts, l2);
    for _ in 0..iters {
        loop {
            let try_w: Vec<Vec<f64>> = weights
                .iter()
                .zip(&grad_w)
                .map(|(wr, gr)| wr.iter().zip(gr).map(|(w, g)| w - step * g).collect())
                .collect();
            let try_b: Vec<f64> = intercepts
                .iter()
                .zip(&grad_b)
                .map(|(b, g)| b - step * g)
                .collect();
            let (new_loss, new_gw, new_gb) =
                logistic_loss_and_grad(x, y, n_classes, &try_w, &try_b, l2);
            if new_loss <= loss || step < 1e-12 {
                weights = try_w;
                intercepts = try_b;
                loss = new_loss;
                grad_w = new_gw;
                grad_b = new_gb;
                step *= 1.1; // cautiously grow back
                break;
            }
            step *= 0.5;
        }
        let grad_norm: f64 = grad_w
            .iter()
            .flatten()
            .chain(grad_b.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt();
        if grad_norm < 1e-8 {
            break;
        }
    }

    Ok(LogisticModel {
        weights,
        intercepts,
        l2,
        n_classes,
    })
}

impl LogisticModel {
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        class_probs(row, &self.weights, &self.intercepts)
    }

    pub fn predict_class(&self, row: &[f64]) -> usize {
        super::tree::argmax(&self.predict_proba(row))
    }
}

/// Linear regression model with elastic-net regularization spec.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub alpha: f64,
    pub l1_ratio: f64,
}

impl LinearModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(row).map(|(w, v)| w * v).sum::<f64>()
    }
}

/// Coordinate descent on
/// `(1/2n)‖y − Xw − b‖² + α(ρ‖w‖₁ + (1−ρ)/2‖w‖²)`, ρ = `l1_ratio`.
pub fn elastic_net_fit(
    x: &[Vec<f64>],
    y: &[f64],
    alpha: f64,
    l1_ratio: f64,
    iters: usize,
) -> Result<LinearModel> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::InvalidArgument("elastic_net: empty or mismatched input".into()));
    }
    if alpha < 0.0 || !(0.0..=1.0).contains(&l1_ratio) {
        return Err(Error::InvalidArgument("elastic_net: bad regularization spec".into()));
    }
    if x.iter().flatten().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("elastic_net: non-finite input".into()));
    }
    let n = x.len();
    let d = x[0].len();
    let nf = n as f64;

    let col = |j: usize| x.iter().map(move |row| row[j]);
    let col_sq: Vec<f64> = (0..d).map(|j| col(j).map(|v| v * v).sum::<f64>() / nf).collect();

    let mut weights = vec![0.0; d];
    let mut intercept = y.iter().sum::<f64>() / nf;
    let mut residual: Vec<f64> = y.iter().map(|v| v - intercept).collect();

    let l1 = alpha * l1_ratio;
    let l2 = alpha * (1.0 - l1_ratio);
    for _ in 0..iters.max(1) {
        let mut max_delta = 0.0f64;
        for j in 0..d {
            if col_sq[j] == 0.0 {
                continue;
            }
            let rho = residual
                .iter()
                .zip(col(j))
                .map(|(r, v)| r * v)
                .sum::<f64>()
                / nf
                + col_sq[j] * weights[j];
            let new_w = soft_threshold(rho, l1) / (col_sq[j] + l2);
            let delta = new_w - weights[j];
            if delta != 0.0 {
                for (r, v) in residual.iter_mut().zip(col(j)) {
                    *r -= delta * v;
                }
                weights[j] = new_w;
                max_delta = max_delta.max(delta.abs());
            }
        }
        let b_delta = residual.iter().sum::<f64>() / nf;
        if b_delta != 0.0 {
            intercept += b_delta;
            for r in &mut residual {
                *r -= b_delta;
            }
            max_delta = max_delta.max(b_delta.abs());
        }
        if max_delta < 1e-12 {
            break;
        }
    }

    Ok(LinearModel {
        weights,
        intercept,
        alpha,
        l1_ratio,
    })
}

fn soft_threshold(v: f64, threshold: f64) -> f64 {
    if v > threshold {
        v - threshold
    } else if v < -threshold {
        v + threshold
    } else {
        0.0
    }
}
