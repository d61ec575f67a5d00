//! Gradient-boosted trees.
//!
//! A plain gradient boosting machine: stagewise additive regression trees
//! fit to squared-error pseudo-residuals, with a softmax head (one tree per
//! class per round) for classification. The training loss is monitored per
//! round so regressions in the additive fit are detectable.

use crate::error::{Error, Result};
use crate::seeds::rng_for;

use super::tree::{tree_fit_on, DecisionTree, Target, Task, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbtParams {
    pub rounds: usize,
    pub depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            rounds: 200,
            depth: 3,
            learning_rate: 0.1,
            min_leaf: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbtModel {
    pub task: Task,
    pub params: GbtParams,
    pub n_features: usize,
    pub n_classes: usize,
    /// Regression: baseline prediction. Classification: per-class log-odds base.
    pub base: Vec<f64>,
    /// `rounds` stages; each stage holds one tree (regression) or one tree
    /// per class (classification).
    pub stages: Vec<Vec<DecisionTree>>,
    /// Training loss after each round (MSE or mean cross-entropy).
    pub train_loss: Vec<f64>,
}

pub fn gbt_fit(
    x: &[Vec<f64>],
    target: &Target<'_>,
    params: &GbtParams,
    seed: u64,
) -> Result<GbtModel> {
    if params.rounds < 1 {
        return Err(Error::InvalidArgument("gbt_fit: rounds must be ≥ 1".into()));
    }
    if params.learning_rate <= 0.0 {
        return Err(Error::InvalidArgument("gbt_fit: learning_rate must be > 0".into()));
    }
    if x.is_empty() {
        return Err(Error::InvalidArgument("gbt_fit: empty input".into()));
    }
    match target {
        Target::Values(y) => fit_regression(x, y, params, seed),
        Target::Classes { y, n_classes } => fit_classification(x, y, *n_classes, params, seed),
    }
}

fn tree_params(params: &GbtParams) -> TreeParams {
    TreeParams {
        max_depth: Some(params.depth),
        min_leaf: params.min_leaf,
        feature_subsample: None,
    }
}

fn fit_regression(x: &[Vec<f64>], y: &[f64], params: &GbtParams, seed: u64) -> Result<GbtModel> {
    let n = x.len();
    let indices: Vec<usize> = (0..n).collect();
    let base = y.iter().sum::<f64>() / n as f64;
    let mut pred = vec![base; n];
    let mut stages = Vec::with_capacity(params.rounds);
    let mut train_loss = Vec::with_capacity(params.rounds);

    for round in 0..params.rounds {
        let residuals: Vec<f64> = y.iter().zip(&pred).map(|(t, p)| t - p).collect();
        let mut rng = rng_for(seed, &format!("gbt/round{round}"));
        let tree = tree_fit_on(
            x,
            &Target::Values(&residuals),
            &indices,
            &tree_params(params),
            &mut rng,
        )?;
        for (p, row) in pred.iter_mut().zip(x) {
            *p += params.learning_rate * tree.predict_value(row);
        }
        stages.push(vec![tree]);
        let mse = y
            .iter()
            .zip(&pred)
            .map(|(t, p)| (t - p) * (t - p))
            .sum::<f64>()
            / n as f64;
        train_loss.push(mse);
    }

    Ok(GbtModel {
        task: Task::Regress,
        params: *params,
        n_features: x[0].len(),
        n_classes: 0,
        base: vec![base],
        stages,
        train_loss,
    })
}

fn fit_classification(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    params: &GbtParams,
    seed: u64,
) -> Result<GbtModel> {
    if n_classes < 2 {
        return Err(Error::InvalidArgument("gbt_fit: need ≥ 2 classes".into()));
    }
    let n = x.len();
    let indices: Vec<usize> = (0..n).collect();

    // log prior as the base score
    let mut base = vec![0.0; n_classes];
    for &c in y {
        base[c] += 1.0;
    }
    for b in &mut base {
        *b = (*b / n as f64).max(1e-12).ln();
    }

    let mut scores: Vec<Vec<f64>> = vec![base.clone(); n];
    let mut stages = Vec::with_capacity(params.rounds);
    let mut train_loss = Vec::with_capacity(params.rounds);

    for round in 0..params.rounds {
        let probs: Vec<Vec<f64>> = scores.iter().map(|s| softmax(s)).collect();
        let mut stage = Vec::with_capacity(n_classes);
        for class in 0..n_classes {
            let residuals: Vec<f64> = (0..n)
                .map(|i| (if y[i] == class { 1.0 } else { 0.0 }) - probs[i][class])
                .collect();
            let mut rng = rng_for(seed, &format!("gbt/round{round}/class{class}"));
            let tree = tree_fit_on(
                x,
                &Target::Values(&residuals),
                &indices,
                &tree_params(params),
                &mut rng,
            )?;
            for (s, row) in scores.iter_mut().zip(x) {
                s[class] += params.learning_rate * tree.predict_value(row);
            }
            stage.push(tree);
        }
        stages.push(stage);
        let nll = scores
            .iter()
            .zip(y)
            .map(|(s, &c)| -softmax(s)[c].max(1e-12).ln())
            .sum::<f64>()
            / n as f64;
        train_loss.push(nll);
    }

    Ok(GbtModel {
        task: Task::Classify,
        params: *params,
        n_features: x[0].len(),
        n_classes,
        base,
        stages,
        train_loss,
    })
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

impl GbtModel {
    pub fn predict_value(&self, row: &[f64]) -> Result<f64> {
        if self.task != Task::Regress {
            return Err(Error::InvalidArgument("gbt predict_value on classifier".into()));
        }
        let mut acc = self.base[0];
        for stage in &self.stages {
            acc += self.params.learning_rate * stage[0].predict_value(row);
        }
        Ok(acc)
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        if self.task != Task::Classify {
            return Err(Error::InvalidArgument("gbt predict_proba on regressor".into()));
        }
        let mut scores = self.base.clone();
        for stage in &self.stages {
            for (class, tree) in stage.iter().enumerate() {
                scores[class] += self.params.learning_rate * tree.predict_value(row);
            }
        }
        Ok(softmax(&scores))
    }

    pub fn predict_class(&self, row: &[f64]) -> Result<usize> {
        let probs = self.predict_proba(row)?;
        Ok(super::tree::argmax(&probs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::rng_for;
    use rand::Rng;

    #[test]
    fn boosting_fits_step_function() {
        let x: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64 / 100.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| if r[0] < 0.5 { 0.0 } else { 1.0 }).collect();
        let params = GbtParams {
            rounds: 50,
            depth: 1,
            learning_rate: 0.3,
            min_leaf: 1,
        };
        let model = gbt_fit(&x, &Target::Values(&y), &params, 1).unwrap();
        let rmse = model.train_loss.last().unwrap().sqrt();
        assert!(rmse < 0.05, "training RMSE {rmse}");
    }

    #[test]
    fn one_round_unit_rate_is_tree_on_mean_residuals() {
        let mut rng = rng_for(2, "gbt-one");
        let x: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.gen_range(-1.0..1.0)]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * r[0]).collect();
        let params = GbtParams {
            rounds: 1,
            depth: 3,
            learning_rate: 1.0,
            min_leaf: 2,
        };
        let model = gbt_fit(&x, &Target::Values(&y), &params, 7).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let residuals: Vec<f64> = y.iter().map(|v| v - mean).collect();
        let mut rng = rng_for(7, "gbt/round0");
        let oracle = tree_fit_on(
            &x,
            &Target::Values(&residuals),
            &(0..x.len()).collect::<Vec<_>>(),
            &TreeParams {
                max_depth: Some(3),
                min_leaf: 2,
                feature_subsample: None,
            },
            &mut rng,
        )
        .unwrap();
        for row in &x {
            let want = mean + oracle.predict_value(row);
            assert!((model.predict_value(row).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn training_loss_non_increasing() {
        let mut rng = rng_for(3, "gbt-mono");
        let x: Vec<Vec<f64>> = (0..150)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let y: Vec<f64> = x.iter().map(|r| r[0].sin() + 0.5 * r[1]).collect();
        let params = GbtParams {
            rounds: 60,
            depth: 2,
            learning_rate: 0.3,
            min_leaf: 2,
        };
        let model = gbt_fit(&x, &Target::Values(&y), &params, 4).unwrap();
        for w in model.train_loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "loss increased: {} -> {}", w[0], w[1]);
        }

        let yc: Vec<usize> = x.iter().map(|r| usize::from(r[0] + r[1] > 0.0)).collect();
        let model = gbt_fit(&x, &Target::Classes { y: &yc, n_classes: 2 }, &params, 4).unwrap();
        for w in model.train_loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "nll increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = rng_for(4, "gbt-proba");
        let x: Vec<Vec<f64>> = (0..90).map(|_| vec![rng.gen_range(-2.0..2.0)]).collect();
        let y: Vec<usize> = x
            .iter()
            .map(|r| {
                if r[0] < -0.5 {
                    0
                } else if r[0] < 0.5 {
                    1
                } else {
                    2
                }
            })
            .collect();
        let model = gbt_fit(
            &x,
            &Target::Classes { y: &y, n_classes: 3 },
            &GbtParams {
                rounds: 20,
                ..Default::default()
            },
            5,
        )
        .unwrap();
        for row in &x {
            let p = model.predict_proba(row).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(p.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn rejects_zero_learning_rate() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec![0.0, 1.0];
        let params = GbtParams {
            learning_rate: 0.0,
            ..Default::default()
        };
        assert!(gbt_fit(&x, &Target::Values(&y), &params, 0).is_err());
    }
}
