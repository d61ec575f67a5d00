//! Random forests over CART trees: per-tree bootstrap resampling, √d or d/3
//! feature subsampling, majority vote / mean aggregation, and mean-decrease-
//! in-impurity feature importance.

use rand::Rng;

use crate::error::{Error, Result};
use crate::seeds::rng_for;

use super::tree::{argmax, tree_fit_on, DecisionTree, Target, Task, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features per split; `None` picks √d (classification) or d/3 (regression).
    pub feature_subsample: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 300,
            max_depth: None,
            min_leaf: 2,
            feature_subsample: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub task: Task,
    pub n_features: usize,
    pub n_classes: usize,
    pub params: ForestParams,
    pub seed: u64,
}

/// Fit a forest. Each tree gets its own bootstrap sample and a seed derived
/// from `seed` and the tree index, so fits are reproducible and independent
/// of fitting order.
pub fn forest_fit(
    x: &[Vec<f64>],
    target: &Target<'_>,
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel> {
    if params.n_trees == 0 {
        return Err(Error::InvalidArgument("forest_fit: need ≥ 1 tree".into()));
    }
    if x.is_empty() {
        return Err(Error::InvalidArgument("forest_fit: empty input".into()));
    }
    let n = x.len();
    let d = x[0].len();
    let default_subsample = match target.task() {
        Task::Classify => (d as f64).sqrt().round() as usize,
        Task::Regress => d / 3,
    };
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        feature_subsample: Some(params.feature_subsample.unwrap_or(default_subsample).clamp(1, d)),
    };

    // each tree derives its rng from its own index, so fits are identical
    // whether trees are built sequentially or across worker threads
    let fit_one = |t: usize| -> Result<DecisionTree> {
        let mut rng = rng_for(seed, &format!("forest/tree{t}"));
        let bootstrap: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        tree_fit_on(x, target, &bootstrap, &tree_params, &mut rng)
    };
    let workers = crate::runtime::worker_threads().min(params.n_trees);
    let trees: Vec<DecisionTree> = if workers <= 1 {
        (0..params.n_trees).map(fit_one).collect::<Result<_>>()?
    } else {
        let chunk = params.n_trees.div_ceil(workers);
        let per_worker: Vec<Vec<DecisionTree>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let fit_one = &fit_one;
                    let lo = w * chunk;
                    let hi = ((w + 1) * chunk).min(params.n_trees);
                    scope.spawn(move || (lo..hi).map(fit_one).collect::<Result<Vec<_>>>())
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("forest worker panicked"))
                .collect::<Result<_>>()
        })?;
        per_worker.into_iter().flatten().collect()
    };

    let n_classes = match target {
        Target::Classes { n_classes, .. } => *n_classes,
        Target::Values(_) => 0,
    };
    Ok(ForestModel {
        trees,
        task: target.task(),
        n_features: d,
        n_classes,
        params: *params,
        seed,
    })
}

impl ForestModel {
    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features {
            return Err(Error::InvalidArgument(format!(
                "forest predict: row has {} features, model expects {}",
                row.len(),
                self.n_features
            )));
        }
        Ok(())
    }

    /// Majority vote over trees (classification only).
    pub fn predict_class(&self, row: &[f64]) -> Result<usize> {
        self.check_row(row)?;
        let mut votes = vec![0usize; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict_class(row)] += 1;
        }
        let as_f: Vec<f64> = votes.iter().map(|&v| v as f64).collect();
        Ok(argmax(&as_f))
    }

    /// Mean of per-tree class distributions.
    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check_row(row)?;
        let mut acc = vec![0.0; self.n_classes];
        for tree in &self.trees {
            for (a, p) in acc.iter_mut().zip(tree.payload(row)) {
                *a += p;
            }
        }
        for a in &mut acc {
            *a /= self.trees.len() as f64;
        }
        Ok(acc)
    }

    /// Mean over trees (regression only).
    pub fn predict_value(&self, row: &[f64]) -> Result<f64> {
        self.check_row(row)?;
        Ok(self.trees.iter().map(|t| t.predict_value(row)).sum::<f64>()
            / self.trees.len() as f64)
    }
}

/// Mean decrease in impurity per feature, accumulated across all trees and
/// normalized to sum to 1.
pub fn feature_importance(model: &ForestModel) -> Result<Vec<f64>> {
    if model.trees.is_empty() {
        return Err(Error::InvalidArgument("feature_importance: unfitted model".into()));
    }
    let mut scores = vec![0.0; model.n_features];
    for tree in &model.trees {
        for (s, d) in scores.iter_mut().zip(&tree.impurity_decrease) {
            *s += d;
        }
    }
    let total: f64 = scores.iter().sum();
    if total > 0.0 {
        for s in &mut scores {
            *s /= total;
        }
    }
    Ok(scores)
}
