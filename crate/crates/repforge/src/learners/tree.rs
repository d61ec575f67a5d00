//! CART decision trees: greedy best-split by Gini impurity (classification)
//! or variance reduction (regression), with optional per-node feature
//! subsampling for forest use.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Classify,
    Regress,
}

/// Training target: dense class indices or real values.
#[derive(Debug, Clone)]
pub enum Target<'a> {
    Classes { y: &'a [usize], n_classes: usize },
    Values(&'a [f64]),
}

impl Target<'_> {
    pub fn task(&self) -> Task {
        match self {
            Target::Classes { .. } => Task::Classify,
            Target::Values(_) => Task::Regress,
        }
    }

    fn len(&self) -> usize {
        match self {
            Target::Classes { y, .. } => y.len(),
            Target::Values(y) => y.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        /// Class distribution (classification) or single mean (regression).
        payload: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features considered per split; `None` means all.
    pub feature_subsample: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_leaf: 2,
            feature_subsample: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub task: Task,
    pub n_classes: usize,
    /// Unnormalized per-feature impurity decrease accumulated during fit.
    pub impurity_decrease: Vec<f64>,
}

impl DecisionTree {
    /// Leaf payload for one row: class distribution or `[mean]`.
    pub fn payload(&self, row: &[f64]) -> &[f64] {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { payload } => return payload,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict_value(&self, row: &[f64]) -> f64 {
        self.payload(row)[0]
    }

    pub fn predict_class(&self, row: &[f64]) -> usize {
        argmax(self.payload(row))
    }

    pub fn depth(&self) -> usize {
        fn walk(node: &TreeNode) -> usize {
            match node {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(left).max(walk(right)),
            }
        }
        walk(&self.root)
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Fit one tree on the rows indexed by `indices`.
pub fn tree_fit(
    x: &[Vec<f64>],
    target: &Target<'_>,
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> Result<DecisionTree> {
    if x.is_empty() || x.len() != target.len() {
        return Err(Error::InvalidArgument("tree_fit: empty or mismatched input".into()));
    }
    if params.min_leaf < 1 {
        return Err(Error::InvalidArgument("tree_fit: min_leaf must be ≥ 1".into()));
    }
    let indices: Vec<usize> = (0..x.len()).collect();
    tree_fit_on(x, target, &indices, params, rng)
}

pub fn tree_fit_on(
    x: &[Vec<f64>],
    target: &Target<'_>,
    indices: &[usize],
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> Result<DecisionTree> {
    if indices.is_empty() {
        return Err(Error::InvalidArgument("tree_fit: no training rows".into()));
    }
    let d = x[0].len();
    let n_classes = match target {
        Target::Classes { n_classes, .. } => *n_classes,
        Target::Values(_) => 0,
    };
    let mut importance = vec![0.0; d];
    let mut scratch = indices.to_vec();
    let root = grow(
        x,
        target,
        &mut scratch,
        params,
        rng,
        0,
        &mut importance,
    );
    Ok(DecisionTree {
        root,
        task: target.task(),
        n_classes,
        impurity_decrease: importance,
    })
}

fn leaf(target: &Target<'_>, indices: &[usize]) -> TreeNode {
    match target {
        Target::Classes { y, n_classes } => {
            let mut dist = vec![0.0; *n_classes];
            for &i in indices {
                dist[y[i]] += 1.0;
            }
            let total = indices.len() as f64;
            for v in &mut dist {
                *v /= total;
            }
            TreeNode::Leaf { payload: dist }
        }
        Target::Values(y) => {
            let mean = indices.iter().map(|&i| y[i]).sum::<f64>() / indices.len() as f64;
            TreeNode::Leaf { payload: vec![mean] }
        }
    }
}

fn impurity(target: &Target<'_>, indices: &[usize]) -> f64 {
    match target {
        Target::Classes { y, n_classes } => {
            let mut counts = vec![0.0f64; *n_classes];
            for &i in indices {
                counts[y[i]] += 1.0;
            }
            let n = indices.len() as f64;
            1.0 - counts.iter().map(|c| (c / n) * (c / n)).sum::<f64>()
        }
        Target::Values(y) => {
            let n = indices.len() as f64;
            let mean = indices.iter().map(|&i| y[i]).sum::<f64>() / n;
            indices.iter().map(|&i| (y[i] - mean) * (y[i] - mean)).sum::<f64>() / n
        }
    }
}

fn grow(
    x: &[Vec<f64>],
    target: &Target<'_>,
    indices: &mut [usize],
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
    depth: usize,
    importance: &mut [f64],
) -> TreeNode {
    let n = indices.len();
    let node_impurity = impurity(target, indices);
    let depth_exhausted = params.max_depth.is_some_and(|d| depth >= d);
    if n < 2 * params.min_leaf || node_impurity <= 1e-15 || depth_exhausted {
        return leaf(target, indices);
    }

    let d = x[0].len();
    let mut features: Vec<usize> = (0..d).collect();
    if let Some(m) = params.feature_subsample {
        features.shuffle(rng);
        features.truncate(m.clamp(1, d));
        features.sort_unstable(); // deterministic split-search order
    }

    let mut best: Option<(f64, usize, f64, usize)> = None; // (decrease, feature, threshold, split_pos)
    let mut order = indices.to_vec();
    for &feature in &features {
        order.sort_by(|&a, &b| x[a][feature].partial_cmp(&x[b][feature]).unwrap());
        if let Some((decrease, threshold, pos)) =
            best_split_on_feature(x, target, &order, feature, params.min_leaf, node_impurity)
        {
            if best.is_none_or(|(bd, _, _, _)| decrease > bd) {
                best = Some((decrease, feature, threshold, pos));
            }
        }
    }

    let Some((decrease, feature, threshold, _)) = best else {
        return leaf(target, indices);
    };

    importance[feature] += decrease.max(0.0) * n as f64;

    // partition in place, preserving relative order for determinism
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
        indices.iter().partition(|&&i| x[i][feature] <= threshold);
    let mut left_idx = left_idx;
    let mut right_idx = right_idx;
    let left = grow(x, target, &mut left_idx, params, rng, depth + 1, importance);
    let right = grow(x, target, &mut right_idx, params, rng, depth + 1, importance);
    TreeNode::Split {
        feature,
        threshold,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Best threshold on one feature given rows pre-sorted by that feature.
/// Returns (impurity decrease per row, threshold, split position).
fn best_split_on_feature(
    x: &[Vec<f64>],
    target: &Target<'_>,
    order: &[usize],
    feature: usize,
    min_leaf: usize,
    node_impurity: f64,
) -> Option<(f64, f64, usize)> {
    let n = order.len();
    let mut best: Option<(f64, f64, usize)> = None;

    match target {
        Target::Classes { y, n_classes } => {
            let mut left_counts = vec![0.0f64; *n_classes];
            let mut right_counts = vec![0.0f64; *n_classes];
            for &i in order {
                right_counts[y[i]] += 1.0;
            }
            let mut left_sq = 0.0;
            let mut right_sq: f64 = right_counts.iter().map(|c| c * c).sum();
            for pos in 1..n {
                let moved = y[order[pos - 1]];
                left_sq += 2.0 * left_counts[moved] + 1.0;
                right_sq += -2.0 * right_counts[moved] + 1.0;
                left_counts[moved] += 1.0;
                right_counts[moved] -= 1.0;
                if pos < min_leaf || n - pos < min_leaf {
                    continue;
                }
                let a = x[order[pos - 1]][feature];
                let b = x[order[pos]][feature];
                if a == b {
                    continue;
                }
                let nl = pos as f64;
                let nr = (n - pos) as f64;
                let gini_l = 1.0 - left_sq / (nl * nl);
                let gini_r = 1.0 - right_sq / (nr * nr);
                let weighted = (nl * gini_l + nr * gini_r) / n as f64;
                let decrease = node_impurity - weighted;
                if best.is_none_or(|(bd, _, _)| decrease > bd) {
                    best = Some((decrease, 0.5 * (a + b), pos));
                }
            }
        }
        Target::Values(y) => {
            let total: f64 = order.iter().map(|&i| y[i]).sum();
            let total_sq: f64 = order.iter().map(|&i| y[i] * y[i]).sum();
            let mut left_sum = 0.0;
            let mut left_sq = 0.0;
            for pos in 1..n {
                let v = y[order[pos - 1]];
                left_sum += v;
                left_sq += v * v;
                if pos < min_leaf || n - pos < min_leaf {
                    continue;
                }
                let a = x[order[pos - 1]][feature];
                let b = x[order[pos]][feature];
                if a == b {
                    continue;
                }
                let nl = pos as f64;
                let nr = (n - pos) as f64;
                let var_l = left_sq / nl - (left_sum / nl) * (left_sum / nl);
                let right_sum = total - left_sum;
                let var_r = (total_sq - left_sq) / nr - (right_sum / nr) * (right_sum / nr);
                let weighted = (nl * var_l + nr * var_r) / n as f64;
                let decrease = node_impurity - weighted;
                if best.is_none_or(|(bd, _, _)| decrease > bd) {
                    best = Some((decrease, 0.5 * (a + b), pos));
                }
            }
        }
    }
    // zero-decrease splits are kept: ties like XOR only resolve a level
    // deeper. Slightly negative values are numerical noise.
    best.filter(|(d, _, _)| *d > -1e-9)
}
