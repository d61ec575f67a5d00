//! Metrics, cross-validation mechanics, random hyperparameter search, and
//! the EMG-impact differencing table.
//!
//! Label space is the Borg CR10 integers 1..=10. Classifier metrics take
//! integer predictions; regression metrics score raw outputs for MAE / MSE /
//! RMSE / R² and the ±1 accuracy, and round-and-clamp only for the
//! classification-style exact accuracy and F1.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::seeds::rng_for;

pub const RPE_MIN: u8 = 1;
pub const RPE_MAX: u8 = 10;
pub const N_RPE_CLASSES: usize = 10;

/// Flat named metric list; order is stable so reports serialize
/// deterministically.
pub type MetricList = Vec<(String, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationMetrics {
    pub exact_accuracy: f64,
    pub within_one_accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    /// `confusion[t][p]` counts true label t+1 predicted as p+1.
    pub confusion: Vec<Vec<usize>>,
    pub n: usize,
}

impl ClassificationMetrics {
    pub fn to_metric_list(&self) -> MetricList {
        vec![
            ("exact_accuracy".into(), self.exact_accuracy),
            ("within_one_accuracy".into(), self.within_one_accuracy),
            ("macro_precision".into(), self.macro_precision),
            ("macro_recall".into(), self.macro_recall),
            ("macro_f1".into(), self.macro_f1),
            ("weighted_precision".into(), self.weighted_precision),
            ("weighted_recall".into(), self.weighted_recall),
            ("weighted_f1".into(), self.weighted_f1),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionMetrics {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub r2: f64,
    /// On raw (unrounded) estimates.
    pub within_one_accuracy: f64,
    /// On rounded-and-clamped estimates.
    pub exact_accuracy: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub n: usize,
}

impl RegressionMetrics {
    pub fn to_metric_list(&self) -> MetricList {
        vec![
            ("mae".into(), self.mae),
            ("mse".into(), self.mse),
            ("rmse".into(), self.rmse),
            ("r2".into(), self.r2),
            ("within_one_accuracy".into(), self.within_one_accuracy),
            ("exact_accuracy".into(), self.exact_accuracy),
            ("macro_f1".into(), self.macro_f1),
            ("weighted_f1".into(), self.weighted_f1),
        ]
    }
}

fn check_labels(y: &[u8]) -> Result<()> {
    if let Some(&bad) = y.iter().find(|&&v| !(RPE_MIN..=RPE_MAX).contains(&v)) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} outside RPE range {RPE_MIN}..={RPE_MAX}"
        )));
    }
    Ok(())
}

pub fn classification_metrics(y: &[u8], y_hat: &[u8]) -> Result<ClassificationMetrics> {
    if y.is_empty() || y.len() != y_hat.len() {
        return Err(Error::InvalidArgument(
            "classification_metrics: empty or mismatched input".into(),
        ));
    }
    check_labels(y)?;
    check_labels(y_hat)?;
    let n = y.len();

    let mut confusion = vec![vec![0usize; N_RPE_CLASSES]; N_RPE_CLASSES];
    let mut exact = 0usize;
    let mut within = 0usize;
    for (&t, &p) in y.iter().zip(y_hat) {
        confusion[(t - 1) as usize][(p - 1) as usize] += 1;
        if t == p {
            exact += 1;
        }
        if (t as i32 - p as i32).abs() <= 1 {
            within += 1;
        }
    }

    // per-class precision/recall/F1, averaged over classes present in y
    let mut macro_p = 0.0;
    let mut macro_r = 0.0;
    let mut macro_f = 0.0;
    let mut weighted_p = 0.0;
    let mut weighted_r = 0.0;
    let mut weighted_f = 0.0;
    let mut present = 0usize;
    for class in 0..N_RPE_CLASSES {
        let support: usize = confusion[class].iter().sum();
        if support == 0 {
            continue;
        }
        present += 1;
        let tp = confusion[class][class] as f64;
        let predicted: usize = (0..N_RPE_CLASSES).map(|t| confusion[t][class]).sum();
        let precision = if predicted > 0 { tp / predicted as f64 } else { 0.0 };
        let recall = tp / support as f64;
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        macro_p += precision;
        macro_r += recall;
        macro_f += f1;
        let w = support as f64 / n as f64;
        weighted_p += w * precision;
        weighted_r += w * recall;
        weighted_f += w * f1;
    }
    let pf = present as f64;

    Ok(ClassificationMetrics {
        exact_accuracy: exact as f64 / n as f64,
        within_one_accuracy: within as f64 / n as f64,
        macro_precision: macro_p / pf,
        macro_recall: macro_r / pf,
        macro_f1: macro_f / pf,
        weighted_precision: weighted_p,
        weighted_recall: weighted_r,
        weighted_f1: weighted_f,
        confusion,
        n,
    })
}

/// Round to nearest integer and clamp into the RPE range.
pub fn round_clamp_rpe(v: f64) -> u8 {
    (v.round() as i64).clamp(RPE_MIN as i64, RPE_MAX as i64) as u8
}

pub fn regression_metrics(y: &[u8], y_hat: &[f64]) -> Result<RegressionMetrics> {
    if y.is_empty() || y.len() != y_hat.len() {
        return Err(Error::InvalidArgument(
            "regression_metrics: empty or mismatched input".into(),
        ));
    }
    check_labels(y)?;
    let n = y.len() as f64;

    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut within = 0usize;
    for (&t, &p) in y.iter().zip(y_hat) {
        let err = p - t as f64;
        abs_sum += err.abs();
        sq_sum += err * err;
        if err.abs() <= 1.0 {
            within += 1;
        }
    }
    let mean_y = y.iter().map(|&t| t as f64).sum::<f64>() / n;
    let ss_tot: f64 = y.iter().map(|&t| (t as f64 - mean_y) * (t as f64 - mean_y)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - sq_sum / ss_tot } else { 1.0 };

    let rounded: Vec<u8> = y_hat.iter().map(|&p| round_clamp_rpe(p)).collect();
    let cls = classification_metrics(y, &rounded)?;

    Ok(RegressionMetrics {
        mae: abs_sum / n,
        mse: sq_sum / n,
        rmse: (sq_sum / n).sqrt(),
        r2,
        within_one_accuracy: within as f64 / n,
        exact_accuracy: cls.exact_accuracy,
        macro_f1: cls.macro_f1,
        weighted_f1: cls.weighted_f1,
        n: y.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldMode {
    /// Individual reps shuffled into folds regardless of their set.
    RepShuffle,
    /// All reps of a set land in the same fold.
    BySet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold index per rep, parallel to the rep list the plan was built from.
    pub assignment: Vec<usize>,
    pub mode: FoldMode,
    pub seed: u64,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Partition reps into `k_folds` folds. `set_ids[i]` is the parent set of
/// rep i; in by-set mode whole sets are assigned to folds (largest set
/// first, each to the currently smallest fold, tie-broken by shuffled
/// order).
pub fn make_fold_plan(
    set_ids: &[String],
    k_folds: usize,
    mode: FoldMode,
    seed: u64,
) -> Result<FoldPlan> {
    let n = set_ids.len();
    if k_folds < 2 {
        return Err(Error::InvalidArgument("make_fold_plan: need ≥ 2 folds".into()));
    }
    if n < k_folds {
        return Err(Error::InvalidArgument(format!(
            "make_fold_plan: {n} reps cannot fill {k_folds} folds"
        )));
    }
    let mut rng = rng_for(seed, "fold-plan");
    let mut assignment = vec![0usize; n];
    match mode {
        FoldMode::RepShuffle => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            for (pos, &rep) in order.iter().enumerate() {
                assignment[rep] = pos % k_folds;
            }
        }
        FoldMode::BySet => {
            let mut sets: Vec<String> = set_ids.to_vec();
            sets.sort();
            sets.dedup();
            if sets.len() < k_folds {
                return Err(Error::InvalidArgument(format!(
                    "make_fold_plan: {} sets cannot fill {k_folds} folds",
                    sets.len()
                )));
            }
            sets.shuffle(&mut rng);
            let mut counts: Vec<usize> = sets
                .iter()
                .map(|s| set_ids.iter().filter(|&id| id == s).count())
                .collect();
            let mut order: Vec<usize> = (0..sets.len()).collect();
            order.sort_by(|&a, &b| counts[b].cmp(&counts[a]));
            let mut fold_load = vec![0usize; k_folds];
            let mut set_fold: std::collections::BTreeMap<&str, usize> = Default::default();
            for &si in &order {
                let fold = (0..k_folds).min_by_key(|&f| fold_load[f]).unwrap();
                fold_load[fold] += counts[si];
                set_fold.insert(sets[si].as_str(), fold);
            }
            counts.clear();
            for (a, id) in assignment.iter_mut().zip(set_ids) {
                *a = set_fold[id.as_str()];
            }
        }
    }
    Ok(FoldPlan {
        k: k_folds,
        assignment,
        mode,
        seed,
    })
}

/// A hyperparameter sampling range.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamRange {
    Uniform(f64, f64),
    LogUniform(f64, f64),
    IntUniform(i64, i64),
}

impl ParamRange {
    fn sample(&self, rng: &mut impl Rng) -> Result<f64> {
        match *self {
            ParamRange::Uniform(lo, hi) => {
                if !(lo < hi) {
                    return Err(Error::InvalidArgument("random_search: empty range".into()));
                }
                Ok(rng.gen_range(lo..hi))
            }
            ParamRange::LogUniform(lo, hi) => {
                if !(0.0 < lo && lo < hi) {
                    return Err(Error::InvalidArgument("random_search: bad log range".into()));
                }
                Ok(rng.gen_range(lo.ln()..hi.ln()).exp())
            }
            ParamRange::IntUniform(lo, hi) => {
                if lo > hi {
                    return Err(Error::InvalidArgument("random_search: empty int range".into()));
                }
                Ok(rng.gen_range(lo..=hi) as f64)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub index: usize,
    pub params: Vec<(String, f64)>,
    pub objective: f64,
}

/// Random search: sample each range uniformly (log-uniformly where declared)
/// and return the best parameter point plus the full trial log, ordered by
/// trial index.
pub fn random_search(
    ranges: &[(String, ParamRange)],
    budget: usize,
    mut objective: impl FnMut(&[(String, f64)]) -> f64,
    seed: u64,
) -> Result<(Vec<(String, f64)>, Vec<Trial>)> {
    if budget < 1 {
        return Err(Error::InvalidArgument("random_search: budget must be ≥ 1".into()));
    }
    if ranges.is_empty() {
        return Err(Error::InvalidArgument("random_search: no ranges".into()));
    }
    let mut log = Vec::with_capacity(budget);
    for index in 0..budget {
        let mut rng = rng_for(seed, &format!("search/trial{index}"));
        let params: Vec<(String, f64)> = ranges
            .iter()
            .map(|(name, range)| Ok((name.clone(), range.sample(&mut rng)?)))
            .collect::<Result<_>>()?;
        let objective = objective(&params);
        log.push(Trial {
            index,
            params,
            objective,
        });
    }
    let best = log
        .iter()
        .max_by(|a, b| a.objective.partial_cmp(&b.objective).unwrap())
        .unwrap()
        .params
        .clone();
    Ok((best, log))
}

/// One row of the EMG-impact table: distribution of (with − without)
/// differences for one metric across model pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactRow {
    pub metric: String,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub max: f64,
    pub min: f64,
}

/// Each pair is (model name, metrics with EMG, metrics without EMG); both
/// lists must carry the same metric names in the same order.
pub fn emg_impact_table(pairs: &[(String, MetricList, MetricList)]) -> Result<Vec<ImpactRow>> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("emg_impact_table: no pairs".into()));
    }
    let names: Vec<&String> = pairs[0].1.iter().map(|(n, _)| n).collect();
    for (model, with, without) in pairs {
        let ok = with.len() == names.len()
            && without.len() == names.len()
            && with
                .iter()
                .zip(without)
                .zip(&names)
                .all(|(((wn, _), (on, _)), n)| wn == *n && on == *n);
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "emg_impact_table: pair {model} has mismatched metric names"
            )));
        }
    }
    let rows = names
        .iter()
        .enumerate()
        .map(|(mi, name)| {
            let mut diffs: Vec<f64> = pairs
                .iter()
                .map(|(_, with, without)| with[mi].1 - without[mi].1)
                .collect();
            diffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = diffs.len() as f64;
            let mean = diffs.iter().sum::<f64>() / n;
            let median = if diffs.len() % 2 == 1 {
                diffs[diffs.len() / 2]
            } else {
                0.5 * (diffs[diffs.len() / 2 - 1] + diffs[diffs.len() / 2])
            };
            let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
            ImpactRow {
                metric: (*name).clone(),
                mean,
                median,
                std: var.sqrt(),
                max: *diffs.last().unwrap(),
                min: diffs[0],
            }
        })
        .collect();
    Ok(rows)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("pearson: need ≥ 2 paired values".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InvalidArgument("pearson: zero variance".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Normal-approximation 95% CI for a proportion over n trials.
pub fn proportion_ci_normal(p: f64, n: usize) -> (f64, f64) {
    let se = (p * (1.0 - p) / n as f64).sqrt();
    ((p - 1.96 * se).max(0.0), (p + 1.96 * se).min(1.0))
}

/// Percentile-bootstrap 95% CI for the mean of per-rep indicator values.
pub fn bootstrap_ci_mean(values: &[f64], iters: usize, seed: u64) -> Result<(f64, f64)> {
    if values.is_empty() || iters < 40 {
        return Err(Error::InvalidArgument(
            "bootstrap_ci_mean: need data and ≥ 40 iterations".into(),
        ));
    }
    let mut rng = rng_for(seed, "bootstrap-ci");
    let n = values.len();
    let mut means: Vec<f64> = (0..iters)
        .map(|_| {
            (0..n).map(|_| values[rng.gen_range(0..n)]).sum::<f64>() / n as f64
        })
        .collect();
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = means[((iters as f64) * 0.025) as usize];
    let hi = means[(((iters as f64) * 0.975) as usize).min(iters - 1)];
    Ok((lo, hi))
}
