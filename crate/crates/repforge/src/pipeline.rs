//! Two-stage experiment orchestration: EMG label construction and EMG-label
//! estimators are fit on each training fold only, IMU features are augmented
//! with the estimated labels, and RPE models are trained and scored per
//! fold.
//!
//! Every fold keeps an audit record of which reps' EMG values were read,
//! which reps the standardization statistics came from, and how many SMOTE
//! rows were added; `assert_leakage_free` turns those records into hard
//! failures. Ground-truth mode deliberately reads evaluation-fold EMG (it
//! reproduces the oracle comparison) and is exempted explicitly.

use std::cell::RefCell;
use std::collections::BTreeSet;

use crate::dataio::{PalmAxisConfig, RepRow};
use crate::dsp::AlignedSet;
use crate::embedding::{
    kmeans, select_k, smote, PcaModel, StandardizationStats, TsneParams,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    bootstrap_ci_mean, classification_metrics, proportion_ci_normal, regression_metrics,
    FoldPlan, MetricList,
};
use crate::features::{
    extract_emg_features, extract_imu_features, EMG_FEATURE_COUNT, IMU_FEATURE_COUNT,
};
use crate::learners::{
    elastic_net_fit, feature_importance, forest_fit, gbt_fit, logistic_fit, ForestModel,
    ForestParams, GbtModel, GbtParams, LabelMap, LinearModel, LogisticModel, Target, Task,
};
use crate::seeds::derive_seed;
use crate::segmentation::segment_set;

/// One segmented, featured repetition; the unit record of every experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RepRecord {
    pub rep_id: String,
    pub set_id: String,
    pub rpe: u8,
    pub imu: Vec<f64>,
    pub emg: Vec<f64>,
}

/// Segment one aligned set and extract both feature families per rep.
pub fn extract_rep_records(
    aligned: &AlignedSet,
    palm: &PalmAxisConfig,
    min_gap_s: f64,
) -> Result<Vec<RepRecord>> {
    let reps = segment_set(aligned, palm, min_gap_s)?;
    reps.iter()
        .map(|rep| {
            let imu = extract_imu_features(aligned, rep, palm)?;
            let emg = extract_emg_features(aligned, rep)?;
            Ok(RepRecord {
                rep_id: rep.rep_id.clone(),
                set_id: aligned.set_id.to_string(),
                rpe: rep.rpe,
                imu: imu.values,
                emg: emg.values,
            })
        })
        .collect()
}

impl RepRecord {
    pub fn to_row(&self, with_emg: bool) -> RepRow {
        let mut values = self.imu.clone();
        if with_emg {
            values.extend_from_slice(&self.emg);
        }
        RepRow {
            rep_id: self.rep_id.clone(),
            set_id: self.set_id.clone(),
            rpe: self.rpe,
            values,
        }
    }

    pub fn from_row(row: &RepRow) -> Result<RepRecord> {
        if row.values.len() != IMU_FEATURE_COUNT + EMG_FEATURE_COUNT {
            return Err(Error::Data(format!(
                "{}: expected {} feature values, got {}",
                row.rep_id,
                IMU_FEATURE_COUNT + EMG_FEATURE_COUNT,
                row.values.len()
            )));
        }
        Ok(RepRecord {
            rep_id: row.rep_id.clone(),
            set_id: row.set_id.clone(),
            rpe: row.rpe,
            imu: row.values[..IMU_FEATURE_COUNT].to_vec(),
            emg: row.values[IMU_FEATURE_COUNT..].to_vec(),
        })
    }
}

/// Continuous + categorical EMG-derived labels for one rep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmgLabels {
    pub pc1: f64,
    pub pc2: f64,
    pub cluster: usize,
}

/// The fitted label constructors, retained for audit and for ground-truth
/// mode's out-of-sample assignment.
#[derive(Debug, Clone)]
pub struct EmgLabelModel {
    pub pca: PcaModel,
    pub k: usize,
    /// Standardized training EMG rows; nearest-neighbor support for
    /// assigning clusters to reps outside the training fold.
    pub train_standardized: Vec<Vec<f64>>,
    pub train_clusters: Vec<usize>,
}

impl EmgLabelModel {
    /// PC1/PC2 through the fitted PCA; cluster from the nearest training
    /// rep in standardized EMG space (t-SNE has no out-of-sample map).
    pub fn assign(&self, emg_row: &[f64]) -> EmgLabels {
        let scores = self.pca.transform_row(emg_row);
        let std_row = self.pca.stats.apply_row(emg_row);
        let nearest = self
            .train_standardized
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                crate::embedding::squared_distance(a, &std_row)
                    .partial_cmp(&crate::embedding::squared_distance(b, &std_row))
                    .unwrap()
            })
            .map(|(i, _)| i)
            .unwrap();
        EmgLabels {
            pc1: scores[0],
            pc2: scores[1],
            cluster: self.train_clusters[nearest],
        }
    }
}

/// Clustering knobs for the EMG label constructor.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelParams {
    pub tsne: TsneParams,
    pub k_range: (usize, usize),
    pub kmeans_restarts: usize,
}

impl Default for LabelParams {
    fn default() -> Self {
        LabelParams {
            tsne: TsneParams::default(),
            k_range: (2, 8),
            kmeans_restarts: 8,
        }
    }
}

/// PC1/PC2 from PCA of standardized EMG features; categorical label from
/// k-means (k via silhouette) on the t-SNE embedding.
pub fn build_emg_labels(
    train_emg: &[Vec<f64>],
    params: &LabelParams,
    seed: u64,
) -> Result<(Vec<EmgLabels>, EmgLabelModel)> {
    if train_emg.len() < 4 {
        return Err(Error::Data("build_emg_labels: too few training reps".into()));
    }
    let stats = StandardizationStats::fit(train_emg)?;
    if stats.constant.iter().all(|&c| c) {
        return Err(Error::Data("build_emg_labels: all EMG features constant".into()));
    }
    let standardized = stats.apply(train_emg);
    let pca = PcaModel::fit_standardizing(train_emg, 2)?;
    let scores = pca.transform(train_emg);

    let embedded_pts = crate::embedding::tsne_embed(&standardized, &params.tsne, derive_seed(seed, "tsne"))?;
    let embedded: Vec<Vec<f64>> = embedded_pts.iter().map(|p| p.to_vec()).collect();
    let k = select_k(
        &embedded,
        params.k_range.0..=params.k_range.1,
        derive_seed(seed, "select-k"),
    )?;
    let clustering = kmeans(&embedded, k, params.kmeans_restarts, derive_seed(seed, "kmeans"))?;

    let labels: Vec<EmgLabels> = scores
        .iter()
        .zip(&clustering.assignments)
        .map(|(s, &c)| EmgLabels {
            pc1: s[0],
            pc2: s[1],
            cluster: c,
        })
        .collect();
    let model = EmgLabelModel {
        pca,
        k,
        train_standardized: standardized,
        train_clusters: clustering.assignments.clone(),
    };
    Ok((labels, model))
}

/// IMU-driven estimators of the EMG labels: regressors for PC1/PC2, a
/// classifier for the cluster. SMOTE balances the cluster classifier's
/// training data only.
#[derive(Debug, Clone)]
pub struct EmgEstimators {
    pub pc1: ForestModel,
    pub pc2: ForestModel,
    pub cluster: ForestModel,
    pub k: usize,
    /// Synthetic rows SMOTE added to the cluster classifier's training set.
    pub smote_added: usize,
}

pub fn fit_emg_estimators(
    train_imu: &[Vec<f64>],
    labels: &[EmgLabels],
    k: usize,
    forest: &ForestParams,
    smote_k: usize,
    seed: u64,
) -> Result<EmgEstimators> {
    if train_imu.len() != labels.len() || train_imu.is_empty() {
        return Err(Error::InvalidArgument(
            "fit_emg_estimators: empty or mismatched input".into(),
        ));
    }
    let pc1_targets: Vec<f64> = labels.iter().map(|l| l.pc1).collect();
    let pc2_targets: Vec<f64> = labels.iter().map(|l| l.pc2).collect();
    let pc1 = forest_fit(
        train_imu,
        &Target::Values(&pc1_targets),
        forest,
        derive_seed(seed, "est/pc1"),
    )?;
    let pc2 = forest_fit(
        train_imu,
        &Target::Values(&pc2_targets),
        forest,
        derive_seed(seed, "est/pc2"),
    )?;

    let clusters: Vec<usize> = labels.iter().map(|l| l.cluster).collect();
    let distinct: BTreeSet<usize> = clusters.iter().copied().collect();
    // SMOTE interpolates between same-class neighbors, so it needs at least
    // two classes and no singleton class; otherwise train unbalanced
    let min_class_size = distinct
        .iter()
        .map(|&c| clusters.iter().filter(|&&l| l == c).count())
        .min()
        .unwrap_or(0);
    let (balanced_x, balanced_y) = if distinct.len() > 1 && min_class_size >= 2 {
        smote(train_imu, &clusters, smote_k, derive_seed(seed, "est/smote"))?
    } else {
        (train_imu.to_vec(), clusters.clone())
    };
    let smote_added = balanced_x.len() - train_imu.len();
    let cluster = forest_fit(
        &balanced_x,
        &Target::Classes {
            y: &balanced_y,
            n_classes: k,
        },
        forest,
        derive_seed(seed, "est/cluster"),
    )?;
    Ok(EmgEstimators {
        pc1,
        pc2,
        cluster,
        k,
        smote_added,
    })
}

/// Append est_pc1, est_pc2, and the one-hot estimated cluster. Reads only
/// IMU-derived inputs.
pub fn augment(imu_row: &[f64], est: &EmgEstimators) -> Result<Vec<f64>> {
    let mut out = imu_row.to_vec();
    out.push(est.pc1.predict_value(imu_row)?);
    out.push(est.pc2.predict_value(imu_row)?);
    let cluster = est.cluster.predict_class(imu_row)?;
    for c in 0..est.k {
        out.push(f64::from(u8::from(c == cluster)));
    }
    Ok(out)
}

/// Append the true labels instead of estimates (ground-truth mode).
fn augment_with_labels(imu_row: &[f64], labels: &EmgLabels, k: usize) -> Vec<f64> {
    let mut out = imu_row.to_vec();
    out.push(labels.pc1);
    out.push(labels.pc2);
    for c in 0..k {
        out.push(f64::from(u8::from(c == labels.cluster)));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmgMode {
    Off,
    Estimated,
    GroundTruth,
}

impl EmgMode {
    pub fn parse(text: &str) -> Result<EmgMode> {
        match text {
            "off" => Ok(EmgMode::Off),
            "estimated" => Ok(EmgMode::Estimated),
            "ground-truth" | "ground_truth" => Ok(EmgMode::GroundTruth),
            other => Err(Error::InvalidArgument(format!(
                "emg mode: expected off|estimated|ground-truth, got {other:?}"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            EmgMode::Off => "off",
            EmgMode::Estimated => "estimated",
            EmgMode::GroundTruth => "ground_truth",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Forest,
    Gbt,
    Logistic,
    ElasticNet,
}

/// One RPE model configuration in the experiment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub kind: ModelKind,
    pub task: Task,
    pub forest: ForestParams,
    pub gbt: GbtParams,
    pub l2: f64,
    pub iters: usize,
    pub alpha: f64,
    pub l1_ratio: f64,
}

impl ModelSpec {
    fn base(name: &str, kind: ModelKind, task: Task) -> ModelSpec {
        ModelSpec {
            name: name.to_string(),
            kind,
            task,
            forest: ForestParams {
                n_trees: 120,
                ..Default::default()
            },
            gbt: GbtParams {
                rounds: 80,
                ..Default::default()
            },
            l2: 1e-3,
            iters: 200,
            alpha: 1e-3,
            l1_ratio: 0.5,
        }
    }

    pub fn forest_classifier(name: &str) -> ModelSpec {
        Self::base(name, ModelKind::Forest, Task::Classify)
    }

    pub fn forest_regressor(name: &str) -> ModelSpec {
        Self::base(name, ModelKind::Forest, Task::Regress)
    }

    pub fn gbt_classifier(name: &str) -> ModelSpec {
        Self::base(name, ModelKind::Gbt, Task::Classify)
    }

    pub fn gbt_regressor(name: &str) -> ModelSpec {
        Self::base(name, ModelKind::Gbt, Task::Regress)
    }

    pub fn logistic(name: &str) -> ModelSpec {
        Self::base(name, ModelKind::Logistic, Task::Classify)
    }

    pub fn elastic_net(name: &str) -> ModelSpec {
        Self::base(name, ModelKind::ElasticNet, Task::Regress)
    }

    pub fn validate(&self) -> Result<()> {
        match (self.kind, self.task) {
            (ModelKind::Logistic, Task::Regress) => Err(Error::InvalidArgument(
                "logistic regression is a classifier".into(),
            )),
            (ModelKind::ElasticNet, Task::Classify) => Err(Error::InvalidArgument(
                "elastic net is a regressor".into(),
            )),
            _ => Ok(()),
        }
    }
}

enum Fitted {
    ForestClassify(ForestModel, LabelMap),
    ForestRegress(ForestModel),
    GbtClassify(GbtModel, LabelMap),
    GbtRegress(GbtModel),
    Logistic(LogisticModel, LabelMap, StandardizationStats),
    ElasticNet(LinearModel, StandardizationStats),
}

fn fit_model(spec: &ModelSpec, x: &[Vec<f64>], y: &[u8], seed: u64) -> Result<Fitted> {
    match (spec.kind, spec.task) {
        (ModelKind::Forest, Task::Classify) => {
            let map = LabelMap::fit(y);
            let dense = map.encode_all(y).unwrap();
            let model = forest_fit(
                x,
                &Target::Classes {
                    y: &dense,
                    n_classes: map.n_classes(),
                },
                &spec.forest,
                seed,
            )?;
            Ok(Fitted::ForestClassify(model, map))
        }
        (ModelKind::Forest, Task::Regress) => {
            let values: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
            let model = forest_fit(x, &Target::Values(&values), &spec.forest, seed)?;
            Ok(Fitted::ForestRegress(model))
        }
        (ModelKind::Gbt, Task::Classify) => {
            let map = LabelMap::fit(y);
            let dense = map.encode_all(y).unwrap();
            let model = gbt_fit(
                x,
                &Target::Classes {
                    y: &dense,
                    n_classes: map.n_classes(),
                },
                &spec.gbt,
                seed,
            )?;
            Ok(Fitted::GbtClassify(model, map))
        }
        (ModelKind::Gbt, Task::Regress) => {
            let values: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
            let model = gbt_fit(x, &Target::Values(&values), &spec.gbt, seed)?;
            Ok(Fitted::GbtRegress(model))
        }
        (ModelKind::Logistic, _) => {
            let stats = StandardizationStats::fit(x)?;
            let xs = stats.apply(x);
            let map = LabelMap::fit(y);
            let dense = map.encode_all(y).unwrap();
            let model = logistic_fit(&xs, &dense, map.n_classes(), spec.l2, spec.iters)?;
            Ok(Fitted::Logistic(model, map, stats))
        }
        (ModelKind::ElasticNet, _) => {
            let stats = StandardizationStats::fit(x)?;
            let xs = stats.apply(x);
            let values: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
            let model = elastic_net_fit(&xs, &values, spec.alpha, spec.l1_ratio, 500)?;
            Ok(Fitted::ElasticNet(model, stats))
        }
    }
}

impl Fitted {
    fn predict_class(&self, row: &[f64]) -> Result<u8> {
        match self {
            Fitted::ForestClassify(m, map) => Ok(map.decode(m.predict_class(row)?)),
            Fitted::GbtClassify(m, map) => Ok(map.decode(m.predict_class(row)?)),
            Fitted::Logistic(m, map, stats) => {
                Ok(map.decode(m.predict_class(&stats.apply_row(row))))
            }
            _ => Err(Error::InvalidArgument("predict_class on a regressor".into())),
        }
    }

    fn predict_value(&self, row: &[f64]) -> Result<f64> {
        match self {
            Fitted::ForestRegress(m) => m.predict_value(row),
            Fitted::GbtRegress(m) => m.predict_value(row),
            Fitted::ElasticNet(m, stats) => Ok(m.predict(&stats.apply_row(row))),
            _ => Err(Error::InvalidArgument("predict_value on a classifier".into())),
        }
    }

    fn importance(&self) -> Option<Vec<f64>> {
        match self {
            Fitted::ForestClassify(m, _) | Fitted::ForestRegress(m) => {
                feature_importance(m).ok()
            }
            _ => None,
        }
    }
}

/// What one fold actually touched; the raw material for leakage checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAudit {
    pub fold: usize,
    pub train_indices: BTreeSet<usize>,
    pub test_indices: BTreeSet<usize>,
    /// Rep indices whose EMG feature vector was read during this fold.
    pub emg_indices_read: BTreeSet<usize>,
    /// Rep indices the standardization statistics were fit on.
    pub standardized_on: BTreeSet<usize>,
    /// SMOTE rows appended to the cluster classifier's training set.
    pub smote_rows_added: usize,
    /// Rows the RPE model was fit on; synthetic rows never count here
    /// because SMOTE output stays inside the estimator stage.
    pub rpe_train_rows: usize,
}

/// Fails if any evaluation-fold EMG value was read, or standardization saw
/// test reps. Ground-truth mode reads test EMG by design and is skipped.
pub fn assert_leakage_free(audits: &[FoldAudit], mode: EmgMode) -> Result<()> {
    if mode == EmgMode::GroundTruth {
        return Ok(());
    }
    for audit in audits {
        if let Some(&leak) = audit
            .emg_indices_read
            .intersection(&audit.test_indices)
            .next()
        {
            return Err(Error::Leakage(format!(
                "fold {}: EMG of evaluation rep {leak} was read",
                audit.fold
            )));
        }
        if let Some(&leak) = audit
            .standardized_on
            .intersection(&audit.test_indices)
            .next()
        {
            return Err(Error::Leakage(format!(
                "fold {}: standardization stats saw evaluation rep {leak}",
                audit.fold
            )));
        }
        if audit.rpe_train_rows != audit.train_indices.len() {
            return Err(Error::Leakage(format!(
                "fold {}: RPE model trained on {} rows, expected {}",
                audit.fold,
                audit.rpe_train_rows,
                audit.train_indices.len()
            )));
        }
    }
    Ok(())
}

/// Aggregated result of one (model, emg_mode) cell of the grid.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub model: String,
    pub emg_mode: EmgMode,
    pub task: Task,
    pub per_fold: Vec<MetricList>,
    /// Mean of per-fold metrics.
    pub aggregate: MetricList,
    /// Metrics over pooled predictions from all folds.
    pub pooled: MetricList,
    pub pooled_confusion: Option<Vec<Vec<usize>>>,
    pub within_one_ci_normal: (f64, f64),
    pub within_one_ci_bootstrap: (f64, f64),
    /// Importance over 55 IMU features plus est_pc1 / est_pc2 /
    /// est_cluster (cluster one-hot shares summed), averaged over folds.
    /// Present for forest models.
    pub importance: Option<Vec<(String, f64)>>,
    pub audits: Vec<FoldAudit>,
    pub seed: u64,
}

/// Per-run orchestration knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineParams {
    pub labels: LabelParams,
    pub estimator_forest: ForestParams,
    pub smote_k: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            labels: LabelParams::default(),
            estimator_forest: ForestParams {
                n_trees: 80,
                ..Default::default()
            },
            smote_k: 5,
        }
    }
}

fn mean_metrics(folds: &[MetricList]) -> MetricList {
    let mut out: MetricList = folds[0]
        .iter()
        .map(|(name, _)| (name.clone(), 0.0))
        .collect();
    for fold in folds {
        for (acc, (_, v)) in out.iter_mut().zip(fold) {
            acc.1 += v / folds.len() as f64;
        }
    }
    out
}

fn importance_names() -> Vec<String> {
    let mut names = crate::features::imu_feature_names();
    names.push("est_pc1".into());
    names.push("est_pc2".into());
    names.push("est_cluster".into());
    names
}

/// Fold importance vectors have 55 (off) or 55 + 2 + k entries; collapse the
/// one-hot cluster block so folds with different k still aggregate.
fn collapse_importance(raw: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; IMU_FEATURE_COUNT + 3];
    for (i, &v) in raw.iter().enumerate() {
        let slot = match i {
            _ if i < IMU_FEATURE_COUNT => i,
            _ if i == IMU_FEATURE_COUNT => IMU_FEATURE_COUNT,
            _ if i == IMU_FEATURE_COUNT + 1 => IMU_FEATURE_COUNT + 1,
            _ => IMU_FEATURE_COUNT + 2,
        };
        out[slot] += v;
    }
    out
}

/// Column names of the feature matrix the RPE model sees: the IMU schema,
/// optionally extended with the estimated-label columns for cluster count k.
pub fn augmented_feature_names(k: Option<usize>) -> Vec<String> {
    let mut names = crate::features::imu_feature_names();
    if let Some(k) = k {
        names.push("est_pc1".into());
        names.push("est_pc2".into());
        for c in 0..k {
            names.push(format!("est_cluster_{c}"));
        }
    }
    names
}

/// Fit one RPE model on the full record set (no held-out fold) and package
/// it for serialization. Linear models fold their standardization into the
/// stored weights so the saved model applies to raw feature rows.
pub fn train_full_model(
    records: &[RepRecord],
    spec: &ModelSpec,
    emg_mode: EmgMode,
    params: &PipelineParams,
    seed: u64,
) -> Result<crate::learners::ModelFile> {
    spec.validate()?;
    if records.is_empty() {
        return Err(Error::InvalidArgument("train_full_model: no records".into()));
    }
    let (x, feature_names): (Vec<Vec<f64>>, Vec<String>) = match emg_mode {
        EmgMode::Off => (
            records.iter().map(|r| r.imu.clone()).collect(),
            augmented_feature_names(None),
        ),
        EmgMode::Estimated => {
            let emg: Vec<Vec<f64>> = records.iter().map(|r| r.emg.clone()).collect();
            let (labels, model) =
                build_emg_labels(&emg, &params.labels, derive_seed(seed, "labels"))?;
            let imu: Vec<Vec<f64>> = records.iter().map(|r| r.imu.clone()).collect();
            let est = fit_emg_estimators(
                &imu,
                &labels,
                model.k,
                &params.estimator_forest,
                params.smote_k,
                derive_seed(seed, "estimators"),
            )?;
            (
                imu.iter().map(|row| augment(row, &est)).collect::<Result<_>>()?,
                augmented_feature_names(Some(model.k)),
            )
        }
        EmgMode::GroundTruth => {
            let emg: Vec<Vec<f64>> = records.iter().map(|r| r.emg.clone()).collect();
            let (labels, model) =
                build_emg_labels(&emg, &params.labels, derive_seed(seed, "labels"))?;
            (
                records
                    .iter()
                    .zip(&labels)
                    .map(|(r, l)| augment_with_labels(&r.imu, l, model.k))
                    .collect(),
                augmented_feature_names(Some(model.k)),
            )
        }
    };
    let y: Vec<u8> = records.iter().map(|r| r.rpe).collect();
    let fitted = fit_model(spec, &x, &y, derive_seed(seed, "train-full"))?;

    use crate::learners::SavedModel;
    let fold_stats = |weights: &[f64], intercept: f64, stats: &StandardizationStats| {
        let mut w = vec![0.0; weights.len()];
        let mut b = intercept;
        for (j, &wj) in weights.iter().enumerate() {
            if !stats.constant[j] {
                w[j] = wj / stats.std[j];
                b -= wj * stats.mean[j] / stats.std[j];
            }
        }
        (w, b)
    };
    let (model, classes) = match fitted {
        Fitted::ForestClassify(m, map) => (SavedModel::Forest(m), map.classes),
        Fitted::ForestRegress(m) => (SavedModel::Forest(m), Vec::new()),
        Fitted::GbtClassify(m, map) => (SavedModel::Gbt(m), map.classes),
        Fitted::GbtRegress(m) => (SavedModel::Gbt(m), Vec::new()),
        Fitted::Logistic(mut m, map, stats) => {
            for c in 0..m.n_classes {
                let (w, b) = fold_stats(&m.weights[c], m.intercepts[c], &stats);
                m.weights[c] = w;
                m.intercepts[c] = b;
            }
            (SavedModel::Logistic(m), map.classes)
        }
        Fitted::ElasticNet(mut m, stats) => {
            let (w, b) = fold_stats(&m.weights, m.intercept, &stats);
            m.weights = w;
            m.intercept = b;
            (SavedModel::Linear(m), Vec::new())
        }
    };
    Ok(crate::learners::ModelFile {
        feature_names,
        classes,
        provenance: Vec::new(),
        model,
    })
}

/// Run one model × emg_mode cell: per fold, build EMG labels and estimators
/// on the training split only, augment both splits, fit the RPE model, and
/// score the evaluation split.
pub fn run_rpe_experiment(
    records: &[RepRecord],
    spec: &ModelSpec,
    emg_mode: EmgMode,
    plan: &FoldPlan,
    params: &PipelineParams,
    seed: u64,
) -> Result<ExperimentReport> {
    spec.validate()?;
    if records.len() != plan.assignment.len() {
        return Err(Error::InvalidArgument(
            "run_rpe_experiment: fold plan does not match record count".into(),
        ));
    }

    let emg_reads: RefCell<BTreeSet<usize>> = RefCell::new(BTreeSet::new());
    let emg_of = |i: usize| -> Vec<f64> {
        emg_reads.borrow_mut().insert(i);
        records[i].emg.clone()
    };

    let mut per_fold: Vec<MetricList> = Vec::with_capacity(plan.k);
    let mut audits = Vec::with_capacity(plan.k);
    let mut importance_acc: Option<Vec<f64>> = None;
    let mut pooled_y: Vec<u8> = Vec::new();
    let mut pooled_class: Vec<u8> = Vec::new();
    let mut pooled_value: Vec<f64> = Vec::new();
    let mut pooled_hits: Vec<f64> = Vec::new();

    for fold in 0..plan.k {
        emg_reads.borrow_mut().clear();
        let train_idx = plan.train_indices(fold);
        let test_idx = plan.test_indices(fold);
        if train_idx.is_empty() || test_idx.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "run_rpe_experiment: fold {fold} is empty"
            )));
        }
        let fold_seed = derive_seed(seed, &format!("fold{fold}"));

        let mut standardized_on: BTreeSet<usize> = BTreeSet::new();
        let mut smote_rows_added = 0usize;

        let (train_x, test_x): (Vec<Vec<f64>>, Vec<Vec<f64>>) = match emg_mode {
            EmgMode::Off => (
                train_idx.iter().map(|&i| records[i].imu.clone()).collect(),
                test_idx.iter().map(|&i| records[i].imu.clone()).collect(),
            ),
            EmgMode::Estimated => {
                let train_emg: Vec<Vec<f64>> = train_idx.iter().map(|&i| emg_of(i)).collect();
                standardized_on.extend(train_idx.iter().copied());
                let (labels, _model) = build_emg_labels(
                    &train_emg,
                    &params.labels,
                    derive_seed(fold_seed, "labels"),
                )?;
                let train_imu: Vec<Vec<f64>> =
                    train_idx.iter().map(|&i| records[i].imu.clone()).collect();
                let est = fit_emg_estimators(
                    &train_imu,
                    &labels,
                    labels.iter().map(|l| l.cluster).max().unwrap() + 1,
                    &params.estimator_forest,
                    params.smote_k,
                    derive_seed(fold_seed, "estimators"),
                )?;
                smote_rows_added = est.smote_added;
                (
                    train_imu
                        .iter()
                        .map(|row| augment(row, &est))
                        .collect::<Result<_>>()?,
                    test_idx
                        .iter()
                        .map(|&i| augment(&records[i].imu, &est))
                        .collect::<Result<_>>()?,
                )
            }
            EmgMode::GroundTruth => {
                let train_emg: Vec<Vec<f64>> = train_idx.iter().map(|&i| emg_of(i)).collect();
                standardized_on.extend(train_idx.iter().copied());
                let (labels, model) = build_emg_labels(
                    &train_emg,
                    &params.labels,
                    derive_seed(fold_seed, "labels"),
                )?;
                let train_x = train_idx
                    .iter()
                    .zip(&labels)
                    .map(|(&i, l)| augment_with_labels(&records[i].imu, l, model.k))
                    .collect();
                // the oracle comparison: test reps' true EMG labels, assigned
                // through the train-fitted constructors
                let test_x = test_idx
                    .iter()
                    .map(|&i| {
                        let l = model.assign(&emg_of(i));
                        augment_with_labels(&records[i].imu, &l, model.k)
                    })
                    .collect();
                (train_x, test_x)
            }
        };

        let train_y: Vec<u8> = train_idx.iter().map(|&i| records[i].rpe).collect();
        let test_y: Vec<u8> = test_idx.iter().map(|&i| records[i].rpe).collect();
        let model = fit_model(spec, &train_x, &train_y, derive_seed(fold_seed, "rpe-model"))?;

        if let Some(raw) = model.importance() {
            let collapsed = collapse_importance(&raw);
            match &mut importance_acc {
                Some(acc) => {
                    for (a, v) in acc.iter_mut().zip(&collapsed) {
                        *a += v;
                    }
                }
                None => importance_acc = Some(collapsed),
            }
        }

        let metrics: MetricList = match spec.task {
            Task::Classify => {
                let preds: Vec<u8> = test_x
                    .iter()
                    .map(|row| model.predict_class(row))
                    .collect::<Result<_>>()?;
                for (&t, &p) in test_y.iter().zip(&preds) {
                    pooled_hits.push(f64::from((t as i32 - p as i32).abs() <= 1));
                }
                pooled_y.extend_from_slice(&test_y);
                pooled_class.extend_from_slice(&preds);
                classification_metrics(&test_y, &preds)?.to_metric_list()
            }
            Task::Regress => {
                let preds: Vec<f64> = test_x
                    .iter()
                    .map(|row| model.predict_value(row))
                    .collect::<Result<_>>()?;
                for (&t, &p) in test_y.iter().zip(&preds) {
                    pooled_hits.push(f64::from((p - f64::from(t)).abs() <= 1.0));
                }
                pooled_y.extend_from_slice(&test_y);
                pooled_value.extend_from_slice(&preds);
                regression_metrics(&test_y, &preds)?.to_metric_list()
            }
        };
        per_fold.push(metrics);

        audits.push(FoldAudit {
            fold,
            train_indices: train_idx.iter().copied().collect(),
            test_indices: test_idx.iter().copied().collect(),
            emg_indices_read: emg_reads.borrow().clone(),
            standardized_on,
            smote_rows_added,
            rpe_train_rows: train_x.len(),
        });
    }

    assert_leakage_free(&audits, emg_mode)?;

    let (pooled, pooled_confusion) = match spec.task {
        Task::Classify => {
            let m = classification_metrics(&pooled_y, &pooled_class)?;
            (m.to_metric_list(), Some(m.confusion))
        }
        Task::Regress => (regression_metrics(&pooled_y, &pooled_value)?.to_metric_list(), None),
    };
    let within_one = pooled_hits.iter().sum::<f64>() / pooled_hits.len() as f64;
    let within_one_ci_normal = proportion_ci_normal(within_one, pooled_hits.len());
    let within_one_ci_bootstrap =
        bootstrap_ci_mean(&pooled_hits, 500, derive_seed(seed, "ci-bootstrap"))?;

    let importance = importance_acc.map(|acc| {
        let total: f64 = acc.iter().sum();
        importance_names()
            .into_iter()
            .zip(acc)
            .map(|(name, v)| (name, if total > 0.0 { v / total } else { 0.0 }))
            .collect()
    });

    Ok(ExperimentReport {
        model: spec.name.clone(),
        emg_mode,
        task: spec.task,
        aggregate: mean_metrics(&per_fold),
        per_fold,
        pooled,
        pooled_confusion,
        within_one_ci_normal,
        within_one_ci_bootstrap,
        importance,
        audits,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{make_fold_plan, FoldMode};
    use rand::Rng;

    fn planted_records(n: usize, seed: u64) -> Vec<RepRecord> {
        // RPE is a deterministic function of the eccentric-duration feature
        // (index 1 of the IMU schema); EMG features carry a monotone echo of
        // the RPE so label construction has signal to find.
        let mut rng = crate::seeds::rng_for(seed, "pipeline-fixture");
        (0..n)
            .map(|i| {
                let rpe = (i % 7 + 3) as u8;
                let ecc = 1.5 + 0.3 * f64::from(rpe) + rng.gen_range(-0.01..0.01);
                let mut imu = vec![0.0; IMU_FEATURE_COUNT];
                imu[0] = 1.2 + rng.gen_range(-0.05..0.05); // con duration
                imu[1] = ecc;
                imu[2] = imu[0] + imu[1];
                for v in imu.iter_mut().skip(3) {
                    *v = rng.gen_range(-1.0..1.0);
                }
                let emg: Vec<f64> = (0..EMG_FEATURE_COUNT)
                    .map(|j| f64::from(rpe) * (1.0 + j as f64 * 0.1) + rng.gen_range(-0.2..0.2))
                    .collect();
                RepRecord {
                    rep_id: format!("P{:03}_10_1_{}", i / 12 + 1, i % 12 + 1),
                    set_id: format!("P{:03}_10_1", i / 12 + 1),
                    rpe,
                    imu,
                    emg,
                }
            })
            .collect()
    }

    fn quick_params() -> PipelineParams {
        PipelineParams {
            labels: LabelParams {
                tsne: crate::embedding::TsneParams {
                    iters: 250,
                    perplexity: 12.0,
                    ..Default::default()
                },
                k_range: (2, 5),
                kmeans_restarts: 4,
            },
            estimator_forest: ForestParams {
                n_trees: 25,
                ..Default::default()
            },
            smote_k: 3,
        }
    }

    fn quick_spec(mut spec: ModelSpec) -> ModelSpec {
        spec.forest.n_trees = 120;
        // only 3 of 55 fixture features carry signal; widen the per-split
        // subsample so trees see them often enough
        spec.forest.feature_subsample = Some(16);
        spec.gbt.rounds = 30;
        spec
    }

    #[test]
    fn emg_label_constructor_recovers_planted_clusters() {
        let mut rng = crate::seeds::rng_for(5, "planted-emg");
        let centers: Vec<Vec<f64>> = (0..4)
            .map(|c| (0..EMG_FEATURE_COUNT).map(|j| (c * 7 + j) as f64 * 2.0).collect())
            .collect();
        let mut x = Vec::new();
        let mut truth = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..30 {
                x.push(
                    center
                        .iter()
                        .map(|v| v + rng.gen_range(-0.3..0.3))
                        .collect::<Vec<f64>>(),
                );
                truth.push(c);
            }
        }
        let params = LabelParams {
            tsne: crate::embedding::TsneParams {
                iters: 400,
                perplexity: 15.0,
                ..Default::default()
            },
            ..Default::default()
        };
        let (labels, model) = build_emg_labels(&x, &params, 3).unwrap();
        assert_eq!(model.k, 4);
        let found: Vec<usize> = labels.iter().map(|l| l.cluster).collect();
        let ari = crate::embedding::test_support::adjusted_rand_index(&truth, &found);
        assert!(ari >= 0.9, "ARI {ari}");

        // PC1 variance ≥ PC2 variance
        let var = |f: &dyn Fn(&EmgLabels) -> f64| {
            let m: f64 = labels.iter().map(|l| f(l)).sum::<f64>() / labels.len() as f64;
            labels.iter().map(|l| (f(l) - m) * (f(l) - m)).sum::<f64>() / labels.len() as f64
        };
        assert!(var(&|l| l.pc1) >= var(&|l| l.pc2));
    }

    #[test]
    fn augment_dimensions_and_purity() {
        let records = planted_records(60, 1);
        let imu: Vec<Vec<f64>> = records.iter().map(|r| r.imu.clone()).collect();
        let emg: Vec<Vec<f64>> = records.iter().map(|r| r.emg.clone()).collect();
        let (labels, model) = build_emg_labels(
            &emg,
            &LabelParams {
                tsne: crate::embedding::TsneParams {
                    iters: 250,
                    perplexity: 10.0,
                    ..Default::default()
                },
                ..Default::default()
            },
            2,
        )
        .unwrap();
        let est = fit_emg_estimators(
            &imu,
            &labels,
            model.k,
            &ForestParams {
                n_trees: 15,
                ..Default::default()
            },
            3,
            4,
        )
        .unwrap();
        let a = augment(&records[0].imu, &est).unwrap();
        assert_eq!(a.len(), IMU_FEATURE_COUNT + 2 + model.k);
        assert_eq!(a, augment(&records[0].imu, &est).unwrap());
        // one-hot block sums to 1
        let hot: f64 = a[IMU_FEATURE_COUNT + 2..].iter().sum();
        assert_eq!(hot, 1.0);
    }

    #[test]
    fn perfect_duration_mapping_is_learned() {
        let records = planted_records(180, 2);
        let set_ids: Vec<String> = records.iter().map(|r| r.set_id.clone()).collect();
        let plan = make_fold_plan(&set_ids, 4, FoldMode::RepShuffle, 7).unwrap();
        let report = run_rpe_experiment(
            &records,
            &quick_spec(ModelSpec::forest_classifier("rf")),
            EmgMode::Off,
            &plan,
            &quick_params(),
            7,
        )
        .unwrap();
        let exact = report
            .pooled
            .iter()
            .find(|(n, _)| n == "exact_accuracy")
            .unwrap()
            .1;
        assert!(exact >= 0.95, "exact accuracy {exact}");
        // duration features dominate the importance ranking
        let imp = report.importance.unwrap();
        let mut ranked: Vec<(String, f64)> = imp.clone();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let top3: Vec<&str> = ranked[..3].iter().map(|(n, _)| n.as_str()).collect();
        assert!(
            top3.iter()
                .any(|n| n.contains("duration") || n.contains("_time")),
            "top-3 importance {top3:?}"
        );
    }

    #[test]
    fn estimated_mode_runs_leakage_free_and_helps() {
        let records = planted_records(150, 3);
        let set_ids: Vec<String> = records.iter().map(|r| r.set_id.clone()).collect();
        let plan = make_fold_plan(&set_ids, 4, FoldMode::RepShuffle, 11).unwrap();
        let report = run_rpe_experiment(
            &records,
            &quick_spec(ModelSpec::forest_classifier("rf")),
            EmgMode::Estimated,
            &plan,
            &quick_params(),
            11,
        )
        .unwrap();
        assert_leakage_free(&report.audits, EmgMode::Estimated).unwrap();
        for audit in &report.audits {
            assert!(audit.emg_indices_read.is_subset(&audit.train_indices));
            assert_eq!(audit.standardized_on, audit.train_indices);
        }
    }

    #[test]
    fn ground_truth_mode_reads_test_emg_by_design() {
        let records = planted_records(120, 4);
        let set_ids: Vec<String> = records.iter().map(|r| r.set_id.clone()).collect();
        let plan = make_fold_plan(&set_ids, 4, FoldMode::RepShuffle, 5).unwrap();
        let report = run_rpe_experiment(
            &records,
            &quick_spec(ModelSpec::forest_classifier("rf")),
            EmgMode::GroundTruth,
            &plan,
            &quick_params(),
            5,
        )
        .unwrap();
        let read_test_emg = report
            .audits
            .iter()
            .any(|a| a.emg_indices_read.intersection(&a.test_indices).next().is_some());
        assert!(read_test_emg);
        // the exemption is explicit: the same audits fail under estimated rules
        assert!(assert_leakage_free(&report.audits, EmgMode::Estimated).is_err());
    }

    #[test]
    fn aggregate_is_mean_of_folds() {
        let records = planted_records(100, 6);
        let set_ids: Vec<String> = records.iter().map(|r| r.set_id.clone()).collect();
        let plan = make_fold_plan(&set_ids, 4, FoldMode::RepShuffle, 2).unwrap();
        let report = run_rpe_experiment(
            &records,
            &quick_spec(ModelSpec::gbt_regressor("gbt")),
            EmgMode::Off,
            &plan,
            &quick_params(),
            2,
        )
        .unwrap();
        for (mi, (name, agg)) in report.aggregate.iter().enumerate() {
            let mean: f64 = report.per_fold.iter().map(|f| f[mi].1).sum::<f64>()
                / report.per_fold.len() as f64;
            assert!((agg - mean).abs() < 1e-12, "{name}");
        }
    }

    #[test]
    fn spec_task_mismatch_rejected() {
        let mut spec = ModelSpec::logistic("lr");
        spec.task = Task::Regress;
        assert!(spec.validate().is_err());
        let mut spec = ModelSpec::elastic_net("enet");
        spec.task = Task::Classify;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn rep_record_row_round_trip() {
        let records = planted_records(3, 8);
        for r in &records {
            let row = r.to_row(true);
            let back = RepRecord::from_row(&row).unwrap();
            assert_eq!(*r, back);
        }
    }
}
