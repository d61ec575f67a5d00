//! Versioned text serialization for fitted models.
//!
//! The format is line-oriented: a header carrying the format version, the
//! feature schema (names plus an FNV-1a hash over them), and optional
//! `# key=value` provenance comments, followed by a kind-specific body.
//! Floats print with Rust's shortest round-trip formatting, so reload is
//! exact. Trees serialize in preorder: `s <feature> <threshold>` for splits
//! and `l <payload...>` for leaves.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::forest::{ForestModel, ForestParams};
use super::gbt::{GbtModel, GbtParams};
use super::linear::{LinearModel, LogisticModel};
use super::tree::{DecisionTree, Task, TreeNode};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// FNV-1a over the joined feature names; guards against loading a model
/// onto a feature matrix with a different layout.
pub fn schema_hash(feature_names: &[String]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for name in feature_names {
        for byte in name.bytes().chain(std::iter::once(0)) {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}

#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Forest(ForestModel),
    Gbt(GbtModel),
    Logistic(LogisticModel),
    Linear(LinearModel),
}

impl SavedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            SavedModel::Forest(_) => "forest",
            SavedModel::Gbt(_) => "gbt",
            SavedModel::Logistic(_) => "logistic",
            SavedModel::Linear(_) => "elastic_net",
        }
    }

    pub fn task(&self) -> Task {
        match self {
            SavedModel::Forest(m) => m.task,
            SavedModel::Gbt(m) => m.task,
            SavedModel::Logistic(_) => Task::Classify,
            SavedModel::Linear(_) => Task::Regress,
        }
    }
}

/// A fitted model plus the context needed to apply and audit it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub feature_names: Vec<String>,
    /// Original label values in dense-class order; empty for regressors.
    pub classes: Vec<u8>,
    /// Provenance written as leading `# key=value` comments (config hash,
    /// seed, emg mode).
    pub provenance: Vec<(String, String)>,
    pub model: SavedModel,
}

fn fmt_floats(out: &mut String, values: &[f64]) {
    for v in values {
        let _ = write!(out, " {v:?}");
    }
}

fn write_tree(out: &mut String, tree: &DecisionTree) {
    out.push_str("imp");
    fmt_floats(out, &tree.impurity_decrease);
    out.push('\n');
    fn walk(out: &mut String, node: &TreeNode) {
        match node {
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let _ = writeln!(out, "s {feature} {threshold:?}");
                walk(out, left);
                walk(out, right);
            }
            TreeNode::Leaf { payload } => {
                out.push('l');
                fmt_floats(out, payload);
                out.push('\n');
            }
        }
    }
    walk(out, &tree.root);
    out.push_str("end\n");
}

fn opt_usize(v: Option<usize>) -> String {
    v.map_or_else(|| "none".into(), |n| n.to_string())
}

pub fn model_to_text(file: &ModelFile) -> String {
    let mut out = String::new();
    for (key, value) in &file.provenance {
        let _ = writeln!(out, "# {key}={value}");
    }
    let _ = writeln!(out, "repforge-model v{MODEL_FORMAT_VERSION}");
    let _ = writeln!(out, "schema_hash {:016x}", schema_hash(&file.feature_names));
    for name in &file.feature_names {
        let _ = writeln!(out, "feature {name}");
    }
    if !file.classes.is_empty() {
        out.push_str("classes");
        for c in &file.classes {
            let _ = write!(out, " {c}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "kind {}", file.model.kind());
    let task = match file.model.task() {
        Task::Classify => "classify",
        Task::Regress => "regress",
    };
    let _ = writeln!(out, "task {task}");
    match &file.model {
        SavedModel::Forest(m) => {
            let _ = writeln!(out, "n_features {}", m.n_features);
            let _ = writeln!(out, "n_classes {}", m.n_classes);
            let _ = writeln!(out, "seed {}", m.seed);
            let _ = writeln!(
                out,
                "params n_trees={} max_depth={} min_leaf={} subsample={}",
                m.params.n_trees,
                opt_usize(m.params.max_depth),
                m.params.min_leaf,
                opt_usize(m.params.feature_subsample)
            );
            for (i, tree) in m.trees.iter().enumerate() {
                let _ = writeln!(out, "tree {i}");
                write_tree(&mut out, tree);
            }
        }
        SavedModel::Gbt(m) => {
            let _ = writeln!(out, "n_features {}", m.n_features);
            let _ = writeln!(out, "n_classes {}", m.n_classes);
            let _ = writeln!(
                out,
                "params rounds={} depth={} learning_rate={:?} min_leaf={}",
                m.params.rounds, m.params.depth, m.params.learning_rate, m.params.min_leaf
            );
            out.push_str("base");
            fmt_floats(&mut out, &m.base);
            out.push('\n');
            out.push_str("loss");
            fmt_floats(&mut out, &m.train_loss);
            out.push('\n');
            let per_stage = m.stages.first().map_or(0, Vec::len);
            let _ = writeln!(out, "stages {} per_stage {per_stage}", m.stages.len());
            for (r, stage) in m.stages.iter().enumerate() {
                for (c, tree) in stage.iter().enumerate() {
                    let _ = writeln!(out, "tree {r} {c}");
                    write_tree(&mut out, tree);
                }
            }
        }
        SavedModel::Logistic(m) => {
            let _ = writeln!(out, "n_features {}", m.weights[0].len());
            let _ = writeln!(out, "n_classes {}", m.n_classes);
            let _ = writeln!(out, "l2 {:?}", m.l2);
            out.push_str("intercepts");
            fmt_floats(&mut out, &m.intercepts);
            out.push('\n');
            for row in &m.weights {
                out.push('w');
                fmt_floats(&mut out, row);
                out.push('\n');
            }
        }
        SavedModel::Linear(m) => {
            let _ = writeln!(out, "n_features {}", m.weights.len());
            let _ = writeln!(out, "alpha {:?}", m.alpha);
            let _ = writeln!(out, "l1_ratio {:?}", m.l1_ratio);
            let _ = writeln!(out, "intercept {:?}", m.intercept);
            out.push_str("weights");
            fmt_floats(&mut out, &m.weights);
            out.push('\n');
        }
    }
    out
}

pub fn write_model(path: &Path, file: &ModelFile) -> Result<()> {
    std::fs::write(path, model_to_text(file)).map_err(|e| Error::io(path.display().to_string(), e))
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Skip<std::str::Lines<'a>>>,
    line_no: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        self.line_no += 1;
        self.inner
            .next()
            .ok_or_else(|| Error::Parse("model file: unexpected end of file".into()))
    }

    fn peek(&mut self) -> Option<&'a str> {
        self.inner.peek().copied()
    }

    fn expect(&mut self, prefix: &str) -> Result<&'a str> {
        let line = self.next()?;
        line.strip_prefix(prefix)
            .map(str::trim)
            .ok_or_else(|| {
                Error::Parse(format!(
                    "model file line {}: expected {prefix:?}, got {line:?}",
                    self.line_no
                ))
            })
    }
}

fn parse_floats(text: &str) -> Result<Vec<f64>> {
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| Error::Parse(format!("model file: bad float {tok:?}")))
        })
        .collect()
}

fn parse_kv<'a>(text: &'a str, key: &str) -> Result<&'a str> {
    text.split_whitespace()
        .find_map(|tok| tok.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| Error::Parse(format!("model file: missing param {key:?}")))
}

fn parse_opt_usize(text: &str) -> Result<Option<usize>> {
    if text == "none" {
        return Ok(None);
    }
    text.parse::<usize>()
        .map(Some)
        .map_err(|_| Error::Parse(format!("model file: bad integer {text:?}")))
}

fn read_tree(lines: &mut Lines<'_>, task: Task, n_classes: usize) -> Result<DecisionTree> {
    let impurity_decrease = parse_floats(lines.expect("imp")?)?;
    fn read_node(lines: &mut Lines<'_>) -> Result<TreeNode> {
        let line = lines.next()?;
        if let Some(rest) = line.strip_prefix("s ") {
            let mut parts = rest.split_whitespace();
            let feature = parts
                .next()
                .and_then(|t| t.parse::<usize>().ok())
                .ok_or_else(|| Error::Parse("model file: bad split feature".into()))?;
            let threshold = parts
                .next()
                .and_then(|t| t.parse::<f64>().ok())
                .ok_or_else(|| Error::Parse("model file: bad split threshold".into()))?;
            let left = Box::new(read_node(lines)?);
            let right = Box::new(read_node(lines)?);
            Ok(TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            })
        } else if let Some(rest) = line.strip_prefix('l') {
            Ok(TreeNode::Leaf {
                payload: parse_floats(rest)?,
            })
        } else {
            Err(Error::Parse(format!(
                "model file: expected node line, got {line:?}"
            )))
        }
    }
    let root = read_node(lines)?;
    let end = lines.next()?;
    if end != "end" {
        return Err(Error::Parse(format!(
            "model file: expected tree terminator, got {end:?}"
        )));
    }
    Ok(DecisionTree {
        root,
        task,
        n_classes,
        impurity_decrease,
    })
}

pub fn model_from_text(text: &str) -> Result<ModelFile> {
    let mut provenance = Vec::new();
    let mut body_start = 0;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                provenance.push((k.trim().to_string(), v.trim().to_string()));
            }
            body_start += 1;
        } else {
            break;
        }
    }
    let mut lines = Lines {
        inner: text.lines().skip(body_start).peekable(),
        line_no: body_start,
    };

    let version = lines.expect("repforge-model v")?;
    if version.parse::<u32>() != Ok(MODEL_FORMAT_VERSION) {
        return Err(Error::Parse(format!(
            "model file: unsupported format version {version:?}"
        )));
    }
    let stored_hash = lines.expect("schema_hash")?;
    let stored_hash = u64::from_str_radix(stored_hash, 16)
        .map_err(|_| Error::Parse("model file: bad schema hash".into()))?;
    let mut feature_names = Vec::new();
    while let Some(line) = lines.peek() {
        match line.strip_prefix("feature ") {
            Some(name) => {
                feature_names.push(name.to_string());
                lines.next()?;
            }
            None => break,
        }
    }
    if schema_hash(&feature_names) != stored_hash {
        return Err(Error::Parse(
            "model file: schema hash does not match feature names".into(),
        ));
    }
    let mut classes = Vec::new();
    if lines.peek().is_some_and(|l| l.starts_with("classes")) {
        for tok in lines.expect("classes")?.split_whitespace() {
            classes.push(
                tok.parse::<u8>()
                    .map_err(|_| Error::Parse(format!("model file: bad class {tok:?}")))?,
            );
        }
    }
    let kind = lines.expect("kind")?.to_string();
    let task = match lines.expect("task")? {
        "classify" => Task::Classify,
        "regress" => Task::Regress,
        other => {
            return Err(Error::Parse(format!("model file: unknown task {other:?}")))
        }
    };

    let model = match kind.as_str() {
        "forest" => {
            let n_features = lines.expect("n_features")?.parse::<usize>().unwrap_or(0);
            let n_classes = lines.expect("n_classes")?.parse::<usize>().unwrap_or(0);
            let seed = lines
                .expect("seed")?
                .parse::<u64>()
                .map_err(|_| Error::Parse("model file: bad seed".into()))?;
            let params_line = lines.expect("params")?;
            let params = ForestParams {
                n_trees: parse_kv(params_line, "n_trees")?
                    .parse()
                    .map_err(|_| Error::Parse("model file: bad n_trees".into()))?,
                max_depth: parse_opt_usize(parse_kv(params_line, "max_depth")?)?,
                min_leaf: parse_kv(params_line, "min_leaf")?
                    .parse()
                    .map_err(|_| Error::Parse("model file: bad min_leaf".into()))?,
                feature_subsample: parse_opt_usize(parse_kv(params_line, "subsample")?)?,
            };
            let mut trees = Vec::with_capacity(params.n_trees);
            for i in 0..params.n_trees {
                let idx = lines.expect("tree")?;
                if idx.parse::<usize>() != Ok(i) {
                    return Err(Error::Parse(format!(
                        "model file: tree index {idx:?}, expected {i}"
                    )));
                }
                trees.push(read_tree(&mut lines, task, n_classes)?);
            }
            SavedModel::Forest(ForestModel {
                trees,
                task,
                n_features,
                n_classes,
                params,
                seed,
            })
        }
        "gbt" => {
            let n_features = lines.expect("n_features")?.parse::<usize>().unwrap_or(0);
            let n_classes = lines.expect("n_classes")?.parse::<usize>().unwrap_or(0);
            let params_line = lines.expect("params")?;
            let params = GbtParams {
                rounds: parse_kv(params_line, "rounds")?
                    .parse()
                    .map_err(|_| Error::Parse("model file: bad rounds".into()))?,
                depth: parse_kv(params_line, "depth")?
                    .parse()
                    .map_err(|_| Error::Parse("model file: bad depth".into()))?,
                learning_rate: parse_kv(params_line, "learning_rate")?
                    .parse()
                    .map_err(|_| Error::Parse("model file: bad learning rate".into()))?,
                min_leaf: parse_kv(params_line, "min_leaf")?
                    .parse()
                    .map_err(|_| Error::Parse("model file: bad min_leaf".into()))?,
            };
            let base = parse_floats(lines.expect("base")?)?;
            let train_loss = parse_floats(lines.expect("loss")?)?;
            let stages_line = lines.expect("stages")?;
            let mut parts = stages_line.split_whitespace();
            let n_stages: usize = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse("model file: bad stage count".into()))?;
            let per_stage: usize = parts
                .nth(1)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse("model file: bad per-stage count".into()))?;
            let mut stages = Vec::with_capacity(n_stages);
            for r in 0..n_stages {
                let mut stage = Vec::with_capacity(per_stage);
                for c in 0..per_stage {
                    let idx = lines.expect("tree")?;
                    if idx != format!("{r} {c}") {
                        return Err(Error::Parse(format!(
                            "model file: stage tree index {idx:?}, expected {r} {c}"
                        )));
                    }
                    stage.push(read_tree(&mut lines, Task::Regress, 0)?);
                }
                stages.push(stage);
            }
            SavedModel::Gbt(GbtModel {
                task,
                params,
                n_features,
                n_classes,
                base,
                stages,
                train_loss,
            })
        }
        "logistic" => {
            let _n_features = lines.expect("n_features")?;
            let n_classes = lines
                .expect("n_classes")?
                .parse::<usize>()
                .map_err(|_| Error::Parse("model file: bad n_classes".into()))?;
            let l2 = lines
                .expect("l2")?
                .parse::<f64>()
                .map_err(|_| Error::Parse("model file: bad l2".into()))?;
            let intercepts = parse_floats(lines.expect("intercepts")?)?;
            let mut weights = Vec::with_capacity(n_classes);
            for _ in 0..n_classes {
                weights.push(parse_floats(lines.expect("w")?)?);
            }
            SavedModel::Logistic(LogisticModel {
                weights,
                intercepts,
                l2,
                n_classes,
            })
        }
        "elastic_net" => {
            let _n_features = lines.expect("n_features")?;
            let alpha = lines
                .expect("alpha")?
                .parse::<f64>()
                .map_err(|_| Error::Parse("model file: bad alpha".into()))?;
            let l1_ratio = lines
                .expect("l1_ratio")?
                .parse::<f64>()
                .map_err(|_| Error::Parse("model file: bad l1_ratio".into()))?;
            let intercept = lines
                .expect("intercept")?
                .parse::<f64>()
                .map_err(|_| Error::Parse("model file: bad intercept".into()))?;
            let weights = parse_floats(lines.expect("weights")?)?;
            SavedModel::Linear(LinearModel {
                weights,
                intercept,
                alpha,
                l1_ratio,
            })
        }
        other => {
            return Err(Error::Parse(format!(
                "model file: unknown model kind {other:?}"
            )))
        }
    };

    Ok(ModelFile {
        feature_names,
        classes,
        provenance,
        model,
    })
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    model_from_text(&text)
}

/// Human-readable hyperparameter summary plus the impurity importance
/// table where the model family defines one.
pub fn describe_model(file: &ModelFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "kind: {}", file.model.kind());
    let task = match file.model.task() {
        Task::Classify => "classify",
        Task::Regress => "regress",
    };
    let _ = writeln!(out, "task: {task}");
    let _ = writeln!(out, "features: {}", file.feature_names.len());
    if !file.classes.is_empty() {
        let _ = writeln!(out, "classes: {:?}", file.classes);
    }
    for (key, value) in &file.provenance {
        let _ = writeln!(out, "{key}: {value}");
    }
    let importance: Option<Vec<f64>> = match &file.model {
        SavedModel::Forest(m) => {
            let _ = writeln!(
                out,
                "params: n_trees={} max_depth={} min_leaf={} subsample={}",
                m.params.n_trees,
                opt_usize(m.params.max_depth),
                m.params.min_leaf,
                opt_usize(m.params.feature_subsample)
            );
            super::feature_importance(m).ok()
        }
        SavedModel::Gbt(m) => {
            let _ = writeln!(
                out,
                "params: rounds={} depth={} learning_rate={} min_leaf={}",
                m.params.rounds, m.params.depth, m.params.learning_rate, m.params.min_leaf
            );
            // same mean-decrease-in-impurity accumulation, over stage trees
            let mut acc = vec![0.0; m.n_features];
            for tree in m.stages.iter().flatten() {
                for (a, v) in acc.iter_mut().zip(&tree.impurity_decrease) {
                    *a += v;
                }
            }
            let total: f64 = acc.iter().sum();
            (total > 0.0).then(|| acc.iter().map(|v| v / total).collect())
        }
        SavedModel::Logistic(m) => {
            let _ = writeln!(out, "params: l2={}", m.l2);
            None
        }
        SavedModel::Linear(m) => {
            let _ = writeln!(out, "params: alpha={} l1_ratio={}", m.alpha, m.l1_ratio);
            None
        }
    };
    if let Some(scores) = importance {
        let mut ranked: Vec<(&String, f64)> = file.feature_names.iter().zip(scores).collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let _ = writeln!(out, "importance:");
        for (name, score) in ranked {
            let _ = writeln!(out, "  {name} {score:.6}");
        }
    }
    out
}
