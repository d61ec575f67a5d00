//! Command-line surface of the pipeline: each subcommand runs one stage,
//! reading the previous stage's CSVs from the output directory and writing
//! its own. All randomness flows from `--seed`; every output file embeds
//! the config hash and seed in leading `# key=value` comments, so two runs
//! with identical config and seed produce byte-identical outputs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use repforge::config::KvConfig;
use repforge::csvio::{fmt_f64, TableWriter};
use repforge::dataio::{
    list_annotated_sets, read_rep_dataset, write_rep_dataset, PalmAxisConfig,
};
use repforge::dsp::{align_set, AlignedSet, DspParams};
use repforge::embedding::TsneParams;
use repforge::error::{Error, Result};
use repforge::evaluation::{emg_impact_table, make_fold_plan, FoldMode, MetricList};
use repforge::features::{emg_feature_names, imu_feature_names, SCHEMA_VERSION};
use repforge::learners::{
    describe_model, read_model, write_model, ForestParams, GbtParams,
};
use repforge::pipeline::{
    build_emg_labels, extract_rep_records, run_rpe_experiment, train_full_model, EmgMode,
    LabelParams, ModelSpec, PipelineParams, RepRecord,
};
use repforge::synth::{generate_corpus, write_corpus, CorpusSpec};

#[derive(Parser)]
#[command(name = "repforge", about = "RPE estimation pipeline for dumbbell curls")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat key=value config file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config's `seed` key.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: config `out.dir` or `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip the stage when its outputs already carry this config hash and seed.
    #[arg(long)]
    skip_fresh: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with ground-truth boundaries.
    Synth(Common),
    /// Load and align the raw corpus; write a per-set summary.
    Ingest(Common),
    /// Segment aligned sets into repetitions; quarantine mismatched sets.
    Segment {
        #[command(flatten)]
        common: Common,
        /// Exit nonzero when any set is quarantined.
        #[arg(long)]
        strict: bool,
        /// Minimum seconds between retained jerk crossings.
        #[arg(long)]
        min_gap_s: Option<f64>,
        /// Palm-direction accelerometer axis (x|y|z).
        #[arg(long)]
        palm_axis: Option<String>,
    },
    /// Extract per-rep IMU and EMG features.
    Features(Common),
    /// Build EMG-derived labels (PC1/PC2 + cluster) over the whole dataset.
    Label(Common),
    /// Fit one model on all reps and serialize it.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "off")]
        emg_mode: String,
        /// Model name (rf|rf_regress|gbt|gbt_regress|logistic|elastic_net).
        #[arg(long, default_value = "rf")]
        model: String,
    },
    /// Cross-validated experiment for every configured model.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "estimated")]
        emg_mode: String,
    },
    /// Combine evaluate outputs into report.csv and impact.csv.
    Report(Common),
    /// Saved-model utilities.
    Model {
        #[command(subcommand)]
        action: ModelAction,
    },
}

#[derive(Subcommand)]
enum ModelAction {
    /// Print a saved model's hyperparameters and importance table.
    Inspect { path: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = command_name(&cli.command);
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("repforge-error\tcommand={name}\tmessage={err}");
            ExitCode::FAILURE
        }
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Synth(_) => "synth",
        Command::Ingest(_) => "ingest",
        Command::Segment { .. } => "segment",
        Command::Features(_) => "features",
        Command::Label(_) => "label",
        Command::Train { .. } => "train",
        Command::Evaluate { .. } => "evaluate",
        Command::Report(_) => "report",
        Command::Model { .. } => "model",
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(common) => cmd_synth(&Ctx::new(common)?),
        Command::Ingest(common) => cmd_ingest(&Ctx::new(common)?),
        Command::Segment {
            common,
            strict,
            min_gap_s,
            palm_axis,
        } => cmd_segment(&Ctx::new(common)?, strict, min_gap_s, palm_axis.as_deref()),
        Command::Features(common) => cmd_features(&Ctx::new(common)?),
        Command::Label(common) => cmd_label(&Ctx::new(common)?),
        Command::Train {
            common,
            emg_mode,
            model,
        } => cmd_train(&Ctx::new(common)?, EmgMode::parse(&emg_mode)?, &model),
        Command::Evaluate { common, emg_mode } => {
            cmd_evaluate(&Ctx::new(common)?, EmgMode::parse(&emg_mode)?)
        }
        Command::Report(common) => cmd_report(&Ctx::new(common)?),
        Command::Model { action } => match action {
            ModelAction::Inspect { path } => {
                print!("{}", describe_model(&read_model(&path)?));
                Ok(())
            }
        },
    }
}

/// Resolved invocation context shared by all stages.
struct Ctx {
    cfg: KvConfig,
    seed: u64,
    out: PathBuf,
    skip_fresh: bool,
}

impl Ctx {
    fn new(common: Common) -> Result<Ctx> {
        let cfg = KvConfig::load(&common.config)?;
        let seed = match common.seed {
            Some(s) => s,
            None => cfg.get_u64_or("seed", 0)?,
        };
        let out = common
            .out
            .unwrap_or_else(|| PathBuf::from(cfg.get_or("out.dir", "out")));
        std::fs::create_dir_all(&out).map_err(|e| Error::io(out.display().to_string(), e))?;
        Ok(Ctx {
            cfg,
            seed,
            out,
            skip_fresh: common.skip_fresh,
        })
    }

    fn provenance(&self) -> Vec<String> {
        vec![
            format!("config_hash={:016x}", self.cfg.content_hash()),
            format!("seed={}", self.seed),
        ]
    }

    /// True when `path` exists and already embeds this config hash and seed.
    fn is_fresh(&self, path: &Path) -> bool {
        let Ok(text) = std::fs::read_to_string(path) else {
            return false;
        };
        let mut hash_ok = false;
        let mut seed_ok = false;
        for line in text.lines() {
            let Some(rest) = line.strip_prefix('#') else {
                break;
            };
            match rest.trim().split_once('=') {
                Some(("config_hash", v)) => {
                    hash_ok = v == format!("{:016x}", self.cfg.content_hash());
                }
                Some(("seed", v)) => seed_ok = v == self.seed.to_string(),
                _ => {}
            }
        }
        hash_ok && seed_ok
    }

    fn skip_if_fresh(&self, stage: &str, outputs: &[&Path]) -> bool {
        if self.skip_fresh && !outputs.is_empty() && outputs.iter().all(|p| self.is_fresh(p)) {
            println!("{stage}: outputs fresh, skipping");
            return true;
        }
        false
    }

    fn data_dir(&self) -> PathBuf {
        self.cfg
            .get("data.dir")
            .map(PathBuf::from)
            .unwrap_or_else(|| self.out.clone())
    }

    fn min_gap_s(&self) -> Result<f64> {
        self.cfg
            .get_f64_or("segment.min_gap_s", repforge::segmentation::DEFAULT_MIN_GAP_S)
    }

    fn label_params(&self) -> Result<LabelParams> {
        let defaults = TsneParams::default();
        Ok(LabelParams {
            tsne: TsneParams {
                perplexity: self.cfg.get_f64_or("tsne.perplexity", defaults.perplexity)?,
                iters: self.cfg.get_usize_or("tsne.iters", defaults.iters)?,
                ..defaults
            },
            k_range: (
                self.cfg.get_usize_or("labels.k_min", 2)?,
                self.cfg.get_usize_or("labels.k_max", 8)?,
            ),
            kmeans_restarts: self.cfg.get_usize_or("labels.kmeans_restarts", 8)?,
        })
    }

    fn pipeline_params(&self) -> Result<PipelineParams> {
        let defaults = PipelineParams::default();
        Ok(PipelineParams {
            labels: self.label_params()?,
            estimator_forest: ForestParams {
                n_trees: self
                    .cfg
                    .get_usize_or("estimator.n_trees", defaults.estimator_forest.n_trees)?,
                ..defaults.estimator_forest
            },
            smote_k: self.cfg.get_usize_or("smote.k", defaults.smote_k)?,
        })
    }

    fn model_spec(&self, name: &str) -> Result<ModelSpec> {
        let mut spec = match name {
            "rf" => ModelSpec::forest_classifier("rf"),
            "rf_regress" => ModelSpec::forest_regressor("rf_regress"),
            "gbt" => ModelSpec::gbt_classifier("gbt"),
            "gbt_regress" => ModelSpec::gbt_regressor("gbt_regress"),
            "logistic" => ModelSpec::logistic("logistic"),
            "elastic_net" => ModelSpec::elastic_net("elastic_net"),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown model {other:?}; expected rf|rf_regress|gbt|gbt_regress|logistic|elastic_net"
                )))
            }
        };
        spec.forest = ForestParams {
            n_trees: self.cfg.get_usize_or("forest.n_trees", spec.forest.n_trees)?,
            feature_subsample: self.cfg.get_usize("forest.subsample")?,
            ..spec.forest
        };
        spec.gbt = GbtParams {
            rounds: self.cfg.get_usize_or("gbt.rounds", spec.gbt.rounds)?,
            depth: self.cfg.get_usize_or("gbt.depth", spec.gbt.depth)?,
            learning_rate: self.cfg.get_f64_or("gbt.learning_rate", spec.gbt.learning_rate)?,
            ..spec.gbt
        };
        spec.l2 = self.cfg.get_f64_or("logistic.l2", spec.l2)?;
        spec.iters = self.cfg.get_usize_or("logistic.iters", spec.iters)?;
        spec.alpha = self.cfg.get_f64_or("enet.alpha", spec.alpha)?;
        spec.l1_ratio = self.cfg.get_f64_or("enet.l1_ratio", spec.l1_ratio)?;
        Ok(spec)
    }

    fn model_specs(&self) -> Result<Vec<ModelSpec>> {
        self.cfg
            .get_or("experiment.models", "rf,gbt,logistic")
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|name| self.model_spec(name))
            .collect()
    }

    fn fold_mode(&self) -> Result<FoldMode> {
        match self.cfg.get_or("experiment.fold_mode", "rep_shuffle") {
            "rep_shuffle" => Ok(FoldMode::RepShuffle),
            "by_set" => Ok(FoldMode::BySet),
            other => Err(Error::Config(format!(
                "experiment.fold_mode: expected rep_shuffle|by_set, got {other:?}"
            ))),
        }
    }
}

/// Load and align every annotated set in the data directory.
fn aligned_sets(ctx: &Ctx) -> Result<Vec<AlignedSet>> {
    let dir = ctx.data_dir();
    let rpe_path = dir.join(ctx.cfg.get_or("data.rpe_table", "rpe.csv"));
    let dsp = DspParams::from_config(&ctx.cfg)?;
    let mut out = Vec::new();
    for set_id in list_annotated_sets(&rpe_path)? {
        let emg_path = dir.join(format!("{set_id}_emg.csv"));
        let imu_path = dir.join(format!("{set_id}_imu.csv"));
        let raw = repforge::dataio::load_set(&emg_path, &imu_path, &rpe_path, &set_id, &ctx.cfg)?;
        out.push(align_set(&raw, &dsp)?);
    }
    if out.is_empty() {
        return Err(Error::Data(format!(
            "no annotated sets found under {}",
            dir.display()
        )));
    }
    Ok(out)
}

/// Segment every aligned set; count mismatches become quarantine rows
/// instead of hard failures.
fn segment_corpus(ctx: &Ctx) -> Result<(Vec<RepRecord>, Vec<(String, usize, usize)>)> {
    let palm = PalmAxisConfig::from_config(&ctx.cfg)?;
    let min_gap = ctx.min_gap_s()?;
    let mut records = Vec::new();
    let mut rejects = Vec::new();
    for set in aligned_sets(ctx)? {
        match extract_rep_records(&set, &palm, min_gap) {
            Ok(mut reps) => records.append(&mut reps),
            Err(Error::CountMismatch {
                set_id,
                detected,
                annotated,
            }) => rejects.push((set_id, detected, annotated)),
            Err(other) => return Err(other),
        }
    }
    Ok((records, rejects))
}

fn read_records(ctx: &Ctx) -> Result<Vec<RepRecord>> {
    let path = ctx.out.join("rep_features.csv");
    let (schema, _, rows) = read_rep_dataset(&path)?;
    if schema != SCHEMA_VERSION {
        return Err(Error::Data(format!(
            "{}: schema {schema:?}, expected {SCHEMA_VERSION:?}; rerun `repforge features`",
            path.display()
        )));
    }
    rows.iter().map(RepRecord::from_row).collect()
}

fn cmd_synth(ctx: &Ctx) -> Result<()> {
    let truth = ctx.out.join("truth.csv");
    if ctx.skip_if_fresh("synth", &[&truth]) {
        return Ok(());
    }
    let defaults = CorpusSpec::default();
    let mut base = defaults.base.clone();
    base.accel_noise_g = ctx.cfg.get_f64_or("synth.accel_noise_g", base.accel_noise_g)?;
    base.gyro_noise_dps = ctx.cfg.get_f64_or("synth.gyro_noise_dps", base.gyro_noise_dps)?;
    base.emg_noise_mv = ctx.cfg.get_f64_or("synth.emg_noise_mv", base.emg_noise_mv)?;
    base.emg_rpe_gain = ctx.cfg.get_f64_or("synth.emg_rpe_gain", base.emg_rpe_gain)?;
    base.slowdown_s_per_rpe = ctx
        .cfg
        .get_f64_or("synth.slowdown_s_per_rpe", base.slowdown_s_per_rpe)?;
    let corpus_spec = CorpusSpec {
        base,
        sets_per_user: ctx.cfg.get_usize_or("synth.sets_per_user", defaults.sets_per_user)?,
        ..defaults
    };
    let n_sets = ctx.cfg.get_usize_or("synth.sets", 12)?;
    let corpus = generate_corpus(n_sets, &corpus_spec, ctx.seed)?;
    write_corpus(&ctx.out, &corpus, &ctx.provenance())?;
    println!("synth: wrote {n_sets} sets to {}", ctx.out.display());
    Ok(())
}

fn cmd_ingest(ctx: &Ctx) -> Result<()> {
    let path = ctx.out.join("sets.csv");
    if ctx.skip_if_fresh("ingest", &[&path]) {
        return Ok(());
    }
    let sets = aligned_sets(ctx)?;
    let mut writer = TableWriter::create(
        &path,
        &ctx.provenance(),
        &["set_id", "n_samples", "fs_hz", "duration_s", "n_reps_annotated"],
    )?;
    for set in &sets {
        writer.write_row(&[
            set.set_id.to_string(),
            set.t.len().to_string(),
            fmt_f64(set.fs),
            fmt_f64(set.t.last().copied().unwrap_or(0.0)),
            set.rpe_annotations.len().to_string(),
        ])?;
    }
    writer.finish()?;
    println!("ingest: {} sets -> {}", sets.len(), path.display());
    Ok(())
}

fn cmd_segment(
    ctx: &Ctx,
    strict: bool,
    min_gap_s: Option<f64>,
    palm_axis: Option<&str>,
) -> Result<()> {
    // flag overrides are written into the config view so the hash embedded
    // in outputs reflects what actually ran
    let mut ctx_cfg = ctx.cfg.clone();
    if let Some(v) = min_gap_s {
        ctx_cfg.set("segment.min_gap_s", v);
    }
    if let Some(axis) = palm_axis {
        ctx_cfg.set("palm.axis", axis);
    }
    let ctx = Ctx {
        cfg: ctx_cfg,
        seed: ctx.seed,
        out: ctx.out.clone(),
        skip_fresh: ctx.skip_fresh,
    };
    let reps_path = ctx.out.join("reps.csv");
    let rejects_path = ctx.out.join("rejects.csv");
    if ctx.skip_if_fresh("segment", &[&reps_path, &rejects_path]) {
        return Ok(());
    }

    let (records, rejects) = segment_corpus(&ctx)?;
    let mut writer = TableWriter::create(
        &reps_path,
        &ctx.provenance(),
        &["rep_id", "set_id", "rpe"],
    )?;
    for rep in &records {
        writer.write_row(&[rep.rep_id.clone(), rep.set_id.clone(), rep.rpe.to_string()])?;
    }
    writer.finish()?;

    let mut writer = TableWriter::create(
        &rejects_path,
        &ctx.provenance(),
        &["set_id", "detected", "annotated"],
    )?;
    for (set_id, detected, annotated) in &rejects {
        writer.write_row(&[set_id.clone(), detected.to_string(), annotated.to_string()])?;
    }
    writer.finish()?;

    println!(
        "segment: {} reps, {} sets quarantined -> {}",
        records.len(),
        rejects.len(),
        reps_path.display()
    );
    if strict && !rejects.is_empty() {
        return Err(Error::Data(format!(
            "{} sets quarantined (see {})",
            rejects.len(),
            rejects_path.display()
        )));
    }
    Ok(())
}

fn cmd_features(ctx: &Ctx) -> Result<()> {
    let path = ctx.out.join("rep_features.csv");
    if ctx.skip_if_fresh("features", &[&path]) {
        return Ok(());
    }
    let (records, rejects) = segment_corpus(ctx)?;
    if records.is_empty() {
        return Err(Error::Data("features: no segmentable sets".into()));
    }
    let mut names: Vec<String> = imu_feature_names();
    names.extend(emg_feature_names());
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let rows: Vec<_> = records.iter().map(|r| r.to_row(true)).collect();
    write_rep_dataset(&path, SCHEMA_VERSION, &name_refs, &rows, &ctx.provenance())?;
    println!(
        "features: {} reps ({} sets quarantined) -> {}",
        rows.len(),
        rejects.len(),
        path.display()
    );
    Ok(())
}

fn cmd_label(ctx: &Ctx) -> Result<()> {
    let path = ctx.out.join("emg_labels.csv");
    if ctx.skip_if_fresh("label", &[&path]) {
        return Ok(());
    }
    let records = read_records(ctx)?;
    let emg: Vec<Vec<f64>> = records.iter().map(|r| r.emg.clone()).collect();
    let (labels, model) = build_emg_labels(&emg, &ctx.label_params()?, ctx.seed)?;
    let mut writer = TableWriter::create(
        &path,
        &ctx.provenance(),
        &["rep_id", "set_id", "rpe", "pc1", "pc2", "cluster"],
    )?;
    for (rep, label) in records.iter().zip(&labels) {
        writer.write_row(&[
            rep.rep_id.clone(),
            rep.set_id.clone(),
            rep.rpe.to_string(),
            fmt_f64(label.pc1),
            fmt_f64(label.pc2),
            label.cluster.to_string(),
        ])?;
    }
    writer.finish()?;
    println!(
        "label: {} reps, k={} -> {}",
        labels.len(),
        model.k,
        path.display()
    );
    Ok(())
}

fn cmd_train(ctx: &Ctx, emg_mode: EmgMode, model_name: &str) -> Result<()> {
    let path = ctx.out.join(format!("model_{model_name}.txt"));
    if ctx.skip_if_fresh("train", &[&path]) {
        return Ok(());
    }
    let spec = ctx.model_spec(model_name)?;
    let records = read_records(ctx)?;
    let mut file = train_full_model(&records, &spec, emg_mode, &ctx.pipeline_params()?, ctx.seed)?;
    file.provenance = vec![
        ("config_hash".into(), format!("{:016x}", ctx.cfg.content_hash())),
        ("seed".into(), ctx.seed.to_string()),
        ("emg_mode".into(), emg_mode.as_str().into()),
    ];
    write_model(&path, &file)?;
    println!("train: {model_name} on {} reps -> {}", records.len(), path.display());
    Ok(())
}

fn eval_path(out: &Path, mode: EmgMode) -> PathBuf {
    out.join(format!("eval_{}.csv", mode.as_str()))
}

fn cmd_evaluate(ctx: &Ctx, emg_mode: EmgMode) -> Result<()> {
    let path = eval_path(&ctx.out, emg_mode);
    if ctx.skip_if_fresh("evaluate", &[&path]) {
        return Ok(());
    }
    let records = read_records(ctx)?;
    let set_ids: Vec<String> = records.iter().map(|r| r.set_id.clone()).collect();
    let plan = make_fold_plan(
        &set_ids,
        ctx.cfg.get_usize_or("experiment.folds", 4)?,
        ctx.fold_mode()?,
        ctx.seed,
    )?;
    let params = ctx.pipeline_params()?;

    let mut writer = TableWriter::create(
        &path,
        &ctx.provenance(),
        &["model", "emg_mode", "fold", "metric", "value"],
    )?;
    for spec in ctx.model_specs()? {
        let report = run_rpe_experiment(&records, &spec, emg_mode, &plan, &params, ctx.seed)?;
        for (fold, metrics) in report.per_fold.iter().enumerate() {
            for (metric, value) in metrics {
                writer.write_row(&[
                    spec.name.clone(),
                    emg_mode.as_str().into(),
                    fold.to_string(),
                    metric.clone(),
                    fmt_f64(*value),
                ])?;
            }
        }
        for (label, metrics) in [("aggregate", &report.aggregate), ("pooled", &report.pooled)] {
            for (metric, value) in metrics {
                writer.write_row(&[
                    spec.name.clone(),
                    emg_mode.as_str().into(),
                    label.into(),
                    metric.clone(),
                    fmt_f64(*value),
                ])?;
            }
        }

        if let Some(confusion) = &report.pooled_confusion {
            let suffix = format!("{}_{}", spec.name, emg_mode.as_str());
            let mut header = vec!["true_rpe".to_string()];
            header.extend((1..=confusion.len()).map(|p| format!("pred_{p}")));
            let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
            let mut cw = TableWriter::create(
                &ctx.out.join(format!("confusion_{suffix}.csv")),
                &ctx.provenance(),
                &header_refs,
            )?;
            for (t, row) in confusion.iter().enumerate() {
                let mut fields = vec![(t + 1).to_string()];
                fields.extend(row.iter().map(usize::to_string));
                cw.write_row(&fields)?;
            }
            cw.finish()?;
        }
        if let Some(importance) = &report.importance {
            let suffix = format!("{}_{}", spec.name, emg_mode.as_str());
            let mut iw = TableWriter::create(
                &ctx.out.join(format!("importance_{suffix}.csv")),
                &ctx.provenance(),
                &["feature", "importance"],
            )?;
            let mut ranked = importance.clone();
            ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
            for (feature, value) in &ranked {
                iw.write_row(&[feature.clone(), fmt_f64(*value)])?;
            }
            iw.finish()?;
        }
        let headline = report
            .pooled
            .iter()
            .find(|(n, _)| n == "within_one_accuracy")
            .map_or(f64::NAN, |(_, v)| *v);
        println!(
            "evaluate: {} mode={} pooled ±1 accuracy {:.4}",
            spec.name,
            emg_mode.as_str(),
            headline
        );
    }
    writer.finish()?;
    println!("evaluate: -> {}", path.display());
    Ok(())
}

/// Aggregate-row metric lists per model, read back from one eval CSV.
fn read_eval_aggregates(path: &Path) -> Result<Vec<(String, MetricList)>> {
    let table = repforge::csvio::read_table(path)?;
    let col = |name: &str| {
        table
            .column(name)
            .ok_or_else(|| Error::Data(format!("{}: missing column {name}", path.display())))
    };
    let (model_c, fold_c, metric_c, value_c) =
        (col("model")?, col("fold")?, col("metric")?, col("value")?);
    let mut out: Vec<(String, MetricList)> = Vec::new();
    for row in &table.rows {
        if row[fold_c] != "aggregate" {
            continue;
        }
        let value = repforge::csvio::parse_f64(&row[value_c], "eval value")?;
        match out.iter_mut().find(|(m, _)| *m == row[model_c]) {
            Some((_, list)) => list.push((row[metric_c].clone(), value)),
            None => out.push((row[model_c].clone(), vec![(row[metric_c].clone(), value)])),
        }
    }
    if out.is_empty() {
        return Err(Error::Data(format!(
            "{}: no aggregate rows",
            path.display()
        )));
    }
    Ok(out)
}

fn cmd_report(ctx: &Ctx) -> Result<()> {
    let report_path = ctx.out.join("report.csv");
    let impact_path = ctx.out.join("impact.csv");
    if ctx.skip_if_fresh("report", &[&report_path]) {
        return Ok(());
    }

    let modes = [EmgMode::Off, EmgMode::Estimated, EmgMode::GroundTruth];
    let present: Vec<EmgMode> = modes
        .into_iter()
        .filter(|m| eval_path(&ctx.out, *m).exists())
        .collect();
    if present.is_empty() {
        return Err(Error::Data(
            "report: no eval_<mode>.csv found; run `repforge evaluate` first".into(),
        ));
    }

    // report.csv is the concatenation of every eval file's rows
    let mut writer = TableWriter::create(
        &report_path,
        &ctx.provenance(),
        &["model", "emg_mode", "fold", "metric", "value"],
    )?;
    for mode in &present {
        let table = repforge::csvio::read_table(&eval_path(&ctx.out, *mode))?;
        for row in &table.rows {
            writer.write_row(row)?;
        }
    }
    writer.finish()?;

    // impact.csv needs the with/without pair
    if present.contains(&EmgMode::Off) && present.contains(&EmgMode::Estimated) {
        let without = read_eval_aggregates(&eval_path(&ctx.out, EmgMode::Off))?;
        let with = read_eval_aggregates(&eval_path(&ctx.out, EmgMode::Estimated))?;
        let mut pairs: Vec<(String, MetricList, MetricList)> = with
            .into_iter()
            .filter_map(|(model, w)| {
                without
                    .iter()
                    .find(|(m, _)| *m == model)
                    .map(|(_, wo)| (model, w, wo.clone()))
            })
            .collect();
        // classifiers and regressors report different metric lists; the
        // impact table only differences metrics every model provides
        let common: Vec<String> = pairs
            .first()
            .map(|(_, w, _)| {
                w.iter()
                    .map(|(n, _)| n.clone())
                    .filter(|n| {
                        pairs.iter().all(|(_, pw, po)| {
                            pw.iter().any(|(pn, _)| pn == n)
                                && po.iter().any(|(pn, _)| pn == n)
                        })
                    })
                    .collect()
            })
            .unwrap_or_default();
        for (_, w, wo) in &mut pairs {
            let keep = |list: &MetricList| -> MetricList {
                common
                    .iter()
                    .filter_map(|n| list.iter().find(|(ln, _)| ln == n).cloned())
                    .collect()
            };
            *w = keep(w);
            *wo = keep(wo);
        }
        if !pairs.is_empty() && !common.is_empty() {
            let rows = emg_impact_table(&pairs)?;
            let mut iw = TableWriter::create(
                &impact_path,
                &ctx.provenance(),
                &["metric", "mean", "median", "std", "max", "min"],
            )?;
            for row in &rows {
                iw.write_row(&[
                    row.metric.clone(),
                    fmt_f64(row.mean),
                    fmt_f64(row.median),
                    fmt_f64(row.std),
                    fmt_f64(row.max),
                    fmt_f64(row.min),
                ])?;
            }
            iw.finish()?;
            println!("report: impact table -> {}", impact_path.display());
        }
    }
    println!("report: -> {}", report_path.display());
    Ok(())
}
