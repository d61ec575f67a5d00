//! End-to-end exercise of the `repforge` binary: synth -> ingest -> segment
//! -> features -> label -> evaluate (both modes) -> report -> train ->
//! inspect, all inside a temp directory, plus determinism and error-path
//! checks.

use std::path::Path;
use std::process::{Command, Output};

fn repforge(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repforge"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("failed to spawn repforge")
}

fn run_ok(args: &[&str], dir: &Path) -> String {
    let out = repforge(args, dir);
    assert!(
        out.status.success(),
        "repforge {args:?} failed:\n{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn has_provenance(path: &Path) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(
        text.starts_with("# config_hash="),
        "{}: missing config hash comment",
        path.display()
    );
    assert!(
        text.lines().nth(1).is_some_and(|l| l.starts_with("# seed=")),
        "{}: missing seed comment",
        path.display()
    );
}

#[test]
fn full_pipeline_on_synthetic_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("run.conf"),
        "seed=7\n\
         synth.sets=6\n\
         tsne.iters=250\n\
         tsne.perplexity=12\n\
         labels.k_max=5\n\
         forest.n_trees=40\n\
         estimator.n_trees=20\n\
         gbt.rounds=25\n\
         experiment.models=rf,gbt_regress\n\
         experiment.folds=4\n",
    )
    .unwrap();
    let cfg = &["--config", "run.conf", "--out", "out"][..];
    fn with_cfg<'a>(cmd: &[&'a str], cfg: &[&'a str]) -> Vec<&'a str> {
        [cmd, cfg].concat()
    }

    run_ok(&with_cfg(&["synth"], cfg), dir);
    run_ok(&with_cfg(&["ingest"], cfg), dir);
    run_ok(&with_cfg(&["segment"], cfg), dir);
    run_ok(&with_cfg(&["features"], cfg), dir);
    run_ok(&with_cfg(&["label"], cfg), dir);
    run_ok(&with_cfg(&["evaluate", "--emg-mode", "off"], cfg), dir);
    run_ok(&with_cfg(&["evaluate", "--emg-mode", "estimated"], cfg), dir);
    run_ok(&with_cfg(&["report"], cfg), dir);
    run_ok(
        &with_cfg(&["train", "--model", "rf", "--emg-mode", "estimated"], cfg),
        dir,
    );

    for name in [
        "sets.csv",
        "reps.csv",
        "rejects.csv",
        "rep_features.csv",
        "emg_labels.csv",
        "eval_off.csv",
        "eval_estimated.csv",
        "report.csv",
        "impact.csv",
        "confusion_rf_off.csv",
        "importance_rf_off.csv",
        "model_rf.txt",
    ] {
        let path = dir.join("out").join(name);
        assert!(path.exists(), "missing {name}");
        has_provenance(&path);
    }

    // report.csv holds aggregate rows for each model x emg_mode
    let report = std::fs::read_to_string(dir.join("out/report.csv")).unwrap();
    for model in ["rf", "gbt_regress"] {
        for mode in ["off", "estimated"] {
            assert!(
                report
                    .lines()
                    .any(|l| l.starts_with(&format!("{model},{mode},aggregate,"))),
                "report.csv missing aggregate row for {model}/{mode}"
            );
        }
    }

    // inspect prints hyperparameters and a ranked importance table
    let inspect = run_ok(&["model", "inspect", "out/model_rf.txt"], dir);
    assert!(inspect.contains("kind: forest"));
    assert!(inspect.contains("importance:"));

    // reruns with the same config and seed are byte-identical
    let before = std::fs::read(dir.join("out/eval_off.csv")).unwrap();
    run_ok(&with_cfg(&["evaluate", "--emg-mode", "off"], cfg), dir);
    let after = std::fs::read(dir.join("out/eval_off.csv")).unwrap();
    assert_eq!(before, after, "rerun changed eval_off.csv");

    // --skip-fresh is a no-op for an up-to-date stage
    let out = run_ok(&with_cfg(&["features", "--skip-fresh"], cfg), dir);
    assert!(out.contains("skipping"), "skip-fresh did not skip: {out}");

    // a missing prior stage is a clean machine-readable failure
    let out2 = repforge(
        &["evaluate", "--config", "run.conf", "--out", "out2", "--seed", "8", "--emg-mode", "off"],
        dir,
    );
    assert!(!out2.status.success());
    let err = String::from_utf8_lossy(&out2.stderr);
    assert!(
        err.starts_with("repforge-error\tcommand=evaluate"),
        "unexpected error line: {err}"
    );
}

#[test]
fn strict_segment_fails_on_quarantine() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("run.conf"), "seed=3\nsynth.sets=2\n").unwrap();
    let cfg = &["--config", "run.conf", "--out", "out"][..];
    run_ok(&[&["synth"][..], cfg].concat(), dir);

    // corrupt the annotations: claim one fewer rep for the first set
    let rpe_path = dir.join("out/rpe.csv");
    let text = std::fs::read_to_string(&rpe_path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let data_line = lines
        .iter()
        .position(|l| !l.starts_with('#') && l.contains(','))
        .unwrap()
        + 1;
    let row = lines[data_line].clone();
    let cut = row.rfind(|c: char| c.is_ascii_digit()).unwrap();
    lines[data_line] = format!("{},", &row[..cut]);
    std::fs::write(&rpe_path, lines.join("\n") + "\n").unwrap();

    // without --strict: exit 0, mismatch lands in rejects.csv
    run_ok(&[&["segment"][..], cfg].concat(), dir);
    let rejects = std::fs::read_to_string(dir.join("out/rejects.csv")).unwrap();
    let n_rejects = rejects.lines().filter(|l| l.contains(',') && !l.contains("set_id")).count();
    assert_eq!(n_rejects, 1, "expected one quarantined set:\n{rejects}");

    // with --strict: nonzero exit
    let out = repforge(&[&["segment", "--strict"][..], cfg].concat(), dir);
    assert!(!out.status.success(), "--strict did not fail");
}

#[test]
fn unknown_model_is_a_clean_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("run.conf"), "seed=1\n").unwrap();
    let out = repforge(
        &["train", "--config", "run.conf", "--out", "out", "--model", "svm"],
        dir,
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown model"), "stderr: {err}");
}
