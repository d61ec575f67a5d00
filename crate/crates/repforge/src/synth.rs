//! Synthetic bicep-curl sets with known ground truth: the desk-scale oracle
//! for segmentation, features, and end-to-end tests.
//!
//! Palm-axis acceleration is built from raised-cosine strokes, one per
//! phase, so jerk keeps a single sign inside each stroke and crosses zero
//! exactly at phase junctions. Breaks drift gently downward: the drift keeps
//! jerk pinned just below zero between reps, so additive noise cannot fake a
//! sign change there, and each eccentric stroke overshoots by the drift
//! amount so levels stay bounded across the set. Accelerometer noise is
//! band-limited (smoothed white noise); its jerk is calibrated to stay
//! inside the detector deadband, which is what keeps the oracle's correct
//! answer well-defined.

use std::path::Path;

use rand::Rng;

use crate::csvio::{fmt_f64, TableWriter};
use crate::dataio::{RawSet, Series, SetId, TriSeries, NOMINAL_EMG_HZ, NOMINAL_IMU_HZ};
use crate::dsp::rolling_average;
use crate::error::{Error, Result};
use crate::seeds::rng_for;

/// Drift slope during breaks, as a fraction of the peak concentric jerk.
/// Must exceed the 1% detector deadband by a comfortable noise margin.
const BREAK_DRIFT_FRACTION: f64 = 0.05;

/// Window (in IMU samples) of the moving average that band-limits the
/// accelerometer noise.
const NOISE_SMOOTH_SAMPLES: usize = 93;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub set_id: SetId,
    /// One RPE per rep, in order.
    pub rpe_schedule: Vec<u8>,
    pub base_con_s: f64,
    pub base_ecc_s: f64,
    /// Added eccentric seconds per RPE unit above 1.
    pub slowdown_s_per_rpe: f64,
    /// Uniform range for break durations between reps (and before rep 1).
    pub break_s: (f64, f64),
    pub stroke_amp_g: f64,
    /// Band-limited accelerometer noise, std in g.
    pub accel_noise_g: f64,
    pub gyro_noise_dps: f64,
    /// Baseline EMG noise floor, mV.
    pub emg_noise_mv: f64,
    /// EMG envelope mV per RPE unit; plants the monotone EMG-effort link.
    pub emg_rpe_gain: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            set_id: SetId {
                user_id: "S001".into(),
                weight_kg: 10,
                set_num: 1,
            },
            rpe_schedule: vec![3, 4, 5, 6, 7, 8],
            base_con_s: 1.2,
            base_ecc_s: 1.6,
            slowdown_s_per_rpe: 0.25,
            break_s: (1.0, 2.0),
            stroke_amp_g: 1.0,
            accel_noise_g: 1e-4,
            gyro_noise_dps: 0.5,
            emg_noise_mv: 0.05,
            emg_rpe_gain: 0.15,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rpe_schedule.is_empty() {
            return Err(Error::InvalidArgument("synth: empty RPE schedule".into()));
        }
        for &rpe in &self.rpe_schedule {
            if !(1..=10).contains(&rpe) {
                return Err(Error::InvalidArgument(format!(
                    "synth: RPE {rpe} out of range [1,10]"
                )));
            }
        }
        if self.base_con_s <= 0.0 || self.base_ecc_s <= 0.0 {
            return Err(Error::InvalidArgument("synth: durations must be > 0".into()));
        }
        if self.slowdown_s_per_rpe < 0.0 {
            return Err(Error::InvalidArgument("synth: slowdown must be ≥ 0".into()));
        }
        if !(self.break_s.0 > 0.0 && self.break_s.0 <= self.break_s.1) {
            return Err(Error::InvalidArgument("synth: bad break range".into()));
        }
        if self.stroke_amp_g <= 0.0 {
            return Err(Error::InvalidArgument("synth: stroke amplitude must be > 0".into()));
        }
        if self.accel_noise_g < 0.0 || self.gyro_noise_dps < 0.0 || self.emg_noise_mv < 0.0 {
            return Err(Error::InvalidArgument("synth: noise levels must be ≥ 0".into()));
        }
        Ok(())
    }

    pub fn ecc_s(&self, rpe: u8) -> f64 {
        self.base_ecc_s + self.slowdown_s_per_rpe * f64::from(rpe - 1)
    }
}

/// Ground truth emitted alongside each synthetic set, on the IMU grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SetTruth {
    pub set_id: SetId,
    /// Rep-opening indices plus the terminal boundary; length = reps + 1.
    pub boundaries: Vec<usize>,
    /// Concentric→eccentric junction per rep.
    pub midpoints: Vec<usize>,
    pub con_s: Vec<f64>,
    pub ecc_s: Vec<f64>,
}

enum SegKind {
    Linear,
    Cosine,
}

struct Seg {
    kind: SegKind,
    from: f64,
    to: f64,
    n: usize,
}

impl Seg {
    fn level(&self, j: usize) -> f64 {
        let u = j as f64 / self.n as f64;
        match self.kind {
            SegKind::Linear => self.from + (self.to - self.from) * u,
            SegKind::Cosine => {
                self.from
                    + (self.to - self.from) * 0.5 * (1.0 - (std::f64::consts::PI * u).cos())
            }
        }
    }
}

fn samples(duration_s: f64, fs: f64) -> usize {
    ((duration_s * fs).round() as usize).max(1)
}

pub fn generate_set(spec: &SynthSpec) -> Result<(RawSet, SetTruth)> {
    spec.validate()?;
    let fs = NOMINAL_IMU_HZ;
    let reps = spec.rpe_schedule.len();
    let rest = 0.0;
    let peak_jerk = spec.stroke_amp_g * std::f64::consts::PI / (2.0 * spec.base_con_s);
    let drift_slope = BREAK_DRIFT_FRACTION * peak_jerk;

    let mut rng = rng_for(spec.seed, &format!("synth/{}/layout", spec.set_id));
    let break_durations: Vec<f64> = (0..reps)
        .map(|_| rng.gen_range(spec.break_s.0..=spec.break_s.1))
        .collect();

    // segment list with per-rep truth indices
    let mut segs: Vec<Seg> = Vec::new();
    let mut cursor = 0usize;
    let mut boundaries = Vec::with_capacity(reps + 1);
    let mut midpoints = Vec::with_capacity(reps);
    let mut con_s = Vec::with_capacity(reps);
    let mut ecc_s = Vec::with_capacity(reps);
    for (i, &rpe) in spec.rpe_schedule.iter().enumerate() {
        // break before this rep: drift down to rest so jerk stays negative
        let n_break = samples(break_durations[i], fs);
        let overshoot = drift_slope * n_break as f64 / fs;
        segs.push(Seg {
            kind: SegKind::Linear,
            from: rest + overshoot,
            to: rest,
            n: n_break,
        });
        cursor += n_break;
        boundaries.push(cursor);

        let n_con = samples(spec.base_con_s, fs);
        segs.push(Seg {
            kind: SegKind::Cosine,
            from: rest,
            to: rest + spec.stroke_amp_g,
            n: n_con,
        });
        cursor += n_con;
        midpoints.push(cursor);
        con_s.push(n_con as f64 / fs);

        // eccentric ends above rest by the next break's drift budget
        let next_overshoot = if i + 1 < reps {
            drift_slope * samples(break_durations[i + 1], fs) as f64 / fs
        } else {
            0.0
        };
        let n_ecc = samples(spec.ecc_s(rpe), fs);
        segs.push(Seg {
            kind: SegKind::Cosine,
            from: rest + spec.stroke_amp_g,
            to: rest + next_overshoot,
            n: n_ecc,
        });
        cursor += n_ecc;
        ecc_s.push(n_ecc as f64 / fs);
    }
    // short constant tail; the terminal boundary is the last sample
    let n_tail = samples(0.2, fs);
    segs.push(Seg {
        kind: SegKind::Linear,
        from: rest,
        to: rest,
        n: n_tail,
    });
    cursor += n_tail;
    let n_imu = cursor;
    boundaries.push(n_imu - 1);

    // clean palm-axis profile on the IMU grid
    let mut palm = Vec::with_capacity(n_imu);
    for seg in &segs {
        for j in 0..seg.n {
            palm.push(seg.level(j));
        }
    }
    debug_assert_eq!(palm.len(), n_imu);

    let band_limited_noise = |rng: &mut rand_chacha::ChaCha8Rng, n: usize, std: f64| -> Vec<f64> {
        if std == 0.0 {
            return vec![0.0; n];
        }
        let scale = std * (NOISE_SMOOTH_SAMPLES as f64).sqrt();
        let white: Vec<f64> = (0..n).map(|_| scale * gaussian(rng)).collect();
        rolling_average(&white, NOISE_SMOOTH_SAMPLES.min(n | 1)).unwrap()
    };

    let mut rng = rng_for(spec.seed, &format!("synth/{}/accel", spec.set_id));
    let ax: Vec<f64> = palm
        .iter()
        .zip(band_limited_noise(&mut rng, n_imu, spec.accel_noise_g))
        .map(|(p, e)| p + e)
        .collect();
    let ay: Vec<f64> = palm
        .iter()
        .zip(band_limited_noise(&mut rng, n_imu, spec.accel_noise_g))
        .map(|(p, e)| 0.3 * (p - rest) + e)
        .collect();
    let az: Vec<f64> = palm
        .iter()
        .zip(band_limited_noise(&mut rng, n_imu, spec.accel_noise_g))
        .map(|(p, e)| 1.0 - 0.2 * (p - rest) + e)
        .collect();

    // gyro tracks the angular motion: proportional to the profile's slope
    let mut rng = rng_for(spec.seed, &format!("synth/{}/gyro", spec.set_id));
    let slope: Vec<f64> = (0..n_imu)
        .map(|i| {
            let a = palm[i.saturating_sub(1)];
            let b = palm[(i + 1).min(n_imu - 1)];
            (b - a) * fs * 0.5
        })
        .collect();
    let gx: Vec<f64> = slope
        .iter()
        .map(|s| 40.0 * s + spec.gyro_noise_dps * gaussian(&mut rng))
        .collect();
    let gy: Vec<f64> = slope
        .iter()
        .map(|s| -15.0 * s + spec.gyro_noise_dps * gaussian(&mut rng))
        .collect();
    let gz: Vec<f64> = (0..n_imu)
        .map(|_| 2.0 + spec.gyro_noise_dps * gaussian(&mut rng))
        .collect();

    let imu_t: Vec<f64> = (0..n_imu).map(|i| i as f64 / fs).collect();

    // EMG: amplitude-modulated noise; the envelope scales with each rep's RPE
    let total_s = n_imu as f64 / fs;
    let n_emg = (total_s * NOMINAL_EMG_HZ).round() as usize;
    let rep_windows: Vec<(f64, f64, u8)> = (0..reps)
        .map(|i| {
            (
                boundaries[i] as f64 / fs,
                (midpoints[i] as f64 + ecc_s[i] * fs) / fs,
                spec.rpe_schedule[i],
            )
        })
        .collect();
    let mut rng = rng_for(spec.seed, &format!("synth/{}/emg", spec.set_id));
    let mut emg_t = Vec::with_capacity(n_emg);
    let mut emg_v = Vec::with_capacity(n_emg);
    for k in 0..n_emg {
        let t = k as f64 / NOMINAL_EMG_HZ;
        let envelope = rep_windows
            .iter()
            .find(|&&(start, end, _)| t >= start && t < end)
            .map(|&(_, _, rpe)| 0.1 + spec.emg_rpe_gain * f64::from(rpe))
            .unwrap_or(0.02);
        emg_t.push(t);
        emg_v.push(envelope * gaussian(&mut rng) + spec.emg_noise_mv * gaussian(&mut rng));
    }

    let raw = RawSet {
        set_id: spec.set_id.clone(),
        emg: Series { t: emg_t, v: emg_v },
        accel: TriSeries {
            t: imu_t.clone(),
            axes: [ax, ay, az],
        },
        gyro: TriSeries {
            t: imu_t,
            axes: [gx, gy, gz],
        },
        rpe_annotations: spec.rpe_schedule.clone(),
    };
    raw.validate()?;
    let truth = SetTruth {
        set_id: spec.set_id.clone(),
        boundaries,
        midpoints,
        con_s,
        ecc_s,
    };
    Ok((raw, truth))
}

fn gaussian(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Per-corpus knobs; per-set specs are drawn from these ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub reps_range: (usize, usize),
    pub weights_kg: Vec<u32>,
    pub sets_per_user: usize,
    pub base: SynthSpec,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            reps_range: (10, 19),
            weights_kg: vec![5, 10, 15],
            sets_per_user: 3,
            base: SynthSpec::default(),
        }
    }
}

/// Deterministic corpus of `n_sets` sets. RPE schedules ramp upward within a
/// set (fatigue), with start and span drawn so the pooled distribution is
/// roughly bell-shaped over 3..=9.
pub fn generate_corpus(
    n_sets: usize,
    corpus: &CorpusSpec,
    seed: u64,
) -> Result<Vec<(RawSet, SetTruth)>> {
    if n_sets < 1 {
        return Err(Error::InvalidArgument("generate_corpus: need ≥ 1 set".into()));
    }
    if corpus.reps_range.0 < 1 || corpus.reps_range.0 > corpus.reps_range.1 {
        return Err(Error::InvalidArgument("generate_corpus: bad reps range".into()));
    }
    let mut out = Vec::with_capacity(n_sets);
    for i in 0..n_sets {
        let set_id = SetId {
            user_id: format!("U{:03}", i / corpus.sets_per_user + 1),
            weight_kg: corpus.weights_kg[i % corpus.weights_kg.len()],
            set_num: (i % corpus.sets_per_user) as u32 + 1,
        };
        let mut rng = rng_for(seed, &format!("corpus/{set_id}"));
        let reps = rng.gen_range(corpus.reps_range.0..=corpus.reps_range.1);
        let start = rng.gen_range(3..=5u32);
        let end = (start + rng.gen_range(2..=4u32)).min(9);
        let rpe_schedule: Vec<u8> = (0..reps)
            .map(|r| {
                let u = if reps > 1 { r as f64 / (reps - 1) as f64 } else { 0.0 };
                (start as f64 + u * (end - start) as f64).round() as u8
            })
            .collect();
        let spec = SynthSpec {
            set_id,
            rpe_schedule,
            seed: crate::seeds::derive_seed(seed, &format!("corpus/set{i}")),
            ..corpus.base.clone()
        };
        out.push(generate_set(&spec)?);
    }
    Ok(out)
}

/// Write a corpus in the dataio on-disk layout: per-set `<set_id>_emg.csv`
/// and `<set_id>_imu.csv` (no timestamp column; nominal rates apply),
/// a shared `rpe.csv`, and the ground-truth sidecar `truth.csv` whose index
/// lists are `;`-joined.
pub fn write_corpus(dir: &Path, corpus: &[(RawSet, SetTruth)], provenance: &[String]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let max_reps = corpus
        .iter()
        .map(|(raw, _)| raw.rpe_annotations.len())
        .max()
        .unwrap_or(0);
    let rpe_header: Vec<String> = std::iter::once("set_id".to_string())
        .chain((1..=max_reps).map(|i| format!("rpe_{i}")))
        .collect();
    let rpe_header_refs: Vec<&str> = rpe_header.iter().map(String::as_str).collect();
    let mut rpe_w = TableWriter::create(&dir.join("rpe.csv"), provenance, &rpe_header_refs)?;
    let mut truth_w = TableWriter::create(
        &dir.join("truth.csv"),
        provenance,
        &["set_id", "boundaries", "midpoints"],
    )?;

    for (raw, truth) in corpus {
        let id = raw.set_id.to_string();

        let mut w = TableWriter::create(&dir.join(format!("{id}_emg.csv")), provenance, &["emg_mv"])?;
        for v in &raw.emg.v {
            w.write_row(&[fmt_f64(*v)])?;
        }
        w.finish()?;

        let mut w = TableWriter::create(
            &dir.join(format!("{id}_imu.csv")),
            provenance,
            &["ax_g", "ay_g", "az_g", "gx_dps", "gy_dps", "gz_dps"],
        )?;
        for i in 0..raw.accel.t.len() {
            w.write_row(&[
                fmt_f64(raw.accel.axes[0][i]),
                fmt_f64(raw.accel.axes[1][i]),
                fmt_f64(raw.accel.axes[2][i]),
                fmt_f64(raw.gyro.axes[0][i]),
                fmt_f64(raw.gyro.axes[1][i]),
                fmt_f64(raw.gyro.axes[2][i]),
            ])?;
        }
        w.finish()?;

        let mut rpe_row = vec![id.clone()];
        rpe_row.extend(raw.rpe_annotations.iter().map(u8::to_string));
        rpe_row.resize(rpe_header.len(), String::new());
        rpe_w.write_row(&rpe_row)?;

        let join = |v: &[usize]| {
            v.iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(";")
        };
        truth_w.write_row(&[id, join(&truth.boundaries), join(&truth.midpoints)])?;
    }
    rpe_w.finish()?;
    truth_w.finish()
}

/// Read back a `truth.csv` sidecar.
pub fn read_truth(path: &Path) -> Result<Vec<SetTruth>> {
    let table = crate::csvio::read_table(path)?;
    let parse_list = |field: &str| -> Result<Vec<usize>> {
        field
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::Parse(format!("truth index {s:?}")))
            })
            .collect()
    };
    table
        .rows
        .iter()
        .map(|row| {
            if row.len() != 3 {
                return Err(Error::Parse("truth.csv: expected 3 columns".into()));
            }
            Ok(SetTruth {
                set_id: SetId::parse(&row[0])?,
                boundaries: parse_list(&row[1])?,
                midpoints: parse_list(&row[2])?,
                con_s: Vec::new(),
                ecc_s: Vec::new(),
            })
        })
        .collect()
}

/// View a synthetic set as an [`AlignedSet`] without filtering or
/// smoothing: IMU channels are already on a uniform grid; EMG is
/// resampled onto it. Segmentation oracles run on this directly.
pub fn truth_aligned(raw: &RawSet) -> Result<crate::dsp::AlignedSet> {
    let emg = crate::dsp::resample_to(&raw.emg.v, &raw.emg.t, &raw.accel.t)?;
    Ok(crate::dsp::AlignedSet {
        set_id: raw.set_id.clone(),
        t: raw.accel.t.clone(),
        emg,
        accel: raw.accel.axes.clone(),
        gyro: raw.gyro.axes.clone(),
        fs: NOMINAL_IMU_HZ,
        rpe_annotations: raw.rpe_annotations.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::PalmAxisConfig;
    use crate::segmentation::{segment_set, DEFAULT_MIN_GAP_S};

    #[test]
    fn truth_counts_match_schedule() {
        let spec = SynthSpec {
            rpe_schedule: vec![4; 8],
            ..Default::default()
        };
        let (raw, truth) = generate_set(&spec).unwrap();
        assert_eq!(truth.midpoints.len(), 8);
        assert_eq!(truth.boundaries.len(), 9);
        assert_eq!(raw.rpe_annotations.len(), 8);
        assert_eq!(*truth.boundaries.last().unwrap(), raw.accel.t.len() - 1);
        for i in 0..8 {
            assert!(truth.boundaries[i] < truth.midpoints[i]);
            assert!(truth.midpoints[i] < truth.boundaries[i + 1]);
        }
    }

    #[test]
    fn slowdown_formula() {
        let spec = SynthSpec {
            rpe_schedule: vec![2, 9],
            slowdown_s_per_rpe: 0.3,
            ..Default::default()
        };
        let (_, truth) = generate_set(&spec).unwrap();
        let diff = truth.ecc_s[1] - truth.ecc_s[0];
        assert!(
            (diff - 2.1).abs() <= 2.0 / NOMINAL_IMU_HZ,
            "eccentric slowdown {diff}"
        );
    }

    #[test]
    fn zero_noise_segmentation_recovers_boundaries() {
        let spec = SynthSpec {
            rpe_schedule: vec![3, 5, 7, 9],
            accel_noise_g: 0.0,
            gyro_noise_dps: 0.0,
            seed: 11,
            ..Default::default()
        };
        let (raw, truth) = generate_set(&spec).unwrap();
        let aligned = truth_aligned(&raw).unwrap();
        let reps = segment_set(&aligned, &PalmAxisConfig::default(), DEFAULT_MIN_GAP_S).unwrap();
        assert_eq!(reps.len(), 4);
        for (i, rep) in reps.iter().enumerate() {
            let err = rep.start_idx.abs_diff(truth.boundaries[i]);
            assert!(err <= 2, "rep {i} start error {err} samples");
        }
    }

    #[test]
    fn emg_envelope_monotone_in_rpe() {
        let spec = SynthSpec {
            rpe_schedule: (1..=10).collect(),
            seed: 3,
            ..Default::default()
        };
        let (raw, truth) = generate_set(&spec).unwrap();
        let fs = NOMINAL_IMU_HZ;
        let mut last = 0.0;
        for i in 0..10 {
            let start = truth.boundaries[i] as f64 / fs;
            let end = start + truth.con_s[i] + truth.ecc_s[i];
            let window: Vec<f64> = raw
                .emg
                .t
                .iter()
                .zip(&raw.emg.v)
                .filter(|(t, _)| **t >= start && **t < end)
                .map(|(_, v)| v.abs())
                .collect();
            let mean = window.iter().sum::<f64>() / window.len() as f64;
            assert!(mean > last, "rep {i}: envelope {mean} not above {last}");
            last = mean;
        }
    }

    #[test]
    fn corpus_reproducible_and_scaled() {
        let corpus_spec = CorpusSpec::default();
        let a = generate_corpus(6, &corpus_spec, 42).unwrap();
        let b = generate_corpus(6, &corpus_spec, 42).unwrap();
        assert_eq!(a.len(), 6);
        for ((ra, ta), (rb, tb)) in a.iter().zip(&b) {
            assert_eq!(ra, rb);
            assert_eq!(ta, tb);
        }
        // distinct seeds per set
        assert_ne!(a[0].0.accel.axes[0], a[1].0.accel.axes[0]);
        let ids: std::collections::BTreeSet<String> =
            a.iter().map(|(r, _)| r.set_id.to_string()).collect();
        assert_eq!(ids.len(), 6);
    }

    #[test]
    fn corpus_round_trips_through_dataio() {
        let dir = std::env::temp_dir().join(format!("repforge-synth-{}", std::process::id()));
        let corpus = generate_corpus(2, &CorpusSpec::default(), 7).unwrap();
        write_corpus(&dir, &corpus, &[]).unwrap();

        let cfg = crate::config::KvConfig::new();
        let sets = crate::dataio::list_annotated_sets(&dir.join("rpe.csv")).unwrap();
        assert_eq!(sets.len(), 2);
        for (raw, _) in &corpus {
            let id = raw.set_id.to_string();
            let reloaded = crate::dataio::load_set(
                &dir.join(format!("{id}_emg.csv")),
                &dir.join(format!("{id}_imu.csv")),
                &dir.join("rpe.csv"),
                &raw.set_id,
                &cfg,
            )
            .unwrap();
            assert_eq!(reloaded.rpe_annotations, raw.rpe_annotations);
            assert_eq!(reloaded.emg.v.len(), raw.emg.v.len());
            for (x, y) in reloaded.accel.axes[0].iter().zip(&raw.accel.axes[0]) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        let truth = read_truth(&dir.join("truth.csv")).unwrap();
        assert_eq!(truth.len(), 2);
        assert_eq!(truth[0].boundaries, corpus[0].1.boundaries);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = SynthSpec {
            rpe_schedule: vec![],
            ..Default::default()
        };
        assert!(generate_set(&spec).is_err());
        spec.rpe_schedule = vec![11];
        assert!(generate_set(&spec).is_err());
        spec.rpe_schedule = vec![5];
        spec.break_s = (2.0, 1.0);
        assert!(generate_set(&spec).is_err());
    }
}
