//! Per-repetition feature extraction.
//!
//! Each repetition yields a fixed 55-entry IMU feature vector and a 9-entry
//! EMG feature vector. The schema is versioned; the exact column names and
//! their order are defined here and nowhere else.
//!
//! IMU ledger (55):
//! - phase durations: concentric, eccentric, total (3)
//! - accelerometer {x,y,z} × phase {con,ecc} × {mean, std, range, min, max} (30)
//! - palm-axis jerk × phase {con,ecc} × {mean, std, range, min, max} (10)
//! - accelerometer smoothness R² per axis over the whole rep (3)
//! - gyroscope {x,y,z} × {mean, std, R²} (9)
//!
//! EMG ledger (9): mean, mean absolute value, RMS, variance, zero-crossing
//! count, peak amplitude, waveform length, integrated absolute value, slope
//! sign changes.

use crate::dataio::PalmAxisConfig;
use crate::dsp::AlignedSet;
use crate::error::{Error, Result};
use crate::segmentation::{jerk, RepSegment};

pub const SCHEMA_VERSION: &str = "imu55-emg9-v1";

pub const IMU_FEATURE_COUNT: usize = 55;
pub const EMG_FEATURE_COUNT: usize = 9;

/// Polynomial degree used by the smoothness R² features.
pub const SMOOTHNESS_DEGREE: usize = 3;

const AXES: [&str; 3] = ["x", "y", "z"];
const PHASES: [&str; 2] = ["con", "ecc"];
const STATS: [&str; 5] = ["mean", "std", "range", "min", "max"];

/// Column names of the IMU feature vector, in emission order.
pub fn imu_feature_names() -> Vec<String> {
    let mut names = vec![
        "concentric_time".to_string(),
        "eccentric_time".to_string(),
        "total_time".to_string(),
    ];
    for axis in AXES {
        for phase in PHASES {
            for stat in STATS {
                names.push(format!("accel_{axis}_{phase}_{stat}"));
            }
        }
    }
    for phase in PHASES {
        for stat in STATS {
            names.push(format!("jerk_palm_{phase}_{stat}"));
        }
    }
    for axis in AXES {
        names.push(format!("accel_{axis}_smoothness_r2"));
    }
    for axis in AXES {
        for stat in ["mean", "std", "r2"] {
            names.push(format!("gyro_{axis}_{stat}"));
        }
    }
    debug_assert_eq!(names.len(), IMU_FEATURE_COUNT);
    names
}

/// Column names of the EMG feature vector, in emission order.
pub fn emg_feature_names() -> Vec<String> {
    [
        "emg_mean",
        "emg_mav",
        "emg_rms",
        "emg_variance",
        "emg_zero_crossings",
        "emg_peak_amplitude",
        "emg_waveform_length",
        "emg_integrated_abs",
        "emg_slope_sign_changes",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImuFeatureVector {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmgFeatureVector {
    pub values: Vec<f64>,
}

/// Concentric and eccentric index ranges of a rep, plus their durations in
/// seconds. Concentric is `[start, mid)`, eccentric `[mid, end]`; the
/// durations are index differences over `fs`, so they sum to the total
/// exactly.
pub struct PhaseSplit {
    pub concentric: std::ops::Range<usize>,
    pub eccentric: std::ops::RangeInclusive<usize>,
    pub concentric_s: f64,
    pub eccentric_s: f64,
    pub total_s: f64,
}

pub fn phase_split(rep: &RepSegment, fs: f64) -> PhaseSplit {
    PhaseSplit {
        concentric: rep.start_idx..rep.mid_idx,
        eccentric: rep.mid_idx..=rep.end_idx,
        concentric_s: (rep.mid_idx - rep.start_idx) as f64 / fs,
        eccentric_s: (rep.end_idx - rep.mid_idx) as f64 / fs,
        total_s: (rep.end_idx - rep.start_idx) as f64 / fs,
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

fn std_dev(v: &[f64]) -> f64 {
    variance(v).sqrt()
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    })
}

/// mean, std, range, min, max — the STATS block order.
fn stat_block(v: &[f64]) -> [f64; 5] {
    let (lo, hi) = min_max(v);
    [mean(v), std_dev(v), hi - lo, lo, hi]
}

/// Coefficient of determination of a least-squares polynomial fit of the
/// given degree over normalized time in `[0, 1]`. Returns 1 when the signal
/// has zero variance (a constant is fit perfectly by convention).
pub fn smoothness_r2(signal: &[f64], degree: usize) -> Result<f64> {
    let n = signal.len();
    if n <= degree + 1 {
        return Err(Error::InvalidArgument(format!(
            "smoothness_r2: {n} samples too few for degree {degree}"
        )));
    }
    let sig_mean = mean(signal);
    let ss_tot: f64 = signal.iter().map(|y| (y - sig_mean) * (y - sig_mean)).sum();
    if ss_tot == 0.0 {
        return Ok(1.0);
    }

    // normal equations for the Vandermonde system in normalized time
    let p = degree + 1;
    let ts: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut ata = vec![vec![0.0; p]; p];
    let mut atb = vec![0.0; p];
    for (&t, &y) in ts.iter().zip(signal) {
        let mut powers = Vec::with_capacity(p);
        let mut acc = 1.0;
        for _ in 0..p {
            powers.push(acc);
            acc *= t;
        }
        for i in 0..p {
            for j in 0..p {
                ata[i][j] += powers[i] * powers[j];
            }
            atb[i] += powers[i] * y;
        }
    }
    let coeffs = solve_linear(&mut ata, &mut atb)?;

    let ss_res: f64 = ts
        .iter()
        .zip(signal)
        .map(|(&t, &y)| {
            let mut fit = 0.0;
            let mut acc = 1.0;
            for c in &coeffs {
                fit += c * acc;
                acc *= t;
            }
            (y - fit) * (y - fit)
        })
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Gaussian elimination with partial pivoting; consumes its inputs.
fn solve_linear(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Data("solve_linear: singular system".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// Extract the 55 IMU features of one rep.
pub fn extract_imu_features(
    set: &AlignedSet,
    rep: &RepSegment,
    palm: &PalmAxisConfig,
) -> Result<ImuFeatureVector> {
    let split = phase_split(rep, set.fs);
    if split.concentric.is_empty() {
        return Err(Error::Data(format!("{}: empty concentric phase", rep.rep_id)));
    }

    let mut values = vec![split.concentric_s, split.eccentric_s, split.total_s];

    for axis in 0..3 {
        let channel = &set.accel[axis];
        values.extend(stat_block(&channel[split.concentric.clone()]));
        values.extend(stat_block(&channel[split.eccentric.clone()]));
    }

    let palm_accel: Vec<f64> = rep
        .accel_axis(set, palm.axis_index)
        .iter()
        .map(|v| v * f64::from(palm.sign))
        .collect();
    let rep_jerk = jerk(&palm_accel, set.fs)?;
    let mid_offset = rep.mid_idx - rep.start_idx;
    values.extend(stat_block(&rep_jerk[..mid_offset]));
    values.extend(stat_block(&rep_jerk[mid_offset..]));

    for axis in 0..3 {
        values.push(smoothness_r2(rep.accel_axis(set, axis), SMOOTHNESS_DEGREE)?);
    }
    for axis in 0..3 {
        let channel = rep.gyro_axis(set, axis);
        values.push(mean(channel));
        values.push(std_dev(channel));
        values.push(smoothness_r2(channel, SMOOTHNESS_DEGREE)?);
    }

    debug_assert_eq!(values.len(), IMU_FEATURE_COUNT);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data(format!("{}: non-finite IMU feature", rep.rep_id)));
    }
    Ok(ImuFeatureVector { values })
}

/// Extract the 9 EMG features of one rep.
pub fn extract_emg_features(set: &AlignedSet, rep: &RepSegment) -> Result<EmgFeatureVector> {
    let window = rep.emg(set);
    extract_emg_features_from(window, &rep.rep_id)
}

pub fn extract_emg_features_from(window: &[f64], rep_id: &str) -> Result<EmgFeatureVector> {
    if window.is_empty() {
        return Err(Error::Data(format!("{rep_id}: empty EMG window")));
    }
    let m = mean(window);
    let mav = window.iter().map(|x| x.abs()).sum::<f64>() / window.len() as f64;
    let rms = (window.iter().map(|x| x * x).sum::<f64>() / window.len() as f64).sqrt();
    let var = variance(window);
    let peak = window.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let waveform_length: f64 = window.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let integrated_abs: f64 = window.iter().map(|x| x.abs()).sum();

    // zero crossings on the mean-removed signal, ignoring excursions inside
    // a deadband of 5% RMS
    let centered: Vec<f64> = window.iter().map(|x| x - m).collect();
    let centered_rms = (centered.iter().map(|x| x * x).sum::<f64>() / centered.len() as f64).sqrt();
    let deadband = 0.05 * centered_rms;
    let mut zero_crossings = 0u64;
    let mut prev_sign = 0i8;
    for &x in &centered {
        if x.abs() < deadband || x == 0.0 {
            continue;
        }
        let sign = if x > 0.0 { 1 } else { -1 };
        if prev_sign != 0 && sign != prev_sign {
            zero_crossings += 1;
        }
        prev_sign = sign;
    }

    let mut slope_sign_changes = 0u64;
    let mut prev_slope = 0i8;
    for w in window.windows(2) {
        let d = w[1] - w[0];
        if d == 0.0 {
            continue;
        }
        let slope = if d > 0.0 { 1 } else { -1 };
        if prev_slope != 0 && slope != prev_slope {
            slope_sign_changes += 1;
        }
        prev_slope = slope;
    }

    let values = vec![
        m,
        mav,
        rms,
        var,
        zero_crossings as f64,
        peak,
        waveform_length,
        integrated_abs,
        slope_sign_changes as f64,
    ];
    debug_assert_eq!(values.len(), EMG_FEATURE_COUNT);
    Ok(EmgFeatureVector { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::SetId;

    fn toy_set(n: usize, fs: f64) -> AlignedSet {
        AlignedSet {
            set_id: SetId::parse("A321_15_9").unwrap(),
            t: (0..n).map(|i| i as f64 / fs).collect(),
            emg: vec![0.0; n],
            accel: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            gyro: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            fs,
            rpe_annotations: vec![5],
        }
    }

    fn toy_rep(start: usize, mid: usize, end: usize) -> RepSegment {
        RepSegment {
            rep_id: "A321_15_9_1".into(),
            start_idx: start,
            mid_idx: mid,
            end_idx: end,
            rpe: 5,
        }
    }

    #[test]
    fn schema_sizes() {
        assert_eq!(imu_feature_names().len(), 55);
        assert_eq!(emg_feature_names().len(), 9);
    }

    #[test]
    fn phase_split_durations_sum_exactly() {
        let rep = toy_rep(10, 110, 310);
        let split = phase_split(&rep, 100.0);
        assert_eq!(split.concentric_s, 1.0);
        assert_eq!(split.eccentric_s, 2.0);
        assert_eq!(split.concentric_s + split.eccentric_s, split.total_s);
    }

    #[test]
    fn phase_split_symmetric_mid() {
        let rep = toy_rep(0, 50, 100);
        let split = phase_split(&rep, 100.0);
        assert_eq!(split.concentric_s, split.eccentric_s);
    }

    #[test]
    fn phase_split_degenerate_mid() {
        let rep = toy_rep(0, 1, 100);
        let split = phase_split(&rep, 100.0);
        assert!((split.concentric_s - 0.01).abs() < 1e-12);
    }

    #[test]
    fn smoothness_r2_exact_cubic() {
        let signal: Vec<f64> = (0..100)
            .map(|i| {
                let t = i as f64 / 99.0;
                2.0 * t * t * t - t * t + 0.5
            })
            .collect();
        let r2 = smoothness_r2(&signal, 3).unwrap();
        assert!((r2 - 1.0).abs() < 1e-9, "r2={r2}");
    }

    #[test]
    fn smoothness_r2_constant_is_one() {
        assert_eq!(smoothness_r2(&[4.0; 30], 3).unwrap(), 1.0);
    }

    #[test]
    fn smoothness_r2_noise_near_zero() {
        use rand::Rng;
        let mut rng = crate::seeds::rng_for(7, "r2-noise");
        let signal: Vec<f64> = (0..500).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r2 = smoothness_r2(&signal, 3).unwrap();
        assert!(r2 < 0.1, "white noise r2={r2}");
    }

    #[test]
    fn smoothness_r2_needs_samples() {
        assert!(smoothness_r2(&[1.0, 2.0, 3.0], 3).is_err());
    }

    #[test]
    fn imu_features_constant_channels() {
        let fs = 100.0;
        let mut set = toy_set(300, fs);
        for axis in 0..3 {
            set.accel[axis] = vec![(axis as f64) + 1.0; 300];
        }
        let rep = toy_rep(0, 100, 299);
        let fv = extract_imu_features(&set, &rep, &PalmAxisConfig::default()).unwrap();
        assert_eq!(fv.values.len(), 55);
        let names = imu_feature_names();
        for (name, value) in names.iter().zip(&fv.values) {
            if name.starts_with("accel_") && (name.ends_with("_std") || name.ends_with("_range")) {
                assert_eq!(*value, 0.0, "{name}");
            }
            if name.starts_with("accel_x") && !name.contains("smoothness") {
                if name.ends_with("_mean") || name.ends_with("_min") || name.ends_with("_max") {
                    assert!((*value - 1.0).abs() < 1e-12, "{name}={value}");
                }
            }
        }
    }

    #[test]
    fn imu_sine_stats_match_analytic() {
        let fs = 100.0;
        let n = 401;
        let mut set = toy_set(n, fs);
        // whole periods of a unit sine on each phase: mean 0, std 1/sqrt(2)
        set.accel[1] = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * 5.0 * i as f64 / fs).sin())
            .collect();
        let rep = toy_rep(0, 200, 400);
        let fv = extract_imu_features(&set, &rep, &PalmAxisConfig::default()).unwrap();
        let names = imu_feature_names();
        let get = |name: &str| fv.values[names.iter().position(|n| n == name).unwrap()];
        assert!(get("accel_y_con_mean").abs() < 0.01);
        assert!((get("accel_y_con_std") - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.01);
        assert!((get("accel_y_ecc_std") - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.01);
    }

    #[test]
    fn emg_features_constant_window() {
        let fv = extract_emg_features_from(&[-2.0; 50], "t").unwrap();
        let names = emg_feature_names();
        let get = |name: &str| fv.values[names.iter().position(|n| n == name).unwrap()];
        assert_eq!(get("emg_mean"), -2.0);
        assert_eq!(get("emg_rms"), 2.0);
        assert_eq!(get("emg_variance"), 0.0);
        assert_eq!(get("emg_zero_crossings"), 0.0);
        assert_eq!(get("emg_peak_amplitude"), 2.0);
        assert_eq!(get("emg_slope_sign_changes"), 0.0);
    }

    #[test]
    fn emg_sine_zero_crossings_and_rms() {
        let fs = 1000.0;
        let periods = 10;
        let amplitude = 3.0;
        // 1 Hz tone, N full periods; cosine phase puts all 2N zero
        // crossings strictly inside the window
        let n = (periods as f64 * fs) as usize;
        let window: Vec<f64> = (0..n)
            .map(|i| amplitude * (2.0 * std::f64::consts::PI * i as f64 / fs).cos())
            .collect();
        let fv = extract_emg_features_from(&window, "t").unwrap();
        let names = emg_feature_names();
        let get = |name: &str| fv.values[names.iter().position(|n| n == name).unwrap()];
        assert_eq!(get("emg_zero_crossings"), (2 * periods) as f64);
        let want_rms = amplitude * std::f64::consts::FRAC_1_SQRT_2;
        assert!((get("emg_rms") - want_rms).abs() / want_rms < 0.01);
        assert_eq!(fv.values.len(), 9);
    }

    #[test]
    fn scale_equivariance() {
        let window: Vec<f64> = (0..200)
            .map(|i| (i as f64 * 0.37).sin() + 0.2 * (i as f64 * 1.7).cos())
            .collect();
        let scaled: Vec<f64> = window.iter().map(|x| 2.5 * x).collect();
        let a = extract_emg_features_from(&window, "t").unwrap();
        let b = extract_emg_features_from(&scaled, "t").unwrap();
        let names = emg_feature_names();
        for (i, name) in names.iter().enumerate() {
            match name.as_str() {
                "emg_zero_crossings" | "emg_slope_sign_changes" => {
                    assert_eq!(a.values[i], b.values[i], "{name}")
                }
                "emg_variance" => {
                    assert!((b.values[i] - 6.25 * a.values[i]).abs() < 1e-9, "{name}")
                }
                _ => assert!(
                    (b.values[i] - 2.5 * a.values[i]).abs() < 1e-9,
                    "{name}: {} vs {}",
                    b.values[i],
                    a.values[i]
                ),
            }
        }
    }

    #[test]
    fn empty_emg_window_rejected() {
        assert!(extract_emg_features_from(&[], "t").is_err());
    }
}
