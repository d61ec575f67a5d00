//! Sampling-rate estimation, anti-alias filtering, resampling of EMG onto
//! the IMU timeline, and smoothing.
//!
//! The alignment order is fixed: low-pass filter the EMG, resample it onto
//! the IMU timestamps, then smooth every channel with a centered rolling
//! average. Filtering is zero-phase (forward-backward) so repetition
//! boundaries are not shifted.

use crate::config::KvConfig;
use crate::dataio::RawSet;
use crate::dataio::SetId;
use crate::error::{Error, Result};

/// One set with all channels on the shared IMU timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSet {
    pub set_id: SetId,
    pub t: Vec<f64>,
    pub emg: Vec<f64>,
    pub accel: [Vec<f64>; 3],
    pub gyro: [Vec<f64>; 3],
    pub fs: f64,
    pub rpe_annotations: Vec<u8>,
}

impl AlignedSet {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Filter and smoothing parameters, overridable via `dsp.*` config keys.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DspParams {
    /// Anti-alias cutoff; `None` means 0.45 × IMU rate, just below the
    /// post-resampling Nyquist.
    pub cutoff_hz: Option<f64>,
    pub order: usize,
    pub smooth_s: f64,
}

impl Default for DspParams {
    fn default() -> Self {
        DspParams {
            cutoff_hz: None,
            order: 4,
            smooth_s: 0.25,
        }
    }
}

impl DspParams {
    pub fn from_config(cfg: &KvConfig) -> Result<Self> {
        Ok(DspParams {
            cutoff_hz: cfg.get_f64("dsp.cutoff_hz")?,
            order: cfg.get_usize_or("dsp.order", 4)?,
            smooth_s: cfg.get_f64_or("dsp.smooth_s", 0.25)?,
        })
    }
}

/// Effective sampling rate as the reciprocal of the median successive
/// timestamp difference. The median makes the estimate robust to isolated
/// gaps in the recording.
pub fn estimate_rate(timestamps: &[f64]) -> Result<f64> {
    if timestamps.len() < 2 {
        return Err(Error::InvalidArgument(
            "estimate_rate: need at least 2 samples".into(),
        ));
    }
    let mut diffs: Vec<f64> = timestamps.windows(2).map(|w| w[1] - w[0]).collect();
    if diffs.iter().any(|d| *d <= 0.0) {
        return Err(Error::InvalidArgument(
            "estimate_rate: timestamps not strictly increasing".into(),
        ));
    }
    diffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = diffs.len();
    let median = if n % 2 == 1 {
        diffs[n / 2]
    } else {
        0.5 * (diffs[n / 2 - 1] + diffs[n / 2])
    };
    Ok(1.0 / median)
}

#[derive(Debug, Clone, Copy)]
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    /// Direct form II transposed. State starts at the steady state for a
    /// constant input equal to the first sample, so constant signals pass
    /// through exactly and edge transients stay small.
    fn run(&self, signal: &mut [f64]) {
        if signal.is_empty() {
            return;
        }
        let gain = (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2);
        let x0 = signal[0];
        let mut z1 = (gain - self.b0) * x0;
        let mut z2 = (self.b2 - self.a2 * gain) * x0;
        for x in signal.iter_mut() {
            let input = *x;
            let y = self.b0 * input + z1;
            z1 = self.b1 * input - self.a1 * y + z2;
            z2 = self.b2 * input - self.a2 * y;
            *x = y;
        }
    }
}

/// Butterworth low-pass sections via bilinear transform with pre-warping,
/// so the digital −3 dB point lands exactly on `cutoff`.
fn butterworth_sections(order: usize, fs: f64, cutoff: f64) -> Vec<Biquad> {
    let warped = 2.0 * fs * (std::f64::consts::PI * cutoff / fs).tan();
    let k = 2.0 * fs;
    let mut sections = Vec::new();
    let n = order;
    for i in 0..n / 2 {
        // conjugate analog pole pair at angle theta from the negative real axis
        let theta = std::f64::consts::PI * (2 * i + 1) as f64 / (2 * n) as f64
            + std::f64::consts::FRAC_PI_2;
        let a1s = -2.0 * warped * theta.cos();
        let a0 = k * k + a1s * k + warped * warped;
        sections.push(Biquad {
            b0: warped * warped / a0,
            b1: 2.0 * warped * warped / a0,
            b2: warped * warped / a0,
            a1: (2.0 * warped * warped - 2.0 * k * k) / a0,
            a2: (k * k - a1s * k + warped * warped) / a0,
        });
    }
    if n % 2 == 1 {
        let a0 = k + warped;
        sections.push(Biquad {
            b0: warped / a0,
            b1: warped / a0,
            b2: 0.0,
            a1: (warped - k) / a0,
            a2: 0.0,
        });
    }
    sections
}

fn check_filter_args(signal_len: usize, fs: f64, cutoff: f64, order: usize) -> Result<()> {
    if order < 1 {
        return Err(Error::InvalidArgument("butterworth: order must be ≥ 1".into()));
    }
    if !(cutoff > 0.0 && cutoff < fs / 2.0) {
        return Err(Error::InvalidArgument(format!(
            "butterworth: cutoff {cutoff} Hz outside (0, Nyquist {} Hz)",
            fs / 2.0
        )));
    }
    if signal_len == 0 {
        return Err(Error::InvalidArgument("butterworth: empty signal".into()));
    }
    Ok(())
}

fn run_cascade(sections: &[Biquad], signal: &mut [f64]) {
    for s in sections {
        s.run(signal);
    }
}

/// Single forward pass of the Butterworth low-pass. Exposed for gain
/// verification; the pipeline uses [`butterworth_lowpass`].
pub fn butterworth_lowpass_single_pass(
    signal: &[f64],
    fs: f64,
    cutoff: f64,
    order: usize,
) -> Result<Vec<f64>> {
    check_filter_args(signal.len(), fs, cutoff, order)?;
    let sections = butterworth_sections(order, fs, cutoff);
    let mut out = signal.to_vec();
    run_cascade(&sections, &mut out);
    Ok(out)
}

/// Zero-phase Butterworth low-pass: odd-reflection padding, forward pass,
/// backward pass, unpad. Output length equals input length.
pub fn butterworth_lowpass(signal: &[f64], fs: f64, cutoff: f64, order: usize) -> Result<Vec<f64>> {
    check_filter_args(signal.len(), fs, cutoff, order)?;
    let sections = butterworth_sections(order, fs, cutoff);
    let n = signal.len();
    let pad = (3 * (2 * order + 1)).min(n.saturating_sub(1));

    // odd reflection about the end samples suppresses edge transients
    let mut padded = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        padded.push(2.0 * signal[0] - signal[i]);
    }
    padded.extend_from_slice(signal);
    for i in 1..=pad {
        padded.push(2.0 * signal[n - 1] - signal[n - 1 - i]);
    }

    run_cascade(&sections, &mut padded);
    padded.reverse();
    run_cascade(&sections, &mut padded);
    padded.reverse();

    Ok(padded[pad..pad + n].to_vec())
}

/// Piecewise-cubic interpolation of `(src_t, signal)` at the points `dst_t`.
///
/// Each destination point is interpolated with the cubic Lagrange polynomial
/// through the four nearest source samples (two on each side where
/// possible), which reproduces polynomials of degree ≤ 3 exactly.
pub fn resample_to(signal: &[f64], src_t: &[f64], dst_t: &[f64]) -> Result<Vec<f64>> {
    if signal.len() != src_t.len() {
        return Err(Error::InvalidArgument(
            "resample_to: signal/timestamp length mismatch".into(),
        ));
    }
    if src_t.len() < 2 {
        return Err(Error::InvalidArgument("resample_to: need ≥ 2 source samples".into()));
    }
    for w in src_t.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidArgument(
                "resample_to: source timestamps not strictly increasing".into(),
            ));
        }
    }
    let first = src_t[0];
    let last = *src_t.last().unwrap();
    let n = src_t.len();
    let mut out = Vec::with_capacity(dst_t.len());
    let mut cursor = 0usize;
    for &t in dst_t {
        if t < first || t > last {
            return Err(Error::InvalidArgument(format!(
                "resample_to: destination t={t} outside source span [{first}, {last}]"
            )));
        }
        // src_t is increasing and dst_t is typically increasing too; advance
        // a cursor instead of binary searching from scratch.
        while cursor + 1 < n && src_t[cursor + 1] < t {
            cursor += 1;
        }
        while cursor > 0 && src_t[cursor] > t {
            cursor -= 1;
        }
        if n < 4 {
            // too few points for a cubic; fall back to linear
            let hi = (cursor + 1).min(n - 1);
            let lo = hi - 1;
            let w = (t - src_t[lo]) / (src_t[hi] - src_t[lo]);
            out.push(signal[lo] * (1.0 - w) + signal[hi] * w);
            continue;
        }
        // window of 4 points centered on the bracketing interval
        let start = cursor.saturating_sub(1).min(n - 4);
        let ts = &src_t[start..start + 4];
        let ys = &signal[start..start + 4];
        out.push(lagrange4(ts, ys, t));
    }
    Ok(out)
}

fn lagrange4(ts: &[f64], ys: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        let mut term = ys[i];
        for j in 0..4 {
            if i != j {
                term *= (t - ts[j]) / (ts[i] - ts[j]);
            }
        }
        acc += term;
    }
    acc
}

/// Centered rolling mean with a shrunken window at the edges; output length
/// equals input length. The window must be odd so the mean stays centered.
pub fn rolling_average(signal: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "rolling_average: window must be odd and positive, got {window}"
        )));
    }
    // window 1 must be the exact identity; the prefix-sum path below would
    // reintroduce rounding through (a + b) - a
    if window == 1 {
        return Ok(signal.to_vec());
    }
    let n = signal.len();
    let half = window / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in signal {
        acc += v;
        prefix.push(acc);
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n.saturating_sub(1));
        out.push((prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64);
    }
    Ok(out)
}

/// Nearest odd window length to `seconds × fs`, at least 1.
pub fn smoothing_window(seconds: f64, fs: f64) -> usize {
    let samples = (seconds * fs).round() as i64;
    let samples = samples.max(1) as usize;
    if samples % 2 == 1 {
        samples
    } else {
        samples + 1
    }
}

/// Put all channels of a raw set onto the IMU timeline: filter → resample →
/// smooth. The shared timeline is trimmed to the overlap of the EMG and IMU
/// spans so every resampled point interpolates, never extrapolates.
pub fn align_set(raw: &RawSet, params: &DspParams) -> Result<AlignedSet> {
    raw.validate()?;
    let emg_rate = estimate_rate(&raw.emg.t)?;
    let imu_rate = estimate_rate(&raw.accel.t)?;
    let cutoff = params.cutoff_hz.unwrap_or(0.45 * imu_rate);
    if cutoff >= emg_rate / 2.0 {
        return Err(Error::InvalidArgument(format!(
            "align_set: cutoff {cutoff} Hz ≥ EMG Nyquist {}",
            emg_rate / 2.0
        )));
    }

    let filtered_emg = butterworth_lowpass(&raw.emg.v, emg_rate, cutoff, params.order)?;

    let emg_first = raw.emg.t[0];
    let emg_last = *raw.emg.t.last().unwrap();
    let keep: Vec<usize> = (0..raw.accel.t.len())
        .filter(|&i| raw.accel.t[i] >= emg_first && raw.accel.t[i] <= emg_last)
        .collect();
    if keep.len() < 2 {
        return Err(Error::Data(
            "align_set: EMG and IMU spans barely overlap".into(),
        ));
    }
    let t: Vec<f64> = keep.iter().map(|&i| raw.accel.t[i]).collect();
    let take = |axis: &Vec<f64>| -> Vec<f64> { keep.iter().map(|&i| axis[i]).collect() };

    let emg_on_imu = resample_to(&filtered_emg, &raw.emg.t, &t)?;

    let window = smoothing_window(params.smooth_s, imu_rate);
    let smooth = |v: &[f64]| rolling_average(v, window);

    Ok(AlignedSet {
        set_id: raw.set_id.clone(),
        emg: smooth(&emg_on_imu)?,
        accel: [
            smooth(&take(&raw.accel.axes[0]))?,
            smooth(&take(&raw.accel.axes[1]))?,
            smooth(&take(&raw.accel.axes[2]))?,
        ],
        gyro: [
            smooth(&take(&raw.gyro.axes[0]))?,
            smooth(&take(&raw.gyro.axes[1]))?,
            smooth(&take(&raw.gyro.axes[2]))?,
        ],
        t,
        fs: imu_rate,
        rpe_annotations: raw.rpe_annotations.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, fs: f64, seconds: f64) -> Vec<f64> {
        let n = (seconds * fs) as usize;
        (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / fs).sin())
            .collect()
    }

    /// Steady-state amplitude over the middle half of the signal.
    fn mid_amplitude(signal: &[f64]) -> f64 {
        let n = signal.len();
        let mid = &signal[n / 4..3 * n / 4];
        let rms = (mid.iter().map(|v| v * v).sum::<f64>() / mid.len() as f64).sqrt();
        rms * std::f64::consts::SQRT_2
    }

    #[test]
    fn estimate_rate_uniform() {
        let rate = estimate_rate(&[0.0, 0.5, 1.0, 1.5]).unwrap();
        assert!((rate - 2.0).abs() < 1e-12);
    }

    #[test]
    fn estimate_rate_matches_nominal_grid() {
        let t: Vec<f64> = (0..2000).map(|i| i as f64 / 370.4).collect();
        let rate = estimate_rate(&t).unwrap();
        assert!((rate - 370.4).abs() < 1e-6, "got {rate}");
    }

    #[test]
    fn estimate_rate_median_ignores_gap() {
        // uniform 10 Hz grid with one 3x gap; median diff is still 0.1 s
        let mut t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        for v in t.iter_mut().skip(25) {
            *v += 0.2;
        }
        let rate = estimate_rate(&t).unwrap();
        assert!((rate - 10.0).abs() < 1e-9, "got {rate}");
    }

    #[test]
    fn estimate_rate_rejects_bad_input() {
        assert!(estimate_rate(&[1.0]).is_err());
        assert!(estimate_rate(&[0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn butterworth_preserves_dc() {
        let signal = vec![1.0; 500];
        let out = butterworth_lowpass(&signal, 100.0, 10.0, 4).unwrap();
        assert_eq!(out.len(), signal.len());
        for v in out {
            assert!((v - 1.0).abs() < 1e-9, "DC gain must be 1, got {v}");
        }
    }

    #[test]
    fn butterworth_single_pass_half_power_at_cutoff() {
        let fs = 1000.0;
        let cutoff = 100.0;
        for order in [2usize, 4, 5] {
            let input = sine(cutoff, fs, 8.0);
            let out = butterworth_lowpass_single_pass(&input, fs, cutoff, order).unwrap();
            let ratio = mid_amplitude(&out) / mid_amplitude(&input);
            let expected = std::f64::consts::FRAC_1_SQRT_2;
            assert!(
                (ratio - expected).abs() / expected < 0.02,
                "order {order}: gain at cutoff {ratio}, want {expected}"
            );
        }
    }

    #[test]
    fn butterworth_zero_phase_stopband() {
        let fs = 2000.0;
        let cutoff = 50.0;
        let input = sine(200.0, fs, 8.0);
        let out = butterworth_lowpass(&input, fs, cutoff, 4).unwrap();
        let ratio = mid_amplitude(&out) / mid_amplitude(&input);
        assert!(ratio < 1e-4, "stopband leak {ratio}");
    }

    #[test]
    fn butterworth_zero_group_delay() {
        // cross-correlation of a band-limited tone with its filtered version
        // peaks at lag 0
        let fs = 500.0;
        let input = sine(5.0, fs, 6.0);
        let out = butterworth_lowpass(&input, fs, 50.0, 4).unwrap();
        let n = input.len();
        let mut best_lag = 0i64;
        let mut best = f64::MIN;
        for lag in -10i64..=10 {
            let mut acc = 0.0;
            for i in 0..n {
                let j = i as i64 + lag;
                if j >= 0 && (j as usize) < n {
                    acc += input[i] * out[j as usize];
                }
            }
            if acc > best {
                best = acc;
                best_lag = lag;
            }
        }
        assert_eq!(best_lag, 0);
    }

    #[test]
    fn butterworth_validates_args() {
        assert!(butterworth_lowpass(&[1.0, 2.0], 100.0, 50.0, 4).is_err());
        assert!(butterworth_lowpass(&[1.0, 2.0], 100.0, 10.0, 0).is_err());
    }

    #[test]
    fn resample_reproduces_linear_ramp() {
        let src_t: Vec<f64> = (0..100).map(|i| i as f64 * 0.01).collect();
        let signal: Vec<f64> = src_t.clone();
        let dst_t = vec![0.005, 0.123, 0.5004, 0.985];
        let out = resample_to(&signal, &src_t, &dst_t).unwrap();
        for (y, t) in out.iter().zip(&dst_t) {
            assert!((y - t).abs() < 1e-12);
        }
    }

    #[test]
    fn resample_reproduces_cubic() {
        let src_t: Vec<f64> = (0..200).map(|i| i as f64 * 0.005).collect();
        let signal: Vec<f64> = src_t.iter().map(|t| t * t * t - 2.0 * t).collect();
        let dst_t: Vec<f64> = (0..500).map(|i| 0.001 + i as f64 * 0.00198).collect();
        let out = resample_to(&signal, &src_t, &dst_t).unwrap();
        for (y, t) in out.iter().zip(&dst_t) {
            let want = t * t * t - 2.0 * t;
            assert!((y - want).abs() < 1e-9, "at t={t}: {y} vs {want}");
        }
    }

    #[test]
    fn resample_rejects_out_of_span() {
        let src_t = vec![0.0, 1.0, 2.0, 3.0];
        let signal = vec![0.0; 4];
        assert!(resample_to(&signal, &src_t, &[3.5]).is_err());
        assert!(resample_to(&signal, &src_t, &[-0.1]).is_err());
    }

    #[test]
    fn downsampled_sine_tracks_analytic_reference() {
        // 5 Hz tone at the EMG rate, low-passed and resampled to the IMU rate
        let emg_fs = 2148.1;
        let imu_fs = 370.4;
        let seconds = 4.0;
        let n_emg = (seconds * emg_fs) as usize;
        let src_t: Vec<f64> = (0..n_emg).map(|i| i as f64 / emg_fs).collect();
        let tone: Vec<f64> = src_t
            .iter()
            .map(|t| (2.0 * std::f64::consts::PI * 5.0 * t).sin())
            .collect();
        let filtered = butterworth_lowpass(&tone, emg_fs, 0.45 * imu_fs, 4).unwrap();
        let dst_t: Vec<f64> = (0..(seconds * imu_fs) as usize)
            .map(|i| i as f64 / imu_fs)
            .filter(|t| *t <= *src_t.last().unwrap())
            .collect();
        let out = resample_to(&filtered, &src_t, &dst_t).unwrap();
        let err: f64 = out
            .iter()
            .zip(&dst_t)
            .map(|(y, t)| {
                let want = (2.0 * std::f64::consts::PI * 5.0 * t).sin();
                (y - want) * (y - want)
            })
            .sum::<f64>()
            / out.len() as f64;
        assert!(err.sqrt() < 0.01, "RMS error {}", err.sqrt());
    }

    #[test]
    fn rolling_average_window_one_is_identity() {
        let signal = vec![3.0, -1.0, 4.0, 1.5];
        assert_eq!(rolling_average(&signal, 1).unwrap(), signal);
    }

    #[test]
    fn rolling_average_shrunken_edges() {
        let out = rolling_average(&[1.0, 2.0, 3.0, 4.0, 5.0], 3).unwrap();
        let want = [1.5, 2.0, 3.0, 4.0, 4.5];
        for (a, b) in out.iter().zip(want.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rolling_average_constant_unchanged() {
        let signal = vec![2.5; 40];
        for window in [1, 3, 9, 21] {
            let out = rolling_average(&signal, window).unwrap();
            for v in out {
                assert!((v - 2.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rolling_average_rejects_even_window() {
        assert!(rolling_average(&[1.0], 2).is_err());
        assert!(rolling_average(&[1.0], 0).is_err());
    }

    #[test]
    fn smoothing_window_is_odd() {
        assert_eq!(smoothing_window(0.25, 370.4), 93);
        assert_eq!(smoothing_window(0.0, 100.0), 1);
        assert_eq!(smoothing_window(0.1, 100.0), 11);
    }
}
