//! Repetition segmentation from jerk zero-crossings.
//!
//! The palm-axis accelerometer signal is differentiated to obtain jerk;
//! zero-crossings of the jerk mark the extrema of the acceleration, which
//! alternate between repetition boundaries (arm extended, acceleration at
//! its rest plateau) and midpoints (top of the curl). A deadband and a
//! minimum gap suppress chatter crossings, and the detected midpoint count
//! is validated against the ground-truth RPE annotations.

use crate::dataio::PalmAxisConfig;
use crate::dsp::AlignedSet;
use crate::error::{Error, Result};

/// One repetition, as index ranges into its [`AlignedSet`].
///
/// The segment spans `[start_idx, end_idx]` inclusive; consecutive reps
/// share the boundary sample, so the end of one rep is the start of the
/// next. Inter-rep breaks belong to the preceding rep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepSegment {
    pub rep_id: String,
    pub start_idx: usize,
    pub mid_idx: usize,
    pub end_idx: usize,
    pub rpe: u8,
}

impl RepSegment {
    pub fn emg<'a>(&self, set: &'a AlignedSet) -> &'a [f64] {
        &set.emg[self.start_idx..=self.end_idx]
    }

    pub fn accel_axis<'a>(&self, set: &'a AlignedSet, axis: usize) -> &'a [f64] {
        &set.accel[axis][self.start_idx..=self.end_idx]
    }

    pub fn gyro_axis<'a>(&self, set: &'a AlignedSet, axis: usize) -> &'a [f64] {
        &set.gyro[axis][self.start_idx..=self.end_idx]
    }

    pub fn len(&self) -> usize {
        self.end_idx - self.start_idx + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Time derivative by central finite differences scaled by the sampling
/// rate; one-sided differences at the endpoints. Length is preserved.
pub fn jerk(accel_axis: &[f64], fs: f64) -> Result<Vec<f64>> {
    let n = accel_axis.len();
    if n < 2 {
        return Err(Error::InvalidArgument("jerk: need at least 2 samples".into()));
    }
    let mut out = Vec::with_capacity(n);
    out.push((accel_axis[1] - accel_axis[0]) * fs);
    for i in 1..n - 1 {
        out.push((accel_axis[i + 1] - accel_axis[i - 1]) * fs * 0.5);
    }
    out.push((accel_axis[n - 1] - accel_axis[n - 2]) * fs);
    Ok(out)
}

/// Zero-crossing indices of the jerk signal, split into alternating
/// boundary/midpoint groups (first crossing opens rep 1 as a boundary).
///
/// A crossing is a sign change between consecutive samples outside the
/// deadband `|j| < 0.01 × max|j|`; a record that starts inside the deadband
/// registers its first exit as a crossing. Retained crossings are at least
/// `min_gap_s` apart.
pub fn find_boundaries(
    jerk_series: &[f64],
    fs: f64,
    min_gap_s: f64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if min_gap_s <= 0.0 {
        return Err(Error::InvalidArgument("find_boundaries: min_gap_s must be > 0".into()));
    }
    let crossings = raw_crossings(jerk_series, fs, min_gap_s)?;
    let boundaries = crossings.iter().step_by(2).copied().collect();
    let midpoints = crossings.iter().skip(1).step_by(2).copied().collect();
    Ok((boundaries, midpoints))
}

fn raw_crossings(jerk_series: &[f64], fs: f64, min_gap_s: f64) -> Result<Vec<usize>> {
    let max_abs = jerk_series.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return Err(Error::Data("find_boundaries: jerk is identically zero".into()));
    }
    let deadband = 0.01 * max_abs;
    let min_gap = (min_gap_s * fs).round().max(1.0) as usize;

    let mut crossings: Vec<usize> = Vec::new();
    let mut prev_sign = 0i8;
    let mut seen_retained = false;
    for (i, &j) in jerk_series.iter().enumerate() {
        if j.abs() < deadband {
            continue;
        }
        let sign = if j > 0.0 { 1 } else { -1 };
        let crossing = if !seen_retained {
            // record starts at rest: the first exit from the deadband opens rep 1
            i > 0
        } else {
            sign != prev_sign
        };
        if crossing {
            match crossings.last() {
                Some(&last) if i - last < min_gap => {}
                _ => crossings.push(i),
            }
        }
        prev_sign = sign;
        seen_retained = true;
    }
    if crossings.is_empty() {
        return Err(Error::Data("find_boundaries: no zero-crossings found".into()));
    }
    Ok(crossings)
}

/// Default minimum gap between retained crossings.
pub const DEFAULT_MIN_GAP_S: f64 = 0.5;

/// Segment an aligned set into repetitions and validate the count against
/// the RPE annotations.
///
/// Boundary-vs-midpoint identity is decided by plateau proximity: the
/// crossing group whose palm-axis acceleration sits nearer the rest level
/// (measured at the start and end of the record, arm extended) is the
/// boundary group. A missing opening or terminal boundary is synthesized at
/// the record edge, which also absorbs the trailing break into the last rep.
pub fn segment_set(
    aligned: &AlignedSet,
    palm: &PalmAxisConfig,
    min_gap_s: f64,
) -> Result<Vec<RepSegment>> {
    if aligned.rpe_annotations.is_empty() {
        return Err(Error::Data(format!("{}: no annotations", aligned.set_id)));
    }
    let accel: Vec<f64> = aligned.accel[palm.axis_index]
        .iter()
        .map(|v| v * f64::from(palm.sign))
        .collect();
    let n = accel.len();
    let j = jerk(&accel, aligned.fs)?;
    let crossings = raw_crossings(&j, aligned.fs, min_gap_s)?;

    // rest level: arm extended at the start and end of the set
    let edge = ((0.05 * aligned.fs).round() as usize).clamp(1, n / 4);
    let rest = (accel[..edge].iter().sum::<f64>() + accel[n - edge..].iter().sum::<f64>())
        / (2 * edge) as f64;

    let group_dist = |offset: usize| -> f64 {
        let vals: Vec<f64> = crossings
            .iter()
            .skip(offset)
            .step_by(2)
            .map(|&c| (accel[c] - rest).abs())
            .collect();
        if vals.is_empty() {
            f64::INFINITY
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    };
    // even positions are boundaries unless the odd group sits closer to rest
    let first_is_boundary = group_dist(0) <= group_dist(1);

    let mut boundaries: Vec<usize> = Vec::new();
    let mut midpoints: Vec<usize> = Vec::new();
    for (pos, &c) in crossings.iter().enumerate() {
        if (pos % 2 == 0) == first_is_boundary {
            boundaries.push(c);
        } else {
            midpoints.push(c);
        }
    }
    if let Some(&first_mid) = midpoints.first() {
        if boundaries.first().is_none_or(|&b| b > first_mid) {
            boundaries.insert(0, 0);
        }
    }
    if let Some(&last_mid) = midpoints.last() {
        if boundaries.last().is_none_or(|&b| b < last_mid) {
            boundaries.push(n - 1);
        }
    }

    let detected = midpoints.len();
    let annotated = aligned.rpe_annotations.len();
    if detected != annotated {
        return Err(Error::CountMismatch {
            set_id: aligned.set_id.to_string(),
            detected,
            annotated,
        });
    }
    if boundaries.len() != midpoints.len() + 1 {
        return Err(Error::Data(format!(
            "{}: non-alternating crossings ({} boundaries, {} midpoints)",
            aligned.set_id,
            boundaries.len(),
            midpoints.len()
        )));
    }
    for (i, &m) in midpoints.iter().enumerate() {
        if !(boundaries[i] < m && m < boundaries[i + 1]) {
            return Err(Error::Data(format!(
                "{}: midpoint {m} not bracketed by boundaries",
                aligned.set_id
            )));
        }
    }

    // trailing break is absorbed into the last rep
    *boundaries.last_mut().unwrap() = n - 1;

    Ok((0..detected)
        .map(|i| RepSegment {
            rep_id: format!("{}_{}", aligned.set_id, i + 1),
            start_idx: boundaries[i],
            mid_idx: midpoints[i],
            end_idx: boundaries[i + 1],
            rpe: aligned.rpe_annotations[i],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jerk_of_ramp_is_slope() {
        let fs = 50.0;
        let signal: Vec<f64> = (0..100).map(|i| 3.0 * i as f64 / fs).collect();
        let j = jerk(&signal, fs).unwrap();
        assert_eq!(j.len(), signal.len());
        for v in j {
            assert!((v - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn jerk_of_constant_is_zero() {
        let j = jerk(&[5.0; 20], 100.0).unwrap();
        for v in j {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn jerk_matches_analytic_derivative() {
        let fs = 100.0;
        let signal: Vec<f64> = (0..400)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / fs).sin())
            .collect();
        let j = jerk(&signal, fs).unwrap();
        let omega = 2.0 * std::f64::consts::PI;
        // endpoints use one-sided differences; check the interior
        for i in 1..signal.len() - 1 {
            let want = omega * (omega * i as f64 / fs).cos();
            assert!(
                (j[i] - want).abs() / omega < 0.005,
                "i={i}: {} vs {want}",
                j[i]
            );
        }
    }

    #[test]
    fn jerk_needs_two_samples() {
        assert!(jerk(&[1.0], 10.0).is_err());
    }

    #[test]
    fn sine_jerk_crossings_on_second_grid() {
        // sin(2*pi*t/2) crosses zero at t = 0, 1, 2, ... seconds
        let fs = 100.0;
        let j: Vec<f64> = (0..1000)
            .map(|i| (std::f64::consts::PI * i as f64 / fs).sin())
            .collect();
        let (boundaries, midpoints) = find_boundaries(&j, fs, 0.4).unwrap();
        let mut all: Vec<usize> = boundaries.iter().chain(midpoints.iter()).copied().collect();
        all.sort_unstable();
        let expected: Vec<usize> = (0..10).map(|k| k * 100).collect();
        assert_eq!(all.len(), expected.len());
        for (got, want) in all.iter().zip(&expected) {
            assert!(
                (*got as i64 - *want as i64).abs() <= 1,
                "crossing {got} vs {want}"
            );
        }
        // alternation: first crossing is a boundary
        assert_eq!(boundaries[0], all[0]);
    }

    #[test]
    fn chatter_suppressed_by_min_gap() {
        let fs = 100.0;
        // slow sine with a burst of sign chatter within 0.1 s
        let mut j: Vec<f64> = (0..600)
            .map(|i| (std::f64::consts::PI * i as f64 / fs).sin())
            .collect();
        for i in 300..310 {
            j[i] = if i % 2 == 0 { 0.9 } else { -0.9 };
        }
        let (b, m) = find_boundaries(&j, fs, 0.4).unwrap();
        // without min_gap the chatter would contribute ~10 crossings
        assert!(b.len() + m.len() <= 8, "{} crossings retained", b.len() + m.len());
    }

    #[test]
    fn all_positive_jerk_has_no_crossings() {
        let j = vec![1.0; 100];
        assert!(find_boundaries(&j, 100.0, 0.4).is_err());
    }
}
