use std::ops::Range;

use crate::scalar::Scalar;

use super::peaks::detect_peaks_in;
use super::{Result, SignalError, SignalWarning, TimeSeries, TrialRecord, Unit};

/// Load-cell baseline and post-landing height rest windows, as sample index ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffsetWindows {
    pub force_baseline: Range<isize>,
    pub height_rest: Range<isize>,
}

impl OffsetWindows {
    pub const DEFAULT_SECONDS: f64 = 0.5;

    /// First 0.5 s for the load cell, final 0.5 s for the height sensor.
    pub fn default_for<T: Scalar>(trial: &TrialRecord<T>) -> Self {
        let span = seconds_to_samples(Self::DEFAULT_SECONDS, trial.force.dt()) as isize;
        let n = trial.height.len() as isize;
        Self { force_baseline: 0..span, height_rest: (n - span).max(0)..n }
    }

    /// Default windows with the load-cell window given in seconds from record start.
    pub fn with_baseline_seconds<T: Scalar>(trial: &TrialRecord<T>, window_s: [f64; 2]) -> Self {
        let dt = trial.force.dt().to_f64_lossy();
        let to_index = |s: f64| (s / dt).round() as isize;
        Self { force_baseline: to_index(window_s[0])..to_index(window_s[1]), ..Self::default_for(trial) }
    }
}

fn seconds_to_samples<T: Scalar>(seconds: f64, dt: T) -> usize {
    (seconds / dt.to_f64_lossy()).round().max(1.0) as usize
}

fn checked_window(window: &Range<isize>, len: usize) -> Result<Range<usize>> {
    if window.start < 0 || window.end > len as isize || window.start >= window.end {
        return Err(SignalError::WindowOutOfRange { start: window.start, end: window.end, len });
    }
    Ok(window.start as usize..window.end as usize)
}

fn mean<T: Scalar>(values: &[T]) -> T {
    let first = values[0];
    first + values.iter().map(|&v| v - first).sum::<T>() / T::from_usize_lossy(values.len())
}

/// Zeroes the load cell over its baseline window and the height sensor over
/// its post-landing rest window. Channels already offset are left alone; if
/// both are, the trial comes back unchanged with [`SignalWarning::AlreadyOffset`].
pub fn apply_offsets<T: Scalar>(
    trial: &TrialRecord<T>,
    windows: &OffsetWindows,
) -> Result<(TrialRecord<T>, Option<SignalWarning>)> {
    let force_range = checked_window(&windows.force_baseline, trial.force.len())?;
    let height_range = checked_window(&windows.height_rest, trial.height.len())?;
    if trial.offsets_applied.force && trial.offsets_applied.height {
        return Ok((trial.clone(), Some(SignalWarning::AlreadyOffset)));
    }
    let mut out = trial.clone();
    if !trial.offsets_applied.force {
        let offset = mean(&trial.force.values()[force_range]);
        out.force = trial.force.with_values(trial.force.values().iter().map(|&v| v - offset).collect());
        out.offsets_applied.force = true;
    }
    if !trial.offsets_applied.height {
        let offset = mean(&trial.height.values()[height_range]);
        out.height = trial.height.with_values(trial.height.values().iter().map(|&v| v - offset).collect());
        out.offsets_applied.height = true;
    }
    Ok((out, None))
}

fn first_positive_force_peak<T: Scalar>(trial: &TrialRecord<T>, min_prominence: T) -> Result<usize> {
    detect_peaks_in(trial.force.values(), min_prominence)?
        .first_positive_peak()
        .map_err(|_| SignalError::NoPositivePeak { trial: Some(trial.trial_index) })
}

/// Force at the first positive peak.
pub fn peak_force<T: Scalar>(trial: &TrialRecord<T>) -> Result<T> {
    peak_force_with(trial, T::zero())
}

/// [`peak_force`] ignoring extrema less prominent than `min_prominence`.
pub fn peak_force_with<T: Scalar>(trial: &TrialRecord<T>, min_prominence: T) -> Result<T> {
    let sp = first_positive_force_peak(trial, min_prominence)?;
    Ok(trial.force.values()[sp])
}

/// Shifts each trial's time origin so its first positive force peak sits at
/// `t = 0`. Shifts are whole samples.
pub fn align_trials<T: Scalar>(trials: &[TrialRecord<T>]) -> Result<Vec<TrialRecord<T>>> {
    align_trials_with(trials, T::zero())
}

pub fn align_trials_with<T: Scalar>(trials: &[TrialRecord<T>], min_prominence: T) -> Result<Vec<TrialRecord<T>>> {
    trials
        .iter()
        .map(|trial| {
            let sp = first_positive_force_peak(trial, min_prominence)?;
            let origin = -trial.force.dt() * T::from_usize_lossy(sp);
            let mut out = trial.clone();
            out.force = out.force.with_origin(origin);
            out.height = out.height.with_origin(origin);
            Ok(out)
        })
        .collect()
}

/// Pointwise mean force over the samples every aligned trial covers.
pub fn ensemble_average<T: Scalar>(aligned: &[TrialRecord<T>]) -> Result<TimeSeries<T>> {
    let first = aligned.first().ok_or(SignalError::EmptyInput)?;
    let dt = first.force.dt();
    if aligned.iter().any(|t| t.force.dt() != dt) {
        return Err(SignalError::DtMismatch);
    }
    let spans: Vec<(i64, &[T])> = aligned.iter().map(|t| (t.force.origin_index(), t.force.values())).collect();
    let lo = spans.iter().map(|(o, _)| *o).max().expect("non-empty");
    let hi = spans.iter().map(|(o, v)| o + v.len() as i64).min().expect("non-empty");
    if lo >= hi {
        return Err(SignalError::NoOverlap);
    }
    let n = T::from_usize_lossy(spans.len());
    let values = (lo..hi)
        .map(|g| {
            let at = |(o, v): &(i64, &[T])| v[(g - o) as usize];
            let base = at(&spans[0]);
            base + spans.iter().map(|s| at(s) - base).sum::<T>() / n
        })
        .collect();
    Ok(TimeSeries::from_parts(values, dt, dt * T::lit(lo as f64), Unit::Newton, spans.len()))
}
