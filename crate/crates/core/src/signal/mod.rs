//! Trial ingestion and conditioning: CSV loading, offset correction, peak
//! detection, peak-time alignment, ensemble averaging.

mod condition;
mod io;
mod peaks;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use condition::{
    align_trials, align_trials_with, apply_offsets, ensemble_average, peak_force, peak_force_with, OffsetWindows,
};
pub use io::{load_manifest, load_trial, CsvSchema, Manifest, ManifestEntry, FORCE_COLUMN, HEIGHT_COLUMN, TIME_COLUMN};
pub use peaks::{detect_peaks, Peak, PeakList, Polarity};
pub(crate) use peaks::{detect_peaks_in, first_positive_peak_in};

/// Nominal acquisition rate of the drop rig.
pub const SAMPLE_RATE_HZ: f64 = 300.0;
/// Nominal record length.
pub const RECORD_SECONDS: f64 = 3.0;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("malformed CSV at line {line}: {reason}")]
    MalformedCsv { line: u64, reason: String },
    #[error("non-uniform sampling at row {row}: step {step} s vs nominal {nominal} s")]
    NonUniformSampling { row: usize, step: f64, nominal: f64 },
    #[error("non-finite sample in column `{column}` at row {row}")]
    NonFiniteSample { column: String, row: usize },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("window [{start}, {end}) outside record of {len} samples")]
    WindowOutOfRange { start: isize, end: isize, len: usize },
    #[error("no positive peak{}", .trial.map(|t| format!(" in trial {t}")).unwrap_or_default())]
    NoPositivePeak { trial: Option<u32> },
    #[error("empty input")]
    EmptyInput,
    #[error("aligned trials have no common samples")]
    NoOverlap,
    #[error("series of {len} samples is too short (need {min})")]
    TooShort { len: usize, min: usize },
    #[error("sample intervals differ across trials")]
    DtMismatch,
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = SignalError> = std::result::Result<T, E>;

/// Non-fatal conditions reported alongside a successful result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalWarning {
    /// Offsets were already applied; the trial is returned unchanged.
    AlreadyOffset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    #[serde(rename = "N")]
    Newton,
    #[serde(rename = "mm")]
    Millimeter,
    #[default]
    Unspecified,
}

/// Uniformly sampled scalar signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    values: Vec<T>,
    dt: T,
    t_origin: T,
    unit: Unit,
    contributors: usize,
}

impl<T: Scalar> TimeSeries<T> {
    /// Builds a series starting at `t = 0`. Rejects empty input, a
    /// non-positive interval and non-finite samples.
    pub fn new(values: Vec<T>, dt: T, unit: Unit) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(SignalError::InvalidSeries(format!("dt must be positive, got {dt}")));
        }
        if values.is_empty() {
            return Err(SignalError::EmptyInput);
        }
        if let Some(row) = values.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::NonFiniteSample { column: unit_label(unit).into(), row });
        }
        Ok(Self { values, dt, t_origin: T::zero(), unit, contributors: 1 })
    }

    pub fn with_origin(mut self, t_origin: T) -> Self {
        self.t_origin = t_origin;
        self
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn t_origin(&self) -> T {
        self.t_origin
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    /// Number of trials averaged into this series (1 for raw data).
    pub fn contributors(&self) -> usize {
        self.contributors
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_at(&self, index: usize) -> T {
        self.t_origin + self.dt * T::from_usize_lossy(index)
    }

    /// Index of sample 0 on the integer grid anchored at `t = 0`.
    pub fn origin_index(&self) -> i64 {
        (self.t_origin / self.dt).round().to_i64().unwrap_or(0)
    }

    pub(crate) fn with_values(&self, values: Vec<T>) -> Self {
        Self { values, dt: self.dt, t_origin: self.t_origin, unit: self.unit, contributors: self.contributors }
    }

    pub(crate) fn from_parts(values: Vec<T>, dt: T, t_origin: T, unit: Unit, contributors: usize) -> Self {
        Self { values, dt, t_origin, unit, contributors }
    }
}

fn unit_label(unit: Unit) -> &'static str {
    match unit {
        Unit::Newton => FORCE_COLUMN,
        Unit::Millimeter => HEIGHT_COLUMN,
        Unit::Unspecified => "value",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FootType {
    Flat,
    Rigid,
    Soft,
}

impl FootType {
    pub fn as_str(self) -> &'static str {
        match self {
            FootType::Flat => "flat",
            FootType::Rigid => "rigid",
            FootType::Soft => "soft",
        }
    }
}

impl fmt::Display for FootType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FootType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "flat" => Ok(FootType::Flat),
            "rigid" => Ok(FootType::Rigid),
            "soft" => Ok(FootType::Soft),
            other => Err(format!("unknown foot type `{other}`")),
        }
    }
}

/// Experimental condition of a trial. Angles in degrees (ankle dorsiflexion
/// and toe extension positive), drop height in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionKey {
    pub foot_type: FootType,
    pub theta_a_deg: f64,
    pub theta_t_deg: f64,
    pub drop_height_mm: f64,
}

impl ConditionKey {
    pub fn new(foot_type: FootType, theta_a_deg: f64, theta_t_deg: f64, drop_height_mm: f64) -> Result<Self> {
        let key = Self { foot_type, theta_a_deg, theta_t_deg, drop_height_mm };
        key.validate()?;
        Ok(key)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta_a_deg.is_finite() || !self.theta_t_deg.is_finite() {
            return Err(SignalError::Manifest("condition angles must be finite".into()));
        }
        if !(self.drop_height_mm > 0.0) || !self.drop_height_mm.is_finite() {
            return Err(SignalError::Manifest(format!("drop_height_mm must be positive, got {}", self.drop_height_mm)));
        }
        Ok(())
    }

    pub fn drop_height_m(&self) -> f64 {
        self.drop_height_mm / 1000.0
    }

    /// Compact, filesystem-safe label, e.g. `soft_a-15_t0_h200`.
    pub fn label(&self) -> String {
        format!("{}_a{}_t{}_h{}", self.foot_type, self.theta_a_deg, self.theta_t_deg, self.drop_height_mm)
    }
}

impl Eq for ConditionKey {}

impl PartialOrd for ConditionKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ConditionKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.foot_type
            .cmp(&other.foot_type)
            .then(self.theta_a_deg.total_cmp(&other.theta_a_deg))
            .then(self.theta_t_deg.total_cmp(&other.theta_t_deg))
            .then(self.drop_height_mm.total_cmp(&other.drop_height_mm))
    }
}

impl fmt::Display for ConditionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OffsetFlags {
    pub force: bool,
    pub height: bool,
}

/// One drop: co-sampled force (N) and height (mm) channels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord<T> {
    pub condition: ConditionKey,
    pub trial_index: u32,
    pub force: TimeSeries<T>,
    pub height: TimeSeries<T>,
    pub offsets_applied: OffsetFlags,
}

impl<T: Scalar> TrialRecord<T> {
    pub fn new(condition: ConditionKey, trial_index: u32, force: TimeSeries<T>, height: TimeSeries<T>) -> Result<Self> {
        condition.validate()?;
        if trial_index < 1 {
            return Err(SignalError::Manifest("trial_index must be >= 1".into()));
        }
        Ok(Self { condition, trial_index, force, height, offsets_applied: OffsetFlags::default() })
    }
}
