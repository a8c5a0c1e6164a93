use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::{ConditionKey, FootType, Result, SignalError, TimeSeries, TrialRecord, Unit};

pub const TIME_COLUMN: &str = "time_s";
pub const FORCE_COLUMN: &str = "force_N";
pub const HEIGHT_COLUMN: &str = "height_mm";

/// Column mapping and sampling expectations for a raw trial CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub time_column: String,
    pub force_column: String,
    pub height_column: String,
    /// Sample interval to use instead of the one inferred from timestamps.
    pub dt: Option<f64>,
    /// Allowed relative deviation of each timestamp step from the nominal interval.
    pub jitter_tolerance: f64,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            time_column: TIME_COLUMN.into(),
            force_column: FORCE_COLUMN.into(),
            height_column: HEIGHT_COLUMN.into(),
            dt: None,
            jitter_tolerance: 0.01,
        }
    }
}

/// Parses one raw trial. Timestamps must step uniformly to within the
/// schema's jitter tolerance of the nominal interval.
pub fn load_trial<T: Scalar, R: Read>(
    source: R,
    schema: &CsvSchema,
    condition: ConditionKey,
    trial_index: u32,
) -> Result<TrialRecord<T>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers().map_err(|e| SignalError::MalformedCsv { line: 1, reason: e.to_string() })?.clone();
    let column =
        |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| SignalError::MissingColumn(name.to_string()));
    let cols = [column(&schema.time_column)?, column(&schema.force_column)?, column(&schema.height_column)?];
    let names = [&schema.time_column, &schema.force_column, &schema.height_column];

    let mut time = Vec::new();
    let mut force = Vec::new();
    let mut height = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row as u64 + 2;
        let record = record.map_err(|e| SignalError::MalformedCsv { line, reason: e.to_string() })?;
        let mut parsed = [0.0f64; 3];
        for (slot, (&col, name)) in parsed.iter_mut().zip(cols.iter().zip(names)) {
            let cell = record
                .get(col)
                .ok_or_else(|| SignalError::MalformedCsv { line, reason: format!("missing field `{name}`") })?;
            let value: f64 = cell
                .parse()
                .map_err(|_| SignalError::MalformedCsv { line, reason: format!("`{cell}` is not a number") })?;
            if !value.is_finite() {
                return Err(SignalError::NonFiniteSample { column: name.to_string(), row });
            }
            *slot = value;
        }
        time.push(parsed[0]);
        force.push(parsed[1]);
        height.push(parsed[2]);
    }
    if time.is_empty() {
        return Err(SignalError::EmptyInput);
    }

    let dt = sample_interval(&time, schema)?;
    let cast = |v: Vec<f64>| v.into_iter().map(T::lit).collect::<Vec<T>>();
    let t0 = T::lit(time[0]);
    let force = TimeSeries::new(cast(force), T::lit(dt), Unit::Newton)?.with_origin(t0);
    let height = TimeSeries::new(cast(height), T::lit(dt), Unit::Millimeter)?.with_origin(t0);
    TrialRecord::new(condition, trial_index, force, height)
}

fn sample_interval(time: &[f64], schema: &CsvSchema) -> Result<f64> {
    let nominal = match schema.dt {
        Some(dt) if dt > 0.0 && dt.is_finite() => dt,
        Some(dt) => return Err(SignalError::InvalidSeries(format!("schema dt must be positive, got {dt}"))),
        None if time.len() >= 2 => (time[time.len() - 1] - time[0]) / (time.len() - 1) as f64,
        None => return Err(SignalError::TooShort { len: time.len(), min: 2 }),
    };
    if !(nominal > 0.0) {
        return Err(SignalError::NonUniformSampling { row: 1, step: nominal, nominal });
    }
    for (i, pair) in time.windows(2).enumerate() {
        let step = pair[1] - pair[0];
        if ((step - nominal) / nominal).abs() > schema.jitter_tolerance {
            return Err(SignalError::NonUniformSampling { row: i + 1, step, nominal });
        }
    }
    Ok(nominal)
}

/// One file entry of a dataset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: PathBuf,
    pub foot_type: FootType,
    pub theta_a_deg: f64,
    pub theta_t_deg: f64,
    pub drop_height_mm: f64,
    pub trial_index: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_s: Option<f64>,
    /// Load-cell zeroing window `[start, end)` in seconds from record start.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_window_s: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
}

impl ManifestEntry {
    pub fn condition(&self) -> Result<ConditionKey> {
        ConditionKey::new(self.foot_type, self.theta_a_deg, self.theta_t_deg, self.drop_height_mm)
    }
}

/// Maps trial files to their conditions. Relative file paths resolve against
/// the manifest's directory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    /// Mass of the falling assembly shared by all trials unless overridden per entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
    pub trials: Vec<ManifestEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.file.is_absolute() {
            entry.file.clone()
        } else {
            self.base_dir.join(&entry.file)
        }
    }

    /// Loads one entry's trial, applying the entry's `dt_s` if present.
    pub fn load_entry<T: Scalar>(&self, entry: &ManifestEntry) -> Result<TrialRecord<T>> {
        let schema = CsvSchema { dt: entry.dt_s, ..CsvSchema::default() };
        let file = std::fs::File::open(self.resolve(entry))?;
        load_trial(std::io::BufReader::new(file), &schema, entry.condition()?, entry.trial_index)
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path)?;
    let mut manifest: Manifest = serde_json::from_str(&text).map_err(|e| SignalError::Manifest(e.to_string()))?;
    manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    for entry in &manifest.trials {
        entry.condition()?;
        if entry.trial_index < 1 {
            return Err(SignalError::Manifest(format!("{}: trial_index must be >= 1", entry.file.display())));
        }
    }
    Ok(manifest)
}
