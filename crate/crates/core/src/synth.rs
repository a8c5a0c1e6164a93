//! Synthetic drop-test datasets with known `(k, c)`.
//!
//! Each trial is a 3 s, 300 Hz record in the raw CSV format read by
//! [`signal::load_trial`](crate::signal::load_trial): zero force until contact
//! at 1 s, then the model's transmitted force. The height channel falls
//! freely from the drop height and then follows the model displacement.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::signal::{
    ConditionKey, Manifest, ManifestEntry, SignalError, TimeSeries, FORCE_COLUMN, HEIGHT_COLUMN, RECORD_SECONDS,
    SAMPLE_RATE_HZ, TIME_COLUMN,
};
use crate::smd::{analytic_response, sample_response, SmdError, SmdParams, DEFAULT_GRAVITY, DEFAULT_PULSE_DURATION};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRUTH_FILE: &str = "truth.csv";
/// Contact time within each record, s.
pub const CONTACT_SECONDS: f64 = 1.0;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Smd(#[from] SmdError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = SynthError> = std::result::Result<T, E>;

/// Generating coefficients for one condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionTruth {
    pub condition: ConditionKey,
    pub stiffness: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub mass: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default = "default_pulse")]
    pub pulse_duration: f64,
    pub conditions: Vec<ConditionTruth>,
    #[serde(default = "default_trials")]
    pub trials_per_condition: u32,
    /// Standard deviation of additive force noise, N.
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_gravity() -> f64 {
    DEFAULT_GRAVITY
}

fn default_pulse() -> f64 {
    DEFAULT_PULSE_DURATION
}

fn default_trials() -> u32 {
    10
}

impl SynthSpec {
    pub fn new(mass: f64, conditions: Vec<ConditionTruth>) -> Self {
        Self {
            mass,
            gravity: DEFAULT_GRAVITY,
            pulse_duration: DEFAULT_PULSE_DURATION,
            conditions,
            trials_per_condition: 10,
            noise_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials_per_condition < 1 {
            return Err(SynthError::InvalidSpec("trials_per_condition must be >= 1".into()));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(SynthError::InvalidSpec(format!("noise_sigma must be >= 0, got {}", self.noise_sigma)));
        }
        if self.conditions.is_empty() {
            return Err(SynthError::InvalidSpec("no conditions".into()));
        }
        for truth in &self.conditions {
            truth.condition.validate()?;
            self.params(truth).validate()?;
        }
        Ok(())
    }

    pub fn params(&self, truth: &ConditionTruth) -> SmdParams<f64> {
        SmdParams {
            mass: self.mass,
            stiffness: truth.stiffness,
            damping: truth.damping,
            drop_height: truth.condition.drop_height_m(),
            gravity: self.gravity,
            pulse_duration: self.pulse_duration,
        }
    }
}

/// One row of the truth file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub file: PathBuf,
    pub foot_type: crate::signal::FootType,
    pub theta_a_deg: f64,
    pub theta_t_deg: f64,
    pub drop_height_mm: f64,
    pub trial_index: u32,
    pub k: f64,
    pub c: f64,
    pub zeta: f64,
}

impl TruthRecord {
    pub fn condition(&self) -> Result<ConditionKey> {
        Ok(ConditionKey::new(self.foot_type, self.theta_a_deg, self.theta_t_deg, self.drop_height_mm)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    pub truth_path: PathBuf,
    pub truth: Vec<TruthRecord>,
}

/// Adds `N(0, sigma²)` noise. The i-th sample's noise depends only on
/// `(seed, i)`.
pub fn inject_noise<T: Scalar>(series: &TimeSeries<T>, sigma: f64, seed: u64) -> TimeSeries<T> {
    if sigma == 0.0 {
        return series.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and non-negative");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = series.values().iter().map(|&v| v + T::lit(normal.sample(&mut rng))).collect();
    series.with_values(values)
}

/// Per-trial seed, so trials can be generated in any order.
fn trial_seed(seed: u64, condition: usize, trial: u32) -> u64 {
    // splitmix64 finaliser over the packed identifiers
    let mut z = seed ^ ((condition as u64) << 32 | trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn record_dt() -> f64 {
    1.0 / SAMPLE_RATE_HZ
}

/// Force and height channels of one noiseless trial.
pub fn synth_channels(params: &SmdParams<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let dt = record_dt();
    let n = (RECORD_SECONDS * SAMPLE_RATE_HZ).round() as usize;
    let contact = (CONTACT_SECONDS * SAMPLE_RATE_HZ).round() as usize;
    let mut force = vec![0.0; contact];
    force.extend(sample_response(params, dt, n - contact)?);

    let h = params.drop_height;
    let fall = (2.0 * h / params.gravity).sqrt();
    let mut height = Vec::with_capacity(n);
    for i in 0..n {
        let t = (i as f64 - contact as f64) * dt;
        let z = if t < -fall {
            h
        } else if t < 0.0 {
            let tau = t + fall;
            h - 0.5 * params.gravity * tau * tau
        } else {
            -analytic_response(params, t)?.state.x
        };
        height.push(z * 1000.0);
    }
    Ok((force, height))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SynthError + '_ {
    move |source| SynthError::Io { path: path.to_path_buf(), source }
}

fn write_trial(path: &Path, force: &[f64], height: &[f64]) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let dt = record_dt();
    writeln!(w, "{TIME_COLUMN},{FORCE_COLUMN},{HEIGHT_COLUMN}").map_err(io_err(path))?;
    for (i, (f, z)) in force.iter().zip(height).enumerate() {
        writeln!(w, "{},{f},{z}", i as f64 * dt).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes every trial CSV, then `truth.csv`, then `manifest.json` into `dir`.
pub fn generate_dataset(spec: &SynthSpec, dir: &Path) -> Result<Dataset> {
    spec.validate()?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let jobs: Vec<(usize, u32)> =
        (0..spec.conditions.len()).flat_map(|c| (1..=spec.trials_per_condition).map(move |t| (c, t))).collect();
    let rows: Vec<(ManifestEntry, TruthRecord)> = jobs
        .par_iter()
        .map(|&(ci, trial)| {
            let truth = &spec.conditions[ci];
            let params = spec.params(truth);
            let (force, height) = synth_channels(&params)?;
            let force = if spec.noise_sigma > 0.0 {
                let series = TimeSeries::new(force, record_dt(), crate::signal::Unit::Newton)?;
                inject_noise(&series, spec.noise_sigma, trial_seed(spec.seed, ci, trial)).into_values()
            } else {
                force
            };
            let file = PathBuf::from(format!("{}_t{trial:02}.csv", truth.condition.label()));
            write_trial(&dir.join(&file), &force, &height)?;
            let key = truth.condition;
            let entry = ManifestEntry {
                file: file.clone(),
                foot_type: key.foot_type,
                theta_a_deg: key.theta_a_deg,
                theta_t_deg: key.theta_t_deg,
                drop_height_mm: key.drop_height_mm,
                trial_index: trial,
                dt_s: Some(record_dt()),
                baseline_window_s: None,
                mass_kg: None,
            };
            let zeta = params.damping_ratio();
            let record = TruthRecord {
                file,
                foot_type: key.foot_type,
                theta_a_deg: key.theta_a_deg,
                theta_t_deg: key.theta_t_deg,
                drop_height_mm: key.drop_height_mm,
                trial_index: trial,
                k: truth.stiffness,
                c: truth.damping,
                zeta,
            };
            Ok((entry, record))
        })
        .collect::<Result<_>>()?;
    let (entries, truth): (Vec<_>, Vec<_>) = rows.into_iter().unzip();

    let truth_path = dir.join(TRUTH_FILE);
    let mut w = csv::Writer::from_path(&truth_path)?;
    for row in &truth {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(&truth_path))?;

    let manifest = Manifest { mass_kg: Some(spec.mass), trials: entries, base_dir: dir.to_path_buf() };
    let manifest_path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, json + "\n").map_err(io_err(&manifest_path))?;
    Ok(Dataset { manifest, manifest_path, truth_path, truth })
}

/// Reads a truth file written by [`generate_dataset`].
pub fn load_truth(path: &Path) -> Result<Vec<TruthRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(SynthError::from)).collect()
}
