use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use impactid::ident::{ErrorMode, GridSpec, IdentConfig, WeightMode};
use impactid::smd::{DEFAULT_GRAVITY, DEFAULT_PULSE_DURATION};
use serde::{Deserialize, Serialize};

use crate::UsageError;

pub const OUT_DIR_ENV: &str = "IMPACTID_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum WeightModeArg {
    Compounding,
    Reset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ErrorModeArg {
    Squared,
    Absolute,
}

/// Run configuration file: flat JSON keys, all optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub mass_kg: Option<f64>,
    pub gravity: f64,
    pub pulse_duration_s: f64,
    pub grid_points: usize,
    pub k_exp_lo: f64,
    pub k_exp_hi: f64,
    pub c_exp_lo: f64,
    pub c_exp_hi: f64,
    pub window_s: f64,
    pub onset_fraction: f64,
    pub peak_prominence_fraction: f64,
    pub weight_prominence_n: f64,
    pub peak_search_s: f64,
    pub weight_mode: WeightModeArg,
    pub error_mode: ErrorModeArg,
    pub alpha: f64,
    pub seed: u64,
    pub draws: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let grid = GridSpec::default();
        let ident = IdentConfig::<f64>::default();
        Self {
            manifest: None,
            out_dir: None,
            mass_kg: None,
            gravity: DEFAULT_GRAVITY,
            pulse_duration_s: DEFAULT_PULSE_DURATION,
            grid_points: grid.n_points,
            k_exp_lo: grid.k_exp[0],
            k_exp_hi: grid.k_exp[1],
            c_exp_lo: grid.c_exp[0],
            c_exp_hi: grid.c_exp[1],
            window_s: ident.window,
            onset_fraction: ident.onset_fraction,
            peak_prominence_fraction: ident.peak_prominence_fraction,
            weight_prominence_n: ident.weight_prominence,
            peak_search_s: ident.peak_search,
            weight_mode: WeightModeArg::Compounding,
            error_mode: ErrorModeArg::Squared,
            alpha: impactid::stats::DEFAULT_ALPHA,
            seed: 0,
            draws: 100_000,
        }
    }
}

/// Flags shared by `identify`, `stats` and `report`; each overrides the
/// matching config-file key.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset manifest (JSON)
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output directory
    #[arg(long, env = OUT_DIR_ENV)]
    pub out_dir: Option<PathBuf>,
    /// Mass of the falling body, kg (overrides the manifest)
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long)]
    pub gravity: Option<f64>,
    /// Impulse duration Δt, s
    #[arg(long)]
    pub pulse_duration: Option<f64>,
    /// Lattice points per axis
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub k_exp_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub k_exp_hi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c_exp_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c_exp_hi: Option<f64>,
    /// Comparison window, s
    #[arg(long)]
    pub window: Option<f64>,
    #[arg(long, value_enum)]
    pub weight_mode: Option<WeightModeArg>,
    #[arg(long, value_enum)]
    pub error_mode: Option<ErrorModeArg>,
    /// Family-wise significance level
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo draws for permutation p-values
    #[arg(long)]
    pub draws: Option<usize>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($flag:ident => $field:ident),* $(,)?) => {
                $(if let Some(v) = self.$flag.clone() { cfg.$field = v; })*
            };
        }
        take!(gravity => gravity, pulse_duration => pulse_duration_s, grid_points => grid_points,
              k_exp_lo => k_exp_lo, k_exp_hi => k_exp_hi, c_exp_lo => c_exp_lo, c_exp_hi => c_exp_hi,
              window => window_s, weight_mode => weight_mode, error_mode => error_mode,
              alpha => alpha, seed => seed, draws => draws);
        if self.manifest.is_some() {
            cfg.manifest = self.manifest.clone();
        }
        if self.out_dir.is_some() {
            cfg.out_dir = self.out_dir.clone();
        }
        if self.mass.is_some() {
            cfg.mass_kg = self.mass;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(UsageError(format!("alpha must lie in (0, 1], got {}", self.alpha)).into());
        }
        if let Some(m) = self.mass_kg {
            if !(m > 0.0) {
                return Err(UsageError(format!("mass must be positive, got {m}")).into());
            }
        }
        self.grid().validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(())
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            n_points: self.grid_points,
            k_exp: [self.k_exp_lo, self.k_exp_hi],
            c_exp: [self.c_exp_lo, self.c_exp_hi],
        }
    }

    pub fn ident(&self) -> IdentConfig<f64> {
        IdentConfig {
            window: self.window_s,
            onset_fraction: self.onset_fraction,
            peak_prominence_fraction: self.peak_prominence_fraction,
            weight_prominence: self.weight_prominence_n,
            peak_search: self.peak_search_s,
            weight_mode: match self.weight_mode {
                WeightModeArg::Compounding => WeightMode::Compounding,
                WeightModeArg::Reset => WeightMode::Reset,
            },
            error_mode: match self.error_mode {
                ErrorModeArg::Squared => ErrorMode::Squared,
                ErrorModeArg::Absolute => ErrorMode::Absolute,
            },
            ..IdentConfig::default()
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn manifest(&self) -> Result<&Path> {
        self.manifest
            .as_deref()
            .ok_or_else(|| UsageError("no manifest given (--manifest or config `manifest`)".into()).into())
    }
}
