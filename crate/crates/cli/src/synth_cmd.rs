use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use impactid::synth::{generate_dataset, SynthSpec};

use crate::config::OUT_DIR_ENV;
use crate::UsageError;

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Synthetic experiment description (JSON)
    #[arg(long)]
    pub spec: PathBuf,
    /// Directory for the generated CSVs, manifest and truth file
    #[arg(long, env = OUT_DIR_ENV)]
    pub out_dir: Option<PathBuf>,
    /// Force noise standard deviation, N (overrides the spec)
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u32>,
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.spec).with_context(|| format!("reading {}", args.spec.display()))?;
    let mut spec: SynthSpec =
        serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", args.spec.display())))?;
    if let Some(s) = args.noise_sigma {
        spec.noise_sigma = s;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(t) = args.trials {
        spec.trials_per_condition = t;
    }
    spec.validate().map_err(|e| UsageError(e.to_string()))?;
    let dir = args.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    let ds = generate_dataset(&spec, &dir)?;
    eprintln!("wrote {} trials, {}", ds.manifest.trials.len(), ds.manifest_path.display());
    Ok(())
}
