use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::Args;
use impactid::ident::{fitted_overlay, grid_params};

use crate::config::ConfigArgs;
use crate::format::sig6;
use crate::identify::{conditioned_trial, load_checked_manifest, model_for};
use crate::rows::{read_ident_csv, read_summary, SummaryOut, IDENT_CSV, SUMMARY_JSON};
use crate::Outcome;

pub const OVERLAY_CSV: &str = "overlay.csv";
pub const PEAK_VS_HEIGHT_CSV: &str = "peak_vs_height.csv";
pub const PARAMETERS_CSV: &str = "parameters.csv";

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Directory holding ident.csv and summary.json (default: the output directory)
    #[arg(long)]
    pub results: Option<PathBuf>,
}

#[derive(Debug)]
pub struct MissingResults(pub PathBuf);

impl std::fmt::Display for MissingResults {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "missing results: {} (run `identify` first)", self.0.display())
    }
}

impl std::error::Error for MissingResults {}

fn require(dir: &Path, name: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    if path.is_file() {
        Ok(path)
    } else {
        Err(MissingResults(path).into())
    }
}

fn condition_fields(s: &SummaryOut) -> [String; 4] {
    [s.foot_type.to_string(), s.theta_a_deg.to_string(), s.theta_t_deg.to_string(), s.drop_height_mm.to_string()]
}

fn opt(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

fn write_peak_vs_height(path: &Path, summaries: &[SummaryOut]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record([
        "foot_type",
        "theta_a_deg",
        "theta_t_deg",
        "drop_height_mm",
        "n",
        "peak_force_mean",
        "peak_force_sd",
    ])?;
    for s in summaries {
        let mut rec = condition_fields(s).to_vec();
        rec.extend([s.n.to_string(), sig6(s.peak_force.mean), opt(s.peak_force.sd)]);
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

fn write_parameters(path: &Path, summaries: &[SummaryOut]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record([
        "label",
        "foot_type",
        "theta_a_deg",
        "theta_t_deg",
        "drop_height_mm",
        "n",
        "k_mean",
        "k_sd",
        "c_mean",
        "c_sd",
        "zeta_mean",
        "zeta_sd",
    ])?;
    for s in summaries {
        let mut rec = vec![s.label.clone()];
        rec.extend(condition_fields(s));
        rec.push(s.n.to_string());
        for x in [&s.k, &s.c, &s.zeta] {
            rec.extend([sig6(x.mean), opt(x.sd)]);
        }
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Measured and fitted force for every identified trial, rebuilt from the
/// lattice indices so the fitted curve is exactly the one the search chose.
fn write_overlay(path: &Path, args: &ReportArgs, ident: &Path) -> Result<()> {
    let cfg = args.config.resolve()?;
    let manifest = load_checked_manifest(&cfg)?;
    let rows = read_ident_csv(ident)?;
    let entries: BTreeMap<(String, u32), _> =
        manifest.trials.iter().map(|e| ((e.file.display().to_string(), e.trial_index), e)).collect();
    let grid = cfg.grid();
    let ident_cfg = cfg.ident();

    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record([
        "label",
        "foot_type",
        "theta_a_deg",
        "theta_t_deg",
        "drop_height_mm",
        "trial",
        "time_s",
        "measured_N",
        "simulated_N",
        "weight",
    ])?;
    for row in &rows {
        let file = row.file.display().to_string();
        let entry = entries
            .get(&(file.clone(), row.trial))
            .ok_or_else(|| anyhow!("{file} (trial {}) is not in the manifest", row.trial))?;
        let (k, c) = grid_params::<f64>(row.n_k, row.n_c, &grid)?;
        let trial = conditioned_trial(&manifest, entry)?;
        let model = model_for(&cfg, &manifest, entry)?;
        let overlay = fitted_overlay(&trial, k, c, &model, &ident_cfg).with_context(|| file.clone())?;
        let cond = row.condition();
        let head = [
            cond.label(),
            cond.foot_type.to_string(),
            cond.theta_a_deg.to_string(),
            cond.theta_t_deg.to_string(),
            cond.drop_height_mm.to_string(),
            row.trial.to_string(),
        ];
        for i in 0..overlay.time.len() {
            let mut rec = head.to_vec();
            rec.extend([
                overlay.time[i].to_string(),
                overlay.measured[i].to_string(),
                overlay.simulated[i].to_string(),
                overlay.weights[i].to_string(),
            ]);
            w.write_record(rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn run(args: &ReportArgs) -> Result<Outcome> {
    let cfg = args.config.resolve()?;
    let out_dir = cfg.out_dir();
    let results = args.results.clone().unwrap_or_else(|| out_dir.clone());
    let ident = require(&results, IDENT_CSV)?;
    let summary = require(&results, SUMMARY_JSON)?;
    let summaries = read_summary(&summary)?;

    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write_peak_vs_height(&out_dir.join(PEAK_VS_HEIGHT_CSV), &summaries)?;
    write_parameters(&out_dir.join(PARAMETERS_CSV), &summaries)?;
    write_overlay(&out_dir.join(OVERLAY_CSV), args, &ident)?;
    eprintln!("report written to {}", out_dir.display());
    Ok(Outcome::Clean)
}
