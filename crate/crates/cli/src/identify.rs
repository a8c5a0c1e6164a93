use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use impactid::ident::{aggregate, identify, IdentResult, ModelConstants};
use impactid::signal::{apply_offsets, load_manifest, Manifest, ManifestEntry, OffsetWindows, TrialRecord};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::rows::{write_ident_csv, write_summary, SummaryOut, IDENT_CSV, SUMMARY_JSON};
use crate::{Outcome, UsageError};

pub fn load_checked_manifest(cfg: &RunConfig) -> Result<Manifest> {
    let path = cfg.manifest()?;
    let manifest = load_manifest(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    if manifest.trials.is_empty() {
        return Err(UsageError(format!("{}: manifest lists no trials", path.display())).into());
    }
    Ok(manifest)
}

/// Mass precedence: run config, then the entry, then the manifest.
fn mass_for(cfg: &RunConfig, manifest: &Manifest, entry: &ManifestEntry) -> Option<f64> {
    cfg.mass_kg.or(entry.mass_kg).or(manifest.mass_kg)
}

pub fn model_for(cfg: &RunConfig, manifest: &Manifest, entry: &ManifestEntry) -> Result<ModelConstants<f64>> {
    let mass = mass_for(cfg, manifest, entry)
        .ok_or_else(|| anyhow!("no mass given (--mass, config `mass_kg`, or manifest `mass_kg`)"))?;
    Ok(ModelConstants { mass, gravity: cfg.gravity, pulse_duration: cfg.pulse_duration_s })
}

/// Loads one trial and removes the load-cell and height offsets.
pub fn conditioned_trial(manifest: &Manifest, entry: &ManifestEntry) -> Result<TrialRecord<f64>> {
    let raw = manifest.load_entry::<f64>(entry)?;
    let windows = match entry.baseline_window_s {
        Some(w) => OffsetWindows::with_baseline_seconds(&raw, w),
        None => OffsetWindows::default_for(&raw),
    };
    Ok(apply_offsets(&raw, &windows)?.0)
}

fn run_one(cfg: &RunConfig, manifest: &Manifest, entry: &ManifestEntry) -> Result<IdentResult<f64>> {
    let model = model_for(cfg, manifest, entry)?;
    let trial = conditioned_trial(manifest, entry)?;
    Ok(identify(&trial, &cfg.grid(), &model, &cfg.ident())?)
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let manifest = load_checked_manifest(cfg)?;
    if manifest.mass_kg.is_none() && cfg.mass_kg.is_none() && manifest.trials.iter().any(|e| e.mass_kg.is_none()) {
        return Err(UsageError("no mass given (--mass, config `mass_kg`, or manifest `mass_kg`)".into()).into());
    }
    let out_dir = cfg.out_dir();
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let results: Vec<(PathBuf, Result<IdentResult<f64>>)> =
        manifest.trials.par_iter().map(|entry| (entry.file.clone(), run_one(cfg, &manifest, entry))).collect();

    let mut ok = Vec::new();
    let mut failures = 0;
    for ((file, result), entry) in results.into_iter().zip(&manifest.trials) {
        match result {
            Ok(r) => ok.push((file, r)),
            Err(e) => {
                failures += 1;
                let label = entry.condition().map(|c| c.label()).unwrap_or_default();
                eprintln!("error: {} ({label} trial {}): {e:#}", file.display(), entry.trial_index);
            }
        }
    }

    write_ident_csv(&out_dir.join(IDENT_CSV), &ok)?;
    let summaries: Vec<SummaryOut> = if ok.is_empty() {
        Vec::new()
    } else {
        let results: Vec<_> = ok.iter().map(|(_, r)| r.clone()).collect();
        aggregate(&results)?.iter().map(SummaryOut::from_summary).collect()
    };
    write_summary(&out_dir.join(SUMMARY_JSON), &summaries)?;
    eprintln!("identified {} of {} trials -> {}", ok.len(), manifest.trials.len(), out_dir.display());
    Ok(if failures == 0 { Outcome::Clean } else { Outcome::PartialFailure })
}
