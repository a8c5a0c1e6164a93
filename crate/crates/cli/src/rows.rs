//! File formats produced by `identify` and read back by `stats` and `report`.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use impactid::ident::{ConditionSummary, IdentResult};
use impactid::signal::{ConditionKey, FootType};
use serde::{Deserialize, Serialize};

use crate::format::sig6;

pub const IDENT_CSV: &str = "ident.csv";
pub const SUMMARY_JSON: &str = "summary.json";

/// One identified trial. Floats are written to 6 significant figures; the
/// 1-based lattice indices recover `(k, c)` exactly.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct IdentRow {
    pub file: PathBuf,
    pub foot_type: FootType,
    pub theta_a_deg: f64,
    pub theta_t_deg: f64,
    pub drop_height_mm: f64,
    pub trial: u32,
    pub k: f64,
    pub c: f64,
    pub zeta: f64,
    pub error: f64,
    pub peak_force: f64,
    pub n_k: usize,
    pub n_c: usize,
}

impl IdentRow {
    pub fn condition(&self) -> ConditionKey {
        ConditionKey {
            foot_type: self.foot_type,
            theta_a_deg: self.theta_a_deg,
            theta_t_deg: self.theta_t_deg,
            drop_height_mm: self.drop_height_mm,
        }
    }
}

const IDENT_HEADER: [&str; 13] = [
    "file",
    "foot_type",
    "theta_a_deg",
    "theta_t_deg",
    "drop_height_mm",
    "trial",
    "k",
    "c",
    "zeta",
    "error",
    "peak_force",
    "n_k",
    "n_c",
];

pub fn write_ident_csv(path: &Path, rows: &[(PathBuf, IdentResult<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(IDENT_HEADER)?;
    for (file, r) in rows {
        let c = &r.condition;
        w.write_record([
            file.display().to_string(),
            c.foot_type.to_string(),
            c.theta_a_deg.to_string(),
            c.theta_t_deg.to_string(),
            c.drop_height_mm.to_string(),
            r.trial_index.to_string(),
            sig6(r.k),
            sig6(r.c),
            sig6(r.zeta),
            sig6(r.error),
            sig6(r.peak_force),
            r.grid_index.0.to_string(),
            r.grid_index.1.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ident_csv(path: &Path) -> Result<Vec<IdentRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.with_context(|| format!("{}: row {}", path.display(), i + 2)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadOut {
    pub mean: f64,
    pub sd: Option<f64>,
}

/// Per-condition means and sample standard deviations (`sd` is null for a
/// single trial).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryOut {
    pub label: String,
    pub foot_type: FootType,
    pub theta_a_deg: f64,
    pub theta_t_deg: f64,
    pub drop_height_mm: f64,
    pub n: usize,
    pub k: SpreadOut,
    pub c: SpreadOut,
    pub zeta: SpreadOut,
    pub peak_force: SpreadOut,
}

impl SummaryOut {
    pub fn from_summary(s: &ConditionSummary<f64>) -> Self {
        let spread = |x: impactid::ident::Spread<f64>| SpreadOut { mean: x.mean, sd: x.sd };
        let c = &s.condition;
        Self {
            label: c.label(),
            foot_type: c.foot_type,
            theta_a_deg: c.theta_a_deg,
            theta_t_deg: c.theta_t_deg,
            drop_height_mm: c.drop_height_mm,
            n: s.n,
            k: spread(s.k),
            c: spread(s.c),
            zeta: spread(s.zeta),
            peak_force: spread(s.peak_force),
        }
    }
}

pub fn write_summary(path: &Path, summaries: &[SummaryOut]) -> Result<()> {
    let text = serde_json::to_string_pretty(summaries)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryOut>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
