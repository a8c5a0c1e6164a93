#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use impactid::ident::{grid_params, GridSpec};
use impactid::signal::{ConditionKey, FootType};
use impactid::synth::{ConditionTruth, SynthSpec};

pub fn impactid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_impactid")).args(args).env_remove("IMPACTID_OUT").output().expect("binary runs")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn condition(foot: FootType, theta_a: f64, theta_t: f64, h_mm: f64) -> ConditionKey {
    ConditionKey::new(foot, theta_a, theta_t, h_mm).unwrap()
}

pub fn on_lattice(n_k: usize, n_c: usize) -> (f64, f64) {
    grid_params::<f64>(n_k, n_c, &GridSpec::default()).unwrap()
}

pub fn truth(cond: ConditionKey, (k, c): (f64, f64)) -> ConditionTruth {
    ConditionTruth { condition: cond, stiffness: k, damping: c }
}

/// Writes a synth spec and generates its dataset under `dir/data`.
pub fn synth(dir: &Path, spec: &SynthSpec) -> std::path::PathBuf {
    let spec_path = dir.join("spec.json");
    std::fs::write(&spec_path, serde_json::to_string(spec).unwrap()).unwrap();
    let data = dir.join("data");
    let out = impactid(&["synth", "--spec", path(&spec_path), "--out-dir", path(&data)]);
    assert!(out.status.success(), "synth failed: {}", stderr(&out));
    data.join("manifest.json")
}

/// Three skeleton conditions at two heights with distinct lattice truths.
pub fn small_spec(trials: u32, noise_sigma: f64) -> SynthSpec {
    let mut conditions = Vec::new();
    for h in [50.0, 200.0] {
        conditions.push(truth(condition(FootType::Flat, 0.0, 0.0, h), on_lattice(120, 150)));
        conditions.push(truth(condition(FootType::Rigid, 0.0, 0.0, h), on_lattice(160, 170)));
        conditions.push(truth(condition(FootType::Soft, 0.0, 0.0, h), on_lattice(90, 180)));
    }
    let mut spec = SynthSpec::new(1.0, conditions);
    spec.trials_per_condition = trials;
    spec.noise_sigma = noise_sigma;
    spec.seed = 11;
    spec
}
