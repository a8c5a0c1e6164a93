use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use impactid::smd::{
    resample, sample_response, simulate_response, SmdParams, SolverConfig, SolverMethod, DEFAULT_GRAVITY,
    DEFAULT_PULSE_DURATION, DEFAULT_SOLVER_DURATION, DEFAULT_SOLVER_STEP,
};

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Evaluator {
    ClosedForm,
    Rk4,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Mass, kg
    #[arg(long = "M", alias = "mass", allow_hyphen_values = true)]
    pub mass: f64,
    /// Stiffness k, N/m
    #[arg(long, allow_hyphen_values = true)]
    pub k: f64,
    /// Damping c, N·s/m
    #[arg(long, allow_hyphen_values = true)]
    pub c: f64,
    /// Drop height, m
    #[arg(long, allow_hyphen_values = true)]
    pub h: f64,
    #[arg(long, default_value_t = DEFAULT_GRAVITY)]
    pub g: f64,
    /// Impulse duration Δt, s
    #[arg(long, default_value_t = DEFAULT_PULSE_DURATION)]
    pub pulse_duration: f64,
    /// Output sample interval, s (default 1/300)
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SOLVER_DURATION)]
    pub duration: f64,
    #[arg(long, value_enum, default_value_t = Evaluator::ClosedForm)]
    pub method: Evaluator,
    /// RK4 step, s
    #[arg(long, default_value_t = DEFAULT_SOLVER_STEP)]
    pub step: f64,
    /// Write to this file instead of standard output
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn run(args: &SimulateArgs) -> Result<()> {
    let params = SmdParams {
        mass: args.mass,
        stiffness: args.k,
        damping: args.c,
        drop_height: args.h,
        gravity: args.g,
        pulse_duration: args.pulse_duration,
    };
    params.validate().map_err(|e| UsageError(e.to_string()))?;
    let dt = args.dt.unwrap_or(1.0 / impactid::signal::SAMPLE_RATE_HZ);
    if !(dt > 0.0) || !(args.duration > 0.0) {
        return Err(UsageError("dt and duration must be positive".into()).into());
    }
    let n = (args.duration / dt).round() as usize + 1;
    let force = match args.method {
        Evaluator::ClosedForm => sample_response(&params, dt, n)?,
        Evaluator::Rk4 => {
            let solver = SolverConfig { step: args.step, method: SolverMethod::Rk4Fixed, duration: args.duration };
            solver.validate(&params).map_err(|e| UsageError(e.to_string()))?;
            let fine = simulate_response(&params, &solver)?;
            resample(&fine, dt).map_err(|e| UsageError(e.to_string()))?.into_values()
        }
    };
    let mut out: Box<dyn Write> = match &args.output {
        Some(path) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(std::io::BufWriter::new(std::io::stdout().lock())),
    };
    writeln!(out, "time_s,force_N")?;
    for (i, f) in force.iter().enumerate() {
        writeln!(out, "{},{f}", i as f64 * dt)?;
    }
    out.flush()?;
    Ok(())
}
