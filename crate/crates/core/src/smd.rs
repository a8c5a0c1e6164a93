//! Spring-mass-damper forward model of a landing impact.
//!
//! `M x'' = -k x - c x' + F`, with `F = M sqrt(2 g h) / Δt` applied from rest
//! over `[0, Δt]` and zero afterwards. The force reaching the load cell is
//! `F_R = k x + c x'`. Gravity does not act on the post-contact dynamics.

use thiserror::Error;

use crate::scalar::Scalar;
use crate::signal::{TimeSeries, Unit};

pub const DEFAULT_GRAVITY: f64 = 9.81;
pub const DEFAULT_PULSE_DURATION: f64 = 0.015;
pub const DEFAULT_SOLVER_STEP: f64 = 1.0 / 30_000.0;
pub const DEFAULT_SOLVER_DURATION: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmdError {
    #[error("`{field}` must be positive (got {value})")]
    NonPositiveInput { field: &'static str, value: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("integration produced a non-finite state at t = {t} s")]
    UnstableIntegration { t: f64 },
    #[error("target interval {target_dt} s is finer than the source interval {source_dt} s")]
    UpsamplingRequested { source_dt: f64, target_dt: f64 },
}

pub type Result<T, E = SmdError> = std::result::Result<T, E>;

fn positive<T: Scalar>(field: &'static str, value: T) -> Result<T> {
    if value > T::zero() && value.is_finite() {
        Ok(value)
    } else {
        Err(SmdError::NonPositiveInput { field, value: value.to_f64_lossy() })
    }
}

/// Model parameters: mass (kg), stiffness k (N/m), damping c (N·s/m), drop
/// height h (m), gravity g (m/s²) and pulse duration Δt (s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmdParams<T> {
    pub mass: T,
    pub stiffness: T,
    pub damping: T,
    pub drop_height: T,
    pub gravity: T,
    pub pulse_duration: T,
}

impl<T: Scalar> SmdParams<T> {
    /// Parameters with the default gravity and pulse duration.
    pub fn new(mass: T, stiffness: T, damping: T, drop_height: T) -> Result<Self> {
        let p = Self {
            mass,
            stiffness,
            damping,
            drop_height,
            gravity: T::lit(DEFAULT_GRAVITY),
            pulse_duration: T::lit(DEFAULT_PULSE_DURATION),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("mass", self.mass)?;
        positive("stiffness", self.stiffness)?;
        if !(self.damping >= T::zero()) || !self.damping.is_finite() {
            return Err(SmdError::NonPositiveInput { field: "damping", value: self.damping.to_f64_lossy() });
        }
        positive("drop_height", self.drop_height)?;
        positive("gravity", self.gravity)?;
        positive("pulse_duration", self.pulse_duration)?;
        Ok(())
    }

    pub fn with_coefficients(self, stiffness: T, damping: T) -> Self {
        Self { stiffness, damping, ..self }
    }

    pub fn impulse_force(&self) -> T {
        (self.mass * (T::lit(2.0) * self.gravity * self.drop_height).sqrt()) / self.pulse_duration
    }

    pub fn natural_frequency(&self) -> T {
        (self.stiffness / self.mass).sqrt()
    }

    /// `c / (2 sqrt(M k))`.
    pub fn damping_ratio(&self) -> T {
        self.damping / (T::lit(2.0) * (self.mass * self.stiffness).sqrt())
    }

    pub fn transmitted_force(&self, x: T, v: T) -> T {
        self.stiffness * x + self.damping * v
    }
}

/// Constant pulse force `M sqrt(2 g h) / Δt` delivering the landing momentum.
pub fn impulse_force<T: Scalar>(mass: T, drop_height: T, gravity: T, pulse_duration: T) -> Result<T> {
    positive("mass", mass)?;
    positive("drop_height", drop_height)?;
    positive("gravity", gravity)?;
    positive("pulse_duration", pulse_duration)?;
    Ok(mass * (T::lit(2.0) * gravity * drop_height).sqrt() / pulse_duration)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmdState<T> {
    pub x: T,
    pub v: T,
    pub t: T,
}

/// Exact model state together with the transmitted force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Response<T> {
    pub state: SmdState<T>,
    pub force: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMethod {
    #[default]
    Rk4Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    pub step: T,
    pub method: SolverMethod,
    pub duration: T,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            step: T::lit(DEFAULT_SOLVER_STEP),
            method: SolverMethod::Rk4Fixed,
            duration: T::lit(DEFAULT_SOLVER_DURATION),
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self, params: &SmdParams<T>) -> Result<()> {
        if !(self.step > T::zero()) || !self.step.is_finite() {
            return Err(SmdError::InvalidConfig(format!("step must be positive, got {}", self.step)));
        }
        if self.step > params.pulse_duration / T::lit(10.0) {
            return Err(SmdError::InvalidConfig(format!(
                "step {} exceeds a tenth of the pulse duration {}",
                self.step, params.pulse_duration
            )));
        }
        if !(self.duration >= params.pulse_duration) || !self.duration.is_finite() {
            return Err(SmdError::InvalidConfig(format!(
                "duration {} is shorter than the pulse duration {}",
                self.duration, params.pulse_duration
            )));
        }
        Ok(())
    }
}

/// State-transition matrix of the unforced system over a fixed time span:
/// `(y, v)(t) = Φ (y, v)(0)` where `y` is the displacement from equilibrium.
#[derive(Debug, Clone, Copy)]
struct Transition<T> {
    yy: T,
    yv: T,
    vy: T,
    vv: T,
}

impl<T: Scalar> Transition<T> {
    fn apply(&self, y: T, v: T) -> (T, T) {
        (self.yy * y + self.yv * v, self.vy * y + self.vv * v)
    }
}

/// Homogeneous dynamics `y'' + 2a y' + ω0² y = 0` with `a = c/2M`, `ω0² = k/M`.
#[derive(Debug, Clone, Copy)]
struct FreeDynamics<T> {
    a: T,
    w0_sq: T,
    regime: Regime<T>,
}

#[derive(Debug, Clone, Copy)]
enum Regime<T> {
    Under {
        wd: T,
    },
    Critical,
    /// `1 < ζ ≤ 1.25`: cosh/sinh form through `expm1`, stable as β → 0.
    OverNearCritical {
        beta: T,
    },
    /// `ζ > 1.25`: sum of the two real exponentials, stable as ζ → ∞.
    Over {
        beta: T,
    },
}

impl<T: Scalar> FreeDynamics<T> {
    fn new(params: &SmdParams<T>) -> Self {
        let two = T::lit(2.0);
        let a = params.damping / (two * params.mass);
        let w0_sq = params.stiffness / params.mass;
        let w0 = w0_sq.sqrt();
        // a² - ω0² factored to avoid cancellation near critical damping
        let disc = (a - w0) * (a + w0);
        let regime = if disc < T::zero() {
            Regime::Under { wd: (-disc).sqrt() }
        } else if disc == T::zero() {
            Regime::Critical
        } else {
            let beta = disc.sqrt();
            if beta > T::lit(0.6) * a {
                Regime::Over { beta }
            } else {
                Regime::OverNearCritical { beta }
            }
        };
        Self { a, w0_sq, regime }
    }

    fn transition(&self, t: T) -> Transition<T> {
        let a = self.a;
        // y(t) = y0 (C + a S) + v0 S,  v(t) = -ω0² S y0 + v0 (C - a S)
        let (c, s) = match self.regime {
            Regime::Under { wd } => {
                let e = (-a * t).exp();
                let (sn, cs) = (wd * t).sin_cos();
                (e * cs, e * sn / wd)
            }
            Regime::Critical => {
                let e = (-a * t).exp();
                (e, e * t)
            }
            Regime::OverNearCritical { beta } => {
                let e1 = (-(self.w0_sq / (a + beta)) * t).exp();
                let em = (-T::lit(2.0) * beta * t).exp_m1();
                (e1 * (T::lit(2.0) + em) / T::lit(2.0), -e1 * em / (T::lit(2.0) * beta))
            }
            Regime::Over { beta } => {
                let fast = a + beta;
                let slow = self.w0_sq / fast;
                let (e1, e2) = ((-slow * t).exp(), (-fast * t).exp());
                let d = T::lit(2.0) * beta;
                return Transition {
                    yy: (fast * e1 - slow * e2) / d,
                    yv: (e1 - e2) / d,
                    vy: -self.w0_sq * (e1 - e2) / d,
                    vv: (fast * e2 - slow * e1) / d,
                };
            }
        };
        Transition { yy: c + a * s, yv: s, vy: -self.w0_sq * s, vv: c - a * s }
    }
}

/// Exact piecewise solution: forced segment on `[0, Δt]`, free decay after.
pub fn analytic_response<T: Scalar>(params: &SmdParams<T>, t: T) -> Result<Response<T>> {
    params.validate()?;
    let dynamics = FreeDynamics::new(params);
    let x_eq = params.impulse_force() / params.stiffness;
    let (x, v) = if t <= params.pulse_duration {
        let (y, v) = dynamics.transition(t).apply(-x_eq, T::zero());
        (x_eq + y, v)
    } else {
        let (y1, v1) = dynamics.transition(params.pulse_duration).apply(-x_eq, T::zero());
        dynamics.transition(t - params.pulse_duration).apply(x_eq + y1, v1)
    };
    Ok(Response { state: SmdState { x, v, t }, force: params.transmitted_force(x, v) })
}

/// Closed-form `F_R` at `t_j = j dt` for `j in 0..n`.
///
/// Uses one transition matrix per segment and steps it along the grid, so the
/// cost is a handful of multiply-adds per sample. This is the evaluator used
/// by identification and synthesis.
pub fn sample_response<T: Scalar>(params: &SmdParams<T>, dt: T, n: usize) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(n);
    sample_response_into(params, dt, n, &mut out)?;
    Ok(out)
}

pub(crate) fn sample_response_into<T: Scalar>(params: &SmdParams<T>, dt: T, n: usize, out: &mut Vec<T>) -> Result<()> {
    params.validate()?;
    positive("dt", dt)?;
    out.clear();
    let dynamics = FreeDynamics::new(params);
    let step = dynamics.transition(dt);
    let x_eq = params.impulse_force() / params.stiffness;
    let pulse = params.pulse_duration;

    let (mut y, mut v) = (-x_eq, T::zero());
    let mut j = 0;
    while j < n && T::from_usize_lossy(j) * dt <= pulse {
        out.push(params.transmitted_force(x_eq + y, v));
        (y, v) = step.apply(y, v);
        j += 1;
    }
    if j == n {
        return Ok(());
    }
    let (y1, v1) = dynamics.transition(pulse).apply(-x_eq, T::zero());
    let (mut x, mut v) = dynamics.transition(T::from_usize_lossy(j) * dt - pulse).apply(x_eq + y1, v1);
    while j < n {
        out.push(params.transmitted_force(x, v));
        (x, v) = step.apply(x, v);
        j += 1;
    }
    Ok(())
}

fn rk4_step<T: Scalar>(params: &SmdParams<T>, x: T, v: T, h: T, force: T) -> (T, T) {
    let accel = |x: T, v: T| (force - params.stiffness * x - params.damping * v) / params.mass;
    let two = T::lit(2.0);
    let half = h / two;
    let (k1x, k1v) = (v, accel(x, v));
    let (k2x, k2v) = (v + half * k1v, accel(x + half * k1x, v + half * k1v));
    let (k3x, k3v) = (v + half * k2v, accel(x + half * k2x, v + half * k2v));
    let (k4x, k4v) = (v + h * k3v, accel(x + h * k3x, v + h * k3v));
    let sixth = h / T::lit(6.0);
    (x + sixth * (k1x + two * k2x + two * k3x + k4x), v + sixth * (k1v + two * k2v + two * k3v + k4v))
}

/// Integrates the model from rest with fixed-step RK4 and returns `F_R` on
/// the solver grid `t_j = j * step`. A step straddling the end of the pulse
/// is split there.
pub fn simulate_response<T: Scalar>(params: &SmdParams<T>, solver: &SolverConfig<T>) -> Result<TimeSeries<T>> {
    params.validate()?;
    solver.validate(params)?;
    let SolverMethod::Rk4Fixed = solver.method;
    let h = solver.step;
    let steps = (solver.duration / h).round().to_usize().unwrap_or(0);
    let pulse = params.pulse_duration;
    let force = params.impulse_force();
    let (mut x, mut v) = (T::zero(), T::zero());
    let mut out = Vec::with_capacity(steps + 1);
    out.push(T::zero());
    for j in 0..steps {
        let t0 = T::from_usize_lossy(j) * h;
        let t1 = T::from_usize_lossy(j + 1) * h;
        (x, v) = if t1 <= pulse {
            rk4_step(params, x, v, h, force)
        } else if t0 >= pulse {
            rk4_step(params, x, v, h, T::zero())
        } else {
            let (xm, vm) = rk4_step(params, x, v, pulse - t0, force);
            rk4_step(params, xm, vm, t1 - pulse, T::zero())
        };
        if !x.is_finite() || !v.is_finite() {
            return Err(SmdError::UnstableIntegration { t: t1.to_f64_lossy() });
        }
        out.push(params.transmitted_force(x, v));
    }
    TimeSeries::new(out, h, Unit::Newton).map_err(|e| SmdError::InvalidConfig(e.to_string()))
}

/// Linear interpolation onto a coarser grid starting at the same origin.
pub fn resample<T: Scalar>(series: &TimeSeries<T>, target_dt: T) -> Result<TimeSeries<T>> {
    let dt = series.dt();
    if !(target_dt > T::zero()) || !target_dt.is_finite() {
        return Err(SmdError::NonPositiveInput { field: "target_dt", value: target_dt.to_f64_lossy() });
    }
    if target_dt == dt {
        return Ok(series.clone());
    }
    if target_dt < dt {
        return Err(SmdError::UpsamplingRequested {
            source_dt: dt.to_f64_lossy(),
            target_dt: target_dt.to_f64_lossy(),
        });
    }
    let values = series.values();
    let last = values.len() - 1;
    let span = dt * T::from_usize_lossy(last);
    let count = (span / target_dt + T::lit(1e-9)).floor().to_usize().unwrap_or(0) + 1;
    let out = (0..count)
        .map(|i| {
            let pos = T::from_usize_lossy(i) * target_dt / dt;
            let idx = pos.floor().to_usize().unwrap_or(0).min(last);
            if idx == last {
                values[last]
            } else {
                let frac = pos - T::from_usize_lossy(idx);
                values[idx] + (values[idx + 1] - values[idx]) * frac
            }
        })
        .collect();
    Ok(TimeSeries::new(out, target_dt, series.unit())
        .map_err(|e| SmdError::InvalidConfig(e.to_string()))?
        .with_origin(series.t_origin()))
}
