//! `(k, c)` identification by exhaustive search over a log-spaced lattice.
//!
//! Each measured trial is compared against the model response at every
//! lattice point. Residuals are weighted so that the oscillation following
//! the first positive peak dominates the fit; the lattice point with the
//! lowest weighted error wins.

mod aggregate;
mod grid;
mod search;
mod weights;

use thiserror::Error;

use crate::scalar::Scalar;
use crate::signal::{ConditionKey, SignalError};
use crate::smd::{SmdError, SmdParams};

pub use aggregate::{aggregate, ConditionSummary, Spread};
pub use grid::{grid_params, GridSpec};
pub use search::{fitted_overlay, identify, select_best, Candidate, Overlay};
pub use weights::{build_weights, weighted_error, ErrorMode, WeightMode, WeightVector, WEIGHT_GAIN};

#[derive(Debug, Error)]
pub enum IdentError {
    #[error("grid index {index} on the {axis} axis outside 1..={n_points}")]
    IndexOutOfRange { axis: &'static str, index: usize, n_points: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("peak index {index} outside series of {len} samples")]
    PeakMismatch { index: usize, len: usize },
    #[error("length mismatch: {measured} measured vs {simulated} simulated vs {weights} weights")]
    LengthMismatch { measured: usize, simulated: usize, weights: usize },
    #[error("no lattice point produced a comparable waveform")]
    EmptyGrid,
    #[error("empty group")]
    EmptyGroup,
    #[error("`{field}` must be positive (got {value})")]
    NonPositiveInput { field: &'static str, value: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Smd(#[from] SmdError),
}

pub type Result<T, E = IdentError> = std::result::Result<T, E>;

/// `c / (2 sqrt(M k))`.
pub fn damping_ratio<T: Scalar>(mass: T, stiffness: T, damping: T) -> Result<T> {
    for (field, value) in [("mass", mass), ("stiffness", stiffness)] {
        if !(value > T::zero()) || !value.is_finite() {
            return Err(IdentError::NonPositiveInput { field, value: value.to_f64_lossy() });
        }
    }
    if !(damping >= T::zero()) || !damping.is_finite() {
        return Err(IdentError::NonPositiveInput { field: "damping", value: damping.to_f64_lossy() });
    }
    Ok(damping / (T::lit(2.0) * (mass * stiffness).sqrt()))
}

/// Model quantities shared by every trial: mass, gravity, pulse duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConstants<T> {
    pub mass: T,
    pub gravity: T,
    pub pulse_duration: T,
}

impl<T: Scalar> ModelConstants<T> {
    pub fn new(mass: T) -> Self {
        Self {
            mass,
            gravity: T::lit(crate::smd::DEFAULT_GRAVITY),
            pulse_duration: T::lit(crate::smd::DEFAULT_PULSE_DURATION),
        }
    }

    pub fn params(&self, stiffness: T, damping: T, drop_height_m: T) -> SmdParams<T> {
        SmdParams {
            mass: self.mass,
            stiffness,
            damping,
            drop_height: drop_height_m,
            gravity: self.gravity,
            pulse_duration: self.pulse_duration,
        }
    }
}

/// How each lattice candidate's response is produced.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Evaluator<T> {
    /// Closed-form response sampled directly on the measurement grid.
    #[default]
    ClosedForm,
    /// RK4 at the given step, linearly resampled onto the measurement grid.
    Rk4 { step: T },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentConfig<T> {
    /// Comparison window length, s.
    pub window: T,
    /// Contact onset: start of the run of samples above this fraction of the first peak.
    pub onset_fraction: T,
    /// Minimum prominence of `s_p`, as a fraction of the largest |sample|.
    pub peak_prominence_fraction: T,
    /// Minimum prominence (N) of the post-peak extrema that raise the weights.
    pub weight_prominence: T,
    /// The first simulated positive peak must appear within this time after contact, s.
    pub peak_search: T,
    pub weight_mode: WeightMode,
    pub error_mode: ErrorMode,
    pub evaluator: Evaluator<T>,
}

impl<T: Scalar> Default for IdentConfig<T> {
    fn default() -> Self {
        Self {
            window: T::lit(0.150),
            onset_fraction: T::lit(0.05),
            peak_prominence_fraction: T::lit(0.25),
            weight_prominence: T::zero(),
            peak_search: T::lit(0.1),
            weight_mode: WeightMode::Compounding,
            error_mode: ErrorMode::Squared,
            evaluator: Evaluator::ClosedForm,
        }
    }
}

/// Best lattice point for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentResult<T> {
    pub condition: ConditionKey,
    pub trial_index: u32,
    pub k: T,
    pub c: T,
    pub zeta: T,
    pub error: T,
    /// 1-based `(n_k, n_c)`.
    pub grid_index: (usize, usize),
    /// Measured force at the first positive peak, N.
    pub peak_force: T,
    pub first_peak_index: usize,
    pub onset_index: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_damping_ratio() {
        assert_eq!(damping_ratio(1.0, 4.0, 4.0).unwrap(), 1.0);
        assert_eq!(damping_ratio(0.5, 1e5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn ratio_is_homogeneous() {
        let (m, k, c) = (0.7f64, 3.3e4, 12.5);
        let a = damping_ratio(m, k, c).unwrap();
        let b = damping_ratio(m, 4.0 * k, 2.0 * c).unwrap();
        assert!((a - b).abs() <= 1e-15 * a);
    }

    #[test]
    fn ratio_rejects_bad_input() {
        assert!(matches!(damping_ratio(0.0, 1.0, 1.0), Err(IdentError::NonPositiveInput { field: "mass", .. })));
        assert!(matches!(damping_ratio(1.0, 1.0, -1.0), Err(IdentError::NonPositiveInput { field: "damping", .. })));
    }
}
