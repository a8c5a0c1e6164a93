//! Apparent viscoelastic identification of landing impacts.
//!
//! A falling body is modelled as a spring-mass-damper driven by a constant
//! force pulse that delivers its landing momentum. Measured load-cell
//! waveforms are conditioned ([`signal`]), compared against the forward model
//! ([`smd`]) over a log-spaced `(k, c)` lattice with a peak-weighted error
//! ([`ident`]), and the identified parameters are compared across conditions
//! with rank statistics ([`stats`]). [`synth`] produces ground-truth datasets
//! in the same file formats.
//!
//! The numeric modules are generic over [`Scalar`] (`f32`/`f64`); the
//! aliases below pin the common `f64` instantiation.

pub mod ident;
pub mod scalar;
pub mod signal;
pub mod smd;
pub mod stats;
pub mod synth;

pub use scalar::Scalar;

pub type TimeSeries64 = signal::TimeSeries<f64>;
pub type TrialRecord64 = signal::TrialRecord<f64>;
pub type SmdParams64 = smd::SmdParams<f64>;
pub type SolverConfig64 = smd::SolverConfig<f64>;
pub type IdentConfig64 = ident::IdentConfig<f64>;
pub type IdentResult64 = ident::IdentResult<f64>;
pub type ModelConstants64 = ident::ModelConstants<f64>;

pub type TimeSeries32 = signal::TimeSeries<f32>;
pub type SmdParams32 = smd::SmdParams<f32>;
pub type IdentResult32 = ident::IdentResult<f32>;
