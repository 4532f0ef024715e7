//! Long-range dependent completely correlated mixed fractional Brownian
//! motion: a single Brownian motion W drives both the Brownian part and,
//! through the Molchan-Golosov kernel, the fractional part of
//! X = a·W + b·B^H with Hurst index H in (1/2, 1).
//!
//! The crate provides
//! - pointwise kernel evaluation with singularity-aware quadrature
//!   ([`kernels`]),
//! - the covariance structure and long-range-dependence diagnostics
//!   ([`covariance`]),
//! - discretized Volterra operators, the explicit inverse kernel and the
//!   resolvent series ([`operators`]),
//! - exact and approximate path simulation plus recovery of the driving
//!   Brownian motion ([`simulation`]),
//! - drift likelihood, maximum-likelihood estimation and conditional
//!   prediction ([`inference`]),
//! - the desk-scale verification suite behind the `verify` CLI subcommand
//!   ([`verify`]).

pub mod covariance;
mod error;
pub mod inference;
pub mod kernels;
pub mod operators;
mod params;
pub mod simulation;
pub mod verify;

mod grid;
mod quad;

pub use error::{Error, Result};
pub use grid::{SampledFunction, TimeGrid};
pub use params::{ModelParams, QuadratureSpec, SeriesSpec};

pub use covariance::IncrementQuery;
pub use inference::{DriftHypothesis, EquivalenceSpec, PredictionResult};
pub use operators::TriangularKernel;
pub use simulation::{SamplePath, Scheme, SeriesBasis, SimConfig};
