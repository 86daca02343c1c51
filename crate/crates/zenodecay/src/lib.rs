//! Numerical laboratory for decay as the continuous limit of repeated
//! internal projective measurements.
//!
//! The crate is organized around four layers:
//!
//! - [`operator`]: dense Hermitian kinematics (density operators, projectors,
//!   spectral decomposition, unitary evolution);
//! - [`measurement`]: per-step survival, instantaneous decay rates, and the
//!   compound product of a measurement sequence with its continuous limit;
//! - [`ensemble`]: stochastic sequences of undecayed subspaces, Monte Carlo
//!   trajectory ensembles, and exponential fits of survival curves;
//! - [`continuum`]: discretized-continuum models, golden-rule rates,
//!   Lippmann–Schwinger solves, decay channels, exact unitary dynamics, and
//!   line-shape fits.
//!
//! [`experiments`] ties the layers together behind a reproducible,
//! seed-deterministic runner used by the `zenodecay` binary.

pub mod continuum;
pub mod curve;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod measurement;
pub mod operator;
pub mod svg;
pub mod tol;

pub use error::{Error, ParseIssue, Result};
