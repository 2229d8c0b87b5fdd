//! Exact and subsampling Metropolis-Hastings kernels on 1-D posteriors, compiled
//! into exactly analyzable transition matrices on a grid, plus the perturbation
//! and mixing diagnostics needed to certify how far an approximate chain can
//! drift from its base chain, and a budgeted bias-variance framework for picking
//! the subsample size under a fixed likelihood-evaluation budget.
//!
//! The crate is `no_std`-compatible (with `alloc`); the default `std` feature
//! enables the faster standard-library float intrinsics. IO, file formats and
//! the command line live in the companion `submc` crate.
//!
//! Layout:
//! - [`model`]: data sets, likelihood/prior families, closed-form reference posteriors.
//! - [`kernels`]: one transition step per algorithm variant, with exact cost accounting.
//! - [`grid`]: discretized transition matrices and all exact chain diagnostics
//!   (total variation, Wasserstein, mixing times, curvature, drift, certificates).
//! - [`tradeoff`]: the budgeted error decomposition, its bounds, and subsample-size
//!   optimization.
//! - [`experiments`]: scripted reproductions of the worked examples, each emitting
//!   a machine-readable record.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod experiments;
pub mod grid;
pub mod kernels;
pub mod linalg;
pub mod math;
pub mod model;
pub mod rng;
pub mod tradeoff;

pub use error::Error;
