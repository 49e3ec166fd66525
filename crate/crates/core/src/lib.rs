//! Sup-norm inference for functional time series.
//!
//! The crate provides, for samples of curves observed on a shared uniform
//! grid over [0, 1]:
//!
//! - two-sample tests for the maximal deviation between mean curves, both
//!   classical (`H0: mu1 = mu2`) and relevant (`H0: sup|mu1 - mu2| <= delta`),
//!   calibrated by a multiplier block bootstrap ([`two_sample`]);
//! - simultaneous confidence bands for the mean difference ([`two_sample`]);
//! - CUSUM-type change-point location estimates and tests with the matching
//!   bootstrap ([`change_point`]);
//! - synthetic functional MA(1)/AR(1) data generators and mean families
//!   ([`dgp`]), a seeded replication-parallel Monte Carlo harness ([`mc`]),
//!   Fourier smoothing for raw observations ([`smooth`]) and text formats
//!   for everything ([`io`]).
//!
//! All randomness flows through [`rng::RngSpec`] streams, making every
//! result reproducible bit for bit, including under parallel execution.

pub mod basis;
mod block;
pub mod change_point;
pub mod curves;
pub mod dgp;
pub mod error;
pub mod io;
pub mod mc;
pub mod rng;
pub mod smooth;
pub mod two_sample;

pub use curves::{Curve, CurveSet, Grid, CANONICAL_GRID_SIZE};
pub use error::{Error, Result};
pub use rng::RngSpec;
