//! Characterization toolkit for superconducting hanger resonators.
//!
//! The crate is split along the analysis chain:
//!
//! - [`physics`]: closed-form forward models (hanger transmission, Kerr
//!   occupation, loss, kinetic inductance, field response).
//! - [`fit`]: complex least-squares fitters built on a damped Gauss-Newton
//!   core, with covariance-based uncertainties and QC.
//! - [`synth`]: seeded synthetic data and brute-force oracles.
//! - [`campaign`]: trace I/O, field-sweep tracking state machine and
//!   report assembly.
//!
//! Rates are carried internally in rad/s; files and reports use Hz.

// `!(x > 0.0)` is the NaN-rejecting form used by every validator.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod campaign;
pub mod error;
pub mod fit;
pub mod physics;
pub mod synth;

pub use error::{CampaignError, FitError, ModelError};
