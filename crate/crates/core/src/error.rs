//! Error types shared across the crate.

use thiserror::Error;

use crate::fit::FitResult;

/// Failures of the closed-form models and of parameter validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{op}: input outside model domain ({reason})")]
    Domain { op: &'static str, reason: String },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("missing required field(s): {}", .0.join(", "))]
    MissingFields(Vec<&'static str>),
}

impl ModelError {
    pub(crate) fn domain(op: &'static str, reason: impl Into<String>) -> Self {
        ModelError::Domain {
            op,
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        ModelError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Failures raised by the fitters.
#[derive(Debug, Clone, Error)]
pub enum FitError {
    #[error("no resonance dip found (depth {depth:.3e} vs noise floor {noise:.3e})")]
    NoDipFound { depth: f64, noise: f64 },
    #[error("optimizer did not converge after {iterations} iterations")]
    NotConverged {
        iterations: usize,
        partial: Box<FitResult>,
    },
    #[error("fit rejected by QC: {reason}")]
    QcFail {
        reason: String,
        result: Box<FitResult>,
    },
    #[error("ill-conditioned fit (condition number {condition_number:.3e}); degenerate direction {direction:?}")]
    IllConditioned {
        condition_number: f64,
        direction: Vec<(String, f64)>,
        partial: Box<FitResult>,
    },
    #[error("trace(s) {indices:?} lie above the bifurcation threshold")]
    BifurcationInFitWindow { indices: Vec<usize> },
    #[error("mean relative shift {mean_shift:.3e} is positive; data inconsistent with a downward quadratic shift")]
    PositiveShiftDominates { mean_shift: f64 },
    #[error("negative regression slope {slope:.3e} (+/- {std_error:.3e}) against (w/t)^2; points {points:?}")]
    NegativeSlope {
        slope: f64,
        std_error: f64,
        points: Vec<(f64, f64)>,
    },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Failures of ingestion, configuration and the campaign state machine.
#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("parse error at line {line}, column {column}: {reason}")]
    Parse {
        line: usize,
        column: usize,
        reason: String,
    },
    #[error("unsupported unit in header: {0}")]
    Unit(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("resonance lost: no dip in fast window [{lo_hz:.6e}, {hi_hz:.6e}] Hz")]
    LostResonance { lo_hz: f64, hi_hz: f64 },
    #[error("missing report inputs: {}", .0.join("; "))]
    MissingInput(Vec<String>),
    #[error("trace source: {0}")]
    Source(String),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
