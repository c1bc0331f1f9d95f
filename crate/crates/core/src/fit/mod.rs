//! Complex least-squares fitters and their shared result type.
//!
//! Every fitter returns a [`FitResult`] whose parameters are keyed by
//! reporting name in reporting units (Hz, Hz/photon, T, degrees for the
//! misalignment angle). Internal optimization runs in rad/s.

mod circle;
mod field;
mod kerr;
mod linear;
pub(crate) mod lm;
mod power;

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FitError, ModelError};

pub use circle::{dip_statistics, initial_guess_circle, DipStatistics};
pub use field::{
    fit_ctilde_from_frequency, fit_field_sweep_bc, fit_misalignment, pair_breaking_by_width,
};
pub use kerr::{fit_kerr_2d, fit_kerr_below_bifurcation, KerrFit, KerrMapFit};
pub use linear::{fit_linear_resonance, fit_linear_resonance_raw, LinearFit};
pub use power::fit_power_scan;

/// Frequency axis with paired complex transmission samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TraceRaw", into = "TraceRaw")]
pub struct ComplexTrace {
    freqs: Vec<f64>,
    samples: Vec<Complex64>,
    power_dbm: f64,
    attenuation_db: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceRaw {
    freqs: Vec<f64>,
    samples: Vec<Complex64>,
    power_dbm: f64,
    attenuation_db: f64,
}

impl TryFrom<TraceRaw> for ComplexTrace {
    type Error = ModelError;
    fn try_from(r: TraceRaw) -> Result<Self, ModelError> {
        ComplexTrace::new(r.freqs, r.samples, r.power_dbm, r.attenuation_db)
    }
}

impl From<ComplexTrace> for TraceRaw {
    fn from(t: ComplexTrace) -> Self {
        TraceRaw {
            freqs: t.freqs,
            samples: t.samples,
            power_dbm: t.power_dbm,
            attenuation_db: t.attenuation_db,
        }
    }
}

impl ComplexTrace {
    pub const MIN_POINTS: usize = 8;

    pub fn new(
        freqs: Vec<f64>,
        samples: Vec<Complex64>,
        power_dbm: f64,
        attenuation_db: f64,
    ) -> Result<Self, ModelError> {
        if freqs.len() != samples.len() {
            return Err(ModelError::invalid(
                "samples",
                format!("{} samples for {} frequencies", samples.len(), freqs.len()),
            ));
        }
        if freqs.len() < Self::MIN_POINTS {
            return Err(ModelError::invalid(
                "freqs",
                format!(
                    "need at least {} points, got {}",
                    Self::MIN_POINTS,
                    freqs.len()
                ),
            ));
        }
        if let Some(k) = freqs.iter().position(|f| !f.is_finite() || *f <= 0.0) {
            return Err(ModelError::invalid(
                "freqs",
                format!("entry {k} is not a positive frequency"),
            ));
        }
        if let Some(k) = freqs.windows(2).position(|w| w[1] <= w[0]) {
            return Err(ModelError::invalid(
                "freqs",
                format!("not strictly increasing at entry {}", k + 1),
            ));
        }
        if let Some(k) = samples
            .iter()
            .position(|s| !(s.re.is_finite() && s.im.is_finite()))
        {
            return Err(ModelError::invalid(
                "samples",
                format!("entry {k} is not finite"),
            ));
        }
        if !power_dbm.is_finite() || !attenuation_db.is_finite() {
            return Err(ModelError::invalid(
                "power_dbm",
                "power and attenuation must be finite",
            ));
        }
        Ok(ComplexTrace {
            freqs,
            samples,
            power_dbm,
            attenuation_db,
        })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }
    pub fn power_dbm(&self) -> f64 {
        self.power_dbm
    }
    pub fn attenuation_db(&self) -> f64 {
        self.attenuation_db
    }
    pub fn len(&self) -> usize {
        self.freqs.len()
    }
    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Every `step`-th point starting at the first.
    pub fn decimate(&self, step: usize) -> Result<Self, ModelError> {
        let step = step.max(1);
        ComplexTrace::new(
            self.freqs.iter().step_by(step).copied().collect(),
            self.samples.iter().step_by(step).copied().collect(),
            self.power_dbm,
            self.attenuation_db,
        )
    }

    /// The same trace multiplied by a complex constant.
    pub fn scaled(&self, c: Complex64) -> Self {
        ComplexTrace {
            samples: self.samples.iter().map(|s| s * c).collect(),
            ..self.clone()
        }
    }
}

/// Which fitter produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    LinearResonance,
    PowerScan,
    Kerr2d,
    FieldSweep,
    Misalignment,
}

impl FitKind {
    /// Parameters checked by the QC error bound, in reporting units.
    pub fn reporting_params(self) -> &'static [&'static str] {
        match self {
            FitKind::LinearResonance => &["f0_hz", "q_i", "q_c", "phi_rad"],
            FitKind::PowerScan => &["f_delta_tls", "beta", "delta0"],
            FitKind::Kerr2d => &["kerr_hz_per_photon", "phi_rad"],
            FitKind::FieldSweep => &["b_c"],
            FitKind::Misalignment => &["theta_deg", "d"],
        }
    }
}

/// Optimizer diagnostics carried with every result.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub n_points: usize,
    pub dof: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_number: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub residual_history: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Output of every fitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: FitKind,
    pub params: BTreeMap<String, f64>,
    /// 1σ, present only for converged fits.
    pub std_errors: Option<BTreeMap<String, f64>>,
    /// Sum of squared (weighted) residuals.
    pub residual_norm: f64,
    pub converged: bool,
    pub n_iterations: usize,
    pub diagnostics: FitDiagnostics,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.std_errors.as_ref().and_then(|e| e.get(name).copied())
    }

    pub(crate) fn build(
        kind: FitKind,
        params: Vec<(&str, f64)>,
        errors: Option<Vec<(&str, f64)>>,
        residual_norm: f64,
        converged: bool,
        n_iterations: usize,
        diagnostics: FitDiagnostics,
    ) -> Self {
        let to_map = |v: Vec<(&str, f64)>| v.into_iter().map(|(k, x)| (k.to_string(), x)).collect();
        FitResult {
            kind,
            params: to_map(params),
            std_errors: if converged { errors.map(to_map) } else { None },
            residual_norm,
            converged,
            n_iterations,
            diagnostics,
        }
    }
}

/// Outcome of [`qc_filter`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcDecision {
    pub accepted: bool,
    pub reason: String,
}

/// Default per-parameter std-error ceiling.
pub const QC_MAX_STD_ERROR: f64 = 1e3;

/// Exclusion rule with the default ceiling.
pub fn qc_filter(result: &FitResult) -> QcDecision {
    qc_filter_with(result, QC_MAX_STD_ERROR)
}

/// Rejects unconverged fits, non-positive quality factors, and any reporting
/// parameter whose std error exceeds `max_std_error`.
pub fn qc_filter_with(result: &FitResult, max_std_error: f64) -> QcDecision {
    let reject = |reason: String| QcDecision {
        accepted: false,
        reason,
    };
    if !result.converged {
        return reject(format!(
            "not converged after {} iterations",
            result.n_iterations
        ));
    }
    for q in ["q_i", "q_c"] {
        if let Some(v) = result.param(q) {
            if !(v > 0.0) {
                return reject(format!("{q} = {v} is not positive"));
            }
        }
    }
    let Some(errors) = &result.std_errors else {
        return reject("no uncertainty estimate".into());
    };
    for name in result.kind.reporting_params() {
        match errors.get(*name) {
            Some(e) if !e.is_finite() => {
                return reject(format!("std error of {name} is not finite"))
            }
            Some(e) if *e > max_std_error => {
                return reject(format!(
                    "std error of {name} = {e:.4e} exceeds {max_std_error:e}"
                ))
            }
            _ => {}
        }
    }
    QcDecision {
        accepted: true,
        reason: "accepted".into(),
    }
}

/// Raises [`FitError::QcFail`] for a rejected result.
pub fn require_qc(result: FitResult, max_std_error: f64) -> Result<FitResult, FitError> {
    let d = qc_filter_with(&result, max_std_error);
    if d.accepted {
        Ok(result)
    } else {
        Err(FitError::QcFail {
            reason: d.reason,
            result: Box::new(result),
        })
    }
}

/// One point of a power scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerScanPoint {
    pub n_ph: f64,
    pub q_i: f64,
    pub q_i_err: f64,
}

/// Internal quality factor against photon number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerScan {
    pub points: Vec<PowerScanPoint>,
}

impl PowerScan {
    pub fn new(points: Vec<PowerScanPoint>) -> Result<Self, ModelError> {
        for p in &points {
            if !(p.n_ph > 0.0 && p.n_ph.is_finite()) {
                return Err(ModelError::invalid(
                    "n_ph",
                    format!("must be > 0, got {}", p.n_ph),
                ));
            }
            if !(p.q_i > 0.0 && p.q_i.is_finite()) {
                return Err(ModelError::invalid(
                    "q_i",
                    format!("must be > 0, got {}", p.q_i),
                ));
            }
            if !(p.q_i_err > 0.0 && p.q_i_err.is_finite()) {
                return Err(ModelError::invalid(
                    "q_i_err",
                    format!("must be > 0, got {}", p.q_i_err),
                ));
            }
        }
        Ok(PowerScan { points })
    }
}

/// Field orientation relative to the film plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    InPlane,
    OutOfPlane,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldPoint {
    pub b: f64,
    pub rel_shift: f64,
    pub q_i: f64,
    pub q_c: f64,
}

/// Tracked resonance against applied field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSweepSeries {
    pub orientation: Orientation,
    pub points: Vec<FieldPoint>,
}

impl FieldSweepSeries {
    pub fn new(orientation: Orientation, points: Vec<FieldPoint>) -> Result<Self, ModelError> {
        if let Some(k) = points.iter().position(|p| !(p.b.is_finite() && p.b >= 0.0)) {
            return Err(ModelError::invalid(
                "b",
                format!("point {k} has an invalid field"),
            ));
        }
        if let Some(k) = points.windows(2).position(|w| w[1].b < w[0].b) {
            return Err(ModelError::invalid(
                "b",
                format!("field decreases at point {}", k + 1),
            ));
        }
        Ok(FieldSweepSeries {
            orientation,
            points,
        })
    }
}

/// Standard errors from `s²·(JᵀJ)⁻¹`.
pub(crate) fn std_errors_from(lin: &lm::Linearization, rss: f64, dof: usize) -> Vec<f64> {
    let s2 = if dof > 0 { rss / dof as f64 } else { 0.0 };
    (0..lin.inverse_normal.nrows())
        .map(|k| (s2 * lin.inverse_normal[(k, k)]).max(0.0).sqrt())
        .collect()
}
