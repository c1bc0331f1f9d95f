//! Hanger transmission, linear and Kerr-nonlinear, and the drive calibration.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::constants::HBAR;
use super::occupation::occupation_roots;
use super::params::{EnvironmentParams, KerrModelParams, ResonanceParams};
use crate::error::ModelError;

/// Configuration factor `C` in the power/photon-number relation for a hanger.
pub const HANGER_CONFIG_C: f64 = 4.0;

/// `1 − r·(1 + i·tanφ)/(1 + 2i·x)`; `e^{iφ}/cosφ = 1 + i·tanφ`.
#[inline]
pub(crate) fn hanger_core(x: f64, ratio: f64, tan_phi: f64) -> Complex64 {
    let num = Complex64::new(ratio, ratio * tan_phi);
    Complex64::new(1.0, 0.0) - num / Complex64::new(1.0, 2.0 * x)
}

/// Off-resonance background `a·e^{iα}·e^{−2πifτ}`.
#[inline]
pub fn environment_factor(f_hz: f64, env: &EnvironmentParams) -> Complex64 {
    Complex64::from_polar(env.amplitude(), env.alpha() - TAU * f_hz * env.tau())
}

/// Linear hanger transmission at drive frequency `f_hz`.
pub fn s21_linear(f_hz: f64, res: &ResonanceParams, env: &EnvironmentParams) -> Complex64 {
    let total = res.total_rate();
    let x = (TAU * f_hz - res.omega0()) / total;
    environment_factor(f_hz, env) * hanger_core(x, res.kappa() / total, env.phi().tan())
}

/// Watts from dBm.
pub fn watts_from_dbm(p_dbm: f64) -> f64 {
    10f64.powf(p_dbm / 10.0) / 1000.0
}

/// Mean intracavity photon number at resonance for source power `power_dbm`
/// behind `attenuation_db` of line attenuation.
pub fn photon_number(
    power_dbm: f64,
    attenuation_db: f64,
    res: &ResonanceParams,
    config_c: f64,
) -> f64 {
    let total = res.total_rate();
    config_c * res.kappa() / (HBAR * res.omega0() * total * total)
        * watts_from_dbm(power_dbm - attenuation_db)
}

/// Input photon flux `|α_in|²` (1/s) consistent with [`photon_number`]:
/// the linear on-resonance occupation `2·κ|α_in|²/(κ+γ)²` equals it.
pub fn drive_flux_from_power(
    power_dbm: f64,
    attenuation_db: f64,
    res: &ResonanceParams,
    config_c: f64,
) -> f64 {
    0.5 * config_c * watts_from_dbm(power_dbm - attenuation_db) / (HBAR * res.omega0())
}

/// `|α̃_in|² = κ|α_in|²/(κ+γ)²`, the photon scale multiplying the
/// normalized occupation.
pub(crate) fn photon_scale(res: &ResonanceParams, drive_amplitude_sq: f64) -> f64 {
    let total = res.total_rate();
    res.kappa() * drive_amplitude_sq / (total * total)
}

/// Normalized Kerr drive `ξ = |α̃_in|²·K/(κ+γ)`.
pub fn normalized_drive(res: &ResonanceParams, kerr: &KerrModelParams) -> f64 {
    photon_scale(res, kerr.drive_amplitude_sq()) * kerr.kerr() / res.total_rate()
}

/// One evaluation of the nonlinear hanger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearPoint {
    pub s21: Complex64,
    /// Normalized detuning `δ`.
    pub delta: f64,
    pub xi: f64,
    /// Stable (smallest) normalized occupation.
    pub occupation: f64,
    /// Intracavity photons `n·|α̃_in|²`.
    pub photons: f64,
    pub n_roots: usize,
}

impl NonlinearPoint {
    pub fn is_multistable(&self) -> bool {
        self.n_roots >= 2
    }
}

/// Nonlinear core without environment, on the low-amplitude branch.
pub(crate) fn nonlinear_core(
    delta: f64,
    xi: f64,
    ratio: f64,
    tan_phi: f64,
) -> (Complex64, f64, usize) {
    let (roots, count) = occupation_roots(delta, xi);
    let n = roots[0];
    (hanger_core(delta - xi * n, ratio, tan_phi), n, count)
}

/// Nonlinear transmission with the background of `env`; never fails and
/// reports multistability instead.
pub fn hanger_response(
    f_hz: f64,
    res: &ResonanceParams,
    env: &EnvironmentParams,
    kerr: &KerrModelParams,
) -> NonlinearPoint {
    let total = res.total_rate();
    let delta = (TAU * f_hz - res.omega0()) / total;
    let scale = photon_scale(res, kerr.drive_amplitude_sq());
    let xi = scale * kerr.kerr() / total;
    let (core, n, count) = nonlinear_core(delta, xi, res.kappa() / total, env.phi().tan());
    NonlinearPoint {
        s21: environment_factor(f_hz, env) * core,
        delta,
        xi,
        occupation: n,
        photons: n * scale,
        n_roots: count,
    }
}

/// Kerr-nonlinear hanger transmission (no background). Fails when the
/// operating point is multistable.
pub fn s21_nonlinear(
    f_hz: f64,
    res: &ResonanceParams,
    kerr: &KerrModelParams,
    env_phi: f64,
) -> Result<Complex64, ModelError> {
    let env = EnvironmentParams::with_phi(env_phi)?;
    let p = hanger_response(f_hz, res, &env, kerr);
    if p.is_multistable() {
        return Err(ModelError::domain(
            "s21_nonlinear",
            format!(
                "{} steady states at delta = {}, xi = {}",
                p.n_roots, p.delta, p.xi
            ),
        ));
    }
    Ok(p.s21)
}
