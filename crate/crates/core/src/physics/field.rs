//! Magnetic-field response: frequency shifts and gap suppression.

use std::f64::consts::PI;

use super::constants::{E_CHARGE, HBAR, K_B};
use super::materials::{FilmProperties, ResonatorGeometry};
use crate::error::ModelError;

/// `(π/48)·e²t²/(ħ k_B T_C)` in s/(m²·T²): the in-plane coefficient per unit
/// diffusion constant.
pub(crate) fn shift_prefactor(film: &FilmProperties) -> Result<f64, ModelError> {
    film.require(&["thickness_t", "critical_temp_tc"])?;
    let t = film.thickness()?;
    let tc = film.critical_temp()?;
    Ok(PI / 48.0 * E_CHARGE * E_CHARGE * t * t / (HBAR * K_B * tc))
}

/// Coefficient `c` of the in-plane shift `Δω/ω₀ = −c·B∥²`, in 1/T²:
/// `(π/48)·e²t²/(ħ k_B T_C)·D·(1 + θ_B² w²/t²)`.
pub fn inplane_shift_coefficient(
    film: &FilmProperties,
    geom: &ResonatorGeometry,
    theta_b: f64,
) -> Result<f64, ModelError> {
    film.require(&["thickness_t", "critical_temp_tc", "diffusion_d"])?;
    let t = film.thickness()?;
    let d = film.diffusion()?;
    let w = geom.width();
    let misalignment = 1.0 + theta_b * theta_b * w * w / (t * t);
    Ok(shift_prefactor(film)? * d * misalignment)
}

/// Relative frequency shift under an in-plane field with out-of-plane
/// misalignment `theta_b` (rad).
pub fn inplane_freq_shift(
    b_par: f64,
    film: &FilmProperties,
    geom: &ResonatorGeometry,
    theta_b: f64,
) -> Result<f64, ModelError> {
    if !(b_par >= 0.0 && b_par.is_finite()) {
        return Err(ModelError::domain(
            "inplane_freq_shift",
            format!("b_par must be >= 0, got {b_par}"),
        ));
    }
    Ok(-inplane_shift_coefficient(film, geom, theta_b)? * b_par * b_par)
}

/// `−¼(B/B_C)²`.
pub fn quadratic_shift_bc(b: f64, b_c: f64) -> Result<f64, ModelError> {
    if !(b_c > 0.0 && b_c.is_finite()) {
        return Err(ModelError::domain(
            "quadratic_shift_bc",
            format!("b_c must be > 0, got {b_c}"),
        ));
    }
    let r = b / b_c;
    Ok(-0.25 * r * r)
}

/// Invert `−¼(B/B_C)²` for a single observation.
pub fn critical_field_from_shift(b: f64, rel_shift: f64) -> Result<f64, ModelError> {
    if !(rel_shift < 0.0) || b == 0.0 {
        return Err(ModelError::domain(
            "critical_field_from_shift",
            format!("need b != 0 and a negative shift, got b = {b}, shift = {rel_shift}"),
        ));
    }
    Ok(b.abs() / (-4.0 * rel_shift).sqrt())
}

/// `Δ(B) = Δ₀·sqrt(1 − (B/B_C)²)`.
pub fn gap_vs_field(b: f64, film: &FilmProperties, b_c: f64) -> Result<f64, ModelError> {
    if !(b_c > 0.0) {
        return Err(ModelError::domain(
            "gap_vs_field",
            format!("b_c must be > 0, got {b_c}"),
        ));
    }
    if !(0.0..=b_c).contains(&b) {
        return Err(ModelError::domain(
            "gap_vs_field",
            format!("b = {b} T outside [0, B_C = {b_c} T]"),
        ));
    }
    let r = b / b_c;
    Ok(film.gap()? * (1.0 - r * r).max(0.0).sqrt())
}
