//! Kinetic inductance, line constants and self-Kerr estimates.

use std::f64::consts::PI;

use super::constants::{E_CHARGE, HBAR, K_B};
use super::materials::{FilmProperties, ResonatorGeometry};
use crate::error::ModelError;

fn require_positive(op: &'static str, pairs: &[(&str, f64)]) -> Result<(), ModelError> {
    for (name, v) in pairs {
        if !(v.is_finite() && *v > 0.0) {
            return Err(ModelError::domain(
                op,
                format!("{name} must be > 0, got {v}"),
            ));
        }
    }
    Ok(())
}

/// Current-dependent sheet inductance `L_k(0)·[1 − (|i|/I_*)ⁿ]^(−1/n)`.
pub fn lk_of_current(i: f64, film: &FilmProperties) -> Result<f64, ModelError> {
    film.require(&["lk_sheet", "depairing_current_istar"])?;
    let lk0 = film.lk_sheet()?;
    let i_star = film.depairing_current()?;
    let n = film.depairing_exponent();
    let ratio = i.abs() / i_star;
    if !(ratio < 1.0) {
        return Err(ModelError::domain(
            "lk_of_current",
            format!(
                "|i| = {:.4e} A reaches the depairing current {i_star:.4e} A",
                i.abs()
            ),
        ));
    }
    Ok(lk0 * (1.0 - ratio.powf(n)).powf(-1.0 / n))
}

/// BCS self-Kerr `K = −(3/8)·ħω_r²/(L_t I_*²)`, rad/s per photon.
pub fn kerr_bcs(omega_r: f64, total_inductance: f64, i_star: f64) -> Result<f64, ModelError> {
    require_positive(
        "kerr_bcs",
        &[
            ("omega_r", omega_r),
            ("total_inductance", total_inductance),
            ("i_star", i_star),
        ],
    )?;
    Ok(-0.375 * HBAR * omega_r * omega_r / (total_inductance * i_star * i_star))
}

/// BCS self-Kerr written through the geometry, `−(3/8)·ħω_r²/(L_k j_c² t² l w)`.
pub fn kerr_bcs_geometric(
    omega_r: f64,
    film: &FilmProperties,
    geom: &ResonatorGeometry,
    j_c: f64,
) -> Result<f64, ModelError> {
    film.require(&["lk_sheet", "thickness_t"])?;
    let lk = film.lk_sheet()?;
    let t = film.thickness()?;
    let l = geom.length()?;
    let w = geom.width();
    require_positive("kerr_bcs_geometric", &[("omega_r", omega_r), ("j_c", j_c)])?;
    Ok(-0.375 * HBAR * omega_r * omega_r / (lk * j_c * j_c * t * t * l * w))
}

/// Josephson-array self-Kerr for granular films,
/// `−(3/16)·π e a ω_r²/(j_sw V_g)` with `j_sw = I_sw/(w t)` and `V_g = l w t`.
pub fn kerr_jj(
    omega_r: f64,
    film: &FilmProperties,
    geom: &ResonatorGeometry,
) -> Result<f64, ModelError> {
    film.require(&["grain_size_a", "switching_current_isw", "thickness_t"])?;
    let a = film.grain_size()?;
    let i_sw = film.switching_current()?;
    let t = film.thickness()?;
    let w = geom.width();
    let l = geom.length()?;
    require_positive("kerr_jj", &[("omega_r", omega_r)])?;
    let j_sw = i_sw / (w * t);
    let v_g = l * w * t;
    Ok(-(3.0 / 16.0) * PI * E_CHARGE * a * omega_r * omega_r / (j_sw * v_g))
}

/// Sheet inductance from the normal-state sheet resistance,
/// `R_sq·ħ/(πΔ)·coth(Δ/2k_BT)` with `Δ = 1.764 k_B T_C`.
///
/// At `temperature == 0` the hyperbolic factor is its limit, 1.
pub fn lk_from_sheet_resistance(
    film: &FilmProperties,
    temperature: f64,
) -> Result<f64, ModelError> {
    film.require(&["sheet_resistance", "critical_temp_tc"])?;
    let r_sq = film.sheet_resistance()?;
    let tc = film.critical_temp()?;
    if !(temperature >= 0.0 && temperature < tc) {
        return Err(ModelError::domain(
            "lk_from_sheet_resistance",
            format!("temperature {temperature} K must lie in [0, T_C = {tc} K)"),
        ));
    }
    let gap = super::constants::BCS_GAP_RATIO * K_B * tc;
    let thermal = if temperature == 0.0 {
        1.0
    } else {
        1.0 / (gap / (2.0 * K_B * temperature)).tanh()
    };
    Ok(r_sq * HBAR / (PI * gap) * thermal)
}

/// Quarter-wave resonance `f = 1/(4 l sqrt(L̃ C̃))`, Hz.
pub fn quarterwave_frequency(geom: &ResonatorGeometry) -> Result<f64, ModelError> {
    let l = geom.length()?;
    let c = geom.capacitance_per_length()?;
    Ok(1.0 / (4.0 * l * (geom.inductance_per_length() * c).sqrt()))
}

/// `Z = sqrt(L̃/C̃)`, Ω.
pub fn characteristic_impedance(geom: &ResonatorGeometry) -> Result<f64, ModelError> {
    let c = geom.capacitance_per_length()?;
    Ok((geom.inductance_per_length() / c).sqrt())
}
