//! Canned generator truths shared by tests, the acceptance runner and the CLI.

use crate::error::ModelError;
use crate::fit::{FieldSweepSeries, Orientation};
use crate::physics::{
    photon_number, EnvironmentParams, FilmProperties, FilmSpec, KerrModelParams, LossModelParams,
    ResonanceParams, ResonatorGeometry, HANGER_CONFIG_C,
};

use super::{generate_field_sweep, DriveSpec, FieldResponse, GeneratorTruth, NoiseSpec};

/// Nominal misalignment angle used for the in-plane family, degrees.
pub const MISALIGNMENT_DEG: f64 = 1.08;

/// 13 nm NbN, 89 pH/sq, with the diffusion constant used for in-plane shifts.
pub fn nbn_film() -> FilmProperties {
    FilmProperties::new(FilmSpec {
        lk_sheet: Some(89e-12),
        thickness_t: Some(13e-9),
        critical_temp_tc: Some(4.0),
        diffusion_d: Some(2.6e-5),
        ..Default::default()
    })
    .expect("valid NbN film")
}

/// 50 nm granular aluminium, 149 pH/sq.
pub fn gral_film() -> FilmProperties {
    FilmProperties::new(FilmSpec {
        lk_sheet: Some(149e-12),
        thickness_t: Some(50e-9),
        critical_temp_tc: Some(2.1),
        ..Default::default()
    })
    .expect("valid grAl film")
}

/// Linear truth with a mild background; `k_hz` is `K/2π` in Hz/photon.
pub fn truth(
    film: FilmProperties,
    width_m: f64,
    f0_hz: f64,
    q_i: f64,
    q_c: f64,
    k_hz: f64,
) -> Result<GeneratorTruth, ModelError> {
    Ok(GeneratorTruth {
        resonance: ResonanceParams::from_quality_factors(f0_hz, q_i, q_c)?,
        env: EnvironmentParams::new(0.9, 0.4, 1e-9, 0.08)?,
        kerr: KerrModelParams::from_hz_per_photon(k_hz, 0.0)?,
        loss: LossModelParams::at_base_temperature(0.0, 1.0, 1.0, 1.0 / q_i)?,
        geometry: ResonatorGeometry::from_film(&film, width_m, None)?,
        film,
        drive: DriveSpec {
            power_dbm: -80.0,
            attenuation_db: 70.0,
            config_c: HANGER_CONFIG_C,
        },
        field: FieldResponse::default(),
        power_dependent_loss: false,
    })
}

/// NbN Res 0: 200 nm, 4.0743 GHz, `Q_i` 13805, `Q_c` 28241, `K/2π` −4.506 Hz.
pub fn nbn_res0() -> GeneratorTruth {
    truth(nbn_film(), 200e-9, 4.0743e9, 13805.0, 28241.0, -4.506).expect("valid truth")
}

/// grAl Res 0: 200 nm, 4.2809 GHz, `Q_i` 6.75e5, `Q_c` 8893, `K/2π` −49.999 Hz.
pub fn gral_res0() -> GeneratorTruth {
    truth(gral_film(), 200e-9, 4.2809e9, 6.75e5, 8893.0, -49.999).expect("valid truth")
}

/// Source powers (dBm) that put the on-resonance drive at each requested `ξ`.
pub fn powers_for_xi(t: &GeneratorTruth, xis: &[f64]) -> Vec<f64> {
    let res = &t.resonance;
    let n_ref = photon_number(-100.0, t.drive.attenuation_db, res, t.drive.config_c);
    let xi_ref = 0.5 * n_ref * t.kerr.kerr().abs() / res.total_rate();
    xis.iter()
        .map(|x| -100.0 + 10.0 * (x / xi_ref).log10())
        .collect()
}

/// Sub-critical `ξ` ladder used for Kerr round trips.
pub const KERR_XI_LADDER: [f64; 5] = [0.01, 0.08, 0.16, 0.24, 0.3];

/// In-plane sweeps to 6 T in 0.1 T steps for NbN widths 200..700 nm, with
/// the film's diffusion model and the given misalignment.
pub fn misaligned_family(
    theta_deg: f64,
    noise: &NoiseSpec,
) -> Result<Vec<(f64, FieldSweepSeries)>, ModelError> {
    let b: Vec<f64> = (0..=60).map(|k| 0.1 * k as f64).collect();
    (0..6u64)
        .map(|k| {
            let w = (200.0 + 100.0 * k as f64) * 1e-9;
            let mut t = nbn_res0();
            t.geometry = ResonatorGeometry::from_film(&t.film, w, None)?;
            t.field.theta_b = theta_deg.to_radians();
            let s = generate_field_sweep(&t, &b, Orientation::InPlane, &noise.derive(k))?;
            Ok((w, s))
        })
        .collect()
}

/// 61-point out-of-plane style sweep to 6 T with a quadratic law at `b_c`.
pub fn quadratic_sweep(b_c: f64, noise: &NoiseSpec) -> Result<FieldSweepSeries, ModelError> {
    let mut t = nbn_res0();
    t.field.b_c_perp = Some(b_c);
    let b: Vec<f64> = (0..=60).map(|k| 0.1 * k as f64).collect();
    generate_field_sweep(&t, &b, Orientation::OutOfPlane, noise)
}
