//! Closed-form forward models.
//!
//! Every function here is pure. Internal rates are angular (rad/s); the
//! few helpers that take or return ordinary frequencies say so in their
//! names (`*_hz`).

pub mod constants;
mod field;
mod inductance;
mod loss;
mod materials;
pub(crate) mod occupation;
mod params;
mod transmission;

pub use constants::PhysicalConstants;
pub(crate) use field::shift_prefactor;
pub use field::{
    critical_field_from_shift, gap_vs_field, inplane_freq_shift, inplane_shift_coefficient,
    quadratic_shift_bc,
};
pub use inductance::{
    characteristic_impedance, kerr_bcs, kerr_bcs_geometric, kerr_jj, lk_from_sheet_resistance,
    lk_of_current, quarterwave_frequency,
};
pub use loss::inverse_qi;
pub(crate) use loss::tls_thermal_factor;
pub use materials::{FilmProperties, FilmSpec, GeometrySpec, QuarterWaveChain, ResonatorGeometry};
pub use occupation::{
    bifurcation_onset, count_roots_at, solve_photon_occupation, Occupation, CRITICAL_XI,
};
pub use params::{EnvironmentParams, KerrModelParams, LossModelParams, ResonanceParams};
pub use transmission::{
    drive_flux_from_power, environment_factor, hanger_response, normalized_drive, photon_number,
    s21_linear, s21_nonlinear, watts_from_dbm, NonlinearPoint, HANGER_CONFIG_C,
};
pub(crate) use transmission::{hanger_core, photon_scale};
