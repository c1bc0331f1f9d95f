//! CODATA 2018 constants (SI units, exact where SI defines them).

use std::f64::consts::TAU;

/// Planck constant, J·s (exact).
pub const H_PLANCK_EXACT: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = H_PLANCK_EXACT / TAU;
/// Planck constant as stored: `2π·HBAR`.
pub const H: f64 = TAU * HBAR;
/// Boltzmann constant, J/K (exact).
pub const K_B: f64 = 1.380_649e-23;
/// Elementary charge, C (exact).
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// BCS weak-coupling gap ratio Δ/(k_B·T_C).
pub const BCS_GAP_RATIO: f64 = 1.764;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub k_b: f64,
    pub e_charge: f64,
    pub h: f64,
}

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants {
        hbar: HBAR,
        k_b: K_B,
        e_charge: E_CHARGE,
        h: H,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planck_is_two_pi_hbar_as_stored() {
        let c = PhysicalConstants::CODATA;
        assert_eq!(c.h, TAU * c.hbar);
        assert!((c.h - H_PLANCK_EXACT).abs() / H_PLANCK_EXACT < 1e-15);
        assert!((c.hbar - 1.054_571_817e-34).abs() / c.hbar < 1e-9);
    }
}
