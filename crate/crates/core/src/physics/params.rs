//! Validated parameter sets for the resonator models.
//!
//! Invariants are checked once, when a value is built (directly or through
//! serde), so the evaluation functions never re-validate.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

fn finite(name: &'static str, v: f64) -> Result<f64, ModelError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ModelError::invalid(
            name,
            format!("must be finite, got {v}"),
        ))
    }
}

fn positive(name: &'static str, v: f64) -> Result<f64, ModelError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ModelError::invalid(name, format!("must be > 0, got {v}")))
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<f64, ModelError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(ModelError::invalid(name, format!("must be >= 0, got {v}")))
    }
}

/// Background of the measured transmission: amplitude `a`, phase `α`,
/// cable delay `τ` and the impedance-mismatch rotation `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnvironmentRaw", into = "EnvironmentRaw")]
pub struct EnvironmentParams {
    amplitude_a: f64,
    phase_alpha: f64,
    delay_tau: f64,
    impedance_mismatch_phi: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvironmentRaw {
    amplitude_a: f64,
    phase_alpha: f64,
    delay_tau: f64,
    impedance_mismatch_phi: f64,
}

impl TryFrom<EnvironmentRaw> for EnvironmentParams {
    type Error = ModelError;
    fn try_from(r: EnvironmentRaw) -> Result<Self, ModelError> {
        EnvironmentParams::new(
            r.amplitude_a,
            r.phase_alpha,
            r.delay_tau,
            r.impedance_mismatch_phi,
        )
    }
}

impl From<EnvironmentParams> for EnvironmentRaw {
    fn from(e: EnvironmentParams) -> Self {
        EnvironmentRaw {
            amplitude_a: e.amplitude_a,
            phase_alpha: e.phase_alpha,
            delay_tau: e.delay_tau,
            impedance_mismatch_phi: e.impedance_mismatch_phi,
        }
    }
}

impl EnvironmentParams {
    pub fn new(
        amplitude_a: f64,
        phase_alpha: f64,
        delay_tau: f64,
        phi: f64,
    ) -> Result<Self, ModelError> {
        positive("amplitude_a", amplitude_a)?;
        finite("phase_alpha", phase_alpha)?;
        finite("delay_tau", delay_tau)?;
        finite("impedance_mismatch_phi", phi)?;
        if phi.abs() >= FRAC_PI_2 {
            return Err(ModelError::invalid(
                "impedance_mismatch_phi",
                format!("must lie in (-pi/2, pi/2), got {phi}"),
            ));
        }
        Ok(EnvironmentParams {
            amplitude_a,
            phase_alpha,
            delay_tau,
            impedance_mismatch_phi: phi,
        })
    }

    /// `a = 1`, `α = τ = φ = 0`.
    pub fn unit() -> Self {
        EnvironmentParams {
            amplitude_a: 1.0,
            phase_alpha: 0.0,
            delay_tau: 0.0,
            impedance_mismatch_phi: 0.0,
        }
    }

    /// Unit background with only the mismatch rotation set.
    pub fn with_phi(phi: f64) -> Result<Self, ModelError> {
        Self::new(1.0, 0.0, 0.0, phi)
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude_a
    }
    pub fn alpha(&self) -> f64 {
        self.phase_alpha
    }
    pub fn tau(&self) -> f64 {
        self.delay_tau
    }
    pub fn phi(&self) -> f64 {
        self.impedance_mismatch_phi
    }
}

/// Physical resonance: `ω₀` and the external/internal decay rates, all rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ResonanceRaw", into = "ResonanceRaw")]
pub struct ResonanceParams {
    omega0: f64,
    kappa_ext: f64,
    gamma_int: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResonanceRaw {
    omega0: f64,
    kappa_ext: f64,
    gamma_int: f64,
}

impl TryFrom<ResonanceRaw> for ResonanceParams {
    type Error = ModelError;
    fn try_from(r: ResonanceRaw) -> Result<Self, ModelError> {
        ResonanceParams::new(r.omega0, r.kappa_ext, r.gamma_int)
    }
}

impl From<ResonanceParams> for ResonanceRaw {
    fn from(r: ResonanceParams) -> Self {
        ResonanceRaw {
            omega0: r.omega0,
            kappa_ext: r.kappa_ext,
            gamma_int: r.gamma_int,
        }
    }
}

impl ResonanceParams {
    pub fn new(omega0: f64, kappa_ext: f64, gamma_int: f64) -> Result<Self, ModelError> {
        positive("omega0", omega0)?;
        non_negative("kappa_ext", kappa_ext)?;
        non_negative("gamma_int", gamma_int)?;
        if kappa_ext + gamma_int <= 0.0 {
            return Err(ModelError::invalid(
                "kappa_ext + gamma_int",
                "total decay rate must be > 0",
            ));
        }
        Ok(ResonanceParams {
            omega0,
            kappa_ext,
            gamma_int,
        })
    }

    /// Build from the resonance frequency in Hz and the two quality factors.
    pub fn from_quality_factors(f0_hz: f64, q_i: f64, q_c: f64) -> Result<Self, ModelError> {
        positive("f0_hz", f0_hz)?;
        positive("q_i", q_i)?;
        positive("q_c", q_c)?;
        let omega0 = TAU * f0_hz;
        Self::new(omega0, omega0 / q_c, omega0 / q_i)
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }
    pub fn kappa(&self) -> f64 {
        self.kappa_ext
    }
    pub fn gamma(&self) -> f64 {
        self.gamma_int
    }
    pub fn f0_hz(&self) -> f64 {
        self.omega0 / TAU
    }
    /// `κ + γ`.
    pub fn total_rate(&self) -> f64 {
        self.kappa_ext + self.gamma_int
    }
    /// `ω₀/γ`; infinite for a lossless resonator.
    pub fn q_internal(&self) -> f64 {
        self.omega0 / self.gamma_int
    }
    /// `ω₀/κ`; infinite when uncoupled.
    pub fn q_coupling(&self) -> f64 {
        self.omega0 / self.kappa_ext
    }
    pub fn q_loaded(&self) -> f64 {
        self.omega0 / self.total_rate()
    }

    pub fn with_omega0(&self, omega0: f64) -> Result<Self, ModelError> {
        Self::new(omega0, self.kappa_ext, self.gamma_int)
    }
}

/// Self-Kerr coefficient (rad/s per photon) and input photon flux `|α_in|²` (1/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KerrRaw", into = "KerrRaw")]
pub struct KerrModelParams {
    kerr_k: f64,
    drive_amplitude_sq: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KerrRaw {
    kerr_k: f64,
    drive_amplitude_sq: f64,
}

impl TryFrom<KerrRaw> for KerrModelParams {
    type Error = ModelError;
    fn try_from(r: KerrRaw) -> Result<Self, ModelError> {
        KerrModelParams::new(r.kerr_k, r.drive_amplitude_sq)
    }
}

impl From<KerrModelParams> for KerrRaw {
    fn from(k: KerrModelParams) -> Self {
        KerrRaw {
            kerr_k: k.kerr_k,
            drive_amplitude_sq: k.drive_amplitude_sq,
        }
    }
}

impl KerrModelParams {
    /// Kinetic-inductance Kerr is never positive.
    pub fn new(kerr_k: f64, drive_amplitude_sq: f64) -> Result<Self, ModelError> {
        finite("kerr_k", kerr_k)?;
        if kerr_k > 0.0 {
            return Err(ModelError::invalid(
                "kerr_k",
                format!("must be <= 0, got {kerr_k}"),
            ));
        }
        non_negative("drive_amplitude_sq", drive_amplitude_sq)?;
        Ok(KerrModelParams {
            kerr_k,
            drive_amplitude_sq,
        })
    }

    /// `K` given as `K/2π` in Hz per photon.
    pub fn from_hz_per_photon(k_hz: f64, drive_amplitude_sq: f64) -> Result<Self, ModelError> {
        Self::new(TAU * k_hz, drive_amplitude_sq)
    }

    pub fn zero() -> Self {
        KerrModelParams {
            kerr_k: 0.0,
            drive_amplitude_sq: 0.0,
        }
    }

    pub fn kerr(&self) -> f64 {
        self.kerr_k
    }
    pub fn kerr_hz_per_photon(&self) -> f64 {
        self.kerr_k / TAU
    }
    pub fn drive_amplitude_sq(&self) -> f64 {
        self.drive_amplitude_sq
    }

    pub fn with_drive(&self, drive_amplitude_sq: f64) -> Result<Self, ModelError> {
        Self::new(self.kerr_k, drive_amplitude_sq)
    }
}

/// Loss budget: TLS term `F·δ⁰`, saturation photon number `n_C` and
/// exponent `β`, residual `δ₀`, and the quasiparticle term evaluated at the
/// working temperature as one scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LossRaw", into = "LossRaw")]
pub struct LossModelParams {
    tls_loss_f_delta0: f64,
    critical_photon_nc: f64,
    saturation_beta: f64,
    residual_delta0: f64,
    qp_loss: f64,
    temperature_t: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LossRaw {
    tls_loss_f_delta0: f64,
    critical_photon_nc: f64,
    saturation_beta: f64,
    residual_delta0: f64,
    #[serde(default)]
    qp_loss: f64,
    #[serde(default)]
    temperature_t: f64,
}

impl TryFrom<LossRaw> for LossModelParams {
    type Error = ModelError;
    fn try_from(r: LossRaw) -> Result<Self, ModelError> {
        LossModelParams::new(
            r.tls_loss_f_delta0,
            r.critical_photon_nc,
            r.saturation_beta,
            r.residual_delta0,
            r.qp_loss,
            r.temperature_t,
        )
    }
}

impl From<LossModelParams> for LossRaw {
    fn from(l: LossModelParams) -> Self {
        LossRaw {
            tls_loss_f_delta0: l.tls_loss_f_delta0,
            critical_photon_nc: l.critical_photon_nc,
            saturation_beta: l.saturation_beta,
            residual_delta0: l.residual_delta0,
            qp_loss: l.qp_loss,
            temperature_t: l.temperature_t,
        }
    }
}

impl LossModelParams {
    pub fn new(
        tls_loss_f_delta0: f64,
        critical_photon_nc: f64,
        saturation_beta: f64,
        residual_delta0: f64,
        qp_loss: f64,
        temperature_t: f64,
    ) -> Result<Self, ModelError> {
        non_negative("tls_loss_f_delta0", tls_loss_f_delta0)?;
        positive("critical_photon_nc", critical_photon_nc)?;
        if !(saturation_beta > 0.0 && saturation_beta <= 2.0) {
            return Err(ModelError::invalid(
                "saturation_beta",
                format!("must lie in (0, 2], got {saturation_beta}"),
            ));
        }
        non_negative("residual_delta0", residual_delta0)?;
        non_negative("qp_loss", qp_loss)?;
        non_negative("temperature_t", temperature_t)?;
        Ok(LossModelParams {
            tls_loss_f_delta0,
            critical_photon_nc,
            saturation_beta,
            residual_delta0,
            qp_loss,
            temperature_t,
        })
    }

    /// Base-temperature loss budget with no separate quasiparticle term.
    pub fn at_base_temperature(
        f_delta0: f64,
        n_c: f64,
        beta: f64,
        delta0: f64,
    ) -> Result<Self, ModelError> {
        Self::new(f_delta0, n_c, beta, delta0, 0.0, 0.0)
    }

    pub fn tls(&self) -> f64 {
        self.tls_loss_f_delta0
    }
    pub fn n_c(&self) -> f64 {
        self.critical_photon_nc
    }
    pub fn beta(&self) -> f64 {
        self.saturation_beta
    }
    pub fn delta0(&self) -> f64 {
        self.residual_delta0
    }
    pub fn qp_loss(&self) -> f64 {
        self.qp_loss
    }
    pub fn temperature(&self) -> f64 {
        self.temperature_t
    }

    pub fn with_n_c(&self, n_c: f64) -> Result<Self, ModelError> {
        Self::new(
            self.tls_loss_f_delta0,
            n_c,
            self.saturation_beta,
            self.residual_delta0,
            self.qp_loss,
            self.temperature_t,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_construction() {
        assert!(EnvironmentParams::new(0.0, 0.0, 0.0, 0.0).is_err());
        assert!(EnvironmentParams::new(1.0, 0.0, 0.0, FRAC_PI_2).is_err());
        assert!(ResonanceParams::new(-1.0, 1.0, 1.0).is_err());
        assert!(ResonanceParams::new(1.0, 0.0, 0.0).is_err());
        assert!(KerrModelParams::new(1.0, 0.0).is_err());
        assert!(LossModelParams::new(1e-5, 10.0, 2.5, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn quality_factor_round_trip() {
        let r = ResonanceParams::from_quality_factors(4.0743e9, 13805.0, 28241.0).unwrap();
        assert!((r.q_internal() - 13805.0).abs() < 1e-8);
        assert!((r.q_coupling() - 28241.0).abs() < 1e-8);
        assert!((r.f0_hz() - 4.0743e9).abs() < 1e-3);
    }

    #[test]
    fn serde_validates() {
        let bad = r#"{"omega0": 1.0, "kappa_ext": 0.0, "gamma_int": 0.0}"#;
        assert!(serde_json::from_str::<ResonanceParams>(bad).is_err());
        let good = r#"{"omega0": 1.0, "kappa_ext": 0.5, "gamma_int": 0.0}"#;
        let r: ResonanceParams = serde_json::from_str(good).unwrap();
        assert_eq!(r.kappa(), 0.5);
    }
}
