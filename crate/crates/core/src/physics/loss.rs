//! TLS + quasiparticle + residual loss budget.

use super::constants::{HBAR, K_B};
use super::params::LossModelParams;
use crate::error::ModelError;

/// Thermal factor `tanh(ħω₀/2k_BT)`, exactly 1 at `T = 0`.
pub(crate) fn tls_thermal_factor(omega0: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        1.0
    } else {
        (HBAR * omega0 / (2.0 * K_B * temperature)).tanh()
    }
}

/// `1/Q_i = F·δ⁰·tanh(ħω₀/2k_BT)/(1 + n/n_C)^β + qp_loss + δ₀`.
pub fn inverse_qi(n_ph: f64, loss: &LossModelParams, omega0: f64) -> Result<f64, ModelError> {
    if !(n_ph >= 0.0) {
        return Err(ModelError::domain(
            "inverse_qi",
            format!("n_ph must be >= 0, got {n_ph}"),
        ));
    }
    let thermal = tls_thermal_factor(omega0, loss.temperature());
    let saturation = (1.0 + n_ph / loss.n_c()).powf(loss.beta());
    Ok(loss.tls() * thermal / saturation + loss.qp_loss() + loss.delta0())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use proptest::prelude::*;

    use super::*;

    const OMEGA0: f64 = TAU * 5.0e9;

    #[test]
    fn saturation_and_zero_temperature_limits() {
        let loss = LossModelParams::new(4e-5, 30.0, 0.4, 1.5e-5, 2e-6, 0.0).unwrap();
        let low = inverse_qi(0.0, &loss, OMEGA0).unwrap();
        assert_eq!(low, 4e-5 + 2e-6 + 1.5e-5);
        let high = inverse_qi(1e12, &loss, OMEGA0).unwrap();
        assert!((high - (2e-6 + 1.5e-5)).abs() < 4e-5 * 1e-4);
        let b2 = LossModelParams::new(4e-5, 30.0, 2.0, 1.5e-5, 2e-6, 0.0).unwrap();
        assert!((inverse_qi(1e12, &b2, OMEGA0).unwrap() - (2e-6 + 1.5e-5)).abs() < 1e-25);
        assert!(inverse_qi(-1.0, &loss, OMEGA0).is_err());
    }

    #[test]
    fn temperature_reduces_tls_loss() {
        let cold = LossModelParams::new(4e-5, 30.0, 0.4, 0.0, 0.0, 0.0).unwrap();
        let warm = LossModelParams::new(4e-5, 30.0, 0.4, 0.0, 0.0, 0.5).unwrap();
        assert!(inverse_qi(0.0, &warm, OMEGA0).unwrap() < inverse_qi(0.0, &cold, OMEGA0).unwrap());
    }

    proptest! {
        #[test]
        fn monotone_non_increasing_on_dense_grid(
            tls in 1e-7f64..1e-3,
            nc in 1e-2f64..1e5,
            beta in 0.05f64..2.0,
            delta0 in 0.0f64..1e-4,
            qp in 0.0f64..1e-5,
            temp in 0.0f64..0.3,
        ) {
            let loss = LossModelParams::new(tls, nc, beta, delta0, qp, temp).unwrap();
            let mut prev = f64::INFINITY;
            for k in 0..=800 {
                let n = 10f64.powf(-2.0 + 8.0 * k as f64 / 800.0);
                let v = inverse_qi(n, &loss, OMEGA0).unwrap();
                prop_assert!(v > 0.0);
                prop_assert!(v <= prev);
                prev = v;
            }
        }
    }
}
