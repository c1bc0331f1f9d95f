//! Seven-parameter complex fit of the linear hanger.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::circle::initial_guess_circle;
use super::lm::{self, LmConfig, Problem};
use super::{qc_filter, std_errors_from, ComplexTrace, FitDiagnostics, FitKind, FitResult};
use crate::error::FitError;
use crate::physics::{EnvironmentParams, ResonanceParams};

/// Fitted parameter sets together with the reporting record.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub resonance: ResonanceParams,
    pub environment: EnvironmentParams,
    pub result: FitResult,
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Parameters: `[ω₀, κ, γ, a, α_ref, τ, φ]` with the background phase
/// referenced to `f_ref` so that `α_ref` and `τ` decouple.
struct LinearProblem<'a> {
    freqs: &'a [f64],
    data: &'a [Complex64],
    f_ref: f64,
}

impl LinearProblem<'_> {
    fn valid(p: &[f64]) -> bool {
        p.iter().all(|v| v.is_finite())
            && p[0] > 0.0
            && p[1] >= 0.0
            && p[2] >= 0.0
            && p[1] + p[2] > 0.0
            && p[3] > 0.0
            && p[6].abs() < FRAC_PI_2 - 1e-9
    }

    #[inline]
    fn background(&self, p: &[f64], f: f64) -> Complex64 {
        Complex64::from_polar(p[3], p[4] - TAU * (f - self.f_ref) * p[5])
    }
}

impl Problem for LinearProblem<'_> {
    fn n_params(&self) -> usize {
        7
    }
    fn n_residuals(&self) -> usize {
        2 * self.freqs.len()
    }
    fn residuals(&self, p: &[f64], out: &mut [f64]) -> bool {
        if !Self::valid(p) {
            return false;
        }
        let total = p[1] + p[2];
        let shape = Complex64::new(1.0, p[6].tan()) * (p[1] / total);
        for (k, (&f, z)) in self.freqs.iter().zip(self.data).enumerate() {
            let x = (TAU * f - p[0]) / total;
            let s = self.background(p, f) * (1.0 - shape / Complex64::new(1.0, 2.0 * x));
            let d = s - z;
            out[2 * k] = d.re;
            out[2 * k + 1] = d.im;
        }
        true
    }
    fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>) {
        let (kappa, gamma) = (p[1], p[2]);
        let total = kappa + gamma;
        let r = kappa / total;
        let t = p[6].tan();
        let big_phi = Complex64::new(1.0, t);
        let sec2 = 1.0 + t * t;
        for (k, &f) in self.freqs.iter().enumerate() {
            let x = (TAU * f - p[0]) / total;
            let l = 1.0 / Complex64::new(1.0, 2.0 * x);
            let e = self.background(p, f);
            let s = e * (1.0 - r * big_phi * l);
            let dl = -2.0 * I * l * l;
            let cols = [
                -e * r * big_phi * dl * (-1.0 / total),
                -e * big_phi * (gamma / (total * total) * l + r * dl * (-x / total)),
                -e * big_phi * (-kappa / (total * total) * l + r * dl * (-x / total)),
                s / p[3],
                I * s,
                -I * TAU * (f - self.f_ref) * s,
                -e * r * I * sec2 * l,
            ];
            for (j, c) in cols.iter().enumerate() {
                jac[(2 * k, j)] = c.re;
                jac[(2 * k + 1, j)] = c.im;
            }
        }
    }
}

fn wrap(a: f64) -> f64 {
    let w = a.sin().atan2(a.cos());
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Fits without applying QC; `NotConverged` is still raised.
pub fn fit_linear_resonance_raw(
    trace: &ComplexTrace,
    guess: Option<(ResonanceParams, EnvironmentParams)>,
) -> Result<LinearFit, FitError> {
    let (res0, env0) = match guess {
        Some(g) => g,
        None => initial_guess_circle(trace)?,
    };
    let freqs = trace.freqs();
    let f_ref = 0.5 * (freqs[0] + freqs[freqs.len() - 1]);
    let problem = LinearProblem {
        freqs,
        data: trace.samples(),
        f_ref,
    };
    let start = [
        res0.omega0(),
        res0.kappa(),
        res0.gamma(),
        env0.amplitude(),
        env0.alpha() - TAU * f_ref * env0.tau(),
        env0.tau(),
        env0.phi(),
    ];
    let out = lm::minimize(&problem, &start, LmConfig::default()).ok_or_else(|| {
        FitError::Model(crate::error::ModelError::invalid(
            "guess",
            "initial parameters outside the model domain",
        ))
    })?;
    let p = &out.params;
    let (w0, kappa, gamma, a, alpha_ref, tau, phi) = (p[0], p[1], p[2], p[3], p[4], p[5], p[6]);
    let alpha = wrap(alpha_ref + TAU * f_ref * tau);

    let m = problem.n_residuals();
    let dof = m.saturating_sub(7);
    let lin = lm::linearize(&out.jacobian);
    let se = std_errors_from(&lin, out.rss, dof);
    let s2 = if dof > 0 { out.rss / dof as f64 } else { 0.0 };
    let cov = |i: usize, j: usize| s2 * lin.inverse_normal[(i, j)];
    let ratio_err = |num_idx: usize, den: f64| {
        // Error of ω₀/rate via the delta method.
        let g0 = 1.0 / den;
        let g1 = -w0 / (den * den);
        let v =
            g0 * g0 * cov(0, 0) + 2.0 * g0 * g1 * cov(0, num_idx) + g1 * g1 * cov(num_idx, num_idx);
        v.max(0.0).sqrt()
    };
    let alpha_err = (cov(4, 4) + 2.0 * TAU * f_ref * cov(4, 5) + (TAU * f_ref).powi(2) * cov(5, 5))
        .max(0.0)
        .sqrt();
    let q_l = w0 / (kappa + gamma);

    let diagnostics = FitDiagnostics {
        n_points: trace.len(),
        dof,
        condition_number: Some(lin.condition_number),
        residual_history: out.history.clone(),
        notes: Vec::new(),
    };
    let result = FitResult::build(
        FitKind::LinearResonance,
        vec![
            ("f0_hz", w0 / TAU),
            ("q_i", w0 / gamma),
            ("q_c", w0 / kappa),
            ("q_l", q_l),
            ("kappa_hz", kappa / TAU),
            ("gamma_hz", gamma / TAU),
            ("a", a),
            ("alpha_rad", alpha),
            ("tau_s", tau),
            ("phi_rad", phi),
        ],
        Some(vec![
            ("f0_hz", se[0] / TAU),
            ("q_i", ratio_err(2, gamma)),
            ("q_c", ratio_err(1, kappa)),
            ("kappa_hz", se[1] / TAU),
            ("gamma_hz", se[2] / TAU),
            ("a", se[3]),
            ("alpha_rad", alpha_err),
            ("tau_s", se[5]),
            ("phi_rad", se[6]),
        ]),
        out.rss,
        out.converged,
        out.iterations,
        diagnostics,
    );
    if !out.converged {
        return Err(FitError::NotConverged {
            iterations: out.iterations,
            partial: Box::new(result),
        });
    }
    Ok(LinearFit {
        resonance: ResonanceParams::new(w0, kappa, gamma)?,
        environment: EnvironmentParams::new(a, alpha, tau, phi)?,
        result,
    })
}

/// Full linear fit with the default QC rule applied.
pub fn fit_linear_resonance(
    trace: &ComplexTrace,
    guess: Option<(ResonanceParams, EnvironmentParams)>,
) -> Result<LinearFit, FitError> {
    let fit = fit_linear_resonance_raw(trace, guess)?;
    let decision = qc_filter(&fit.result);
    if !decision.accepted {
        return Err(FitError::QcFail {
            reason: decision.reason,
            result: Box::new(fit.result),
        });
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::s21_linear;

    fn grid(res: &ResonanceParams, linewidths: f64, n: usize) -> Vec<f64> {
        let lw = res.total_rate() / TAU;
        (0..n)
            .map(|k| res.f0_hz() + lw * linewidths * (k as f64 / (n - 1) as f64 - 0.5))
            .collect()
    }

    fn truth() -> (ResonanceParams, EnvironmentParams) {
        (
            ResonanceParams::from_quality_factors(4.0743e9, 13805.0, 28241.0).unwrap(),
            EnvironmentParams::new(0.7, -2.1, 1.5e-9, -0.2).unwrap(),
        )
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let (res, env) = truth();
        let freqs = grid(&res, 10.0, 41);
        let data: Vec<Complex64> = freqs.iter().map(|&f| s21_linear(f, &res, &env)).collect();
        let f_ref = 0.5 * (freqs[0] + freqs[40]);
        let pr = LinearProblem {
            freqs: &freqs,
            data: &data,
            f_ref,
        };
        let p = [
            res.omega0() * (1.0 + 1e-6),
            res.kappa() * 1.1,
            res.gamma() * 0.9,
            0.75,
            0.3,
            1.2e-9,
            -0.1,
        ];
        let mut jac = DMatrix::zeros(82, 7);
        pr.jacobian(&p, &mut jac);
        for j in 0..7 {
            let h = if j == 0 {
                1e-4 * (p[1] + p[2])
            } else {
                1e-6 * p[j].abs()
            };
            let (mut up, mut dn) = (p, p);
            up[j] += h;
            dn[j] -= h;
            let (mut ru, mut rd) = (vec![0.0; 82], vec![0.0; 82]);
            pr.residuals(&up, &mut ru);
            pr.residuals(&dn, &mut rd);
            let col_norm = jac.column(j).norm();
            for k in 0..82 {
                let fd = (ru[k] - rd[k]) / (2.0 * h);
                assert!(
                    (fd - jac[(k, j)]).abs() < 1e-5 * col_norm,
                    "param {j} row {k}: {fd} vs {}",
                    jac[(k, j)]
                );
            }
        }
    }

    #[test]
    fn noise_free_round_trip() {
        let (res, env) = truth();
        let freqs = grid(&res, 10.0, 401);
        let samples = freqs.iter().map(|&f| s21_linear(f, &res, &env)).collect();
        let trace = ComplexTrace::new(freqs, samples, -30.0, 0.0).unwrap();
        let fit = fit_linear_resonance(&trace, None).unwrap();
        let rel = |a: f64, b: f64| (a / b - 1.0).abs();
        assert!(rel(fit.resonance.omega0(), res.omega0()) < 1e-9);
        assert!(rel(fit.resonance.kappa(), res.kappa()) < 1e-6);
        assert!(rel(fit.resonance.gamma(), res.gamma()) < 1e-6);
        assert!(rel(fit.environment.amplitude(), env.amplitude()) < 1e-6);
        assert!(rel(fit.environment.tau(), env.tau()) < 1e-6);
        assert!((fit.environment.phi() - env.phi()).abs() < 1e-6);
        assert!((wrap(fit.environment.alpha() - env.alpha())).abs() < 1e-6);
        for w in fit.result.diagnostics.residual_history.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }
}
