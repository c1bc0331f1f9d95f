//! Joint fit of the self-Kerr coefficient across a power sweep.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::circle::running_mean5;
use super::lm::{self, LmConfig, Problem};
use super::{std_errors_from, ComplexTrace, FitDiagnostics, FitKind, FitResult};
use crate::error::FitError;
use crate::physics::occupation::occupation_roots;
use crate::physics::{
    bifurcation_onset, drive_flux_from_power, environment_factor, hanger_core, photon_scale,
    EnvironmentParams, ResonanceParams,
};

/// Result of [`fit_kerr_2d`].
#[derive(Debug, Clone, PartialEq)]
pub struct KerrFit {
    /// `K` in rad/s per photon.
    pub kerr: f64,
    pub phi: f64,
    /// `ξ` of every trace at the fitted `K`.
    pub xi: Vec<f64>,
    pub result: FitResult,
}

const I: Complex64 = Complex64::new(0.0, 1.0);

struct Point {
    delta: f64,
    /// `ξ/K` of the owning trace.
    c: f64,
    background: Complex64,
    data: Complex64,
}

/// Parameters `[K, φ]`; rates and background fixed.
struct KerrProblem {
    points: Vec<Point>,
    ratio: f64,
}

impl Problem for KerrProblem {
    fn n_params(&self) -> usize {
        2
    }
    fn n_residuals(&self) -> usize {
        2 * self.points.len()
    }
    fn residuals(&self, p: &[f64], out: &mut [f64]) -> bool {
        if !(p[0].is_finite() && p[1].abs() < std::f64::consts::FRAC_PI_2 - 1e-9) {
            return false;
        }
        let t = p[1].tan();
        for (k, pt) in self.points.iter().enumerate() {
            let xi = pt.c * p[0];
            let n = occupation_roots(pt.delta, xi).0[0];
            let d = pt.background * hanger_core(pt.delta - xi * n, self.ratio, t) - pt.data;
            out[2 * k] = d.re;
            out[2 * k + 1] = d.im;
        }
        true
    }
    fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>) {
        let t = p[1].tan();
        let big_phi = Complex64::new(1.0, t);
        for (k, pt) in self.points.iter().enumerate() {
            let xi = pt.c * p[0];
            let n = occupation_roots(pt.delta, xi).0[0];
            let u = pt.delta - xi * n;
            let l = 1.0 / Complex64::new(1.0, 2.0 * u);
            // Implicit derivative of the occupation equation.
            let dn_dxi = 2.0 * n * n * u / (u * u + 0.25 - 2.0 * xi * n * u);
            let du_dxi = -(n + xi * dn_dxi);
            let d_k = pt.background * 2.0 * I * self.ratio * big_phi * l * l * du_dxi * pt.c;
            let d_phi = -pt.background * self.ratio * I * (1.0 + t * t) * l;
            jac[(2 * k, 0)] = d_k.re;
            jac[(2 * k + 1, 0)] = d_k.im;
            jac[(2 * k, 1)] = d_phi.re;
            jac[(2 * k + 1, 1)] = d_phi.im;
        }
    }
}

/// Frequency of the smoothed `|S21|` minimum after dividing out the background.
fn dip_frequency(trace: &ComplexTrace, env: &EnvironmentParams) -> f64 {
    let mags: Vec<f64> = trace
        .freqs()
        .iter()
        .zip(trace.samples())
        .map(|(&f, s)| (s / environment_factor(f, env)).norm())
        .collect();
    let smooth = running_mean5(&mags);
    let k = smooth
        .iter()
        .cloned()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, (k, v)| if v < acc.1 { (k, v) } else { acc },
        )
        .0;
    trace.freqs()[k]
}

/// Outcome of [`fit_kerr_below_bifurcation`]; indices refer to the input.
#[derive(Debug, Clone)]
pub struct KerrMapFit {
    /// The last fit attempted. An unconverged fit is returned as its
    /// partial result so that QC can reject it with a reason.
    pub result: Result<FitResult, FitError>,
    pub used: Vec<usize>,
    pub bifurcated: Vec<usize>,
}

/// [`fit_kerr_2d`] repeated after dropping every trace the fitted model
/// places above bifurcation, until the remaining set is clean. Needs at
/// least three traces.
pub fn fit_kerr_below_bifurcation(
    traces: &[ComplexTrace],
    res_fixed: &ResonanceParams,
    env_fixed: &EnvironmentParams,
    config_c: f64,
) -> KerrMapFit {
    let mut used: Vec<usize> = (0..traces.len()).collect();
    let mut bifurcated = Vec::new();
    let result = loop {
        if used.len() < 3 {
            break Err(FitError::InsufficientData(format!(
                "only {} usable traces below bifurcation",
                used.len()
            )));
        }
        let subset: Vec<ComplexTrace> = used.iter().map(|&k| traces[k].clone()).collect();
        match fit_kerr_2d(&subset, res_fixed, env_fixed, config_c) {
            Ok(k) => break Ok(k.result),
            Err(FitError::BifurcationInFitWindow { indices }) => {
                let drop: Vec<usize> = indices.iter().map(|&i| used[i]).collect();
                bifurcated.extend(&drop);
                used.retain(|k| !drop.contains(k));
            }
            Err(FitError::NotConverged { partial, .. }) => break Ok(*partial),
            Err(e) => break Err(e),
        }
    };
    bifurcated.sort_unstable();
    KerrMapFit {
        result,
        used,
        bifurcated,
    }
}

/// Fits `(K, φ)` to every trace jointly with `ω₀, κ, γ` and the background
/// `(a, α, τ)` held at their low-power values.
pub fn fit_kerr_2d(
    traces: &[ComplexTrace],
    res_fixed: &ResonanceParams,
    env_fixed: &EnvironmentParams,
    config_c: f64,
) -> Result<KerrFit, FitError> {
    if traces.is_empty() {
        return Err(FitError::InsufficientData("no traces".into()));
    }
    let total = res_fixed.total_rate();
    let c_of = |t: &ComplexTrace| {
        let flux = drive_flux_from_power(t.power_dbm(), t.attenuation_db(), res_fixed, config_c);
        photon_scale(res_fixed, flux) / total
    };
    let cs: Vec<f64> = traces.iter().map(c_of).collect();
    let mut points = Vec::new();
    for (t, &c) in traces.iter().zip(&cs) {
        for (&f, &z) in t.freqs().iter().zip(t.samples()) {
            points.push(Point {
                delta: (TAU * f - res_fixed.omega0()) / total,
                c,
                background: environment_factor(f, env_fixed),
                data: z,
            });
        }
    }
    let problem = KerrProblem {
        points,
        ratio: res_fixed.kappa() / total,
    };

    // The dip sits near δ = 2ξ; shift between the weakest and strongest drive.
    let (lo, hi) = (0, traces.len() - 1);
    let c_max = cs.iter().cloned().fold(0.0, f64::max);
    let mut candidates = vec![0.0];
    if hi > lo && cs[hi] > cs[lo] {
        let shift =
            TAU * (dip_frequency(&traces[hi], env_fixed) - dip_frequency(&traces[lo], env_fixed));
        candidates.push(shift / (2.0 * total * (cs[hi] - cs[lo])));
    }
    if c_max > 0.0 {
        for xi in [-0.02, -0.05, -0.1, -0.2, -0.3, -0.4, -0.6, 0.05, 0.2] {
            candidates.push(xi / c_max);
        }
    }
    let phi0 = env_fixed.phi();
    let mut r = vec![0.0; problem.n_residuals()];
    let k0 = candidates
        .iter()
        .cloned()
        .filter(|k| k.is_finite())
        .map(|k| {
            let ok = problem.residuals(&[k, phi0], &mut r);
            (
                k,
                if ok {
                    r.iter().map(|v| v * v).sum()
                } else {
                    f64::INFINITY
                },
            )
        })
        .fold(
            (0.0, f64::INFINITY),
            |acc, (k, v)| if v < acc.1 { (k, v) } else { acc },
        )
        .0;

    let out = lm::minimize(&problem, &[k0, phi0], LmConfig::default())
        .ok_or_else(|| FitError::InsufficientData("no valid starting point".into()))?;
    let (kerr, phi) = (out.params[0], out.params[1]);
    let m = problem.n_residuals();
    let dof = m.saturating_sub(2);
    let lin = lm::linearize(&out.jacobian);
    let se = std_errors_from(&lin, out.rss, dof);
    let xi: Vec<f64> = cs.iter().map(|c| c * kerr).collect();
    let diagnostics = FitDiagnostics {
        n_points: problem.points.len(),
        dof,
        condition_number: Some(lin.condition_number),
        residual_history: out.history.clone(),
        notes: Vec::new(),
    };
    let result = FitResult::build(
        FitKind::Kerr2d,
        vec![
            ("kerr_hz_per_photon", kerr / TAU),
            ("kerr_rad_per_s", kerr),
            ("phi_rad", phi),
        ],
        Some(vec![
            ("kerr_hz_per_photon", se[0] / TAU),
            ("kerr_rad_per_s", se[0]),
            ("phi_rad", se[1]),
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

    let indices: Vec<usize> = traces
        .iter()
        .zip(&xi)
        .enumerate()
        .filter(|(_, (t, &x))| {
            let f = t.freqs();
            let d_lo = (TAU * f[0] - res_fixed.omega0()) / total;
            let d_hi = (TAU * f[f.len() - 1] - res_fixed.omega0()) / total;
            bifurcation_onset((d_lo, d_hi), x)
        })
        .map(|(k, _)| k)
        .collect();
    if !indices.is_empty() {
        return Err(FitError::BifurcationInFitWindow { indices });
    }
    Ok(KerrFit {
        kerr,
        phi,
        xi,
        result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{hanger_response, KerrModelParams};

    fn map(k_hz: f64, powers: &[f64]) -> (Vec<ComplexTrace>, ResonanceParams, EnvironmentParams) {
        let res = ResonanceParams::from_quality_factors(4.0743e9, 13805.0, 28241.0).unwrap();
        let env = EnvironmentParams::new(0.9, 0.4, 1e-9, 0.1).unwrap();
        let lw = res.total_rate() / TAU;
        let freqs: Vec<f64> = (0..201)
            .map(|k| res.f0_hz() + lw * (k as f64 / 20.0 - 6.0))
            .collect();
        let traces = powers
            .iter()
            .map(|&p| {
                let flux = drive_flux_from_power(p, 70.0, &res, 4.0);
                let kerr = KerrModelParams::from_hz_per_photon(k_hz, flux).unwrap();
                let s = freqs
                    .iter()
                    .map(|&f| hanger_response(f, &res, &env, &kerr).s21)
                    .collect();
                ComplexTrace::new(freqs.clone(), s, p, 70.0).unwrap()
            })
            .collect();
        (traces, res, env)
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let (traces, res, env) = map(-4.506, &[-40.0, -28.0, -24.0]);
        let total = res.total_rate();
        let mut points = Vec::new();
        for t in &traces {
            let c =
                photon_scale(&res, drive_flux_from_power(t.power_dbm(), 70.0, &res, 4.0)) / total;
            for (&f, &z) in t.freqs().iter().zip(t.samples()) {
                points.push(Point {
                    delta: (TAU * f - res.omega0()) / total,
                    c,
                    background: environment_factor(f, &env),
                    data: z,
                });
            }
        }
        let pr = KerrProblem {
            points,
            ratio: res.kappa() / total,
        };
        let p = [TAU * -4.0, 0.12];
        let m = pr.n_residuals();
        let mut jac = DMatrix::zeros(m, 2);
        pr.jacobian(&p, &mut jac);
        for j in 0..2 {
            let h = 1e-6 * p[j].abs();
            let (mut up, mut dn) = (p, p);
            up[j] += h;
            dn[j] -= h;
            let (mut ru, mut rd) = (vec![0.0; m], vec![0.0; m]);
            pr.residuals(&up, &mut ru);
            pr.residuals(&dn, &mut rd);
            let norm = jac.column(j).norm();
            for k in 0..m {
                let fd = (ru[k] - rd[k]) / (2.0 * h);
                assert!((fd - jac[(k, j)]).abs() < 1e-6 * norm, "{j} {k}");
            }
        }
    }

    #[test]
    fn noise_free_recovery() {
        let (traces, res, env) = map(-4.506, &[-40.0, -32.0, -28.0, -26.0, -25.0]);
        let fit = fit_kerr_2d(&traces, &res, &env, 4.0).unwrap();
        assert!(
            (fit.kerr / (TAU * -4.506) - 1.0).abs() < 1e-4,
            "{}",
            fit.kerr / TAU
        );
        assert!((fit.phi - 0.1).abs() < 1e-6);
    }

    #[test]
    fn bifurcated_traces_are_reported() {
        let (traces, res, env) = map(-4.506, &[-40.0, -30.0, -15.0]);
        match fit_kerr_2d(&traces, &res, &env, 4.0) {
            Err(FitError::BifurcationInFitWindow { indices }) => assert!(indices.contains(&2)),
            other => panic!("{other:?}"),
        }
    }
}
