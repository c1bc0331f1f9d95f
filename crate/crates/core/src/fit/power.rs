//! TLS loss-model fit of `1/Q_i` against photon number.

use nalgebra::DMatrix;

use super::lm::{self, LmConfig, Problem};
use super::{std_errors_from, FitDiagnostics, FitKind, FitResult, PowerScan};
use crate::error::FitError;
use crate::physics::tls_thermal_factor;

/// `1/Q_i = A/(1 + n/n_C)^β + δ₀` in `[A, ln n_C, β, δ₀]`, residuals
/// weighted by the propagated error of `1/Q_i`.
struct PowerProblem {
    n: Vec<f64>,
    y: Vec<f64>,
    sigma: Vec<f64>,
}

impl Problem for PowerProblem {
    fn n_params(&self) -> usize {
        4
    }
    fn n_residuals(&self) -> usize {
        self.n.len()
    }
    fn residuals(&self, p: &[f64], out: &mut [f64]) -> bool {
        if !(p.iter().all(|v| v.is_finite()) && p[2] > 0.0 && p[2] <= 2.0 && p[1].abs() < 700.0) {
            return false;
        }
        let nc = p[1].exp();
        for (k, o) in out.iter_mut().enumerate().take(self.n.len()) {
            let model = p[0] * (1.0 + self.n[k] / nc).powf(-p[2]) + p[3];
            *o = (model - self.y[k]) / self.sigma[k];
        }
        true
    }
    fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>) {
        let nc = p[1].exp();
        for k in 0..self.n.len() {
            let u = 1.0 + self.n[k] / nc;
            let sat = u.powf(-p[2]);
            let s = self.sigma[k];
            jac[(k, 0)] = sat / s;
            // d/d ln n_C of (1 + n e^{-ln n_C})^{-β}.
            jac[(k, 1)] = p[0] * p[2] * sat / u * (self.n[k] / nc) / s;
            jac[(k, 2)] = -p[0] * sat * u.ln() / s;
            jac[(k, 3)] = 1.0 / s;
        }
    }
}

const NAMES: [&str; 4] = ["f_delta_tls", "n_c", "beta", "delta0"];
const COND_LIMIT: f64 = 1e8;

/// Weighted fit of the TLS loss model; `qp_loss` is folded into `delta0`.
pub fn fit_power_scan(
    scan: &PowerScan,
    omega0: f64,
    temperature: f64,
) -> Result<FitResult, FitError> {
    let mut pts = scan.points.clone();
    if pts.len() < 6 {
        return Err(FitError::InsufficientData(format!(
            "power scan needs at least 6 points, got {}",
            pts.len()
        )));
    }
    pts.sort_by(|a, b| a.n_ph.total_cmp(&b.n_ph));
    let (n_min, n_max) = (pts[0].n_ph, pts[pts.len() - 1].n_ph);
    if n_max / n_min < 1e3 {
        return Err(FitError::InsufficientData(format!(
            "photon numbers span {:.2} decades, need 3",
            (n_max / n_min).log10()
        )));
    }
    let thermal = tls_thermal_factor(omega0, temperature);
    let problem = PowerProblem {
        n: pts.iter().map(|p| p.n_ph).collect(),
        y: pts.iter().map(|p| 1.0 / p.q_i).collect(),
        sigma: pts.iter().map(|p| p.q_i_err / (p.q_i * p.q_i)).collect(),
    };

    // Starting points: plateau levels from the ends, n_C at the half drop.
    let y = &problem.y;
    let d0 = y[y.len() - 1];
    let a0 = (y[0] - d0).max(0.0);
    let half = d0 + 0.5 * a0;
    let nc0 = problem
        .n
        .iter()
        .zip(y)
        .find(|(_, &v)| v <= half)
        .map(|(n, _)| *n)
        .unwrap_or((n_min * n_max).sqrt());
    let mut best: Option<lm::LmOutcome> = None;
    let cfg = LmConfig::default();
    for nc_mult in [0.1, 1.0, 10.0] {
        for beta in [0.3, 0.6, 1.0, 1.6] {
            let start = [a0, (nc0 * nc_mult).ln(), beta, d0];
            if let Some(out) = lm::minimize(&problem, &start, cfg) {
                if best.as_ref().is_none_or(|b| out.rss < b.rss) {
                    best = Some(out);
                }
            }
        }
    }
    let out = best.ok_or_else(|| FitError::InsufficientData("no valid starting point".into()))?;
    let p = out.params.clone();
    let m = problem.n.len();
    let dof = m - 4;
    let lin = lm::linearize(&out.jacobian);
    let diagnostics = FitDiagnostics {
        n_points: m,
        dof,
        condition_number: Some(lin.condition_number),
        residual_history: out.history.clone(),
        notes: vec![format!("tls thermal factor {thermal}")],
    };
    let values = vec![
        ("f_delta_tls", p[0] / thermal),
        ("n_c", p[1].exp()),
        ("beta", p[2]),
        ("delta0", p[3]),
    ];
    let rss = out.rss;

    if !out.converged {
        let partial = FitResult::build(
            FitKind::PowerScan,
            values,
            None,
            rss,
            false,
            out.iterations,
            diagnostics,
        );
        return Err(FitError::NotConverged {
            iterations: out.iterations,
            partial: Box::new(partial),
        });
    }
    if !(lin.condition_number <= COND_LIMIT) {
        let direction = NAMES
            .iter()
            .zip(&lin.weakest_direction)
            .map(|(n, v)| (n.to_string(), *v))
            .collect();
        let partial = reduced_fit(&problem, &p, thermal, out.iterations, diagnostics);
        return Err(FitError::IllConditioned {
            condition_number: lin.condition_number,
            direction,
            partial: Box::new(partial),
        });
    }
    let se = std_errors_from(&lin, rss, dof);
    let errors = vec![
        ("f_delta_tls", se[0] / thermal),
        ("n_c", p[1].exp() * se[1]),
        ("beta", se[2]),
        ("delta0", se[3]),
    ];
    Ok(FitResult::build(
        FitKind::PowerScan,
        values,
        Some(errors),
        rss,
        true,
        out.iterations,
        diagnostics,
    ))
}

/// Linear fit of `(A, δ₀)` with `n_C`, `β` frozen at `p`: the identifiable
/// part of a degenerate scan.
fn reduced_fit(
    problem: &PowerProblem,
    p: &[f64],
    thermal: f64,
    iterations: usize,
    mut diag: FitDiagnostics,
) -> FitResult {
    let nc = p[1].exp();
    let m = problem.n.len();
    let mut x = DMatrix::zeros(m, 2);
    let mut b = nalgebra::DVector::zeros(m);
    for k in 0..m {
        let s = problem.sigma[k];
        x[(k, 0)] = (1.0 + problem.n[k] / nc).powf(-p[2]) / s;
        x[(k, 1)] = 1.0 / s;
        b[k] = problem.y[k] / s;
    }
    let lin = lm::linearize(&x);
    let coef = &lin.inverse_normal * (x.transpose() * &b);
    let rss = (&x * &coef - &b).norm_squared();
    let dof = m - 2;
    let se = std_errors_from(&lin, rss, dof);
    diag.notes
        .push("n_c and beta frozen; errors from the reduced (f_delta_tls, delta0) model".into());
    diag.dof = dof;
    FitResult::build(
        FitKind::PowerScan,
        vec![
            ("f_delta_tls", coef[0] / thermal),
            ("n_c", nc),
            ("beta", p[2]),
            ("delta0", coef[1]),
        ],
        Some(vec![("f_delta_tls", se[0] / thermal), ("delta0", se[1])]),
        rss,
        true,
        iterations,
        diag,
    )
}
