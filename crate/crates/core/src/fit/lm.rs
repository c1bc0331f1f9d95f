//! Damped Gauss-Newton (Levenberg-Marquardt) core shared by the fitters.

use nalgebra::{DMatrix, DVector};

/// A least-squares problem in real residuals.
pub(crate) trait Problem {
    fn n_params(&self) -> usize;
    fn n_residuals(&self) -> usize;
    /// Fills `out`; returns false when `p` is outside the model domain.
    fn residuals(&self, p: &[f64], out: &mut [f64]) -> bool;
    /// Fills the `n_residuals × n_params` Jacobian at a valid `p`.
    fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>);
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LmConfig {
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub step_tolerance: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            max_iterations: 500,
            rel_tolerance: 1e-10,
            step_tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LmOutcome {
    pub params: Vec<f64>,
    pub rss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Residual sum of squares after the start point and every accepted step.
    pub history: Vec<f64>,
    pub jacobian: DMatrix<f64>,
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Minimizes the residual sum of squares from `start`, which must be valid.
pub(crate) fn minimize<P: Problem>(problem: &P, start: &[f64], cfg: LmConfig) -> Option<LmOutcome> {
    let n = problem.n_params();
    let m = problem.n_residuals();
    let mut p = start.to_vec();
    let mut r = vec![0.0; m];
    if !problem.residuals(&p, &mut r) {
        return None;
    }
    let mut rss = sum_sq(&r);
    if !rss.is_finite() {
        return None;
    }
    let mut history = vec![rss];
    let mut jac = DMatrix::zeros(m, n);
    problem.jacobian(&p, &mut jac);

    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; m];
    let mut lambda = 1e-3;
    let mut nu = 2.0;
    let mut scale = DVector::zeros(n);
    let mut converged = rss == 0.0;
    let mut iterations = 0;

    while !converged && iterations < cfg.max_iterations {
        iterations += 1;
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * rv;
        for k in 0..n {
            scale[k] = f64::max(scale[k], jtj[(k, k)]);
            if scale[k] == 0.0 {
                scale[k] = 1.0;
            }
        }
        if g.iter()
            .zip(scale.iter())
            .all(|(gk, sk)| gk.abs() <= 1e-300 * sk.sqrt())
        {
            converged = true;
            break;
        }

        let mut accepted = false;
        while !accepted {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * scale[k];
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= nu;
                    nu *= 2.0;
                    if lambda > 1e30 {
                        break;
                    }
                    continue;
                }
            };
            for k in 0..n {
                trial[k] = p[k] + step[k];
            }
            let valid = problem.residuals(&trial, &mut r_trial);
            let rss_trial = if valid {
                sum_sq(&r_trial)
            } else {
                f64::INFINITY
            };
            if rss_trial.is_finite() && rss_trial < rss {
                // Gain ratio against the linearized model |r + J·δ|².
                let jstep = &jac * &step;
                let predicted = -2.0 * step.dot(&g) - jstep.norm_squared();
                let rho = if predicted > 0.0 {
                    (rss - rss_trial) / predicted
                } else {
                    1.0
                };
                lambda *= f64::max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0).powi(3));
                lambda = lambda.max(1e-15);
                nu = 2.0;

                let rel_change = (rss - rss_trial) / rss;
                let mut step_scaled = 0.0;
                let mut p_scaled = 0.0;
                for k in 0..n {
                    step_scaled += scale[k] * step[k] * step[k];
                    p_scaled += scale[k] * p[k] * p[k];
                }
                p.copy_from_slice(&trial);
                std::mem::swap(&mut r, &mut r_trial);
                rss = rss_trial;
                history.push(rss);
                problem.jacobian(&p, &mut jac);
                accepted = true;
                if rel_change < cfg.rel_tolerance
                    || step_scaled.sqrt()
                        < cfg.step_tolerance * (p_scaled.sqrt() + cfg.step_tolerance)
                    || rss == 0.0
                {
                    converged = true;
                }
            } else {
                lambda *= nu;
                nu *= 2.0;
                if lambda > 1e30 {
                    break;
                }
            }
        }
        if !accepted {
            // No descent direction left at working precision: stationary point.
            converged = true;
        }
    }

    Some(LmOutcome {
        params: p,
        rss,
        iterations,
        converged,
        history,
        jacobian: jac,
    })
}

/// Linearized covariance information at an optimum.
#[derive(Debug, Clone)]
pub(crate) struct Linearization {
    /// `(JᵀJ)⁻¹` (pseudo-inverse when singular), unscaled by residual variance.
    pub inverse_normal: DMatrix<f64>,
    /// Condition number of the column-normalized `JᵀJ`.
    pub condition_number: f64,
    /// Parameter-space direction of the smallest singular value, unit norm in
    /// column-normalized coordinates.
    pub weakest_direction: Vec<f64>,
}

pub(crate) fn linearize(jac: &DMatrix<f64>) -> Linearization {
    let n = jac.ncols();
    let mut norms = vec![0.0; n];
    let mut scaled = jac.clone();
    for (k, norm) in norms.iter_mut().enumerate() {
        let c = jac.column(k).norm();
        *norm = if c > 0.0 { c } else { 1.0 };
        scaled.column_mut(k).scale_mut(1.0 / *norm);
    }
    let svd = scaled.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let sv = &svd.singular_values;
    let s_max = sv.iter().cloned().fold(0.0, f64::max);
    let (k_min, s_min) = sv
        .iter()
        .cloned()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, (k, s)| if s < acc.1 { (k, s) } else { acc },
        );
    let condition_number = if s_min > 0.0 {
        (s_max / s_min).powi(2)
    } else {
        f64::INFINITY
    };
    let cutoff = s_max * 1e-14 * (jac.nrows().max(n) as f64);
    let mut inv = DMatrix::zeros(n, n);
    for (k, &s) in sv.iter().enumerate() {
        if s > cutoff {
            let v = v_t.row(k).transpose();
            inv += (&v * v.transpose()) / (s * s);
        }
    }
    for i in 0..n {
        for j in 0..n {
            inv[(i, j)] /= norms[i] * norms[j];
        }
    }
    Linearization {
        inverse_normal: inv,
        condition_number,
        weakest_direction: v_t.row(k_min).iter().cloned().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// y = p0·exp(−p1·x) on a fixed grid.
    struct Decay {
        x: Vec<f64>,
        y: Vec<f64>,
    }

    impl Problem for Decay {
        fn n_params(&self) -> usize {
            2
        }
        fn n_residuals(&self) -> usize {
            self.x.len()
        }
        fn residuals(&self, p: &[f64], out: &mut [f64]) -> bool {
            for (k, (&x, &y)) in self.x.iter().zip(&self.y).enumerate() {
                out[k] = p[0] * (-p[1] * x).exp() - y;
            }
            true
        }
        fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>) {
            for (k, &x) in self.x.iter().enumerate() {
                let e = (-p[1] * x).exp();
                jac[(k, 0)] = e;
                jac[(k, 1)] = -p[0] * x * e;
            }
        }
    }

    #[test]
    fn recovers_exponential_and_history_is_monotone() {
        let x: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let y = x.iter().map(|x| 3.0 * (-0.7 * x).exp()).collect();
        let out = minimize(&Decay { x, y }, &[1.0, 0.1], LmConfig::default()).unwrap();
        assert!(out.converged);
        assert!((out.params[0] - 3.0).abs() < 1e-9);
        assert!((out.params[1] - 0.7).abs() < 1e-9);
        for w in out.history.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn singular_direction_is_reported() {
        let mut j = DMatrix::zeros(5, 2);
        for k in 0..5 {
            j[(k, 0)] = k as f64 + 1.0;
            j[(k, 1)] = 2.0 * (k as f64 + 1.0);
        }
        let lin = linearize(&j);
        assert!(lin.condition_number > 1e20);
        let d = &lin.weakest_direction;
        assert!((d[0].abs() - d[1].abs()).abs() < 1e-12);
    }
}
