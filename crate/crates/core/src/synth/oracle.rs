//! Slow, independent reference computations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::ModelError;
use crate::fit::ComplexTrace;
use crate::physics::{environment_factor, hanger_core, EnvironmentParams, ResonanceParams};

const SCAN_SAMPLES: usize = 1_000_000;
const CHUNK: usize = 4096;

/// Real roots of `n((δ − ξn)² + ¼) = ½` by dense sign-change scan and
/// bisection, in ascending order.
pub fn oracle_cubic_roots(delta: f64, xi: f64) -> Vec<f64> {
    let n_max = 4.0 * f64::max(2.0, 0.5 / (delta * delta + 0.25));
    let h = n_max / SCAN_SAMPLES as f64;
    // Expanded form: ξ²n³ − 2δξn² + (δ² + ¼)n − ½.
    let c3 = xi * xi;
    let c2 = -2.0 * delta * xi;
    let c1 = delta * delta + 0.25;
    let f = |n: f64| ((c3 * n + c2) * n + c1) * n - 0.5;

    let mut roots = Vec::new();
    let mut buf = [0.0f64; CHUNK];
    // Small integers are exact in f64, so `base + offset` equals `(start + j) as f64`.
    let offsets: Vec<f64> = (0..CHUNK).map(|j| j as f64).collect();
    let mut prev_n = 0.0;
    let mut prev_v = -0.5;
    let mut start = 1usize;
    while start <= SCAN_SAMPLES {
        let len = CHUNK.min(SCAN_SAMPLES + 1 - start);
        let base = start as f64;
        for (v, o) in buf[..len].iter_mut().zip(&offsets) {
            *v = f((base + o) * h);
        }
        // Branch-free pass over sign bits; most chunks hold no root.
        let (mut any_neg, mut all_neg, mut zero) = (0u64, 1u64, 0u64);
        for v in &buf[..len] {
            let s = v.to_bits() >> 63;
            any_neg |= s;
            all_neg &= s;
            zero |= u64::from(*v == 0.0);
        }
        let prev_neg = u64::from(prev_v < 0.0);
        if zero == 0 && prev_v != 0.0 && any_neg == all_neg && all_neg == prev_neg {
            prev_n = (start + len - 1) as f64 * h;
            prev_v = buf[len - 1];
            start += len;
            continue;
        }
        for (j, &v) in buf[..len].iter().enumerate() {
            let n = (start + j) as f64 * h;
            if v == 0.0 {
                roots.push(n);
            } else if (v > 0.0) != (prev_v > 0.0) && prev_v != 0.0 {
                roots.push(bisect(&f, prev_n, n, prev_v));
            }
            prev_n = n;
            prev_v = v;
        }
        start += len;
    }
    roots
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let lo_negative = f_lo < 0.0;
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if (v < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Inclusive, uniformly spaced axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, points: usize) -> Self {
        GridAxis { lo, hi, points }
    }

    pub fn cell(&self) -> f64 {
        if self.points > 1 {
            (self.hi - self.lo) / (self.points - 1) as f64
        } else {
            0.0
        }
    }

    fn value(&self, k: usize) -> f64 {
        self.lo + self.cell() * k as f64
    }
}

/// Search box for [`oracle_grid_fit`]. `omega0`, `kappa` and `gamma` are
/// angular rates; `tau` in seconds and `phi` in radians are optional axes
/// that default to the values in `fixed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridBounds {
    pub omega0: GridAxis,
    pub kappa: GridAxis,
    pub gamma: GridAxis,
    pub tau: Option<GridAxis>,
    pub phi: Option<GridAxis>,
    /// Delay and mismatch used when the corresponding axis is absent.
    pub fixed_tau: f64,
    pub fixed_phi: f64,
}

impl GridBounds {
    /// `points` per axis, spanning `±spread` (relative) around a guess for
    /// `ω₀` in linewidths and around `κ`, `γ` by factors of `1 ± spread`.
    pub fn around(
        res: &ResonanceParams,
        env: &EnvironmentParams,
        linewidths: f64,
        spread: f64,
        points: usize,
    ) -> Self {
        let w = res.total_rate() * linewidths;
        GridBounds {
            omega0: GridAxis::new(res.omega0() - w, res.omega0() + w, points),
            kappa: GridAxis::new(
                res.kappa() * (1.0 - spread),
                res.kappa() * (1.0 + spread),
                points,
            ),
            gamma: GridAxis::new(
                res.gamma() * (1.0 - spread),
                res.gamma() * (1.0 + spread),
                points,
            ),
            tau: None,
            phi: None,
            fixed_tau: env.tau(),
            fixed_phi: env.phi(),
        }
    }
}

/// Best grid point and the objective there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFitEstimate {
    pub omega0: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub tau: f64,
    pub phi: f64,
    /// Complex background scale `a·e^{iα}` at the best point, solved
    /// exactly at every grid point.
    pub scale_re: f64,
    pub scale_im: f64,
    /// Sum of squared complex residuals.
    pub objective: f64,
    /// Grid spacing per axis: `ω₀`, `κ`, `γ`.
    pub cells: [f64; 3],
    /// Dip depth `κ/(κ+γ)` of the best model; near zero for a flat trace.
    pub dip_depth: f64,
}

/// Exhaustive grid minimization of the linear hanger objective.
pub fn oracle_grid_fit(
    trace: &ComplexTrace,
    bounds: &GridBounds,
) -> Result<GridFitEstimate, ModelError> {
    for (name, ax) in [
        ("omega0", &bounds.omega0),
        ("kappa", &bounds.kappa),
        ("gamma", &bounds.gamma),
    ] {
        if ax.points < 2 || !(ax.hi > ax.lo) {
            return Err(ModelError::invalid(
                name,
                "grid axis needs >= 2 points and hi > lo",
            ));
        }
    }
    let single = |v: f64| GridAxis::new(v, v, 1);
    let tau_axis = bounds.tau.unwrap_or(single(bounds.fixed_tau));
    let phi_axis = bounds.phi.unwrap_or(single(bounds.fixed_phi));
    let freqs = trace.freqs();
    let data = trace.samples();
    let mut model = vec![Complex64::new(0.0, 0.0); freqs.len()];
    let mut best: Option<GridFitEstimate> = None;

    for it in 0..tau_axis.points {
        let tau = tau_axis.value(it);
        let delay: Vec<Complex64> = freqs
            .iter()
            .map(|&f| {
                environment_factor(
                    f,
                    &EnvironmentParams::new(1.0, 0.0, tau, 0.0).expect("unit env"),
                )
            })
            .collect();
        for ip in 0..phi_axis.points {
            let phi = phi_axis.value(ip);
            let tan_phi = phi.tan();
            for iw in 0..bounds.omega0.points {
                let w0 = bounds.omega0.value(iw);
                for ik in 0..bounds.kappa.points {
                    let kappa = bounds.kappa.value(ik);
                    for ig in 0..bounds.gamma.points {
                        let gamma = bounds.gamma.value(ig);
                        if kappa <= 0.0 || gamma <= 0.0 {
                            continue;
                        }
                        let total = kappa + gamma;
                        let ratio = kappa / total;
                        let mut num = Complex64::new(0.0, 0.0);
                        let mut den = 0.0;
                        for (j, &f) in freqs.iter().enumerate() {
                            let x = (TAU * f - w0) / total;
                            let m = delay[j] * hanger_core(x, ratio, tan_phi);
                            model[j] = m;
                            num += m.conj() * data[j];
                            den += m.norm_sqr();
                        }
                        let scale = num / den;
                        let objective: f64 = model
                            .iter()
                            .zip(data)
                            .map(|(m, z)| (z - scale * m).norm_sqr())
                            .sum();
                        if best.as_ref().is_none_or(|b| objective < b.objective) {
                            best = Some(GridFitEstimate {
                                omega0: w0,
                                kappa,
                                gamma,
                                tau,
                                phi,
                                scale_re: scale.re,
                                scale_im: scale.im,
                                objective,
                                cells: [
                                    bounds.omega0.cell(),
                                    bounds.kappa.cell(),
                                    bounds.gamma.cell(),
                                ],
                                dip_depth: ratio,
                            });
                        }
                    }
                }
            }
        }
    }
    best.ok_or(ModelError::invalid(
        "bounds",
        "no admissible grid point (kappa, gamma must be > 0)",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::solve_photon_occupation;

    #[test]
    fn closed_form_limits() {
        let r = oracle_cubic_roots(0.0, 0.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 2.0).abs() < 1e-13);
        let r = oracle_cubic_roots(1.5, 0.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.5 / (1.5f64 * 1.5 + 0.25)).abs() < 1e-13);
    }

    #[test]
    fn three_roots_agree_with_fast_solver() {
        let (d, xi) = (-2.0, -1.0);
        let oracle = oracle_cubic_roots(d, xi);
        let fast = solve_photon_occupation(d, xi);
        assert_eq!(oracle.len(), 3);
        for (a, b) in oracle.iter().zip(&fast.roots) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
