//! Initial guesses for the linear hanger fit.
//!
//! Steps: cable delay from the wings (refined by minimizing the circle-fit
//! residual), algebraic circle fit, arctangent fit of the phase around the
//! circle centre, then the off-resonant point fixes `a`, `α` and `φ`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lm::{self, LmConfig, Problem};
use super::ComplexTrace;
use crate::error::FitError;
use crate::physics::{EnvironmentParams, ResonanceParams};

/// Dip depth against the noise floor of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipStatistics {
    /// Median of `|S21|`.
    pub baseline: f64,
    /// Baseline minus the minimum of the 5-point running mean of `|S21|`.
    pub depth: f64,
    /// Per-quadrature noise estimate from second differences.
    pub noise: f64,
    /// Index of the smoothed minimum.
    pub min_index: usize,
}

impl DipStatistics {
    pub const SIGNIFICANCE: f64 = 3.0;

    pub fn is_dip(&self) -> bool {
        self.depth >= Self::SIGNIFICANCE * self.noise && self.depth > 1e-9 * self.baseline
    }
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// 5-point running mean, window truncated at the ends.
pub(crate) fn running_mean5(v: &[f64]) -> Vec<f64> {
    (0..v.len())
        .map(|k| {
            let lo = k.saturating_sub(2);
            let hi = (k + 3).min(v.len());
            v[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

pub fn dip_statistics(samples: &[Complex64]) -> DipStatistics {
    let mags: Vec<f64> = samples.iter().map(|z| z.norm()).collect();
    let baseline = median(&mut mags.clone());
    let smooth = running_mean5(&mags);
    let (min_index, min) =
        smooth
            .iter()
            .cloned()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (k, v)| if v < acc.1 { (k, v) } else { acc },
            );
    let mut second: Vec<f64> = samples
        .windows(3)
        .flat_map(|w| {
            let d = w[2] - 2.0 * w[1] + w[0];
            [d.re.abs(), d.im.abs()]
        })
        .collect();
    // MAD of a zero-mean Gaussian is 0.6745σ; second differences carry √6σ.
    let noise = median(&mut second) / 0.674_489_750_196_081_7 / 6f64.sqrt();
    DipStatistics {
        baseline,
        depth: baseline - min,
        noise,
        min_index,
    }
}

/// Algebraic (Kasa) circle fit: centre and radius.
pub(crate) fn kasa_circle(z: &[Complex64]) -> Option<(Complex64, f64)> {
    let n = z.len() as f64;
    let mean = z.iter().sum::<Complex64>() / n;
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for p in z {
        let q = p - mean;
        let row = Vector3::new(q.re, q.im, 1.0);
        ata += row * row.transpose();
        atb += row * -(q.norm_sqr());
    }
    let sol = ata.cholesky()?.solve(&atb);
    let c = Complex64::new(-0.5 * sol[0], -0.5 * sol[1]);
    let r2 = c.norm_sqr() - sol[2];
    if !(r2 > 0.0) {
        return None;
    }
    Some((c + mean, r2.sqrt()))
}

fn circle_residual(z: &[Complex64]) -> f64 {
    match kasa_circle(z) {
        Some((c, r)) => z.iter().map(|p| ((p - c).norm() - r).powi(2)).sum::<f64>() / (r * r),
        None => f64::INFINITY,
    }
}

fn remove_delay(freqs: &[f64], z: &[Complex64], f_ref: f64, tau: f64) -> Vec<Complex64> {
    freqs
        .iter()
        .zip(z)
        .map(|(f, s)| s * Complex64::from_polar(1.0, TAU * (f - f_ref) * tau))
        .collect()
}

fn unwrap(phases: &mut [f64]) {
    for k in 1..phases.len() {
        let mut d = phases[k] - phases[k - 1];
        while d > PI {
            d -= TAU;
        }
        while d < -PI {
            d += TAU;
        }
        phases[k] = phases[k - 1] + d;
    }
}

/// Shared-slope regression of unwrapped phase over the two wings.
fn wing_delay(freqs: &[f64], z: &[Complex64]) -> f64 {
    let n = freqs.len();
    let w = (n / 10).max(3).min(n / 2);
    let mut num = 0.0;
    let mut den = 0.0;
    for range in [0..w, n - w..n] {
        let f = &freqs[range.clone()];
        let mut ph: Vec<f64> = z[range].iter().map(|s| s.arg()).collect();
        unwrap(&mut ph);
        let fm = f.iter().sum::<f64>() / f.len() as f64;
        let pm = ph.iter().sum::<f64>() / ph.len() as f64;
        for (fi, pi) in f.iter().zip(&ph) {
            num += (fi - fm) * (pi - pm);
            den += (fi - fm) * (fi - fm);
        }
    }
    if den > 0.0 {
        -num / den / TAU
    } else {
        0.0
    }
}

fn refine_delay(freqs: &[f64], z: &[Complex64], f_ref: f64, tau_wing: f64) -> f64 {
    let span = freqs[freqs.len() - 1] - freqs[0];
    let half = 2.0 / (TAU * span) + 0.25 * tau_wing.abs();
    const GRID: usize = 80;
    let h = |tau: f64| circle_residual(&remove_delay(freqs, z, f_ref, tau));
    let cell = 2.0 * half / GRID as f64;
    let (mut best_tau, mut best) = (tau_wing, h(tau_wing));
    for k in 0..=GRID {
        let t = tau_wing - half + k as f64 * cell;
        let v = h(t);
        if v < best {
            best = v;
            best_tau = t;
        }
    }
    let (mut a, mut b) = (best_tau - cell, best_tau + cell);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut hc, mut hd) = (h(c), h(d));
    for _ in 0..80 {
        if hc < hd {
            b = d;
            d = c;
            hd = hc;
            c = b - g * (b - a);
            hc = h(c);
        } else {
            a = c;
            c = d;
            hc = hd;
            d = a + g * (b - a);
            hd = h(d);
        }
        if (b - a).abs() <= 1e-15 * (best_tau.abs() + cell) {
            break;
        }
    }
    let t = 0.5 * (a + b);
    if h(t) <= best {
        t
    } else {
        best_tau
    }
}

fn wrap(a: f64) -> f64 {
    a.sin().atan2(a.cos())
}

/// `θ(f) = θ₀ + 2·atan(2Q_l(1 − f/f_r))` in (θ₀, ln Q_l, f_r).
struct PhaseProblem<'a> {
    freqs: &'a [f64],
    theta: Vec<f64>,
}

impl Problem for PhaseProblem<'_> {
    fn n_params(&self) -> usize {
        3
    }
    fn n_residuals(&self) -> usize {
        self.freqs.len()
    }
    fn residuals(&self, p: &[f64], out: &mut [f64]) -> bool {
        if !(p[2] > 0.0) || !p[1].is_finite() {
            return false;
        }
        let q = p[1].exp();
        for (k, (&f, &th)) in self.freqs.iter().zip(&self.theta).enumerate() {
            out[k] = wrap(p[0] + 2.0 * (2.0 * q * (1.0 - f / p[2])).atan() - th);
        }
        true
    }
    fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>) {
        let q = p[1].exp();
        for (k, &f) in self.freqs.iter().enumerate() {
            let x = 2.0 * q * (1.0 - f / p[2]);
            let d = 2.0 / (1.0 + x * x);
            jac[(k, 0)] = 1.0;
            jac[(k, 1)] = d * x;
            jac[(k, 2)] = d * 2.0 * q * f / (p[2] * p[2]);
        }
    }
}

/// Initial (resonance, environment) estimate for a linear hanger trace.
pub fn initial_guess_circle(
    trace: &ComplexTrace,
) -> Result<(ResonanceParams, EnvironmentParams), FitError> {
    let freqs = trace.freqs();
    let z = trace.samples();
    let stats = dip_statistics(z);
    if !stats.is_dip() {
        return Err(FitError::NoDipFound {
            depth: stats.depth,
            noise: stats.noise,
        });
    }
    let n = freqs.len();
    let f_ref = 0.5 * (freqs[0] + freqs[n - 1]);
    let tau = refine_delay(freqs, z, f_ref, wing_delay(freqs, z));
    let zc = remove_delay(freqs, z, f_ref, tau);
    let no_dip = || FitError::NoDipFound {
        depth: stats.depth,
        noise: stats.noise,
    };
    let (centre, radius) = kasa_circle(&zc).ok_or_else(no_dip)?;

    let theta: Vec<f64> = zc.iter().map(|s| (s - centre).arg()).collect();
    // Resonance at the steepest phase change.
    let steps: Vec<f64> = theta.windows(2).map(|w| wrap(w[1] - w[0]).abs()).collect();
    let smooth = running_mean5(&steps);
    let k_star = smooth
        .iter()
        .cloned()
        .enumerate()
        .fold(
            (0, -1.0),
            |acc, (k, v)| if v > acc.1 { (k, v) } else { acc },
        )
        .0;
    let f_r0 = 0.5 * (freqs[k_star] + freqs[k_star + 1]);
    // Half width: phase moves by π/2 from resonance at x = ±½.
    let mut lo = k_star;
    let mut acc = 0.0;
    while lo > 0 && acc < 0.5 * PI {
        acc += steps[lo - 1];
        lo -= 1;
    }
    let mut hi = k_star + 1;
    acc = 0.0;
    while hi < n - 1 && acc < 0.5 * PI {
        acc += steps[hi];
        hi += 1;
    }
    let fwhm = (freqs[hi] - freqs[lo]).max(freqs[1] - freqs[0]);
    let q_l0 = (f_r0 / fwhm).max(1.0);
    let theta0 = theta[k_star];

    let problem = PhaseProblem {
        freqs,
        theta: theta.clone(),
    };
    let cfg = LmConfig {
        max_iterations: 200,
        ..LmConfig::default()
    };
    let out = lm::minimize(&problem, &[theta0, q_l0.ln(), f_r0], cfg).ok_or_else(no_dip)?;
    let (theta0, q_l, f_r) = (out.params[0], out.params[1].exp(), out.params[2]);
    if !(q_l.is_finite() && f_r > 0.0) {
        return Err(no_dip());
    }

    let off = centre - Complex64::from_polar(radius, theta0);
    let a = off.norm();
    let alpha = wrap(off.arg() + TAU * f_ref * tau);
    let c_norm = centre / off;
    let v = Complex64::new(1.0, 0.0) - c_norm;
    let phi = v.arg().clamp(-1.5, 1.5);
    let ratio = (2.0 * v.norm() * phi.cos()).clamp(1e-6, 1.0 - 1e-6);

    let omega_r = TAU * f_r;
    let total = omega_r / q_l;
    let res = ResonanceParams::new(omega_r, ratio * total, (1.0 - ratio) * total)?;
    let env = EnvironmentParams::new(a, alpha, tau, phi)?;
    Ok((res, env))
}
