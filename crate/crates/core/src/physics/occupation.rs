//! Steady-state photon occupation of a driven Kerr resonator.
//!
//! The normalized occupation `n` solves
//! `(δ² + ¼)·n − 2δξ·n² + ξ²·n³ = ½`, equivalently
//! `n·[(δ − ξn)² + ¼] = ½`, so every real root lies in `(0, 2]`.
//! Roots are bracketed between the analytic critical points of the cubic
//! and polished with a safeguarded Newton iteration.

use serde::{Deserialize, Serialize};

/// `|ξ|` above which a bistable detuning window exists: `2/(3√3)`.
pub const CRITICAL_XI: f64 = 0.384_900_179_459_750_5;

/// Real positive roots of the occupation equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Occupation {
    /// Ascending, distinct.
    pub roots: Vec<f64>,
    /// Smallest root: the low-amplitude branch.
    pub stable_root: f64,
}

impl Occupation {
    pub fn is_multistable(&self) -> bool {
        self.roots.len() >= 2
    }
}

#[inline]
fn residual(n: f64, delta: f64, xi: f64) -> f64 {
    let u = delta - xi * n;
    n * (u * u + 0.25) - 0.5
}

#[inline]
fn derivative(n: f64, delta: f64, xi: f64) -> f64 {
    3.0 * xi * xi * n * n - 4.0 * delta * xi * n + delta * delta + 0.25
}

/// Root in `[lo, hi]` given `residual(lo) < 0 < residual(hi)` or the reverse.
fn polish(mut lo: f64, mut hi: f64, delta: f64, xi: f64) -> f64 {
    let mut f_lo = residual(lo, delta, xi);
    if f_lo == 0.0 {
        return lo;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = residual(x, delta, xi);
        if fx == 0.0 {
            return x;
        }
        if (fx < 0.0) == (f_lo < 0.0) {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
        }
        let d = derivative(x, delta, xi);
        let newton = x - fx / d;
        let next = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs()
            || hi - lo <= 4.0 * f64::EPSILON * hi.abs()
        {
            return next;
        }
        x = next;
    }
    x
}

/// Roots of the occupation equation as a fixed array plus a count.
pub(crate) fn occupation_roots(delta: f64, xi: f64) -> ([f64; 3], usize) {
    let mut out = [0.0; 3];
    if xi == 0.0 {
        out[0] = 0.5 / (delta * delta + 0.25);
        return (out, 1);
    }
    // Partition (0, 2] at the critical points of the cubic, where present.
    let mut edges = [0.0, 0.0, 0.0, 0.0];
    let mut n_edges = 0;
    edges[n_edges] = 0.0;
    n_edges += 1;
    let disc = delta * delta - 0.75;
    if disc > 0.0 {
        let s = disc.sqrt();
        // n± = (2δ ± s)/(3ξ), the smaller-magnitude one via the product
        // n₊n₋ = (δ² + ¼)/(3ξ²) to avoid cancellation.
        let big = (2.0 * delta + delta.signum() * s) / (3.0 * xi);
        let small = (delta * delta + 0.25) / (3.0 * xi * xi) / big;
        let (c1, c2) = if big < small {
            (big, small)
        } else {
            (small, big)
        };
        for c in [c1, c2] {
            if c > 0.0 && c < 2.0 {
                edges[n_edges] = c;
                n_edges += 1;
            }
        }
    }
    edges[n_edges] = 2.0;
    n_edges += 1;

    let mut count = 0;
    for k in 0..n_edges - 1 {
        let (a, b) = (edges[k], edges[k + 1]);
        let (fa, fb) = (residual(a, delta, xi), residual(b, delta, xi));
        let root = if fb == 0.0 {
            Some(b)
        } else if (fa < 0.0) != (fb < 0.0) && fa != 0.0 {
            Some(polish(a, b, delta, xi))
        } else {
            None
        };
        if let Some(r) = root {
            if r > 0.0 && (count == 0 || r > out[count - 1]) {
                out[count] = r;
                count += 1;
            }
        }
    }
    if count == 0 {
        // Unreachable for finite inputs: f(0) = -1/2 and f(2) >= 0.
        out[0] = polish(0.0, 2.0, delta, xi);
        count = 1;
    }
    (out, count)
}

/// All real positive roots of the occupation equation at detuning `delta`
/// (in units of `κ+γ`) and normalized Kerr drive `xi`.
pub fn solve_photon_occupation(delta: f64, xi: f64) -> Occupation {
    let (roots, count) = occupation_roots(delta, xi);
    Occupation {
        roots: roots[..count].to_vec(),
        stable_root: roots[0],
    }
}

/// Number of distinct positive roots at one operating point.
pub fn count_roots_at(delta: f64, xi: f64) -> usize {
    occupation_roots(delta, xi).1
}

/// `4p³ + 27q²` of the depressed cubic in `y = ξn`; non-positive iff the
/// equation has three real roots (counting multiplicity).
fn depressed_discriminant(delta: f64, xi: f64) -> f64 {
    let p = 0.25 - delta * delta / 3.0;
    let q = 2.0 * delta.powi(3) / 27.0 + delta / 6.0 - 0.5 * xi;
    4.0 * p * p * p + 27.0 * q * q
}

/// True iff some detuning in `[lo, hi]` admits two or more distinct
/// positive occupations at drive `xi`.
pub fn bifurcation_onset(delta_range: (f64, f64), xi: f64) -> bool {
    if xi == 0.0 || xi.abs() < CRITICAL_XI * (1.0 - 1e-12) {
        return false;
    }
    let (lo, hi) = if delta_range.0 <= delta_range.1 {
        delta_range
    } else {
        (delta_range.1, delta_range.0)
    };
    // Bistability needs |δ| > √3/2 on the side of sign(ξ).
    const GRID: usize = 4096;
    let mut best = (f64::INFINITY, lo);
    for k in 0..=GRID {
        let d = lo + (hi - lo) * k as f64 / GRID as f64;
        let disc = depressed_discriminant(d, xi);
        if disc <= 0.0 && count_roots_at(d, xi) >= 2 {
            return true;
        }
        if disc < best.0 {
            best = (disc, d);
        }
    }
    // Refine around the grid minimum in case the window is narrower than a cell.
    let cell = (hi - lo) / GRID as f64;
    let (mut a, mut b) = ((best.1 - cell).max(lo), (best.1 + cell).min(hi));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if depressed_discriminant(c, xi) < depressed_discriminant(d, xi) {
            b = d;
        } else {
            a = c;
        }
        if b - a < 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    let d = 0.5 * (a + b);
    depressed_discriminant(d, xi) <= 0.0 && count_roots_at(d, xi) >= 2
}
