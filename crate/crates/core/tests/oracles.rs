//! Fast paths checked against the brute-force oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resforge::fit::*;
use resforge::physics::*;
use resforge::synth::scenarios::*;
use resforge::synth::*;
use resforge::FitError;

fn cubic(delta: f64, xi: f64, n: f64) -> f64 {
    n * ((delta - xi * n).powi(2) + 0.25) - 0.5
}

#[test]
fn cubic_solver_matches_dense_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut multistable = 0;
    for _ in 0..400 {
        let delta = rng.random_range(-20.0..=20.0);
        let xi = rng.random_range(-5.0..=5.0);
        let fast = solve_photon_occupation(delta, xi);
        let slow = oracle_cubic_roots(delta, xi);
        assert_eq!(
            fast.roots.len(),
            slow.len(),
            "delta {delta} xi {xi}: {:?} vs {slow:?}",
            fast.roots
        );
        for (a, b) in fast.roots.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-10, "delta {delta} xi {xi}: {a} vs {b}");
            assert!(cubic(delta, xi, *a).abs() < 1e-12);
        }
        multistable += usize::from(fast.is_multistable());
    }
    assert!(multistable > 0);
}

#[test]
fn cubic_solver_in_the_bistable_wedge() {
    // Negative detuning beyond the critical point gives three roots.
    for (delta, xi) in [(-2.0, -1.0), (2.0, 1.0), (-4.0, -2.5), (4.0, 2.5)] {
        let fast = solve_photon_occupation(delta, xi);
        let slow = oracle_cubic_roots(delta, xi);
        assert_eq!(fast.roots.len(), 3);
        assert_eq!(slow.len(), 3);
        for (a, b) in fast.roots.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

fn engine_objective(trace: &ComplexTrace, fit: &LinearFit) -> f64 {
    trace
        .freqs()
        .iter()
        .zip(trace.samples())
        .map(|(&f, &z)| (z - s21_linear(f, &fit.resonance, &fit.environment)).norm_sqr())
        .sum()
}

/// Rounding allowance for comparing objectives of the same trace.
fn slack(trace: &ComplexTrace) -> f64 {
    64.0 * f64::EPSILON * trace.samples().iter().map(|z| z.norm_sqr()).sum::<f64>()
}

#[test]
fn engine_optimum_is_not_beaten_by_the_grid() {
    let t = nbn_res0();
    let grid = linewidth_grid(&t.resonance, 10.0, 401);
    let bounds = GridBounds::around(&t.resonance, &t.env, 1.0, 0.3, 17);

    let clean = generate_trace(&t, &grid, &NoiseSpec::none()).unwrap();
    let fit = fit_linear_resonance(&clean, None).unwrap();
    let best = oracle_grid_fit(&clean, &bounds).unwrap();
    assert!(engine_objective(&clean, &fit) <= best.objective + slack(&clean));

    let mut within = 0;
    for seed in 0..100 {
        let trace = generate_trace(&t, &grid, &NoiseSpec::new(1e-3, seed).unwrap()).unwrap();
        let fit = fit_linear_resonance(&trace, None).unwrap();
        let best = oracle_grid_fit(&trace, &bounds).unwrap();
        assert!(
            engine_objective(&trace, &fit) <= best.objective + slack(&trace),
            "seed {seed}"
        );
        let r = &fit.resonance;
        let d = [
            (r.omega0() - best.omega0).abs(),
            (r.kappa() - best.kappa).abs(),
            (r.gamma() - best.gamma).abs(),
        ];
        within += usize::from(d.iter().zip(best.cells).all(|(d, c)| *d <= c));
    }
    assert!(within >= 95, "{within}/100 within one cell");
}

#[test]
fn flat_trace_has_no_dip_for_either_path() {
    let t = nbn_res0();
    let grid = linewidth_grid(&t.resonance, 10.0, 401);
    let flat: Vec<_> = grid
        .iter()
        .map(|&f| environment_factor(f, &t.env))
        .collect();
    let trace = ComplexTrace::new(grid, flat, -80.0, 70.0).unwrap();
    let mut bounds = GridBounds::around(&t.resonance, &t.env, 1.0, 0.3, 17);
    bounds.kappa.lo = 1e-9 * t.resonance.total_rate();
    let best = oracle_grid_fit(&trace, &bounds).unwrap();
    assert_eq!(best.kappa, bounds.kappa.lo);
    assert!(best.dip_depth < 1e-6);
    assert!(matches!(
        fit_linear_resonance(&trace, None),
        Err(FitError::NoDipFound { .. })
    ));
}
