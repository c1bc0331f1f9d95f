//! Fitters applied to data from their own forward models.

use std::f64::consts::TAU;

use resforge::fit::*;
use resforge::physics::*;
use resforge::synth::scenarios::*;
use resforge::synth::*;
use resforge::FitError;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn res0() -> GeneratorTruth {
    nbn_res0()
}

#[test]
fn linear_fit_recovers_generator_exactly() {
    let t = res0();
    let grid = linewidth_grid(&t.resonance, 10.0, 401);
    let trace = generate_trace(&t, &grid, &NoiseSpec::none()).unwrap();
    let fit = fit_linear_resonance(&trace, None).unwrap();
    let r = &fit.result;
    assert!(rel(r.param("f0_hz").unwrap(), 4.0743e9) < 1e-6);
    assert!(rel(r.param("q_i").unwrap(), 13805.0) < 1e-6);
    assert!(rel(r.param("q_c").unwrap(), 28241.0) < 1e-6);
    assert!(rel(r.param("phi_rad").unwrap(), 0.08) < 1e-6);
    assert!(rel(r.param("a").unwrap(), 0.9) < 1e-6);
    assert!(rel(r.param("tau_s").unwrap(), 1e-9) < 1e-6);
    assert!(rel(fit.environment.alpha(), 0.4) < 1e-6);
}

#[test]
fn initial_guess_and_delay_estimate() {
    let mut t = res0();
    t.env = EnvironmentParams::new(1.1, -0.7, 3e-9, -0.1).unwrap();
    let grid = linewidth_grid(&t.resonance, 30.0, 1201);
    let trace = generate_trace(&t, &grid, &NoiseSpec::none()).unwrap();
    let (res, env) = initial_guess_circle(&trace).unwrap();
    assert!((res.omega0() - t.resonance.omega0()).abs() < 0.1 * t.resonance.omega0());
    assert!(rel(res.total_rate(), t.resonance.total_rate()) < 0.1);
    assert!(rel(env.tau(), 3e-9) < 0.05, "{}", env.tau());
}

#[test]
fn baseline_without_resonance_has_no_dip() {
    let t = res0();
    let grid = linewidth_grid(&t.resonance, 10.0, 401);
    let flat: Vec<_> = grid
        .iter()
        .map(|&f| environment_factor(f, &t.env))
        .collect();
    let trace = ComplexTrace::new(grid, flat, -80.0, 70.0).unwrap();
    assert!(matches!(
        initial_guess_circle(&trace),
        Err(FitError::NoDipFound { .. })
    ));
    assert!(matches!(
        fit_linear_resonance(&trace, None),
        Err(FitError::NoDipFound { .. })
    ));
}

#[test]
fn res0_q_i_within_quoted_uncertainty_at_noise() {
    let t = res0();
    let grid = linewidth_grid(&t.resonance, 10.0, 401);
    let mut errs: Vec<f64> = (0..25)
        .map(|seed| {
            let trace = generate_trace(&t, &grid, &NoiseSpec::new(1e-3, seed).unwrap()).unwrap();
            (fit_linear_resonance(&trace, None)
                .unwrap()
                .result
                .param("q_i")
                .unwrap()
                - 13805.0)
                .abs()
        })
        .collect();
    errs.sort_by(f64::total_cmp);
    assert!(errs[12] < 286.0, "median |dQ_i| = {}", errs[12]);
}

fn scan_from(loss: &LossModelParams, omega0: f64) -> PowerScan {
    let pts = (0..13)
        .map(|k| {
            let n = 10f64.powf(-2.0 + 0.5 * k as f64);
            let q = 1.0 / inverse_qi(n, loss, omega0).unwrap();
            PowerScanPoint {
                n_ph: n,
                q_i: q,
                q_i_err: 0.01 * q,
            }
        })
        .collect();
    PowerScan::new(pts).unwrap()
}

#[test]
fn power_scan_recovery_and_falling_critical_photon_number() {
    let om = TAU * 5.0e9;
    let mut fitted = Vec::new();
    for nc in [1e3, 1e2, 10.0, 1.0] {
        let loss = LossModelParams::at_base_temperature(5e-5, nc, 0.45, 1.5e-5).unwrap();
        let r = fit_power_scan(&scan_from(&loss, om), om, 0.0).unwrap();
        assert!(rel(r.param("n_c").unwrap(), nc) < 1e-6);
        assert!(rel(r.param("f_delta_tls").unwrap(), 5e-5) < 1e-6);
        assert!(rel(r.param("beta").unwrap(), 0.45) < 1e-6);
        assert!(rel(r.param("delta0").unwrap(), 1.5e-5) < 1e-6);
        fitted.push(r.param("n_c").unwrap());
    }
    assert!(fitted.windows(2).all(|w| w[1] < w[0]));
}

fn kerr_round_trip(t: &GeneratorTruth, noise: f64, seed: u64) -> KerrFit {
    let powers = powers_for_xi(t, &KERR_XI_LADDER);
    let grid = linewidth_grid(&t.resonance, 10.0, 401);
    let map = generate_power_map(t, &powers, &grid, &NoiseSpec::new(noise, seed).unwrap()).unwrap();
    assert!(map.bifurcated.iter().all(|b| !b));
    let (res, env) = if noise == 0.0 {
        (t.resonance, t.env)
    } else {
        let lin = fit_linear_resonance_raw(&map.traces[0], None).unwrap();
        (lin.resonance, lin.environment)
    };
    fit_kerr_2d(&map.traces, &res, &env, HANGER_CONFIG_C).unwrap()
}

#[test]
fn kerr_fit_recovers_gral_generator() {
    let t = gral_res0();
    let fit = kerr_round_trip(&t, 0.0, 0);
    assert!(rel(fit.result.param("kerr_hz_per_photon").unwrap(), -49.999) < 1e-4);
}

#[test]
fn zero_kerr_is_consistent_with_zero() {
    let mut t = res0();
    t.kerr = KerrModelParams::zero();
    let grid = linewidth_grid(&t.resonance, 10.0, 401);
    let powers = [-60.0, -40.0, -30.0, -25.0];
    let map = generate_power_map(&t, &powers, &grid, &NoiseSpec::new(1e-3, 4).unwrap()).unwrap();
    let fit = fit_kerr_2d(&map.traces, &t.resonance, &t.env, HANGER_CONFIG_C).unwrap();
    let k = fit.result.param("kerr_hz_per_photon").unwrap();
    let e = fit.result.std_error("kerr_hz_per_photon").unwrap();
    assert!(k.abs() <= 3.0 * e, "{k} +/- {e}");
}

#[test]
fn field_fits_recover_critical_fields() {
    let s = quadratic_sweep(13.537, &NoiseSpec::none()).unwrap();
    let r = fit_field_sweep_bc(&s).unwrap();
    assert!(rel(r.param("b_c").unwrap(), 13.537) < 1e-8);
    let single = critical_field_from_shift(2.0, quadratic_shift_bc(2.0, 13.537).unwrap()).unwrap();
    assert!(rel(single, 13.537) < 1e-14);
}

#[test]
fn misalignment_round_trip() {
    let fam = misaligned_family(MISALIGNMENT_DEG, &NoiseSpec::none()).unwrap();
    let r = fit_misalignment(&fam, &nbn_film()).unwrap();
    assert!(rel(r.param("theta_deg").unwrap(), 1.08) < 1e-6);
    assert!(rel(r.param("d").unwrap(), 2.6e-5) < 1e-6);
}

#[test]
fn aligned_family_reports_zero_angle() {
    let fam = misaligned_family(0.0, &NoiseSpec::none()).unwrap();
    // Identical in-plane series for every width.
    assert!(fam.windows(2).all(|w| w[0].1 == w[1].1));
    let noisy = misaligned_family(0.0, &NoiseSpec::new(1e-4, 9).unwrap()).unwrap();
    match fit_misalignment(&noisy, &nbn_film()) {
        Ok(r) => {
            let slope = r.param("slope").unwrap();
            assert!(slope.abs() <= 3.0 * r.std_error("slope").unwrap());
            if slope <= 0.0 {
                assert_eq!(r.param("theta_rad").unwrap(), 0.0);
            }
        }
        Err(FitError::NegativeSlope {
            slope, std_error, ..
        }) => panic!("{slope} +/- {std_error}"),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn generated_power_map_redshifts_and_flags_bifurcation() {
    let t = res0();
    let grid = linewidth_grid(&t.resonance, 10.0, 401);
    let powers: Vec<f64> = (0..16).map(|k| -50.0 + 2.0 * k as f64).collect();
    let map = generate_power_map(&t, &powers, &grid, &NoiseSpec::none()).unwrap();
    let dips: Vec<f64> = map
        .traces
        .iter()
        .map(|tr| {
            let k = tr
                .samples()
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .unwrap()
                .0;
            tr.freqs()[k]
        })
        .collect();
    assert!(dips.windows(2).all(|w| w[1] <= w[0]));
    assert!(dips[15] < dips[0]);
    let first = map
        .bifurcated
        .iter()
        .position(|&b| b)
        .expect("some trace bifurcates");
    assert!(map.bifurcated[first..].iter().all(|&b| b));
    // Analytic onset estimate: |K|·n ≈ κ + γ.
    let n_onset = t.resonance.total_rate() / t.kerr.kerr().abs();
    let ratio = map.photon_numbers[first] / n_onset;
    assert!((0.1..=10.0).contains(&ratio), "{ratio}");

    let mut linear = t.clone();
    linear.kerr = KerrModelParams::zero();
    let flat = generate_power_map(&linear, &powers, &grid, &NoiseSpec::none()).unwrap();
    let first_dip = |tr: &ComplexTrace| {
        tr.samples()
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0
    };
    let k0 = first_dip(&flat.traces[0]);
    assert!(flat.traces.iter().all(|tr| first_dip(tr) == k0));
    assert!(flat.bifurcated.iter().all(|b| !b));
}

#[test]
fn power_scan_fit_on_flat_scan_is_consistent_with_no_tls() {
    let om = TAU * 5.0e9;
    let loss = LossModelParams::at_base_temperature(0.0, 10.0, 0.5, 2e-5).unwrap();
    match fit_power_scan(&scan_from(&loss, om), om, 0.0) {
        Err(FitError::IllConditioned {
            partial, direction, ..
        }) => {
            assert!(!direction.is_empty());
            let a = partial.param("f_delta_tls").unwrap();
            let e = partial.std_error("f_delta_tls").unwrap_or(0.0);
            assert!(a.abs() <= e + 1e-12 * 2e-5, "{a} +/- {e}");
        }
        Ok(r) => {
            let a = r.param("f_delta_tls").unwrap();
            assert!(a.abs() <= r.std_error("f_delta_tls").unwrap());
        }
        Err(e) => panic!("{e}"),
    }
}
