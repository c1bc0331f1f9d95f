//! Seeded noise ensembles: recovery medians, noise consistency, coverage.

use std::collections::BTreeMap;

use resforge::fit::*;
use resforge::physics::HANGER_CONFIG_C;
use resforge::synth::scenarios::*;
use resforge::synth::*;

const SEEDS: u64 = 100;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn linear_fit_noise_ensemble() {
    let t = nbn_res0();
    let grid = linewidth_grid(&t.resonance, 10.0, 401);
    let truth: BTreeMap<&str, f64> = [
        ("f0_hz", t.resonance.f0_hz()),
        ("q_i", 13805.0),
        ("q_c", 28241.0),
        ("a", 0.9),
        ("alpha_rad", 0.4),
        ("tau_s", 1e-9),
        ("phi_rad", 0.08),
    ]
    .into();
    let mut errs: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut ses: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for seed in 0..SEEDS {
        let trace = generate_trace(&t, &grid, &NoiseSpec::new(1e-3, seed).unwrap()).unwrap();
        let r = fit_linear_resonance(&trace, None).unwrap().result;
        for (&name, &v) in &truth {
            errs.entry(name)
                .or_default()
                .push((r.param(name).unwrap() - v).abs());
            ses.entry(name)
                .or_default()
                .push(r.std_error(name).unwrap());
        }
    }
    for name in ["q_i", "q_c"] {
        let m = median(errs[name].clone()) / truth[name];
        assert!(m <= 0.01, "{name}: median relative error {m}");
    }
    for (&name, e) in &errs {
        let me = median(e.clone());
        let ms = median(ses[name].clone());
        assert!(
            me < 2.0 * ms,
            "{name}: median |error| {me} vs median std error {ms}"
        );
    }
}

#[test]
fn gral_kerr_noise_ensemble() {
    let t = gral_res0();
    let powers = powers_for_xi(&t, &KERR_XI_LADDER);
    let grid = linewidth_grid(&t.resonance, 10.0, 401);
    let errs: Vec<f64> = (0..SEEDS)
        .map(|seed| {
            let map = generate_power_map(&t, &powers, &grid, &NoiseSpec::new(1e-3, seed).unwrap())
                .unwrap();
            let lin = fit_linear_resonance_raw(&map.traces[0], None).unwrap();
            let fit = fit_kerr_2d(
                &map.traces,
                &lin.resonance,
                &lin.environment,
                HANGER_CONFIG_C,
            )
            .unwrap();
            (fit.result.param("kerr_hz_per_photon").unwrap() / -49.999 - 1.0).abs()
        })
        .collect();
    let m = median(errs);
    assert!(m <= 0.05, "median relative K error {m}");
}

#[test]
fn critical_field_noise_ensemble() {
    let errs: Vec<f64> = (0..SEEDS)
        .map(|seed| {
            let s = quadratic_sweep(13.537, &NoiseSpec::new(1e-4, seed).unwrap()).unwrap();
            (fit_field_sweep_bc(&s).unwrap().param("b_c").unwrap() / 13.537 - 1.0).abs()
        })
        .collect();
    let m = median(errs);
    assert!(m <= 0.01, "median relative B_C error {m}");
}

/// A calibrated 1σ error covers about 68% of seeds; the 90/100 bound is
/// met at twice the reported error.
#[test]
fn misalignment_noise_ensemble() {
    let film = nbn_film();
    let mut errs = Vec::new();
    let (mut one, mut two) = (0, 0);
    for seed in 0..SEEDS {
        let fam =
            misaligned_family(MISALIGNMENT_DEG, &NoiseSpec::new(1e-4, seed).unwrap()).unwrap();
        let r = fit_misalignment(&fam, &film).unwrap();
        let err = (r.param("theta_deg").unwrap() - MISALIGNMENT_DEG).abs();
        let se = r.std_error("theta_deg").unwrap();
        one += usize::from(err <= se);
        two += usize::from(err <= 2.0 * se);
        errs.push(err / MISALIGNMENT_DEG);
    }
    let m = median(errs);
    assert!(m <= 0.05, "median relative theta error {m}");
    assert!((54..=82).contains(&one), "1 sigma coverage {one}/{SEEDS}");
    assert!(two >= 90, "2 sigma coverage {two}/{SEEDS}");
}
