//! Field-sweep protocol on synthetic sources.

use std::collections::{BTreeMap, BTreeSet};

use resforge::campaign::*;
use resforge::fit::Orientation;
use resforge::CampaignError;

/// Two resonators; the second has a low in-plane critical field and is lost
/// part way up the sweep.
const SMALL: &str = r#"
schema = 1
name = "pair"
seed = 11

[scan]
fast_width_hz = 80e6
fast_points = 801
detail_points = 401

[power_scan]
powers_dbm = [-90, -70, -50, -40, -35]

[simulation]
noise_sigma = 1e-3

[[sweep]]
orientation = "in_plane"
max_field_t = 2.0
step_t = 0.04
ramp_mt_per_min = 100
settle_s = 120

[films.nbn]
lk_sheet = 89e-12
thickness_t = 13e-9
critical_temp_tc = 4.0
diffusion_d = 2.6e-5

[[resonator]]
name = "sturdy"
design_f0_hz = 4.0743e9
film = "nbn"
geometry = { width_w = 200e-9, length_l = 376e-6 }

[resonator.truth]
q_i = 13805
q_c = 28241
kerr_hz_per_photon = -4.506
b_c_parallel = 13.537
b_c_perp = 1.0766

[[resonator]]
name = "fragile"
design_f0_hz = 5.2e9
film = "nbn"
geometry = { width_w = 300e-9 }

[resonator.truth]
q_i = 12000
q_c = 25000
kerr_hz_per_photon = -3.0
b_c_parallel = 1.5
"#;

fn config() -> CampaignConfig {
    CampaignConfig::from_toml(SMALL).unwrap()
}

fn source(cfg: &CampaignConfig) -> SyntheticSource {
    SyntheticSource::new(
        cfg.generator_truths().unwrap(),
        cfg.simulation.noise_sigma,
        cfg.seed,
    )
}

fn run(cfg: &CampaignConfig) -> CampaignRun {
    run_field_campaign(cfg, &mut source(cfg)).unwrap()
}

fn target(field_t: f64) -> ScanTarget {
    ScanTarget {
        resonator: 0,
        field_t,
        orientation: Orientation::InPlane,
    }
}

#[test]
fn lost_resonator_is_flagged_and_the_other_is_intact() {
    let cfg = config();
    let run = run(&cfg);
    let report = build_report(&cfg, &run).unwrap();
    assert_eq!(report.rows.len(), 2);

    let sturdy = report.rows[0].cell("b_c_parallel_t").unwrap();
    assert!(sturdy.flag.is_none(), "{:?}", sturdy.flag);
    assert!((sturdy.value.unwrap() / 13.537 - 1.0).abs() < 0.01);
    assert!(run.resonators[0].sweeps[0].lost_at_t.is_none());

    let lost_at = run.resonators[1].sweeps[0]
        .lost_at_t
        .expect("fragile resonator is lost");
    assert!(lost_at > 1.5 && lost_at <= 1.54 + 1e-9, "{lost_at}");
    let fragile = report.rows[1].cell("b_c_parallel_t").unwrap();
    assert!(fragile.flag.as_deref().unwrap_or("").contains("lost"));
    // Points tracked before the loss still fit the generator value.
    assert!((fragile.value.unwrap() / 1.5 - 1.0).abs() < 0.01);
    // Out-of-plane was never swept.
    assert!(report.rows[0].cell("b_c_perp_mt").unwrap().value.is_none());
}

#[test]
fn tracking_is_continuous_and_fields_are_monotone() {
    let cfg = config();
    let run = run(&cfg);
    for r in &run.resonators {
        for s in &r.sweeps {
            assert!(s.tracked.windows(2).all(|w| w[1].field_b >= w[0].field_b));
            let f0: Vec<f64> = s.tracked.iter().filter_map(|t| t.f0_hz()).collect();
            assert!(f0
                .windows(2)
                .all(|w| (w[1] - w[0]).abs() < cfg.scan.fast_width_hz));
            for t in s.tracked.iter().filter(|t| t.field_b < 0.6 * 1.5) {
                assert!(
                    t.accepted(),
                    "{} at {} T: {}",
                    r.name,
                    t.field_b,
                    t.qc.reason
                );
            }
        }
    }
}

#[test]
fn ramp_and_settle_bookkeeping() {
    let cfg = config();
    let run = run(&cfg);
    let sweep = &cfg.sweep[0];
    let mut clock = 0u64;
    let mut field = 0.0;
    let mut ramps = 0;
    for e in &run.audit.events {
        match e {
            AuditEvent::Ramp {
                t_ms,
                from_t,
                to_t,
                duration_ms,
            } => {
                assert_eq!(*t_ms, clock);
                assert_eq!(*from_t, field);
                let exact = (to_t - from_t).abs() * 1e3 / sweep.ramp_mt_per_min * 60e3;
                assert!((*duration_ms as f64 - exact).abs() <= 1.0);
                clock += duration_ms;
                field = *to_t;
                ramps += 1;
            }
            AuditEvent::Settle {
                t_ms,
                field_t,
                duration_ms,
            } => {
                assert_eq!(*t_ms, clock);
                assert_eq!(*field_t, field);
                assert_eq!(*duration_ms, 120_000);
                clock += duration_ms;
            }
            AuditEvent::ScanRequest { t_ms, request } => {
                assert_eq!(*t_ms, clock);
                assert_eq!(request.field_t, field);
            }
            _ => {}
        }
    }
    assert!(ramps >= sweep.fields().len() - 1);
    assert_eq!(clock, run.audit.clock_ms);
    // 0.2 T at 100 mT/min takes two minutes.
    assert_eq!(ramp_duration_ms(0.0, 0.2, 100.0), 120_000);
}

#[test]
fn audit_log_is_complete() {
    let cfg = config();
    let run = run(&cfg);
    let mut kinds = BTreeMap::new();
    for (k, e) in run
        .audit
        .events
        .iter()
        .filter_map(|e| match e {
            AuditEvent::ScanRequest { request, .. } => Some(request),
            _ => None,
        })
        .enumerate()
    {
        assert_eq!(e.id, k as u64, "scan ids are consecutive");
        kinds.insert(e.id, e.kind);
    }
    assert_eq!(run.audit.next_scan_id as usize, kinds.len());

    let mut fits: BTreeMap<u64, usize> = BTreeMap::new();
    let mut qcs: BTreeMap<u64, usize> = BTreeMap::new();
    for e in &run.audit.events {
        match e {
            AuditEvent::Fit { scan_id, .. } => *fits.entry(*scan_id).or_default() += 1,
            AuditEvent::Qc { scan_id, .. } => *qcs.entry(*scan_id).or_default() += 1,
            _ => {}
        }
    }
    let fitted: BTreeSet<u64> = kinds
        .iter()
        .filter(|(_, k)| matches!(k, ScanKind::Detail | ScanKind::Power))
        .map(|(id, _)| *id)
        .collect();
    assert!(!fitted.is_empty());
    assert_eq!(fits.keys().copied().collect::<BTreeSet<_>>(), fitted);
    assert_eq!(qcs.keys().copied().collect::<BTreeSet<_>>(), fitted);
    assert!(fits.values().chain(qcs.values()).all(|&n| n == 1));
}

#[test]
fn zero_shift_centres_the_detail_scan_on_the_previous_frequency() {
    let cfg = config();
    let truth = &cfg.generator_truths().unwrap()[0];
    let f0 = truth.resonance.f0_hz();
    let lw = truth.resonance.total_rate() / std::f64::consts::TAU;
    let mut src = source(&cfg);
    let mut log = AuditLog::default();
    let t = track_resonance(f0, lw, &mut src, &cfg, target(0.0), &mut log).unwrap();
    assert!(t.accepted());
    let detail = log
        .events
        .iter()
        .find_map(|e| match e {
            AuditEvent::ScanRequest { request, .. } if request.kind == ScanKind::Detail => {
                Some(request.clone())
            }
            _ => None,
        })
        .unwrap();
    let centre = 0.5 * (detail.start_hz + detail.stop_hz);
    let cell = (detail.stop_hz - detail.start_hz) / (detail.points - 1) as f64;
    assert!((centre - f0).abs() <= cell, "centre {centre} vs {f0}");
    assert!((t.f0_hz().unwrap() - f0).abs() < 0.01 * lw);
}

#[test]
fn shift_beyond_the_fast_window_loses_the_resonance() {
    let cfg = config();
    let truth = &cfg.generator_truths().unwrap()[0];
    let f0 = truth.resonance.f0_hz();
    let lw = truth.resonance.total_rate() / std::f64::consts::TAU;
    let mut src = source(&cfg);
    let mut log = AuditLog::default();
    let previous = f0 + 1.5 * cfg.scan.fast_width_hz;
    let err = track_resonance(previous, lw, &mut src, &cfg, target(0.0), &mut log).unwrap_err();
    assert!(matches!(err, CampaignError::LostResonance { .. }), "{err}");
    assert!(log
        .events
        .iter()
        .any(|e| matches!(e, AuditEvent::Lost { .. })));
}

#[test]
fn replay_reproduces_the_report_bit_identically() {
    let cfg = config();
    let dir = tempfile::tempdir().unwrap();
    let mut rec = RecordingSource::new(source(&cfg), dir.path()).unwrap();
    let original = run_field_campaign(&cfg, &mut rec).unwrap();
    let mut replay = ReplaySource::new(dir.path());
    let replayed = run_field_campaign(&cfg, &mut replay).unwrap();

    let a = serde_json::to_string(&build_report(&cfg, &original).unwrap()).unwrap();
    let b = serde_json::to_string(&build_report(&cfg, &replayed).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        serde_json::to_string(&original).unwrap(),
        serde_json::to_string(&replayed).unwrap()
    );
}

#[test]
fn replay_rejects_a_mismatched_request() {
    let cfg = config();
    let dir = tempfile::tempdir().unwrap();
    let mut rec = RecordingSource::new(source(&cfg), dir.path()).unwrap();
    run_field_campaign(&cfg, &mut rec).unwrap();
    let mut other = cfg.clone();
    other.scan.fast_points = 601;
    let err = run_field_campaign(&other, &mut ReplaySource::new(dir.path())).unwrap_err();
    assert!(matches!(err, CampaignError::Source(_)), "{err}");
}

#[test]
fn report_json_matches_the_table_schema() {
    let cfg = config();
    let run = run(&cfg);
    let report = build_report(&cfg, &run).unwrap();
    let mut v = serde_json::to_value(&report).unwrap();
    validate_report_json(&v).unwrap();

    let results = CampaignResults::new(run, report, Some(cfg.generator_truths().unwrap()));
    let text = serde_json::to_string(&results).unwrap();
    let back: CampaignResults = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), text);

    v["rows"][0]
        .as_object_mut()
        .unwrap()
        .remove("kerr_hz_per_photon");
    v["rows"][1]["z_kohm"]["value"] = serde_json::json!("big");
    let errs = validate_report_json(&v).unwrap_err();
    assert_eq!(errs.len(), 2, "{errs:?}");
}

#[test]
fn missing_reference_is_reported_per_resonator() {
    let cfg = config();
    let mut run = run(&cfg);
    run.resonators[1].reference = None;
    match build_report(&cfg, &run) {
        Err(CampaignError::MissingInput(m)) => {
            assert_eq!(m.len(), 1);
            assert!(m[0].contains("fragile"), "{m:?}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn inconsistent_configs_are_rejected() {
    let zero_step = SMALL.replace("step_t = 0.04", "step_t = 0.0");
    assert!(matches!(
        CampaignConfig::from_toml(&zero_step),
        Err(CampaignError::Config(_))
    ));
    let unknown = SMALL.replace("seed = 11", "seed = 11\ncolour = \"red\"");
    assert!(matches!(
        CampaignConfig::from_toml(&unknown),
        Err(CampaignError::Config(_))
    ));
    let schema = SMALL.replace("schema = 1", "schema = 2");
    assert!(matches!(
        CampaignConfig::from_toml(&schema),
        Err(CampaignError::Config(_))
    ));
    let wide = SMALL.replace(
        "detail_points = 401",
        "detail_points = 401\ndetail_width_hz = 1e8",
    );
    assert!(matches!(
        CampaignConfig::from_toml(&wide),
        Err(CampaignError::Config(_))
    ));
    let cfg = config();
    assert_eq!(
        CampaignConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(),
        cfg
    );
}
