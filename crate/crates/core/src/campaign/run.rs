//! Field-sweep protocol: zero-field reference, ramp, settle, track, and
//! power scans at configured fields.

use serde::{Deserialize, Serialize};

use super::config::CampaignConfig;
use super::source::{ScanKind, ScanRequest, TraceSource};
use crate::error::{CampaignError, FitError};
use crate::fit::{
    dip_statistics, fit_kerr_below_bifurcation, fit_linear_resonance_raw, fit_power_scan,
    qc_filter_with, ComplexTrace, FieldPoint, FieldSweepSeries, FitResult, LinearFit, Orientation,
    PowerScan, PowerScanPoint, QcDecision,
};
use crate::physics::{photon_number, EnvironmentParams, ResonanceParams};

/// Audit record. Every scan request, fit and QC decision appears once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum AuditEvent {
    SweepStart {
        t_ms: u64,
        sweep: usize,
        orientation: Orientation,
    },
    Ramp {
        t_ms: u64,
        from_t: f64,
        to_t: f64,
        duration_ms: u64,
    },
    Settle {
        t_ms: u64,
        field_t: f64,
        duration_ms: u64,
    },
    ScanRequest {
        t_ms: u64,
        request: ScanRequest,
    },
    Fit {
        scan_id: u64,
        resonator: usize,
        result: Option<FitResult>,
        error: Option<String>,
    },
    Qc {
        scan_id: u64,
        resonator: usize,
        decision: QcDecision,
    },
    Lost {
        resonator: usize,
        field_t: f64,
        lo_hz: f64,
        hi_hz: f64,
    },
    PowerScanFit {
        resonator: usize,
        field_t: f64,
        result: Option<FitResult>,
        error: Option<String>,
    },
    KerrFit {
        resonator: usize,
        result: Option<FitResult>,
        error: Option<String>,
        decision: QcDecision,
    },
}

/// Event log with the bookkeeping clock and scan-id counter.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditLog {
    pub events: Vec<AuditEvent>,
    pub clock_ms: u64,
    pub next_scan_id: u64,
}

/// Scan parameters that are not already in the config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanTarget {
    pub resonator: usize,
    pub field_t: f64,
    pub orientation: Orientation,
}

impl AuditLog {
    fn push(&mut self, e: AuditEvent) {
        self.events.push(e);
    }

    /// Logs and issues one scan.
    #[allow(clippy::too_many_arguments)]
    pub fn scan<S: TraceSource>(
        &mut self,
        source: &mut S,
        kind: ScanKind,
        target: ScanTarget,
        window: (f64, f64),
        points: usize,
        power_dbm: f64,
        attenuation_db: f64,
    ) -> Result<(u64, ComplexTrace), CampaignError> {
        let request = ScanRequest {
            id: self.next_scan_id,
            kind,
            resonator: target.resonator,
            field_t: target.field_t,
            orientation: target.orientation,
            start_hz: window.0,
            stop_hz: window.1,
            points,
            power_dbm,
            attenuation_db,
        };
        self.next_scan_id += 1;
        self.push(AuditEvent::ScanRequest {
            t_ms: self.clock_ms,
            request: request.clone(),
        });
        Ok((request.id, source.scan(&request)?))
    }

    fn ramp(&mut self, from_t: f64, to_t: f64, mt_per_min: f64) {
        let duration_ms = ramp_duration_ms(from_t, to_t, mt_per_min);
        self.push(AuditEvent::Ramp {
            t_ms: self.clock_ms,
            from_t,
            to_t,
            duration_ms,
        });
        self.clock_ms += duration_ms;
    }

    fn settle(&mut self, field_t: f64, settle_s: f64) {
        let duration_ms = (settle_s * 1e3).round() as u64;
        self.push(AuditEvent::Settle {
            t_ms: self.clock_ms,
            field_t,
            duration_ms,
        });
        self.clock_ms += duration_ms;
    }
}

/// Ramp time in whole milliseconds for `|ΔB|` at `mt_per_min`.
pub fn ramp_duration_ms(from_t: f64, to_t: f64, mt_per_min: f64) -> u64 {
    ((to_t - from_t).abs() * 1e3 / mt_per_min * 60_000.0).round() as u64
}

/// Outcome of one tracking step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedResonance {
    pub field_b: f64,
    /// Dip position located in the fast scan, Hz.
    pub f0_est: f64,
    /// Detail-scan fit; absent when the fitter raised an error.
    pub fit: Option<FitResult>,
    pub qc: QcDecision,
    pub detail_scan_id: u64,
    #[serde(skip)]
    linear: Option<(ResonanceParams, EnvironmentParams)>,
}

impl TrackedResonance {
    pub fn accepted(&self) -> bool {
        self.qc.accepted
    }

    /// Fitted `f₀` of an accepted step.
    pub fn f0_hz(&self) -> Option<f64> {
        if self.accepted() {
            self.fit.as_ref().and_then(|f| f.param("f0_hz"))
        } else {
            None
        }
    }

    fn linewidth_hz(&self) -> Option<f64> {
        let f = self.fit.as_ref()?;
        Some(f.param("f0_hz")? / f.param("q_l")?)
    }
}

/// Dip position (parabolic refinement of the minimum) and a rough width
/// from the half-depth crossing points.
fn locate_dip(trace: &ComplexTrace) -> Option<(f64, f64)> {
    let stats = dip_statistics(trace.samples());
    if !stats.is_dip() {
        return None;
    }
    let f = trace.freqs();
    let mags: Vec<f64> = trace.samples().iter().map(|z| z.norm()).collect();
    let lo = stats.min_index.saturating_sub(2);
    let hi = (stats.min_index + 3).min(mags.len());
    let k = (lo..hi).min_by(|&a, &b| mags[a].total_cmp(&mags[b]))?;
    let step = f[1] - f[0];
    let mut f_est = f[k];
    if k > 0 && k + 1 < mags.len() {
        let (a, b, c) = (mags[k - 1], mags[k], mags[k + 1]);
        let den = a - 2.0 * b + c;
        if den > 0.0 {
            f_est += (0.5 * (a - c) / den).clamp(-0.5, 0.5) * step;
        }
    }
    let half = stats.baseline - 0.5 * stats.depth;
    let mut left = k;
    while left > 0 && mags[left - 1] < half {
        left -= 1;
    }
    let mut right = k;
    while right + 1 < mags.len() && mags[right + 1] < half {
        right += 1;
    }
    let width = ((right - left + 1) as f64 * step).max(2.0 * step);
    Some((f_est, width))
}

/// Detail scan centred on `f_est` plus a linear fit and QC.
#[allow(clippy::too_many_arguments)]
fn detail_fit<S: TraceSource>(
    source: &mut S,
    cfg: &CampaignConfig,
    log: &mut AuditLog,
    target: ScanTarget,
    f_est: f64,
    linewidth_hz: f64,
    kind: ScanKind,
    power_dbm: f64,
) -> Result<(TrackedResonance, ComplexTrace), CampaignError> {
    let s = &cfg.scan;
    let span = s
        .detail_width_hz
        .unwrap_or(s.detail_linewidths * linewidth_hz)
        .min(s.fast_width_hz);
    let (id, trace) = log.scan(
        source,
        kind,
        target,
        (f_est - 0.5 * span, f_est + 0.5 * span),
        s.detail_points,
        power_dbm,
        s.attenuation_db,
    )?;
    let (fit, error, linear) = match fit_linear_resonance_raw(&trace, None) {
        Ok(LinearFit {
            resonance,
            environment,
            result,
        }) => (Some(result), None, Some((resonance, environment))),
        Err(FitError::NotConverged { partial, .. }) => {
            (Some(*partial), Some("not converged".to_string()), None)
        }
        Err(e) => (None, Some(e.to_string()), None),
    };
    let qc = match &fit {
        Some(r) => qc_filter_with(r, cfg.qc.max_std_error),
        None => QcDecision {
            accepted: false,
            reason: error.clone().unwrap_or_default(),
        },
    };
    log.push(AuditEvent::Fit {
        scan_id: id,
        resonator: target.resonator,
        result: fit.clone(),
        error,
    });
    Ok((
        TrackedResonance {
            field_b: target.field_t,
            f0_est: f_est,
            fit,
            qc,
            detail_scan_id: id,
            linear,
        },
        trace,
    ))
}

fn log_qc(log: &mut AuditLog, target: &ScanTarget, t: &TrackedResonance) {
    log.push(AuditEvent::Qc {
        scan_id: t.detail_scan_id,
        resonator: target.resonator,
        decision: t.qc.clone(),
    });
}

/// One tracking step: fast scan over `[previous_f0 − W, previous_f0]`,
/// dip location, detail scan and fit with QC. Accepted steps that jump by
/// `W` or more are rejected.
pub fn track_resonance<S: TraceSource>(
    previous_f0: f64,
    linewidth_hz: f64,
    source: &mut S,
    cfg: &CampaignConfig,
    target: ScanTarget,
    log: &mut AuditLog,
) -> Result<TrackedResonance, CampaignError> {
    let w = cfg.scan.fast_width_hz;
    let window = (previous_f0 - w, previous_f0);
    let (_, fast) = log.scan(
        source,
        ScanKind::Fast,
        target,
        window,
        cfg.scan.fast_points,
        cfg.scan.power_dbm,
        cfg.scan.attenuation_db,
    )?;
    let Some((f_est, _)) = locate_dip(&fast) else {
        log.push(AuditEvent::Lost {
            resonator: target.resonator,
            field_t: target.field_t,
            lo_hz: window.0,
            hi_hz: window.1,
        });
        return Err(CampaignError::LostResonance {
            lo_hz: window.0,
            hi_hz: window.1,
        });
    };
    let (mut t, _) = detail_fit(
        source,
        cfg,
        log,
        target,
        f_est,
        linewidth_hz,
        ScanKind::Detail,
        cfg.scan.power_dbm,
    )?;
    if let Some(f0) = t.f0_hz() {
        if (previous_f0 - f0).abs() >= w {
            t.qc = QcDecision {
                accepted: false,
                reason: format!(
                    "step {:.6e} Hz exceeds the fast-scan width",
                    previous_f0 - f0
                ),
            };
        }
    }
    log_qc(log, &target, &t);
    Ok(t)
}

/// Zero-field reference: a fast scan centred on `around_hz`, then detail.
fn reference<S: TraceSource>(
    source: &mut S,
    cfg: &CampaignConfig,
    target: ScanTarget,
    around_hz: f64,
    log: &mut AuditLog,
) -> Result<TrackedResonance, CampaignError> {
    let w = cfg.scan.fast_width_hz;
    let window = (around_hz - 0.5 * w, around_hz + 0.5 * w);
    let (_, fast) = log.scan(
        source,
        ScanKind::Reference,
        target,
        window,
        cfg.scan.fast_points,
        cfg.scan.power_dbm,
        cfg.scan.attenuation_db,
    )?;
    let Some((f_est, width)) = locate_dip(&fast) else {
        log.push(AuditEvent::Lost {
            resonator: target.resonator,
            field_t: target.field_t,
            lo_hz: window.0,
            hi_hz: window.1,
        });
        return Err(CampaignError::LostResonance {
            lo_hz: window.0,
            hi_hz: window.1,
        });
    };
    let (t, _) = detail_fit(
        source,
        cfg,
        log,
        target,
        f_est,
        width,
        ScanKind::Detail,
        cfg.scan.power_dbm,
    )?;
    log_qc(log, &target, &t);
    Ok(t)
}

/// Power scan at one field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerScanRun {
    pub field_t: f64,
    /// QC-accepted points only.
    pub points: Vec<PowerScanPoint>,
    pub fit: Option<FitResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KerrOutcome {
    pub fit: Option<FitResult>,
    pub error: Option<String>,
    pub qc: QcDecision,
    /// Power-scan indices used in the fit.
    pub used: Vec<usize>,
    /// Power-scan indices dropped as bifurcated.
    pub bifurcated: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub orientation: Orientation,
    pub f0_ref_hz: Option<f64>,
    pub tracked: Vec<TrackedResonance>,
    pub series: FieldSweepSeries,
    /// Field at which the resonance was lost, if it was.
    pub lost_at_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonatorRun {
    pub name: String,
    /// Zero-field reference of the first sweep (or a standalone reference
    /// when there are no sweeps).
    pub reference: Option<TrackedResonance>,
    pub sweeps: Vec<SweepRun>,
    pub power_scans: Vec<PowerScanRun>,
    pub kerr: Option<KerrOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRun {
    pub name: String,
    pub resonators: Vec<ResonatorRun>,
    pub audit: AuditLog,
}

/// Live state of one resonator within a sweep.
struct Active {
    f0: f64,
    linewidth: f64,
    linear: Option<(ResonanceParams, EnvironmentParams)>,
    f0_ref: f64,
    tracked: Vec<TrackedResonance>,
    lost_at: Option<f64>,
}

impl Active {
    fn update(&mut self, t: &TrackedResonance) {
        match t.f0_hz() {
            Some(f0) => {
                self.f0 = f0;
                if let Some(lw) = t.linewidth_hz() {
                    self.linewidth = lw;
                }
                self.linear = t.linear;
            }
            None => self.f0 = t.f0_est,
        }
    }
}

fn series_of(orientation: Orientation, a: &Active) -> Result<FieldSweepSeries, CampaignError> {
    let points = a
        .tracked
        .iter()
        .filter_map(|t| {
            let f = t.fit.as_ref()?;
            Some(FieldPoint {
                b: t.field_b,
                rel_shift: t.f0_hz()? / a.f0_ref - 1.0,
                q_i: f.param("q_i")?,
                q_c: f.param("q_c")?,
            })
        })
        .collect();
    Ok(FieldSweepSeries::new(orientation, points)?)
}

fn power_scan<S: TraceSource>(
    source: &mut S,
    cfg: &CampaignConfig,
    log: &mut AuditLog,
    target: ScanTarget,
    f0: f64,
    linewidth: f64,
    with_kerr: bool,
) -> Result<(PowerScanRun, Option<KerrOutcome>), CampaignError> {
    let Some(ps) = &cfg.power_scan else {
        unreachable!("power scans requested without settings")
    };
    let c = cfg.scan.config_c;
    let mut points = Vec::new();
    let mut traces = Vec::new();
    let mut base: Option<(ResonanceParams, EnvironmentParams)> = None;
    for &p in &ps.powers_dbm {
        let (t, trace) = detail_fit(source, cfg, log, target, f0, linewidth, ScanKind::Power, p)?;
        log_qc(log, &target, &t);
        traces.push(trace);
        if !t.accepted() {
            continue;
        }
        let (Some(f), Some((res, env))) = (t.fit.as_ref(), t.linear) else {
            continue;
        };
        if base.is_none() {
            base = Some((res, env));
        }
        if let (Some(q), Some(e)) = (f.param("q_i"), f.std_error("q_i")) {
            if e > 0.0 {
                points.push(PowerScanPoint {
                    n_ph: photon_number(p, cfg.scan.attenuation_db, &res, c),
                    q_i: q,
                    q_i_err: e,
                });
            }
        }
    }
    let omega0 = base
        .map(|(r, _)| r.omega0())
        .unwrap_or(std::f64::consts::TAU * f0);
    let (fit, error) = match PowerScan::new(points.clone())
        .map_err(FitError::from)
        .and_then(|s| fit_power_scan(&s, omega0, 0.0))
    {
        Ok(r) => (Some(r), None),
        Err(FitError::IllConditioned {
            partial,
            condition_number,
            ..
        }) => (
            Some(*partial),
            Some(format!(
                "ill-conditioned (condition number {condition_number:.3e})"
            )),
        ),
        Err(e) => (None, Some(e.to_string())),
    };
    log.push(AuditEvent::PowerScanFit {
        resonator: target.resonator,
        field_t: target.field_t,
        result: fit.clone(),
        error: error.clone(),
    });
    let run = PowerScanRun {
        field_t: target.field_t,
        points,
        fit,
        error,
    };
    if !with_kerr {
        return Ok((run, None));
    }
    let kerr = kerr_fit(&traces, base, cfg, log, target.resonator);
    Ok((run, Some(kerr)))
}

fn kerr_fit(
    traces: &[ComplexTrace],
    base: Option<(ResonanceParams, EnvironmentParams)>,
    cfg: &CampaignConfig,
    log: &mut AuditLog,
    resonator: usize,
) -> KerrOutcome {
    let (outcome, used, bifurcated) = match base {
        None => (
            Err("no QC-accepted low-power fit to fix the linear parameters".to_string()),
            Vec::new(),
            Vec::new(),
        ),
        Some((res, env)) => {
            let m = fit_kerr_below_bifurcation(traces, &res, &env, cfg.scan.config_c);
            (m.result.map_err(|e| e.to_string()), m.used, m.bifurcated)
        }
    };
    let (fit, error) = match outcome {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e)),
    };
    let qc = match &fit {
        Some(r) => qc_filter_with(r, cfg.qc.max_std_error),
        None => QcDecision {
            accepted: false,
            reason: error.clone().unwrap_or_default(),
        },
    };
    log.push(AuditEvent::KerrFit {
        resonator,
        result: fit.clone(),
        error: error.clone(),
        decision: qc.clone(),
    });
    KerrOutcome {
        fit,
        error,
        qc,
        used,
        bifurcated,
    }
}

fn is_power_field(cfg: &CampaignConfig, b: f64) -> bool {
    cfg.power_scan.as_ref().is_some_and(|p| {
        p.fields_t
            .iter()
            .any(|&f| (f - b).abs() <= 1e-9 * f64::max(1.0, f.abs()))
    })
}

/// Runs every sweep in order. A lost resonator is dropped for the rest of
/// that sweep; the campaign continues.
pub fn run_field_campaign<S: TraceSource>(
    cfg: &CampaignConfig,
    source: &mut S,
) -> Result<CampaignRun, CampaignError> {
    cfg.validate()?;
    let mut log = AuditLog::default();
    let mut runs: Vec<ResonatorRun> = cfg
        .resonator
        .iter()
        .map(|r| ResonatorRun {
            name: r.name.clone(),
            reference: None,
            sweeps: Vec::new(),
            power_scans: Vec::new(),
            kerr: None,
        })
        .collect();
    let mut field = 0.0;
    let sweeps: Vec<_> = if cfg.sweep.is_empty() {
        vec![None]
    } else {
        cfg.sweep.iter().map(Some).collect()
    };
    for (s_idx, sweep) in sweeps.into_iter().enumerate() {
        let orientation = sweep.map_or(Orientation::OutOfPlane, |s| s.orientation);
        let (ramp_rate, settle_s) = sweep.map_or((100.0, 0.0), |s| (s.ramp_mt_per_min, s.settle_s));
        log.push(AuditEvent::SweepStart {
            t_ms: log.clock_ms,
            sweep: s_idx,
            orientation,
        });
        if field != 0.0 {
            log.ramp(field, 0.0, ramp_rate);
            field = 0.0;
            log.settle(0.0, settle_s);
        }
        let mut states: Vec<Option<Active>> = Vec::with_capacity(runs.len());
        for (r, spec) in cfg.resonator.iter().enumerate() {
            let target = ScanTarget {
                resonator: r,
                field_t: 0.0,
                orientation,
            };
            let around = runs[r]
                .reference
                .as_ref()
                .and_then(|t| t.f0_hz())
                .unwrap_or(spec.design_f0_hz);
            let state = match reference(source, cfg, target, around, &mut log) {
                Ok(t) if t.accepted() => {
                    let f0 = t.f0_hz().expect("accepted");
                    let a = Active {
                        f0,
                        linewidth: t.linewidth_hz().unwrap_or(f0 / 1e4),
                        linear: t.linear,
                        f0_ref: f0,
                        tracked: vec![t.clone()],
                        lost_at: None,
                    };
                    if runs[r].reference.is_none() {
                        runs[r].reference = Some(t);
                    }
                    Some(a)
                }
                Ok(_) | Err(CampaignError::LostResonance { .. }) => None,
                Err(e) => return Err(e),
            };
            states.push(state);
        }
        let power_here = |b: f64| s_idx == 0 && is_power_field(cfg, b);
        let live = |states: &[Option<Active>]| -> Vec<(usize, f64, f64)> {
            states
                .iter()
                .enumerate()
                .filter_map(|(r, s)| {
                    s.as_ref()
                        .filter(|a| a.lost_at.is_none())
                        .map(|a| (r, a.f0, a.linewidth))
                })
                .collect()
        };
        let run_power = |targets: Vec<(usize, f64, f64)>,
                         runs: &mut Vec<ResonatorRun>,
                         log: &mut AuditLog,
                         source: &mut S,
                         b: f64|
         -> Result<(), CampaignError> {
            for (r, f0, linewidth) in targets {
                let target = ScanTarget {
                    resonator: r,
                    field_t: b,
                    orientation,
                };
                let (ps, kerr) = power_scan(source, cfg, log, target, f0, linewidth, b == 0.0)?;
                runs[r].power_scans.push(ps);
                if kerr.is_some() {
                    runs[r].kerr = kerr;
                }
            }
            Ok(())
        };
        if power_here(0.0) {
            run_power(live(&states), &mut runs, &mut log, source, 0.0)?;
        }
        let fields = sweep.map_or_else(Vec::new, |s| s.fields());
        for &b in fields.iter().skip(1) {
            log.ramp(field, b, ramp_rate);
            field = b;
            log.settle(b, settle_s);
            for (r, st) in states.iter_mut().enumerate() {
                let Some(a) = st else { continue };
                if a.lost_at.is_some() {
                    continue;
                }
                let target = ScanTarget {
                    resonator: r,
                    field_t: b,
                    orientation,
                };
                match track_resonance(a.f0, a.linewidth, source, cfg, target, &mut log) {
                    Ok(t) => {
                        a.update(&t);
                        a.tracked.push(t);
                    }
                    Err(CampaignError::LostResonance { .. }) => a.lost_at = Some(b),
                    Err(e) => return Err(e),
                }
            }
            if power_here(b) {
                run_power(live(&states), &mut runs, &mut log, source, b)?;
            }
        }
        if sweep.is_some() {
            for (r, st) in states.iter().enumerate() {
                let run = match st {
                    Some(a) => SweepRun {
                        orientation,
                        f0_ref_hz: Some(a.f0_ref),
                        tracked: a.tracked.clone(),
                        series: series_of(orientation, a)?,
                        lost_at_t: a.lost_at,
                    },
                    None => SweepRun {
                        orientation,
                        f0_ref_hz: None,
                        tracked: Vec::new(),
                        series: FieldSweepSeries::new(orientation, Vec::new())?,
                        lost_at_t: Some(0.0),
                    },
                };
                runs[r].sweeps.push(run);
            }
        }
    }
    Ok(CampaignRun {
        name: cfg.name.clone(),
        resonators: runs,
        audit: log,
    })
}
