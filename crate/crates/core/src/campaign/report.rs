//! Per-resonator summary rows in the column layout of the film tables.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::CampaignConfig;
use super::run::{CampaignRun, SweepRun};
use crate::error::CampaignError;
use crate::fit::{
    fit_ctilde_from_frequency, fit_field_sweep_bc, fit_misalignment, FitResult, Orientation,
};
use crate::physics::characteristic_impedance;
use crate::synth::{GeneratorTruth, RNG_ALGORITHM};

/// Column keys, in table order.
pub const REPORT_COLUMNS: [&str; 8] = [
    "width_nm",
    "f0_ghz",
    "q_i_n1",
    "q_c",
    "z_kohm",
    "kerr_hz_per_photon",
    "b_c_parallel_t",
    "b_c_perp_mt",
];

/// Value with 1σ uncertainty. A missing value always carries a flag.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportCell {
    pub value: Option<f64>,
    pub std_error: Option<f64>,
    pub flag: Option<String>,
}

impl ReportCell {
    fn exact(v: f64) -> Self {
        ReportCell {
            value: Some(v),
            std_error: None,
            flag: None,
        }
    }

    fn measured(v: f64, e: Option<f64>) -> Self {
        ReportCell {
            value: Some(v),
            std_error: e,
            flag: None,
        }
    }

    fn missing(flag: impl Into<String>) -> Self {
        ReportCell {
            value: None,
            std_error: None,
            flag: Some(flag.into()),
        }
    }

    fn flagged(mut self, flag: impl Into<String>) -> Self {
        self.flag = Some(flag.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorReport {
    pub resonator: String,
    pub width_nm: ReportCell,
    pub f0_ghz: ReportCell,
    pub q_i_n1: ReportCell,
    pub q_c: ReportCell,
    pub z_kohm: ReportCell,
    pub kerr_hz_per_photon: ReportCell,
    pub b_c_parallel_t: ReportCell,
    pub b_c_perp_mt: ReportCell,
}

impl ResonatorReport {
    pub fn cell(&self, column: &str) -> Option<&ReportCell> {
        Some(match column {
            "width_nm" => &self.width_nm,
            "f0_ghz" => &self.f0_ghz,
            "q_i_n1" => &self.q_i_n1,
            "q_c" => &self.q_c,
            "z_kohm" => &self.z_kohm,
            "kerr_hz_per_photon" => &self.kerr_hz_per_photon,
            "b_c_parallel_t" => &self.b_c_parallel_t,
            "b_c_perp_mt" => &self.b_c_perp_mt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub schema: u32,
    pub campaign: String,
    pub rows: Vec<ResonatorReport>,
    /// Out-of-plane misalignment from the in-plane family, when available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub misalignment: Option<FitResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Everything a campaign produces, written as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResults {
    pub schema: u32,
    pub rng: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Vec<GeneratorTruth>>,
    pub run: CampaignRun,
    pub report: CampaignReport,
}

impl CampaignResults {
    pub fn new(
        run: CampaignRun,
        report: CampaignReport,
        truth: Option<Vec<GeneratorTruth>>,
    ) -> Self {
        CampaignResults {
            schema: 1,
            rng: RNG_ALGORITHM.to_string(),
            truth,
            run,
            report,
        }
    }
}

/// Last sweep of an orientation that produced a reference.
fn last_sweep(sweeps: &[SweepRun], o: Orientation) -> Option<&SweepRun> {
    sweeps.iter().rev().find(|s| s.orientation == o)
}

fn critical_field_cell(sweeps: &[SweepRun], o: Orientation, scale: f64) -> ReportCell {
    let Some(sw) = last_sweep(sweeps, o) else {
        return ReportCell::missing("not measured");
    };
    let cell = match fit_field_sweep_bc(&sw.series) {
        Ok(r) => match r.param("b_c") {
            Some(v) => ReportCell::measured(v * scale, r.std_error("b_c").map(|e| e * scale)),
            None => ReportCell::missing("fit returned no b_c"),
        },
        Err(e) => ReportCell::missing(format!("field fit failed: {e}")),
    };
    match sw.lost_at_t {
        Some(b) if cell.value.is_some() => cell.flagged(format!("lost at B = {b} T")),
        Some(b) => ReportCell::missing(format!(
            "lost at B = {b} T; {}",
            cell.flag.unwrap_or_default()
        )),
        None => cell,
    }
}

/// Assembles one row per resonator. Fails with `MissingInput` when any
/// resonator lacks an accepted zero-field reference; every other gap is a
/// flagged cell.
pub fn build_report(
    cfg: &CampaignConfig,
    run: &CampaignRun,
) -> Result<CampaignReport, CampaignError> {
    let missing: Vec<String> = run
        .resonators
        .iter()
        .filter(|r| r.reference.as_ref().and_then(|t| t.f0_hz()).is_none())
        .map(|r| format!("{}: no accepted zero-field reference fit", r.name))
        .collect();
    if !missing.is_empty() {
        return Err(CampaignError::MissingInput(missing));
    }
    let mut rows = Vec::with_capacity(run.resonators.len());
    for (spec, r) in cfg.resonator.iter().zip(&run.resonators) {
        let reference = r.reference.as_ref().expect("checked above");
        let fit = reference.fit.as_ref().expect("accepted fit");
        let f0 = fit.param("f0_hz").expect("f0_hz");
        let f0_err = fit.std_error("f0_hz");
        let q_c = ReportCell::measured(fit.param("q_c").unwrap_or(f64::NAN), fit.std_error("q_c"));

        let zero_scan = r.power_scans.iter().find(|p| p.field_t == 0.0);
        let q_i_n1 = match zero_scan.and_then(|p| {
            p.points
                .iter()
                .min_by(|a, b| a.n_ph.ln().abs().total_cmp(&b.n_ph.ln().abs()))
        }) {
            Some(p) => {
                let cell = ReportCell::measured(p.q_i, Some(p.q_i_err));
                if (p.n_ph.log10()).abs() > 1.0 {
                    cell.flagged(format!("nearest power-scan point has n = {:.3e}", p.n_ph))
                } else {
                    cell
                }
            }
            None => {
                ReportCell::measured(fit.param("q_i").unwrap_or(f64::NAN), fit.std_error("q_i"))
                    .flagged("no power scan; reference drive")
            }
        };

        let geometry = cfg.geometry_of(spec)?;
        let z_kohm = match fit_ctilde_from_frequency(f0, &geometry)
            .and_then(|c| geometry.with_capacitance(c))
            .and_then(|g| characteristic_impedance(&g))
        {
            // Z = 4·l·f₀·L̃ is linear in f₀.
            Ok(z) => ReportCell::measured(z / 1e3, f0_err.map(|e| z / 1e3 * e / f0)),
            Err(e) => ReportCell::missing(format!("impedance chain: {e}")),
        };

        let kerr = match &r.kerr {
            None => ReportCell::missing("no zero-field power scan"),
            Some(k) => match (&k.fit, k.qc.accepted) {
                (Some(f), true) => ReportCell::measured(
                    f.param("kerr_hz_per_photon").unwrap_or(f64::NAN),
                    f.std_error("kerr_hz_per_photon"),
                ),
                (Some(f), false) => {
                    ReportCell::measured(f.param("kerr_hz_per_photon").unwrap_or(f64::NAN), None)
                        .flagged(format!("QC rejected: {}", k.qc.reason))
                }
                (None, _) => {
                    ReportCell::missing(k.error.clone().unwrap_or_else(|| k.qc.reason.clone()))
                }
            },
        };

        rows.push(ResonatorReport {
            resonator: r.name.clone(),
            width_nm: ReportCell::exact(geometry.width() * 1e9),
            f0_ghz: ReportCell::measured(f0 / 1e9, f0_err.map(|e| e / 1e9)),
            q_i_n1,
            q_c,
            z_kohm,
            kerr_hz_per_photon: kerr,
            b_c_parallel_t: critical_field_cell(&r.sweeps, Orientation::InPlane, 1.0),
            b_c_perp_mt: critical_field_cell(&r.sweeps, Orientation::OutOfPlane, 1e3),
        });
    }

    let mut notes = Vec::new();
    let misalignment = misalignment_fit(cfg, run, &mut notes);
    Ok(CampaignReport {
        schema: 1,
        campaign: run.name.clone(),
        rows,
        misalignment,
        notes,
    })
}

/// Misalignment fit over the in-plane family sharing the first film.
fn misalignment_fit(
    cfg: &CampaignConfig,
    run: &CampaignRun,
    notes: &mut Vec<String>,
) -> Option<FitResult> {
    let first = cfg.resonator.first()?;
    let mut family = Vec::new();
    for (spec, r) in cfg.resonator.iter().zip(&run.resonators) {
        if spec.film != first.film {
            continue;
        }
        if let Some(sw) = last_sweep(&r.sweeps, Orientation::InPlane) {
            if sw.series.points.len() >= 5 {
                family.push((spec.geometry.width_w, sw.series.clone()));
            }
        }
    }
    if family.len() < 3 {
        return None;
    }
    let film = cfg.film_of(first).ok()?;
    match fit_misalignment(&family, &film) {
        Ok(r) => Some(r),
        Err(e) => {
            notes.push(format!("misalignment fit skipped: {e}"));
            None
        }
    }
}

/// Checks a serialized report against the table schema.
pub fn validate_report_json(v: &Value) -> Result<(), Vec<String>> {
    let mut errs = Vec::new();
    let Some(obj) = v.as_object() else {
        return Err(vec!["report is not an object".into()]);
    };
    if obj.get("schema").and_then(Value::as_u64) != Some(1) {
        errs.push("`schema` must be 1".into());
    }
    if !obj.get("campaign").is_some_and(Value::is_string) {
        errs.push("`campaign` must be a string".into());
    }
    let Some(rows) = obj.get("rows").and_then(Value::as_array) else {
        errs.push("`rows` must be an array".into());
        return Err(errs);
    };
    for (k, row) in rows.iter().enumerate() {
        let Some(row) = row.as_object() else {
            errs.push(format!("rows[{k}] is not an object"));
            continue;
        };
        if !row.get("resonator").is_some_and(Value::is_string) {
            errs.push(format!("rows[{k}].resonator must be a string"));
        }
        for key in row.keys() {
            if key != "resonator" && !REPORT_COLUMNS.contains(&key.as_str()) {
                errs.push(format!("rows[{k}] has unknown column `{key}`"));
            }
        }
        for col in REPORT_COLUMNS {
            let Some(cell) = row.get(col).and_then(Value::as_object) else {
                errs.push(format!("rows[{k}].{col} missing or not an object"));
                continue;
            };
            for key in cell.keys() {
                if !["value", "std_error", "flag"].contains(&key.as_str()) {
                    errs.push(format!("rows[{k}].{col} has unknown field `{key}`"));
                }
            }
            let num_or_null = |f: &str| cell.get(f).is_some_and(|x| x.is_null() || x.is_number());
            if !num_or_null("value") || !num_or_null("std_error") {
                errs.push(format!(
                    "rows[{k}].{col}: value and std_error must be numbers or null"
                ));
            }
            let flag = cell.get("flag");
            if !flag.is_some_and(|x| x.is_null() || x.is_string()) {
                errs.push(format!("rows[{k}].{col}.flag must be a string or null"));
            }
            if cell.get("value").is_some_and(Value::is_null) && !flag.is_some_and(Value::is_string)
            {
                errs.push(format!("rows[{k}].{col}: missing value without a flag"));
            }
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

/// Aligned text table.
pub fn report_table(report: &CampaignReport) -> String {
    let header = [
        "resonator",
        "w (nm)",
        "f0 (GHz)",
        "Q_i(n~1)",
        "Q_c",
        "Z (kOhm)",
        "K/2pi (Hz)",
        "B_C|| (T)",
        "B_Cperp (mT)",
    ];
    let fmt = |c: &ReportCell, digits: usize| -> String {
        let mut s = match (c.value, c.std_error) {
            (Some(v), Some(e)) => format!("{v:.digits$}({e:.1e})"),
            (Some(v), None) => format!("{v:.digits$}"),
            (None, _) => "-".into(),
        };
        if c.flag.is_some() {
            s.push('*');
        }
        s
    };
    let mut lines: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for r in &report.rows {
        lines.push(vec![
            r.resonator.clone(),
            fmt(&r.width_nm, 0),
            fmt(&r.f0_ghz, 4),
            fmt(&r.q_i_n1, 0),
            fmt(&r.q_c, 0),
            fmt(&r.z_kohm, 3),
            fmt(&r.kerr_hz_per_photon, 3),
            fmt(&r.b_c_parallel_t, 3),
            fmt(&r.b_c_perp_mt, 1),
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for l in &lines {
        let cells: Vec<String> = l
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:>w$}"))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    let flags: Vec<String> = report
        .rows
        .iter()
        .flat_map(|r| {
            REPORT_COLUMNS.iter().filter_map(move |c| {
                r.cell(c)
                    .and_then(|x| x.flag.as_ref())
                    .map(|f| format!("* {} {c}: {f}", r.resonator))
            })
        })
        .collect();
    for f in flags {
        out.push_str(&f);
        out.push('\n');
    }
    if let Some(m) = &report.misalignment {
        let pm = |name: &str| match (m.param(name), m.std_error(name)) {
            (Some(v), Some(e)) => format!("{v:.4}({e:.1e})"),
            (Some(v), None) => format!("{v:.4}"),
            _ => "-".into(),
        };
        out.push_str(&format!(
            "misalignment: theta_B = {} deg, D = {} cm^2/s\n",
            pm("theta_deg"),
            m.param("d")
                .map_or("-".into(), |d| format!("{:.4}", d * 1e4))
        ));
    }
    out
}
