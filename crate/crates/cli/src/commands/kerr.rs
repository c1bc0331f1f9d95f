//! `kerr`: joint self-Kerr fit over a directory of traces at several powers.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use serde_json::json;

use resforge::campaign::ingest_trace;
use resforge::fit::{
    fit_kerr_below_bifurcation, fit_linear_resonance_raw, qc_filter_with, ComplexTrace,
};
use resforge::physics::{photon_number, HANGER_CONFIG_C};

use crate::output::{emit, num, opt, Document, Grid};
use crate::settings::Settings;
use crate::Outcome;

#[derive(Args, Debug)]
pub struct KerrArgs {
    /// Directory of `*.csv` traces, each carrying `# power_dbm` and `# attenuation_db`.
    pub dir: PathBuf,
    /// Photon-number configuration factor.
    #[arg(long, default_value_t = HANGER_CONFIG_C)]
    pub config_c: f64,
}

fn load_map(dir: &Path) -> anyhow::Result<Vec<(String, ComplexTrace)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    let mut traces = Vec::new();
    for p in paths {
        let t = ingest_trace(&p).with_context(|| format!("reading {}", p.display()))?;
        let name = p
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        traces.push((name, t));
    }
    if traces.is_empty() {
        anyhow::bail!("no .csv traces in {}", dir.display());
    }
    traces.sort_by(|a, b| a.1.power_dbm().total_cmp(&b.1.power_dbm()));
    Ok(traces)
}

pub fn run(args: &KerrArgs, settings: &Settings) -> anyhow::Result<Outcome> {
    let map = load_map(&args.dir)?;
    log::info!("{} traces from {}", map.len(), args.dir.display());
    let traces: Vec<ComplexTrace> = map.iter().map(|(_, t)| t.clone()).collect();
    // Linear parameters from the lowest-power trace.
    let base = fit_linear_resonance_raw(&traces[0], None).context("low-power linear fit")?;
    let m = fit_kerr_below_bifurcation(&traces, &base.resonance, &base.environment, args.config_c);
    let (result, error) = match m.result {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let qc = result
        .as_ref()
        .map(|r| qc_filter_with(r, settings.max_std_error));
    let accepted = qc.as_ref().is_some_and(|q| q.accepted);
    if let Some(e) = &error {
        log::warn!("Kerr fit failed: {e}");
    } else if let Some(q) = qc.as_ref().filter(|q| !q.accepted) {
        log::warn!("QC rejected: {}", q.reason);
    }

    let k = result.as_ref().and_then(|r| r.param("kerr_hz_per_photon"));
    let k_err = result
        .as_ref()
        .and_then(|r| r.std_error("kerr_hz_per_photon"));
    let mut grid = Grid::new([
        "file",
        "power_dbm",
        "attenuation_db",
        "n_ph",
        "used",
        "bifurcated",
    ]);
    let mut rows = Vec::new();
    for (k, (name, t)) in map.iter().enumerate() {
        let n = photon_number(
            t.power_dbm(),
            t.attenuation_db(),
            &base.resonance,
            args.config_c,
        );
        let used = m.used.contains(&k);
        let bif = m.bifurcated.contains(&k);
        grid.push([
            name.clone(),
            num(t.power_dbm()),
            num(t.attenuation_db()),
            num(n),
            used.to_string(),
            bif.to_string(),
        ]);
        rows.push(json!({
            "file": name, "power_dbm": t.power_dbm(), "attenuation_db": t.attenuation_db(),
            "n_ph": n, "used": used, "bifurcated": bif,
        }));
    }
    let doc = Document {
        json: json!({
            "kerr_hz_per_photon": k,
            "std_error": k_err,
            "traces": rows,
            "qc": qc,
            "error": error,
            "result": result,
            "linear": base.result,
        }),
        grid,
        notes: vec![
            format!("K/2pi = {} +/- {} Hz/photon", opt(k), opt(k_err)),
            match (&error, &qc) {
                (Some(e), _) => format!("fit failed: {e}"),
                (None, Some(q)) => format!("qc: {}", q.reason),
                (None, None) => String::new(),
            },
        ],
    };
    emit(&doc.render(settings.format)?, settings)?;
    Ok(if accepted {
        Outcome::Accepted
    } else {
        Outcome::Rejected
    })
}
