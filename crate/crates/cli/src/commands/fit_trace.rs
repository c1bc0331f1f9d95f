//! `fit-trace`: linear hanger fit of one trace with QC.

use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use serde_json::json;

use resforge::campaign::ingest_trace;
use resforge::fit::{fit_linear_resonance_raw, qc_filter_with, LinearFit};
use resforge::physics::s21_linear;

use crate::output::{emit, num, opt, write_file, Document, Grid};
use crate::settings::Settings;
use crate::Outcome;

#[derive(Args, Debug)]
pub struct FitTraceArgs {
    /// Trace file (`freq_hz,re,im` with optional `#` metadata).
    pub trace: PathBuf,
    /// Also write data and fitted model as CSV for plotting.
    #[arg(long)]
    pub series: Option<PathBuf>,
}

pub fn run(args: &FitTraceArgs, settings: &Settings) -> anyhow::Result<Outcome> {
    let trace =
        ingest_trace(&args.trace).with_context(|| format!("reading {}", args.trace.display()))?;
    log::info!("{}: {} points", args.trace.display(), trace.len());
    let fit = fit_linear_resonance_raw(&trace, None)?;
    let qc = qc_filter_with(&fit.result, settings.max_std_error);
    if !qc.accepted {
        log::warn!("QC rejected: {}", qc.reason);
    }
    if let Some(p) = &args.series {
        write_file(p, &model_series(&trace, &fit)?)?;
    }

    let r = &fit.result;
    let mut grid = Grid::new(["parameter", "value", "std_error"]);
    for (name, v) in &r.params {
        grid.push([name.clone(), num(*v), opt(r.std_error(name))]);
    }
    let doc = Document {
        json: json!({
            "trace": args.trace.display().to_string(),
            "f0_hz": r.param("f0_hz"),
            "q_i": r.param("q_i"),
            "q_c": r.param("q_c"),
            "q_l": r.param("q_l"),
            "qc": qc,
            "result": r,
        }),
        grid,
        notes: vec![format!("qc: {}", qc.reason)],
    };
    emit(&doc.render(settings.format)?, settings)?;
    Ok(if qc.accepted {
        Outcome::Accepted
    } else {
        Outcome::Rejected
    })
}

fn model_series(trace: &resforge::fit::ComplexTrace, fit: &LinearFit) -> anyhow::Result<String> {
    let mut g = Grid::new([
        "freq_hz",
        "re",
        "im",
        "model_re",
        "model_im",
        "mag",
        "model_mag",
    ]);
    for (&f, z) in trace.freqs().iter().zip(trace.samples()) {
        let m = s21_linear(f, &fit.resonance, &fit.environment);
        g.push([
            num(f),
            num(z.re),
            num(z.im),
            num(m.re),
            num(m.im),
            num(z.norm()),
            num(m.norm()),
        ]);
    }
    g.csv()
}
