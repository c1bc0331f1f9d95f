//! `estimate`: film and geometry quantities through the quarter-wave chain.

use std::f64::consts::TAU;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use resforge::physics::{
    kerr_bcs, kerr_jj, lk_from_sheet_resistance, FilmProperties, FilmSpec, QuarterWaveChain,
};

use crate::output::{emit, num, Document, Grid};
use crate::settings::Settings;
use crate::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    /// Sheet inductance from the normal-state sheet resistance.
    Lk,
    /// Length, frequency, C̃ and impedance of the quarter-wave line.
    Chain,
    /// BCS self-Kerr from the depairing current.
    KerrBcs,
    /// Josephson-array self-Kerr for granular films.
    KerrJj,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// Film and geometry document (TOML).
    pub doc: PathBuf,
    /// Quantities to evaluate. Default: the chain plus whatever the film
    /// fields support.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub estimate: Vec<Quantity>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateDoc {
    pub film: FilmSpec,
    pub geometry: LineSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0_hz: Option<f64>,
    #[serde(default)]
    pub temperature_k: f64,
}

/// Geometry with the line constants that may stand in for each other.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSpec {
    pub width_w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inductance_per_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacitance_per_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impedance_ohm: Option<f64>,
}

fn default_set(film: &FilmSpec) -> Vec<Quantity> {
    let mut q = vec![Quantity::Chain];
    if film.sheet_resistance.is_some() {
        q.push(Quantity::Lk);
    }
    if film.depairing_current_istar.is_some() {
        q.push(Quantity::KerrBcs);
    }
    if film.grain_size_a.is_some() {
        q.push(Quantity::KerrJj);
    }
    q
}

pub fn run(args: &EstimateArgs, settings: &Settings) -> anyhow::Result<Outcome> {
    let text = std::fs::read_to_string(&args.doc)
        .with_context(|| format!("reading {}", args.doc.display()))?;
    let doc: EstimateDoc =
        toml::from_str(&text).with_context(|| format!("parsing {}", args.doc.display()))?;
    let mut wanted = if args.estimate.is_empty() {
        default_set(&doc.film)
    } else {
        args.estimate.clone()
    };
    wanted.sort();
    wanted.dedup();

    let (values, grid) = evaluate(&doc, &wanted)?;
    let out = Document {
        json: json!({ "input": doc, "estimates": values }),
        grid,
        notes: Vec::new(),
    };
    emit(&out.render(settings.format)?, settings)?;
    Ok(Outcome::Accepted)
}

/// Evaluates `wanted` in dependency order. Missing inputs are errors that
/// name the fields.
pub fn evaluate(
    doc: &EstimateDoc,
    wanted: &[Quantity],
) -> anyhow::Result<(Map<String, Value>, Grid)> {
    let film = FilmProperties::new(doc.film.clone()).context("film")?;
    let g = &doc.geometry;
    let mut values = Map::new();
    let mut grid = Grid::new(["quantity", "value", "unit"]);
    let mut put = |name: &str, v: f64, unit: &str| {
        values.insert(name.to_string(), json!(v));
        grid.push([name.to_string(), num(v), unit.to_string()]);
    };

    let lk_estimated = if wanted.contains(&Quantity::Lk) {
        let lk = lk_from_sheet_resistance(&film, doc.temperature_k).context("lk")?;
        put("lk_sheet_h", lk, "H/sq");
        Some(lk)
    } else {
        None
    };

    let needs_chain = wanted.iter().any(|q| *q != Quantity::Lk);
    if !needs_chain {
        return Ok((values, grid));
    }
    let l_tilde = match (g.inductance_per_length, doc.film.lk_sheet.or(lk_estimated)) {
        (Some(l), _) => l,
        (None, Some(lk)) => lk / g.width_w,
        (None, None) => anyhow::bail!(
            "chain: missing fields: geometry.inductance_per_length or film.lk_sheet (or film.sheet_resistance with --estimate lk)"
        ),
    };
    let chain = QuarterWaveChain::resolve(
        l_tilde,
        doc.f0_hz,
        g.length_l,
        g.capacitance_per_length,
        g.impedance_ohm,
    )
    .context("chain")?;
    put(
        "inductance_per_length_h_per_m",
        chain.inductance_per_length,
        "H/m",
    );
    put(
        "capacitance_per_length_f_per_m",
        chain.capacitance_per_length,
        "F/m",
    );
    put("length_m", chain.length, "m");
    put("frequency_hz", chain.frequency_hz, "Hz");
    put("impedance_ohm", chain.impedance, "Ohm");
    let total = chain.inductance_per_length * chain.length;
    put("total_inductance_h", total, "H");
    let omega = TAU * chain.frequency_hz;

    if wanted.contains(&Quantity::KerrBcs) {
        let istar = film.depairing_current().context("kerr-bcs")?;
        let k = kerr_bcs(omega, total, istar).context("kerr-bcs")?;
        put("kerr_bcs_hz_per_photon", k / TAU, "Hz");
    }
    if wanted.contains(&Quantity::KerrJj) {
        let geom = chain.geometry(g.width_w)?;
        let k = kerr_jj(omega, &film, &geom).context("kerr-jj")?;
        put("kerr_jj_hz_per_photon", k / TAU, "Hz");
    }
    Ok((values, grid))
}
