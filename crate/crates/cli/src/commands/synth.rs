//! `synth`: seeded synthetic artifacts plus a `truth.json` sidecar.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use resforge::campaign::{save_trace, SimTruth};
use resforge::fit::{FieldSweepSeries, Orientation};
use resforge::physics::{FilmProperties, FilmSpec, GeometrySpec, ResonatorGeometry};
use resforge::synth::{
    generate_field_sweep, generate_power_map, generate_trace, linewidth_grid, DriveSpec,
    GeneratorTruth, NoiseSpec, RNG_ALGORITHM,
};

use crate::output::{emit, num, write_file, Document, Grid};
use crate::settings::Settings;
use crate::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Trace,
    Powermap,
    Fieldsweep,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Truth document (TOML).
    pub truth: PathBuf,
    #[arg(long, value_enum, default_value = "trace")]
    pub kind: Kind,
}

/// Input document: one resonator with its film, geometry and generator
/// settings.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthDoc {
    #[serde(default)]
    pub seed: u64,
    pub design_f0_hz: f64,
    pub film: FilmSpec,
    pub geometry: GeometrySpec,
    pub truth: SimTruth,
    #[serde(default)]
    pub drive: DriveSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub noise: NoiseDoc,
    pub powermap: Option<PowerMapSpec>,
    pub fieldsweep: Option<FieldSweepSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Half-span in linewidths `(κ+γ)/2π`.
    pub linewidths: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            linewidths: 10.0,
            points: 401,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseDoc {
    #[serde(default)]
    pub sigma: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerMapSpec {
    pub powers_dbm: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSweepSpec {
    pub orientation: Orientation,
    pub max_field_t: f64,
    pub step_t: f64,
}

impl SynthDoc {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn generator_truth(&self) -> anyhow::Result<GeneratorTruth> {
        let film = FilmProperties::new(self.film.clone())?;
        let geometry = ResonatorGeometry::from_spec(&self.geometry, Some(&film))?;
        Ok(self
            .truth
            .build(self.design_f0_hz, film, geometry, self.drive)?)
    }
}

pub fn run(args: &SynthArgs, settings: &Settings) -> anyhow::Result<Outcome> {
    let doc = SynthDoc::load(&args.truth)?;
    let dir = settings
        .output
        .as_ref()
        .context("synth writes several files; pass --output <dir>")?;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let seed = settings.seed.unwrap_or(doc.seed);
    let noise = NoiseSpec::new(doc.noise.sigma, seed)?;
    let truth = doc.generator_truth()?;
    let grid = linewidth_grid(&truth.resonance, doc.grid.linewidths, doc.grid.points);

    let mut files = Vec::new();
    let mut extra = serde_json::Value::Null;
    match args.kind {
        Kind::Trace => {
            let t = generate_trace(&truth, &grid, &noise)?;
            files.push(save(dir, "trace.csv", |p| Ok(save_trace(&t, p)?))?);
        }
        Kind::Powermap => {
            let spec = doc
                .powermap
                .as_ref()
                .context("kind powermap needs a [powermap] table")?;
            let mut powers = spec.powers_dbm.clone();
            powers.sort_by(f64::total_cmp);
            let map = generate_power_map(&truth, &powers, &grid, &noise)?;
            for (k, t) in map.traces.iter().enumerate() {
                files.push(save(dir, &format!("power_{k:03}.csv"), |p| {
                    Ok(save_trace(t, p)?)
                })?);
            }
            extra = json!({
                "powers_dbm": powers,
                "photon_numbers": map.photon_numbers,
                "bifurcated": map.bifurcated,
            });
        }
        Kind::Fieldsweep => {
            let spec = doc
                .fieldsweep
                .as_ref()
                .context("kind fieldsweep needs a [fieldsweep] table")?;
            if spec.step_t.is_nan() || spec.step_t <= 0.0 {
                anyhow::bail!("fieldsweep.step_t must be > 0, got {}", spec.step_t);
            }
            let n = (spec.max_field_t / spec.step_t + 1e-9).floor() as usize;
            let b: Vec<f64> = (0..=n).map(|k| k as f64 * spec.step_t).collect();
            let s = generate_field_sweep(&truth, &b, spec.orientation, &noise)?;
            files.push(save(dir, "fieldsweep.csv", |p| {
                write_file(p, &series_csv(&s)?)
            })?);
        }
    }

    let sidecar = json!({
        "schema": 1,
        "kind": args.kind,
        "rng": RNG_ALGORITHM,
        "seed": seed,
        "noise_sigma": doc.noise.sigma,
        "files": files,
        "truth": truth,
        "powermap": extra,
    });
    files.push(save(dir, "truth.json", |p| {
        write_file(p, &(serde_json::to_string_pretty(&sidecar)? + "\n"))
    })?);

    let mut g = Grid::new(["file"]);
    for f in &files {
        g.push([f.clone()]);
    }
    let out = Document {
        json: sidecar,
        grid: g,
        notes: vec![format!("seed {seed}, sigma {}", num(doc.noise.sigma))],
    };
    // The primary output goes to stdout; --output names the artifact directory.
    let stdout = Settings {
        output: None,
        ..settings.clone()
    };
    emit(&out.render(settings.format)?, &stdout)?;
    Ok(Outcome::Accepted)
}

fn save(
    dir: &Path,
    name: &str,
    f: impl FnOnce(&Path) -> anyhow::Result<()>,
) -> anyhow::Result<String> {
    f(&dir.join(name))?;
    Ok(name.to_string())
}

fn series_csv(s: &FieldSweepSeries) -> anyhow::Result<String> {
    let o = serde_json::to_value(s.orientation)?;
    let mut text = format!("# orientation={}\n", o.as_str().unwrap_or_default());
    let mut g = Grid::new(["b_t", "rel_shift", "q_i", "q_c"]);
    for p in &s.points {
        g.push([num(p.b), num(p.rel_shift), num(p.q_i), num(p.q_c)]);
    }
    text.push_str(&g.csv()?);
    Ok(text)
}
