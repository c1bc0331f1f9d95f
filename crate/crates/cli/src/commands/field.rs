//! `field`: field-sweep campaign on a synthetic or recorded source.

use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};

use resforge::campaign::{
    build_report, report_table, run_field_campaign, CampaignConfig, CampaignReport,
    CampaignResults, CampaignRun, RecordingSource, ReplaySource, SyntheticSource, REPORT_COLUMNS,
};

use crate::output::{emit, num, opt, write_file, Format, Grid};
use crate::settings::Settings;
use crate::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Generate every scan from the resonators' `[truth]` tables.
    Simulate,
    /// Serve scans from a directory written by `--mode simulate --record`.
    Replay,
}

#[derive(Args, Debug)]
pub struct FieldArgs {
    /// Campaign configuration (TOML, `schema = 1`).
    pub campaign: PathBuf,
    #[arg(long, value_enum, default_value = "simulate")]
    pub mode: Mode,
    /// Scan directory: written in simulate mode, read in replay mode.
    #[arg(long)]
    pub record: Option<PathBuf>,
    /// Write the full results document (run, audit log, report, truth) as JSON.
    #[arg(long)]
    pub results: Option<PathBuf>,
    /// Write every tracked series as CSV for plotting.
    #[arg(long)]
    pub series: Option<PathBuf>,
}

pub fn run(args: &FieldArgs, settings: &Settings) -> anyhow::Result<Outcome> {
    let mut cfg = CampaignConfig::load(&args.campaign)
        .with_context(|| format!("loading {}", args.campaign.display()))?;
    if let Some(seed) = settings.seed {
        cfg.seed = seed;
    }
    let (run, truth) = match args.mode {
        Mode::Simulate => {
            let truths = cfg.generator_truths()?;
            let src = SyntheticSource::new(truths.clone(), cfg.simulation.noise_sigma, cfg.seed);
            let run = match &args.record {
                Some(dir) => run_field_campaign(&cfg, &mut RecordingSource::new(src, dir)?)?,
                None => run_field_campaign(&cfg, &mut { src })?,
            };
            (run, Some(truths))
        }
        Mode::Replay => {
            let dir = args
                .record
                .as_ref()
                .context("--mode replay needs --record <dir> with the recorded scans")?;
            (run_field_campaign(&cfg, &mut ReplaySource::new(dir))?, None)
        }
    };
    log_losses(&run);
    let report = build_report(&cfg, &run)?;
    if let Some(p) = &args.series {
        write_file(p, &series_csv(&run)?)?;
    }
    let text = render(&report, settings.format)?;
    if let Some(p) = &args.results {
        let doc = CampaignResults::new(run, report, truth);
        write_file(p, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    }
    emit(&text, settings)?;
    Ok(Outcome::Accepted)
}

fn log_losses(run: &CampaignRun) {
    for r in &run.resonators {
        for s in &r.sweeps {
            if let Some(b) = s.lost_at_t {
                log::warn!("{}: lost during {:?} sweep at {b} T", r.name, s.orientation);
            }
        }
    }
}

fn render(report: &CampaignReport, format: Format) -> anyhow::Result<String> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(report)? + "\n",
        Format::Table => report_table(report),
        Format::Csv => {
            let mut header = vec!["resonator".to_string()];
            for c in REPORT_COLUMNS {
                header.extend([c.to_string(), format!("{c}_err"), format!("{c}_flag")]);
            }
            let mut g = Grid::new(header);
            for r in &report.rows {
                let mut row = vec![r.resonator.clone()];
                for c in REPORT_COLUMNS {
                    let cell = r.cell(c).expect("known column");
                    row.extend([
                        opt(cell.value),
                        opt(cell.std_error),
                        cell.flag.clone().unwrap_or_default(),
                    ]);
                }
                g.push(row);
            }
            g.csv()?
        }
    })
}

fn series_csv(run: &CampaignRun) -> anyhow::Result<String> {
    let mut g = Grid::new(["resonator", "orientation", "b_t", "rel_shift", "q_i", "q_c"]);
    for r in &run.resonators {
        for s in &r.sweeps {
            let o = serde_json::to_value(s.orientation)?;
            let o = o.as_str().unwrap_or_default().to_string();
            for p in &s.series.points {
                g.push([
                    r.name.clone(),
                    o.clone(),
                    num(p.b),
                    num(p.rel_shift),
                    num(p.q_i),
                    num(p.q_c),
                ]);
            }
        }
    }
    g.csv()
}
