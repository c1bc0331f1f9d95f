//! Rendering of command results as JSON, CSV or aligned text.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::settings::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// Header plus rows of already formatted cells.
#[derive(Debug, Clone, Default)]
pub struct Grid {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Grid {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Grid {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<S: Into<String>>(&mut self, row: impl IntoIterator<Item = S>) {
        self.rows.push(row.into_iter().map(Into::into).collect());
    }

    pub fn csv(&self) -> anyhow::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(String::from_utf8(
            w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?,
        )?)
    }

    /// Right-aligned columns separated by two spaces.
    pub fn table(&self) -> String {
        let all = std::iter::once(&self.header).chain(&self.rows);
        let n = self.header.len();
        let widths: Vec<usize> = (0..n)
            .map(|c| {
                all.clone()
                    .map(|r| r.get(c).map_or(0, |s| s.chars().count()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        for r in all {
            let cells: Vec<String> = r
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s:>w$}"))
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

/// A result in all three renderings; `table` may carry extra lines.
pub struct Document {
    pub json: serde_json::Value,
    pub grid: Grid,
    pub notes: Vec<String>,
}

impl Document {
    pub fn render(&self, format: Format) -> anyhow::Result<String> {
        Ok(match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json)?;
                s.push('\n');
                s
            }
            Format::Csv => self.grid.csv()?,
            Format::Table => {
                let mut s = self.grid.table();
                for n in &self.notes {
                    s.push_str(n);
                    s.push('\n');
                }
                s
            }
        })
    }
}

/// Writes `text` to `--output` or stdout.
pub fn emit(text: &str, settings: &Settings) -> anyhow::Result<()> {
    match &settings.output {
        Some(p) => write_file(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Shortest round-trip decimal form.
/// Shortest round-trip form; scientific notation outside `[1e-3, 1e9)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-3..1e9).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_renders_csv_and_table() {
        let mut g = Grid::new(["name", "value"]);
        g.push(["q_i", "13805"]);
        g.push(["note", "a,b"]);
        assert_eq!(g.csv().unwrap(), "name,value\nq_i,13805\nnote,\"a,b\"\n");
        assert_eq!(g.table(), "name  value\n q_i  13805\nnote    a,b\n");
    }
}
