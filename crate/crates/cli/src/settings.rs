//! Flag, environment and config-file merging.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

use crate::output::Format;
use resforge::fit::QC_MAX_STD_ERROR;

/// Optional `--config` file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    format: Option<Format>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    verbose: Option<u8>,
    max_std_error: Option<f64>,
}

/// Effective settings after precedence is applied.
#[derive(Debug, Clone)]
pub struct Settings {
    pub format: Format,
    /// `None` means "use the seed in the input document".
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub verbose: u8,
    pub max_std_error: f64,
}

impl Settings {
    /// `format`, `seed`, `output` and `verbose` arrive already merged from
    /// flags and environment; the config file only fills what is unset.
    pub fn resolve(
        format: Option<Format>,
        seed: Option<u64>,
        output: Option<PathBuf>,
        verbose: Option<u8>,
        config: Option<&Path>,
    ) -> anyhow::Result<Self> {
        let file = match config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str::<ConfigFile>(&text)
                    .with_context(|| format!("parsing config {}", p.display()))?
            }
            None => ConfigFile::default(),
        };
        let max_std_error = file.max_std_error.unwrap_or(QC_MAX_STD_ERROR);
        if max_std_error.is_nan() || max_std_error <= 0.0 {
            anyhow::bail!("max_std_error must be > 0, got {max_std_error}");
        }
        Ok(Settings {
            format: format.or(file.format).unwrap_or(Format::Table),
            seed: seed.or(file.seed),
            output: output.or(file.output),
            verbose: verbose.or(file.verbose).unwrap_or(0),
            max_std_error,
        })
    }
}
