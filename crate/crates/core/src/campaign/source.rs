//! Trace providers: simulation, recording and replay.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::io::{ingest_trace, save_trace};
use crate::error::{CampaignError, ModelError};
use crate::fit::{ComplexTrace, Orientation};
use crate::physics::{KerrModelParams, ResonanceParams};
use crate::synth::{generate_trace, splitmix64, GeneratorTruth, NoiseSpec};

/// What a scan is for; recorded in the audit log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanKind {
    Reference,
    Fast,
    Detail,
    Power,
}

/// A uniform frequency scan of one resonator at one field and drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRequest {
    pub id: u64,
    pub kind: ScanKind,
    pub resonator: usize,
    pub field_t: f64,
    pub orientation: Orientation,
    pub start_hz: f64,
    pub stop_hz: f64,
    pub points: usize,
    pub power_dbm: f64,
    pub attenuation_db: f64,
}

impl ScanRequest {
    pub fn grid(&self) -> Vec<f64> {
        let step = (self.stop_hz - self.start_hz) / (self.points - 1) as f64;
        (0..self.points)
            .map(|k| self.start_hz + step * k as f64)
            .collect()
    }
}

pub trait TraceSource {
    fn scan(&mut self, request: &ScanRequest) -> Result<ComplexTrace, CampaignError>;
}

/// Generates every scan from per-resonator generator truth. Noise seeds
/// derive from the campaign seed and the scan id.
#[derive(Debug, Clone)]
pub struct SyntheticSource {
    pub truths: Vec<GeneratorTruth>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSource {
    pub fn new(truths: Vec<GeneratorTruth>, noise_sigma: f64, seed: u64) -> Self {
        SyntheticSource {
            truths,
            noise_sigma,
            seed,
        }
    }
}

impl TraceSource for SyntheticSource {
    fn scan(&mut self, req: &ScanRequest) -> Result<ComplexTrace, CampaignError> {
        let truth = self.truths.get(req.resonator).ok_or_else(|| {
            CampaignError::Source(format!("no truth for resonator {}", req.resonator))
        })?;
        let noise = NoiseSpec::new(self.noise_sigma, splitmix64(self.seed) ^ req.id)?;
        let grid = req.grid();
        let mut t = truth.clone();
        t.drive.power_dbm = req.power_dbm;
        t.drive.attenuation_db = req.attenuation_db;
        match truth.resonance_at_field(req.field_t, req.orientation) {
            Ok(res) => {
                t.resonance = res;
                let t = t.at_power(req.power_dbm)?;
                Ok(generate_trace(&t, &grid, &noise)?)
            }
            // Beyond the critical field there is no resonance: background only.
            Err(ModelError::Domain { .. }) => {
                let mut flat = t;
                flat.resonance = ResonanceParams::new(1.0, 1e-300, 1.0)?;
                flat.kerr = KerrModelParams::zero();
                flat.power_dependent_loss = false;
                Ok(generate_trace(&flat, &grid, &noise)?)
            }
            Err(e) => Err(e.into()),
        }
    }
}

fn scan_path(dir: &Path, id: u64) -> PathBuf {
    dir.join(format!("scan_{id:05}.csv"))
}

/// Passes scans through and writes each to `dir/scan_NNNNN.csv`.
pub struct RecordingSource<S> {
    inner: S,
    dir: PathBuf,
}

impl<S: TraceSource> RecordingSource<S> {
    pub fn new(inner: S, dir: impl Into<PathBuf>) -> Result<Self, CampaignError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(RecordingSource { inner, dir })
    }
}

impl<S: TraceSource> TraceSource for RecordingSource<S> {
    fn scan(&mut self, req: &ScanRequest) -> Result<ComplexTrace, CampaignError> {
        let t = self.inner.scan(req)?;
        save_trace(&t, &scan_path(&self.dir, req.id))?;
        Ok(t)
    }
}

/// Serves scans recorded by [`RecordingSource`], checking that each file
/// matches the requested grid and drive.
pub struct ReplaySource {
    dir: PathBuf,
}

impl ReplaySource {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplaySource { dir: dir.into() }
    }
}

impl TraceSource for ReplaySource {
    fn scan(&mut self, req: &ScanRequest) -> Result<ComplexTrace, CampaignError> {
        let path = scan_path(&self.dir, req.id);
        let t = ingest_trace(&path)
            .map_err(|e| CampaignError::Source(format!("{}: {e}", path.display())))?;
        if t.freqs() != req.grid().as_slice()
            || t.power_dbm() != req.power_dbm
            || t.attenuation_db() != req.attenuation_db
        {
            return Err(CampaignError::Source(format!(
                "{} does not match scan request {} (grid or drive differ)",
                path.display(),
                req.id
            )));
        }
        Ok(t)
    }
}
