//! Campaign configuration (TOML, `schema = 1`).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CampaignError, ModelError};
use crate::fit::{Orientation, QC_MAX_STD_ERROR};
use crate::physics::{
    EnvironmentParams, FilmProperties, FilmSpec, GeometrySpec, KerrModelParams, LossModelParams,
    ResonanceParams, ResonatorGeometry, HANGER_CONFIG_C,
};
use crate::synth::{DriveSpec, FieldResponse, GeneratorTruth};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub schema: u32,
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scan: ScanSettings,
    #[serde(default)]
    pub qc: QcSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_scan: Option<PowerScanSettings>,
    #[serde(default)]
    pub sweep: Vec<SweepSpec>,
    #[serde(default)]
    pub simulation: SimulationSettings,
    #[serde(default)]
    pub films: BTreeMap<String, FilmSpec>,
    pub resonator: Vec<ResonatorSpec>,
}

/// Scan windows and the probe drive used for tracking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSettings {
    /// Width of the downward search window below the previous `f₀`.
    pub fast_width_hz: f64,
    pub fast_points: usize,
    /// Detail span in units of the linewidth `(κ+γ)/2π`.
    pub detail_linewidths: f64,
    /// Fixed detail span; overrides `detail_linewidths` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail_width_hz: Option<f64>,
    pub detail_points: usize,
    pub power_dbm: f64,
    pub attenuation_db: f64,
    pub config_c: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings {
            fast_width_hz: 80e6,
            fast_points: 801,
            detail_linewidths: 20.0,
            detail_width_hz: None,
            detail_points: 401,
            power_dbm: -60.0,
            attenuation_db: 70.0,
            config_c: HANGER_CONFIG_C,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QcSettings {
    pub max_std_error: f64,
}

impl Default for QcSettings {
    fn default() -> Self {
        QcSettings {
            max_std_error: QC_MAX_STD_ERROR,
        }
    }
}

/// Power scans taken during the first sweep whenever the field reaches one
/// of `fields_t`. The scan at zero field also feeds the Kerr fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerScanSettings {
    pub powers_dbm: Vec<f64>,
    #[serde(default = "zero_field")]
    pub fields_t: Vec<f64>,
}

fn zero_field() -> Vec<f64> {
    vec![0.0]
}

/// One single-direction field sweep starting at zero field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub orientation: Orientation,
    pub max_field_t: f64,
    pub step_t: f64,
    #[serde(default = "default_ramp")]
    pub ramp_mt_per_min: f64,
    #[serde(default = "default_settle")]
    pub settle_s: f64,
}

fn default_ramp() -> f64 {
    100.0
}
fn default_settle() -> f64 {
    120.0
}

impl SweepSpec {
    /// Field set-points `0, step, 2·step, …, max`.
    pub fn fields(&self) -> Vec<f64> {
        let n = (self.max_field_t / self.step_t + 1e-9).floor() as usize;
        let mut v: Vec<f64> = (0..=n).map(|k| k as f64 * self.step_t).collect();
        if self.max_field_t - v[n] > 1e-9 * self.step_t {
            v.push(self.max_field_t);
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSettings {
    #[serde(default)]
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorSpec {
    pub name: String,
    pub design_f0_hz: f64,
    pub film: String,
    pub geometry: GeometrySpec,
    /// Generator parameters for simulated campaigns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<SimTruth>,
}

/// Compact generator description for one resonator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimTruth {
    /// Zero-field frequency; defaults to the design value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0_hz: Option<f64>,
    pub q_i: f64,
    pub q_c: f64,
    #[serde(default)]
    pub kerr_hz_per_photon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_c_parallel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_c_perp: Option<f64>,
    #[serde(default)]
    pub theta_b_deg: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub qi_template: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env: Option<EnvironmentParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossModelParams>,
    #[serde(default)]
    pub power_dependent_loss: bool,
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self, CampaignError> {
        let cfg: CampaignConfig =
            toml::from_str(text).map_err(|e| CampaignError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CampaignError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String, CampaignError> {
        toml::to_string(self).map_err(|e| CampaignError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        let bad = |m: String| Err(CampaignError::Config(m));
        if self.schema != SCHEMA_VERSION {
            return bad(format!(
                "schema {} is not supported (expected {SCHEMA_VERSION})",
                self.schema
            ));
        }
        let s = &self.scan;
        if !(s.fast_width_hz > 0.0) {
            return bad(format!(
                "scan.fast_width_hz must be > 0, got {}",
                s.fast_width_hz
            ));
        }
        if s.fast_points < 8 || s.detail_points < 8 {
            return bad("scan point counts must be >= 8".into());
        }
        if !(s.detail_linewidths > 0.0) {
            return bad(format!(
                "scan.detail_linewidths must be > 0, got {}",
                s.detail_linewidths
            ));
        }
        if let Some(w) = s.detail_width_hz {
            if !(w > 0.0 && w <= s.fast_width_hz) {
                return bad(format!(
                    "scan.detail_width_hz = {w} must lie in (0, fast_width_hz]"
                ));
            }
        }
        if !(self.qc.max_std_error > 0.0) {
            return bad("qc.max_std_error must be > 0".into());
        }
        if !(self.simulation.noise_sigma >= 0.0) {
            return bad("simulation.noise_sigma must be >= 0".into());
        }
        for (k, sw) in self.sweep.iter().enumerate() {
            if !(sw.step_t > 0.0) {
                return bad(format!("sweep[{k}].step_t must be > 0, got {}", sw.step_t));
            }
            if !(sw.max_field_t >= 0.0) {
                return bad(format!("sweep[{k}].max_field_t must be >= 0"));
            }
            if !(sw.ramp_mt_per_min > 0.0) {
                return bad(format!(
                    "sweep[{k}].ramp_mt_per_min must be > 0, got {}",
                    sw.ramp_mt_per_min
                ));
            }
            if !(sw.settle_s >= 0.0) {
                return bad(format!("sweep[{k}].settle_s must be >= 0"));
            }
        }
        if let Some(p) = &self.power_scan {
            if p.powers_dbm.is_empty() || p.powers_dbm.windows(2).any(|w| w[1] <= w[0]) {
                return bad(
                    "power_scan.powers_dbm must be non-empty and strictly ascending".into(),
                );
            }
            if p.fields_t.iter().any(|b| !(*b >= 0.0)) {
                return bad("power_scan.fields_t must be >= 0".into());
            }
        }
        if self.resonator.is_empty() {
            return bad("no resonators".into());
        }
        for r in &self.resonator {
            if !(r.design_f0_hz > 0.0) {
                return bad(format!("resonator `{}`: design_f0_hz must be > 0", r.name));
            }
            self.film_of(r)?;
            self.geometry_of(r)?;
        }
        Ok(())
    }

    pub fn film_of(&self, r: &ResonatorSpec) -> Result<FilmProperties, CampaignError> {
        let spec = self.films.get(&r.film).ok_or_else(|| {
            CampaignError::Config(format!(
                "resonator `{}` references unknown film `{}`",
                r.name, r.film
            ))
        })?;
        FilmProperties::new(spec.clone())
            .map_err(|e| CampaignError::Config(format!("film `{}`: {e}", r.film)))
    }

    pub fn geometry_of(&self, r: &ResonatorSpec) -> Result<ResonatorGeometry, CampaignError> {
        let film = self.film_of(r)?;
        ResonatorGeometry::from_spec(&r.geometry, Some(&film))
            .map_err(|e| CampaignError::Config(format!("resonator `{}` geometry: {e}", r.name)))
    }

    /// Generator truth of every resonator; fails when any lacks `truth`.
    pub fn generator_truths(&self) -> Result<Vec<GeneratorTruth>, CampaignError> {
        self.resonator
            .iter()
            .map(|r| self.generator_truth(r))
            .collect()
    }

    pub fn generator_truth(&self, r: &ResonatorSpec) -> Result<GeneratorTruth, CampaignError> {
        let t = r.truth.as_ref().ok_or_else(|| {
            CampaignError::Config(format!(
                "resonator `{}` has no [truth] for simulation",
                r.name
            ))
        })?;
        let drive = DriveSpec {
            power_dbm: self.scan.power_dbm,
            attenuation_db: self.scan.attenuation_db,
            config_c: self.scan.config_c,
        };
        t.build(
            r.design_f0_hz,
            self.film_of(r)?,
            self.geometry_of(r)?,
            drive,
        )
        .map_err(|e| CampaignError::Config(format!("resonator `{}` truth: {e}", r.name)))
    }
}

impl SimTruth {
    /// Generator truth for one resonator. `design_f0_hz` is used when no
    /// `f0_hz` is given; missing loss parameters give a power-independent
    /// `Q_i`.
    pub fn build(
        &self,
        design_f0_hz: f64,
        film: FilmProperties,
        geometry: ResonatorGeometry,
        drive: DriveSpec,
    ) -> Result<GeneratorTruth, ModelError> {
        let resonance = ResonanceParams::from_quality_factors(
            self.f0_hz.unwrap_or(design_f0_hz),
            self.q_i,
            self.q_c,
        )?;
        let loss = match self.loss {
            Some(l) => l,
            None => LossModelParams::at_base_temperature(0.0, 1.0, 1.0, 1.0 / self.q_i)?,
        };
        Ok(GeneratorTruth {
            resonance,
            env: self.env.unwrap_or_else(EnvironmentParams::unit),
            kerr: KerrModelParams::from_hz_per_photon(self.kerr_hz_per_photon, 0.0)?,
            loss,
            film,
            geometry,
            drive,
            field: FieldResponse {
                b_c_parallel: self.b_c_parallel,
                b_c_perp: self.b_c_perp,
                theta_b: self.theta_b_deg.to_radians(),
                qi_template: self.qi_template.clone(),
            },
            power_dependent_loss: self.power_dependent_loss,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SAMPLE: &str = r#"
schema = 1
name = "unit"
seed = 3

[[sweep]]
orientation = "in_plane"
max_field_t = 1.0
step_t = 0.25

[films.nbn]
lk_sheet = 89e-12
thickness_t = 13e-9

[[resonator]]
name = "w200"
design_f0_hz = 4.0743e9
film = "nbn"
geometry = { width_w = 200e-9, length_l = 376e-6 }
truth = { q_i = 13805, q_c = 28241, b_c_parallel = 13.537 }
"#;

    #[test]
    fn parses_with_defaults() {
        let c = CampaignConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.scan.fast_width_hz, 80e6);
        assert_eq!(c.sweep[0].fields(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let t = c.generator_truths().unwrap();
        assert!((t[0].resonance.q_internal() / 13805.0 - 1.0).abs() < 1e-12);
        let again = CampaignConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn zero_step_is_config_error() {
        let bad = SAMPLE.replace("step_t = 0.25", "step_t = 0.0");
        assert!(matches!(
            CampaignConfig::from_toml(&bad),
            Err(CampaignError::Config(_))
        ));
    }

    #[test]
    fn unknown_keys_and_schema_rejected() {
        assert!(
            CampaignConfig::from_toml(&SAMPLE.replace("seed = 3", "seed = 3\nbogus = 1")).is_err()
        );
        assert!(CampaignConfig::from_toml(&SAMPLE.replace("schema = 1", "schema = 2")).is_err());
    }
}
