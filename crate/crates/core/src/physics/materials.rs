//! Film and geometry descriptions plus the quarter-wave design chain.

use serde::{Deserialize, Serialize};

use super::constants::{BCS_GAP_RATIO, K_B};
use crate::error::ModelError;

pub const DEFAULT_DEPAIRING_EXPONENT: f64 = 2.21;

/// Serializable film description; every quantity except the exponent is
/// optional because each model needs a different subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilmSpec {
    /// Sheet kinetic inductance, H/sq.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lk_sheet: Option<f64>,
    /// Film thickness, m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thickness_t: Option<f64>,
    /// Critical temperature, K.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_temp_tc: Option<f64>,
    /// Normal-state sheet resistance, Ω/sq.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sheet_resistance: Option<f64>,
    /// Zero-field gap, J. Derived from `T_C` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_delta0: Option<f64>,
    /// Electron diffusion constant, m²/s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diffusion_d: Option<f64>,
    /// Depairing current of the wire, A.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depairing_current_istar: Option<f64>,
    /// Switching current of the wire, A.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switching_current_isw: Option<f64>,
    /// Mean grain size for granular films, m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grain_size_a: Option<f64>,
    #[serde(default = "default_exponent")]
    pub depairing_exponent_n: f64,
}

fn default_exponent() -> f64 {
    DEFAULT_DEPAIRING_EXPONENT
}

impl Default for FilmSpec {
    fn default() -> Self {
        FilmSpec {
            lk_sheet: None,
            thickness_t: None,
            critical_temp_tc: None,
            sheet_resistance: None,
            gap_delta0: None,
            diffusion_d: None,
            depairing_current_istar: None,
            switching_current_isw: None,
            grain_size_a: None,
            depairing_exponent_n: DEFAULT_DEPAIRING_EXPONENT,
        }
    }
}

/// Validated [`FilmSpec`]: every quantity present is finite and positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FilmSpec", into = "FilmSpec")]
pub struct FilmProperties {
    spec: FilmSpec,
}

impl TryFrom<FilmSpec> for FilmProperties {
    type Error = ModelError;
    fn try_from(spec: FilmSpec) -> Result<Self, ModelError> {
        FilmProperties::new(spec)
    }
}

impl From<FilmProperties> for FilmSpec {
    fn from(f: FilmProperties) -> Self {
        f.spec
    }
}

macro_rules! film_getter {
    ($name:ident, $field:ident) => {
        pub fn $name(&self) -> Result<f64, ModelError> {
            self.spec
                .$field
                .ok_or_else(|| ModelError::MissingFields(vec![stringify!($field)]))
        }
    };
}

impl FilmProperties {
    pub fn new(spec: FilmSpec) -> Result<Self, ModelError> {
        let checks: [(&'static str, Option<f64>); 9] = [
            ("lk_sheet", spec.lk_sheet),
            ("thickness_t", spec.thickness_t),
            ("critical_temp_tc", spec.critical_temp_tc),
            ("sheet_resistance", spec.sheet_resistance),
            ("gap_delta0", spec.gap_delta0),
            ("diffusion_d", spec.diffusion_d),
            ("depairing_current_istar", spec.depairing_current_istar),
            ("switching_current_isw", spec.switching_current_isw),
            ("grain_size_a", spec.grain_size_a),
        ];
        for (name, v) in checks {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(ModelError::invalid(name, format!("must be > 0, got {v}")));
                }
            }
        }
        if !(spec.depairing_exponent_n.is_finite() && spec.depairing_exponent_n > 0.0) {
            return Err(ModelError::invalid(
                "depairing_exponent_n",
                format!("must be > 0, got {}", spec.depairing_exponent_n),
            ));
        }
        Ok(FilmProperties { spec })
    }

    pub fn spec(&self) -> &FilmSpec {
        &self.spec
    }

    film_getter!(lk_sheet, lk_sheet);
    film_getter!(thickness, thickness_t);
    film_getter!(critical_temp, critical_temp_tc);
    film_getter!(sheet_resistance, sheet_resistance);
    film_getter!(diffusion, diffusion_d);
    film_getter!(depairing_current, depairing_current_istar);
    film_getter!(switching_current, switching_current_isw);
    film_getter!(grain_size, grain_size_a);

    pub fn depairing_exponent(&self) -> f64 {
        self.spec.depairing_exponent_n
    }

    /// Zero-field gap; `1.764·k_B·T_C` unless given explicitly.
    pub fn gap(&self) -> Result<f64, ModelError> {
        match (self.spec.gap_delta0, self.spec.critical_temp_tc) {
            (Some(g), _) => Ok(g),
            (None, Some(tc)) => Ok(BCS_GAP_RATIO * K_B * tc),
            (None, None) => Err(ModelError::MissingFields(vec![
                "gap_delta0",
                "critical_temp_tc",
            ])),
        }
    }

    /// Collects every missing field among `names` into one error.
    pub(crate) fn require(&self, names: &[&'static str]) -> Result<(), ModelError> {
        let missing: Vec<&'static str> = names
            .iter()
            .copied()
            .filter(|n| self.field(n).is_none())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(ModelError::MissingFields(missing))
        }
    }

    fn field(&self, name: &str) -> Option<f64> {
        let s = &self.spec;
        match name {
            "lk_sheet" => s.lk_sheet,
            "thickness_t" => s.thickness_t,
            "critical_temp_tc" => s.critical_temp_tc,
            "sheet_resistance" => s.sheet_resistance,
            "gap_delta0" => s
                .gap_delta0
                .or(s.critical_temp_tc.map(|tc| BCS_GAP_RATIO * K_B * tc)),
            "diffusion_d" => s.diffusion_d,
            "depairing_current_istar" => s.depairing_current_istar,
            "switching_current_isw" => s.switching_current_isw,
            "grain_size_a" => s.grain_size_a,
            _ => None,
        }
    }
}

/// Serializable geometry description.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    /// Wire width, m.
    pub width_w: f64,
    /// Resonator length, m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_l: Option<f64>,
    /// Inductance per unit length, H/m. Derived as `L_k/w` from the film when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inductance_per_length: Option<f64>,
    /// Capacitance per unit length, F/m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacitance_per_length: Option<f64>,
}

/// A wire resonator: width, length and per-length line constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeometrySpec", into = "GeometrySpec")]
pub struct ResonatorGeometry {
    width_w: f64,
    length_l: Option<f64>,
    inductance_per_length: f64,
    capacitance_per_length: Option<f64>,
}

impl TryFrom<GeometrySpec> for ResonatorGeometry {
    type Error = ModelError;
    fn try_from(g: GeometrySpec) -> Result<Self, ModelError> {
        let l_tilde = g
            .inductance_per_length
            .ok_or(ModelError::MissingFields(vec!["inductance_per_length"]))?;
        ResonatorGeometry::new(g.width_w, g.length_l, l_tilde, g.capacitance_per_length)
    }
}

impl From<ResonatorGeometry> for GeometrySpec {
    fn from(g: ResonatorGeometry) -> Self {
        GeometrySpec {
            width_w: g.width_w,
            length_l: g.length_l,
            inductance_per_length: Some(g.inductance_per_length),
            capacitance_per_length: g.capacitance_per_length,
        }
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ModelError::invalid(name, format!("must be > 0, got {v}")))
    }
}

impl ResonatorGeometry {
    pub fn new(
        width_w: f64,
        length_l: Option<f64>,
        inductance_per_length: f64,
        capacitance_per_length: Option<f64>,
    ) -> Result<Self, ModelError> {
        check_positive("width_w", width_w)?;
        check_positive("inductance_per_length", inductance_per_length)?;
        if let Some(l) = length_l {
            check_positive("length_l", l)?;
        }
        if let Some(c) = capacitance_per_length {
            check_positive("capacitance_per_length", c)?;
        }
        Ok(ResonatorGeometry {
            width_w,
            length_l,
            inductance_per_length,
            capacitance_per_length,
        })
    }

    /// `L̃ = L_k / w` from the film's sheet inductance.
    pub fn from_film(
        film: &FilmProperties,
        width_w: f64,
        length_l: Option<f64>,
    ) -> Result<Self, ModelError> {
        check_positive("width_w", width_w)?;
        let lk = film.lk_sheet()?;
        Self::new(width_w, length_l, lk / width_w, None)
    }

    /// Resolve a [`GeometrySpec`] against a film, filling `L̃` if needed.
    pub fn from_spec(
        spec: &GeometrySpec,
        film: Option<&FilmProperties>,
    ) -> Result<Self, ModelError> {
        let l_tilde = match (spec.inductance_per_length, film) {
            (Some(l), _) => l,
            (None, Some(f)) => {
                check_positive("width_w", spec.width_w)?;
                f.lk_sheet()? / spec.width_w
            }
            (None, None) => {
                return Err(ModelError::MissingFields(vec![
                    "inductance_per_length",
                    "lk_sheet",
                ]))
            }
        };
        Self::new(
            spec.width_w,
            spec.length_l,
            l_tilde,
            spec.capacitance_per_length,
        )
    }

    pub fn width(&self) -> f64 {
        self.width_w
    }
    pub fn length(&self) -> Result<f64, ModelError> {
        self.length_l
            .ok_or(ModelError::MissingFields(vec!["length_l"]))
    }
    pub fn length_opt(&self) -> Option<f64> {
        self.length_l
    }
    pub fn inductance_per_length(&self) -> f64 {
        self.inductance_per_length
    }
    pub fn capacitance_per_length(&self) -> Result<f64, ModelError> {
        self.capacitance_per_length
            .ok_or(ModelError::MissingFields(vec!["capacitance_per_length"]))
    }
    pub fn capacitance_opt(&self) -> Option<f64> {
        self.capacitance_per_length
    }

    /// Total inductance `L_t = L̃·l`.
    pub fn total_inductance(&self) -> Result<f64, ModelError> {
        Ok(self.inductance_per_length * self.length()?)
    }

    pub fn with_length(&self, length_l: f64) -> Result<Self, ModelError> {
        Self::new(
            self.width_w,
            Some(length_l),
            self.inductance_per_length,
            self.capacitance_per_length,
        )
    }

    pub fn with_capacitance(&self, c_tilde: f64) -> Result<Self, ModelError> {
        Self::new(
            self.width_w,
            self.length_l,
            self.inductance_per_length,
            Some(c_tilde),
        )
    }
}

/// Fully resolved quarter-wave line: `f = 1/(4 l sqrt(L̃ C̃))`, `Z = sqrt(L̃/C̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarterWaveChain {
    pub inductance_per_length: f64,
    pub capacitance_per_length: f64,
    pub length: f64,
    pub frequency_hz: f64,
    pub impedance: f64,
}

impl QuarterWaveChain {
    /// Close the chain from `L̃` plus any two independent quantities among
    /// frequency, length and `C̃`/`Z` (which are interchangeable given `L̃`).
    pub fn resolve(
        inductance_per_length: f64,
        frequency_hz: Option<f64>,
        length: Option<f64>,
        capacitance_per_length: Option<f64>,
        impedance: Option<f64>,
    ) -> Result<Self, ModelError> {
        check_positive("inductance_per_length", inductance_per_length)?;
        for (n, v) in [
            ("frequency_hz", frequency_hz),
            ("length_l", length),
            ("capacitance_per_length", capacitance_per_length),
            ("impedance", impedance),
        ] {
            if let Some(v) = v {
                check_positive(n, v)?;
            }
        }
        let lt = inductance_per_length;
        let c = capacitance_per_length.or(impedance.map(|z| lt / (z * z)));
        let (c, l, f) = match (c, length, frequency_hz) {
            (Some(c), Some(l), _) => (c, l, 1.0 / (4.0 * l * (lt * c).sqrt())),
            (Some(c), None, Some(f)) => (c, 1.0 / (4.0 * f * (lt * c).sqrt()), f),
            (None, Some(l), Some(f)) => (1.0 / (16.0 * l * l * f * f * lt), l, f),
            _ => {
                let mut missing = Vec::new();
                if c.is_none() {
                    missing.push("capacitance_per_length (or impedance)");
                }
                if length.is_none() {
                    missing.push("length_l");
                }
                if frequency_hz.is_none() {
                    missing.push("f0_hz");
                }
                return Err(ModelError::MissingFields(missing));
            }
        };
        Ok(QuarterWaveChain {
            inductance_per_length: lt,
            capacitance_per_length: c,
            length: l,
            frequency_hz: f,
            impedance: (lt / c).sqrt(),
        })
    }

    pub fn geometry(&self, width_w: f64) -> Result<ResonatorGeometry, ModelError> {
        ResonatorGeometry::new(
            width_w,
            Some(self.length),
            self.inductance_per_length,
            Some(self.capacitance_per_length),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nbn() -> FilmProperties {
        FilmProperties::new(FilmSpec {
            lk_sheet: Some(89e-12),
            thickness_t: Some(13e-9),
            critical_temp_tc: Some(4.0),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn geometry_from_film_uses_sheet_over_width() {
        let g = ResonatorGeometry::from_film(&nbn(), 200e-9, Some(376e-6)).unwrap();
        assert!((g.inductance_per_length() - 4.45e-4).abs() < 1e-16);
        assert!(g.capacitance_per_length().is_err());
    }

    #[test]
    fn film_rejects_non_positive_and_reports_missing() {
        let bad = FilmSpec {
            thickness_t: Some(-1.0),
            ..Default::default()
        };
        assert!(FilmProperties::new(bad).is_err());
        let f = nbn();
        match f.require(&["grain_size_a", "switching_current_isw", "thickness_t"]) {
            Err(ModelError::MissingFields(m)) => {
                assert_eq!(m, vec!["grain_size_a", "switching_current_isw"])
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!((f.gap().unwrap() - 1.764 * K_B * 4.0).abs() < 1e-40);
    }

    #[test]
    fn chain_closes_from_any_two() {
        let lt = 4.45e-4;
        let a = QuarterWaveChain::resolve(lt, Some(4.0743e9), Some(376e-6), None, None).unwrap();
        let b = QuarterWaveChain::resolve(
            lt,
            Some(4.0743e9),
            None,
            Some(a.capacitance_per_length),
            None,
        )
        .unwrap();
        let c = QuarterWaveChain::resolve(lt, None, Some(376e-6), None, Some(a.impedance)).unwrap();
        assert!((b.length - 376e-6).abs() / 376e-6 < 1e-12);
        assert!((c.frequency_hz - 4.0743e9).abs() / 4.0743e9 < 1e-12);
        assert!(QuarterWaveChain::resolve(lt, Some(4.0743e9), None, None, None).is_err());
    }
}
