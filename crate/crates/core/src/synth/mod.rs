//! Seeded synthetic data and brute-force oracles.
//!
//! Noise is additive complex Gaussian, independent per quadrature, drawn
//! from ChaCha8 seeded with a 64-bit value. Identical truth, grid and
//! noise spec give bit-identical output.

mod oracle;
pub mod scenarios;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::fit::{ComplexTrace, FieldPoint, FieldSweepSeries, Orientation};
use crate::physics::{
    bifurcation_onset, drive_flux_from_power, hanger_response, inplane_freq_shift, inverse_qi,
    photon_number, photon_scale, quadratic_shift_bc, s21_linear, EnvironmentParams, FilmProperties,
    KerrModelParams, LossModelParams, ResonanceParams, ResonatorGeometry, HANGER_CONFIG_C,
};

pub use oracle::{oracle_cubic_roots, oracle_grid_fit, GridAxis, GridBounds, GridFitEstimate};

/// Name of the generator behind [`NoiseSpec`], recorded in outputs.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9), StandardNormal (rand_distr 0.5)";

/// Per-quadrature noise level and seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self, ModelError> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(ModelError::invalid(
                "sigma",
                format!("must be >= 0, got {sigma}"),
            ));
        }
        Ok(NoiseSpec { sigma, seed })
    }

    pub fn none() -> Self {
        NoiseSpec {
            sigma: 0.0,
            seed: 0,
        }
    }

    /// Independent stream for the `index`-th artifact of a family.
    pub fn derive(&self, index: u64) -> Self {
        NoiseSpec {
            sigma: self.sigma,
            seed: splitmix64(self.seed ^ splitmix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15))),
        }
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Source power and line attenuation used to map power onto photon flux.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    pub power_dbm: f64,
    pub attenuation_db: f64,
    #[serde(default = "default_config_c")]
    pub config_c: f64,
}

fn default_config_c() -> f64 {
    HANGER_CONFIG_C
}

impl Default for DriveSpec {
    fn default() -> Self {
        DriveSpec {
            power_dbm: -100.0,
            attenuation_db: 0.0,
            config_c: HANGER_CONFIG_C,
        }
    }
}

/// Field response of a generator: critical fields or the in-plane
/// misalignment model, plus a `Q_i(B)` template.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldResponse {
    /// In-plane critical field, T. When absent the in-plane shift follows
    /// the diffusion model of the film with `theta_b`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_c_parallel: Option<f64>,
    /// Out-of-plane critical field, T.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_c_perp: Option<f64>,
    /// Out-of-plane misalignment of an in-plane field, rad.
    #[serde(default)]
    pub theta_b: f64,
    /// `(B [T], Q_i)` knots, interpolated linearly in B and in ln Q_i.
    /// Empty means `Q_i` stays at its zero-field value.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub qi_template: Vec<(f64, f64)>,
}

/// Everything needed to generate synthetic data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorTruth {
    pub resonance: ResonanceParams,
    pub env: EnvironmentParams,
    /// `K` and the drive flux used by [`generate_trace`]; power maps
    /// recompute the flux from each power.
    pub kerr: KerrModelParams,
    pub loss: LossModelParams,
    pub film: FilmProperties,
    pub geometry: ResonatorGeometry,
    #[serde(default)]
    pub drive: DriveSpec,
    #[serde(default)]
    pub field: FieldResponse,
    /// When true, `γ` follows the loss model at the drive's photon number.
    #[serde(default)]
    pub power_dependent_loss: bool,
}

impl GeneratorTruth {
    /// Copy driven at `power_dbm`, with a consistent flux.
    pub fn at_power(&self, power_dbm: f64) -> Result<Self, ModelError> {
        let mut t = self.clone();
        t.drive.power_dbm = power_dbm;
        t.resonance = t.resonance_at_drive()?;
        let flux = drive_flux_from_power(
            power_dbm,
            t.drive.attenuation_db,
            &t.resonance,
            t.drive.config_c,
        );
        t.kerr = t.kerr.with_drive(flux)?;
        Ok(t)
    }

    /// Resonance with `γ` set self-consistently from the loss model when
    /// enabled.
    fn resonance_at_drive(&self) -> Result<ResonanceParams, ModelError> {
        if !self.power_dependent_loss {
            return Ok(self.resonance);
        }
        let w0 = self.resonance.omega0();
        let mut res = self.resonance;
        for _ in 0..100 {
            let n = photon_number(
                self.drive.power_dbm,
                self.drive.attenuation_db,
                &res,
                self.drive.config_c,
            );
            let gamma = w0 * inverse_qi(n, &self.loss, w0)?;
            let next = ResonanceParams::new(w0, res.kappa(), gamma)?;
            let done = (next.gamma() - res.gamma()).abs() <= 1e-15 * gamma;
            res = next;
            if done {
                break;
            }
        }
        Ok(res)
    }

    /// Relative frequency shift at field `b`.
    pub fn rel_shift(&self, b: f64, orientation: Orientation) -> Result<f64, ModelError> {
        match orientation {
            Orientation::OutOfPlane => {
                let bc = self
                    .field
                    .b_c_perp
                    .ok_or(ModelError::MissingFields(vec!["field.b_c_perp"]))?;
                check_below(b, bc)?;
                quadratic_shift_bc(b, bc)
            }
            Orientation::InPlane => match self.field.b_c_parallel {
                Some(bc) => {
                    check_below(b, bc)?;
                    quadratic_shift_bc(b, bc)
                }
                None => inplane_freq_shift(b, &self.film, &self.geometry, self.field.theta_b),
            },
        }
    }

    /// Internal quality factor at field `b` from the template.
    pub fn q_i_at(&self, b: f64) -> f64 {
        let t = &self.field.qi_template;
        if t.is_empty() {
            return self.resonance.q_internal();
        }
        if b <= t[0].0 {
            return t[0].1;
        }
        for w in t.windows(2) {
            let ((b0, q0), (b1, q1)) = (w[0], w[1]);
            if b <= b1 {
                let s = if b1 > b0 { (b - b0) / (b1 - b0) } else { 1.0 };
                return (q0.ln() + s * (q1.ln() - q0.ln())).exp();
            }
        }
        t[t.len() - 1].1
    }

    /// Resonance at field `b`: shifted `ω₀`, templated `Q_i`, fixed `Q_c`.
    pub fn resonance_at_field(
        &self,
        b: f64,
        orientation: Orientation,
    ) -> Result<ResonanceParams, ModelError> {
        let shift = self.rel_shift(b, orientation)?;
        let f0 = self.resonance.f0_hz() * (1.0 + shift);
        ResonanceParams::from_quality_factors(f0, self.q_i_at(b), self.resonance.q_coupling())
    }
}

fn check_below(b: f64, bc: f64) -> Result<(), ModelError> {
    if !(0.0..=bc).contains(&b) {
        return Err(ModelError::domain(
            "field",
            format!("b = {b} T outside [0, B_C = {bc} T]"),
        ));
    }
    Ok(())
}

fn add_noise(samples: &mut [Complex64], noise: &NoiseSpec) {
    if noise.sigma == 0.0 {
        return;
    }
    let mut rng = noise.rng();
    for s in samples.iter_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *s += Complex64::new(noise.sigma * re, noise.sigma * im);
    }
}

fn check_grid(grid: &[f64]) -> Result<(), ModelError> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ModelError::invalid(
            "grid",
            "frequencies must be strictly increasing",
        ));
    }
    Ok(())
}

/// True when the Kerr term matters at this drive.
fn is_nonlinear(res: &ResonanceParams, kerr: &KerrModelParams) -> bool {
    let expected = 2.0 * photon_scale(res, kerr.drive_amplitude_sq());
    kerr.kerr().abs() * expected > 1e-3 * res.total_rate()
}

/// Noise-free forward model on `grid` for a resonance/drive pair.
pub fn forward_samples(
    grid: &[f64],
    res: &ResonanceParams,
    env: &EnvironmentParams,
    kerr: &KerrModelParams,
) -> Vec<Complex64> {
    if is_nonlinear(res, kerr) {
        grid.iter()
            .map(|&f| hanger_response(f, res, env, kerr).s21)
            .collect()
    } else {
        grid.iter().map(|&f| s21_linear(f, res, env)).collect()
    }
}

/// One trace at the truth's drive.
pub fn generate_trace(
    truth: &GeneratorTruth,
    grid: &[f64],
    noise: &NoiseSpec,
) -> Result<ComplexTrace, ModelError> {
    check_grid(grid)?;
    let res = truth.resonance_at_drive()?;
    let mut samples = forward_samples(grid, &res, &truth.env, &truth.kerr);
    add_noise(&mut samples, noise);
    ComplexTrace::new(
        grid.to_vec(),
        samples,
        truth.drive.power_dbm,
        truth.drive.attenuation_db,
    )
}

/// Traces at ascending powers with their bifurcation flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerMap {
    pub traces: Vec<ComplexTrace>,
    /// True where some grid detuning admits several steady states.
    pub bifurcated: Vec<bool>,
    /// On-resonance photon number of each trace.
    pub photon_numbers: Vec<f64>,
}

pub fn generate_power_map(
    truth: &GeneratorTruth,
    powers: &[f64],
    grid: &[f64],
    noise: &NoiseSpec,
) -> Result<PowerMap, ModelError> {
    check_grid(grid)?;
    if powers.windows(2).any(|w| w[1] < w[0]) {
        return Err(ModelError::invalid("powers", "must be ascending"));
    }
    let mut map = PowerMap {
        traces: Vec::with_capacity(powers.len()),
        bifurcated: Vec::with_capacity(powers.len()),
        photon_numbers: Vec::with_capacity(powers.len()),
    };
    for (k, &p) in powers.iter().enumerate() {
        let t = truth.at_power(p)?;
        let res = t.resonance;
        let total = res.total_rate();
        let xi = photon_scale(&res, t.kerr.drive_amplitude_sq()) * t.kerr.kerr() / total;
        let d_lo = (std::f64::consts::TAU * grid[0] - res.omega0()) / total;
        let d_hi = (std::f64::consts::TAU * grid[grid.len() - 1] - res.omega0()) / total;
        map.bifurcated.push(bifurcation_onset((d_lo, d_hi), xi));
        map.photon_numbers.push(photon_number(
            p,
            t.drive.attenuation_db,
            &res,
            t.drive.config_c,
        ));
        map.traces
            .push(generate_trace(&t, grid, &noise.derive(k as u64))?);
    }
    Ok(map)
}

/// Field sweep with Gaussian noise of `noise.sigma` on the relative shift.
pub fn generate_field_sweep(
    truth: &GeneratorTruth,
    b_values: &[f64],
    orientation: Orientation,
    noise: &NoiseSpec,
) -> Result<FieldSweepSeries, ModelError> {
    let mut rng = noise.rng();
    let mut points = Vec::with_capacity(b_values.len());
    for &b in b_values {
        let mut shift = truth.rel_shift(b, orientation)?;
        if noise.sigma > 0.0 {
            let e: f64 = StandardNormal.sample(&mut rng);
            shift += noise.sigma * e;
        }
        points.push(FieldPoint {
            b,
            rel_shift: shift,
            q_i: truth.q_i_at(b),
            q_c: truth.resonance.q_coupling(),
        });
    }
    FieldSweepSeries::new(orientation, points)
}

/// Uniform grid of `n` points spanning `linewidths` around the resonance.
pub fn linewidth_grid(res: &ResonanceParams, linewidths: f64, n: usize) -> Vec<f64> {
    let lw = res.total_rate() / std::f64::consts::TAU;
    let f0 = res.f0_hz();
    (0..n)
        .map(|k| f0 + lw * linewidths * (k as f64 / (n - 1) as f64 - 0.5))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{FilmSpec, GeometrySpec};

    pub(crate) fn nbn_truth() -> GeneratorTruth {
        let film = FilmProperties::new(FilmSpec {
            lk_sheet: Some(89e-12),
            thickness_t: Some(13e-9),
            critical_temp_tc: Some(4.0),
            diffusion_d: Some(2.8e-5),
            ..Default::default()
        })
        .unwrap();
        let geometry = ResonatorGeometry::from_spec(
            &GeometrySpec {
                width_w: 200e-9,
                length_l: Some(376e-6),
                inductance_per_length: None,
                capacitance_per_length: None,
            },
            Some(&film),
        )
        .unwrap();
        GeneratorTruth {
            resonance: ResonanceParams::from_quality_factors(4.0743e9, 13805.0, 28241.0).unwrap(),
            env: EnvironmentParams::new(0.9, 0.3, 1e-9, 0.05).unwrap(),
            kerr: KerrModelParams::from_hz_per_photon(-4.506, 0.0).unwrap(),
            loss: LossModelParams::at_base_temperature(4e-5, 30.0, 0.4, 2e-5).unwrap(),
            film,
            geometry,
            drive: DriveSpec {
                power_dbm: -60.0,
                attenuation_db: 70.0,
                config_c: 4.0,
            },
            field: FieldResponse {
                b_c_parallel: Some(13.537),
                b_c_perp: Some(1.0766),
                theta_b: 0.0,
                qi_template: vec![],
            },
            power_dependent_loss: false,
        }
    }

    #[test]
    fn zero_noise_equals_forward_model_and_seeds_repeat() {
        let t = nbn_truth().at_power(-60.0).unwrap();
        let grid = linewidth_grid(&t.resonance, 10.0, 401);
        let clean = generate_trace(&t, &grid, &NoiseSpec::none()).unwrap();
        let direct: Vec<Complex64> = grid
            .iter()
            .map(|&f| s21_linear(f, &t.resonance, &t.env))
            .collect();
        assert_eq!(clean.samples(), &direct[..]);
        let n = NoiseSpec::new(1e-3, 7).unwrap();
        assert_eq!(
            generate_trace(&t, &grid, &n).unwrap(),
            generate_trace(&t, &grid, &n).unwrap()
        );
        assert_ne!(
            generate_trace(&t, &grid, &n).unwrap(),
            generate_trace(&t, &grid, &NoiseSpec::new(1e-3, 8).unwrap()).unwrap()
        );
    }

    #[test]
    fn off_resonant_noise_level() {
        let t = nbn_truth();
        let grid = linewidth_grid(&t.resonance, 10.0, 401);
        let clean = generate_trace(&t, &grid, &NoiseSpec::none()).unwrap();
        let noisy = generate_trace(&t, &grid, &NoiseSpec::new(1e-3, 11).unwrap()).unwrap();
        // Outer 100 points on each side are off resonance.
        let d: Vec<f64> = clean
            .samples()
            .iter()
            .zip(noisy.samples())
            .enumerate()
            .filter(|(k, _)| *k < 100 || *k > 300)
            .flat_map(|(_, (a, b))| [(b - a).re, (b - a).im])
            .collect();
        let sd = (d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64).sqrt();
        assert!((sd / 1e-3 - 1.0).abs() < 0.1, "{sd}");
    }

    #[test]
    fn out_of_plane_sweep_is_exact_without_noise() {
        let t = nbn_truth();
        let b: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let s = generate_field_sweep(&t, &b, Orientation::OutOfPlane, &NoiseSpec::none()).unwrap();
        for p in &s.points {
            assert_eq!(p.rel_shift, -0.25 * (p.b / 1.0766).powi(2));
        }
        assert!(
            generate_field_sweep(&t, &[2.0], Orientation::OutOfPlane, &NoiseSpec::none()).is_err()
        );
    }

    #[test]
    fn q_i_template_interpolates_in_log() {
        let mut t = nbn_truth();
        t.field.qi_template = vec![(0.0, 1e4), (1.0, 1e6)];
        assert!((t.q_i_at(0.5) / 1e5 - 1.0).abs() < 1e-12);
        assert_eq!(t.q_i_at(2.0), 1e6);
    }
}
