//! Field-sweep fits: critical field, misalignment angle, and the λ/4
//! capacitance inversion.

use std::collections::BTreeMap;

use super::{FieldSweepSeries, FitDiagnostics, FitKind, FitResult, Orientation};
use crate::error::{FitError, ModelError};
use crate::physics::{shift_prefactor, FilmProperties, ResonatorGeometry};

/// Least-squares curvature `c` of `rel_shift = −c·B²` with its 1σ error
/// and the residual sum of squares.
fn curvature(series: &FieldSweepSeries) -> Result<(f64, f64, f64), FitError> {
    let pts = &series.points;
    let m = pts.len();
    if m < 5 {
        return Err(FitError::InsufficientData(format!(
            "field fit needs at least 5 points, got {m}"
        )));
    }
    let mean = pts.iter().map(|p| p.rel_shift).sum::<f64>() / m as f64;
    if mean > 0.0 {
        return Err(FitError::PositiveShiftDominates { mean_shift: mean });
    }
    let sxx: f64 = pts.iter().map(|p| p.b.powi(4)).sum();
    if !(sxx > 0.0) {
        return Err(FitError::InsufficientData(
            "all points at zero field".into(),
        ));
    }
    let sxy: f64 = pts.iter().map(|p| -p.b * p.b * p.rel_shift).sum();
    let c = sxy / sxx;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.rel_shift + c * p.b * p.b).powi(2))
        .sum();
    let se = (rss / (m - 1) as f64 / sxx).sqrt();
    Ok((c, se, rss))
}

/// Critical field from `rel_shift = −¼(B/B_C)²`.
pub fn fit_field_sweep_bc(series: &FieldSweepSeries) -> Result<FitResult, FitError> {
    let (c, se_c, rss) = curvature(series)?;
    if !(c > 0.0) {
        let m = series.points.len() as f64;
        return Err(FitError::PositiveShiftDominates {
            mean_shift: series.points.iter().map(|p| p.rel_shift).sum::<f64>() / m,
        });
    }
    // c = 1/(4B_C²).
    let b_c = 0.5 / c.sqrt();
    let se_bc = 0.5 * b_c * se_c / c;
    let m = series.points.len();
    Ok(FitResult::build(
        FitKind::FieldSweep,
        vec![("b_c", b_c), ("curvature", c)],
        Some(vec![("b_c", se_bc), ("curvature", se_c)]),
        rss,
        true,
        0,
        FitDiagnostics {
            n_points: m,
            dof: m - 1,
            notes: vec![format!("{:?}", series.orientation)],
            ..Default::default()
        },
    ))
}

/// Misalignment from in-plane sweeps at several widths: per width the
/// pair-breaking `D_p`, then `D_p = D·(1 + θ²·(w/t)²)` by weighted
/// regression on `(w/t)²`.
pub fn fit_misalignment(
    series_by_width: &[(f64, FieldSweepSeries)],
    film: &FilmProperties,
) -> Result<FitResult, FitError> {
    if series_by_width.len() < 3 {
        return Err(FitError::InsufficientData(format!(
            "misalignment needs at least 3 widths, got {}",
            series_by_width.len()
        )));
    }
    if series_by_width
        .iter()
        .any(|(_, s)| s.orientation != Orientation::InPlane)
    {
        return Err(FitError::Model(ModelError::invalid(
            "orientation",
            "misalignment uses in-plane series only",
        )));
    }
    let k0 = shift_prefactor(film)?;
    let t = film.thickness()?;
    let mut rows = Vec::new();
    for (w, s) in series_by_width {
        if !(*w > 0.0) {
            return Err(FitError::Model(ModelError::invalid(
                "width",
                format!("must be > 0, got {w}"),
            )));
        }
        let (c, se, _) = curvature(s)?;
        rows.push(((w / t).powi(2), c / k0, se / k0));
    }
    // Weighted least squares; a small floor keeps exact data finite.
    let floor = 1e-12 * rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
    let weights: Vec<f64> = rows
        .iter()
        .map(|r| 1.0 / (r.2 * r.2 + floor * floor))
        .collect();
    let (mut s0, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((x, y, _), wt) in rows.iter().zip(&weights) {
        s0 += wt;
        sx += wt * x;
        sxx += wt * x * x;
        sy += wt * y;
        sxy += wt * x * y;
    }
    let det = s0 * sxx - sx * sx;
    let slope = (s0 * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let var_slope = s0 / det;
    let var_int = sxx / det;
    let cov = -sx / det;
    let chi2: f64 = rows
        .iter()
        .zip(&weights)
        .map(|((x, y, _), wt)| wt * (y - intercept - slope * x).powi(2))
        .sum();
    let se_slope = var_slope.sqrt();
    let x_max = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    if slope < -(2.0 * se_slope + 1e-10 * intercept.abs() / x_max) {
        return Err(FitError::NegativeSlope {
            slope,
            std_error: se_slope,
            points: rows.iter().map(|r| (r.0, r.1)).collect(),
        });
    }
    if !(intercept > 0.0) {
        return Err(FitError::Model(ModelError::domain(
            "fit_misalignment",
            format!("non-positive diffusion intercept {intercept}"),
        )));
    }
    let mut notes = Vec::new();
    let (theta, se_theta) = if slope > 0.0 {
        let theta = (slope / intercept).sqrt();
        let gs = 1.0 / (2.0 * theta * intercept);
        let gd = -slope / (2.0 * theta * intercept * intercept);
        let v = gs * gs * var_slope + 2.0 * gs * gd * cov + gd * gd * var_int;
        (theta, v.max(0.0).sqrt())
    } else {
        notes.push("slope not significantly negative; angle clamped to 0".into());
        (0.0, (se_slope / intercept).sqrt())
    };
    let n = rows.len();
    Ok(FitResult::build(
        FitKind::Misalignment,
        vec![
            ("d", intercept),
            ("slope", slope),
            ("theta_rad", theta),
            ("theta_deg", theta.to_degrees()),
        ],
        Some(vec![
            ("d", var_int.sqrt()),
            ("slope", se_slope),
            ("theta_rad", se_theta),
            ("theta_deg", se_theta.to_degrees()),
        ]),
        chi2,
        true,
        0,
        FitDiagnostics {
            n_points: n,
            dof: n - 2,
            notes,
            ..Default::default()
        },
    ))
}

/// Per-width pair-breaking diffusion constants, keyed by width in nm.
pub fn pair_breaking_by_width(
    series_by_width: &[(f64, FieldSweepSeries)],
    film: &FilmProperties,
) -> Result<BTreeMap<u64, (f64, f64)>, FitError> {
    let k0 = shift_prefactor(film)?;
    series_by_width
        .iter()
        .map(|(w, s)| {
            let (c, se, _) = curvature(s)?;
            Ok(((w * 1e9).round() as u64, (c / k0, se / k0)))
        })
        .collect()
}

/// `C̃ = 1/(16·l²·f²·L̃)`, the inversion of the λ/4 frequency.
pub fn fit_ctilde_from_frequency(
    f_measured: f64,
    geom_partial: &ResonatorGeometry,
) -> Result<f64, ModelError> {
    if !(f_measured > 0.0 && f_measured.is_finite()) {
        return Err(ModelError::invalid(
            "f_measured",
            format!("must be > 0, got {f_measured}"),
        ));
    }
    let l = geom_partial.length()?;
    Ok(1.0 / (16.0 * l * l * f_measured * f_measured * geom_partial.inductance_per_length()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::FieldPoint;
    use crate::physics::{
        characteristic_impedance, quadratic_shift_bc, quarterwave_frequency, FilmSpec,
    };

    fn series(bc: f64, n: usize, b_max: f64) -> FieldSweepSeries {
        let pts = (0..n)
            .map(|k| {
                let b = b_max * k as f64 / (n - 1) as f64;
                FieldPoint {
                    b,
                    rel_shift: quadratic_shift_bc(b, bc).unwrap(),
                    q_i: 1e4,
                    q_c: 2e4,
                }
            })
            .collect();
        FieldSweepSeries::new(Orientation::OutOfPlane, pts).unwrap()
    }

    #[test]
    fn exact_bc_recovery() {
        let r = fit_field_sweep_bc(&series(13.537, 25, 6.0)).unwrap();
        assert!((r.param("b_c").unwrap() / 13.537 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn positive_shift_rejected() {
        let mut s = series(10.0, 10, 3.0);
        for p in &mut s.points {
            p.rel_shift = -p.rel_shift;
        }
        assert!(matches!(
            fit_field_sweep_bc(&s),
            Err(FitError::PositiveShiftDominates { .. })
        ));
    }

    #[test]
    fn ctilde_inversion_round_trip() {
        let film = FilmProperties::new(FilmSpec {
            lk_sheet: Some(89e-12),
            ..Default::default()
        })
        .unwrap();
        let g = ResonatorGeometry::from_film(&film, 200e-9, Some(376e-6)).unwrap();
        let c = fit_ctilde_from_frequency(4.0743e9, &g).unwrap();
        let full = g.with_capacitance(c).unwrap();
        assert!((quarterwave_frequency(&full).unwrap() / 4.0743e9 - 1.0).abs() < 1e-12);
        assert!((c / 60e-12 - 1.0).abs() < 0.02, "{c}");
        assert!((characteristic_impedance(&full).unwrap() / 2725.0 - 1.0).abs() < 0.01);
        let c_half = fit_ctilde_from_frequency(4.0743e9 / 2.0, &g).unwrap();
        assert!((c_half / c - 4.0).abs() < 1e-12);
    }
}
