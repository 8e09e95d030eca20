//! Metric projection area, tilt correction, polynomial area-to-volume
//! calibration, mass prediction and grading.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::raster::{DepthRaster, RasterMask};

/// Tilt correction cap: division by cos(theta) is ill-conditioned near 90.
pub const THETA_CAP_DEG: f64 = 75.0;

/// Degree-n volume model `v = b0 + b1 a + ... + bn a^n` with fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialModel {
    pub degree: usize,
    /// Coefficients in ascending power order.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    pub residual_variance: f64,
    /// Area range seen at fit time, cm2.
    pub domain: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub area_cm2: f64,
    pub volume_cm3: f64,
}

impl CalibrationSample {
    pub fn validate(&self) -> Result<()> {
        if self.area_cm2 > 0.0 && self.volume_cm3 > 0.0 {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "calibration sample ({}, {}) must be positive",
                self.area_cm2, self.volume_cm3
            )))
        }
    }
}

/// Fruit density in g/cm3. A calibration input, not a measured constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityConfig {
    pub rho: f64,
}

impl DensityConfig {
    pub fn new(rho: f64) -> Result<Self> {
        if (0.5..=1.5).contains(&rho) {
            Ok(Self { rho })
        } else {
            Err(Error::Validation(format!("density {rho} outside [0.5, 1.5] g/cm3")))
        }
    }
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self { rho: 0.95 }
    }
}

/// Commercial grade boundaries in grams, each exclusive at the lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradeThresholds {
    pub a_min: f64,
    pub b_min: f64,
    pub c_min: f64,
}

impl GradeThresholds {
    pub fn validate(&self) -> Result<()> {
        if self.a_min > self.b_min && self.b_min > self.c_min && self.c_min > 0.0 {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "grade thresholds must satisfy a > b > c > 0, got {} {} {}",
                self.a_min, self.b_min, self.c_min
            )))
        }
    }
}

impl Default for GradeThresholds {
    fn default() -> Self {
        Self { a_min: 30.0, b_min: 20.0, c_min: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Grade {
    A,
    B,
    C,
    D,
}

impl std::fmt::Display for Grade {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Grade::A => "A",
            Grade::B => "B",
            Grade::C => "C",
            Grade::D => "D",
        })
    }
}

/// Sum of per-pixel metric footprints `(Z/fx)(Z/fy)` over the fruit, in cm2.
///
/// Fruit pixels without depth take the fruit's mean valid depth, the same
/// rule as completion backfill. Errors when not a single fruit pixel has
/// depth.
pub fn projected_area_metric(
    mask: &RasterMask,
    depth: &DepthRaster,
    k: &CameraIntrinsics,
) -> Result<f64> {
    if !depth.same_dims_mask(mask) || mask.width() != k.width || mask.height() != k.height {
        return Err(Error::Consistency(
            "projected area needs mask, depth and intrinsics of equal dimensions".into(),
        ));
    }
    let mut sum_mm = 0.0f64;
    let mut valid = 0usize;
    let mut missing = 0usize;
    let mut area_m2 = 0.0f64;
    for (u, v) in mask.fruit_pixels() {
        let mm = depth.at(u, v);
        if mm == 0 {
            missing += 1;
        } else {
            let z = mm as f64 / 1000.0;
            area_m2 += (z / k.fx) * (z / k.fy);
            sum_mm += mm as f64;
            valid += 1;
        }
    }
    if valid == 0 {
        return Err(Error::NoDepth("no fruit pixel carries valid depth".into()));
    }
    if missing > 0 {
        let z = sum_mm / valid as f64 / 1000.0;
        area_m2 += missing as f64 * (z / k.fx) * (z / k.fy);
    }
    Ok(area_m2 * 1e4)
}

/// Undo the tilt foreshortening: visible area divided by cos(theta), theta
/// capped at [`THETA_CAP_DEG`]. Returns the corrected area and whether the
/// cap engaged.
pub fn frontal_area(area_visible_cm2: f64, theta_deg: f64) -> (f64, bool) {
    debug_assert!((0.0..90.0).contains(&theta_deg));
    let capped = theta_deg > THETA_CAP_DEG;
    let theta = theta_deg.min(THETA_CAP_DEG);
    (area_visible_cm2 / theta.to_radians().cos(), capped)
}

/// Least-squares polynomial fit of volume against area.
///
/// Solved by SVD of the Vandermonde matrix; normal equations would lose
/// precision for cubic powers of areas up to ~40.
pub fn fit_polynomial(samples: &[CalibrationSample], degree: usize) -> Result<PolynomialModel> {
    if degree < 1 {
        return Err(Error::Validation("polynomial degree must be at least 1".into()));
    }
    let m = samples.len();
    if m < degree + 2 {
        return Err(Error::InsufficientSamples {
            context: "polynomial fit samples",
            got: m,
            need: degree + 2,
        });
    }
    for s in samples {
        s.validate()?;
    }
    let mut distinct: Vec<f64> = samples.iter().map(|s| s.area_cm2).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < degree + 1 {
        return Err(Error::RankDeficient(format!(
            "{} distinct areas cannot determine a degree-{} polynomial",
            distinct.len(),
            degree
        )));
    }

    let n = degree + 1;
    let mut design = DMatrix::zeros(m, n);
    for (i, s) in samples.iter().enumerate() {
        let mut pow = 1.0;
        for j in 0..n {
            design[(i, j)] = pow;
            pow *= s.area_cm2;
        }
    }
    let rhs = DVector::from_iterator(m, samples.iter().map(|s| s.volume_cm3));
    let svd = design.svd(true, true);
    let beta = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::RankDeficient(format!("SVD solve failed: {e}")))?;
    let coefficients: Vec<f64> = beta.iter().copied().collect();

    let mean_y: f64 = samples.iter().map(|s| s.volume_cm3).sum::<f64>() / m as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for s in samples {
        let pred = eval_poly(&coefficients, s.area_cm2);
        ss_res += (s.volume_cm3 - pred).powi(2);
        ss_tot += (s.volume_cm3 - mean_y).powi(2);
    }
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let residual_variance = ss_res / (m - degree - 1) as f64;
    let domain = [
        distinct.first().copied().unwrap(),
        distinct.last().copied().unwrap(),
    ];
    Ok(PolynomialModel { degree, coefficients, r_squared, residual_variance, domain })
}

fn eval_poly(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// A volume prediction, clamped at zero, with a flag for extrapolation or a
/// negative raw value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumePrediction {
    pub volume_cm3: f64,
    pub out_of_domain: bool,
}

/// Evaluate the model; never fails, but flags suspect predictions.
pub fn predict_volume(model: &PolynomialModel, area_cm2: f64) -> VolumePrediction {
    let raw = eval_poly(&model.coefficients, area_cm2);
    let outside = area_cm2 < model.domain[0] || area_cm2 > model.domain[1];
    VolumePrediction {
        volume_cm3: raw.max(0.0),
        out_of_domain: outside || raw < 0.0,
    }
}

/// Mass in grams from volume and density.
pub fn mass_from_volume(volume_cm3: f64, d: &DensityConfig) -> f64 {
    debug_assert!(volume_cm3 >= 0.0);
    d.rho * volume_cm3
}

/// Grade A: > 30 g; B: (20, 30]; C: (10, 20]; D: <= 10 (default thresholds).
pub fn grade(mass_g: f64, t: &GradeThresholds) -> Grade {
    if mass_g > t.a_min {
        Grade::A
    } else if mass_g > t.b_min {
        Grade::B
    } else if mass_g > t.c_min {
        Grade::C
    } else {
        Grade::D
    }
}

/// Read a `area_cm2,volume_cm3` CSV with a mandatory header line.
pub fn load_calibration_csv(path: impl AsRef<Path>) -> Result<Vec<CalibrationSample>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::format(path, "empty calibration file"))?;
    if header.trim() != "area_cm2,volume_cm3" {
        return Err(Error::format(
            path,
            format!("expected header 'area_cm2,volume_cm3', got {header:?}"),
        ));
    }
    let mut samples = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let mut field = |name: &str| -> Result<f64> {
            parts
                .next()
                .ok_or_else(|| Error::Parse { line: i + 1, reason: format!("missing {name}") })?
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse { line: i + 1, reason: format!("non-numeric {name}") })
        };
        let s = CalibrationSample { area_cm2: field("area")?, volume_cm3: field("volume")? };
        s.validate()?;
        samples.push(s);
    }
    Ok(samples)
}

pub fn save_model(model: &PolynomialModel, path: impl AsRef<Path>) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(model)
        .map_err(|e| Error::Validation(format!("model serialization: {e}")))?;
    bytes.push(b'\n');
    std::fs::write(path.as_ref(), bytes)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<PolynomialModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, format!("invalid model JSON: {e}")))
}

/// The reference cubic used across the test suite, in ascending power order.
#[cfg(test)]
pub(crate) const REFERENCE_CUBIC: [f64; 4] = [-24.9926, 7.1919, -0.3063, 0.0052];
