//! Synthetic fruit oracle: a parametric surface of revolution with analytic
//! volume and frontal area, sampled into labeled point clouds, rendered to
//! mask/depth rasters, and optionally occluded.
//!
//! The radial profile is `r(t) = R * sin(pi * t^p)` with `t` running from 0
//! at the stem to 1 at the tip, so both ends close and `p = 1` integrates in
//! closed form — every downstream stage can be checked against exact numbers.

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::cloud::{PointCloud, RegionLabel};
use crate::error::{Error, Result};
use crate::raster::{DepthRaster, RasterMask};

/// Region label cut points along the axis parameter.
pub const STEM_CUT: f64 = 0.15;
pub const TIP_CUT: f64 = 0.85;

/// Minimum camera-visible points a generated cloud must reach.
const MIN_CLOUD_POINTS: usize = 100;

/// Shape of the synthetic fruit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FruitShapeParams {
    /// Axis length in meters.
    #[serde(rename = "L")]
    pub length: f64,
    /// Maximum radius in meters.
    #[serde(rename = "R")]
    pub max_radius: f64,
    /// Profile exponent; < 1 shifts bulk toward the stem, > 1 toward the tip.
    #[serde(rename = "p")]
    pub exponent: f64,
}

impl FruitShapeParams {
    pub fn new(length: f64, max_radius: f64, exponent: f64) -> Result<Self> {
        let s = Self { length, max_radius, exponent };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.01..=0.10).contains(&self.length) {
            return Err(Error::Validation(format!("length {} m outside [0.01, 0.10]", self.length)));
        }
        if !(0.005..=0.05).contains(&self.max_radius) {
            return Err(Error::Validation(format!(
                "max radius {} m outside [0.005, 0.05]",
                self.max_radius
            )));
        }
        if !(0.3..=3.0).contains(&self.exponent) {
            return Err(Error::Validation(format!(
                "profile exponent {} outside [0.3, 3]",
                self.exponent
            )));
        }
        Ok(())
    }
}

/// Where the fruit sits and how far it leans out of the image plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenePose {
    /// Rotation of the fruit axis about the camera x-axis, degrees.
    pub tilt_deg: f64,
    /// Fruit center in the camera frame, meters.
    pub center: [f64; 3],
}

impl ScenePose {
    pub fn new(tilt_deg: f64, center: [f64; 3]) -> Result<Self> {
        let s = Self { tilt_deg, center };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..90.0).contains(&self.tilt_deg) {
            return Err(Error::Validation(format!("tilt {} outside [0, 90)", self.tilt_deg)));
        }
        if self.center[2] <= 0.2 {
            return Err(Error::Validation(format!(
                "center z {} must exceed 0.2 m",
                self.center[2]
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OcclusionKind {
    Ellipse,
    Band,
}

/// Synthetic occluder: removes roughly `coverage` of the fruit pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcclusionSpec {
    pub kind: OcclusionKind,
    pub coverage: f64,
    pub seed: u64,
}

impl OcclusionSpec {
    pub fn new(kind: OcclusionKind, coverage: f64, seed: u64) -> Result<Self> {
        if !(coverage > 0.0 && coverage <= 0.6) {
            return Err(Error::Validation(format!("coverage {coverage} outside (0, 0.6]")));
        }
        Ok(Self { kind, coverage, seed })
    }
}

/// Radial profile at axis parameter `t` in [0, 1]; zero at both ends.
pub fn profile_radius(t: f64, params: &FruitShapeParams) -> f64 {
    debug_assert!((0.0..=1.0).contains(&t));
    params.max_radius * (std::f64::consts::PI * t.powf(params.exponent)).sin()
}

/// d r / d t, used for surface-area weighting and outward normals.
fn profile_radius_dt(t: f64, params: &FruitShapeParams) -> f64 {
    let p = params.exponent;
    let tp = t.max(1e-12).powf(p);
    params.max_radius
        * std::f64::consts::PI
        * p
        * t.max(1e-12).powf(p - 1.0)
        * (std::f64::consts::PI * tp).cos()
}

/// Adaptive Simpson quadrature to a relative tolerance.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, lm, flm, left, eps * 0.5, depth - 1)
                + recurse(f, m, fm, b, fb, rm, frm, right, eps * 0.5, depth - 1)
        }
    }
    // crude magnitude estimate to turn the relative tolerance absolute
    let n = 64;
    let mut scale = 0.0f64;
    for i in 0..=n {
        let t = a + (b - a) * i as f64 / n as f64;
        scale = scale.max(f(t).abs());
    }
    let eps = rel_tol * scale.max(1e-300) * (b - a);
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    recurse(f, a, fa, b, fb, m, fm, simpson(fa, fm, fb, b - a), eps, 48)
}

/// Solid-of-revolution volume in cm3: `pi * L * integral r(t)^2 dt`.
pub fn analytic_volume(params: &FruitShapeParams) -> f64 {
    let f = |t: f64| profile_radius(t, params).powi(2);
    std::f64::consts::PI * params.length * integrate(&f, 0.0, 1.0, 1e-10) * 1e6
}

/// Maximum vertical cross-section (axis-parallel silhouette) in cm2:
/// `2 * L * integral r(t) dt`.
pub fn analytic_frontal_area(params: &FruitShapeParams) -> f64 {
    let f = |t: f64| profile_radius(t, params);
    2.0 * params.length * integrate(&f, 0.0, 1.0, 1e-10) * 1e4
}

/// Full surface area in cm2, the sampling budget reference.
pub fn surface_area_cm2(params: &FruitShapeParams) -> f64 {
    let f = |t: f64| {
        let r = profile_radius(t, params);
        let drdz = profile_radius_dt(t, params) / params.length;
        r * (1.0 + drdz * drdz).sqrt()
    };
    2.0 * std::f64::consts::PI * params.length * integrate(&f, 0.0, 1.0, 1e-9) * 1e4
}

/// Fruit axis direction (tip toward stem) for a given pose; equals camera up
/// at zero tilt.
pub fn pose_axis(pose: &ScenePose) -> Vector3<f64> {
    let th = pose.tilt_deg.to_radians();
    Vector3::new(0.0, -th.cos(), th.sin())
}

/// Sample the camera-visible half of the fruit surface, uniformly by area.
///
/// The sample budget is `samples_per_cm2 * full surface area`; roughly half
/// survive the visibility cut. Labels follow the axis parameter with cuts at
/// [`STEM_CUT`] and [`TIP_CUT`]. Deterministic for a fixed seed.
pub fn generate_cloud(
    params: &FruitShapeParams,
    pose: &ScenePose,
    samples_per_cm2: f64,
    seed: u64,
) -> Result<PointCloud> {
    params.validate()?;
    pose.validate()?;
    if samples_per_cm2 <= 0.0 || !samples_per_cm2.is_finite() {
        return Err(Error::Validation("sampling density must be positive".into()));
    }

    // cumulative area profile over t, midpoint rule on a fine grid
    const GRID: usize = 4096;
    let mut cdf = Vec::with_capacity(GRID);
    let mut acc = 0.0;
    for i in 0..GRID {
        let t = (i as f64 + 0.5) / GRID as f64;
        let r = profile_radius(t, params);
        let drdz = profile_radius_dt(t, params) / params.length;
        acc += r * (1.0 + drdz * drdz).sqrt();
        cdf.push(acc);
    }
    let total = acc;
    let full_area_cm2 =
        2.0 * std::f64::consts::PI * params.length * (total / GRID as f64) * 1e4;
    let budget = (samples_per_cm2 * full_area_cm2).round() as usize;

    let axis_up = pose_axis(pose); // tip -> stem
    let axis_down = -axis_up; // stem -> tip, the local +z of the profile
    let e1 = Vector3::new(1.0, 0.0, 0.0);
    let e2 = axis_down.cross(&e1);
    let center = Vector3::new(pose.center[0], pose.center[1], pose.center[2]);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cloud = PointCloud::new();
    for _ in 0..budget {
        let u = rng.gen::<f64>() * total;
        let idx = cdf.partition_point(|&c| c < u);
        let t = (idx as f64 + rng.gen::<f64>()) / GRID as f64;
        let phi = rng.gen::<f64>() * std::f64::consts::TAU;
        let r = profile_radius(t, params);
        let radial = phi.cos() * e1 + phi.sin() * e2;
        let point = center + (0.5 - t) * params.length * axis_up + r * radial;
        let drdz = profile_radius_dt(t, params) / params.length;
        let normal = radial - drdz * axis_down;
        if normal.z >= 0.0 {
            continue; // back side, not visible from the camera
        }
        let label = if t < STEM_CUT {
            RegionLabel::Stem
        } else if t > TIP_CUT {
            RegionLabel::Tip
        } else {
            RegionLabel::Belly
        };
        cloud.push(Point3::from(point), label);
    }
    if cloud.len() < MIN_CLOUD_POINTS {
        return Err(Error::InsufficientSamples {
            context: "generate_cloud visible points",
            got: cloud.len(),
            need: MIN_CLOUD_POINTS,
        });
    }
    Ok(cloud)
}

/// Z-buffer point splat followed by a radius-1 morphological closing.
///
/// Nearest depth wins per pixel; pixels the closing adds inherit the nearest
/// depth among their 8 neighbors.
pub fn render(cloud: &PointCloud, k: &CameraIntrinsics) -> Result<(RasterMask, DepthRaster)> {
    let (w, h) = (k.width as usize, k.height as usize);
    const EMPTY: u32 = u32::MAX;
    let mut zbuf = vec![EMPTY; w * h];
    for p in cloud.points() {
        if p.z <= 0.0 {
            return Err(Error::Validation("render requires z > 0 for every point".into()));
        }
        let (uf, vf) = k.project(p);
        let (u, v) = (uf.floor(), vf.floor());
        if u < 0.0 || v < 0.0 || u >= w as f64 || v >= h as f64 {
            continue;
        }
        let mm = (p.z * 1000.0).round().clamp(1.0, 65535.0) as u32;
        let i = v as usize * w + u as usize;
        if mm < zbuf[i] {
            zbuf[i] = mm;
        }
    }
    if zbuf.iter().all(|&z| z == EMPTY) {
        return Err(Error::EmptyRender);
    }

    let written: Vec<bool> = zbuf.iter().map(|&z| z != EMPTY).collect();
    let dilated = dilate(&written, w, h);
    let closed = erode(&dilated, w, h);
    // closing is extensive, so every written pixel stays marked
    let closed: Vec<bool> = closed
        .iter()
        .zip(&written)
        .map(|(&c, &o)| c || o)
        .collect();

    // fill closing holes with the nearest (minimum) neighboring depth
    let mut depth_mm = zbuf;
    loop {
        let mut changed = false;
        let snapshot = depth_mm.clone();
        for v in 0..h {
            for u in 0..w {
                let i = v * w + u;
                if !closed[i] || snapshot[i] != EMPTY {
                    continue;
                }
                let mut best = EMPTY;
                for (du, dv) in NEIGHBORS8 {
                    let (nu, nv) = (u as i64 + du, v as i64 + dv);
                    if nu < 0 || nv < 0 || nu >= w as i64 || nv >= h as i64 {
                        continue;
                    }
                    let nz = snapshot[nv as usize * w + nu as usize];
                    if nz < best {
                        best = nz;
                    }
                }
                if best != EMPTY {
                    depth_mm[i] = best;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut mask = RasterMask::new(k.width, k.height);
    let mut depth = DepthRaster::new(k.width, k.height);
    for v in 0..h {
        for u in 0..w {
            let i = v * w + u;
            if closed[i] && depth_mm[i] != EMPTY {
                mask.set_fruit(u as u32, v as u32, true);
                depth.set(u as u32, v as u32, depth_mm[i] as u16);
            }
        }
    }
    Ok((mask, depth))
}

const NEIGHBORS8: [(i64, i64); 8] =
    [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

fn dilate(src: &[bool], w: usize, h: usize) -> Vec<bool> {
    let mut out = src.to_vec();
    for v in 0..h {
        for u in 0..w {
            if src[v * w + u] {
                continue;
            }
            let hit = NEIGHBORS8.iter().any(|&(du, dv)| {
                let (nu, nv) = (u as i64 + du, v as i64 + dv);
                nu >= 0 && nv >= 0 && nu < w as i64 && nv < h as i64 && src[nv as usize * w + nu as usize]
            });
            if hit {
                out[v * w + u] = true;
            }
        }
    }
    out
}

fn erode(src: &[bool], w: usize, h: usize) -> Vec<bool> {
    let mut out = src.to_vec();
    for v in 0..h {
        for u in 0..w {
            if !src[v * w + u] {
                continue;
            }
            let all = NEIGHBORS8.iter().all(|&(du, dv)| {
                let (nu, nv) = (u as i64 + du, v as i64 + dv);
                nu >= 0 && nv >= 0 && nu < w as i64 && nv < h as i64 && src[nv as usize * w + nu as usize]
            });
            if !all {
                out[v * w + u] = false;
            }
        }
    }
    out
}

/// Remove a contiguous region from the mask: `(occluded, missing)` partition
/// the input. Placement retries until the removed fraction lands within
/// ±0.05 of `spec.coverage`.
pub fn occlude(mask: &RasterMask, spec: &OcclusionSpec) -> Result<(RasterMask, RasterMask)> {
    let pixels: Vec<(u32, u32)> = mask.fruit_pixels().collect();
    if pixels.len() < 100 {
        return Err(Error::InsufficientSamples {
            context: "occlude fruit pixels",
            got: pixels.len(),
            need: 100,
        });
    }
    let total = pixels.len() as f64;
    let target = spec.coverage * total;
    let tolerance = 0.05 * total;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    const ATTEMPTS: usize = 100;

    for _ in 0..ATTEMPTS {
        let inside: Box<dyn Fn(u32, u32, f64) -> bool> = match spec.kind {
            OcclusionKind::Ellipse => {
                let (cu, cv) = pixels[rng.gen_range(0..pixels.len())];
                let aspect = rng.gen_range(0.6..1.6);
                let (cu, cv) = (cu as f64, cv as f64);
                Box::new(move |u, v, s| {
                    let du = (u as f64 - cu) / (s * aspect);
                    let dv = (v as f64 - cv) / s;
                    du * du + dv * dv <= 1.0
                })
            }
            OcclusionKind::Band => {
                let horizontal = rng.gen_bool(0.5);
                let (cu, cv) = pixels[rng.gen_range(0..pixels.len())];
                let pos = if horizontal { cv as f64 } else { cu as f64 };
                Box::new(move |u, v, s| {
                    let c = if horizontal { v as f64 } else { u as f64 };
                    (c - pos).abs() <= s
                })
            }
        };
        let removed_count = |s: f64| pixels.iter().filter(|&&(u, v)| inside(u, v, s)).count();
        // coverage is monotone in the region scale; bisect on it
        let mut lo = 0.0;
        let mut hi = (mask.width() + mask.height()) as f64;
        for _ in 0..48 {
            let mid = 0.5 * (lo + hi);
            if (removed_count(mid) as f64) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let removed = removed_count(hi) as f64;
        if (removed - target).abs() <= tolerance && removed > 0.0 {
            let mut occluded = mask.clone();
            let mut missing = RasterMask::new(mask.width(), mask.height());
            for &(u, v) in &pixels {
                if inside(u, v, hi) {
                    occluded.set_fruit(u, v, false);
                    missing.set_fruit(u, v, true);
                }
            }
            return Ok((occluded, missing));
        }
    }
    Err(Error::OcclusionFailure { target: spec.coverage, attempts: ATTEMPTS })
}
