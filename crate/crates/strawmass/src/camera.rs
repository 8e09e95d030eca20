//! Pinhole intrinsics and depth-map back-projection.

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::cloud::{PointCloud, RegionLabel};
use crate::error::{Error, Result};
use crate::raster::{DepthRaster, RasterMask};

/// Pinhole camera intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        let k = Self { fx, fy, cx, cy, width, height };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::Validation(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if !(0.0 <= self.cx && self.cx < self.width as f64)
            || !(0.0 <= self.cy && self.cy < self.height as f64)
        {
            return Err(Error::Validation(format!(
                "principal point ({}, {}) outside {}x{} frame",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    /// Back-project pixel (u, v) at depth `z` meters.
    #[inline]
    pub fn deproject_pixel(&self, u: f64, v: f64, z: f64) -> Point3<f64> {
        Point3::new((u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z)
    }

    /// Project a camera-frame point to pixel coordinates.
    #[inline]
    pub fn project(&self, p: &Point3<f64>) -> (f64, f64) {
        (p.x * self.fx / p.z + self.cx, p.y * self.fy / p.z + self.cy)
    }
}

/// Back-project every fruit pixel with valid depth; labels come out unknown.
///
/// Errors with [`Error::EmptyCloud`] when no fruit pixel carries valid depth,
/// leaving the fallback policy to the caller.
pub fn deproject(mask: &RasterMask, depth: &DepthRaster, k: &CameraIntrinsics) -> Result<PointCloud> {
    if !depth.same_dims_mask(mask) || mask.width() != k.width || mask.height() != k.height {
        return Err(Error::Consistency(format!(
            "mask {}x{}, depth {}x{}, intrinsics {}x{} must agree",
            mask.width(),
            mask.height(),
            depth.width(),
            depth.height(),
            k.width,
            k.height
        )));
    }
    let mut cloud = PointCloud::new();
    for (u, v) in mask.fruit_pixels() {
        let mm = depth.at(u, v);
        if mm == 0 {
            continue;
        }
        let z = mm as f64 / 1000.0;
        cloud.push(k.deproject_pixel(u as f64, v as f64, z), RegionLabel::Unknown);
    }
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(cloud)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap()
    }

    fn one_pixel(u: u32, v: u32, mm: u16) -> (RasterMask, DepthRaster) {
        let mut m = RasterMask::new(640, 480);
        m.set_fruit(u, v, true);
        let mut d = DepthRaster::new(640, 480);
        d.set(u, v, mm);
        (m, d)
    }

    #[test]
    fn principal_point_maps_to_optical_axis() {
        let (m, d) = one_pixel(320, 240, 500);
        let c = deproject(&m, &d, &k()).unwrap();
        assert_eq!(c.len(), 1);
        let p = c.points()[0];
        assert_relative_eq!(p.x, 0.0);
        assert_relative_eq!(p.y, 0.0);
        assert_relative_eq!(p.z, 0.5);
    }

    #[test]
    fn offset_pixel_matches_pinhole_formula() {
        // u = cx + fx, Z = 1 m  =>  X = (u - cx) * Z / fx = 1.0
        let km = CameraIntrinsics::new(100.0, 100.0, 320.0, 240.0, 640, 480).unwrap();
        let (m, d) = one_pixel(420, 240, 1000);
        let c = deproject(&m, &d, &km).unwrap();
        let p = c.points()[0];
        assert_relative_eq!(p.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(p.y, 0.0);
        assert_relative_eq!(p.z, 1.0);
    }

    #[test]
    fn empty_mask_is_an_error() {
        let m = RasterMask::new(640, 480);
        let d = DepthRaster::new(640, 480);
        assert!(matches!(deproject(&m, &d, &k()), Err(Error::EmptyCloud)));
    }

    #[test]
    fn invalid_depth_pixels_skipped_count_matches_brute_force() {
        let mut m = RasterMask::new(640, 480);
        let mut d = DepthRaster::new(640, 480);
        let mut expected = 0usize;
        for i in 0..50u32 {
            let (u, v) = (10 + i, 20 + i);
            m.set_fruit(u, v, true);
            if i % 3 == 0 {
                d.set(u, v, 400 + i as u16);
                expected += 1;
            }
        }
        let c = deproject(&m, &d, &k()).unwrap();
        assert_eq!(c.len(), expected);
    }

    #[test]
    fn reprojection_recovers_pixel() {
        let km = k();
        let mut m = RasterMask::new(640, 480);
        let mut d = DepthRaster::new(640, 480);
        for (u, v, mm) in [(5u32, 7u32, 350u16), (631, 2, 4200), (320, 479, 999)] {
            m.set_fruit(u, v, true);
            d.set(u, v, mm);
        }
        let c = deproject(&m, &d, &km).unwrap();
        let mut pixels: Vec<(u32, u32)> = m.fruit_pixels().collect();
        pixels.sort_unstable();
        let mut recovered: Vec<(u32, u32)> = c
            .points()
            .iter()
            .map(|p| {
                let (u, v) = km.project(p);
                (u.round() as u32, v.round() as u32)
            })
            .collect();
        recovered.sort_unstable();
        assert_eq!(pixels, recovered);
    }

    #[test]
    fn invariants_rejected() {
        assert!(CameraIntrinsics::new(0.0, 500.0, 320.0, 240.0, 640, 480).is_err());
        assert!(CameraIntrinsics::new(500.0, 500.0, 640.0, 240.0, 640, 480).is_err());
    }
}
