//! Shape completion and its evaluation metrics.
//!
//! A geometric symmetry-reflection completer serves as the built-in baseline;
//! masks completed elsewhere (neural inpainters) arrive through
//! [`ingest_external`]. Both enforce the add-only invariant: completion never
//! erodes a pixel the sensor actually saw.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pgm;
use crate::raster::{DepthRaster, RasterMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompletionMethod {
    Symmetry,
    External,
    None,
}

#[derive(Debug, Clone)]
pub struct CompletionResult {
    pub completed: RasterMask,
    pub method: CompletionMethod,
}

/// PAR band and overlap scores for one completion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletionMetrics {
    pub par: f64,
    pub iou: f64,
    pub in_band: bool,
}

/// Centroid and unit direction of the fruit pixels' major principal axis.
///
/// Collinear masks are fine (the major axis is still defined); a mask whose
/// pixels all coincide has no axis and errors.
pub fn mask_principal_axis(mask: &RasterMask) -> Result<((f64, f64), (f64, f64))> {
    let mut n = 0.0f64;
    let (mut su, mut sv) = (0.0f64, 0.0f64);
    for (u, v) in mask.fruit_pixels() {
        su += u as f64;
        sv += v as f64;
        n += 1.0;
    }
    if n == 0.0 {
        return Err(Error::AxisUndefined("mask has no fruit pixels".into()));
    }
    let (cu, cv) = (su / n, sv / n);
    let (mut suu, mut svv, mut suv) = (0.0f64, 0.0f64, 0.0f64);
    for (u, v) in mask.fruit_pixels() {
        let du = u as f64 - cu;
        let dv = v as f64 - cv;
        suu += du * du;
        svv += dv * dv;
        suv += du * dv;
    }
    let (a, b, c) = (suu / n, suv / n, svv / n);
    // larger eigenvalue of [[a, b], [b, c]]
    let mean = 0.5 * (a + c);
    let d = ((a - c) * 0.5).hypot(b);
    let lambda_max = mean + d;
    if lambda_max <= 1e-12 {
        return Err(Error::AxisUndefined("zero-covariance pixel distribution".into()));
    }
    // eigenvector for lambda_max
    let (dx, dy) = if b.abs() > 1e-18 {
        (lambda_max - c, b)
    } else if a >= c {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let norm = dx.hypot(dy);
    Ok(((cu, cv), (dx / norm, dy / norm)))
}

/// Complete an occluded mask by reflecting it across its own major principal
/// axis and unioning with the input. Reflections falling outside the frame
/// are clipped.
pub fn complete_symmetry(occluded: &RasterMask) -> Result<CompletionResult> {
    let ((cu, cv), (dx, dy)) = mask_principal_axis(occluded)?;
    let mut completed = occluded.clone();
    let (w, h) = (occluded.width() as i64, occluded.height() as i64);
    for (u, v) in occluded.fruit_pixels() {
        let pu = u as f64 - cu;
        let pv = v as f64 - cv;
        let along = pu * dx + pv * dy;
        let ru = 2.0 * along * dx - pu + cu;
        let rv = 2.0 * along * dy - pv + cv;
        let (ru, rv) = (ru.round() as i64, rv.round() as i64);
        if ru >= 0 && rv >= 0 && ru < w && rv < h {
            completed.set_fruit(ru as u32, rv as u32, true);
        }
    }
    Ok(CompletionResult { completed, method: CompletionMethod::Symmetry })
}

/// Load an externally completed mask and union it with the visible pixels.
pub fn ingest_external(path: impl AsRef<Path>, occluded: &RasterMask) -> Result<CompletionResult> {
    let loaded = pgm::load_mask(path.as_ref())?;
    ingest_external_mask(&loaded, occluded)
}

/// Same as [`ingest_external`], for a mask already in memory.
pub fn ingest_external_mask(loaded: &RasterMask, occluded: &RasterMask) -> Result<CompletionResult> {
    if !loaded.same_dims(occluded) {
        return Err(Error::Consistency(format!(
            "external mask {}x{} vs occluded {}x{}",
            loaded.width(),
            loaded.height(),
            occluded.width(),
            occluded.height()
        )));
    }
    Ok(CompletionResult {
        completed: loaded.union(occluded),
        method: CompletionMethod::External,
    })
}

/// Whole-fruit pixel area ratio: restored / ground truth.
pub fn pixel_area_ratio(restored: &RasterMask, truth: &RasterMask) -> Result<f64> {
    let t = truth.area_px();
    if t == 0 {
        return Err(Error::DivisionUndefined("PAR with empty truth mask".into()));
    }
    Ok(restored.area_px() as f64 / t as f64)
}

/// Region-only area ratio: restored-beyond-visible over truly-missing.
/// The alternative PAR reading; the whole-fruit form is the default.
pub fn region_area_ratio(
    restored: &RasterMask,
    occluded: &RasterMask,
    truth: &RasterMask,
) -> Result<f64> {
    let missing = truth.minus(occluded).area_px();
    if missing == 0 {
        return Err(Error::DivisionUndefined("region PAR with no missing pixels".into()));
    }
    Ok(restored.minus(occluded).area_px() as f64 / missing as f64)
}

/// Pixelwise intersection over union.
pub fn iou(pred: &RasterMask, truth: &RasterMask) -> Result<f64> {
    if !pred.same_dims(truth) {
        return Err(Error::Consistency("IoU masks must share dimensions".into()));
    }
    let mut inter = 0usize;
    let mut union = 0usize;
    for (a, b) in pred.data().iter().zip(truth.data()) {
        let fa = *a == crate::raster::FRUIT;
        let fb = *b == crate::raster::FRUIT;
        inter += usize::from(fa && fb);
        union += usize::from(fa || fb);
    }
    if union == 0 {
        return Err(Error::DivisionUndefined("IoU of two empty masks".into()));
    }
    Ok(inter as f64 / union as f64)
}

/// True iff the ratio sits inside the acceptance band 1 +/- 0.15, bounds
/// inclusive.
pub fn band_classify(par: f64) -> bool {
    (0.85..=1.15).contains(&par)
}

/// PAR, IoU and band membership of a completion against ground truth.
pub fn completion_metrics(completed: &RasterMask, truth: &RasterMask) -> Result<CompletionMetrics> {
    let par = pixel_area_ratio(completed, truth)?;
    let iou = iou(completed, truth)?;
    Ok(CompletionMetrics { par, iou, in_band: band_classify(par) })
}

/// Give restored-only pixels (completed minus visible) the mean valid depth
/// over the visible fruit, rounded to the nearest millimeter. Pixels that
/// had depth keep it.
pub fn backfill_depth(
    completed: &RasterMask,
    visible: &RasterMask,
    depth: &DepthRaster,
) -> Result<DepthRaster> {
    debug_assert!(visible.is_subset_of(completed));
    let mut sum = 0.0f64;
    let mut n = 0usize;
    for (u, v) in visible.fruit_pixels() {
        let mm = depth.at(u, v);
        if mm != 0 {
            sum += mm as f64;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoDepth("no valid depth under the visible mask".into()));
    }
    let mean = (sum / n as f64).round().clamp(1.0, 65535.0) as u16;
    let mut out = depth.clone();
    for (u, v) in completed.fruit_pixels() {
        if !visible.is_fruit(u, v) {
            out.set(u, v, mean);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ellipse_mask(cu: f64, cv: f64, a: f64, b: f64) -> RasterMask {
        let mut m = RasterMask::new(128, 128);
        for v in 0..128u32 {
            for u in 0..128u32 {
                let du = (u as f64 - cu) / a;
                let dv = (v as f64 - cv) / b;
                if du * du + dv * dv <= 1.0 {
                    m.set_fruit(u, v, true);
                }
            }
        }
        m
    }

    #[test]
    fn symmetry_restores_one_sided_occlusion() {
        let truth = ellipse_mask(64.0, 64.0, 20.0, 35.0);
        // a chunk strictly left of the symmetry axis, close to it so the
        // centroid (and with it the estimated axis) barely moves
        let mut occluded = truth.clone();
        for v in 52..76u32 {
            for u in 56..64u32 {
                occluded.set_fruit(u, v, false);
            }
        }
        assert!(occluded.area_px() < truth.area_px());
        let done = complete_symmetry(&occluded).unwrap();
        assert!(iou(&done.completed, &truth).unwrap() >= 0.95);
    }

    #[test]
    fn symmetry_idempotent_on_symmetric_mask() {
        let truth = ellipse_mask(64.0, 64.0, 18.0, 30.0);
        let done = complete_symmetry(&truth).unwrap();
        // reflection of a symmetric mask is a subset: nothing to add
        assert_eq!(done.completed.area_px(), truth.area_px());
        assert_eq!(done.completed, truth);
    }

    #[test]
    fn symmetry_add_only() {
        let truth = ellipse_mask(60.0, 60.0, 25.0, 40.0);
        let mut occluded = truth.clone();
        for v in 0..128u32 {
            for u in 0..50u32 {
                occluded.set_fruit(u, v, false);
            }
        }
        let done = complete_symmetry(&occluded).unwrap();
        assert!(occluded.is_subset_of(&done.completed));
    }

    #[test]
    fn symmetry_collinear_ok_single_pixel_errors() {
        let mut line = RasterMask::new(64, 64);
        for i in 0..10u32 {
            line.set_fruit(10 + i, 20, true);
        }
        assert!(complete_symmetry(&line).is_ok());

        let mut dot = RasterMask::new(64, 64);
        dot.set_fruit(5, 5, true);
        assert!(matches!(complete_symmetry(&dot), Err(Error::AxisUndefined(_))));
    }

    #[test]
    fn external_union_restores_eroded_pixels() {
        let mut occluded = RasterMask::new(32, 32);
        occluded.set_fruit(3, 3, true);
        occluded.set_fruit(4, 3, true);
        let mut external = RasterMask::new(32, 32);
        external.set_fruit(4, 3, true); // drops (3,3)
        external.set_fruit(5, 3, true);
        let done = ingest_external_mask(&external, &occluded).unwrap();
        assert!(done.completed.is_fruit(3, 3));
        assert_eq!(done.completed.area_px(), 3);
        assert_eq!(done.method, CompletionMethod::External);
    }

    #[test]
    fn external_dimension_mismatch() {
        let a = RasterMask::new(16, 16);
        let b = RasterMask::new(32, 32);
        assert!(matches!(ingest_external_mask(&a, &b), Err(Error::Consistency(_))));
    }

    #[test]
    fn par_values() {
        let truth = ellipse_mask(64.0, 64.0, 20.0, 20.0);
        assert_eq!(pixel_area_ratio(&truth, &truth).unwrap(), 1.0);

        // constructed instances matching the reported method means
        let mut restored = RasterMask::new(700, 1);
        let mut t = RasterMask::new(700, 1);
        for u in 0..556u32 {
            restored.set_fruit(u, 0, true);
        }
        for u in 0..500u32 {
            t.set_fruit(u, 0, true);
        }
        assert!((pixel_area_ratio(&restored, &t).unwrap() - 1.112).abs() < 1e-12);

        let mut restored2 = RasterMask::new(700, 1);
        for u in 0..489u32 {
            restored2.set_fruit(u, 0, true);
        }
        assert!((pixel_area_ratio(&restored2, &t).unwrap() - 0.978).abs() < 1e-12);
    }

    #[test]
    fn par_empty_truth_errors() {
        let truth = RasterMask::new(8, 8);
        let restored = ellipse_mask(4.0, 4.0, 2.0, 2.0);
        assert!(matches!(
            pixel_area_ratio(&restored, &truth),
            Err(Error::DivisionUndefined(_))
        ));
    }

    #[test]
    fn iou_identical_disjoint_and_strip() {
        let a = ellipse_mask(40.0, 40.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);

        let mut left = RasterMask::new(64, 64);
        let mut right = RasterMask::new(64, 64);
        left.set_fruit(0, 0, true);
        right.set_fruit(63, 63, true);
        assert_eq!(iou(&left, &right).unwrap(), 0.0);

        // two 10x10 squares overlapping in a 10x5 strip: 50 / 150
        let mut s1 = RasterMask::new(64, 64);
        let mut s2 = RasterMask::new(64, 64);
        for v in 0..10u32 {
            for u in 0..10u32 {
                s1.set_fruit(u, v, true);
                s2.set_fruit(u, v + 5, true);
            }
        }
        let got = iou(&s1, &s2).unwrap();
        assert!((got - 50.0 / 150.0).abs() < 1e-12, "{got}");
    }

    #[test]
    fn iou_both_empty_errors() {
        let a = RasterMask::new(8, 8);
        assert!(matches!(iou(&a, &a), Err(Error::DivisionUndefined(_))));
    }

    #[test]
    fn band_boundaries_inclusive() {
        assert!(band_classify(1.0));
        assert!(band_classify(1.15));
        assert!(band_classify(0.85));
        assert!(!band_classify(1.2));
        assert!(!band_classify(0.8499));
    }

    #[test]
    fn backfill_constant_mean() {
        let mut visible = RasterMask::new(16, 16);
        let mut completed = RasterMask::new(16, 16);
        let mut depth = DepthRaster::new(16, 16);
        for u in 0..5u32 {
            visible.set_fruit(u, 0, true);
            completed.set_fruit(u, 0, true);
            depth.set(u, 0, 500);
        }
        for u in 5..25u32 {
            completed.set_fruit(u % 16, 1 + u / 16, true);
        }
        let out = backfill_depth(&completed, &visible, &depth).unwrap();
        for (u, v) in completed.fruit_pixels() {
            assert_eq!(out.at(u, v), 500);
        }
    }

    #[test]
    fn backfill_hand_mean() {
        let mut visible = RasterMask::new(4, 1);
        let mut completed = RasterMask::new(4, 1);
        let mut depth = DepthRaster::new(4, 1);
        visible.set_fruit(0, 0, true);
        visible.set_fruit(1, 0, true);
        depth.set(0, 0, 400);
        depth.set(1, 0, 600);
        completed.set_fruit(0, 0, true);
        completed.set_fruit(1, 0, true);
        completed.set_fruit(2, 0, true);
        let out = backfill_depth(&completed, &visible, &depth).unwrap();
        assert_eq!(out.at(2, 0), 500);
        assert_eq!(out.at(0, 0), 400);
        assert_eq!(out.at(1, 0), 600);
    }

    #[test]
    fn backfill_noop_without_restored_pixels() {
        let mut visible = RasterMask::new(4, 1);
        let mut depth = DepthRaster::new(4, 1);
        visible.set_fruit(0, 0, true);
        depth.set(0, 0, 432);
        let out = backfill_depth(&visible.clone(), &visible, &depth).unwrap();
        assert_eq!(out, depth);
    }

    #[test]
    fn backfill_without_depth_errors() {
        let mut visible = RasterMask::new(4, 1);
        visible.set_fruit(0, 0, true);
        let depth = DepthRaster::new(4, 1);
        assert!(matches!(
            backfill_depth(&visible.clone(), &visible, &depth),
            Err(Error::NoDepth(_))
        ));
    }

    #[test]
    fn backfill_never_touches_valid_depth() {
        let mut visible = RasterMask::new(8, 8);
        let mut completed = RasterMask::new(8, 8);
        let mut depth = DepthRaster::new(8, 8);
        for v in 0..8u32 {
            for u in 0..4u32 {
                visible.set_fruit(u, v, true);
                depth.set(u, v, 300 + (u * 8 + v) as u16);
            }
            for u in 0..8u32 {
                completed.set_fruit(u, v, true);
            }
        }
        let out = backfill_depth(&completed, &visible, &depth).unwrap();
        for (u, v) in visible.fruit_pixels() {
            assert_eq!(out.at(u, v), depth.at(u, v));
        }
    }
}
