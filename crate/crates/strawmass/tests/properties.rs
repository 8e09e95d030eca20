//! Property tests for the format and metric invariants.

use proptest::prelude::*;

use strawmass::camera::{deproject, CameraIntrinsics};
use strawmass::completion::{backfill_depth, complete_symmetry, ingest_external_mask, iou};
use strawmass::ganloss::{cycle_loss, MappingBatch};
use strawmass::pgm::{load_depth, load_mask, save_depth, save_mask};
use strawmass::raster::{DepthRaster, RasterMask};
use strawmass::synth::{occlude, OcclusionKind, OcclusionSpec};

fn arb_mask(side: u32) -> impl Strategy<Value = RasterMask> {
    proptest::collection::vec(any::<bool>(), (side * side) as usize).prop_map(move |bits| {
        let mut m = RasterMask::new(side, side);
        for (i, b) in bits.into_iter().enumerate() {
            if b {
                m.set_fruit(i as u32 % side, i as u32 / side, true);
            }
        }
        m
    })
}

fn arb_depth(side: u32) -> impl Strategy<Value = DepthRaster> {
    proptest::collection::vec(0u16..12_000, (side * side) as usize).prop_map(move |vals| {
        DepthRaster::from_values(side, side, &vals).unwrap()
    })
}

proptest! {
    #[test]
    fn mask_pgm_round_trip(mask in arb_mask(16)) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.pgm");
        save_mask(&mask, &p).unwrap();
        let back = load_mask(&p).unwrap();
        prop_assert_eq!(back, mask);
    }

    #[test]
    fn depth_pgm_round_trip_respects_window(depth in arb_depth(8)) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.pgm");
        save_depth(&depth, &p).unwrap();
        let back = load_depth(&p).unwrap();
        for &v in back.data() {
            prop_assert!(v == 0 || (100..=10_000).contains(&v));
        }
        // in-window values survive exactly
        for (a, b) in depth.data().iter().zip(back.data()) {
            if (100..=10_000).contains(a) {
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn deproject_reprojects_within_half_pixel(
        pixels in proptest::collection::btree_set((0u32..64, 0u32..48, 150u16..9000), 1..40)
    ) {
        let k = CameraIntrinsics::new(80.0, 75.0, 32.0, 24.0, 64, 48).unwrap();
        let mut mask = RasterMask::new(64, 48);
        let mut depth = DepthRaster::new(64, 48);
        let mut expected = 0usize;
        for &(u, v, mm) in &pixels {
            if !mask.is_fruit(u, v) {
                expected += 1;
            }
            mask.set_fruit(u, v, true);
            depth.set(u, v, mm);
        }
        let cloud = deproject(&mask, &depth, &k).unwrap();
        prop_assert_eq!(cloud.len(), expected);
        for p in cloud.points() {
            let (uf, vf) = k.project(p);
            let u = uf.round() as u32;
            let v = vf.round() as u32;
            prop_assert!(mask.is_fruit(u, v));
            prop_assert!((uf - uf.round()).abs() <= 0.5);
            prop_assert!((vf - vf.round()).abs() <= 0.5);
        }
    }

    #[test]
    fn iou_symmetry_identity_range(a in arb_mask(16), b in arb_mask(16)) {
        if a.area_px() + b.area_px() > 0 {
            let ab = iou(&a, &b).unwrap();
            let ba = iou(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
        }
        if a.area_px() > 0 {
            prop_assert_eq!(iou(&a, &a).unwrap(), 1.0);
        }
    }

    #[test]
    fn completion_is_add_only(a in arb_mask(24), b in arb_mask(24)) {
        if a.area_px() >= 2 {
            if let Ok(done) = complete_symmetry(&a) {
                prop_assert!(a.is_subset_of(&done.completed));
            }
        }
        let done = ingest_external_mask(&b, &a).unwrap();
        prop_assert!(a.is_subset_of(&done.completed));
        prop_assert!(b.is_subset_of(&done.completed));
    }

    #[test]
    fn backfill_preserves_valid_depth(visible in arb_mask(12), extra in arb_mask(12), depth in arb_depth(12)) {
        let completed = visible.union(&extra);
        let has_valid = visible.fruit_pixels().any(|(u, v)| depth.is_valid_at(u, v));
        if has_valid {
            let out = backfill_depth(&completed, &visible, &depth).unwrap();
            for (u, v) in visible.fruit_pixels() {
                prop_assert_eq!(out.at(u, v), depth.at(u, v));
            }
            // untouched background stays untouched
            for v in 0..12u32 {
                for u in 0..12u32 {
                    if !completed.is_fruit(u, v) {
                        prop_assert_eq!(out.at(u, v), depth.at(u, v));
                    }
                }
            }
        }
    }

    #[test]
    fn cycle_loss_nonnegative_and_zero_iff_identity(
        x in proptest::collection::vec(-1.0f64..1.0, 1..6),
        d in proptest::collection::vec(-0.5f64..0.5, 1..6),
    ) {
        let n = x.len().min(d.len());
        let x = &x[..n];
        let d = &d[..n];
        let fgx: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + b).collect();
        let batch = MappingBatch {
            x: vec![x.to_vec()],
            fgx: vec![fgx.clone()],
            y: vec![vec![0.0]],
            gfy: vec![vec![0.0]],
        };
        let loss = cycle_loss(&batch).unwrap();
        prop_assert!(loss >= 0.0);
        let identical = x.iter().zip(&fgx).all(|(a, b)| a == b);
        prop_assert_eq!(loss == 0.0, identical);
    }

    #[test]
    fn occlusion_partitions_for_random_specs(
        coverage in 0.05f64..0.5,
        seed in 0u64..50,
        kind_band in any::<bool>(),
    ) {
        let mut mask = RasterMask::new(96, 96);
        for v in 20..76u32 {
            for u in 28..68u32 {
                mask.set_fruit(u, v, true);
            }
        }
        let kind = if kind_band { OcclusionKind::Band } else { OcclusionKind::Ellipse };
        let spec = OcclusionSpec::new(kind, coverage, seed).unwrap();
        if let Ok((occluded, missing)) = occlude(&mask, &spec) {
            // exhaustive pixel check of the partition
            for v in 0..96u32 {
                for u in 0..96u32 {
                    let m = mask.is_fruit(u, v);
                    let o = occluded.is_fruit(u, v);
                    let x = missing.is_fruit(u, v);
                    prop_assert_eq!(m, o || x);
                    prop_assert!(!(o && x));
                }
            }
            let frac = missing.area_px() as f64 / mask.area_px() as f64;
            prop_assert!((frac - coverage).abs() <= 0.05 + 1e-12);
        }
    }
}
