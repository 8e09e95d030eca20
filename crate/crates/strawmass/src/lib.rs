//! Single-view RGB-D strawberry sizing under occlusion.
//!
//! The pipeline stages are:
//!
//! 1. **Ingestion** ([`pgm`], [`manifest`]) — binary masks, millimeter depth
//!    rasters, point clouds and dataset manifests, all bit-exact formats.
//! 2. **Completion** ([`completion`]) — symmetry-reflection restoration of
//!    occluded masks or ingestion of externally completed ones, plus the
//!    PAR/IoU metrics and depth backfill for restored pixels.
//! 3. **Pose** ([`pose`]) — region splitting, convex-apex search and the
//!    tilt angle of the fruit axis against the vertical.
//! 4. **Area and mass** ([`camera`], [`massreg`]) — pixel-footprint metric
//!    area, cosine tilt correction, polynomial area-to-volume calibration,
//!    density-based mass and grading.
//! 5. **Evaluation** ([`report`]) — percent-error statistics, histograms and
//!    machine-readable batch reports.
//!
//! The [`synth`] module is the test bed for all of it: a parametric fruit
//! with closed-form volume and frontal area that renders to the same raster
//! formats the real sensor produces. [`ganloss`] evaluates the adversarial
//! completion objective in closed form over supplied batches.
//!
//! [`pipeline`] binds the stages into a per-instance estimator and a
//! deterministic manifest-driven batch runner; the `strawmass` binary is a
//! thin CLI over it.

pub mod camera;
pub mod cloud;
pub mod completion;
pub mod error;
pub mod ganloss;
pub mod manifest;
pub mod massreg;
pub mod pgm;
pub mod pipeline;
pub mod pose;
pub mod raster;
pub mod report;
pub mod synth;

pub use error::{Error, Result};

// The guide's code blocks run as doc-tests so the book cannot drift from
// the crate.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/file-formats.md")]
    mod file_formats {}
    #[doc = include_str!("../../../book/src/camera-geometry.md")]
    mod camera_geometry {}
    #[doc = include_str!("../../../book/src/synthetic-fruit.md")]
    mod synthetic_fruit {}
    #[doc = include_str!("../../../book/src/shape-completion.md")]
    mod shape_completion {}
    #[doc = include_str!("../../../book/src/gan-objective.md")]
    mod gan_objective {}
    #[doc = include_str!("../../../book/src/pose-estimation.md")]
    mod pose_estimation {}
    #[doc = include_str!("../../../book/src/mass-regression.md")]
    mod mass_regression {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
