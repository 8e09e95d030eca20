//! Dataset manifests: one shared intrinsics block plus per-instance entries
//! pointing at mask/depth files, with optional completed masks and ground
//! truth for evaluation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::pgm;
use crate::raster::{DepthRaster, RasterMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OcclusionLabel {
    Occluded,
    Isolated,
}

/// Hand-measured reference values for one fruit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub area_cm2: f64,
    pub angle_deg: f64,
    pub volume_cm3: f64,
    pub mass_g: f64,
}

impl GroundTruth {
    pub fn validate(&self) -> Result<()> {
        if self.area_cm2 > 0.0 && self.angle_deg >= 0.0 && self.volume_cm3 > 0.0 && self.mass_g > 0.0
        {
            Ok(())
        } else {
            Err(Error::Validation(
                "ground truth fields must be positive (angle may be zero)".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceEntry {
    pub id: String,
    pub mask: PathBuf,
    pub depth: PathBuf,
    pub occlusion_label: OcclusionLabel,
    /// Externally completed mask (e.g. a neural inpainter's output).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completed_mask: Option<PathBuf>,
    /// Full unoccluded mask, available for synthetic fixtures; enables
    /// PAR/IoU scoring of completions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_mask: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub intrinsics: CameraIntrinsics,
    pub instances: Vec<InstanceEntry>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let m: Manifest = serde_json::from_str(&text)
            .map_err(|e| Error::format(path, format!("invalid manifest JSON: {e}")))?;
        m.intrinsics.validate()?;
        for inst in &m.instances {
            if let Some(gt) = &inst.ground_truth {
                gt.validate()
                    .map_err(|e| Error::Validation(format!("instance {}: {e}", inst.id)))?;
            }
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self)
            .map_err(|e| Error::Validation(format!("manifest serialization: {e}")))?;
        bytes.push(b'\n');
        std::fs::write(path.as_ref(), bytes)?;
        Ok(())
    }
}

/// One fruit with its rasters loaded and validated against the intrinsics.
#[derive(Debug, Clone)]
pub struct FruitInstance {
    pub id: String,
    pub mask: RasterMask,
    pub depth: DepthRaster,
    pub occlusion_label: OcclusionLabel,
    pub completed_mask: Option<RasterMask>,
    pub truth_mask: Option<RasterMask>,
    pub ground_truth: Option<GroundTruth>,
}

fn resolve(base: &Path, rel: &Path) -> PathBuf {
    if rel.is_absolute() {
        rel.to_path_buf()
    } else {
        base.join(rel)
    }
}

/// Load one instance's rasters; paths resolve relative to `base_dir`
/// (normally the manifest's directory).
pub fn load_instance(
    entry: &InstanceEntry,
    intrinsics: &CameraIntrinsics,
    base_dir: &Path,
) -> Result<FruitInstance> {
    let mask = pgm::load_mask(resolve(base_dir, &entry.mask))?;
    let depth = pgm::load_depth(resolve(base_dir, &entry.depth))?;
    let check = |w: u32, h: u32, what: &str| -> Result<()> {
        if w != intrinsics.width || h != intrinsics.height {
            return Err(Error::Consistency(format!(
                "instance {}: {} is {}x{} but intrinsics say {}x{}",
                entry.id, what, w, h, intrinsics.width, intrinsics.height
            )));
        }
        Ok(())
    };
    check(mask.width(), mask.height(), "mask")?;
    check(depth.width(), depth.height(), "depth")?;
    let completed_mask = entry
        .completed_mask
        .as_ref()
        .map(|p| pgm::load_mask(resolve(base_dir, p)))
        .transpose()?;
    if let Some(c) = &completed_mask {
        check(c.width(), c.height(), "completed mask")?;
    }
    let truth_mask = entry
        .truth_mask
        .as_ref()
        .map(|p| pgm::load_mask(resolve(base_dir, p)))
        .transpose()?;
    if let Some(t) = &truth_mask {
        check(t.width(), t.height(), "truth mask")?;
    }
    Ok(FruitInstance {
        id: entry.id.clone(),
        mask,
        depth,
        occlusion_label: entry.occlusion_label,
        completed_mask,
        truth_mask,
        ground_truth: entry.ground_truth,
    })
}
