//! Per-fruit estimation pipeline and manifest-driven batch execution.
//!
//! One instance flows: completion (by occlusion label and configured mode),
//! depth backfill, back-projection, tilt estimation, projection-corrected
//! area, volume regression, mass, grade. Batches process instances
//! independently — one bad fruit never aborts the run — and assemble results
//! in id order so output is identical for any worker count.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::camera::{deproject, CameraIntrinsics};
use crate::completion::{
    self, backfill_depth, complete_symmetry, completion_metrics, ingest_external_mask,
    region_area_ratio, CompletionMethod,
};
use crate::error::{Error, Result};
use crate::manifest::{FruitInstance, Manifest, OcclusionLabel};
use crate::massreg::{
    frontal_area, grade, mass_from_volume, predict_volume, projected_area_metric, DensityConfig,
    Grade, GradeThresholds, PolynomialModel,
};
use crate::pose::{estimate_tilt, ApexSearchConfig};
use crate::raster::RasterMask;

/// Completion strategy for occluded instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CompletionMode {
    None,
    #[default]
    Symmetry,
    External,
}

/// Which tilt component feeds the cosine correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CorrectionMode {
    /// Divide by cos of the full axis tilt.
    #[default]
    #[serde(rename = "paper-cos-theta")]
    CosTheta,
    /// Use only the out-of-image-plane lean; in-plane lean does not shrink
    /// the visible area under a level camera.
    #[serde(rename = "out-of-plane-only")]
    OutOfPlaneOnly,
}

/// Which pixel-area-ratio flavor lands in the records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ParMode {
    /// Whole restored fruit over whole true fruit.
    #[default]
    FruitVsTruth,
    /// Restored-only region over truly-missing region.
    RegionVsMissing,
}

/// Everything `estimate` needs besides the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub density: DensityConfig,
    pub thresholds: GradeThresholds,
    pub completion: CompletionMode,
    pub correction: CorrectionMode,
    pub par_mode: ParMode,
    pub apex: ApexSearchConfig,
    pub model_path: Option<PathBuf>,
    pub seed: u64,
    pub workers: usize,
    /// Dense back-projected clouds are subsampled to this size before the
    /// pose stage; the tilt estimate saturates long before full density.
    pub pose_max_points: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            density: DensityConfig::default(),
            thresholds: GradeThresholds::default(),
            completion: CompletionMode::default(),
            correction: CorrectionMode::default(),
            par_mode: ParMode::default(),
            apex: ApexSearchConfig::default(),
            model_path: None,
            seed: 0,
            workers: 1,
            pose_max_points: 3000,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::format(path, format!("invalid config JSON: {e}")))?;
        cfg.density
            .rho
            .is_finite()
            .then_some(())
            .ok_or_else(|| Error::Validation("non-finite density".into()))?;
        cfg.thresholds.validate()?;
        cfg.apex.validate()?;
        Ok(cfg)
    }
}

/// One fruit's estimate, or the error that stopped it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub id: String,
    pub occlusion_label: OcclusionLabel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub completion_method: Option<CompletionMethod>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_capped: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub area_visible_cm2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub area_frontal_cm2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub volume_cm3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub volume_out_of_domain: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grade: Option<Grade>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub par: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iou: Option<f64>,
}

impl InstanceResult {
    fn failed(id: &str, label: OcclusionLabel, err: &Error) -> Self {
        Self {
            id: id.to_string(),
            occlusion_label: label,
            error: Some(err.to_string()),
            completion_method: None,
            theta_deg: None,
            theta_capped: None,
            area_visible_cm2: None,
            area_frontal_cm2: None,
            volume_cm3: None,
            volume_out_of_domain: None,
            mass_g: None,
            grade: None,
            par: None,
            iou: None,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

/// Stable per-instance seed: FNV-1a over the id, mixed with the batch seed.
pub fn instance_seed(batch_seed: u64, id: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64 ^ batch_seed;
    for b in id.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn complete_instance(
    instance: &FruitInstance,
    cfg: &PipelineConfig,
) -> Result<(RasterMask, CompletionMethod)> {
    if instance.occlusion_label == OcclusionLabel::Isolated {
        return Ok((instance.mask.clone(), CompletionMethod::None));
    }
    match cfg.completion {
        CompletionMode::None => Ok((instance.mask.clone(), CompletionMethod::None)),
        CompletionMode::Symmetry => {
            let done = complete_symmetry(&instance.mask)?;
            Ok((done.completed, done.method))
        }
        CompletionMode::External => {
            let external = instance.completed_mask.as_ref().ok_or_else(|| {
                Error::Consistency(format!(
                    "instance {}: external completion requested but no completed mask in manifest",
                    instance.id
                ))
            })?;
            let done = ingest_external_mask(external, &instance.mask)?;
            Ok((done.completed, done.method))
        }
    }
}

/// Run the full geometric pipeline on one instance.
pub fn estimate_instance(
    instance: &FruitInstance,
    intrinsics: &CameraIntrinsics,
    model: &PolynomialModel,
    cfg: &PipelineConfig,
) -> InstanceResult {
    let run = || -> Result<InstanceResult> {
        let (completed, method) = complete_instance(instance, cfg)?;
        let filled = backfill_depth(&completed, &instance.mask, &instance.depth)?;
        let cloud = deproject(&completed, &filled, intrinsics)?;
        let pose_cloud = cloud.stride_subsample(cfg.pose_max_points);
        let apex_cfg = ApexSearchConfig {
            seed: instance_seed(cfg.seed, &instance.id),
            ..cfg.apex
        };
        let pose = estimate_tilt(&pose_cloud, &apex_cfg)?;
        let theta = match cfg.correction {
            CorrectionMode::CosTheta => pose.theta_deg,
            CorrectionMode::OutOfPlaneOnly => pose.out_of_plane_deg(),
        };
        let area_visible = projected_area_metric(&completed, &filled, intrinsics)?;
        let (area_frontal, capped) = frontal_area(area_visible, theta);
        let prediction = predict_volume(model, area_frontal);
        let mass = mass_from_volume(prediction.volume_cm3, &cfg.density);
        let fruit_grade = grade(mass, &cfg.thresholds);

        let (par, iou) = match &instance.truth_mask {
            Some(truth) => {
                let par = match cfg.par_mode {
                    ParMode::FruitVsTruth => completion_metrics(&completed, truth)?.par,
                    ParMode::RegionVsMissing => {
                        region_area_ratio(&completed, &instance.mask, truth)?
                    }
                };
                (Some(par), Some(completion::iou(&completed, truth)?))
            }
            None => (None, None),
        };

        Ok(InstanceResult {
            id: instance.id.clone(),
            occlusion_label: instance.occlusion_label,
            error: None,
            completion_method: Some(method),
            theta_deg: Some(theta),
            theta_capped: Some(capped),
            area_visible_cm2: Some(area_visible),
            area_frontal_cm2: Some(area_frontal),
            volume_cm3: Some(prediction.volume_cm3),
            volume_out_of_domain: Some(prediction.out_of_domain),
            mass_g: Some(mass),
            grade: Some(fruit_grade),
            par,
            iou,
        })
    };
    match run() {
        Ok(result) => result,
        Err(e) => InstanceResult::failed(&instance.id, instance.occlusion_label, &e),
    }
}

/// Load and estimate every manifest instance; results come back sorted by
/// id regardless of worker count. Instances that fail to load or compute
/// yield error records instead of aborting the batch.
pub fn run_batch(
    manifest: &Manifest,
    base_dir: &std::path::Path,
    model: &PolynomialModel,
    cfg: &PipelineConfig,
) -> Vec<InstanceResult> {
    let workers = cfg.workers.max(1).min(manifest.instances.len().max(1));
    let process = |entry: &crate::manifest::InstanceEntry| -> InstanceResult {
        match crate::manifest::load_instance(entry, &manifest.intrinsics, base_dir) {
            Ok(instance) => estimate_instance(&instance, &manifest.intrinsics, model, cfg),
            Err(e) => InstanceResult::failed(&entry.id, entry.occlusion_label, &e),
        }
    };

    // carry the manifest index so duplicate ids still sort deterministically
    let mut indexed: Vec<(usize, InstanceResult)> = if workers <= 1 {
        manifest.instances.iter().map(process).enumerate().collect()
    } else {
        let next = AtomicUsize::new(0);
        let collected: Mutex<Vec<(usize, InstanceResult)>> =
            Mutex::new(Vec::with_capacity(manifest.instances.len()));
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(entry) = manifest.instances.get(i) else {
                        break;
                    };
                    let result = process(entry);
                    collected.lock().unwrap().push((i, result));
                });
            }
        });
        collected.into_inner().unwrap()
    };
    indexed.sort_by(|(ia, a), (ib, b)| a.id.cmp(&b.id).then(ia.cmp(ib)));
    indexed.into_iter().map(|(_, r)| r).collect()
}

/// Serialize batch results with stable ordering and a trailing newline.
pub fn results_to_bytes(results: &[InstanceResult]) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(results)
        .map_err(|e| Error::Validation(format!("results serialization: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn load_results(path: impl AsRef<std::path::Path>) -> Result<Vec<InstanceResult>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::format(path, format!("invalid results JSON: {e}")))
}
