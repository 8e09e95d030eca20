//! Command-line surface for the strawberry sizing pipeline: synthetic
//! fixture generation, calibration, batch estimation, evaluation, and the
//! single-shot diagnostic commands.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use strawmass::camera::CameraIntrinsics;
use strawmass::cloud::load_pointcloud;
use strawmass::completion::{band_classify, iou, pixel_area_ratio, region_area_ratio};
use strawmass::error::Error;
use strawmass::ganloss::{
    adversarial_loss, cycle_loss, total_objective, DiscriminatorBatch, MappingBatch,
    ObjectiveWeights,
};
use strawmass::manifest::{GroundTruth, InstanceEntry, Manifest, OcclusionLabel};
use strawmass::massreg::{fit_polynomial, load_calibration_csv, load_model, save_model};
use strawmass::pgm::{load_mask, save_depth, save_mask};
use strawmass::pipeline::{
    load_results, results_to_bytes, run_batch, CompletionMode, InstanceResult, PipelineConfig,
};
use strawmass::pose::{estimate_tilt, ApexSearchConfig};
use strawmass::report::{build_report, report_to_bytes, EvalRecord};
use strawmass::synth::{
    analytic_frontal_area, analytic_volume, generate_cloud, occlude, render, FruitShapeParams,
    OcclusionSpec, ScenePose,
};

/// Exit codes: 0 success, 2 usage, 3 computation failure.
const EXIT_USAGE: u8 = 2;
const EXIT_COMPUTE: u8 = 3;

#[derive(Parser)]
#[command(name = "strawmass", version, about = "RGB-D strawberry sizing pipeline")]
struct Cli {
    /// Pipeline configuration JSON; command-line flags win over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Batch seed; feeds deterministic per-instance seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for batch estimation.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file (or directory for `synth`); standard output when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic fruit fixture: rasters, cloud, manifest and a
    /// ground-truth sidecar.
    Synth(SynthArgs),
    /// Fit the area-to-volume polynomial from a calibration CSV.
    Calibrate(CalibrateArgs),
    /// Run the estimation pipeline over a manifest.
    Estimate(EstimateArgs),
    /// Join estimation results with ground truth into an evaluation report.
    Evaluate(EvaluateArgs),
    /// Estimate the tilt pose of a point-cloud file.
    Pose(PoseArgs),
    /// Objective arithmetic for the adversarial completer.
    Ganloss(GanlossArgs),
    /// PAR and IoU of a predicted mask against a truth mask.
    Metrics(MetricsArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Scene description JSON.
    #[arg(long)]
    scene: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    /// CSV with header `area_cm2,volume_cm3`.
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, default_value_t = 3)]
    degree: usize,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Volume model JSON; overrides the config's model path.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Completion strategy for occluded instances.
    #[arg(long, value_enum)]
    completion: Option<CompletionFlag>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Manifest whose instances carry ground truth.
    #[arg(long)]
    manifest: PathBuf,
    /// Results file produced by `estimate`.
    #[arg(long)]
    results: PathBuf,
}

#[derive(Args)]
struct PoseArgs {
    /// Point-cloud text file (`x y z label` lines).
    #[arg(long)]
    cloud: PathBuf,
    /// Apex search radius in meters.
    #[arg(long)]
    radius: Option<f64>,
}

#[derive(Args)]
struct GanlossArgs {
    #[command(subcommand)]
    command: GanlossCommand,
}

#[derive(Subcommand)]
enum GanlossCommand {
    /// Evaluate the three losses over a batches JSON file.
    Eval(GanlossEvalArgs),
}

#[derive(Args)]
struct GanlossEvalArgs {
    /// JSON with mapping and discriminator batches.
    #[arg(long)]
    batches: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    /// Predicted (restored) mask.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth mask.
    #[arg(long)]
    truth: PathBuf,
    /// Occluded input mask; adds the region-only area ratio.
    #[arg(long)]
    occluded: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CompletionFlag {
    None,
    Symmetry,
    External,
}

impl From<CompletionFlag> for CompletionMode {
    fn from(f: CompletionFlag) -> Self {
        match f {
            CompletionFlag::None => CompletionMode::None,
            CompletionFlag::Symmetry => CompletionMode::Symmetry,
            CompletionFlag::External => CompletionMode::External,
        }
    }
}

struct CliFailure {
    code: u8,
    message: String,
}

impl CliFailure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    fn compute(message: impl Into<String>) -> Self {
        Self { code: EXIT_COMPUTE, message: message.into() }
    }
}

impl From<Error> for CliFailure {
    fn from(e: Error) -> Self {
        CliFailure::compute(e.to_string())
    }
}

type CliResult = Result<(), CliFailure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(args) => cmd_synth(&cli, args),
        Command::Calibrate(args) => cmd_calibrate(&cli, args),
        Command::Estimate(args) => cmd_estimate(&cli, args),
        Command::Evaluate(args) => cmd_evaluate(&cli, args),
        Command::Pose(args) => cmd_pose(&cli, args),
        Command::Ganloss(args) => match &args.command {
            GanlossCommand::Eval(eval) => cmd_ganloss_eval(&cli, eval),
        },
        Command::Metrics(args) => cmd_metrics(&cli, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliFailure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            PipelineConfig::load(path).map_err(|e| CliFailure::usage(format!("config: {e}")))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
    }
    Ok(cfg)
}

fn emit(cli: &Cli, bytes: &[u8]) -> CliResult {
    match &cli.output {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| CliFailure::compute(format!("writing {}: {e}", path.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| CliFailure::compute(format!("stdout: {e}")))
        }
    }
}

// ---------------------------------------------------------------- synth

/// Scene description consumed by `synth`.
#[derive(Debug, Serialize, Deserialize)]
struct SceneDescription {
    shape: FruitShapeParams,
    pose: ScenePose,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    occlusion: Option<OcclusionSpec>,
    #[serde(default = "default_intrinsics")]
    intrinsics: CameraIntrinsics,
    #[serde(default = "default_density")]
    samples_per_cm2: f64,
    #[serde(default = "default_id")]
    id: String,
}

fn default_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics { fx: 615.0, fy: 615.0, cx: 320.0, cy: 240.0, width: 640, height: 480 }
}

fn default_density() -> f64 {
    250.0
}

fn default_id() -> String {
    "fruit-0000".into()
}

fn cmd_synth(cli: &Cli, args: &SynthArgs) -> CliResult {
    let cfg = load_config(cli)?;
    let text = std::fs::read_to_string(&args.scene)
        .map_err(|e| CliFailure::usage(format!("scene {}: {e}", args.scene.display())))?;
    let scene: SceneDescription = serde_json::from_str(&text)
        .map_err(|e| CliFailure::usage(format!("invalid scene JSON: {e}")))?;
    scene
        .shape
        .validate()
        .and_then(|()| scene.pose.validate())
        .and_then(|()| scene.intrinsics.validate())
        .map_err(|e| CliFailure::usage(format!("invalid scene: {e}")))?;

    let out_dir = cli
        .output
        .clone()
        .ok_or_else(|| CliFailure::usage("synth requires --output <dir>"))?;
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliFailure::compute(format!("creating {}: {e}", out_dir.display())))?;

    let seed = cli.seed.unwrap_or(cfg.seed);
    let cloud = generate_cloud(&scene.shape, &scene.pose, scene.samples_per_cm2, seed)?;
    let (full_mask, full_depth) = render(&cloud, &scene.intrinsics)?;

    let id = &scene.id;
    let mask_path = out_dir.join(format!("{id}_mask.pgm"));
    let depth_path = out_dir.join(format!("{id}_depth.pgm"));
    let cloud_path = out_dir.join(format!("{id}_cloud.txt"));

    let (instance_mask, truth_mask_path, occlusion_label) = match &scene.occlusion {
        Some(spec) => {
            let (occluded, _missing) = occlude(&full_mask, spec)?;
            let truth_path = out_dir.join(format!("{id}_truth_mask.pgm"));
            save_mask(&full_mask, &truth_path)?;
            (
                occluded,
                Some(PathBuf::from(format!("{id}_truth_mask.pgm"))),
                OcclusionLabel::Occluded,
            )
        }
        None => (full_mask.clone(), None, OcclusionLabel::Isolated),
    };

    // the sensor cannot see behind an occluder: depth only under the
    // visible mask
    let mut depth =
        strawmass::raster::DepthRaster::new(scene.intrinsics.width, scene.intrinsics.height);
    for (u, v) in instance_mask.fruit_pixels() {
        depth.set(u, v, full_depth.at(u, v));
    }

    save_mask(&instance_mask, &mask_path)?;
    save_depth(&depth, &depth_path)?;
    strawmass::cloud::save_pointcloud(&cloud, &cloud_path)?;

    let volume = analytic_volume(&scene.shape);
    let truth = GroundTruth {
        area_cm2: analytic_frontal_area(&scene.shape),
        angle_deg: scene.pose.tilt_deg,
        volume_cm3: volume,
        mass_g: cfg.density.rho * volume,
    };
    let mut sidecar = serde_json::to_vec_pretty(&truth)
        .map_err(|e| CliFailure::compute(format!("sidecar serialization: {e}")))?;
    sidecar.push(b'\n');
    std::fs::write(out_dir.join(format!("{id}_truth.json")), sidecar)
        .map_err(|e| CliFailure::compute(e.to_string()))?;

    let manifest = Manifest {
        intrinsics: scene.intrinsics,
        instances: vec![InstanceEntry {
            id: id.clone(),
            mask: PathBuf::from(format!("{id}_mask.pgm")),
            depth: PathBuf::from(format!("{id}_depth.pgm")),
            occlusion_label,
            completed_mask: None,
            truth_mask: truth_mask_path,
            ground_truth: Some(truth),
        }],
    };
    manifest.save(out_dir.join("manifest.json"))?;
    println!("wrote fixture {id} to {}", out_dir.display());
    Ok(())
}

// ------------------------------------------------------------ calibrate

fn cmd_calibrate(cli: &Cli, args: &CalibrateArgs) -> CliResult {
    let samples = load_calibration_csv(&args.csv)
        .map_err(|e| CliFailure::usage(format!("calibration csv: {e}")))?;
    let model = fit_polynomial(&samples, args.degree)
        .map_err(|e| CliFailure::compute(format!("fit failed: {e}")))?;
    println!("R^2 = {:.6}", model.r_squared);
    if let Some(path) = &cli.output {
        save_model(&model, path)?;
    } else {
        let mut bytes = serde_json::to_vec_pretty(&model)
            .map_err(|e| CliFailure::compute(e.to_string()))?;
        bytes.push(b'\n');
        use std::io::Write;
        std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliFailure::compute(e.to_string()))?;
    }
    Ok(())
}

// ------------------------------------------------------------- estimate

fn cmd_estimate(cli: &Cli, args: &EstimateArgs) -> CliResult {
    let mut cfg = load_config(cli)?;
    if let Some(flag) = args.completion {
        cfg.completion = flag.into();
    }
    let model_path = args
        .model
        .clone()
        .or_else(|| cfg.model_path.clone())
        .ok_or_else(|| CliFailure::usage("estimate needs --model or a config model_path"))?;
    let model = load_model(&model_path)?;
    let manifest = Manifest::load(&args.manifest)?;
    let base = args
        .manifest
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));

    let results = run_batch(&manifest, &base, &model, &cfg);
    let succeeded = results.iter().filter(|r| r.succeeded()).count();
    emit(cli, &results_to_bytes(&results)?)?;
    for r in results.iter().filter(|r| !r.succeeded()) {
        eprintln!("instance {} failed: {}", r.id, r.error.as_deref().unwrap_or("?"));
    }
    if succeeded == 0 {
        return Err(CliFailure::compute("no instance succeeded"));
    }
    Ok(())
}

// ------------------------------------------------------------- evaluate

fn cmd_evaluate(cli: &Cli, args: &EvaluateArgs) -> CliResult {
    let manifest = Manifest::load(&args.manifest)?;
    let results: Vec<InstanceResult> = load_results(&args.results)?;

    let missing: Vec<&str> = results
        .iter()
        .filter(|r| {
            !manifest
                .instances
                .iter()
                .any(|i| i.id == r.id && i.ground_truth.is_some())
        })
        .map(|r| r.id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(CliFailure::compute(format!(
            "no ground truth for result ids: {}",
            missing.join(", ")
        )));
    }
    if results.is_empty() {
        return Err(CliFailure::compute("results and manifest share no instances"));
    }

    let mut records = Vec::new();
    for r in &results {
        let entry = manifest
            .instances
            .iter()
            .find(|i| i.id == r.id)
            .expect("checked above");
        let gt = entry.ground_truth.expect("checked above");
        records.push(EvalRecord {
            id: r.id.clone(),
            occlusion_label: r.occlusion_label,
            estimated_area_cm2: r.area_frontal_cm2,
            true_area_cm2: Some(gt.area_cm2),
            estimated_angle_deg: r.theta_deg,
            true_angle_deg: Some(gt.angle_deg),
            estimated_volume_cm3: r.volume_cm3,
            true_volume_cm3: Some(gt.volume_cm3),
            estimated_mass_g: r.mass_g,
            true_mass_g: Some(gt.mass_g),
            grade: r.grade,
            par: r.par,
            iou: r.iou,
        });
    }
    let report = build_report(records)?;
    emit(cli, &report_to_bytes(&report)?)
}

// ----------------------------------------------------------------- pose

fn cmd_pose(cli: &Cli, args: &PoseArgs) -> CliResult {
    let cfg = load_config(cli)?;
    let cloud = load_pointcloud(&args.cloud)?;
    let apex_cfg = ApexSearchConfig {
        radius: args.radius.unwrap_or(cfg.apex.radius),
        seed: cli.seed.unwrap_or(cfg.apex.seed),
        ..cfg.apex
    };
    let pose = estimate_tilt(&cloud, &apex_cfg)?;
    #[derive(Serialize)]
    struct PoseOut {
        theta_deg: f64,
        apex: [f64; 3],
        plane_normal: [f64; 3],
        rmse: f64,
    }
    let out = PoseOut {
        theta_deg: pose.theta_deg,
        apex: pose.apex,
        plane_normal: pose.plane.normal,
        rmse: pose.plane.rmse,
    };
    let mut bytes =
        serde_json::to_vec_pretty(&out).map_err(|e| CliFailure::compute(e.to_string()))?;
    bytes.push(b'\n');
    emit(cli, &bytes)
}

// -------------------------------------------------------------- ganloss

/// Input document for `ganloss eval`.
#[derive(Debug, Default, Serialize, Deserialize)]
struct GanlossBatches {
    #[serde(default)]
    mapping: MappingBatch,
    #[serde(default)]
    disc_ab: DiscriminatorBatch,
    #[serde(default)]
    disc_ba: DiscriminatorBatch,
    #[serde(default)]
    lambda: Option<f64>,
}

fn cmd_ganloss_eval(cli: &Cli, args: &GanlossEvalArgs) -> CliResult {
    let text = std::fs::read_to_string(&args.batches)
        .map_err(|e| CliFailure::usage(format!("batches {}: {e}", args.batches.display())))?;
    let batches: GanlossBatches = serde_json::from_str(&text)
        .map_err(|e| CliFailure::usage(format!("invalid batches JSON: {e}")))?;
    let weights = match batches.lambda {
        Some(l) => ObjectiveWeights::new(l).map_err(|e| CliFailure::usage(e.to_string()))?,
        None => ObjectiveWeights::default(),
    };
    let cyc = cycle_loss(&batches.mapping)?;
    let adv_ab = adversarial_loss(&batches.disc_ab)?;
    let adv_ba = adversarial_loss(&batches.disc_ba)?;
    #[derive(Serialize)]
    struct Losses {
        cycle_loss: f64,
        adversarial_ab: f64,
        adversarial_ba: f64,
        lambda: f64,
        total_objective: f64,
    }
    let out = Losses {
        cycle_loss: cyc,
        adversarial_ab: adv_ab,
        adversarial_ba: adv_ba,
        lambda: weights.lambda,
        total_objective: total_objective(adv_ab, adv_ba, cyc, &weights),
    };
    let mut bytes =
        serde_json::to_vec_pretty(&out).map_err(|e| CliFailure::compute(e.to_string()))?;
    bytes.push(b'\n');
    emit(cli, &bytes)
}

// -------------------------------------------------------------- metrics

fn cmd_metrics(cli: &Cli, args: &MetricsArgs) -> CliResult {
    let pred = load_mask(&args.pred)?;
    let truth = load_mask(&args.truth)?;
    let par = pixel_area_ratio(&pred, &truth)?;
    let overlap = iou(&pred, &truth)?;
    let region_par = match &args.occluded {
        Some(path) => {
            let occluded = load_mask(path)?;
            Some(region_area_ratio(&pred, &occluded, &truth)?)
        }
        None => None,
    };
    #[derive(Serialize)]
    struct Metrics {
        par: f64,
        iou: f64,
        in_band: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        region_par: Option<f64>,
    }
    let out = Metrics { par, iou: overlap, in_band: band_classify(par), region_par };
    let mut bytes =
        serde_json::to_vec_pretty(&out).map_err(|e| CliFailure::compute(e.to_string()))?;
    bytes.push(b'\n');
    emit(cli, &bytes)
}
