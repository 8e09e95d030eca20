//! Percent-error statistics, IoU histograms and the machine-readable batch
//! evaluation report.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::OcclusionLabel;
use crate::massreg::Grade;

/// Mean percent error and population variance of raw deviations.
///
/// Variance is taken in the squared natural units of the quantity (cm^4 for
/// area, g^2 for mass, ...), matching how the summaries are reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mean_percent_error: f64,
    pub variance: f64,
    pub n: usize,
}

/// `100 * |predicted - truth| / truth`.
pub fn percent_error(predicted: f64, truth: f64) -> Result<f64> {
    if truth <= 0.0 {
        return Err(Error::DivisionUndefined(format!(
            "percent error against non-positive truth {truth}"
        )));
    }
    Ok(100.0 * (predicted - truth).abs() / truth)
}

/// Aggregate `(predicted, truth)` pairs into [`ErrorStats`]. Population
/// variance, so single-pair inputs yield zero.
pub fn aggregate_stats(pairs: &[(f64, f64)]) -> Result<ErrorStats> {
    if pairs.is_empty() {
        return Err(Error::EmptyBatch("aggregate_stats over zero pairs".into()));
    }
    let n = pairs.len();
    let mut pct = 0.0;
    for &(p, t) in pairs {
        pct += percent_error(p, t)?;
    }
    let deviations: Vec<f64> = pairs.iter().map(|&(p, t)| p - t).collect();
    let mean_dev = deviations.iter().sum::<f64>() / n as f64;
    let variance = deviations.iter().map(|d| (d - mean_dev).powi(2)).sum::<f64>() / n as f64;
    Ok(ErrorStats { mean_percent_error: pct / n as f64, variance, n })
}

/// Histogram bin edges shared by the IoU and PAR distributions.
pub const HISTOGRAM_BINS: [(f64, f64); 4] =
    [(0.0, 0.6), (0.6, 0.8), (0.8, 0.9), (0.9, 1.0)];

/// Four-bin fraction histogram over [0, 1]: lower-inclusive bins, final bin
/// closed at 1.0.
pub fn iou_histogram(values: &[f64]) -> Result<[f64; 4]> {
    if values.is_empty() {
        return Err(Error::EmptyBatch("histogram over zero values".into()));
    }
    let mut counts = [0usize; 4];
    for &v in values {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Validation(format!("histogram value {v} outside [0, 1]")));
        }
        let bin = if v < 0.6 {
            0
        } else if v < 0.8 {
            1
        } else if v < 0.9 {
            2
        } else {
            3
        };
        counts[bin] += 1;
    }
    let n = values.len() as f64;
    Ok([
        counts[0] as f64 / n,
        counts[1] as f64 / n,
        counts[2] as f64 / n,
        counts[3] as f64 / n,
    ])
}

/// Fold a pixel-area ratio into a [0, 1] closeness-to-ideal score for
/// binning: 1 is perfect, over- and under-restoration score alike.
pub fn par_closeness(par: f64) -> f64 {
    (1.0 - (1.0 - par).abs()).max(0.0)
}

/// One fruit's estimated-versus-true quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub occlusion_label: OcclusionLabel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimated_area_cm2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_area_cm2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimated_angle_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_angle_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimated_volume_cm3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_volume_cm3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimated_mass_g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_mass_g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grade: Option<Grade>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub par: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iou: Option<f64>,
}

/// Stats for the four predicted quantities within one occlusion class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct QuantityStats {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub area: Option<ErrorStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle: Option<ErrorStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub volume: Option<ErrorStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<ErrorStats>,
}

impl QuantityStats {
    fn is_empty(&self) -> bool {
        self.area.is_none() && self.angle.is_none() && self.volume.is_none() && self.mass.is_none()
    }
}

/// Batch evaluation: raw per-fruit records plus derived summaries. Empty
/// sections are omitted from the serialized document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_fruit: Vec<EvalRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub isolated: Option<QuantityStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub occluded: Option<QuantityStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub par_histogram: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iou_histogram: Option<[f64; 4]>,
}

fn quantity_stats(records: &[&EvalRecord]) -> Result<QuantityStats> {
    let collect = |est: fn(&EvalRecord) -> Option<f64>,
                   truth: fn(&EvalRecord) -> Option<f64>|
     -> Vec<(f64, f64)> {
        records
            .iter()
            .filter_map(|r| est(r).zip(truth(r)))
            .collect()
    };
    let stats = |pairs: Vec<(f64, f64)>| -> Result<Option<ErrorStats>> {
        if pairs.is_empty() {
            Ok(None)
        } else {
            aggregate_stats(&pairs).map(Some)
        }
    };
    Ok(QuantityStats {
        area: stats(collect(|r| r.estimated_area_cm2, |r| r.true_area_cm2))?,
        angle: stats(
            collect(|r| r.estimated_angle_deg, |r| r.true_angle_deg)
                .into_iter()
                // zero-angle truths make percent error meaningless; skip them
                .filter(|&(_, t)| t > 0.0)
                .collect(),
        )?,
        volume: stats(collect(|r| r.estimated_volume_cm3, |r| r.true_volume_cm3))?,
        mass: stats(collect(|r| r.estimated_mass_g, |r| r.true_mass_g))?,
    })
}

/// Assemble a report from per-fruit records: aggregates split by occlusion
/// label, histograms over whatever PAR/IoU values are present.
pub fn build_report(per_fruit: Vec<EvalRecord>) -> Result<EvalReport> {
    let side = |label: OcclusionLabel, records: &[EvalRecord]| -> Result<Option<QuantityStats>> {
        let subset: Vec<&EvalRecord> =
            records.iter().filter(|r| r.occlusion_label == label).collect();
        if subset.is_empty() {
            return Ok(None);
        }
        let q = quantity_stats(&subset)?;
        Ok(if q.is_empty() { None } else { Some(q) })
    };
    let isolated = side(OcclusionLabel::Isolated, &per_fruit)?;
    let occluded = side(OcclusionLabel::Occluded, &per_fruit)?;
    let pars: Vec<f64> = per_fruit.iter().filter_map(|r| r.par).map(par_closeness).collect();
    let ious: Vec<f64> = per_fruit.iter().filter_map(|r| r.iou).collect();
    Ok(EvalReport {
        per_fruit,
        isolated,
        occluded,
        par_histogram: if pars.is_empty() { None } else { Some(iou_histogram(&pars)?) },
        iou_histogram: if ious.is_empty() { None } else { Some(iou_histogram(&ious)?) },
    })
}

/// Serialize with a stable field order; identical reports produce identical
/// bytes.
pub fn report_to_bytes(report: &EvalReport) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(report)
        .map_err(|e| Error::Validation(format!("report serialization: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn emit_report(report: &EvalReport, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path.as_ref(), report_to_bytes(report)?)?;
    Ok(())
}

pub fn load_report(path: impl AsRef<Path>) -> Result<EvalReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, format!("invalid report JSON: {e}")))
}
