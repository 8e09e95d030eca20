//! Labeled 3-D point clouds in the camera frame.
//!
//! Frame convention: +z away from the camera, +y image-down, +x image-right,
//! so "camera up" is (0, -1, 0).

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

/// Unit vector pointing up in the camera frame (image-up).
pub const CAMERA_UP: Vector3<f64> = Vector3::new(0.0, -1.0, 0.0);

/// Region tag attached to each point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum RegionLabel {
    Unknown = 0,
    Stem = 1,
    Tip = 2,
    Belly = 3,
}

impl RegionLabel {
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(RegionLabel::Unknown),
            1 => Some(RegionLabel::Stem),
            2 => Some(RegionLabel::Tip),
            3 => Some(RegionLabel::Belly),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }
}

/// Point set with per-point region labels.
#[derive(Debug, Clone)]
pub struct PointCloud {
    points: Vec<Point3<f64>>,
    labels: Vec<RegionLabel>,
}

impl PointCloud {
    pub fn new() -> Self {
        Self { points: Vec::new(), labels: Vec::new() }
    }

    pub fn from_parts(points: Vec<Point3<f64>>, labels: Vec<RegionLabel>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} points vs {} labels",
                points.len(),
                labels.len()
            )));
        }
        for p in &points {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(Error::Validation("non-finite point coordinate".into()));
            }
        }
        Ok(Self { points, labels })
    }

    pub fn push(&mut self, p: Point3<f64>, label: RegionLabel) {
        self.points.push(p);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[RegionLabel] {
        &self.labels
    }

    /// True when at least one point carries a non-unknown label.
    pub fn has_labels(&self) -> bool {
        self.labels.iter().any(|&l| l != RegionLabel::Unknown)
    }

    /// Indices of points with the given label.
    pub fn indices_of(&self, label: RegionLabel) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn centroid_of(&self, indices: &[usize]) -> Option<Point3<f64>> {
        if indices.is_empty() {
            return None;
        }
        let mut acc = Vector3::zeros();
        for &i in indices {
            acc += self.points[i].coords;
        }
        Some(Point3::from(acc / indices.len() as f64))
    }

    /// Every n-th point, keeping labels. Used to bound pose-search cost on
    /// dense back-projected clouds.
    pub fn stride_subsample(&self, max_points: usize) -> PointCloud {
        if self.len() <= max_points || max_points == 0 {
            return self.clone();
        }
        let stride = self.len().div_ceil(max_points);
        let mut out = PointCloud::new();
        for i in (0..self.len()).step_by(stride) {
            out.push(self.points[i], self.labels[i]);
        }
        out
    }
}

impl Default for PointCloud {
    fn default() -> Self {
        Self::new()
    }
}

/// Parse the text interchange format: one `x y z label` line per point,
/// meters, `#` comments and blank lines skipped.
pub fn load_pointcloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let file = std::fs::File::open(path.as_ref())?;
    read_pointcloud(BufReader::new(file))
}

pub fn read_pointcloud(reader: impl BufRead) -> Result<PointCloud> {
    let mut cloud = PointCloud::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let mut next_f64 = |what: &str| -> Result<f64> {
            let tok = it.next().ok_or_else(|| Error::Parse {
                line: lineno + 1,
                reason: format!("missing {what}"),
            })?;
            tok.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno + 1,
                reason: format!("non-numeric {what}: {tok:?}"),
            })
        };
        let x = next_f64("x")?;
        let y = next_f64("y")?;
        let z = next_f64("z")?;
        let label_tok = it.next().ok_or_else(|| Error::Parse {
            line: lineno + 1,
            reason: "missing label".into(),
        })?;
        let code: i64 = label_tok.parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            reason: format!("non-numeric label: {label_tok:?}"),
        })?;
        let label = u8::try_from(code)
            .ok()
            .and_then(RegionLabel::from_code)
            .ok_or_else(|| Error::Validation(format!("line {}: label {} not in 0..=3", lineno + 1, code)))?;
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::Parse {
                line: lineno + 1,
                reason: "non-finite coordinate".into(),
            });
        }
        cloud.push(Point3::new(x, y, z), label);
    }
    Ok(cloud)
}

pub fn save_pointcloud(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
    writeln!(out, "# x y z label")?;
    for (p, l) in cloud.points().iter().zip(cloud.labels()) {
        writeln!(out, "{} {} {} {}", p.x, p.y, p.z, l.code())?;
    }
    Ok(())
}
