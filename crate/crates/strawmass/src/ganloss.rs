//! Closed-form numeric objective of the cycle-consistent adversarial
//! completer, evaluated over supplied mapping and discriminator outputs.
//!
//! No networks run here: batches of `F(G(x))`, `G(F(y))` and discriminator
//! scores arrive as plain arrays, which makes the loss arithmetic testable
//! in isolation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discriminator outputs are clamped into (0, 1) by this margin before the
/// logarithms, keeping the losses total.
pub const LOG_CLAMP: f64 = 1e-7;

/// Paired samples and their two-generator round trips.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MappingBatch {
    /// Domain-A samples.
    pub x: Vec<Vec<f64>>,
    /// Domain-B samples.
    pub y: Vec<Vec<f64>>,
    /// F(G(x)), aligned with `x`.
    pub fgx: Vec<Vec<f64>>,
    /// G(F(y)), aligned with `y`.
    pub gfy: Vec<Vec<f64>>,
}

impl MappingBatch {
    fn validate(&self) -> Result<()> {
        if self.x.is_empty() || self.y.is_empty() {
            return Err(Error::EmptyBatch("mapping batch needs x and y samples".into()));
        }
        if self.x.len() != self.fgx.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} x samples vs {} fgx samples",
                self.x.len(),
                self.fgx.len()
            )));
        }
        if self.y.len() != self.gfy.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} y samples vs {} gfy samples",
                self.y.len(),
                self.gfy.len()
            )));
        }
        for (a, b) in self.x.iter().zip(&self.fgx) {
            if a.len() != b.len() {
                return Err(Error::ShapeMismatch(format!(
                    "x sample of length {} vs fgx of length {}",
                    a.len(),
                    b.len()
                )));
            }
        }
        for (a, b) in self.y.iter().zip(&self.gfy) {
            if a.len() != b.len() {
                return Err(Error::ShapeMismatch(format!(
                    "y sample of length {} vs gfy of length {}",
                    a.len(),
                    b.len()
                )));
            }
        }
        Ok(())
    }
}

/// Discriminator scores on real and generated samples.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DiscriminatorBatch {
    pub d_real: Vec<f64>,
    pub d_fake: Vec<f64>,
}

/// Weight of the cycle term in the total objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub lambda: f64,
}

impl ObjectiveWeights {
    pub fn new(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::Validation(format!("lambda {lambda} must be finite and >= 0")));
        }
        Ok(Self { lambda })
    }
}

impl Default for ObjectiveWeights {
    /// The conventional value; the objective itself leaves lambda free.
    fn default() -> Self {
        Self { lambda: 10.0 }
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Mean L1 round-trip penalty in both directions:
/// `E ||F(G(x)) - x||_1 + E ||G(F(y)) - y||_1`.
pub fn cycle_loss(batch: &MappingBatch) -> Result<f64> {
    batch.validate()?;
    let fwd: f64 = batch
        .x
        .iter()
        .zip(&batch.fgx)
        .map(|(x, fgx)| l1(fgx, x))
        .sum::<f64>()
        / batch.x.len() as f64;
    let bwd: f64 = batch
        .y
        .iter()
        .zip(&batch.gfy)
        .map(|(y, gfy)| l1(gfy, y))
        .sum::<f64>()
        / batch.y.len() as f64;
    Ok(fwd + bwd)
}

/// `E log D(real) + E log(1 - D(fake))`, natural log, inputs clamped into
/// (0, 1). The same form serves both translation directions with the roles
/// of the domains swapped.
pub fn adversarial_loss(batch: &DiscriminatorBatch) -> Result<f64> {
    if batch.d_real.is_empty() || batch.d_fake.is_empty() {
        return Err(Error::EmptyBatch("adversarial loss needs real and fake scores".into()));
    }
    let clamp = |v: f64| v.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
    let real: f64 =
        batch.d_real.iter().map(|&v| clamp(v).ln()).sum::<f64>() / batch.d_real.len() as f64;
    let fake: f64 = batch.d_fake.iter().map(|&v| (1.0 - clamp(v)).ln()).sum::<f64>()
        / batch.d_fake.len() as f64;
    Ok(real + fake)
}

/// Weighted sum of the two adversarial losses and the cycle term.
pub fn total_objective(gan_ab: f64, gan_ba: f64, cyc: f64, w: &ObjectiveWeights) -> f64 {
    gan_ab + gan_ba + w.lambda * cyc
}
