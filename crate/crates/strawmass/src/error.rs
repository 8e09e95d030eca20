//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed file contents (bad magic, wrong maxval, bad JSON, ...).
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    /// Text parse failure with a 1-based line number.
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// An input violates a documented invariant.
    #[error("{0}")]
    Validation(String),

    /// Two inputs that must agree (dimensions, ids) do not.
    #[error("{0}")]
    Consistency(String),

    /// No fruit pixel with valid depth survived back-projection.
    #[error("back-projection produced an empty cloud")]
    EmptyCloud,

    /// Fewer samples or points than an operation needs.
    #[error("{context}: got {got}, need at least {need}")]
    InsufficientSamples {
        context: &'static str,
        got: usize,
        need: usize,
    },

    /// No generated point projected inside the camera frame.
    #[error("no point projects inside the frame")]
    EmptyRender,

    /// Occlusion placement could not reach the requested coverage.
    #[error("occlusion coverage {target} unreachable after {attempts} attempts")]
    OcclusionFailure { target: f64, attempts: usize },

    /// Pixel distribution or point set admits no principal axis.
    #[error("axis undefined: {0}")]
    AxisUndefined(String),

    /// Too few neighbors inside the search radius.
    #[error("sparse neighborhood: {found} points within radius, need {need}")]
    SparseNeighborhood { found: usize, need: usize },

    /// Plane or regression design matrix is rank-deficient.
    #[error("rank-deficient input: {0}")]
    RankDeficient(String),

    /// A ratio with an empty or non-positive denominator.
    #[error("undefined ratio: {0}")]
    DivisionUndefined(String),

    /// Depth backfill or metric area with no valid depth anywhere.
    #[error("no valid depth available: {0}")]
    NoDepth(String),

    /// Loss evaluation over an empty batch.
    #[error("empty batch: {0}")]
    EmptyBatch(String),

    /// Paired arrays of different lengths.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

impl Error {
    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
