//! Error type shared across the library.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in geometry, generation, metrics or file IO.
#[derive(Debug, Error)]
pub enum Error {
    /// Input vector has zero (or numerically zero) norm and cannot be
    /// normalized or projected.
    #[error("vector has zero norm (norm = {norm:e})")]
    ZeroNorm { norm: f64 },

    /// A component was NaN or infinite where a finite value is required.
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    /// Ambient dimension below the minimum the operation supports.
    #[error("dimension {dim} too small, need at least {min}")]
    DimensionTooSmall { dim: usize, min: usize },

    /// Two vectors that must share a dimension do not.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// The tangent direction handed to a rotation is not orthogonal to the
    /// base vector within tolerance.
    #[error("direction not orthogonal to base vector (|<u,v>| = {dot:e}, tolerance {tol:e})")]
    NotOrthogonal { dot: f64, tol: f64 },

    /// Rotation angle outside the supported range.
    #[error("angle {angle} outside [0, pi/2]")]
    AngleOutOfRange { angle: f64 },

    /// A cosine lower bound outside its valid interval.
    #[error("cosine lower bound {value} outside [{min}, {max}]")]
    BoundOutOfRange { value: f64, min: f64, max: f64 },

    /// Repeated redraws failed to produce a usable sample.
    #[error("gave up after {attempts} redraws in {context}")]
    RetriesExhausted { context: &'static str, attempts: u32 },

    /// Configuration value outside its domain.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Rejection sampling for a reference set hit the rejection cap.
    #[error(
        "reference set infeasible: {consecutive} consecutive rejections with \
         {accepted} of {requested} identities placed (max pairwise cosine {cap}); \
         raise the cap, lower the count, or raise the dimension"
    )]
    InfeasibleReferenceSet {
        consecutive: u64,
        accepted: usize,
        requested: usize,
        cap: f64,
    },

    /// Impostor or genuine pair sampling could not find eligible pairs.
    #[error("pair sampling stalled: {0}")]
    PairSamplingStalled(String),

    /// A metric was asked for on an empty score side.
    #[error("{side} score list is empty")]
    EmptyScores { side: &'static str },

    /// Variance vanished where a ratio needs it.
    #[error("zero variance on both score sides, ratio undefined")]
    ZeroVariance,

    /// No class survived the per-class filters of an intra-class metric.
    #[error("no class eligible for {metric}")]
    NoEligibleClass { metric: &'static str },

    /// Label sidecar and embedding matrix disagree on the sample count.
    #[error("label count {labels} does not match row count {rows}")]
    LabelCountMismatch { labels: usize, rows: usize },

    /// Attribute table and embedding set disagree on the sample count.
    #[error("attribute row count {rows} does not match sample count {samples}")]
    AttributeCountMismatch { rows: usize, samples: usize },

    /// Malformed input file. `offset` is a byte offset where that makes
    /// sense, a line number otherwise (stated in the message).
    #[error("format error in {path} at {offset}: {message}")]
    Format {
        path: String,
        offset: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}
