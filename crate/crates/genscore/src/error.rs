use thiserror::Error;

/// Errors produced by domain geometry, weighting, estimation, sampling,
/// and experiment routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix did not have the expected dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A point (or data row) lies outside the domain.
    #[error("point out of domain{}", row.map(|r| format!(" (row {r})")).unwrap_or_default())]
    OutOfDomain { row: Option<usize> },

    /// A parameter value is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A weight derivative is singular because the point sits on the
    /// boundary while the weight exponent is below one.
    #[error("boundary singularity: coordinate {coord} has zero distance with exponent {alpha}")]
    BoundarySingularity { coord: usize, alpha: f64 },

    /// The requested operation is not available for this domain shape.
    #[error("unsupported domain shape: {0}")]
    UnsupportedDomain(String),

    /// Real-root isolation for a polynomial section failed.
    #[error("polynomial root isolation failed: {0}")]
    RootIsolation(String),

    /// The model cannot be normalized on the given domain.
    #[error("model is not normalizable: violates {condition}")]
    NotNormalizable { condition: String },

    /// The weight function is not valid for the model on this domain.
    #[error("weight function invalid for model: {0}")]
    InvalidWeight(String),

    /// A linear system was too ill-conditioned to solve reliably.
    #[error("singular or ill-conditioned system (condition estimate {cond:.3e})")]
    Singular { cond: f64 },

    /// Every weight vanished, leaving the estimating equations empty.
    #[error("all weights are zero: every observation sits on the boundary")]
    ZeroWeightSum,

    /// A denominator that must be positive was not.
    #[error("non-positive denominator in {context}: {value}")]
    NonPositiveDenominator { context: &'static str, value: f64 },

    /// No positive-mass component was found when sampling a conditional.
    #[error("conditional mass underflow: every section component has zero mass")]
    MassUnderflow,

    /// A starting point inside the domain could not be located.
    #[error("no feasible starting point found after {attempts} attempts")]
    NoStartPoint { attempts: usize },

    /// A numeric routine produced a non-finite value.
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    /// Quadrature failed to converge to the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    /// Data were required but none were given.
    #[error("empty data: {0}")]
    EmptyData(&'static str),

    /// A truth edge set that must be non-trivial was empty or complete.
    #[error("degenerate truth graph: {0}")]
    DegenerateTruth(&'static str),

    /// JSON (de)serialization failure.
    #[error("serialization error: {0}")]
    Serde(String),

    /// Binary dump I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
