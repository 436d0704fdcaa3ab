use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("bin count mismatch: {left} vs {right}")]
    BinMismatch { left: usize, right: usize },

    #[error("frequency {n} is outside the resolved band |n| <= {limit}")]
    OutOfBand { n: i64, limit: i64 },

    #[error("expected a probability measure, total mass is {mass}")]
    NotProbability { mass: f64 },

    #[error("measure is not symmetric (max |Im coefficient| = {max_imag:e})")]
    Asymmetric { max_imag: f64 },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("grid size {grid} exceeds the dense matrix bound {limit}")]
    GridTooLarge { grid: usize, limit: usize },

    #[error("eigenvector field is not admissible: {0}")]
    Inadmissible(String),

    #[error("functional has zero variance under the model")]
    DegenerateFunctional,

    #[error("norm-drift guard tripped at step {step} (norm ratio {ratio:e})")]
    DriftGuard { step: usize, ratio: f64 },

    #[error("no transitive-looking orbit found: {0}")]
    NoTransitiveOrbit(String),

    #[error("schema error: expected {expected}, found {found}")]
    Schema { expected: String, found: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
