use thiserror::Error;

/// Errors surfaced by density construction, flow evolution and functional
/// evaluation. Variants mirror the failure modes of the public operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown density family `{0}`")]
    UnknownFamily(String),

    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),

    #[error("cannot parse density spec `{spec}`: {reason}")]
    ParseError { spec: String, reason: String },

    #[error("tail bound cannot certify tail mass {tail_eps:e} for {family} within 1e6 standard deviations")]
    UnboundedTail { family: String, tail_eps: f64 },

    #[error("degenerate mass {mass:e}; density cannot be normalized")]
    DegenerateMass { mass: f64 },

    #[error("dilation scale must be positive, got {0}")]
    NonpositiveScale(f64),

    #[error("mixture weights invalid: {0}")]
    WeightMismatch(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("{functional} undefined at t=0 for a density that is non-smooth at zero time (evolve with t >= t_min first)")]
    NonsmoothAtZeroTime { functional: &'static str },

    #[error("differencing step h={h} too large for t={t} (requires t - 2h >= t_min and h <= t/4)")]
    StepTooLarge { t: f64, h: f64 },

    #[error("stencil point t={t} outside evaluable domain: {reason}")]
    StencilOutOfDomain { t: f64, reason: String },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("density not normalized (mass {mass})")]
    NotNormalized { mass: f64 },

    #[error("invalid grid file: {0}")]
    GridFile(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
