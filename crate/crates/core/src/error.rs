use thiserror::Error;

/// Errors raised by the grid kernel, the geometric solvers and the query layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid size {0} is not a power of two >= 8")]
    InvalidGridSize(usize),
    #[error("grid size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("function is not strictly increasing: min derivative {min_slope:e}")]
    NonMonotone { min_slope: f64 },
    #[error("function comes too close to zero: min modulus {min_modulus:e}")]
    NearZero { min_modulus: f64 },
    #[error("point is off the unit sphere: |norm - 1| = {defect:e}")]
    OffSphere { defect: f64 },
    #[error("vector is not tangent: |Re<f, F>| = {defect:e}")]
    NotTangent { defect: f64 },
    #[error("zero initial velocity")]
    ZeroVelocity,
    #[error("contact angle too close to 0 or pi: |sin psi| = {sin_psi:e}")]
    DegenerateAngle { sin_psi: f64 },
    #[error("vector is not in the contact plane: pairing {pairing:e}")]
    NotInContactPlane { pairing: f64 },
    #[error("unknown generator index {0}")]
    UnknownGenerator(usize),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("times must be strictly increasing")]
    NonIncreasingTimes,
    #[error("blow-up encountered at t = {time}: {reason}")]
    BlowupEncountered { time: f64, reason: String },
    #[error("loop does not close: gap {gap:e}")]
    NotClosed { gap: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no connecting geodesic found: residual floor {residual_floor:e}")]
    NotFound { residual_floor: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
