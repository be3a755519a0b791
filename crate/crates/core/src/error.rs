use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("normal vectors are degenerate (det(NᵀN) = {det:.3e})")]
    DegenerateNormals { det: f64 },

    #[error("invalid component set: {0}")]
    InvalidComponents(String),

    #[error("point lies on face {face} of the cone")]
    OnBoundary { face: usize },

    #[error("nearest-point search on surface {surface} left the chart window")]
    NoProjection { surface: usize },

    #[error("angle {0} is outside (0, π)")]
    BadAngle(f64),

    #[error("point is at the pole of the conformal map")]
    Pole,

    #[error("point is outside the domain of the solution")]
    OutsideDomain,

    #[error("angle {theta:.6} is outside the evaluation window [{lo:.6}, {hi:.6}]")]
    OutsideWindow { theta: f64, lo: f64, hi: f64 },

    #[error("distance vector does not correspond to a point of the cone")]
    InconsistentDistances,

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("evaluation window is empty (m_max = {m_max})")]
    WindowEmpty { m_max: f64 },

    #[error("grid too coarse: {0}")]
    MaskTooCoarse(String),

    #[error("truncation tail is not monotone at probe {probe}")]
    NonMonotoneTail { probe: usize },

    #[error("insufficient samples: found {found}, need {needed}")]
    InsufficientSamples { found: usize, needed: usize },

    #[error("bound violated at {at:?}: {message}")]
    BoundViolated { at: Vec<f64>, message: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
