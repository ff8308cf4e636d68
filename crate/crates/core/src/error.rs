use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {context} at flat index {index}")]
    NonFinite { context: &'static str, index: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("ball radius {radius} exceeds the periodic limit {limit} (half box edge)")]
    BallTooLarge { radius: f64, limit: f64 },

    #[error("radius {radius} is below the resolvable minimum {minimum}")]
    RadiusTooSmall { radius: f64, minimum: f64 },

    #[error("numerical blow-up at step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },

    #[error("finite-difference stencil crosses the sphere: distance to sphere {distance}, stencil reach {reach}")]
    StencilCrossing { distance: f64, reach: f64 },

    #[error("test function is not admissible: {0}")]
    TestFunction(String),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
