use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("photon cap exceeded: {requested} photons requested, cap is {cap}")]
    Capacity { requested: u32, cap: u32 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("state is not normalized (norm² = {norm_sqr})")]
    Normalization { norm_sqr: f64 },

    #[error("phase grid of {points} points cannot resolve harmonics up to {degree}")]
    Aliasing { points: usize, degree: usize },

    #[error("no finite phase spread anywhere on the grid")]
    NoSignal,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
