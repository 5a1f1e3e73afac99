use thiserror::Error;

#[derive(Debug, Error)]
pub enum BandError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("frame is not orthonormal (deviation {deviation:.3e})")]
    NonOrthonormalFrame { deviation: f64 },

    #[error("inadmissible state at node {index}: K = 0 with W != 0 and no regularization")]
    Inadmissible { index: usize },

    #[error("curvature below floor at nodes {nodes:?}")]
    CurvatureBelowFloor { nodes: Vec<usize> },

    #[error("degenerate fit: {0}")]
    Degenerate(String),

    #[error("profile has no singular point (min K^2+W^2 = {min_value:.4e}, max = {max_value:.4e})")]
    NoSingularPoint { min_value: f64, max_value: f64 },

    #[error("fit window too small: only {available} samples on one side of X; refine the grid")]
    WindowTooSmall { available: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid configuration ({field}): {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BandError {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        BandError::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, BandError>;
