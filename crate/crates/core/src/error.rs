use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite derivative in phase-space coordinate {index}")]
    Evaluation { index: usize },

    #[error("unsupported system: {0}")]
    Unsupported(String),

    #[error("invalid index: {0}")]
    InvalidIndex(String),

    #[error("integration failed at t = {t}: {message}")]
    Integration { t: f64, last_state: Vec<f64>, message: String },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("degenerate point or parameters: {0}")]
    Degenerate(String),

    #[error("tensor type mismatch: {0}")]
    Type(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
