use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("method failure: {0}")]
    Method(String),
    #[error("fit unavailable: {0}")]
    FitUnavailable(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl BenchError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) | BenchError::Json(_) => 2,
            _ => 1,
        }
    }
}

impl From<tensor_methods::Error> for BenchError {
    fn from(e: tensor_methods::Error) -> Self {
        BenchError::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
