use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("miscoverage level must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rank deficient design: {0}")]
    RankDeficient(String),

    #[error("coordinate descent did not converge after {sweeps} sweeps (duality gap {gap:e})")]
    NotConverged { sweeps: usize, gap: f64 },

    #[error("fit failed at trial value y = {y}: {source}")]
    TrialFit { y: f64, source: Box<Error> },

    #[error("malformed CSV at line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("unknown experiment id `{0}`")]
    UnknownExperiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Input problems (bad files, bad parameters) as opposed to numerical failures.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::EmptySample
                | Error::InvalidAlpha(_)
                | Error::DimensionMismatch { .. }
                | Error::InvalidData(_)
                | Error::InvalidParameter(_)
                | Error::Csv { .. }
                | Error::UnknownExperiment(_)
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        Error::Csv {
            line,
            message: err.to_string(),
        }
    }
}
