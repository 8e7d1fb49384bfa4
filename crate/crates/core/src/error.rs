use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// The variants line up with the command-line exit codes: configuration
/// problems exit with 2, infeasible dimensions with 3 and numerical
/// failures with 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("infeasible dimension: {required} exceeds cap {cap}")]
    InfeasibleDimension { required: usize, cap: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("no interior maximum of the negativity in [{start}, {end}] ps")]
    NoInteriorMaximum { start: f64, end: f64 },

    #[error("degenerate fit data: {0}")]
    DegenerateData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::Config(_)
            | Error::DegenerateData(_)
            | Error::Json(_)
            | Error::Io(_) => 2,
            Error::InfeasibleDimension { .. } => 3,
            Error::Numerical(_) | Error::NotHermitian { .. } | Error::NoInteriorMaximum { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite, got {value}")))
    }
}
