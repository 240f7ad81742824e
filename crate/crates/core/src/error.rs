use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("magnetic sublevel m = {m} gives population difference {delta_n}; the linearized mode is undefined")]
    InvalidPopulation { m: i32, delta_n: f64 },

    #[error("unstable model: drift eigenvalue with real part {max_real_part:e} >= 0")]
    Unstable { max_real_part: f64 },

    #[error("singular response matrix at omega = {omega} rad/s")]
    Singular { omega: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(
        "no non-negative lens separation solves the setup; best residual {best_residual:e} \
         (a residual near zero means the only solution has a negative separation)"
    )]
    Infeasible { best_residual: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Unstable { .. } | Error::Singular { .. } | Error::Infeasible { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
