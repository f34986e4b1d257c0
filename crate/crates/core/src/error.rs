use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("periodic boundaries are not supported: the dipole moment needs open boundaries")]
    PeriodicBoundary,

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("window out of range: {0}")]
    Window(String),

    #[error("state is not normalized (total probability {0})")]
    Unnormalized(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("sector is empty")]
    EmptySector,

    #[error("exact engine overflow: {0}; rerun with --engine pf:N")]
    EngineOverflow(String),

    #[error("outcome has zero probability under the current state")]
    ImpossibleOutcome,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("root not bracketed: {0}")]
    NotBracketed(String),

    #[error("quadrature did not converge: value {value:e}, grid-doubling change {change:e}")]
    NonConvergent { value: f64, change: f64 },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Parameter(_)
            | Error::Geometry(_)
            | Error::PeriodicBoundary
            | Error::Window(_) => 2,
            Error::EngineOverflow(_) => 3,
            Error::NonConvergent { .. } => 4,
            _ => 1,
        }
    }
}
