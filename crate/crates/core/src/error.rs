use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration, malformed inputs or incompatible grids.
    #[error("configuration error: {0}")]
    Config(String),

    /// An iterative method did not converge, or a computed state stopped being admissible.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A mathematical precondition of an operation does not hold for the inputs.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Argument outside the domain of a function (e.g. a density evaluated at y <= 0).
    #[error("domain error: {0}")]
    Domain(String),

    /// The drift parameters are undefined at zero noise intensity; the caller should
    /// use the deterministic threshold instead.
    #[error("noise intensity is zero: use the deterministic dichotomy")]
    ZeroNoise,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) => 2,
            Error::Numerical(_) | Error::Domain(_) | Error::ZeroNoise => 3,
            Error::Precondition(_) => 4,
            Error::Io(_) | Error::Csv(_) => 1,
        }
    }
}
