use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "matrix is not Hermitian: entries ({row},{col}) and ({col},{row}) differ by {deviation:e}"
    )]
    NotHermitian {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("singular Jacobian at ({x}, {y})")]
    SingularJacobian { x: f64, y: f64 },

    #[error("operator is gapless at the requested point: {0}")]
    Gapless(String),

    #[error("winding ill-defined: {0}")]
    IllDefinedWinding(String),

    #[error("spectral window violated at parameter {param}: delocalized in-window state at energy {energy}")]
    WindowViolated { param: f64, energy: f64 },

    #[error("refinement budget exhausted near parameter {param}")]
    RefinementExhausted { param: f64 },

    #[error("level {level} is not inside the spectral window at parameter {param}")]
    NonFredholm { level: f64, param: f64 },

    #[error("Chern number ill-defined: {0}")]
    ChernAmbiguous(String),

    #[error("arc intersection ill-defined: {0}")]
    GrazingIntersection(String),

    #[error("model rejected: {0}")]
    ModelRejected(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
