use thiserror::Error;

/// Errors raised by the library. The variant decides the CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad user input or configuration.
    #[error("input error: {0}")]
    Input(String),
    /// A site sits too close to the edge of the generated domain.
    #[error("boundary error: {0}")]
    Boundary(String),
    /// Deformed configuration left the admissible set.
    #[error("evaluation error: {0}")]
    Evaluation(String),
    /// Solver, quadrature or eigensolver failure.
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Boundary(_) => 2,
            Error::Evaluation(_) | Error::Numeric(_) | Error::Io(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
