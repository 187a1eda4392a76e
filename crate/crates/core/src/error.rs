use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value at frequency {frequency:?}")]
    NonFiniteSymbol { frequency: Vec<f64> },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("empty domain mask")]
    EmptyMask,
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("unknown check `{0}`")]
    UnknownCheck(String),
    #[error("t-integrand does not decay at t_max (last ratio {0:.3e})")]
    Truncation(f64),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
