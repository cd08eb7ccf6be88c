use thiserror::Error;

/// Errors raised by the simulation and analysis toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter `{name}` = {value} outside {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite state at step {step}")]
    Overflow { step: usize },
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("grid resolution insufficient: {0}")]
    Resolution(String),
    #[error("Picard iteration did not contract: {0}")]
    Stiffness(String),
    #[error("experiment aborted: {0}")]
    Aborted(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Checks `lo < value <= hi` style ranges and reports the offending parameter.
pub(crate) fn ensure(
    ok: bool,
    name: &'static str,
    value: f64,
    expected: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            expected,
        })
    }
}
