use std::fmt;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("cell set is empty")]
    EmptySet,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("torus side {side} is smaller than the neighbourhood span {required}")]
    TorusTooSmall { side: usize, required: usize },
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("state space of {requested} exceeds cap {cap}")]
    CapExceeded { requested: Size, cap: usize },
    #[error("operation requires a one-dimensional rule, got d = {0}")]
    NotOneDimensional(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// A state-space size that may overflow `usize`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Size {
    Exact(usize),
    Overflow,
}

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Size::Exact(n) => write!(f, "{n}"),
            Size::Overflow => write!(f, "more than usize::MAX"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Returns `base^exp` if it fits under `cap`, else a `CapExceeded` error.
pub fn checked_state_space(base: usize, exp: usize, cap: usize) -> Result<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = match acc.checked_mul(base) {
            Some(v) => v,
            None => {
                return Err(Error::CapExceeded {
                    requested: Size::Overflow,
                    cap,
                })
            }
        };
    }
    if acc > cap {
        return Err(Error::CapExceeded {
            requested: Size::Exact(acc),
            cap,
        });
    }
    Ok(acc)
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
