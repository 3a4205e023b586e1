use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The elliptic solve requires mu to equal the disk mean of w.
    #[error("compatibility violated: mu = {mu}, mean of w = {mean}, relative gap {rel_gap}")]
    Compatibility { mu: f64, mean: f64, rel_gap: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A recipe that needs m > 8*pi*delta was called with subcritical mass.
    #[error("supercriticality violated: m = {m} but the critical mass is {critical}")]
    SupercriticalityViolated { m: f64, critical: f64 },

    /// A recipe that needs m < 8*pi*delta was called with supercritical mass.
    #[error("subcriticality violated: m = {m} but the critical mass is {critical}")]
    SubcriticalityViolated { m: f64, critical: f64 },

    #[error("data construction failed: {0}")]
    Construction(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
