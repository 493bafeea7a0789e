use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid value for `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    #[error("invalid density matrix: {metric} = {value:e} exceeds tolerance {tolerance:e}")]
    InvalidState {
        metric: &'static str,
        value: f64,
        tolerance: f64,
    },

    #[error("step size collapsed to {dt:e} at t = {t}")]
    StepSizeCollapse { t: f64, dt: f64 },

    #[error("integration diverged at t = {t}: {metric} = {value:e}")]
    Diverged {
        t: f64,
        metric: &'static str,
        value: f64,
    },

    #[error("usage: {0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Domain(_) | Error::InvalidParameter { .. } | Error::Usage(_) => 2,
            Error::InvalidState { .. } | Error::StepSizeCollapse { .. } | Error::Diverged { .. } => 3,
            Error::Io { .. } => 4,
        }
    }
}
