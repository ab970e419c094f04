use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit can report. Each variant is a distinct error
/// class; the command-line front end maps them onto distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (value {value:e}, error estimate {error_estimate:e})"
    )]
    Convergence {
        value: f64,
        error_estimate: f64,
        subdivisions: usize,
    },

    #[error("insufficient instruments: {found} selected, at least {required} required")]
    InsufficientInstruments { found: usize, required: usize },

    #[error("degenerate instruments: estimator denominator is {denominator:e} (must be positive)")]
    DegenerateInstruments { denominator: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("pipeline error: {0}")]
    Pipeline(String),

    #[error("experiment error: {0}")]
    Experiment(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Stable short name of the error class.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Contract(_) => "contract",
            Error::Convergence { .. } => "convergence",
            Error::InsufficientInstruments { .. } => "insufficient-instruments",
            Error::DegenerateInstruments { .. } => "degenerate-instruments",
            Error::Config(_) => "config",
            Error::Format { .. } => "format",
            Error::Io { .. } => "io",
            Error::Pipeline(_) => "pipeline",
            Error::Experiment(_) => "experiment",
        }
    }
}

pub(crate) fn ensure_finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {x}")))
    }
}
