use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One offending field reported by configuration validation.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldIssue {
    pub field: String,
    pub reason: String,
}

impl fmt::Display for FieldIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// A value lies outside the domain an operation accepts.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// The delayed pulse does not fit inside the receive window; the
    /// receive gate was scheduled at the wrong time.
    #[error(
        "pulse of {pulse_len} samples delayed by {delay_samples:.3} samples overruns a {window_len}-sample window"
    )]
    WindowOverrun {
        delay_samples: f64,
        pulse_len: usize,
        window_len: usize,
    },

    /// Matched filter maximum sits on the first or last lag, so the peak has
    /// no neighbour on one side.
    #[error("matched filter peak at boundary index {index} of {len}")]
    PeakAtBoundary { index: usize, len: usize },

    #[error("matched filter peak at index {index} has zero curvature")]
    FlatPeak { index: usize },

    #[error("noise power is zero; SNR is undefined")]
    ZeroNoisePower,

    /// The exchange could not produce timestamps and should be retried in a
    /// later epoch.
    #[error("exchange aborted ({leg}): {source}")]
    ExchangeAborted {
        leg: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {}", join_issues(.0))]
    Validation(Vec<FieldIssue>),

    #[error("config: {0}")]
    Config(String),

    #[error("bias table: {0}")]
    LutFormat(String),

    #[error("report has no records")]
    EmptyReport,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short machine-readable category, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter { .. } => "parameter",
            Error::WindowOverrun { .. } => "window-overrun",
            Error::PeakAtBoundary { .. } => "peak-at-boundary",
            Error::FlatPeak { .. } => "flat-peak",
            Error::ZeroNoisePower => "zero-noise-power",
            Error::ExchangeAborted { .. } => "exchange-aborted",
            Error::Validation(_) => "validation",
            Error::Config(_) => "config",
            Error::LutFormat(_) => "lut-format",
            Error::EmptyReport => "empty-report",
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => "io",
        }
    }
}

fn join_issues(issues: &[FieldIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
