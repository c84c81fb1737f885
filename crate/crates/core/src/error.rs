use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which geometric measurement failed when a frame is degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Scale,
    EyeLeft,
    EyeRight,
    LipRatio,
    HeadPose,
    Gaze,
    Template,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed record: {0}")]
    MalformedRecord(String),

    #[error("schema violation: {0}")]
    SchemaViolation(String),

    #[error("non-finite coordinate in {array}[{index}]")]
    NonFiniteCoordinate { array: &'static str, index: usize },

    #[error("non-monotonic timestamp: {t_ms} ms does not follow {prev_ms} ms")]
    NonMonotonicTimestamp { prev_ms: u64, t_ms: u64 },

    #[error("degenerate geometry ({0:?})")]
    DegenerateGeometry(Feature),

    #[error("zero or negative frame interval")]
    ZeroInterval,

    #[error("insufficient frames: need {needed}, got {got}")]
    InsufficientFrames { needed: usize, got: usize },

    #[error("session is not calibrated yet")]
    NotCalibrated,

    #[error("negative speed: {0}")]
    NegativeSpeed(f64),

    #[error("negative rate: {0}")]
    NegativeRate(f64),

    #[error("{name} out of range: {value}")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("all channel weights are zero")]
    AllWeightsZero,

    #[error("empty session")]
    EmptySession,

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("invalid bench profile: {0}")]
    InvalidProfile(String),

    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable identifier used for wire-level error messages.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MalformedRecord(_) => "MalformedRecord",
            Error::SchemaViolation(_) => "SchemaViolation",
            Error::NonFiniteCoordinate { .. } => "NonFiniteCoordinate",
            Error::NonMonotonicTimestamp { .. } => "NonMonotonicTimestamp",
            Error::DegenerateGeometry(_) => "DegenerateGeometry",
            Error::ZeroInterval => "ZeroInterval",
            Error::InsufficientFrames { .. } => "InsufficientFrames",
            Error::NotCalibrated => "NotCalibrated",
            Error::NegativeSpeed(_) => "NegativeSpeed",
            Error::NegativeRate(_) => "NegativeRate",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::AllWeightsZero => "AllWeightsZero",
            Error::EmptySession => "EmptySession",
            Error::Config { .. } => "ConfigError",
            Error::InvalidProfile(_) => "InvalidProfile",
            Error::AtLine { source, .. } => source.code(),
            Error::Io { .. } => "IoError",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn at_line(self, line: usize) -> Self {
        Error::AtLine {
            line,
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping line context.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLine { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
