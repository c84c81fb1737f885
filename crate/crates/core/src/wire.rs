//! Outbound message shapes of the streaming protocol.
//!
//! Inbound messages are frame records (optionally tagged `"type": "frame"`)
//! or `{"type": "end"}`; see [`crate::landmark::parse_record`].

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::scoring::{ConfidenceReport, SessionSummary};

/// Engine-side timing attached to live reports. Omitted in replay output so
/// that replayed streams are byte-deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub processing_us: u64,
    /// Frames waiting behind this one when it was scored.
    pub queue_depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMessage {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_ms: Option<u64>,
}

impl ErrorMessage {
    pub fn from_error(err: &Error) -> Self {
        let (line, root) = match err {
            Error::AtLine { line, source } => (Some(*line), source.root()),
            other => (None, other),
        };
        let t_ms = match root {
            Error::NonMonotonicTimestamp { t_ms, .. } => Some(*t_ms),
            _ => None,
        };
        Self {
            code: err.code().to_string(),
            message: root.to_string(),
            line,
            t_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Outbound {
    Report {
        #[serde(flatten)]
        report: ConfidenceReport,
        #[serde(flatten, default, skip_serializing_if = "Option::is_none")]
        timing: Option<Timing>,
    },
    Error(ErrorMessage),
    Summary(SessionSummary),
}

impl Outbound {
    pub fn report(report: ConfidenceReport, timing: Option<Timing>) -> Self {
        Outbound::Report { report, timing }
    }

    pub fn error(err: &Error) -> Self {
        Outbound::Error(ErrorMessage::from_error(err))
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("outbound serialization is infallible")
    }

    pub fn parse(line: &str) -> Result<Self, Error> {
        serde_json::from_str(line).map_err(|e| Error::MalformedRecord(e.to_string()))
    }
}
