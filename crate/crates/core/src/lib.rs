//! Confidence scoring from face and hand landmark streams.
//!
//! Frames flow through [`Session::process`]: per-frame geometry
//! ([`geometry`]), windowed behavior statistics ([`temporal`]) and the
//! weighted channel scoring ([`scoring`]). [`replay`] and [`bench`] drive the
//! same pipeline offline; [`synth`] scripts deterministic test sessions.

// `!(x >= lo)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod config;
pub mod error;
pub mod geometry;
pub mod landmark;
pub mod replay;
pub mod scoring;
pub mod session;
pub mod synth;
pub mod temporal;
pub mod wire;

pub use config::EngineConfig;
pub use error::{Error, Feature, Result};
pub use geometry::{FaceTemplate, FeatureFrame, Gaze, HeadPose, Quality};
pub use landmark::{LandmarkFrame, Point3, Record, ScaleCalibration, SessionHeader};
pub use scoring::{
    Category, ChannelScores, ConfidenceReport, ScoringConfig, SessionSummary, Weights,
};
pub use session::{Session, Step};
pub use synth::{BenchProfile, Preset};
pub use temporal::{TemporalConfig, WindowStats};
pub use wire::{Outbound, Timing};
