//! Inputs for the pipeline benchmarks.

use poise_core::landmark::serialize_frame;
use poise_core::{BenchProfile, EngineConfig, LandmarkFrame, Preset, Session};

pub fn frames(preset: Preset, seconds: f64) -> Vec<LandmarkFrame> {
    BenchProfile::new(preset, seconds, 30.0)
        .frames()
        .expect("valid profile")
        .collect()
}

pub fn lines(frames: &[LandmarkFrame]) -> Vec<String> {
    frames.iter().map(serialize_frame).collect()
}

/// A session that has already consumed `warmup` so it is calibrated and its
/// windows are full.
pub fn warm_session(warmup: &[LandmarkFrame]) -> Session {
    let mut s = Session::new(EngineConfig::default());
    for f in warmup {
        s.process(f.clone()).expect("synthetic frames are valid");
    }
    s
}
