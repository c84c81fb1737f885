//! In-process latency benchmark over synthetic sessions.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::config::EngineConfig;
use crate::error::Result;
use crate::landmark::{parse_frame, serialize_frame};
use crate::scoring::{format_percentage, SessionSummary};
use crate::session::Session;
use crate::synth::BenchProfile;

/// Per-frame processing budget in milliseconds.
pub const FRAME_BUDGET_MS: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyStats {
    pub p50_us: f64,
    pub p95_us: f64,
    pub p99_us: f64,
    pub max_us: f64,
    pub mean_us: f64,
}

impl LatencyStats {
    /// Nearest-rank percentiles over per-frame samples in microseconds.
    pub fn from_samples(samples: &[f64]) -> Self {
        assert!(!samples.is_empty(), "no latency samples");
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let rank = |p: f64| {
            let k = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
            sorted[k.clamp(1, sorted.len()) - 1]
        };
        Self {
            p50_us: rank(50.0),
            p95_us: rank(95.0),
            p99_us: rank(99.0),
            max_us: sorted[sorted.len() - 1],
            mean_us: sorted.iter().sum::<f64>() / sorted.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub profile: BenchProfile,
    pub frames: usize,
    pub latency: LatencyStats,
    /// Frames per second a single session worker sustains at mean latency.
    pub max_sustained_fps: f64,
    pub within_budget: bool,
    pub summary: SessionSummary,
}

impl BenchReport {
    pub fn table(&self) -> String {
        let l = &self.latency;
        let s = &self.summary;
        let mut out = String::new();
        let p = &self.profile;
        let _ = writeln!(out, "preset            {}", p.preset);
        let _ = writeln!(
            out,
            "frames            {} ({} s at {} fps)",
            self.frames, p.duration_s, p.fps
        );
        let _ = writeln!(out, "p50               {:>10.1} us", l.p50_us);
        let _ = writeln!(out, "p95               {:>10.1} us", l.p95_us);
        let _ = writeln!(out, "p99               {:>10.1} us", l.p99_us);
        let _ = writeln!(out, "max               {:>10.1} us", l.max_us);
        let _ = writeln!(out, "mean              {:>10.1} us", l.mean_us);
        let _ = writeln!(out, "max sustained fps {:>10.0}", self.max_sustained_fps);
        let _ = writeln!(
            out,
            "p95 vs {FRAME_BUDGET_MS} ms    {}",
            if self.within_budget {
                "within budget"
            } else {
                "OVER BUDGET"
            }
        );
        let _ = writeln!(
            out,
            "mean confidence   {}",
            format_percentage(s.mean_percentage)
        );
        let _ = writeln!(out, "mean category     {:?}", s.mean_category);
        let _ = writeln!(out, "blinks            {}", s.total_blinks);
        out
    }
}

/// Generates the profile's frames, serializes them up front, then times
/// parse + score for each frame as the live server would see it.
pub fn run_bench(profile: &BenchProfile, cfg: &EngineConfig) -> Result<BenchReport> {
    let lines: Vec<String> = profile.frames()?.map(|f| serialize_frame(&f)).collect();
    let mut session = Session::new(cfg.clone());
    let mut samples = Vec::with_capacity(lines.len());
    for line in &lines {
        let start = Instant::now();
        let frame = parse_frame(line)?;
        session.process(frame)?;
        samples.push(start.elapsed().as_secs_f64() * 1e6);
    }
    let latency = LatencyStats::from_samples(&samples);
    Ok(BenchReport {
        profile: *profile,
        frames: lines.len(),
        max_sustained_fps: 1e6 / latency.mean_us.max(f64::MIN_POSITIVE),
        within_budget: latency.p95_us < FRAME_BUDGET_MS * 1000.0,
        latency,
        summary: session.summary()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_percentiles() {
        let samples: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = LatencyStats::from_samples(&samples);
        assert_eq!(
            (s.p50_us, s.p95_us, s.p99_us, s.max_us),
            (50.0, 95.0, 99.0, 100.0)
        );
        assert_eq!(s.mean_us, 50.5);
        let one = LatencyStats::from_samples(&[7.0]);
        assert_eq!(one.p50_us, 7.0);
        assert_eq!(one.p99_us, 7.0);
    }
}
