//! One scoring session: frames in, reports out.

use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::geometry::{extract_features, FaceTemplate};
use crate::landmark::{compute_scale, validate_stream_order, LandmarkFrame, ScaleCalibration};
use crate::scoring::{ConfidenceReport, SessionSummary, SummaryAccumulator};
use crate::temporal::{TemporalAnalyzer, WindowStats};

/// Result of feeding one frame.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    /// Still collecting neutral-pose samples.
    Calibrating {
        collected: usize,
        needed: usize,
    },
    /// Scored, but suppressed by the report cadence.
    Scored,
    Report(ConfidenceReport),
}

impl Step {
    pub fn report(self) -> Option<ConfidenceReport> {
        match self {
            Step::Report(r) => Some(r),
            _ => None,
        }
    }
}

/// Per-session pipeline state. A rejected frame leaves the state untouched.
#[derive(Debug, Clone)]
pub struct Session {
    cfg: EngineConfig,
    template: FaceTemplate,
    prev: Option<LandmarkFrame>,
    scale: Option<ScaleCalibration>,
    analyzer: TemporalAnalyzer,
    summary: SummaryAccumulator,
    frames: usize,
    scored: usize,
}

impl Session {
    pub fn new(cfg: EngineConfig) -> Self {
        Self::with_template(cfg, FaceTemplate::default())
    }

    pub fn with_template(cfg: EngineConfig, template: FaceTemplate) -> Self {
        Self {
            analyzer: TemporalAnalyzer::new(cfg.temporal.clone()),
            cfg,
            template,
            prev: None,
            scale: None,
            summary: SummaryAccumulator::new(),
            frames: 0,
            scored: 0,
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn frames_accepted(&self) -> usize {
        self.frames
    }

    pub fn last_t_ms(&self) -> Option<u64> {
        self.prev.as_ref().map(|f| f.t_ms)
    }

    pub fn is_calibrated(&self) -> bool {
        self.analyzer.is_calibrated()
    }

    pub fn scale(&self) -> Option<&ScaleCalibration> {
        self.scale.as_ref()
    }

    pub fn total_blinks(&self) -> usize {
        self.analyzer.total_blinks()
    }

    fn smoothed_scale(&self, frame: &LandmarkFrame) -> Option<ScaleCalibration> {
        let ipd = self.cfg.landmark.ipd_meters;
        let alpha = self.cfg.landmark.scale_smoothing;
        match (compute_scale(frame, ipd).ok(), self.scale) {
            (Some(fresh), Some(old)) => Some(ScaleCalibration {
                meters_per_unit: old.meters_per_unit
                    + alpha * (fresh.meters_per_unit - old.meters_per_unit),
                ipd_meters: ipd,
            }),
            (fresh, old) => fresh.or(old),
        }
    }

    pub fn process(&mut self, frame: LandmarkFrame) -> Result<Step> {
        frame.validate()?;
        validate_stream_order(self.last_t_ms(), &frame)?;

        let scale = self.smoothed_scale(&frame);
        let features =
            extract_features(self.prev.as_ref(), &frame, &self.template, scale.as_ref())?;

        let was_calibrated = self.analyzer.is_calibrated();
        self.scale = scale;
        self.analyzer.push(features);
        self.prev = Some(frame);
        self.frames += 1;

        if !was_calibrated {
            let needed = self.cfg.temporal.calibration_frames;
            let collected = if self.analyzer.is_calibrated() {
                needed
            } else {
                self.analyzer.calibration_progress()
            };
            return Ok(Step::Calibrating { collected, needed });
        }
        let stats = self.analyzer.stats()?;
        let report = ConfidenceReport::from_stats(&stats, &self.cfg.scoring)?;
        self.summary.push(report.clone());
        self.scored += 1;
        let every = self.cfg.report.every_n_frames.max(1) as usize;
        Ok(if (self.scored - 1).is_multiple_of(every) {
            Step::Report(report)
        } else {
            Step::Scored
        })
    }

    /// Current window statistics, once calibrated.
    pub fn stats(&self) -> Result<WindowStats> {
        self.analyzer.stats()
    }

    pub fn summary(&self) -> Result<SessionSummary> {
        if self.frames == 0 {
            return Err(Error::EmptySession);
        }
        if self.summary.count() == 0 {
            return Err(Error::NotCalibrated);
        }
        self.summary.finish(self.analyzer.total_blinks())
    }
}
