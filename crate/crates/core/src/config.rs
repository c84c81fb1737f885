//! Engine configuration: one TOML document holding every tunable.
//!
//! Missing keys take their defaults; unknown keys are rejected. Values are
//! range-checked after parsing and the first offending key is reported.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landmark::DEFAULT_IPD_METERS;
use crate::scoring::ScoringConfig;
use crate::temporal::TemporalConfig;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandmarkConfig {
    pub ipd_meters: f64,
    /// Weight of the newest per-frame scale in its exponential moving average.
    pub scale_smoothing: f64,
}

impl Default for LandmarkConfig {
    fn default() -> Self {
        Self {
            ipd_meters: DEFAULT_IPD_METERS,
            scale_smoothing: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Emit a report on every n-th scored frame.
    pub every_n_frames: u32,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { every_n_frames: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub version: u32,
    pub landmark: LandmarkConfig,
    pub temporal: TemporalConfig,
    pub scoring: ScoringConfig,
    pub report: ReportConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            landmark: LandmarkConfig::default(),
            temporal: TemporalConfig::default(),
            scoring: ScoringConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

fn check(key: &str, ok: bool, value: impl std::fmt::Display, expect: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(
            key,
            format!("{value} is invalid, expected {expect}"),
        ))
    }
}

impl EngineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: EngineConfig = toml::from_str(text).map_err(|e| {
            let reason = e.message().to_string();
            let key = reason
                .split('`')
                .nth(1)
                .filter(|_| reason.starts_with("unknown field"))
                .unwrap_or("<document>")
                .to_string();
            Error::Config { key, reason }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let l = &self.landmark;
        let t = &self.temporal;
        let s = &self.scoring;
        check("version", self.version == CONFIG_VERSION, self.version, "1")?;
        check(
            "landmark.ipd_meters",
            l.ipd_meters > 0.0 && l.ipd_meters <= 0.2,
            l.ipd_meters,
            "a value in (0, 0.2]",
        )?;
        check(
            "landmark.scale_smoothing",
            l.scale_smoothing > 0.0 && l.scale_smoothing <= 1.0,
            l.scale_smoothing,
            "a value in (0, 1]",
        )?;
        check(
            "temporal.calibration_frames",
            t.calibration_frames >= 1,
            t.calibration_frames,
            ">= 1",
        )?;
        check(
            "temporal.blink_close_threshold",
            t.blink_close_threshold > 0.0 && t.blink_close_threshold < 1.0,
            t.blink_close_threshold,
            "a value in (0, 1)",
        )?;
        check(
            "temporal.blink_open_threshold",
            t.blink_open_threshold >= t.blink_close_threshold && t.blink_open_threshold < 1.0,
            t.blink_open_threshold,
            "a value in [blink_close_threshold, 1)",
        )?;
        check(
            "temporal.min_blink_frames",
            t.min_blink_frames >= 1,
            t.min_blink_frames,
            ">= 1",
        )?;
        check(
            "temporal.blink_window_ms",
            t.blink_window_ms >= 1_000,
            t.blink_window_ms,
            ">= 1000",
        )?;
        check(
            "temporal.window_ms",
            t.window_ms >= 1_000,
            t.window_ms,
            ">= 1000",
        )?;
        check(
            "temporal.rate_floor_ms",
            t.rate_floor_ms >= 1,
            t.rate_floor_ms,
            ">= 1",
        )?;
        check(
            "temporal.head_deviation_deg",
            t.head_deviation_deg > 0.0 && t.head_deviation_deg < 90.0,
            t.head_deviation_deg,
            "a value in (0, 90)",
        )?;
        check(
            "temporal.gaze_shift_threshold",
            t.gaze_shift_threshold > 0.0 && t.gaze_shift_threshold.is_finite(),
            t.gaze_shift_threshold,
            "a finite value > 0",
        )?;
        check(
            "temporal.gaze_smoothing_frames",
            t.gaze_smoothing_frames >= 1,
            t.gaze_smoothing_frames,
            ">= 1",
        )?;
        check(
            "temporal.lip_activity_delta",
            t.lip_activity_delta >= 0.0 && t.lip_activity_delta.is_finite(),
            t.lip_activity_delta,
            "a finite value >= 0",
        )?;
        check(
            "temporal.smile_threshold",
            t.smile_threshold > 0.0 && t.smile_threshold.is_finite(),
            t.smile_threshold,
            "a finite value > 0",
        )?;
        s.weights.validate().map_err(|e| match e {
            Error::AllWeightsZero => {
                Error::config("scoring.weights", "at least one weight must be > 0")
            }
            other => other,
        })?;
        check(
            "report.every_n_frames",
            self.report.every_n_frames >= 1,
            self.report.every_n_frames,
            ">= 1",
        )?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::Weights;

    fn default_file() -> String {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../config/default.toml");
        std::fs::read_to_string(path).unwrap()
    }

    #[test]
    fn shipped_default_matches_builtin() {
        let cfg = EngineConfig::from_toml(&default_file()).unwrap();
        assert_eq!(cfg, EngineConfig::default());
    }

    #[test]
    fn shipped_default_carries_weight_table() {
        let text = default_file();
        let table = "# Factor\tWeight (%)\n\
                     # Hand Gestures\t30%\n\
                     # Facial Expressions (Smile)\t10%\n\
                     # Lip Movement\t10%\n\
                     # Blink Rate\t10%\n\
                     # Head Movement\t15%\n\
                     # Gaze Confidence\t10%\n";
        assert!(text.contains(table));
    }

    #[test]
    fn empty_document_is_default() {
        assert_eq!(
            EngineConfig::from_toml("").unwrap(),
            EngineConfig::default()
        );
    }

    #[test]
    fn partial_override() {
        let cfg = EngineConfig::from_toml("[scoring.weights]\ngaze = 0.15\n").unwrap();
        assert_eq!(
            cfg.scoring.weights,
            Weights {
                gaze: 0.15,
                ..Weights::default()
            }
        );
    }

    #[test]
    fn out_of_range_names_key() {
        let err = EngineConfig::from_toml("[temporal]\nwindow_ms = 10\n").unwrap_err();
        assert!(
            matches!(&err, Error::Config { key, .. } if key == "temporal.window_ms"),
            "{err}"
        );

        let err = EngineConfig::from_toml("[landmark]\nipd_meters = -1.0\n").unwrap_err();
        assert!(matches!(&err, Error::Config { key, .. } if key == "landmark.ipd_meters"));

        let zero = "[scoring.weights]\nhand = 0.0\nsmile = 0.0\nlip = 0.0\nblink = 0.0\nhead = 0.0\ngaze = 0.0\n";
        let err = EngineConfig::from_toml(zero).unwrap_err();
        assert!(matches!(&err, Error::Config { key, .. } if key == "scoring.weights"));

        let err = EngineConfig::from_toml("version = 2\n").unwrap_err();
        assert!(matches!(&err, Error::Config { key, .. } if key == "version"));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = EngineConfig::from_toml("[temporal]\nwindow_sec = 10\n").unwrap_err();
        assert!(
            matches!(&err, Error::Config { key, .. } if key == "window_sec"),
            "{err}"
        );
        assert!(EngineConfig::from_toml("this is not toml").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = EngineConfig::default();
        assert_eq!(EngineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
