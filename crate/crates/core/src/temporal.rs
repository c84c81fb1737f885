//! Sliding-window statistics over feature frames.
//!
//! Every windowed quantity at time `now` depends only on frames with
//! `t_ms` in `(now - span, now]`. Blink detection is the one streaming
//! piece: events are produced once per session and then counted per window.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FeatureFrame, Gaze, HeadPose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemporalConfig {
    pub calibration_frames: usize,
    pub blink_close_threshold: f64,
    pub blink_open_threshold: f64,
    pub min_blink_frames: u32,
    pub blink_window_ms: u64,
    pub window_ms: u64,
    /// Lower bound on the elapsed time used to normalize early-session rates.
    pub rate_floor_ms: u64,
    pub head_deviation_deg: f64,
    pub gaze_shift_threshold: f64,
    pub gaze_smoothing_frames: usize,
    pub lip_activity_delta: f64,
    pub smile_threshold: f64,
}

impl Default for TemporalConfig {
    fn default() -> Self {
        Self {
            calibration_frames: 30,
            blink_close_threshold: 0.21,
            blink_open_threshold: 0.25,
            min_blink_frames: 2,
            blink_window_ms: 60_000,
            window_ms: 10_000,
            rate_floor_ms: 10_000,
            head_deviation_deg: 10.0,
            gaze_shift_threshold: 0.15,
            gaze_smoothing_frames: 3,
            lip_activity_delta: 0.002,
            smile_threshold: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeutralPose {
    pub yaw0: f64,
    pub pitch0: f64,
    pub roll0: f64,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Component-wise median over the first `needed` poses.
pub fn calibrate_neutral(poses: &[HeadPose], needed: usize) -> Result<NeutralPose> {
    let needed = needed.max(1);
    if poses.len() < needed {
        return Err(Error::InsufficientFrames {
            needed,
            got: poses.len(),
        });
    }
    let poses = &poses[..needed];
    let component = |f: fn(&HeadPose) -> f64| median(&mut poses.iter().map(f).collect::<Vec<_>>());
    Ok(NeutralPose {
        yaw0: component(|p| p.yaw_deg),
        pitch0: component(|p| p.pitch_deg),
        roll0: component(|p| p.roll_deg),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlinkPhase {
    Open,
    Closing,
}

/// Two-threshold blink detector.
///
/// Enters `Closing` below the close threshold, counts frames below it, and
/// emits one event on the first frame above the open threshold if at least
/// `min_frames` were below. Frames between the two thresholds neither count
/// nor reset the closure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlinkDetector {
    pub phase: BlinkPhase,
    pub frames_below: u32,
    close_threshold: f64,
    open_threshold: f64,
    min_frames: u32,
}

impl BlinkDetector {
    pub fn new(close_threshold: f64, open_threshold: f64, min_frames: u32) -> Self {
        Self {
            phase: BlinkPhase::Open,
            frames_below: 0,
            close_threshold,
            open_threshold,
            min_frames,
        }
    }

    pub fn from_config(cfg: &TemporalConfig) -> Self {
        Self::new(
            cfg.blink_close_threshold,
            cfg.blink_open_threshold,
            cfg.min_blink_frames,
        )
    }

    /// Returns the event timestamp when a blink completes on this frame.
    pub fn update(&mut self, ear: f64, t_ms: u64) -> Option<u64> {
        if ear < self.close_threshold {
            self.phase = BlinkPhase::Closing;
            self.frames_below += 1;
            return None;
        }
        if self.phase == BlinkPhase::Closing && ear > self.open_threshold {
            let complete = self.frames_below >= self.min_frames;
            self.phase = BlinkPhase::Open;
            self.frames_below = 0;
            return complete.then_some(t_ms);
        }
        None
    }
}

/// Events per minute over the effective span `min(span, max(elapsed, floor))`.
pub fn rate_per_min(count: usize, span_ms: u64, elapsed_ms: u64, floor_ms: u64) -> f64 {
    let effective = span_ms.min(elapsed_ms.max(floor_ms)).max(1);
    count as f64 * 60_000.0 / effective as f64
}

/// Blink rate from sorted event timestamps, counting `(now - span, now]`.
pub fn blink_rate(events: &[u64], now: u64, span_ms: u64, elapsed_ms: u64, floor_ms: u64) -> f64 {
    let lo = now as i128 - span_ms as i128;
    let count = events
        .iter()
        .filter(|&&t| t <= now && t as i128 > lo)
        .count();
    rate_per_min(count, span_ms, elapsed_ms, floor_ms)
}

/// Rising edges of the trailing moving mean of gaze magnitude across
/// `threshold`.
pub fn gaze_shift_count(gazes: &[Gaze], threshold: f64, smoothing: usize) -> usize {
    let smoothing = smoothing.max(1);
    let mags: Vec<f64> = gazes.iter().map(Gaze::magnitude).collect();
    let smoothed: Vec<f64> = (0..mags.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(smoothing);
            let w = &mags[lo..=i];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect();
    smoothed
        .windows(2)
        .filter(|w| w[0] <= threshold && w[1] > threshold)
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipActivity {
    pub longest_still_ms: u64,
    pub activity_fraction: f64,
}

/// A frame is active when the inner-lip gap moved more than `delta` since the
/// previous frame. Stillness runs are measured by timestamps, starting at the
/// last active frame (or the first frame).
pub fn lip_activity(series: &[(u64, f64)], delta: f64) -> LipActivity {
    if series.len() < 2 {
        return LipActivity {
            longest_still_ms: 0,
            activity_fraction: 0.0,
        };
    }
    let mut run_start = series[0].0;
    let mut longest = 0;
    let mut active = 0usize;
    for w in series.windows(2) {
        let ((_, g0), (t1, g1)) = (w[0], w[1]);
        if (g1 - g0).abs() > delta {
            active += 1;
            run_start = t1;
        } else {
            longest = longest.max(t1 - run_start);
        }
    }
    LipActivity {
        longest_still_ms: longest,
        activity_fraction: active as f64 / (series.len() - 1) as f64,
    }
}

pub fn pose_deviation(pose: &HeadPose, neutral: &NeutralPose) -> f64 {
    (pose.yaw_deg - neutral.yaw0)
        .abs()
        .max((pose.pitch_deg - neutral.pitch0).abs())
        .max((pose.roll_deg - neutral.roll0).abs())
}

/// Fraction of poses deviating from neutral by strictly more than `threshold_deg`.
pub fn head_deviation_fraction(
    poses: &[HeadPose],
    neutral: &NeutralPose,
    threshold_deg: f64,
) -> f64 {
    if poses.is_empty() {
        return 0.0;
    }
    let deviant = poses
        .iter()
        .filter(|p| pose_deviation(p, neutral) > threshold_deg)
        .count();
    deviant as f64 / poses.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub t_ms: u64,
    pub window_span_ms: u64,
    pub blink_window_span_ms: u64,
    pub blink_rate_per_min: f64,
    pub head_deviation_fraction: f64,
    pub gaze_shift_count: usize,
    pub gaze_shift_rate_per_min: f64,
    pub smile_fraction: f64,
    pub lip_longest_still_ms: u64,
    pub lip_activity_fraction: f64,
    pub mean_hand_speed_mps: Option<f64>,
}

/// Per-session temporal state: calibration, blink detection and the
/// feature window. Single writer; feed frames in timestamp order.
#[derive(Debug, Clone)]
pub struct TemporalAnalyzer {
    cfg: TemporalConfig,
    blink: BlinkDetector,
    blink_events: VecDeque<u64>,
    total_blinks: usize,
    frames: VecDeque<FeatureFrame>,
    first_t: Option<u64>,
    calibration: Vec<HeadPose>,
    neutral: Option<NeutralPose>,
}

impl TemporalAnalyzer {
    pub fn new(cfg: TemporalConfig) -> Self {
        Self {
            blink: BlinkDetector::from_config(&cfg),
            cfg,
            blink_events: VecDeque::new(),
            total_blinks: 0,
            frames: VecDeque::new(),
            first_t: None,
            calibration: Vec::new(),
            neutral: None,
        }
    }

    pub fn config(&self) -> &TemporalConfig {
        &self.cfg
    }

    pub fn neutral(&self) -> Option<&NeutralPose> {
        self.neutral.as_ref()
    }

    pub fn is_calibrated(&self) -> bool {
        self.neutral.is_some()
    }

    /// Pose samples collected toward calibration so far.
    pub fn calibration_progress(&self) -> usize {
        self.calibration.len()
    }

    pub fn total_blinks(&self) -> usize {
        self.total_blinks
    }

    /// Advances the state by one frame. Returns a blink event timestamp when
    /// one completes on this frame.
    pub fn push(&mut self, frame: FeatureFrame) -> Option<u64> {
        let t = frame.t_ms;
        self.first_t.get_or_insert(t);

        if self.neutral.is_none() {
            if let Some(pose) = frame.pose {
                self.calibration.push(pose);
                if self.calibration.len() >= self.cfg.calibration_frames.max(1) {
                    self.neutral =
                        calibrate_neutral(&self.calibration, self.cfg.calibration_frames).ok();
                    self.calibration.clear();
                }
            }
        }

        let event = frame.ear().and_then(|ear| self.blink.update(ear, t));
        if let Some(e) = event {
            self.blink_events.push_back(e);
            self.total_blinks += 1;
        }

        self.frames.push_back(frame);
        let lo = t.saturating_sub(self.cfg.window_ms);
        while self
            .frames
            .front()
            .is_some_and(|f| f.t_ms <= lo && t >= self.cfg.window_ms)
        {
            self.frames.pop_front();
        }
        let blink_lo = t.saturating_sub(self.cfg.blink_window_ms);
        while self
            .blink_events
            .front()
            .is_some_and(|&e| e <= blink_lo && t >= self.cfg.blink_window_ms)
        {
            self.blink_events.pop_front();
        }
        event
    }

    /// Window statistics as of the most recent frame.
    pub fn stats(&self) -> Result<WindowStats> {
        let neutral = self.neutral.ok_or(Error::NotCalibrated)?;
        let last = self.frames.back().ok_or(Error::NotCalibrated)?;
        let now = last.t_ms;
        let elapsed = now - self.first_t.unwrap_or(now);
        let cfg = &self.cfg;

        let events: Vec<u64> = self.blink_events.iter().copied().collect();
        let blink_rate_per_min = blink_rate(
            &events,
            now,
            cfg.blink_window_ms,
            elapsed,
            cfg.rate_floor_ms,
        );

        let window = &self.frames;
        let poses: Vec<HeadPose> = window.iter().filter_map(|f| f.pose).collect();
        let gazes: Vec<Gaze> = window.iter().filter_map(|f| f.gaze).collect();
        let lips: Vec<(u64, f64)> = window.iter().map(|f| (f.t_ms, f.lip_gap)).collect();
        let lars: Vec<f64> = window.iter().filter_map(|f| f.lar).collect();
        let speeds: Vec<f64> = window.iter().filter_map(|f| f.hand_speed_mps).collect();

        let gaze_shift_count =
            gaze_shift_count(&gazes, cfg.gaze_shift_threshold, cfg.gaze_smoothing_frames);
        let lip = lip_activity(&lips, cfg.lip_activity_delta);
        let smile_fraction = if lars.is_empty() {
            0.0
        } else {
            lars.iter().filter(|&&l| l > cfg.smile_threshold).count() as f64 / lars.len() as f64
        };

        Ok(WindowStats {
            t_ms: now,
            window_span_ms: cfg.window_ms,
            blink_window_span_ms: cfg.blink_window_ms,
            blink_rate_per_min,
            head_deviation_fraction: head_deviation_fraction(
                &poses,
                &neutral,
                cfg.head_deviation_deg,
            ),
            gaze_shift_count,
            gaze_shift_rate_per_min: rate_per_min(
                gaze_shift_count,
                cfg.window_ms,
                elapsed,
                cfg.rate_floor_ms,
            ),
            smile_fraction,
            lip_longest_still_ms: lip.longest_still_ms,
            lip_activity_fraction: lip.activity_fraction,
            mean_hand_speed_mps: (!speeds.is_empty())
                .then(|| speeds.iter().sum::<f64>() / speeds.len() as f64),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Quality;
    use proptest::prelude::*;

    fn trace_blinks(trace: &[f64]) -> usize {
        let mut d = BlinkDetector::new(0.21, 0.25, 2);
        trace
            .iter()
            .enumerate()
            .filter_map(|(i, &e)| d.update(e, i as u64 * 33))
            .count()
    }

    #[test]
    fn blink_hysteresis_examples() {
        assert_eq!(trace_blinks(&[0.30, 0.18, 0.17, 0.30]), 1);
        assert_eq!(trace_blinks(&[0.30, 0.18, 0.30]), 0);
        assert_eq!(trace_blinks(&[0.30; 50]), 0);
        // hovering in the band does not reopen the eye
        assert_eq!(trace_blinks(&[0.30, 0.18, 0.23, 0.18, 0.23, 0.30]), 1);
        // reopening only to the band and closing again is still one blink
        assert_eq!(
            trace_blinks(&[0.18, 0.18, 0.24, 0.18, 0.18, 0.26, 0.18, 0.26]),
            1
        );
    }

    #[test]
    fn blink_event_time_is_reopening_frame() {
        let mut d = BlinkDetector::new(0.21, 0.25, 2);
        assert_eq!(d.update(0.1, 100), None);
        assert_eq!(d.phase, BlinkPhase::Closing);
        assert_eq!(d.update(0.1, 133), None);
        assert_eq!(d.frames_below, 2);
        assert_eq!(d.update(0.3, 166), Some(166));
        assert_eq!(d.phase, BlinkPhase::Open);
    }

    #[test]
    fn blink_rate_examples() {
        let events: Vec<u64> = (0..16).map(|i| 5_000 + i * 3_000).collect();
        assert!((blink_rate(&events, 60_000, 60_000, 60_000, 10_000) - 16.0).abs() < 1e-12);
        assert_eq!(blink_rate(&[], 60_000, 60_000, 60_000, 10_000), 0.0);
        let early = [4_000, 11_000, 18_000];
        assert!((blink_rate(&early, 20_000, 60_000, 20_000, 10_000) - 9.0).abs() < 1e-12);
        // a single blink two seconds in reads as 6/min, not 30/min
        assert!((blink_rate(&[2_000], 2_000, 60_000, 2_000, 10_000) - 6.0).abs() < 1e-12);
        // events at or before now - span drop out
        assert!((blink_rate(&[1_000, 61_000], 61_000, 60_000, 61_000, 10_000) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn neutral_is_median() {
        let zeros = vec![HeadPose::default(); 30];
        let n = calibrate_neutral(&zeros, 30).unwrap();
        assert_eq!((n.yaw0, n.pitch0, n.roll0), (0.0, 0.0, 0.0));

        let mut poses = vec![HeadPose::new(2.0, 0.0, 0.0); 29];
        poses.push(HeadPose::new(40.0, 0.0, 0.0));
        assert_eq!(calibrate_neutral(&poses, 30).unwrap().yaw0, 2.0);

        assert!(matches!(
            calibrate_neutral(&[], 30),
            Err(Error::InsufficientFrames { needed: 30, got: 0 })
        ));
    }

    fn gz(m: f64) -> Gaze {
        Gaze { h: m, v: 0.0 }
    }

    #[test]
    fn gaze_shift_examples() {
        assert_eq!(gaze_shift_count(&vec![gz(0.0); 100], 0.15, 3), 0);

        // 10 fps over 60 s, a two-frame look-away every 15 s
        let mut series = Vec::new();
        for _ in 0..4 {
            series.extend(std::iter::repeat_n(gz(0.05), 73));
            series.extend([gz(0.3), gz(0.3)]);
            series.extend(std::iter::repeat_n(gz(0.05), 75));
        }
        assert_eq!(series.len(), 600);
        let n = gaze_shift_count(&series, 0.15, 3);
        assert_eq!(n, 4);
        assert!((rate_per_min(n, 60_000, 60_000, 10_000) - 4.0).abs() < 1e-12);

        let mut held = vec![gz(0.0); 10];
        held.extend(vec![gz(0.5); 200]);
        assert_eq!(gaze_shift_count(&held, 0.15, 3), 1);
    }

    #[test]
    fn lip_activity_examples() {
        let still: Vec<(u64, f64)> = (0..=180).map(|i| (i * 6000 / 180, 0.01)).collect();
        let a = lip_activity(&still, 0.002);
        assert_eq!(a.longest_still_ms, 6000);
        assert_eq!(a.activity_fraction, 0.0);

        let alt: Vec<(u64, f64)> = (0..100)
            .map(|i| (i * 33, if i % 2 == 0 { 0.0 } else { 0.01 }))
            .collect();
        assert_eq!(lip_activity(&alt, 0.002).activity_fraction, 1.0);

        // 200 ms frames: talking until 4 s, still until 10 s
        let mixed: Vec<(u64, f64)> = (0..=50u64)
            .map(|i| {
                let t = i * 200;
                let g = if t <= 4000 {
                    if i % 2 == 0 {
                        0.0
                    } else {
                        0.01
                    }
                } else {
                    0.0
                };
                (t, g)
            })
            .collect();
        let a = lip_activity(&mixed, 0.002);
        assert!((a.activity_fraction - 0.4).abs() < 1e-12, "{a:?}");
        assert_eq!(a.longest_still_ms, 6000);
    }

    #[test]
    fn head_deviation_examples() {
        let neutral = NeutralPose {
            yaw0: 1.0,
            pitch0: -2.0,
            roll0: 0.5,
        };
        let at = |dy: f64| HeadPose::new(1.0 + dy, -2.0, 0.5);
        assert_eq!(
            head_deviation_fraction(&vec![at(0.0); 20], &neutral, 10.0),
            0.0
        );
        let mut half = vec![at(0.0); 10];
        half.extend(vec![at(15.0); 10]);
        assert_eq!(head_deviation_fraction(&half, &neutral, 10.0), 0.5);
        assert_eq!(
            head_deviation_fraction(&vec![at(10.0); 20], &neutral, 10.0),
            0.0
        );
    }

    fn feature(t_ms: u64, ear: f64, lip_gap: f64, hand: Option<f64>) -> FeatureFrame {
        FeatureFrame {
            t_ms,
            ear_left: Some(ear),
            ear_right: Some(ear),
            lar: Some(1.2),
            lip_gap,
            pose: Some(HeadPose::default()),
            gaze: Some(Gaze::default()),
            hand_speed_mps: hand,
            quality: Quality::empty(),
        }
    }

    #[test]
    fn not_calibrated_until_enough_poses() {
        let mut a = TemporalAnalyzer::new(TemporalConfig::default());
        assert!(matches!(a.stats(), Err(Error::NotCalibrated)));
        for i in 0..29 {
            a.push(feature(i * 33, 0.3, 0.0, None));
        }
        assert!(matches!(a.stats(), Err(Error::NotCalibrated)));
        a.push(feature(29 * 33, 0.3, 0.0, None));
        assert!(a.stats().is_ok());
    }

    #[test]
    fn calm_trace_stats() {
        // 30 fps for 12 s: open eyes, neutral pose, steady gaze, talking, hands at 0.3 m/s
        let mut a = TemporalAnalyzer::new(TemporalConfig::default());
        for i in 0..360u64 {
            let gap = if i % 2 == 0 { 0.0 } else { 0.01 };
            let hand = (i > 0).then_some(0.3);
            a.push(feature(i * 100 / 3, 0.3, gap, hand));
        }
        let s = a.stats().unwrap();
        assert_eq!(s.blink_rate_per_min, 0.0);
        assert_eq!(s.head_deviation_fraction, 0.0);
        assert_eq!(s.gaze_shift_count, 0);
        assert_eq!(s.lip_activity_fraction, 1.0);
        assert!((s.mean_hand_speed_mps.unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(s.smile_fraction, 0.0);

        let mut b = TemporalAnalyzer::new(TemporalConfig::default());
        for i in 0..40u64 {
            b.push(feature(i * 33, 0.3, 0.0, None));
        }
        assert_eq!(b.stats().unwrap().mean_hand_speed_mps, None);
    }

    /// Offline oracle: split the trace at every frame above the open
    /// threshold; a split point is a blink when the segment before it holds at
    /// least `min` frames below the close threshold.
    fn oracle_blinks(trace: &[f64], close: f64, open: f64, min: usize) -> usize {
        let mut start = 0;
        let mut blinks = 0;
        for (j, _) in trace.iter().enumerate().filter(|(_, &e)| e > open) {
            if trace[start..j].iter().filter(|&&e| e < close).count() >= min {
                blinks += 1;
            }
            start = j + 1;
        }
        blinks
    }

    proptest! {
        #[test]
        fn streaming_blinks_match_oracle(trace in prop::collection::vec(0.0..0.4f64, 0..400)) {
            prop_assert_eq!(trace_blinks(&trace), oracle_blinks(&trace, 0.21, 0.25, 2));
        }

        #[test]
        fn deviation_is_shift_invariant(
            yaws in prop::collection::vec(-160i32..160, 1..60),
            shift in -120i32..120,
        ) {
            // quarter-degree steps keep the arithmetic exact
            let yaws: Vec<f64> = yaws.iter().map(|&y| y as f64 * 0.25).collect();
            let shift = shift as f64 * 0.25;
            let neutral = NeutralPose { yaw0: 0.0, pitch0: 0.0, roll0: 0.0 };
            let poses: Vec<HeadPose> = yaws.iter().map(|&y| HeadPose::new(y, y / 2.0, -y / 4.0)).collect();
            let shifted: Vec<HeadPose> = poses.iter()
                .map(|p| HeadPose::new(p.yaw_deg + shift, p.pitch_deg + shift, p.roll_deg + shift))
                .collect();
            let neutral2 = NeutralPose { yaw0: shift, pitch0: shift, roll0: shift };
            let a = head_deviation_fraction(&poses, &neutral, 10.0);
            let b = head_deviation_fraction(&shifted, &neutral2, 10.0);
            prop_assert_eq!(a, b);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
