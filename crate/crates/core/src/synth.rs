//! Scripted synthetic landmark streams.
//!
//! A rigid head model is rotated, scaled and orthographically projected into
//! normalized image space. Each preset scripts blink cadence, head motion,
//! gaze, smiling, talking and wrist speed so that every channel lands in a
//! known band.

use std::f64::consts::PI;
use std::io::Write;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::pose::{compose_euler, FaceTemplate};
use crate::geometry::{
    HeadPose, LEFT_EYE, LOWER_LIP_INNER, LOWER_LIP_OUTER, MOUTH_LEFT, MOUTH_RIGHT, RIGHT_EYE,
    UPPER_LIP_INNER, UPPER_LIP_OUTER,
};
use crate::landmark::{
    LandmarkFrame, Point3, SessionHeader, SessionWriter, FACE_POINTS, HAND_POINTS, LEFT_IRIS,
    RIGHT_IRIS,
};

/// Normalized image units per meter: the irises land 0.1 apart.
pub const FACE_SCALE: f64 = 0.1 / 0.063;
const FACE_CENTER: (f64, f64) = (0.5, 0.45);

const EYE_Y: f64 = 0.042;
const EYE_Z: f64 = -0.0072;
const EYE_OUTER_X: f64 = 0.0433;
const EYE_INNER_X: f64 = 0.0197;
const EYE_WIDTH: f64 = EYE_OUTER_X - EYE_INNER_X;
const IRIS_RADIUS: f64 = 0.0058;
const MOUTH_Y: f64 = -0.0195;
const LIP_Z: f64 = 0.004;
const MOUTH_WIDTH: f64 = 2.0 * 0.0289;

const EAR_OPEN: f64 = 0.30;
const EAR_CLOSED: f64 = 0.05;
const LAR_SMILE: f64 = 1.8;
const LAR_NEUTRAL: f64 = 1.2;
/// Frames are neutral and still for this long so calibration sees a steady head.
const LEAD_IN_MS: f64 = 4_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Calm,
    Nervous,
    Distracted,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Calm, Preset::Nervous, Preset::Distracted];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Calm => "calm",
            Preset::Nervous => "nervous",
            Preset::Distracted => "distracted",
        }
    }

    fn script(&self) -> Script {
        match self {
            // every channel inside its high band
            Preset::Calm => Script {
                blink_period_ms: 15_000.0,
                blink_offset_ms: 7_500.0,
                head_period_ms: 5_000.0,
                head_away_ms: 0.0,
                head_away_deg: 0.0,
                head_jitter_deg: 1.5,
                gaze_period_ms: 0.0,
                gaze_away_ms: 0.0,
                gaze_noise: 0.03,
                smile_period_ms: 5_000.0,
                smile_on_ms: 3_000.0,
                talk_period_ms: 1.0,
                talk_on_ms: 1.0,
                hand_speed_mps: 0.3,
            },
            // every channel at its low anchor
            Preset::Nervous => Script {
                blink_period_ms: 3_000.0,
                blink_offset_ms: 1_500.0,
                head_period_ms: 5_000.0,
                head_away_ms: 3_000.0,
                head_away_deg: 20.0,
                head_jitter_deg: 1.0,
                gaze_period_ms: 2_500.0,
                gaze_away_ms: 500.0,
                gaze_noise: 0.02,
                smile_period_ms: 5_000.0,
                smile_on_ms: 0.0,
                talk_period_ms: 1.0,
                talk_on_ms: 0.0,
                hand_speed_mps: 0.9,
            },
            // every channel near the middle of its medium band
            Preset::Distracted => Script {
                blink_period_ms: 4_500.0,
                blink_offset_ms: 2_000.0,
                head_period_ms: 5_000.0,
                head_away_ms: 1_250.0,
                head_away_deg: 15.0,
                head_jitter_deg: 1.0,
                gaze_period_ms: 10_000.0,
                gaze_away_ms: 600.0,
                gaze_noise: 0.02,
                smile_period_ms: 5_000.0,
                smile_on_ms: 1_000.0,
                talk_period_ms: 5_000.0,
                talk_on_ms: 2_000.0,
                hand_speed_mps: 0.6,
            },
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "calm" => Ok(Preset::Calm),
            "nervous" => Ok(Preset::Nervous),
            "distracted" => Ok(Preset::Distracted),
            other => Err(Error::InvalidProfile(format!(
                "unknown preset `{other}` (expected calm, nervous or distracted)"
            ))),
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy)]
struct Script {
    blink_period_ms: f64,
    blink_offset_ms: f64,
    head_period_ms: f64,
    head_away_ms: f64,
    head_away_deg: f64,
    head_jitter_deg: f64,
    /// Zero disables look-aways.
    gaze_period_ms: f64,
    gaze_away_ms: f64,
    gaze_noise: f64,
    smile_period_ms: f64,
    smile_on_ms: f64,
    talk_period_ms: f64,
    talk_on_ms: f64,
    hand_speed_mps: f64,
}

/// Duration, frame rate and preset of a synthetic run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchProfile {
    pub preset: Preset,
    pub duration_s: f64,
    pub fps: f64,
    pub seed: u64,
}

impl BenchProfile {
    pub fn new(preset: Preset, duration_s: f64, fps: f64) -> Self {
        Self {
            preset,
            duration_s,
            fps,
            seed: 0x5eed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s <= 24.0 * 3600.0) {
            return Err(Error::InvalidProfile(format!(
                "duration {} s must be in (0, 86400]",
                self.duration_s
            )));
        }
        if !(self.fps >= 1.0 && self.fps <= 1000.0) {
            return Err(Error::InvalidProfile(format!(
                "fps {} must be in [1, 1000]",
                self.fps
            )));
        }
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        (self.duration_s * self.fps).round() as usize
    }

    pub fn frames(&self) -> Result<impl Iterator<Item = LandmarkFrame>> {
        self.validate()?;
        Ok(SyntheticSession::new(self.preset, self.fps, self.seed).take(self.frame_count()))
    }

    /// Writes the profile as a session file. The header is fixed so the
    /// bytes depend only on the profile.
    pub fn write_session<W: Write>(&self, out: W) -> Result<W> {
        let io = |e| Error::io("<session>", e);
        let source = format!("synthetic:{}:{}", self.preset, self.seed);
        let mut w = SessionWriter::new(out, &SessionHeader::new(source, "1970-01-01T00:00:00Z"))
            .map_err(io)?;
        for frame in self.frames()? {
            w.write_frame(&frame).map_err(io)?;
        }
        w.flush().map_err(io)?;
        Ok(w.into_inner())
    }
}

fn in_phase(t: f64, period: f64, offset: f64, on: f64) -> bool {
    if period <= 0.0 || on <= 0.0 {
        return false;
    }
    (t - offset).rem_euclid(period) < on
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

/// Endless frame iterator for one preset.
#[derive(Debug, Clone)]
pub struct SyntheticSession {
    script: Script,
    fps: f64,
    frame: u64,
    rng: ChaCha8Rng,
    template: FaceTemplate,
}

impl SyntheticSession {
    pub fn new(preset: Preset, fps: f64, seed: u64) -> Self {
        Self {
            script: preset.script(),
            fps,
            frame: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            template: FaceTemplate::default(),
        }
    }

    fn t_ms(&self, k: u64) -> u64 {
        (k as f64 * 1000.0 / self.fps).round() as u64
    }

    fn pose(&mut self, t: f64) -> HeadPose {
        let s = &self.script;
        let jitter = s.head_jitter_deg;
        let (jy, jp, jr) = (
            self.rng.random_range(-0.3..=0.3) * jitter,
            self.rng.random_range(-0.3..=0.3) * jitter,
            self.rng.random_range(-0.3..=0.3) * jitter,
        );
        let drift = (2.0 * PI * t / 7_000.0).sin() * 0.7 * jitter;
        let away = t >= LEAD_IN_MS
            && in_phase(
                t - LEAD_IN_MS,
                s.head_period_ms,
                s.head_period_ms - s.head_away_ms,
                s.head_away_ms,
            );
        let yaw = if away { s.head_away_deg } else { 0.0 };
        HeadPose::new(yaw + drift + jy, 0.5 * drift + jp, jr)
    }

    fn ear(&self, t: f64) -> f64 {
        let s = &self.script;
        // closed for at least three frames so the 2-frame minimum always holds
        let closed_ms = (3.0 * 1000.0 / self.fps).max(200.0);
        if in_phase(t, s.blink_period_ms, s.blink_offset_ms, closed_ms) {
            EAR_CLOSED
        } else {
            EAR_OPEN
        }
    }

    fn gaze(&mut self, t: f64) -> (f64, f64) {
        let s = &self.script;
        let nh = self.rng.random_range(-1.0..=1.0) * s.gaze_noise;
        let nv = self.rng.random_range(-1.0..=1.0) * s.gaze_noise;
        let away = t >= LEAD_IN_MS
            && in_phase(
                t - LEAD_IN_MS,
                s.gaze_period_ms,
                s.gaze_period_ms / 2.0,
                s.gaze_away_ms,
            );
        if away {
            (0.5 + nh, nv)
        } else {
            (nh, nv)
        }
    }

    /// Inner-lip gap in meters: a triangle wave with a fixed step per frame
    /// while talking, closed otherwise.
    fn lip_gap(&self, t: f64, k: u64) -> f64 {
        let s = &self.script;
        if !in_phase(t, s.talk_period_ms, 0.0, s.talk_on_ms) {
            return 0.0;
        }
        let step = 0.002;
        let phase = k % 6;
        let level = if phase <= 3 { phase } else { 6 - phase };
        step * level as f64
    }

    /// Wrist position as a fixed-step shuttle so every frame moves exactly
    /// `speed * dt`.
    fn wrist(&self, k: u64) -> (f64, f64) {
        let v = self.script.hand_speed_mps * FACE_SCALE;
        let dt = 1.0 / self.fps;
        let step = v * dt;
        let half_s = (0.2 / v).min(0.4);
        let legs = ((half_s / dt).round() as u64).max(1);
        let pos = k % (2 * legs);
        let level = if pos <= legs { pos } else { 2 * legs - pos };
        (0.62 + step * level as f64, 0.78)
    }

    fn build(&mut self, k: u64) -> LandmarkFrame {
        let t_ms = self.t_ms(k);
        let t = t_ms as f64;
        let pose = self.pose(t);
        let rotation = compose_euler(&pose);
        let ear = self.ear(t);
        let (gh, gv) = self.gaze(t);
        let s = self.script;
        let smiling =
            t >= LEAD_IN_MS && in_phase(t - LEAD_IN_MS, s.smile_period_ms, 0.0, s.smile_on_ms);
        let lar = if smiling { LAR_SMILE } else { LAR_NEUTRAL };
        let gap = self.lip_gap(t, k);

        let mut head = Vec::with_capacity(40);
        for (&i, c) in self
            .template
            .anchor_indices
            .iter()
            .zip(&self.template.anchor_coords)
        {
            head.push((i, *c));
        }
        let nose = self.template.anchor_coords[0];

        let opening = ear * EYE_WIDTH;
        for (idx, sign) in [(&LEFT_EYE, -1.0), (&RIGHT_EYE, 1.0)] {
            // idx[0] and idx[3] are the two corners; the other four sit at
            // thirds of the way from idx[0] to idx[3]
            let x0 = if sign < 0.0 {
                -EYE_OUTER_X
            } else {
                EYE_INNER_X
            };
            let x3 = if sign < 0.0 {
                -EYE_INNER_X
            } else {
                EYE_OUTER_X
            };
            let at = |f: f64, dy: f64| Vector3::new(x0 + f * (x3 - x0), EYE_Y + dy, EYE_Z);
            head.push((idx[0], at(0.0, 0.0)));
            head.push((idx[1], at(1.0 / 3.0, opening / 2.0)));
            head.push((idx[2], at(2.0 / 3.0, opening / 2.0)));
            head.push((idx[3], at(1.0, 0.0)));
            head.push((idx[4], at(2.0 / 3.0, -opening / 2.0)));
            head.push((idx[5], at(1.0 / 3.0, -opening / 2.0)));
        }
        let half_w = EYE_WIDTH / 2.0;
        for (range, cx) in [
            (LEFT_IRIS, -(EYE_OUTER_X + EYE_INNER_X) / 2.0),
            (RIGHT_IRIS, (EYE_OUTER_X + EYE_INNER_X) / 2.0),
        ] {
            // +h looks toward the image left, +v looks down
            let center = Vector3::new(cx - gh * half_w, EYE_Y - gv * half_w, EYE_Z + 0.004);
            let ring = [
                (0.0, 0.0),
                (IRIS_RADIUS, 0.0),
                (0.0, IRIS_RADIUS),
                (-IRIS_RADIUS, 0.0),
                (0.0, -IRIS_RADIUS),
            ];
            for (j, (dx, dy)) in ring.into_iter().enumerate() {
                head.push((range.start + j, center + Vector3::new(dx, dy, 0.0)));
            }
        }
        let height = MOUTH_WIDTH / lar;
        head.push((
            MOUTH_LEFT,
            Vector3::new(-MOUTH_WIDTH / 2.0, MOUTH_Y, -0.0053),
        ));
        head.push((
            MOUTH_RIGHT,
            Vector3::new(MOUTH_WIDTH / 2.0, MOUTH_Y, -0.0053),
        ));
        head.push((
            UPPER_LIP_OUTER,
            Vector3::new(0.0, MOUTH_Y + height / 2.0, LIP_Z),
        ));
        head.push((
            LOWER_LIP_OUTER,
            Vector3::new(0.0, MOUTH_Y - height / 2.0, LIP_Z),
        ));
        head.push((
            UPPER_LIP_INNER,
            Vector3::new(0.0, MOUTH_Y + gap / 2.0, LIP_Z),
        ));
        head.push((
            LOWER_LIP_INNER,
            Vector3::new(0.0, MOUTH_Y - gap / 2.0, LIP_Z),
        ));

        let project = |c: &Vector3<f64>, r: &Matrix3<f64>| {
            let p = FaceTemplate::project(c, r, FACE_SCALE, FACE_CENTER);
            Point3::new(round6(p.x), round6(p.y), round6(p.z))
        };
        let mut face = vec![project(&nose, &rotation); FACE_POINTS];
        for (i, c) in &head {
            face[*i] = project(c, &rotation);
        }

        let (wx, wy) = self.wrist(k);
        let hand: Vec<Point3> = (0..HAND_POINTS)
            .map(|j| {
                let (dx, dy) = if j == 0 {
                    (0.0, 0.0)
                } else {
                    let finger = ((j - 1) / 4) as f64;
                    let joint = ((j - 1) % 4 + 1) as f64;
                    ((finger - 2.0) * 0.012, -0.02 - 0.012 * joint)
                };
                Point3::new(round6(wx + dx), round6(wy + dy), 0.0)
            })
            .collect();

        LandmarkFrame {
            t_ms,
            face,
            left_hand: None,
            right_hand: Some(hand),
        }
    }
}

impl Iterator for SyntheticSession {
    type Item = LandmarkFrame;

    fn next(&mut self) -> Option<LandmarkFrame> {
        let frame = self.build(self.frame);
        self.frame += 1;
        Some(frame)
    }
}
