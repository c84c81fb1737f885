//! Per-frame geometric measurements.
//!
//! All ratios and speeds use planar (`x`, `y`) distances. A degenerate
//! measurement leaves its field empty and sets a [`Quality`] flag instead of
//! failing the frame.

pub mod pose;

use bitflags::bitflags;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Feature, Result};
use crate::landmark::{
    left_iris_center, right_iris_center, LandmarkFrame, Point3, ScaleCalibration, WRIST,
};
pub use pose::{FaceTemplate, HeadPose};

/// Outer corner, upper-outer, upper-inner, inner corner, lower-inner, lower-outer.
pub const LEFT_EYE: [usize; 6] = [33, 160, 158, 133, 153, 144];
pub const RIGHT_EYE: [usize; 6] = [362, 385, 387, 263, 373, 380];

/// Eye corner pairs used for gaze: (image-left corner, image-right corner).
pub const LEFT_EYE_CORNERS: (usize, usize) = (33, 133);
pub const RIGHT_EYE_CORNERS: (usize, usize) = (362, 263);

pub const MOUTH_LEFT: usize = 61;
pub const MOUTH_RIGHT: usize = 291;
pub const UPPER_LIP_OUTER: usize = 0;
pub const LOWER_LIP_OUTER: usize = 17;
pub const UPPER_LIP_INNER: usize = 13;
pub const LOWER_LIP_INNER: usize = 14;

const MIN_SPAN: f64 = 1e-6;

bitflags! {
    /// Which measurements were degenerate on this frame.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
    #[serde(transparent)]
    pub struct Quality: u8 {
        const EYE_LEFT = 1 << 0;
        const EYE_RIGHT = 1 << 1;
        const LIP_RATIO = 1 << 2;
        const HEAD_POSE = 1 << 3;
        const GAZE = 1 << 4;
        const SCALE = 1 << 5;
    }
}

/// Iris offset relative to the eye, in eye half-widths.
///
/// `h > 0` means looking toward the subject's right (the image left in an
/// unmirrored camera image); `v > 0` means looking down.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Gaze {
    pub h: f64,
    pub v: f64,
}

impl Gaze {
    pub fn magnitude(&self) -> f64 {
        self.h.hypot(self.v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureFrame {
    pub t_ms: u64,
    pub ear_left: Option<f64>,
    pub ear_right: Option<f64>,
    pub lar: Option<f64>,
    pub lip_gap: f64,
    pub pose: Option<HeadPose>,
    pub gaze: Option<Gaze>,
    pub hand_speed_mps: Option<f64>,
    pub quality: Quality,
}

impl FeatureFrame {
    /// Mean of both eyes, or whichever one is available.
    pub fn ear(&self) -> Option<f64> {
        match (self.ear_left, self.ear_right) {
            (Some(l), Some(r)) => Some(0.5 * (l + r)),
            (l, r) => l.or(r),
        }
    }
}

/// Six-point eye aspect ratio.
pub fn eye_aspect_ratio(p: [&Point3; 6]) -> Result<f64> {
    let span = p[0].dist_xy(p[3]);
    if !(span >= MIN_SPAN) {
        return Err(Error::DegenerateGeometry(Feature::EyeLeft));
    }
    Ok((p[1].dist_xy(p[5]) + p[2].dist_xy(p[4])) / (2.0 * span))
}

fn eye_points<'a>(frame: &'a LandmarkFrame, idx: &[usize; 6]) -> [&'a Point3; 6] {
    idx.map(|i| &frame.face[i])
}

pub fn eye_aspect_ratios(frame: &LandmarkFrame) -> (Result<f64>, Result<f64>) {
    let left = eye_aspect_ratio(eye_points(frame, &LEFT_EYE));
    let right = eye_aspect_ratio(eye_points(frame, &RIGHT_EYE))
        .map_err(|_| Error::DegenerateGeometry(Feature::EyeRight));
    (left, right)
}

/// Mouth width over outer-lip height.
pub fn lip_aspect_ratio(frame: &LandmarkFrame) -> Result<f64> {
    let f = &frame.face;
    let width = f[MOUTH_LEFT].dist_xy(&f[MOUTH_RIGHT]);
    let height = f[UPPER_LIP_OUTER].dist_xy(&f[LOWER_LIP_OUTER]);
    if !(height >= MIN_SPAN) {
        return Err(Error::DegenerateGeometry(Feature::LipRatio));
    }
    Ok(width / height)
}

/// Inner-lip vertical gap in normalized units.
pub fn lip_gap(frame: &LandmarkFrame) -> f64 {
    frame.face[UPPER_LIP_INNER].dist_xy(&frame.face[LOWER_LIP_INNER])
}

fn eye_offset(iris: Point3, a: &Point3, b: &Point3) -> Result<(f64, f64)> {
    let half_width = 0.5 * a.dist_xy(b);
    if !(half_width >= MIN_SPAN) {
        return Err(Error::DegenerateGeometry(Feature::Gaze));
    }
    let center = a.midpoint(b);
    Ok((
        (iris.x - center.x) / half_width,
        (iris.y - center.y) / half_width,
    ))
}

pub fn gaze_offset(frame: &LandmarkFrame) -> Result<Gaze> {
    let f = &frame.face;
    let (l0, l1) = LEFT_EYE_CORNERS;
    let (r0, r1) = RIGHT_EYE_CORNERS;
    let left = eye_offset(left_iris_center(frame), &f[l0], &f[l1])?;
    let right = eye_offset(right_iris_center(frame), &f[r0], &f[r1])?;
    Ok(Gaze {
        h: -0.5 * (left.0 + right.0),
        v: 0.5 * (left.1 + right.1),
    })
}

/// Fastest wrist among hands visible in both frames, in m/s.
pub fn hand_speed(
    prev: &LandmarkFrame,
    cur: &LandmarkFrame,
    scale: &ScaleCalibration,
) -> Result<Option<f64>> {
    if cur.t_ms <= prev.t_ms {
        return Err(Error::ZeroInterval);
    }
    let dt_s = (cur.t_ms - prev.t_ms) as f64 / 1000.0;
    let speed = prev
        .hands()
        .into_iter()
        .zip(cur.hands())
        .filter_map(|pair| match pair {
            (Some(a), Some(b)) => Some(a[WRIST].dist_xy(&b[WRIST]) * scale.meters_per_unit / dt_s),
            _ => None,
        })
        .reduce(f64::max);
    Ok(speed)
}

/// Computes every per-frame feature. `scale` is the (smoothed) metric scale;
/// without one, hand speed is left empty and flagged.
pub fn extract_features(
    prev: Option<&LandmarkFrame>,
    cur: &LandmarkFrame,
    template: &FaceTemplate,
    scale: Option<&ScaleCalibration>,
) -> Result<FeatureFrame> {
    let mut quality = Quality::empty();
    let mut ok_or_flag = |r: Result<f64>, flag: Quality| match r {
        Ok(v) => Some(v),
        Err(_) => {
            quality |= flag;
            None
        }
    };
    let (left, right) = eye_aspect_ratios(cur);
    let ear_left = ok_or_flag(left, Quality::EYE_LEFT);
    let ear_right = ok_or_flag(right, Quality::EYE_RIGHT);
    let lar = ok_or_flag(lip_aspect_ratio(cur), Quality::LIP_RATIO);

    let pose = pose::head_pose(cur, template).ok();
    if pose.is_none() {
        quality |= Quality::HEAD_POSE;
    }
    let gaze = gaze_offset(cur).ok();
    if gaze.is_none() {
        quality |= Quality::GAZE;
    }

    let hand_speed_mps = match (prev, scale) {
        (Some(prev), Some(scale)) => hand_speed(prev, cur, scale)?,
        (Some(_), None) => {
            quality |= Quality::SCALE;
            None
        }
        (None, _) => None,
    };

    Ok(FeatureFrame {
        t_ms: cur.t_ms,
        ear_left,
        ear_right,
        lar,
        lip_gap: lip_gap(cur),
        pose,
        gaze,
        hand_speed_mps,
        quality,
    })
}
