//! Head orientation from six rigid anchors.
//!
//! Observed landmarks are mapped into the template's head frame axes
//! (x right, y up, z toward the camera) by `(x, -y, -z)`, which is a proper
//! rotation, so handedness is preserved. The rotation aligning the centered
//! template to the centered observation is found by the Kabsch method and
//! decomposed as `R = Ry(yaw) * Rx(pitch) * Rz(roll)`.
//!
//! Sign conventions, for an unmirrored camera image:
//! * `+yaw`: nose turns toward the image right, i.e. the subject's left.
//! * `+pitch`: nose drops (head nods down).
//! * `+roll`: the image-right side of the face rises.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Feature, Result};
use crate::landmark::{LandmarkFrame, Point3, FACE_POINTS};

pub const ANCHOR_COUNT: usize = 6;

const TEMPLATE_V1: &str = include_str!("../../data/face_template_v1.csv");

/// Relative size of the second singular value below which the
/// cross-covariance no longer pins down a rotation.
const RANK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HeadPose {
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
}

impl HeadPose {
    pub const fn new(yaw_deg: f64, pitch_deg: f64, roll_deg: f64) -> Self {
        Self {
            yaw_deg,
            pitch_deg,
            roll_deg,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceTemplate {
    pub anchor_indices: [usize; ANCHOR_COUNT],
    /// Head-frame coordinates in meters, centroid at the origin.
    pub anchor_coords: [Vector3<f64>; ANCHOR_COUNT],
}

impl FaceTemplate {
    pub fn new(
        anchor_indices: [usize; ANCHOR_COUNT],
        anchor_coords: [Vector3<f64>; ANCHOR_COUNT],
    ) -> Result<Self> {
        if let Some(&bad) = anchor_indices.iter().find(|&&i| i >= FACE_POINTS) {
            return Err(Error::config(
                "template.index",
                format!("anchor index {bad} out of range"),
            ));
        }
        let centroid = anchor_coords.iter().sum::<Vector3<f64>>() / ANCHOR_COUNT as f64;
        let centered = anchor_coords.map(|c| c - centroid);
        let scatter: Matrix3<f64> = centered.iter().map(|c| c * c.transpose()).sum();
        let mut sv: Vec<f64> = scatter.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        if !(sv[2] > RANK_TOLERANCE * sv[0]) {
            return Err(Error::DegenerateGeometry(Feature::Template));
        }
        Ok(Self {
            anchor_indices,
            anchor_coords: centered,
        })
    }

    /// Parses the `index,x,y,z` data file format. Lines starting with `#` are
    /// comments; the first non-comment line is the column header.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        match rows.next() {
            Some("index,x,y,z") => {}
            other => {
                return Err(Error::config(
                    "template",
                    format!("expected header `index,x,y,z`, found {other:?}"),
                ))
            }
        }
        let mut indices = [0usize; ANCHOR_COUNT];
        let mut coords = [Vector3::zeros(); ANCHOR_COUNT];
        let mut n = 0;
        for row in rows {
            if n == ANCHOR_COUNT {
                return Err(Error::config("template", "more than 6 anchor rows"));
            }
            let fields: Vec<&str> = row.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(Error::config("template", format!("bad row `{row}`")));
            }
            indices[n] = fields[0]
                .parse()
                .map_err(|_| Error::config("template", format!("bad index in `{row}`")))?;
            for k in 0..3 {
                coords[n][k] = fields[k + 1]
                    .parse()
                    .map_err(|_| Error::config("template", format!("bad coordinate in `{row}`")))?;
            }
            n += 1;
        }
        if n != ANCHOR_COUNT {
            return Err(Error::config(
                "template",
                format!("expected 6 anchor rows, found {n}"),
            ));
        }
        Self::new(indices, coords)
    }

    /// Observed anchors mapped into head-frame axes (unscaled, uncentered).
    pub fn observed_anchors(&self, frame: &LandmarkFrame) -> [Vector3<f64>; ANCHOR_COUNT] {
        self.anchor_indices.map(|i| to_head_axes(&frame.face[i]))
    }

    /// Image-space point for a head-frame coordinate under `rotation`,
    /// `scale` (normalized units per meter) and a 2D image offset.
    pub fn project(
        coord: &Vector3<f64>,
        rotation: &Matrix3<f64>,
        scale: f64,
        offset: (f64, f64),
    ) -> Point3 {
        let v = rotation * coord * scale;
        Point3::new(offset.0 + v.x, offset.1 - v.y, -v.z)
    }
}

impl Default for FaceTemplate {
    fn default() -> Self {
        Self::parse(TEMPLATE_V1).expect("shipped template is valid")
    }
}

fn to_head_axes(p: &Point3) -> Vector3<f64> {
    Vector3::new(p.x, -p.y, -p.z)
}

/// Proper rotation `R` minimizing `sum |R * source_i - target_i|^2` over
/// centered point sets. Scale is ignored.
pub fn kabsch(source: &[Vector3<f64>], target: &[Vector3<f64>]) -> Result<Matrix3<f64>> {
    debug_assert_eq!(source.len(), target.len());
    let n = source.len() as f64;
    let cs = source.iter().sum::<Vector3<f64>>() / n;
    let ct = target.iter().sum::<Vector3<f64>>() / n;
    let covariance: Matrix3<f64> = source
        .iter()
        .zip(target)
        .map(|(s, t)| (s - cs) * (t - ct).transpose())
        .sum();

    let svd = covariance.svd(true, true);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    if !(sv[0] > 0.0) || !(sv[1] > RANK_TOLERANCE * sv[0]) {
        return Err(Error::DegenerateGeometry(Feature::HeadPose));
    }
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let correction = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d));
    Ok(v * correction * u.transpose())
}

pub fn rot_x(rad: f64) -> Matrix3<f64> {
    let (s, c) = rad.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(rad: f64) -> Matrix3<f64> {
    let (s, c) = rad.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(rad: f64) -> Matrix3<f64> {
    let (s, c) = rad.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// `Ry(yaw) * Rx(pitch) * Rz(roll)`.
pub fn compose_euler(pose: &HeadPose) -> Matrix3<f64> {
    rot_y(pose.yaw_deg.to_radians())
        * rot_x(pose.pitch_deg.to_radians())
        * rot_z(pose.roll_deg.to_radians())
}

/// Inverse of [`compose_euler`]. At gimbal lock (`|pitch| = 90`) roll is
/// reported as zero and the shared rotation is assigned to yaw.
pub fn decompose_euler(r: &Matrix3<f64>) -> HeadPose {
    let sp = (-r[(1, 2)]).clamp(-1.0, 1.0);
    let pitch = sp.asin();
    let (yaw, roll) = if sp.abs() < 1.0 - 1e-12 {
        (r[(0, 2)].atan2(r[(2, 2)]), r[(1, 0)].atan2(r[(1, 1)]))
    } else if sp > 0.0 {
        (r[(0, 1)].atan2(r[(0, 0)]), 0.0)
    } else {
        ((-r[(0, 1)]).atan2(r[(0, 0)]), 0.0)
    };
    HeadPose::new(yaw.to_degrees(), pitch.to_degrees(), roll.to_degrees())
}

pub fn head_rotation(frame: &LandmarkFrame, template: &FaceTemplate) -> Result<Matrix3<f64>> {
    let observed = template.observed_anchors(frame);
    kabsch(&template.anchor_coords, &observed)
}

pub fn head_pose(frame: &LandmarkFrame, template: &FaceTemplate) -> Result<HeadPose> {
    head_rotation(frame, template).map(|r| decompose_euler(&r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landmark::FACE_POINTS;
    use proptest::prelude::*;

    fn frame_from_template(
        template: &FaceTemplate,
        rotation: &Matrix3<f64>,
        scale: f64,
        offset: (f64, f64),
    ) -> LandmarkFrame {
        let mut face = vec![Point3::new(offset.0, offset.1, 0.0); FACE_POINTS];
        for (idx, coord) in template.anchor_indices.iter().zip(&template.anchor_coords) {
            face[*idx] = FaceTemplate::project(coord, rotation, scale, offset);
        }
        LandmarkFrame {
            t_ms: 0,
            face,
            left_hand: None,
            right_hand: None,
        }
    }

    fn assert_pose(actual: HeadPose, expected: HeadPose, tol: f64) {
        assert!(
            (actual.yaw_deg - expected.yaw_deg).abs() <= tol
                && (actual.pitch_deg - expected.pitch_deg).abs() <= tol
                && (actual.roll_deg - expected.roll_deg).abs() <= tol,
            "{actual:?} != {expected:?}"
        );
    }

    #[test]
    fn shipped_template_is_centered_and_full_rank() {
        let t = FaceTemplate::default();
        assert_eq!(t.anchor_indices, [1, 199, 33, 263, 61, 291]);
        let c: Vector3<f64> = t.anchor_coords.iter().sum();
        assert!(c.norm() < 1e-12);
    }

    #[test]
    fn identity_alignment_any_scale_and_offset() {
        let t = FaceTemplate::default();
        for (scale, offset) in [(1.6, (0.5, 0.5)), (0.3, (0.1, 0.9)), (7.0, (0.42, 0.37))] {
            let frame = frame_from_template(&t, &Matrix3::identity(), scale, offset);
            assert_pose(head_pose(&frame, &t).unwrap(), HeadPose::default(), 1e-9);
        }
    }

    #[test]
    fn pure_yaw_is_recovered() {
        let t = FaceTemplate::default();
        let r = rot_y(10f64.to_radians());
        let frame = frame_from_template(&t, &r, 1.6, (0.5, 0.5));
        assert_pose(
            head_pose(&frame, &t).unwrap(),
            HeadPose::new(10.0, 0.0, 0.0),
            1e-6,
        );
        // nose moved toward the image right
        assert!(frame.face[1].x > 0.5);
    }

    #[test]
    fn composed_rotation_is_recovered() {
        let t = FaceTemplate::default();
        let want = HeadPose::new(20.0, -5.0, 3.0);
        let frame = frame_from_template(&t, &compose_euler(&want), 1.6, (0.5, 0.5));
        assert_pose(head_pose(&frame, &t).unwrap(), want, 1e-6);
    }

    #[test]
    fn collapsed_anchors_are_degenerate() {
        let t = FaceTemplate::default();
        let mut frame = frame_from_template(&t, &Matrix3::identity(), 1.6, (0.5, 0.5));
        for &i in &t.anchor_indices {
            frame.face[i] = Point3::new(0.5, 0.5, 0.0);
        }
        assert!(matches!(
            head_pose(&frame, &t),
            Err(Error::DegenerateGeometry(Feature::HeadPose))
        ));
        // collinear
        for (k, &i) in t.anchor_indices.iter().enumerate() {
            frame.face[i] = Point3::new(0.4 + 0.01 * k as f64, 0.5, 0.0);
        }
        assert!(head_pose(&frame, &t).is_err());
    }

    #[test]
    fn template_parser_rejects_bad_input() {
        assert!(FaceTemplate::parse("index,x,y,z\n1,0,0,0\n").is_err());
        assert!(FaceTemplate::parse("idx,x,y,z\n").is_err());
        let coplanar = "index,x,y,z\n1,0,0,0\n2,1,0,0\n3,0,1,0\n4,1,1,0\n5,2,1,0\n6,1,2,0\n";
        assert!(matches!(
            FaceTemplate::parse(coplanar),
            Err(Error::DegenerateGeometry(Feature::Template))
        ));
    }

    #[test]
    fn kabsch_corrects_reflections() {
        // target is a mirror image of source: best proper rotation still has det +1
        let t = FaceTemplate::default();
        let mirrored: Vec<Vector3<f64>> = t
            .anchor_coords
            .iter()
            .map(|c| Vector3::new(-c.x, c.y, c.z))
            .collect();
        let r = kabsch(&t.anchor_coords, &mirrored).unwrap();
        assert!((r.determinant() - 1.0).abs() < 1e-12);
        assert!((r * r.transpose() - Matrix3::identity()).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn euler_round_trip(yaw in -179.0..179.0f64, pitch in -84.9..84.9f64, roll in -179.0..179.0f64) {
            let r = compose_euler(&HeadPose::new(yaw, pitch, roll));
            let back = compose_euler(&decompose_euler(&r));
            prop_assert!((back - r).norm() < 1e-9);
        }

        #[test]
        fn pose_ignores_scale_and_translation(
            yaw in -60.0..60.0f64, pitch in -60.0..60.0f64, roll in -60.0..60.0f64,
            scale in 0.2..5.0f64, ox in 0.2..0.8f64, oy in 0.2..0.8f64,
        ) {
            let t = FaceTemplate::default();
            let want = HeadPose::new(yaw, pitch, roll);
            let frame = frame_from_template(&t, &compose_euler(&want), scale, (ox, oy));
            let r = head_rotation(&frame, &t).unwrap();
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
            let got = decompose_euler(&r);
            prop_assert!((got.yaw_deg - yaw).abs() < 1e-6);
            prop_assert!((got.pitch_deg - pitch).abs() < 1e-6);
            prop_assert!((got.roll_deg - roll).abs() < 1e-6);
        }

        #[test]
        fn noisy_rotations_stay_proper(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let t = FaceTemplate::default();
            let target: Vec<Vector3<f64>> = t.anchor_coords.iter()
                .map(|c| c + Vector3::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05)))
                .collect();
            if let Ok(r) = kabsch(&t.anchor_coords, &target) {
                prop_assert!((r.determinant() - 1.0).abs() < 1e-9);
            }
        }
    }
}
