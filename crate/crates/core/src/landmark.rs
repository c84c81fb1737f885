//! Landmark frame model, the `.pose.ndjson` session format and metric scale.
//!
//! Coordinates are normalized image units: `x` grows to the image right, `y`
//! grows downward, `z` is relative depth on the same scale as `x` (smaller is
//! closer to the camera). Every ratio feature and speed downstream uses `x`
//! and `y` only.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Feature, Result};

/// 468 mesh points followed by 10 iris points.
pub const FACE_POINTS: usize = 478;
pub const HAND_POINTS: usize = 21;
pub const FORMAT_VERSION: u32 = 1;

pub const LEFT_IRIS: std::ops::Range<usize> = 468..473;
pub const RIGHT_IRIS: std::ops::Range<usize> = 473..478;
/// Hand point 0.
pub const WRIST: usize = 0;

const COORD_MIN: f64 = -0.5;
const COORD_MAX: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Planar distance, ignoring depth.
    pub fn dist_xy(&self, other: &Point3) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(&self, other: &Point3) -> Point3 {
        Point3::new(
            0.5 * (self.x + other.x),
            0.5 * (self.y + other.y),
            0.5 * (self.z + other.z),
        )
    }

    pub fn mean(points: &[Point3]) -> Point3 {
        let n = points.len() as f64;
        let (sx, sy, sz) = points.iter().fold((0.0, 0.0, 0.0), |(sx, sy, sz), p| {
            (sx + p.x, sy + p.y, sz + p.z)
        });
        Point3::new(sx / n, sy / n, sz / n)
    }
}

impl From<[f64; 3]> for Point3 {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Point3 { x, y, z }
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

/// One timestamped observation of a face and up to two hands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandmarkFrame {
    pub t_ms: u64,
    pub face: Vec<Point3>,
    pub left_hand: Option<Vec<Point3>>,
    pub right_hand: Option<Vec<Point3>>,
}

impl LandmarkFrame {
    pub fn hands(&self) -> [Option<&[Point3]>; 2] {
        [self.left_hand.as_deref(), self.right_hand.as_deref()]
    }

    /// Checks point counts and coordinate ranges.
    pub fn validate(&self) -> Result<()> {
        if self.face.len() != FACE_POINTS {
            return Err(Error::SchemaViolation(format!(
                "face has {} points, expected {FACE_POINTS}",
                self.face.len()
            )));
        }
        check_points("face", &self.face)?;
        for (name, hand) in [
            ("left_hand", &self.left_hand),
            ("right_hand", &self.right_hand),
        ] {
            if let Some(points) = hand {
                if points.len() != HAND_POINTS {
                    return Err(Error::SchemaViolation(format!(
                        "{name} has {} points, expected {HAND_POINTS}",
                        points.len()
                    )));
                }
                check_points(name, points)?;
            }
        }
        Ok(())
    }
}

fn check_points(array: &'static str, points: &[Point3]) -> Result<()> {
    for (index, p) in points.iter().enumerate() {
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return Err(Error::NonFiniteCoordinate { array, index });
        }
        if !(COORD_MIN..=COORD_MAX).contains(&p.x) || !(COORD_MIN..=COORD_MAX).contains(&p.y) {
            return Err(Error::SchemaViolation(format!(
                "{array}[{index}] = ({}, {}) outside [{COORD_MIN}, {COORD_MAX}]",
                p.x, p.y
            )));
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct RawFrame {
    #[serde(rename = "type")]
    kind: Option<String>,
    t_ms: Option<u64>,
    face: Option<Vec<Point3>>,
    #[serde(default)]
    left_hand: Option<Vec<Point3>>,
    #[serde(default)]
    right_hand: Option<Vec<Point3>>,
}

fn classify(err: serde_json::Error) -> Error {
    use serde_json::error::Category;
    match err.classify() {
        Category::Data => Error::SchemaViolation(err.to_string()),
        Category::Syntax | Category::Eof | Category::Io => Error::MalformedRecord(err.to_string()),
    }
}

/// An inbound record: a frame, or the end-of-session marker `{"type":"end"}`.
#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Frame(LandmarkFrame),
    End,
}

/// Parses one NDJSON frame record. A `"type": "frame"` tag is accepted so the
/// same function serves session files and live wire messages.
pub fn parse_frame(line: &str) -> Result<LandmarkFrame> {
    match parse_record(line)? {
        Record::Frame(frame) => Ok(frame),
        Record::End => Err(Error::SchemaViolation(
            "unexpected record type `end`".into(),
        )),
    }
}

pub fn parse_record(line: &str) -> Result<Record> {
    let raw: RawFrame = serde_json::from_str(line.trim_end()).map_err(classify)?;
    match raw.kind.as_deref() {
        None | Some("frame") => {}
        Some("end") => return Ok(Record::End),
        Some(kind) => {
            return Err(Error::SchemaViolation(format!(
                "unexpected record type `{kind}`"
            )))
        }
    }
    let t_ms = raw
        .t_ms
        .ok_or_else(|| Error::SchemaViolation("missing t_ms".into()))?;
    let face = raw
        .face
        .ok_or_else(|| Error::SchemaViolation("missing face".into()))?;
    let frame = LandmarkFrame {
        t_ms,
        face,
        left_hand: raw.left_hand,
        right_hand: raw.right_hand,
    };
    frame.validate()?;
    Ok(Record::Frame(frame))
}

/// Canonical single-line form of a frame (no trailing newline).
pub fn serialize_frame(frame: &LandmarkFrame) -> String {
    serde_json::to_string(frame).expect("frame serialization is infallible")
}

/// Accepts `frame` iff its timestamp strictly follows `prev_t`.
pub fn validate_stream_order(prev_t: Option<u64>, frame: &LandmarkFrame) -> Result<()> {
    match prev_t {
        Some(prev_ms) if frame.t_ms <= prev_ms => Err(Error::NonMonotonicTimestamp {
            prev_ms,
            t_ms: frame.t_ms,
        }),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub format_version: u32,
    pub source: String,
    pub started_at: String,
    pub face_point_count: usize,
    pub hand_point_count: usize,
}

impl SessionHeader {
    pub fn new(source: impl Into<String>, started_at: impl Into<String>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            source: source.into(),
            started_at: started_at.into(),
            face_point_count: FACE_POINTS,
            hand_point_count: HAND_POINTS,
        }
    }

    pub fn parse(line: &str) -> Result<Self> {
        let header: SessionHeader = serde_json::from_str(line.trim_end()).map_err(classify)?;
        if header.format_version != FORMAT_VERSION {
            return Err(Error::SchemaViolation(format!(
                "unsupported format_version {}",
                header.format_version
            )));
        }
        if header.face_point_count != FACE_POINTS || header.hand_point_count != HAND_POINTS {
            return Err(Error::SchemaViolation(format!(
                "point counts {}/{} do not match {FACE_POINTS}/{HAND_POINTS}",
                header.face_point_count, header.hand_point_count
            )));
        }
        Ok(header)
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("header serialization is infallible")
    }
}

/// Streams frames out of a `.pose.ndjson` reader. Line numbers are 1-based
/// and count the header.
pub struct SessionReader<R> {
    lines: std::io::Lines<R>,
    header: SessionHeader,
    line_no: usize,
}

impl<R: BufRead> SessionReader<R> {
    pub fn new(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::SchemaViolation("missing session header".into()))?
            .map_err(|e| Error::MalformedRecord(e.to_string()))?;
        let header = SessionHeader::parse(&first)?;
        Ok(Self {
            lines,
            header,
            line_no: 1,
        })
    }

    pub fn header(&self) -> &SessionHeader {
        &self.header
    }
}

impl<R: BufRead> Iterator for SessionReader<R> {
    type Item = (usize, Result<LandmarkFrame>);

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let line = match line {
                Ok(line) => line,
                Err(e) => return Some((self.line_no, Err(Error::MalformedRecord(e.to_string())))),
            };
            if line.trim().is_empty() {
                continue;
            }
            return Some((self.line_no, parse_frame(&line)));
        }
    }
}

/// Writes a header followed by frames, one per line.
pub struct SessionWriter<W: Write> {
    out: W,
}

impl<W: Write> SessionWriter<W> {
    pub fn new(mut out: W, header: &SessionHeader) -> std::io::Result<Self> {
        writeln!(out, "{}", header.to_line())?;
        Ok(Self { out })
    }

    pub fn write_frame(&mut self, frame: &LandmarkFrame) -> std::io::Result<()> {
        writeln!(self.out, "{}", serialize_frame(frame))
    }

    /// Writes an already-validated record line verbatim.
    pub fn write_frame_raw(&mut self, line: &str) -> std::io::Result<()> {
        writeln!(self.out, "{line}")
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleCalibration {
    pub meters_per_unit: f64,
    pub ipd_meters: f64,
}

pub const DEFAULT_IPD_METERS: f64 = 0.063;
const MIN_IRIS_DISTANCE: f64 = 1e-6;

/// Center of the iris ring for the eye at image-left (paired with 33/133).
pub fn left_iris_center(frame: &LandmarkFrame) -> Point3 {
    Point3::mean(&frame.face[LEFT_IRIS])
}

pub fn right_iris_center(frame: &LandmarkFrame) -> Point3 {
    Point3::mean(&frame.face[RIGHT_IRIS])
}

/// Metric scale from the planar distance between iris centers.
pub fn compute_scale(frame: &LandmarkFrame, ipd_meters: f64) -> Result<ScaleCalibration> {
    let d = left_iris_center(frame).dist_xy(&right_iris_center(frame));
    if !(d >= MIN_IRIS_DISTANCE) {
        return Err(Error::DegenerateGeometry(Feature::Scale));
    }
    Ok(ScaleCalibration {
        meters_per_unit: ipd_meters / d,
        ipd_meters,
    })
}
