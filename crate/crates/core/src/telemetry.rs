//! Sensor log ingestion, frame normalization and terrain label tracks.
//!
//! Every sensor is stored in its own canonical CSV file: a `t` column in
//! seconds followed by `fx,fy,fz,tx,ty,tz` (force-torque sensors) or
//! `ax,ay,az` (chassis IMU). Streams are kept at their native rate; nothing is
//! resampled here.
//!
//! The force-torque sensors on the right-hand side of the rover are mounted
//! rotated by 180° about their z axis, so their x and y axes point backwards
//! and inwards. [`normalize_frame`] undoes that rotation so downstream code
//! sees a single rover frame: x forward, y left, z up.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four terrain classes, in the canonical order used for class indices,
/// confusion-matrix rows and report layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Terrain {
    Loose,
    Compressed,
    Pebbles,
    Rock,
}

impl Terrain {
    pub const ALL: [Terrain; 4] = [
        Terrain::Loose,
        Terrain::Compressed,
        Terrain::Pebbles,
        Terrain::Rock,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Terrain> {
        Terrain::ALL.get(index).copied()
    }

    /// Lowercase identifier used in label and sample files.
    pub fn name(self) -> &'static str {
        match self {
            Terrain::Loose => "loose",
            Terrain::Compressed => "compressed",
            Terrain::Pebbles => "pebbles",
            Terrain::Rock => "rock",
        }
    }

    /// Capitalized name used in rendered tables.
    pub fn title(self) -> &'static str {
        match self {
            Terrain::Loose => "Loose",
            Terrain::Compressed => "Compressed",
            Terrain::Pebbles => "Pebbles",
            Terrain::Rock => "Rock",
        }
    }
}

impl fmt::Display for Terrain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Terrain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loose" => Ok(Terrain::Loose),
            "compressed" => Ok(Terrain::Compressed),
            "pebbles" => Ok(Terrain::Pebbles),
            "rock" => Ok(Terrain::Rock),
            other => Err(Error::Schema(format!("unknown terrain '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorKind {
    Fts,
    Imu,
}

pub const FTS_CHANNELS: [&str; 6] = ["fx", "fy", "fz", "tx", "ty", "tz"];
pub const IMU_CHANNELS: [&str; 3] = ["ax", "ay", "az"];

impl SensorKind {
    pub fn channels(self) -> &'static [&'static str] {
        match self {
            SensorKind::Fts => &FTS_CHANNELS,
            SensorKind::Imu => &IMU_CHANNELS,
        }
    }
}

/// Mounting position. Wheel positions are front/centre/back, left/right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Position {
    FL,
    FR,
    CL,
    CR,
    BL,
    BR,
    Chassis,
}

impl Position {
    pub const WHEELS: [Position; 6] = [
        Position::FL,
        Position::FR,
        Position::CL,
        Position::CR,
        Position::BL,
        Position::BR,
    ];

    pub fn is_wheel(self) -> bool {
        self != Position::Chassis
    }

    pub fn is_right(self) -> bool {
        matches!(self, Position::FR | Position::CR | Position::BR)
    }

    pub fn name(self) -> &'static str {
        match self {
            Position::FL => "fl",
            Position::FR => "fr",
            Position::CL => "cl",
            Position::CR => "cr",
            Position::BL => "bl",
            Position::BR => "br",
            Position::Chassis => "chassis",
        }
    }

    /// Uppercase column label, as in retention tables.
    pub fn label(self) -> &'static str {
        match self {
            Position::FL => "FL",
            Position::FR => "FR",
            Position::CL => "CL",
            Position::CR => "CR",
            Position::BL => "BL",
            Position::BR => "BR",
            Position::Chassis => "CHASSIS",
        }
    }
}

/// A physical sensor. IMUs live on the chassis, force-torque sensors on a leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SensorId {
    kind: SensorKind,
    position: Position,
}

impl SensorId {
    pub fn new(kind: SensorKind, position: Position) -> Result<Self> {
        match (kind, position.is_wheel()) {
            (SensorKind::Imu, false) | (SensorKind::Fts, true) => Ok(SensorId { kind, position }),
            (SensorKind::Imu, true) => Err(Error::Schema(format!(
                "IMU must be mounted on the chassis, not {}",
                position.label()
            ))),
            (SensorKind::Fts, false) => {
                Err(Error::Schema("force-torque sensor needs a wheel position".into()))
            }
        }
    }

    pub fn fts(position: Position) -> Result<Self> {
        SensorId::new(SensorKind::Fts, position)
    }

    pub fn imu() -> Self {
        SensorId {
            kind: SensorKind::Imu,
            position: Position::Chassis,
        }
    }

    pub fn kind(&self) -> SensorKind {
        self.kind
    }

    pub fn position(&self) -> Position {
        self.position
    }

    /// Feature prefix and file stem: `fts_fl`, ..., `imu`.
    pub fn name(&self) -> String {
        match self.kind {
            SensorKind::Imu => "imu".to_string(),
            SensorKind::Fts => format!("fts_{}", self.position.name()),
        }
    }
}

impl fmt::Display for SensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for SensorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "imu" {
            return Ok(SensorId::imu());
        }
        let pos = s
            .strip_prefix("fts_")
            .and_then(|p| Position::WHEELS.iter().find(|w| w.name() == p))
            .ok_or_else(|| Error::Schema(format!("unknown sensor '{s}'")))?;
        SensorId::fts(*pos)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    Raw,
    Rover,
}

/// Timestamped samples of one sensor. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryStream {
    sensor: SensorId,
    timestamps: Vec<f64>,
    /// One series per channel, in [`SensorKind::channels`] order.
    channels: Vec<Vec<f64>>,
    frame: Frame,
}

impl TelemetryStream {
    pub fn new(
        sensor: SensorId,
        timestamps: Vec<f64>,
        channels: Vec<Vec<f64>>,
        frame: Frame,
    ) -> Result<Self> {
        let expected = sensor.kind().channels().len();
        if channels.len() != expected {
            return Err(Error::Schema(format!(
                "{sensor} expects {expected} channels, got {}",
                channels.len()
            )));
        }
        for (name, series) in sensor.kind().channels().iter().zip(&channels) {
            if series.len() != timestamps.len() {
                return Err(Error::Shape {
                    expected: timestamps.len(),
                    actual: series.len(),
                });
            }
            if let Some(row) = series.iter().position(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    row: row + 1,
                    line: row + 2,
                    message: format!("non-finite value in column {name}"),
                });
            }
        }
        if let Some(row) = timestamps.iter().position(|t| !t.is_finite()) {
            return Err(Error::Parse {
                row: row + 1,
                line: row + 2,
                message: "non-finite timestamp".into(),
            });
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Ordering {
                row: i + 2,
                prev: timestamps[i],
                next: timestamps[i + 1],
            });
        }
        Ok(TelemetryStream {
            sensor,
            timestamps,
            channels,
            frame,
        })
    }

    pub fn sensor(&self) -> SensorId {
        self.sensor
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn channel_names(&self) -> &'static [&'static str] {
        self.sensor.kind().channels()
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channel_names()
            .iter()
            .position(|c| *c == name)
            .map(|i| self.channels[i].as_slice())
    }

    /// First and last timestamp, if any.
    pub fn span(&self) -> Option<(f64, f64)> {
        Some((*self.timestamps.first()?, *self.timestamps.last()?))
    }
}

/// Applies the 180° rotation about z to a force-torque stream: x and y
/// components of force and torque change sign. Its own inverse. Does not touch
/// the frame flag; see [`normalize_frame`].
pub fn rotate_z_180(stream: &TelemetryStream) -> TelemetryStream {
    let mut out = stream.clone();
    if stream.sensor.kind() == SensorKind::Fts {
        for name in ["fx", "fy", "tx", "ty"] {
            let idx = FTS_CHANNELS.iter().position(|c| *c == name).unwrap();
            for v in &mut out.channels[idx] {
                *v = -*v;
            }
        }
    }
    out
}

/// Brings a raw stream into the rover frame. Right-side force-torque sensors
/// are rotated back; left-side sensors and the IMU already match the rover
/// frame.
pub fn normalize_frame(stream: TelemetryStream) -> Result<TelemetryStream> {
    if stream.frame == Frame::Rover {
        return Err(Error::Frame(format!(
            "{} is already in the rover frame",
            stream.sensor
        )));
    }
    let mut out = if stream.sensor.kind() == SensorKind::Fts && stream.sensor.position().is_right() {
        rotate_z_180(&stream)
    } else {
        stream
    };
    out.frame = Frame::Rover;
    Ok(out)
}

/// Reads a canonical sensor CSV into a raw-frame stream.
pub fn read_stream<R: Read>(reader: R, sensor: SensorId) -> Result<TelemetryStream> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let channels = sensor.kind().channels();
    let header = rdr.headers().map_err(csv_error)?.clone();
    let names: Vec<&str> = header.iter().collect();
    if let Some(unknown) = names
        .iter()
        .find(|n| **n != "t" && !channels.contains(n))
    {
        return Err(Error::Schema(format!("unknown column '{unknown}' for {sensor}")));
    }
    let expected: Vec<&str> = std::iter::once("t").chain(channels.iter().copied()).collect();
    if names != expected {
        return Err(Error::Schema(format!(
            "header for {sensor} must be '{}', got '{}'",
            expected.join(","),
            names.join(",")
        )));
    }

    let mut timestamps = Vec::new();
    let mut series = vec![Vec::new(); channels.len()];
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let row = i + 1;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(row + 1);
        for (col, field) in record.iter().enumerate() {
            let value = parse_finite(field, expected[col], row, line)?;
            if col == 0 {
                if let Some(&prev) = timestamps.last() {
                    if value < prev {
                        return Err(Error::Ordering {
                            row,
                            prev,
                            next: value,
                        });
                    }
                }
                timestamps.push(value);
            } else {
                series[col - 1].push(value);
            }
        }
    }
    TelemetryStream::new(sensor, timestamps, series, Frame::Raw)
}

/// Reads a canonical sensor CSV from disk, in the raw sensor frame.
pub fn ingest_csv(path: impl AsRef<Path>, sensor: SensorId) -> Result<TelemetryStream> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_stream(BufReader::new(file), sensor)
}

/// [`ingest_csv`] followed by [`normalize_frame`]: what every consumer uses.
pub fn load_stream(path: impl AsRef<Path>, sensor: SensorId) -> Result<TelemetryStream> {
    normalize_frame(ingest_csv(path, sensor)?)
}

/// Writes a stream in the canonical CSV format. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_stream<W: Write>(stream: &TelemetryStream, mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,{}", stream.channel_names().join(","))?;
    let mut line = String::new();
    for (i, t) in stream.timestamps.iter().enumerate() {
        line.clear();
        line.push_str(&t.to_string());
        for series in &stream.channels {
            line.push(',');
            line.push_str(&series[i].to_string());
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

fn parse_finite(field: &str, column: &str, row: usize, line: usize) -> Result<f64> {
    let value: f64 = field.parse().map_err(|_| Error::Parse {
        row,
        line,
        message: format!("invalid number '{field}' in column {column}"),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            row,
            line,
            message: format!("non-finite value '{field}' in column {column}"),
        });
    }
    Ok(value)
}

fn csv_error(e: csv::Error) -> Error {
    let (row, line) = e
        .position()
        .map(|p| (p.record() as usize, p.line() as usize))
        .unwrap_or((0, 0));
    Error::Parse {
        row,
        line,
        message: e.to_string(),
    }
}

/// A labelled time span `[t_start, t_end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelInterval {
    pub t_start: f64,
    pub t_end: f64,
    pub terrain: Terrain,
}

/// Non-overlapping terrain annotations of a traverse, sorted by start time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelTrack {
    intervals: Vec<LabelInterval>,
}

impl LabelTrack {
    pub fn new(mut intervals: Vec<LabelInterval>) -> Result<Self> {
        for iv in &intervals {
            if !(iv.t_start.is_finite() && iv.t_end.is_finite()) || iv.t_start >= iv.t_end {
                return Err(Error::Schema(format!(
                    "label interval [{}, {}) is empty or not finite",
                    iv.t_start, iv.t_end
                )));
            }
        }
        intervals.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
        if let Some(w) = intervals.windows(2).find(|w| w[1].t_start < w[0].t_end) {
            return Err(Error::Schema(format!(
                "label intervals [{}, {}) and [{}, {}) overlap",
                w[0].t_start, w[0].t_end, w[1].t_start, w[1].t_end
            )));
        }
        Ok(LabelTrack { intervals })
    }

    pub fn intervals(&self) -> &[LabelInterval] {
        &self.intervals
    }

    /// Terrain at time `t`. Intervals are half-open so adjacent intervals
    /// never both claim their shared boundary.
    pub fn label_at(&self, t: f64) -> Option<Terrain> {
        let idx = self.intervals.partition_point(|iv| iv.t_start <= t);
        let iv = self.intervals.get(idx.checked_sub(1)?)?;
        (t < iv.t_end).then_some(iv.terrain)
    }

    /// Terrain of the window `[start, end)`, only if the whole window lies
    /// inside a single interval.
    pub fn label_window(&self, start: f64, end: f64) -> Option<Terrain> {
        let idx = self.intervals.partition_point(|iv| iv.t_start <= start);
        let iv = self.intervals.get(idx.checked_sub(1)?)?;
        (end <= iv.t_end).then_some(iv.terrain)
    }
}

pub fn read_labels<R: Read>(reader: R) -> Result<LabelTrack> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(csv_error)?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names != ["t_start", "t_end", "terrain"] {
        return Err(Error::Schema(format!(
            "label header must be 't_start,t_end,terrain', got '{}'",
            names.join(",")
        )));
    }
    let mut intervals = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let row = i + 1;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(row + 1);
        let t_start = parse_finite(&record[0], "t_start", row, line)?;
        let t_end = parse_finite(&record[1], "t_end", row, line)?;
        let terrain = record[2].parse().map_err(|_| Error::Parse {
            row,
            line,
            message: format!("unknown terrain '{}'", &record[2]),
        })?;
        intervals.push(LabelInterval {
            t_start,
            t_end,
            terrain,
        });
    }
    LabelTrack::new(intervals)
}

pub fn ingest_labels(path: impl AsRef<Path>) -> Result<LabelTrack> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_labels(BufReader::new(file))
}

pub fn write_labels<W: Write>(track: &LabelTrack, mut w: W) -> std::io::Result<()> {
    writeln!(w, "t_start,t_end,terrain")?;
    for iv in &track.intervals {
        writeln!(w, "{},{},{}", iv.t_start, iv.t_end, iv.terrain)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fts(pos: Position) -> SensorId {
        SensorId::fts(pos).unwrap()
    }

    fn stream(pos: Position, fx: Vec<f64>) -> TelemetryStream {
        let n = fx.len();
        let t = (0..n).map(|i| i as f64 * 0.01).collect();
        let mut ch = vec![fx];
        for k in 1..6 {
            ch.push((0..n).map(|i| (i + k) as f64).collect());
        }
        TelemetryStream::new(fts(pos), t, ch, Frame::Raw).unwrap()
    }

    #[test]
    fn sensor_invariants() {
        assert!(SensorId::new(SensorKind::Imu, Position::FL).is_err());
        assert!(SensorId::new(SensorKind::Fts, Position::Chassis).is_err());
        assert_eq!("fts_cr".parse::<SensorId>().unwrap(), fts(Position::CR));
        assert_eq!("imu".parse::<SensorId>().unwrap(), SensorId::imu());
        assert!("fts_xx".parse::<SensorId>().is_err());
    }

    #[test]
    fn ingest_constant_file() {
        let csv = "t,fx,fy,fz,tx,ty,tz\n0,1,2,3,4,5,6\n0.01,1,2,3,4,5,6\n0.02,1,2,3,4,5,6\n";
        let s = read_stream(csv.as_bytes(), fts(Position::FL)).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.frame(), Frame::Raw);
        assert_eq!(s.channel("fz").unwrap(), &[3.0, 3.0, 3.0]);
        assert_eq!(s.channel("tz").unwrap(), &[6.0, 6.0, 6.0]);
    }

    #[test]
    fn ingest_rejects_reversed_timestamps() {
        let csv = "t,ax,ay,az\n2,0,0,0\n1,0,0,0\n0,0,0,0\n";
        let err = read_stream(csv.as_bytes(), SensorId::imu()).unwrap_err();
        assert!(matches!(err, Error::Ordering { row: 2, .. }), "{err}");
    }

    #[test]
    fn ingest_rejects_nan_with_row() {
        let mut csv = String::from("t,fx,fy,fz,tx,ty,tz\n");
        for i in 1..=9 {
            let fz = if i == 7 { "NaN".to_string() } else { "1".to_string() };
            csv.push_str(&format!("{i},0,0,{fz},0,0,0\n"));
        }
        let err = read_stream(csv.as_bytes(), fts(Position::FL)).unwrap_err();
        match err {
            Error::Parse { row, line, ref message } => {
                assert_eq!(row, 7);
                assert_eq!(line, 8);
                assert!(message.contains("fz"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn ingest_rejects_unknown_column_and_malformed_row() {
        let csv = "t,fx,fy,fz,tx,ty,qq\n0,0,0,0,0,0,0\n";
        assert!(matches!(
            read_stream(csv.as_bytes(), fts(Position::FL)),
            Err(Error::Schema(_))
        ));
        let csv = "t,ax,ay,az\n0,0,0,0\n1,0,0\n";
        assert!(matches!(
            read_stream(csv.as_bytes(), SensorId::imu()),
            Err(Error::Parse { .. })
        ));
        let csv = "t,ax,ay,az\n0,0,abc,0\n";
        assert!(matches!(
            read_stream(csv.as_bytes(), SensorId::imu()),
            Err(Error::Parse { row: 1, .. })
        ));
    }

    #[test]
    fn right_side_flip() {
        let s = normalize_frame(stream(Position::FR, vec![1.0, 2.0])).unwrap();
        assert_eq!(s.frame(), Frame::Rover);
        assert_eq!(s.channel("fx").unwrap(), &[-1.0, -2.0]);
        assert_eq!(s.channel("fy").unwrap(), &[-1.0, -2.0]);
        assert_eq!(s.channel("fz").unwrap(), &[2.0, 3.0]);
        assert_eq!(s.channel("tx").unwrap(), &[-3.0, -4.0]);
        assert_eq!(s.channel("ty").unwrap(), &[-4.0, -5.0]);
        assert_eq!(s.channel("tz").unwrap(), &[5.0, 6.0]);
    }

    #[test]
    fn flip_matches_rotation_matrix() {
        // R_z(pi) applied to (fx, fy, fz)
        let (c, s) = (std::f64::consts::PI.cos(), std::f64::consts::PI.sin());
        let f = [1.5, -0.25, 5.0];
        let rotated = [c * f[0] - s * f[1], s * f[0] + c * f[1], f[2]];
        let mut raw = stream(Position::CR, vec![f[0]]);
        raw.channels[1][0] = f[1];
        raw.channels[2][0] = f[2];
        let out = normalize_frame(raw).unwrap();
        for (k, expected) in rotated.iter().enumerate() {
            assert!((out.channels()[k][0] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn left_side_and_imu_unchanged() {
        let raw = stream(Position::FL, vec![1.0, -3.0]);
        let out = normalize_frame(raw.clone()).unwrap();
        assert_eq!(out.channels(), raw.channels());

        let imu = TelemetryStream::new(
            SensorId::imu(),
            vec![0.0],
            vec![vec![1.0], vec![2.0], vec![3.0]],
            Frame::Raw,
        )
        .unwrap();
        let out = normalize_frame(imu.clone()).unwrap();
        assert_eq!(out.channels(), imu.channels());
    }

    #[test]
    fn double_normalization_is_an_error() {
        let once = normalize_frame(stream(Position::BR, vec![1.0])).unwrap();
        assert!(matches!(normalize_frame(once), Err(Error::Frame(_))));
    }

    #[test]
    fn labels() {
        let track = LabelTrack::new(vec![
            LabelInterval { t_start: 10.0, t_end: 20.0, terrain: Terrain::Loose },
            LabelInterval { t_start: 0.0, t_end: 10.0, terrain: Terrain::Rock },
        ])
        .unwrap();
        assert_eq!(track.label_at(5.0), Some(Terrain::Rock));
        assert_eq!(track.label_at(10.0), Some(Terrain::Loose));
        assert_eq!(track.label_at(20.0), None);
        assert_eq!(track.label_at(-1.0), None);
        assert_eq!(track.label_window(9.5, 10.5), None);
        assert_eq!(track.label_window(9.0, 10.0), Some(Terrain::Rock));

        let single = LabelTrack::new(vec![LabelInterval {
            t_start: 0.0,
            t_end: 10.0,
            terrain: Terrain::Rock,
        }])
        .unwrap();
        assert_eq!(single.label_at(12.0), None);
    }

    #[test]
    fn overlapping_labels_rejected() {
        let err = LabelTrack::new(vec![
            LabelInterval { t_start: 0.0, t_end: 10.0, terrain: Terrain::Rock },
            LabelInterval { t_start: 9.0, t_end: 12.0, terrain: Terrain::Loose },
        ]);
        assert!(err.is_err());
        assert!(LabelTrack::new(vec![LabelInterval {
            t_start: 3.0,
            t_end: 3.0,
            terrain: Terrain::Rock
        }])
        .is_err());
    }

    #[test]
    fn label_csv() {
        let text = "t_start,t_end,terrain\n0,60,loose\n60,120,rock\n";
        let track = read_labels(text.as_bytes()).unwrap();
        assert_eq!(track.intervals().len(), 2);
        let mut out = Vec::new();
        write_labels(&track, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
        assert!(read_labels("t_start,t_end,terrain\n0,1,Loose\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn rotation_is_an_involution(fx in prop::collection::vec(-1e3f64..1e3, 1..20)) {
            let raw = stream(Position::FR, fx);
            let back = rotate_z_180(&rotate_z_180(&raw));
            for (a, b) in raw.channels().iter().zip(back.channels()) {
                for (x, y) in a.iter().zip(b) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn csv_round_trip_is_bit_exact(
            rows in prop::collection::vec(prop::array::uniform6(-1e6f64..1e6), 1..30),
            dt in prop::collection::vec(0.0f64..1.0, 30),
        ) {
            let mut t = Vec::new();
            let mut acc = 0.0;
            for d in dt.iter().take(rows.len()) {
                acc += d;
                t.push(acc);
            }
            let ch = (0..6).map(|k| rows.iter().map(|r| r[k]).collect()).collect();
            let s = TelemetryStream::new(fts(Position::CL), t, ch, Frame::Raw).unwrap();
            let mut buf = Vec::new();
            write_stream(&s, &mut buf).unwrap();
            let back = read_stream(buf.as_slice(), fts(Position::CL)).unwrap();
            prop_assert_eq!(back.timestamps(), s.timestamps());
            for (a, b) in back.channels().iter().zip(s.channels()) {
                for (x, y) in a.iter().zip(b) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }

        #[test]
        fn labels_never_overlap(
            cuts in prop::collection::btree_set(0u32..1000, 2..12),
            t in 0.0f64..1000.0,
        ) {
            let cuts: Vec<f64> = cuts.into_iter().map(f64::from).collect();
            let intervals: Vec<_> = cuts
                .windows(2)
                .enumerate()
                .map(|(i, w)| LabelInterval { t_start: w[0], t_end: w[1], terrain: Terrain::ALL[i % 4] })
                .collect();
            let track = LabelTrack::new(intervals.clone()).unwrap();
            let hits = intervals.iter().filter(|iv| iv.t_start <= t && t < iv.t_end).count();
            prop_assert!(hits <= 1);
            prop_assert_eq!(track.label_at(t).is_some(), hits == 1);
        }
    }
}
