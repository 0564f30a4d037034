//! Fixed-length windowing of unsynchronized streams into feature vectors.
//!
//! Each window yields five statistics (max, mean, median, min, std) for every
//! channel of every selected sensor. Feature names follow
//! `<sensor>_<channel>_<stat>` (`fts_fl_fx_mean`, `imu_az_std`) and are sorted
//! lexicographically, so the layout does not depend on the order streams were
//! passed in.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::telemetry::{Frame, LabelTrack, SensorId, SensorKind, Terrain, TelemetryStream};

/// Divisor magnitude below which the force/torque ratio is clamped [N·m].
pub const RATIO_EPS: f64 = 1e-6;
/// Magnitude of the clamped force/torque ratio.
pub const RATIO_CLAMP: f64 = 1e6;
/// Channel name of the derived `fx / tz` series.
pub const RATIO_CHANNEL: &str = "fx_over_tz";

pub const STAT_NAMES: [&str; 5] = ["mean", "median", "min", "max", "std"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub length: f64,
    pub stride: f64,
}

impl WindowSpec {
    pub fn new(length: f64, stride: f64) -> Result<Self> {
        let spec = WindowSpec { length, stride };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::Config(format!("window length must be > 0, got {}", self.length)));
        }
        if !(self.stride > 0.0 && self.stride.is_finite()) {
            return Err(Error::Config(format!("window stride must be > 0, got {}", self.stride)));
        }
        Ok(())
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            length: 1.0,
            stride: 1.0,
        }
    }
}

/// Which sensors contribute features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub use_imu: bool,
    pub use_fts: bool,
    pub include_fx_over_tz: bool,
}

impl FeatureSelection {
    pub const IMU: FeatureSelection = FeatureSelection {
        use_imu: true,
        use_fts: false,
        include_fx_over_tz: false,
    };
    pub const FTS: FeatureSelection = FeatureSelection {
        use_imu: false,
        use_fts: true,
        include_fx_over_tz: true,
    };
    pub const ALL: FeatureSelection = FeatureSelection {
        use_imu: true,
        use_fts: true,
        include_fx_over_tz: true,
    };

    pub fn validate(&self) -> Result<()> {
        if !self.use_imu && !self.use_fts {
            return Err(Error::Config("feature selection uses no sensor".into()));
        }
        Ok(())
    }

    fn accepts(&self, sensor: SensorId) -> bool {
        match sensor.kind() {
            SensorKind::Imu => self.use_imu,
            SensorKind::Fts => self.use_fts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl WindowStats {
    fn get(&self, stat: usize) -> f64 {
        match stat {
            0 => self.mean,
            1 => self.median,
            2 => self.min,
            3 => self.max,
            _ => self.std,
        }
    }
}

/// Mean, median, min, max and population standard deviation of a window.
pub fn window_statistics(values: &[f64]) -> Result<WindowStats> {
    if values.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let n = values.len();
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if min == max {
        return Ok(WindowStats {
            mean: min,
            median: min,
            min,
            max,
            std: 0.0,
        });
    }

    let mean = (values.iter().sum::<f64>() / n as f64).clamp(min, max);
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;

    let mut buf = values.to_vec();
    let mid = n / 2;
    let (lower, upper, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    let median = if n % 2 == 1 {
        upper
    } else {
        let below = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        below + (upper - below) / 2.0
    };

    Ok(WindowStats {
        mean,
        median,
        min,
        max,
        std: var.sqrt(),
    })
}

/// `fx / tz`, kept finite: when `|tz| < RATIO_EPS` the result is the clamp
/// value carrying the sign of the quotient, and `0` for a zero numerator.
pub fn derived_fx_over_tz(fx: f64, tz: f64) -> f64 {
    if tz.abs() >= RATIO_EPS {
        fx / tz
    } else if fx == 0.0 {
        0.0
    } else {
        fx.signum() * tz.signum() * RATIO_CLAMP
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub t_start: f64,
    /// Values in the order of [`SampleSet::feature_names`].
    pub features: Vec<f64>,
    pub label: Option<Terrain>,
}

/// Samples sharing one feature layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub feature_names: Vec<String>,
    pub samples: Vec<WindowSample>,
    /// Number of raw points whose `fx / tz` ratio hit the clamp.
    pub clamped_points: usize,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Keeps only the features whose name starts with one of `prefixes`.
    pub fn select_features(&self, prefixes: &[&str]) -> Result<SampleSet> {
        let keep: Vec<usize> = self
            .feature_names
            .iter()
            .enumerate()
            .filter(|(_, n)| prefixes.iter().any(|p| n.starts_with(p)))
            .map(|(i, _)| i)
            .collect();
        if keep.is_empty() {
            return Err(Error::Schema(format!(
                "no feature matches prefixes {prefixes:?}"
            )));
        }
        Ok(SampleSet {
            feature_names: keep.iter().map(|&i| self.feature_names[i].clone()).collect(),
            samples: self
                .samples
                .iter()
                .map(|s| WindowSample {
                    t_start: s.t_start,
                    features: keep.iter().map(|&i| s.features[i]).collect(),
                    label: s.label,
                })
                .collect(),
            clamped_points: self.clamped_points,
        })
    }

    /// Feature rows and class indices of the labelled samples.
    pub fn labeled(&self) -> (Vec<Vec<f64>>, Vec<usize>) {
        self.samples
            .iter()
            .filter_map(|s| s.label.map(|l| (s.features.clone(), l.index())))
            .unzip()
    }
}

struct ChannelRef<'a> {
    stream: usize,
    values: std::borrow::Cow<'a, [f64]>,
}

/// Cuts the selected streams into windows over their common time span and
/// computes per-channel statistics.
///
/// A window `[t, t + length)` is emitted only when every selected stream has
/// at least one point in it. Labels come from [`LabelTrack::label_window`].
pub fn build_samples(
    streams: &[TelemetryStream],
    labels: Option<&LabelTrack>,
    spec: &WindowSpec,
    selection: &FeatureSelection,
) -> Result<SampleSet> {
    spec.validate()?;
    selection.validate()?;

    let mut selected: Vec<&TelemetryStream> = streams
        .iter()
        .filter(|s| selection.accepts(s.sensor()))
        .collect();
    selected.sort_by_key(|s| s.sensor());
    if let Some(w) = selected.windows(2).find(|w| w[0].sensor() == w[1].sensor()) {
        return Err(Error::Schema(format!("duplicate stream for {}", w[0].sensor())));
    }
    if selection.use_imu && !selected.iter().any(|s| s.sensor().kind() == SensorKind::Imu) {
        return Err(Error::Schema("IMU features selected but no IMU stream given".into()));
    }
    if selection.use_fts && !selected.iter().any(|s| s.sensor().kind() == SensorKind::Fts) {
        return Err(Error::Schema("FTS features selected but no FTS stream given".into()));
    }
    if let Some(s) = selected.iter().find(|s| s.frame() != Frame::Rover) {
        return Err(Error::Frame(format!("{} has not been normalized", s.sensor())));
    }

    let mut start = f64::NEG_INFINITY;
    let mut end = f64::INFINITY;
    for s in &selected {
        let (a, b) = s
            .span()
            .ok_or_else(|| Error::Alignment(format!("{} is empty", s.sensor())))?;
        start = start.max(a);
        end = end.min(b);
    }
    if start >= end {
        return Err(Error::Alignment("streams share no common time span".into()));
    }
    if end - start < spec.length {
        return Err(Error::Alignment(format!(
            "common time span {:.3} s is shorter than one window",
            end - start
        )));
    }

    // Flatten every (sensor, channel) pair, computing the derived ratio.
    let mut channels = Vec::new();
    let mut raw_names = Vec::new();
    let mut clamped_points = 0;
    for (si, s) in selected.iter().enumerate() {
        let prefix = s.sensor().name();
        for (name, values) in s.channel_names().iter().zip(s.channels()) {
            channels.push(ChannelRef {
                stream: si,
                values: std::borrow::Cow::Borrowed(values.as_slice()),
            });
            raw_names.push(format!("{prefix}_{name}"));
        }
        if s.sensor().kind() == SensorKind::Fts && selection.include_fx_over_tz {
            let fx = s.channel("fx").unwrap();
            let tz = s.channel("tz").unwrap();
            clamped_points += tz.iter().filter(|v| v.abs() < RATIO_EPS).count();
            let ratio = fx.iter().zip(tz).map(|(&f, &t)| derived_fx_over_tz(f, t)).collect();
            channels.push(ChannelRef {
                stream: si,
                values: std::borrow::Cow::Owned(ratio),
            });
            raw_names.push(format!("{prefix}_{RATIO_CHANNEL}"));
        }
    }

    let mut columns: Vec<(String, usize, usize)> = raw_names
        .iter()
        .enumerate()
        .flat_map(|(ci, base)| {
            STAT_NAMES
                .iter()
                .enumerate()
                .map(move |(k, stat)| (format!("{base}_{stat}"), ci, k))
        })
        .collect();
    columns.sort_by(|a, b| a.0.cmp(&b.0));

    let count = ((end - start - spec.length) / spec.stride + 1e-9).floor() as usize + 1;
    let samples: Vec<WindowSample> = (0..count)
        .into_par_iter()
        .map(|k| -> Result<Option<WindowSample>> {
            let ws = start + k as f64 * spec.stride;
            let we = ws + spec.length;
            let mut ranges = Vec::with_capacity(selected.len());
            for s in &selected {
                let t = s.timestamps();
                let lo = t.partition_point(|&x| x < ws);
                let hi = t.partition_point(|&x| x < we);
                if lo == hi {
                    return Ok(None);
                }
                ranges.push((lo, hi));
            }
            let stats = channels
                .iter()
                .map(|c| {
                    let (lo, hi) = ranges[c.stream];
                    window_statistics(&c.values[lo..hi])
                })
                .collect::<Result<Vec<_>>>()?;
            let features = columns.iter().map(|(_, ci, k)| stats[*ci].get(*k)).collect();
            Ok(Some(WindowSample {
                t_start: ws,
                features,
                label: labels.and_then(|l| l.label_window(ws, we)),
            }))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    Ok(SampleSet {
        feature_names: columns.into_iter().map(|c| c.0).collect(),
        samples,
        clamped_points,
    })
}

/// Writes `t_start,label,<features...>`; unlabelled windows get an empty label.
pub fn write_samples<W: Write>(set: &SampleSet, mut w: W) -> std::io::Result<()> {
    writeln!(w, "t_start,label,{}", set.feature_names.join(","))?;
    let mut line = String::new();
    for s in &set.samples {
        line.clear();
        line.push_str(&s.t_start.to_string());
        line.push(',');
        if let Some(l) = s.label {
            line.push_str(l.name());
        }
        for v in &s.features {
            line.push(',');
            line.push_str(&v.to_string());
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_samples<R: Read>(reader: R) -> Result<SampleSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse { row: 0, line: 1, message: e.to_string() })?
        .clone();
    if header.len() < 3 || &header[0] != "t_start" || &header[1] != "label" {
        return Err(Error::Schema(
            "sample header must start with 't_start,label' and name at least one feature".into(),
        ));
    }
    let feature_names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
    let mut samples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            line: row + 1,
            message: e.to_string(),
        })?;
        let parse = |field: &str| -> Result<f64> {
            field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row,
                    line: row + 1,
                    message: format!("invalid value '{field}'"),
                })
        };
        let label = match &record[1] {
            "" => None,
            name => Some(name.parse::<Terrain>().map_err(|_| Error::Parse {
                row,
                line: row + 1,
                message: format!("unknown terrain '{name}'"),
            })?),
        };
        let features = record.iter().skip(2).map(parse).collect::<Result<Vec<_>>>()?;
        samples.push(WindowSample {
            t_start: parse(&record[0])?,
            features,
            label,
        });
    }
    Ok(SampleSet {
        feature_names,
        samples,
        clamped_points: 0,
    })
}

pub fn load_samples(path: impl AsRef<Path>) -> Result<SampleSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_samples(BufReader::new(file))
}
