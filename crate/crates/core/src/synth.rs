//! Seeded synthetic telemetry with known terrain labels and lever lengths.
//!
//! Each terrain profile sets Gaussian baselines for every force, torque and
//! acceleration channel, plus Poisson-timed half-sine impacts for the rough
//! terrains. The longitudinal torque is built as `tau_y = F_x * L_true + noise`
//! so the lever filter has a known answer. Streams are sampled at their own
//! rates with random phase offsets and emitted in the raw sensor frame.
//!
//! The default profiles separate all four classes on force-torque statistics
//! but give compressed soil and pebbles the same chassis vibration, so IMU-only
//! features cannot tell those two apart.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drawbar::{LeverPoint, LeverSeries, EPS_FORCE};
use crate::error::{Error, Result};
use crate::telemetry::{
    write_labels, write_stream, Frame, LabelInterval, LabelTrack, Position, SensorId, Terrain, TelemetryStream,
};
use crate::windows::SampleSet;

/// Speed at which the profiles' impact rates are specified [m/s].
pub const REFERENCE_SPEED: f64 = 0.03;
/// Standard gravity, the resting `a_z` of the chassis IMU [m/s^2].
pub const GRAVITY: f64 = 9.81;

/// Baseline value and Gaussian spread of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub mean: f64,
    pub sigma: f64,
}

const fn level(mean: f64, sigma: f64) -> Level {
    Level { mean, sigma }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerrainProfile {
    pub terrain: Terrain,
    pub fx: Level,
    pub fy: Level,
    pub fz: Level,
    pub tx: Level,
    /// Noise added on top of `F_x * lever` [N m].
    pub ty_sigma: f64,
    pub tz: Level,
    /// True lever length [m].
    pub lever: f64,
    /// Per-axis chassis vibration [m/s^2].
    pub imu_sigma: [f64; 3],
    /// Impacts per second at [`REFERENCE_SPEED`].
    pub impact_rate: f64,
    /// Peak vertical force of an impact [N]; each impact scales it by U(0.5, 1).
    pub impact_amplitude: f64,
    pub impact_duration: f64,
    /// Share of the impact force that also acts along x.
    pub impact_fx_share: f64,
    /// Chassis acceleration per newton of impact force [m/s^2 / N].
    pub impact_imu_gain: f64,
}

impl TerrainProfile {
    pub fn default_for(terrain: Terrain) -> TerrainProfile {
        let quiet = TerrainProfile {
            terrain,
            fx: level(0.0, 0.0),
            fy: level(0.0, 0.5),
            fz: level(0.0, 1.0),
            tx: level(0.0, 0.05),
            ty_sigma: 0.02,
            tz: level(0.0, 0.05),
            lever: 0.14,
            imu_sigma: [0.0; 3],
            impact_rate: 0.0,
            impact_amplitude: 0.0,
            impact_duration: 0.08,
            impact_fx_share: 0.3,
            impact_imu_gain: 0.002,
        };
        match terrain {
            Terrain::Loose => TerrainProfile {
                fx: level(10.0, 1.0),
                fz: level(45.0, 1.0),
                tz: level(0.8, 0.05),
                lever: 0.165,
                imu_sigma: [0.04, 0.04, 0.06],
                ..quiet
            },
            Terrain::Compressed => TerrainProfile {
                fx: level(20.0, 1.0),
                fz: level(50.0, 1.0),
                tz: level(1.2, 0.05),
                lever: 0.14,
                imu_sigma: [0.07, 0.07, 0.10],
                ..quiet
            },
            Terrain::Pebbles => TerrainProfile {
                fx: level(15.0, 2.0),
                fy: level(0.0, 1.0),
                fz: level(50.0, 2.0),
                tx: level(0.0, 0.1),
                ty_sigma: 0.05,
                tz: level(1.0, 0.1),
                lever: 0.14,
                imu_sigma: [0.07, 0.07, 0.10],
                impact_rate: 1.0,
                impact_amplitude: 8.0,
                ..quiet
            },
            Terrain::Rock => TerrainProfile {
                fx: level(25.0, 3.0),
                fy: level(0.0, 2.0),
                fz: level(55.0, 3.0),
                tx: level(0.0, 0.2),
                ty_sigma: 0.1,
                tz: level(1.5, 0.2),
                lever: 0.13,
                imu_sigma: [0.2, 0.2, 0.3],
                impact_rate: 3.0,
                impact_amplitude: 30.0,
                ..quiet
            },
        }
    }

    pub fn defaults() -> Vec<TerrainProfile> {
        Terrain::ALL.iter().map(|&t| TerrainProfile::default_for(t)).collect()
    }

    /// Copy with every noise term and impact amplitude multiplied by `k`.
    pub fn scaled_noise(&self, k: f64) -> TerrainProfile {
        let s = |l: Level| level(l.mean, l.sigma * k);
        TerrainProfile {
            fx: s(self.fx),
            fy: s(self.fy),
            fz: s(self.fz),
            tx: s(self.tx),
            ty_sigma: self.ty_sigma * k,
            tz: s(self.tz),
            imu_sigma: self.imu_sigma.map(|v| v * k),
            impact_amplitude: self.impact_amplitude * k,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sigmas = [
            self.fx.sigma,
            self.fy.sigma,
            self.fz.sigma,
            self.tx.sigma,
            self.ty_sigma,
            self.tz.sigma,
            self.imu_sigma[0],
            self.imu_sigma[1],
            self.imu_sigma[2],
        ];
        let ok = sigmas.iter().all(|s| *s >= 0.0 && s.is_finite())
            && self.impact_rate >= 0.0
            && self.impact_amplitude >= 0.0
            && self.impact_duration > 0.0
            && self.lever >= 0.0;
        if !ok {
            return Err(Error::Config(format!("invalid profile for {}", self.terrain)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub terrain: Terrain,
    pub duration: f64,
    /// Overrides the scenario speed for this segment [m/s].
    #[serde(default)]
    pub speed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(rename = "segment")]
    pub segments: Vec<Segment>,
    #[serde(default = "default_fts_rate")]
    pub fts_rate: f64,
    #[serde(default = "default_imu_rate")]
    pub imu_rate: f64,
    #[serde(default = "default_speed")]
    pub speed: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_fts_rate() -> f64 {
    100.0
}
fn default_imu_rate() -> f64 {
    50.0
}
fn default_speed() -> f64 {
    REFERENCE_SPEED
}
fn default_seed() -> u64 {
    42
}

impl ScenarioSpec {
    /// One segment per terrain, in canonical order.
    pub fn four_class(seconds_per_class: f64, seed: u64) -> ScenarioSpec {
        ScenarioSpec {
            segments: Terrain::ALL
                .iter()
                .map(|&terrain| Segment {
                    terrain,
                    duration: seconds_per_class,
                    speed: None,
                })
                .collect(),
            fts_rate: default_fts_rate(),
            imu_rate: default_imu_rate(),
            speed: default_speed(),
            seed,
        }
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Config("scenario has no segments".into()));
        }
        if let Some(s) = self.segments.iter().find(|s| !(s.duration > 0.0 && s.duration.is_finite())) {
            return Err(Error::Config(format!("segment duration must be > 0, got {}", s.duration)));
        }
        let speeds = std::iter::once(self.speed).chain(self.segments.iter().filter_map(|s| s.speed));
        if speeds.into_iter().any(|v| !(v > 0.0)) {
            return Err(Error::Config("speeds must be > 0".into()));
        }
        if !(self.fts_rate > 0.0 && self.imu_rate > 0.0) {
            return Err(Error::Config("sensor rates must be > 0".into()));
        }
        Ok(())
    }
}

/// Scenario plus optional profile overrides, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    #[serde(flatten)]
    pub scenario: ScenarioSpec,
    /// Replaces the default profile of the same terrain.
    #[serde(default, rename = "profile")]
    pub profiles: Vec<TerrainProfile>,
}

impl SynthConfig {
    pub fn from_toml_str(text: &str) -> Result<SynthConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<SynthConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SynthConfig::from_toml_str(&text)
    }

    /// Default profiles with the overrides applied.
    pub fn resolved_profiles(&self) -> Vec<TerrainProfile> {
        let mut out = TerrainProfile::defaults();
        for p in &self.profiles {
            if let Some(slot) = out.iter_mut().find(|d| d.terrain == p.terrain) {
                *slot = *p;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    /// Six wheel force-torque streams then the IMU, all in the raw frame.
    pub streams: Vec<TelemetryStream>,
    pub labels: LabelTrack,
    /// Rover-frame lever series per wheel with the true lever length.
    pub levers: Vec<LeverSeries>,
}

impl SynthOutput {
    /// Writes `<sensor>.csv` per stream and `labels.csv` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for s in &self.streams {
            let path = dir.join(format!("{}.csv", s.sensor().name()));
            let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_stream(s, BufWriter::new(f)).map_err(|e| Error::io(&path, e))?;
        }
        let path = dir.join("labels.csv");
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_labels(&self.labels, BufWriter::new(f)).map_err(|e| Error::io(&path, e))
    }
}

struct Span<'a> {
    start: f64,
    end: f64,
    profile: &'a TerrainProfile,
    speed_factor: f64,
}

fn normal<R: Rng>(rng: &mut R, l: Level) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    l.mean + l.sigma * z
}

/// Half-sine impact force at each sample time.
fn impacts<R: Rng>(rng: &mut R, spans: &[Span], times: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; times.len()];
    for span in spans {
        let p = span.profile;
        let rate = p.impact_rate * span.speed_factor;
        if rate <= 0.0 || p.impact_amplitude <= 0.0 {
            continue;
        }
        let gap = Exp::new(rate).expect("positive rate");
        let mut t = span.start + gap.sample(rng);
        while t < span.end {
            let amp = p.impact_amplitude * rng.random_range(0.5..1.0);
            let end = (t + p.impact_duration).min(span.end);
            let first = times.partition_point(|&s| s < t);
            for (k, &s) in times.iter().enumerate().skip(first) {
                if s >= end {
                    break;
                }
                out[k] += amp * (std::f64::consts::PI * (s - t) / p.impact_duration).sin();
            }
            t += gap.sample(rng);
        }
    }
    out
}

fn sample_times(rate: f64, phase: f64, total: f64) -> Vec<f64> {
    (0..)
        .map(|i| phase + i as f64 / rate)
        .take_while(|&t| t < total)
        .collect()
}

fn span_index(spans: &[Span], t: f64) -> usize {
    spans.partition_point(|s| s.end <= t).min(spans.len() - 1)
}

fn fts_stream(
    wheel: Position,
    spans: &[Span],
    times: Vec<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<(TelemetryStream, LeverSeries)> {
    let hits = impacts(rng, spans, &times);
    let mut ch = (0..6).map(|_| Vec::with_capacity(times.len())).collect::<Vec<_>>();
    let mut truth = Vec::with_capacity(times.len());
    for (&t, &hit) in times.iter().zip(&hits) {
        let p = spans[span_index(spans, t)].profile;
        let fx = normal(rng, p.fx) + p.impact_fx_share * hit;
        let fy = normal(rng, p.fy);
        let fz = normal(rng, p.fz) + hit;
        let tx = normal(rng, p.tx);
        let ty = fx * p.lever + normal(rng, level(0.0, p.ty_sigma));
        let tz = normal(rng, p.tz);
        let defined = fx.abs() >= EPS_FORCE;
        truth.push(LeverPoint {
            t,
            fx,
            ty,
            lever: defined.then_some(p.lever),
            valid: defined,
        });
        let sign = if wheel.is_right() { -1.0 } else { 1.0 };
        for (c, v) in ch.iter_mut().zip([sign * fx, sign * fy, fz, sign * tx, sign * ty, tz]) {
            c.push(v);
        }
    }
    let stream = TelemetryStream::new(SensorId::fts(wheel)?, times, ch, Frame::Raw)?;
    Ok((stream, LeverSeries { wheel, points: truth }))
}

fn imu_stream(spans: &[Span], times: Vec<f64>, rng: &mut ChaCha8Rng) -> Result<TelemetryStream> {
    let hits = impacts(rng, spans, &times);
    let mut ch = (0..3).map(|_| Vec::with_capacity(times.len())).collect::<Vec<_>>();
    for (&t, &hit) in times.iter().zip(&hits) {
        let p = spans[span_index(spans, t)].profile;
        let jolt = hit * p.impact_imu_gain;
        let base = [0.0, 0.0, GRAVITY];
        for axis in 0..3 {
            let extra = if axis == 2 { jolt } else { 0.3 * jolt };
            ch[axis].push(normal(rng, level(base[axis], p.imu_sigma[axis])) + extra);
        }
    }
    TelemetryStream::new(SensorId::imu(), times, ch, Frame::Raw)
}

/// Generates one traverse. Identical inputs give bit-identical output.
pub fn generate(spec: &ScenarioSpec, profiles: &[TerrainProfile]) -> Result<SynthOutput> {
    spec.validate()?;
    let mut spans = Vec::with_capacity(spec.segments.len());
    let mut t = 0.0;
    for seg in &spec.segments {
        let profile = profiles
            .iter()
            .find(|p| p.terrain == seg.terrain)
            .ok_or_else(|| Error::Config(format!("no profile for terrain {}", seg.terrain)))?;
        profile.validate()?;
        spans.push(Span {
            start: t,
            end: t + seg.duration,
            profile,
            speed_factor: seg.speed.unwrap_or(spec.speed) / REFERENCE_SPEED,
        });
        t += seg.duration;
    }
    let total = t;
    let labels = LabelTrack::new(
        spans
            .iter()
            .map(|s| LabelInterval {
                t_start: s.start,
                t_end: s.end,
                terrain: s.profile.terrain,
            })
            .collect(),
    )?;

    // Stream 0 of the master seed draws the phases; stream k + 1 feeds sensor k.
    let mut master = ChaCha8Rng::seed_from_u64(spec.seed);
    let fts_phases: Vec<f64> = Position::WHEELS
        .iter()
        .map(|_| master.random_range(0.0..1.0) / spec.fts_rate)
        .collect();
    let imu_phase = master.random_range(0.0..1.0) / spec.imu_rate;
    let sensor_rng = |k: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(k as u64 + 1);
        rng
    };

    let wheels = Position::WHEELS
        .par_iter()
        .enumerate()
        .map(|(k, &wheel)| {
            let times = sample_times(spec.fts_rate, fts_phases[k], total);
            fts_stream(wheel, &spans, times, &mut sensor_rng(k))
        })
        .collect::<Result<Vec<_>>>()?;
    let imu = imu_stream(
        &spans,
        sample_times(spec.imu_rate, imu_phase, total),
        &mut sensor_rng(Position::WHEELS.len()),
    )?;

    let (mut streams, levers): (Vec<_>, Vec<_>) = wheels.into_iter().unzip();
    streams.push(imu);
    Ok(SynthOutput { streams, labels, levers })
}

/// Smallest pairwise class gap of one feature in units of the larger
/// within-class standard deviation. Classes with no samples are ignored.
pub fn class_separation(set: &SampleSet, feature: &str) -> Result<f64> {
    let idx = set
        .feature_names
        .iter()
        .position(|n| n == feature)
        .ok_or_else(|| Error::Schema(format!("unknown feature '{feature}'")))?;
    let stats: Vec<(f64, f64)> = Terrain::ALL
        .iter()
        .filter_map(|&t| {
            let v: Vec<f64> = set
                .samples
                .iter()
                .filter(|s| s.label == Some(t))
                .map(|s| s.features[idx])
                .collect();
            if v.is_empty() {
                return None;
            }
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            Some((mean, var.sqrt()))
        })
        .collect();
    if stats.len() < 2 {
        return Err(Error::DegenerateData("class separation needs two labelled classes".into()));
    }
    let mut worst = f64::INFINITY;
    for (i, a) in stats.iter().enumerate() {
        for b in &stats[i + 1..] {
            let spread = a.1.max(b.1);
            let gap = (a.0 - b.0).abs();
            worst = worst.min(if spread == 0.0 { f64::INFINITY } else { gap / spread });
        }
    }
    Ok(worst)
}
