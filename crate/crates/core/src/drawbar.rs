//! Lever-length filtering of force-torque readings.
//!
//! With a rigid leg, the torque about the sensor's y axis is the longitudinal
//! force times the distance to the contact point: `tau_y = F_x * L`. Geometry
//! bounds `L` between the sensor-to-axle distance and that distance plus the
//! wheel radius. Readings whose implied `L` falls outside that band (widened by
//! a tolerance) are flagged invalid; low-variance runs of valid readings are
//! reported as stable intervals where `F_x` approximates drawbar pull.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::telemetry::{Frame, Position, SensorKind, TelemetryStream};

/// Below this |F_x| [N] the lever length is undefined.
pub const EPS_FORCE: f64 = 0.5;
/// Default tolerances [m], widest first.
pub const DEFAULT_TOLERANCES: [f64; 3] = [0.05, 0.02, 0.01];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WheelGeometry {
    /// Vertical distance from the sensor to the wheel axle [m].
    pub sensor_to_axle: f64,
    pub wheel_diameter: f64,
}

impl Default for WheelGeometry {
    fn default() -> Self {
        WheelGeometry {
            sensor_to_axle: 0.10,
            wheel_diameter: 0.15,
        }
    }
}

impl WheelGeometry {
    pub fn l_min(&self) -> f64 {
        self.sensor_to_axle
    }

    /// Sensor to ground contact point.
    pub fn l_max(&self) -> f64 {
        self.sensor_to_axle + self.wheel_diameter / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sensor_to_axle > 0.0 && self.wheel_diameter > 0.0) {
            return Err(Error::Config(format!("invalid wheel geometry {self:?}")));
        }
        Ok(())
    }
}

/// `|tau_y| / |F_x|`, or `None` when `|F_x| < eps_force`.
pub fn lever_length(fx: f64, ty: f64, eps_force: f64) -> Option<f64> {
    (fx.abs() >= eps_force).then(|| ty.abs() / fx.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeverPoint {
    pub t: f64,
    pub fx: f64,
    pub ty: f64,
    pub lever: Option<f64>,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeverSeries {
    pub wheel: Position,
    pub points: Vec<LeverPoint>,
}

impl LeverSeries {
    /// Builds the unfiltered series from `(t, F_x, tau_y)` triples; every point
    /// starts out invalid.
    pub fn from_samples(wheel: Position, samples: impl IntoIterator<Item = (f64, f64, f64)>, eps_force: f64) -> Self {
        let points = samples
            .into_iter()
            .map(|(t, fx, ty)| LeverPoint {
                t,
                fx,
                ty,
                lever: lever_length(fx, ty, eps_force),
                valid: false,
            })
            .collect();
        LeverSeries { wheel, points }
    }

    /// Lever series of a rover-frame force-torque stream.
    pub fn from_stream(stream: &TelemetryStream, eps_force: f64) -> Result<Self> {
        if stream.sensor().kind() != SensorKind::Fts {
            return Err(Error::Schema(format!("{} is not a force-torque sensor", stream.sensor())));
        }
        if stream.frame() != Frame::Rover {
            return Err(Error::Frame(format!("{} has not been normalized", stream.sensor())));
        }
        let fx = stream.channel("fx").unwrap();
        let ty = stream.channel("ty").unwrap();
        Ok(LeverSeries::from_samples(
            stream.sensor().position(),
            stream.timestamps().iter().zip(fx).zip(ty).map(|((&t, &f), &m)| (t, f, m)),
            eps_force,
        ))
    }

    pub fn valid_count(&self) -> usize {
        self.points.iter().filter(|p| p.valid).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeverFilter {
    pub geometry: WheelGeometry,
    /// Widening of `[l_min, l_max]` on both sides [m].
    pub tolerance: f64,
    /// Additionally reject points with `|F_x|` below this force [N], e.g. to
    /// drop standstill segments.
    pub min_abs_fx: Option<f64>,
}

impl LeverFilter {
    pub fn new(geometry: WheelGeometry, tolerance: f64) -> Self {
        LeverFilter {
            geometry,
            tolerance,
            min_abs_fx: None,
        }
    }

    pub fn accepts(&self, p: &LeverPoint) -> bool {
        let lo = self.geometry.l_min() - self.tolerance;
        let hi = self.geometry.l_max() + self.tolerance;
        let in_band = p.lever.is_some_and(|l| lo <= l && l <= hi);
        in_band && self.min_abs_fx.is_none_or(|m| p.fx.abs() >= m)
    }

    /// Copy of `series` with validity flags set; values are untouched.
    pub fn apply(&self, series: &LeverSeries) -> LeverSeries {
        LeverSeries {
            wheel: series.wheel,
            points: series
                .points
                .iter()
                .map(|p| LeverPoint {
                    valid: self.accepts(p),
                    ..*p
                })
                .collect(),
        }
    }
}

/// Flags points whose lever length lies in the closed band
/// `[l_min - tol, l_max + tol]`.
pub fn filter_by_lever(series: &LeverSeries, geometry: &WheelGeometry, tolerance: f64) -> Result<LeverSeries> {
    if !(tolerance >= 0.0) {
        return Err(Error::Config(format!("tolerance must be >= 0, got {tolerance}")));
    }
    Ok(LeverFilter::new(*geometry, tolerance).apply(series))
}

/// Share of points kept at one tolerance. Points with undefined lever length
/// count in the denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetentionReport {
    pub tolerance: f64,
    /// Percentage per wheel in [`Position::WHEELS`] order; `None` if the wheel
    /// has no data.
    pub per_wheel: Vec<(Position, Option<f64>)>,
    /// Count-weighted percentage over all present wheels.
    pub total: Option<f64>,
}

pub fn retention_report(
    series: &[LeverSeries],
    geometry: &WheelGeometry,
    tolerances: &[f64],
    min_abs_fx: Option<f64>,
) -> Result<Vec<RetentionReport>> {
    if series.is_empty() {
        return Err(Error::EmptyData("retention needs at least one wheel series".into()));
    }
    for (i, s) in series.iter().enumerate() {
        if series[..i].iter().any(|o| o.wheel == s.wheel) {
            return Err(Error::Schema(format!("duplicate series for wheel {}", s.wheel.label())));
        }
    }
    tolerances
        .iter()
        .map(|&tol| {
            if !(tol >= 0.0) {
                return Err(Error::Config(format!("tolerance must be >= 0, got {tol}")));
            }
            let filter = LeverFilter {
                min_abs_fx,
                ..LeverFilter::new(*geometry, tol)
            };
            let mut kept_all = 0usize;
            let mut total_all = 0usize;
            let per_wheel = Position::WHEELS
                .iter()
                .map(|&w| {
                    let s = series.iter().find(|s| s.wheel == w).filter(|s| !s.points.is_empty());
                    let pct = s.map(|s| {
                        let kept = s.points.iter().filter(|p| filter.accepts(p)).count();
                        kept_all += kept;
                        total_all += s.points.len();
                        100.0 * kept as f64 / s.points.len() as f64
                    });
                    (w, pct)
                })
                .collect();
            Ok(RetentionReport {
                tolerance: tol,
                per_wheel,
                total: (total_all > 0).then(|| 100.0 * kept_all as f64 / total_all as f64),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    /// Shortest reported interval [s].
    pub min_duration: f64,
    /// Largest rolling standard deviation of `L` [m].
    pub max_std: f64,
    /// Width of the centred rolling window [s].
    pub rolling_window: f64,
}

impl Default for StableParams {
    fn default() -> Self {
        StableParams {
            min_duration: 5.0,
            max_std: 0.01,
            rolling_window: 1.0,
        }
    }
}

/// Maximal runs of valid points whose rolling std of `L` stays within
/// `max_std` and which last at least `min_duration`. The rolling std at a point
/// is taken over the valid points within `rolling_window / 2` of it in the
/// same run of valid points.
pub fn detect_stable_intervals(series: &LeverSeries, params: &StableParams) -> Result<Vec<(f64, f64)>> {
    if !(params.min_duration > 0.0 && params.max_std > 0.0 && params.rolling_window > 0.0) {
        return Err(Error::Config(format!("invalid stable-interval parameters {params:?}")));
    }
    let pts = &series.points;
    let half = params.rolling_window / 2.0;
    let mut stable = vec![false; pts.len()];

    let mut i = 0;
    while i < pts.len() {
        if !pts[i].valid || pts[i].lever.is_none() {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < pts.len() && pts[j].valid && pts[j].lever.is_some() {
            j += 1;
        }
        let run = &pts[i..j];
        let (mut lo, mut hi) = (0, 0);
        for (k, p) in run.iter().enumerate() {
            while run[lo].t < p.t - half {
                lo += 1;
            }
            while hi < run.len() && run[hi].t <= p.t + half {
                hi += 1;
            }
            let w: Vec<f64> = run[lo..hi].iter().filter_map(|q| q.lever).collect();
            let mean = w.iter().sum::<f64>() / w.len() as f64;
            let var = w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / w.len() as f64;
            stable[i + k] = var.sqrt() <= params.max_std;
        }
        i = j;
    }

    let mut out = Vec::new();
    let mut k = 0;
    while k < pts.len() {
        if !stable[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k < pts.len() && stable[k] {
            k += 1;
        }
        let (t0, t1) = (pts[start].t, pts[k - 1].t);
        if t1 - t0 >= params.min_duration {
            out.push((t0, t1));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalForce {
    pub t_start: f64,
    pub t_end: f64,
    pub mean_fx: f64,
    /// Population standard deviation.
    pub std_fx: f64,
    pub points: usize,
}

/// Mean and std of `F_x` over the valid points of each interval. Intervals
/// without valid points are skipped with a warning.
pub fn drawbar_estimate(series: &LeverSeries, intervals: &[(f64, f64)]) -> Vec<IntervalForce> {
    intervals
        .iter()
        .filter_map(|&(t0, t1)| {
            let fx: Vec<f64> = series
                .points
                .iter()
                .filter(|p| p.valid && p.t >= t0 && p.t <= t1)
                .map(|p| p.fx)
                .collect();
            if fx.is_empty() {
                log::warn!(
                    "no valid points for wheel {} in [{t0}, {t1}]; interval skipped",
                    series.wheel.label()
                );
                return None;
            }
            let n = fx.len() as f64;
            let mean = fx.iter().sum::<f64>() / n;
            let var = fx.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            Some(IntervalForce {
                t_start: t0,
                t_end: t1,
                mean_fx: mean,
                std_fx: var.sqrt(),
                points: fx.len(),
            })
        })
        .collect()
}

/// `t,fx,ty,lever,valid`; undefined lever lengths are left empty.
pub fn write_lever_csv<W: Write>(series: &LeverSeries, mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,fx,ty,lever,valid")?;
    for p in &series.points {
        let lever = p.lever.map(|l| l.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{}", p.t, p.fx, p.ty, lever, u8::from(p.valid))?;
    }
    Ok(())
}

/// Reads a series written by [`write_lever_csv`].
pub fn read_lever_csv<R: std::io::Read>(wheel: Position, reader: R) -> Result<LeverSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Schema(e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != ["t", "fx", "ty", "lever", "valid"] {
        return Err(Error::Schema("lever CSV header must be t,fx,ty,lever,valid".into()));
    }
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let bad = |message: String| Error::Parse {
            row: i + 1,
            line: i + 2,
            message,
        };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |c: usize| -> Result<f64> {
            let s = &rec[c];
            s.parse().map_err(|_| bad(format!("'{s}' is not a number")))
        };
        let lever = if rec[3].is_empty() { None } else { Some(num(3)?) };
        let valid = match &rec[4] {
            "1" => true,
            "0" => false,
            other => return Err(bad(format!("validity must be 0 or 1, got '{other}'"))),
        };
        points.push(LeverPoint {
            t: num(0)?,
            fx: num(1)?,
            ty: num(2)?,
            lever,
            valid,
        });
    }
    Ok(LeverSeries { wheel, points })
}

/// Two-column `fx,ty` scatter data of either the kept or the removed points.
pub fn write_scatter_csv<W: Write>(series: &LeverSeries, valid: bool, mut w: W) -> std::io::Result<()> {
    writeln!(w, "fx,ty")?;
    for p in series.points.iter().filter(|p| p.valid == valid) {
        writeln!(w, "{},{}", p.fx, p.ty)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn series_of_levers(levers: &[f64]) -> LeverSeries {
        LeverSeries::from_samples(
            Position::FL,
            levers.iter().enumerate().map(|(i, l)| (i as f64 * 0.01, 10.0, 10.0 * l)),
            EPS_FORCE,
        )
    }

    #[test]
    fn geometry_defaults() {
        let g = WheelGeometry::default();
        assert_eq!(g.l_min(), 0.10);
        assert!((g.l_max() - 0.175).abs() < 1e-15);
    }

    #[test]
    fn lever_examples() {
        assert!((lever_length(10.0, 1.5, EPS_FORCE).unwrap() - 0.15).abs() < 1e-15);
        assert_eq!(lever_length(0.0, 2.0, EPS_FORCE), None);
        assert!((lever_length(-10.0, -1.0, EPS_FORCE).unwrap() - 0.10).abs() < 1e-15);
        assert_eq!(lever_length(0.49, 1.0, EPS_FORCE), None);
    }

    #[test]
    fn band_boundaries() {
        let g = WheelGeometry::default();
        let s = series_of_levers(&[0.20]);
        assert!(filter_by_lever(&s, &g, 0.05).unwrap().points[0].valid);
        assert!(!filter_by_lever(&s, &g, 0.02).unwrap().points[0].valid);

        let tol = 0.01;
        let edge = LeverSeries {
            wheel: Position::FL,
            points: vec![LeverPoint { t: 0.0, fx: 1.0, ty: 0.0, lever: Some(g.l_min() - tol), valid: false }],
        };
        assert!(filter_by_lever(&edge, &g, tol).unwrap().points[0].valid);
        assert!(filter_by_lever(&edge, &g, -1.0).is_err());
    }

    #[test]
    fn undefined_lever_is_never_valid() {
        let s = LeverSeries::from_samples(Position::FR, [(0.0, 0.1, 0.015)], EPS_FORCE);
        assert_eq!(s.points[0].lever, None);
        assert!(!filter_by_lever(&s, &WheelGeometry::default(), 10.0).unwrap().points[0].valid);
    }

    #[test]
    fn min_force_flag() {
        let s = LeverSeries::from_samples(Position::FL, [(0.0, 1.0, 0.15), (0.1, 10.0, 1.5)], EPS_FORCE);
        let f = LeverFilter { min_abs_fx: Some(5.0), ..LeverFilter::new(WheelGeometry::default(), 0.0) };
        let out = f.apply(&s);
        assert_eq!(out.points.iter().map(|p| p.valid).collect::<Vec<_>>(), vec![false, true]);
    }

    #[test]
    fn retention_constant_and_absent_wheels() {
        let s = series_of_levers(&[0.14; 50]);
        let reports = retention_report(&[s], &WheelGeometry::default(), &DEFAULT_TOLERANCES, None).unwrap();
        assert_eq!(reports.len(), 3);
        for r in &reports {
            assert_eq!(r.per_wheel[0], (Position::FL, Some(100.0)));
            assert!(r.per_wheel[1..].iter().all(|(_, v)| v.is_none()));
            assert_eq!(r.total, Some(100.0));
        }
        let empty = LeverSeries { wheel: Position::BR, points: vec![] };
        let r = retention_report(&[empty], &WheelGeometry::default(), &[0.05], None).unwrap();
        assert_eq!(r[0].per_wheel[5], (Position::BR, None));
        assert_eq!(r[0].total, None);
        assert!(retention_report(&[], &WheelGeometry::default(), &[0.05], None).is_err());
    }

    #[test]
    fn retention_counts_undefined_in_denominator() {
        let s = LeverSeries::from_samples(Position::CL, [(0.0, 10.0, 1.4), (0.1, 0.0, 1.0)], EPS_FORCE);
        let r = retention_report(&[s], &WheelGeometry::default(), &[0.0], None).unwrap();
        assert_eq!(r[0].per_wheel[2].1, Some(50.0));
    }

    #[test]
    fn retention_uniform_lever_oracle() {
        // Uniform L on [0, 0.35]: kept share = (0.075 + 2 tol) / 0.35.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let levers: Vec<f64> = (0..200_000).map(|_| rng.random_range(0.0..0.35)).collect();
        let s = series_of_levers(&levers);
        let tols = [0.05, 0.02, 0.01];
        let r = retention_report(&[s], &WheelGeometry::default(), &tols, None).unwrap();
        for (rep, tol) in r.iter().zip(tols) {
            let expected = 100.0 * (0.075 + 2.0 * tol) / 0.35;
            assert!((rep.total.unwrap() - expected).abs() < 0.5, "{rep:?} vs {expected}");
        }
        assert!((r[0].total.unwrap() - 50.0).abs() < 0.5);
    }

    #[test]
    fn constant_lever_gives_one_interval() {
        let s = LeverSeries::from_samples(
            Position::BL,
            (0..=3000).map(|i| (i as f64 * 0.01, 10.0, 1.5)),
            EPS_FORCE,
        );
        let s = filter_by_lever(&s, &WheelGeometry::default(), 0.02).unwrap();
        let iv = detect_stable_intervals(&s, &StableParams::default()).unwrap();
        assert_eq!(iv, vec![(0.0, 30.0)]);
        let f = drawbar_estimate(&s, &iv);
        assert_eq!((f[0].mean_fx, f[0].std_fx), (10.0, 0.0));
    }

    #[test]
    fn alternating_validity_gives_nothing() {
        let s = LeverSeries::from_samples(
            Position::BL,
            (0..3000).map(|i| (i as f64 * 0.01, 10.0, if i % 2 == 0 { 1.5 } else { 5.0 })),
            EPS_FORCE,
        );
        let s = filter_by_lever(&s, &WheelGeometry::default(), 0.02).unwrap();
        assert!(detect_stable_intervals(&s, &StableParams::default()).unwrap().is_empty());
    }

    #[test]
    fn stable_noisy_stable_gives_two_intervals() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let samples: Vec<_> = (0..3000)
            .map(|i| {
                let t = i as f64 * 0.01;
                let l = if (10.0..20.0).contains(&t) { 0.14 + noise.sample(&mut rng) } else { 0.14 };
                (t, 12.0, 12.0 * l)
            })
            .collect();
        let s = LeverSeries::from_samples(Position::FL, samples, EPS_FORCE);
        let s = filter_by_lever(&s, &WheelGeometry::default(), 0.05).unwrap();
        let iv = detect_stable_intervals(&s, &StableParams::default()).unwrap();
        assert_eq!(iv.len(), 2, "{iv:?}");
        assert!(iv[0].0 == 0.0 && iv[0].1 < 10.0 && iv[0].1 > 9.0);
        assert!(iv[1].0 >= 20.0 && iv[1].0 < 21.0 && iv[1].1 == 2999.0 * 0.01);
    }

    #[test]
    fn alternating_force_estimate() {
        let s = LeverSeries::from_samples(
            Position::FL,
            (0..100).map(|i| {
                let f = if i % 2 == 0 { 5.0 } else { 15.0 };
                (i as f64, f, f * 0.15)
            }),
            EPS_FORCE,
        );
        let s = filter_by_lever(&s, &WheelGeometry::default(), 0.0).unwrap();
        let f = drawbar_estimate(&s, &[(0.0, 99.0), (200.0, 300.0)]);
        assert_eq!(f.len(), 1);
        assert!((f[0].mean_fx - 10.0).abs() < 1e-12 && (f[0].std_fx - 5.0).abs() < 1e-12);
    }

    #[test]
    fn csv_outputs() {
        let s = LeverSeries::from_samples(Position::FL, [(0.0, 10.0, 1.5), (0.5, 0.0, 1.0)], EPS_FORCE);
        let s = filter_by_lever(&s, &WheelGeometry::default(), 0.0).unwrap();
        let mut buf = Vec::new();
        write_lever_csv(&s, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "t,fx,ty,lever,valid\n0,10,1.5,0.15,1\n0.5,0,1,,0\n");
        assert_eq!(read_lever_csv(Position::FL, buf.as_slice()).unwrap(), s);
        assert!(read_lever_csv(Position::FL, "t,fx\n".as_bytes()).is_err());
        assert!(read_lever_csv(Position::FL, "t,fx,ty,lever,valid\n0,1,1,,2\n".as_bytes()).is_err());
        let mut buf = Vec::new();
        write_scatter_csv(&s, false, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "fx,ty\n0,1\n");
    }

    proptest! {
        #[test]
        fn sign_flip_invariance(fx in -100.0f64..100.0, ty in -20.0f64..20.0) {
            prop_assert_eq!(lever_length(fx, ty, EPS_FORCE), lever_length(-fx, -ty, EPS_FORCE));
        }

        #[test]
        fn lever_round_trip(fx in prop_oneof![-500.0f64..-0.5, 0.5f64..500.0], l in 0.0f64..1.0) {
            let got = lever_length(fx, fx * l, EPS_FORCE).unwrap();
            prop_assert!((got - l).abs() <= 1e-12);
        }

        #[test]
        fn filter_only_sets_flags(levers in prop::collection::vec(0.0f64..0.4, 1..100), tol in 0.0f64..0.1) {
            let s = series_of_levers(&levers);
            let f = filter_by_lever(&s, &WheelGeometry::default(), tol).unwrap();
            for (a, b) in s.points.iter().zip(&f.points) {
                prop_assert_eq!((a.t, a.fx, a.ty, a.lever), (b.t, b.fx, b.ty, b.lever));
            }
        }

        #[test]
        fn shrinking_max_std_never_grows_coverage(
            levers in prop::collection::vec(0.09f64..0.19, 50..400),
            a in 0.001f64..0.05,
            b in 0.001f64..0.05,
        ) {
            let s = filter_by_lever(&series_of_levers(&levers), &WheelGeometry::default(), 0.0).unwrap();
            let params = |m| StableParams { min_duration: 0.05, max_std: m, rolling_window: 0.1 };
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let cover = |iv: &[(f64, f64)]| iv.iter().map(|(x, y)| y - x).sum::<f64>();
            let small = detect_stable_intervals(&s, &params(lo)).unwrap();
            let large = detect_stable_intervals(&s, &params(hi)).unwrap();
            prop_assert!(cover(&small) <= cover(&large) + 1e-12);
            for (t0, t1) in &small {
                prop_assert!(s.points.iter().filter(|p| p.t >= *t0 && p.t <= *t1).all(|p| p.valid));
            }
        }
    }
}
