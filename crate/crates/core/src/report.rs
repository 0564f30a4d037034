//! Text, CSV and SVG renderings of evaluation results.
//!
//! Percentages are printed with two decimals, rounding half away from zero on
//! the shortest decimal representation of the value (so `33.335` prints as
//! `33.34` even though the nearest double is slightly below it). Rows are not
//! re-balanced and may print as 99.99 or 100.01.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::drawbar::{IntervalForce, RetentionReport};
use crate::error::{Error, Result};
use crate::evaluation::ConfusionMatrix;
use crate::mlp::EpochStats;
use crate::svm::GridReport;
use crate::telemetry::{Position, Terrain};

/// `x` with `decimals` digits, rounded half away from zero.
pub fn fixed(x: f64, decimals: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let repr = format!("{}", x.abs());
    let (int, frac) = repr.split_once('.').unwrap_or((&repr, ""));
    let mut digits: Vec<u8> = int.bytes().chain(frac.bytes().chain(std::iter::repeat(b'0')).take(decimals)).collect();
    if frac.as_bytes().get(decimals).is_some_and(|d| *d >= b'5') {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, b'1');
                break;
            }
            i -= 1;
            if digits[i] == b'9' {
                digits[i] = b'0';
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let split = digits.len() - decimals;
    let mut out = String::from_utf8(digits[..split].to_vec()).unwrap();
    if decimals > 0 {
        out.push('.');
        out.push_str(std::str::from_utf8(&digits[split..]).unwrap());
    }
    if x < 0.0 && out.bytes().any(|b| (b'1'..=b'9').contains(&b)) {
        out.insert(0, '-');
    }
    out
}

/// Two-decimal percentage.
pub fn pct(x: f64) -> String {
    fixed(x, 2)
}

/// Wall-clock timings of one model, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Whole hyperparameter search, if one was run.
    pub grid_search: Option<f64>,
    /// Training with the selected hyperparameters.
    pub training: f64,
    /// Inference over the whole test set.
    pub inference: f64,
    pub test_samples: usize,
}

impl Timing {
    pub fn inference_per_sample(&self) -> f64 {
        self.inference / self.test_samples.max(1) as f64
    }
}

/// Row-normalized confusion matrix with accuracies, all in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: Vec<Terrain>,
    /// `rows[actual][predicted]`
    pub rows: Vec<Vec<f64>>,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: f64,
}

impl EvalReport {
    /// Report of a test-set confusion matrix whose class indices are terrain
    /// indices. `train_accuracy` is a fraction in `[0, 1]`.
    pub fn from_confusion(cm: &ConfusionMatrix, train_accuracy: Option<f64>) -> Result<EvalReport> {
        let classes = cm
            .classes
            .iter()
            .map(|&c| Terrain::from_index(c).ok_or_else(|| Error::Schema(format!("class index {c} is not a terrain"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(EvalReport {
            classes,
            rows: cm.percentages(),
            train_accuracy: train_accuracy.map(|a| 100.0 * a),
            test_accuracy: 100.0 * cm.accuracy(),
        })
    }

    pub fn per_class_accuracy(&self) -> Vec<f64> {
        (0..self.classes.len()).map(|i| self.rows[i][i]).collect()
    }

    /// Checks that rows sum to 100 and accuracies lie in `[0, 100]`.
    pub fn validate(&self) -> Result<()> {
        let n = self.classes.len();
        if n == 0 || self.rows.len() != n || self.rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape {
                expected: n,
                actual: self.rows.len(),
            });
        }
        for (t, row) in self.classes.iter().zip(&self.rows) {
            let sum: f64 = row.iter().sum();
            if (sum - 100.0).abs() > 1e-6 {
                return Err(Error::DegenerateData(format!("row {} sums to {sum}", t.title())));
            }
        }
        let in_range = |a: f64| (0.0..=100.0).contains(&a);
        if !in_range(self.test_accuracy) || self.train_accuracy.is_some_and(|a| !in_range(a)) {
            return Err(Error::DegenerateData("accuracy outside [0, 100]".into()));
        }
        Ok(())
    }
}

fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                if c == 0 {
                    format!("{cell:<w$}", w = widths[c])
                } else {
                    format!("{cell:>w$}", w = widths[c])
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn render_confusion_text(r: &EvalReport) -> String {
    let mut rows = vec![std::iter::once("Actual \\ Predicted".to_string())
        .chain(r.classes.iter().map(|t| t.title().to_string()))
        .collect::<Vec<_>>()];
    for (t, row) in r.classes.iter().zip(&r.rows) {
        rows.push(std::iter::once(t.title().to_string()).chain(row.iter().map(|v| pct(*v))).collect());
    }
    let mut out = table(&rows);
    if let Some(a) = r.train_accuracy {
        let _ = writeln!(out, "Training accuracy: {} %", pct(a));
    }
    let _ = writeln!(out, "Test accuracy: {} %", pct(r.test_accuracy));
    out
}

/// `actual,<classes...>` rows followed by `train_accuracy` and
/// `test_accuracy` rows whose value sits in the second column.
pub fn render_confusion_csv(r: &EvalReport) -> String {
    let n = r.classes.len();
    let pad = ",".repeat(n.saturating_sub(1));
    let mut out = String::from("actual");
    for t in &r.classes {
        let _ = write!(out, ",{}", t.name());
    }
    out.push('\n');
    for (t, row) in r.classes.iter().zip(&r.rows) {
        out.push_str(t.name());
        for v in row {
            let _ = write!(out, ",{}", pct(*v));
        }
        out.push('\n');
    }
    let train = r.train_accuracy.map(pct).unwrap_or_default();
    let _ = writeln!(out, "train_accuracy,{train}{pad}");
    let _ = writeln!(out, "test_accuracy,{}{pad}", pct(r.test_accuracy));
    out
}

pub fn parse_confusion_csv(text: &str) -> Result<EvalReport> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Schema(e.to_string()))?.clone();
    if header.get(0) != Some("actual") {
        return Err(Error::Schema("confusion CSV must start with an 'actual' column".into()));
    }
    let classes = header.iter().skip(1).map(str::parse).collect::<Result<Vec<Terrain>>>()?;
    let num = |s: &str, line: usize| -> Result<f64> {
        s.parse().map_err(|_| Error::Parse {
            row: line - 1,
            line,
            message: format!("'{s}' is not a number"),
        })
    };
    let mut rows = Vec::new();
    let mut train_accuracy = None;
    let mut test_accuracy = None;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            row: i + 1,
            line,
            message: e.to_string(),
        })?;
        match rec.get(0).unwrap_or("") {
            "train_accuracy" => {
                let v = rec.get(1).unwrap_or("");
                train_accuracy = if v.is_empty() { None } else { Some(num(v, line)?) };
            }
            "test_accuracy" => test_accuracy = Some(num(rec.get(1).unwrap_or(""), line)?),
            name => {
                let t: Terrain = name.parse()?;
                if classes.get(rows.len()) != Some(&t) {
                    return Err(Error::Schema(format!("row '{name}' out of order")));
                }
                rows.push(rec.iter().skip(1).map(|s| num(s, line)).collect::<Result<Vec<_>>>()?);
            }
        }
    }
    if rows.len() != classes.len() {
        return Err(Error::Shape {
            expected: classes.len(),
            actual: rows.len(),
        });
    }
    Ok(EvalReport {
        classes,
        rows,
        train_accuracy,
        test_accuracy: test_accuracy.ok_or_else(|| Error::Schema("missing test_accuracy row".into()))?,
    })
}

/// One line per grid combination: `kernel,C,gamma,train_acc,test_acc,converged,selected`.
pub fn render_grid_csv(report: &GridReport) -> String {
    let mut out = String::from("kernel,C,gamma,train_acc,test_acc,converged,selected\n");
    for (i, e) in report.entries.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            e.config.kernel.kind.name(),
            e.config.c,
            e.config.kernel.gamma,
            pct(100.0 * e.train_accuracy),
            pct(100.0 * e.test_accuracy),
            u8::from(e.converged),
            u8::from(i == report.best)
        );
    }
    out
}

pub fn render_grid_text(report: &GridReport) -> String {
    let mut rows = vec![["Kernel", "C", "gamma", "Train [%]", "Test [%]", ""].map(String::from).to_vec()];
    for (i, e) in report.entries.iter().enumerate() {
        let mut mark = String::new();
        if i == report.best {
            mark.push_str("best");
        }
        if !e.converged {
            mark.push_str(if mark.is_empty() { "not converged" } else { ", not converged" });
        }
        rows.push(vec![
            e.config.kernel.kind.name().to_string(),
            e.config.c.to_string(),
            e.config.kernel.gamma.to_string(),
            pct(100.0 * e.train_accuracy),
            pct(100.0 * e.test_accuracy),
            mark,
        ]);
    }
    table(&rows)
}

/// Per-combination training times: `kernel,C,gamma,train_seconds`.
pub fn render_grid_timing_csv(report: &GridReport) -> String {
    let mut out = String::from("kernel,C,gamma,train_seconds\n");
    for e in &report.entries {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            e.config.kernel.kind.name(),
            e.config.c,
            e.config.kernel.gamma,
            e.train_seconds
        );
    }
    out
}

/// `tolerance_cm,FL,FR,CL,CR,BL,BR,total`; absent wheels are empty cells.
pub fn render_retention_csv(reports: &[RetentionReport]) -> String {
    let mut out = String::from("tolerance_cm");
    for w in Position::WHEELS {
        let _ = write!(out, ",{}", w.label());
    }
    out.push_str(",total\n");
    for r in reports {
        out.push_str(fixed(100.0 * r.tolerance, 2).trim_end_matches('0').trim_end_matches('.'));
        for (_, v) in &r.per_wheel {
            let _ = write!(out, ",{}", v.map(pct).unwrap_or_default());
        }
        let _ = writeln!(out, ",{}", r.total.map(pct).unwrap_or_default());
    }
    out
}

pub fn render_retention_text(reports: &[RetentionReport]) -> String {
    let mut rows = vec![std::iter::once("Tolerance".to_string())
        .chain(Position::WHEELS.iter().map(|w| w.label().to_string()))
        .chain(std::iter::once("Total".to_string()))
        .collect::<Vec<_>>()];
    for r in reports {
        let cm = fixed(100.0 * r.tolerance, 2);
        let cm = cm.trim_end_matches('0').trim_end_matches('.');
        rows.push(
            std::iter::once(format!("{cm} cm"))
                .chain(r.per_wheel.iter().map(|(_, v)| v.map(pct).unwrap_or_else(|| "-".into())))
                .chain(std::iter::once(r.total.map(pct).unwrap_or_else(|| "-".into())))
                .collect(),
        );
    }
    let mut out = String::from("Retained points [%]; points with undefined lever length count as removed\n");
    out.push_str(&table(&rows));
    out
}

fn csv_records(text: &str) -> Result<(csv::StringRecord, Vec<csv::StringRecord>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Schema(e.to_string()))?.clone();
    let rows = rdr
        .records()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::Parse {
                row: i + 1,
                line: i + 2,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((header, rows))
}

fn cell(rec: &csv::StringRecord, col: usize, row: usize) -> Result<Option<f64>> {
    let s = rec.get(col).unwrap_or("");
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::Parse {
        row,
        line: row + 1,
        message: format!("'{s}' is not a number"),
    })
}

/// Inverse of [`render_retention_csv`], up to the printed precision.
pub fn parse_retention_csv(text: &str) -> Result<Vec<RetentionReport>> {
    let (header, rows) = csv_records(text)?;
    let expected: Vec<&str> = std::iter::once("tolerance_cm")
        .chain(Position::WHEELS.iter().map(|w| w.label()))
        .chain(std::iter::once("total"))
        .collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Schema(format!("retention header must be {}", expected.join(","))));
    }
    rows.iter()
        .enumerate()
        .map(|(i, rec)| {
            let row = i + 1;
            let tol = cell(rec, 0, row)?.ok_or_else(|| Error::Parse {
                row,
                line: row + 1,
                message: "missing tolerance".into(),
            })?;
            let per_wheel = Position::WHEELS
                .iter()
                .enumerate()
                .map(|(k, &w)| Ok((w, cell(rec, k + 1, row)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(RetentionReport {
                tolerance: tol / 100.0,
                per_wheel,
                total: cell(rec, 7, row)?,
            })
        })
        .collect()
}

/// Inverse of [`render_learning_curve_csv`].
pub fn parse_learning_curve_csv(text: &str) -> Result<Vec<EpochStats>> {
    let (header, rows) = csv_records(text)?;
    if header.iter().collect::<Vec<_>>() != ["epoch", "train_loss", "train_acc", "test_loss", "test_acc"] {
        return Err(Error::Schema("learning-curve header must be epoch,train_loss,train_acc,test_loss,test_acc".into()));
    }
    rows.iter()
        .enumerate()
        .map(|(i, rec)| {
            let row = i + 1;
            let v = (0..5)
                .map(|c| {
                    cell(rec, c, row)?.ok_or_else(|| Error::Parse {
                        row,
                        line: row + 1,
                        message: "empty cell".into(),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(EpochStats {
                epoch: v[0] as usize,
                train_loss: v[1],
                train_acc: v[2],
                test_loss: v[3],
                test_acc: v[4],
            })
        })
        .collect()
}

/// `wheel,t_start,t_end,mean_fx,std_fx,points`
pub fn render_intervals_csv(rows: &[(Position, IntervalForce)]) -> String {
    let mut out = String::from("wheel,t_start,t_end,mean_fx,std_fx,points\n");
    for (w, f) in rows {
        let _ = writeln!(out, "{},{},{},{},{},{}", w.label(), f.t_start, f.t_end, f.mean_fx, f.std_fx, f.points);
    }
    out
}

pub fn render_intervals_text(rows: &[(Position, IntervalForce)]) -> String {
    let mut table_rows = vec![["Wheel", "Start [s]", "End [s]", "Mean Fx [N]", "Std Fx [N]", "Points"]
        .map(String::from)
        .to_vec()];
    for (w, f) in rows {
        table_rows.push(vec![
            w.label().to_string(),
            fixed(f.t_start, 2),
            fixed(f.t_end, 2),
            fixed(f.mean_fx, 2),
            fixed(f.std_fx, 2),
            f.points.to_string(),
        ]);
    }
    let mut out = format!("Stable intervals: {}\n", rows.len());
    out.push_str(&table(&table_rows));
    out
}

/// Timing table with one row per model: grid search, training with the best
/// parameters, inference on the whole test set.
pub fn render_timing_text(rows: &[(&str, Timing)]) -> String {
    let mut t = vec![["", "Training grid search", "Training (best params)", "Inference"]
        .map(String::from)
        .to_vec()];
    for (name, tm) in rows {
        t.push(vec![
            name.to_string(),
            tm.grid_search.map(|s| format!("{s:.6}")).unwrap_or_else(|| "N/A".into()),
            format!("{:.6}", tm.training),
            format!("{:.7}", tm.inference),
        ]);
    }
    table(&t)
}

/// `model,grid_search_s,train_s,inference_s,inference_per_sample_s,test_samples`
pub fn render_timing_csv(rows: &[(&str, Timing)]) -> String {
    let mut out = String::from("model,grid_search_s,train_s,inference_s,inference_per_sample_s,test_samples\n");
    for (name, t) in rows {
        let grid = t.grid_search.map(|s| s.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{name},{grid},{},{},{},{}",
            t.training,
            t.inference,
            t.inference_per_sample(),
            t.test_samples
        );
    }
    out
}

/// `epoch,train_loss,train_acc,test_loss,test_acc` with full precision.
pub fn render_learning_curve_csv(curve: &[EpochStats]) -> String {
    let mut out = String::from("epoch,train_loss,train_acc,test_loss,test_acc\n");
    for e in curve {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            e.epoch, e.train_loss, e.train_acc, e.test_loss, e.test_acc
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Series {
        Series {
            name: name.into(),
            points,
        }
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Minimal SVG line chart. Horizontal reference lines are drawn dashed.
pub fn svg_line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], hlines: &[f64]) -> String {
    let (w, h, m) = (640.0, 400.0, 50.0);
    let pts = series.iter().flat_map(|s| s.points.iter().copied());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in pts.filter(|(x, y)| x.is_finite() && y.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    for &y in hlines {
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{m}" x2="{m}" y2="{b}" stroke="black"/>"#,
        b = h - m,
        r = w - m
    );
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 10.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(y_label)
    );
    for (v, anchor, x, y) in [
        (x0, "start", sx(x0), h - m + 15.0),
        (x1, "end", sx(x1), h - m + 15.0),
        (y0, "end", m - 5.0, sy(y0)),
        (y1, "end", m - 5.0, sy(y1) + 4.0),
    ] {
        let _ = writeln!(out, r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}">{}</text>"#, fixed(v, 3));
    }
    for &y in hlines {
        let _ = writeln!(
            out,
            r#"<line x1="{m}" y1="{v:.2}" x2="{}" y2="{v:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
            w - m,
            v = sy(y)
        );
    }
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            w - m - 120.0,
            m + 15.0 * i as f64,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}
