use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use proprio::drawbar::{
    detect_stable_intervals, drawbar_estimate, read_lever_csv, retention_report, write_lever_csv,
    write_scatter_csv, LeverFilter, LeverSeries, StableParams, WheelGeometry,
};
use proprio::evaluation::{confusion_matrix, Dataset};
use proprio::mlp::{self, MlpConfig};
use proprio::model_io::{Model, ModelFile};
use proprio::report::{self, EvalReport, Series, Timing};
use proprio::svm::{grid_search, train_multiclass, Grid, KernelKind, Reduction, SvmConfig};
use proprio::synth::{generate, ScenarioSpec, SynthConfig};
use proprio::telemetry::{ingest_labels, load_stream, Position, SensorId, SensorKind, TelemetryStream, Terrain};
use proprio::windows::{build_samples, load_samples, write_samples, FeatureSelection, SampleSet, WindowSpec};
use proprio::Error;
use rayon::prelude::*;
use serde_json::json;

use crate::args::*;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Convergence(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Convergence(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Convergence(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            Error::Divergence { .. } => Failure::Convergence(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn create_dir(dir: &Path) -> Outcome {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).into())
}

fn write_text(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| Error::io(path, e).into())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Data(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn with_file(path: &Path, f: impl FnOnce(BufWriter<File>) -> std::io::Result<()>) -> Outcome {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    f(BufWriter::new(file)).map_err(|e| Error::io(path, e).into())
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e).into())
}

/// `(sensor, path)` pairs named by `--input` and `--input-dir`.
fn input_paths(args: &InputArgs) -> Result<Vec<(SensorId, PathBuf)>, Failure> {
    let mut out: Vec<(SensorId, PathBuf)> = Vec::new();
    for spec in &args.inputs {
        let (sensor, path) = match spec.split_once('=') {
            Some((name, path)) => (name.parse::<SensorId>()?, PathBuf::from(path)),
            None => {
                let path = PathBuf::from(spec);
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
                let sensor = stem.parse::<SensorId>().map_err(|_| {
                    Failure::Usage(format!(
                        "cannot tell the sensor of {}; name it fts_<wheel>.csv or imu.csv, or pass SENSOR=PATH",
                        path.display()
                    ))
                })?;
                (sensor, path)
            }
        };
        out.push((sensor, path));
    }
    if let Some(dir) = &args.input_dir {
        let mut found = Vec::new();
        for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("csv") {
                continue;
            }
            if let Some(sensor) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse::<SensorId>().ok()) {
                found.push((sensor, path));
            }
        }
        found.sort_by(|a, b| a.1.cmp(&b.1));
        out.extend(found);
    }
    if out.is_empty() {
        return Err(Failure::Usage("no input streams; use --input or --input-dir".into()));
    }
    for (i, (s, p)) in out.iter().enumerate() {
        if out[..i].iter().any(|(o, _)| o == s) {
            return Err(Failure::Usage(format!("sensor {s} given twice (again at {})", p.display())));
        }
    }
    Ok(out)
}

fn load_inputs(args: &InputArgs) -> Result<Vec<TelemetryStream>, Failure> {
    let paths = input_paths(args)?;
    let streams = paths
        .par_iter()
        .map(|(sensor, path)| load_stream(path, *sensor).map_err(|e| annotate(e, path)))
        .collect::<Result<Vec<_>, _>>()?;
    for s in &streams {
        log::info!("loaded {} with {} rows", s.sensor(), s.len());
    }
    Ok(streams)
}

/// Puts the file name in front of row-level errors.
fn annotate(e: Error, path: &Path) -> Failure {
    match e {
        Error::Io { .. } => e.into(),
        other => {
            let f: Failure = other.into();
            match f {
                Failure::Data(m) => Failure::Data(format!("{}: {m}", path.display())),
                f => f,
            }
        }
    }
}

pub fn extract(args: &ExtractArgs) -> Outcome {
    let spec = WindowSpec::new(args.window, args.stride.unwrap_or(args.window))?;
    let use_fts = args.variant != Variant::Imu;
    let selection = FeatureSelection {
        use_imu: args.variant != Variant::Fts,
        use_fts,
        include_fx_over_tz: use_fts && !args.no_ratio,
    };
    let labels = match &args.labels {
        Some(p) => Some(ingest_labels(p).map_err(|e| annotate(e, p))?),
        None => None,
    };
    let streams = load_inputs(&args.input)?;
    let set = build_samples(&streams, labels.as_ref(), &spec, &selection)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    with_file(&args.out, |w| write_samples(&set, w))?;

    let mut per_class = BTreeMap::new();
    for t in Terrain::ALL {
        per_class.insert(t.name(), set.samples.iter().filter(|s| s.label == Some(t)).count());
    }
    let labelled: usize = per_class.values().sum();
    let meta = json!({
        "window_length": spec.length,
        "stride": spec.stride,
        "variant": args.variant.name(),
        "use_imu": selection.use_imu,
        "use_fts": selection.use_fts,
        "include_fx_over_tz": selection.include_fx_over_tz,
        "fx_over_tz_policy": {
            "eps": proprio::windows::RATIO_EPS,
            "clamp": proprio::windows::RATIO_CLAMP,
            "clamped_points": set.clamped_points,
        },
        "feature_count": set.feature_names.len(),
        "samples": set.len(),
        "labelled": labelled,
        "per_class": per_class,
    });
    write_json(&meta_path(&args.out), &meta)?;
    if set.clamped_points > 0 {
        log::warn!("{} raw points hit the fx/tz clamp", set.clamped_points);
    }
    log::info!("{} samples ({labelled} labelled), {} features", set.len(), set.feature_names.len());
    Ok(())
}

fn meta_path(samples: &Path) -> PathBuf {
    let mut name = samples.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    samples.with_file_name(name)
}

fn labelled_dataset(set: &SampleSet) -> Result<Dataset, Failure> {
    let (x, y) = set.labeled();
    if x.is_empty() {
        return Err(Failure::Data("no labelled samples".into()));
    }
    Ok(Dataset::new(x, y)?)
}

fn per_class_json(r: &EvalReport) -> serde_json::Value {
    let map: BTreeMap<&str, f64> = r.classes.iter().map(|t| t.name()).zip(r.per_class_accuracy()).collect();
    json!(map)
}

fn write_confusion(dir: &Path, r: &EvalReport) -> Outcome {
    write_text(&dir.join("confusion.csv"), &report::render_confusion_csv(r))?;
    write_text(&dir.join("confusion.txt"), &report::render_confusion_text(r))
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t0 = Instant::now();
    let out = f();
    (out, t0.elapsed().as_secs_f64())
}

pub fn train(args: &TrainArgs) -> Outcome {
    let set = load_samples(&args.samples)
        .map_err(|e| annotate(e, &args.samples))?
        .select_features(args.variant.prefixes())?;
    let data = labelled_dataset(&set)?;
    let (train, test) = data.stratified_split(args.test_fraction, args.seed)?;
    create_dir(&args.out)?;
    let classes = data.classes();
    log::info!(
        "{} train / {} test samples, {} features",
        train.len(),
        test.len(),
        data.dim()
    );

    let (model, train_acc, timing, mut metrics, converged) = match args.model {
        ModelKind::Svm => {
            let kernels = args
                .kernels
                .iter()
                .map(|k| k.parse::<KernelKind>())
                .collect::<Result<Vec<_>, _>>()?;
            let grid = Grid {
                cs: args.cs.clone(),
                gammas: args.gammas.clone(),
                kernels,
            };
            let base = SvmConfig {
                reduction: match args.reduction {
                    ReductionArg::Ovr => Reduction::OneVsRest,
                    ReductionArg::Ovo => Reduction::OneVsOne,
                },
                tol: args.tol,
                max_passes: args.max_passes,
                ..SvmConfig::default()
            };
            let search = grid_search(&train, &test, &grid, &base)?;
            write_text(&args.out.join("grid.csv"), &report::render_grid_csv(&search))?;
            write_text(&args.out.join("grid.txt"), &report::render_grid_text(&search))?;
            write_text(&args.out.join("grid_timing.csv"), &report::render_grid_timing_csv(&search))?;
            let best = search.best_config();
            let (model, training) = timed(|| train_multiclass(&train, &best));
            let model = model?;
            let (pred, inference) = timed(|| model.predict_all(&test.x));
            pred?;
            let train_acc = proprio::svm::accuracy(&model, &train)?;
            let converged = model.converged;
            if search.entries.iter().any(|e| !e.converged) {
                log::warn!(
                    "{} of {} grid configurations hit the iteration cap",
                    search.entries.iter().filter(|e| !e.converged).count(),
                    search.entries.len()
                );
            }
            let metrics = json!({
                "selected": {
                    "kernel": best.kernel.kind.name(),
                    "C": best.c,
                    "gamma": best.kernel.gamma,
                    "degree": best.kernel.degree,
                    "coef0": best.kernel.coef0,
                    "reduction": best.reduction.to_string(),
                    "tol": best.tol,
                },
                "grid_size": search.entries.len(),
                "support_vectors": model.support_vector_count(),
                "scaling": "z-score fit on the training split",
            });
            let timing = Timing {
                grid_search: Some(search.total_seconds),
                training,
                inference,
                test_samples: test.len(),
            };
            (Model::Svm(model), train_acc, timing, metrics, converged)
        }
        ModelKind::Mlp => {
            let cfg = MlpConfig {
                hidden_layers: args.hidden_layers,
                hidden_units: args.hidden_units,
                output_dim: Terrain::ALL.len(),
                dropout_in: args.dropout_in,
                dropout_hidden: args.dropout_hidden,
                batch_size: args.batch_size,
                epochs: args.epochs,
                learning_rate: args.learning_rate,
                momentum: args.momentum,
                seed: args.seed,
                ..MlpConfig::new(data.dim())
            };
            cfg.validate()?;
            let (result, training) = timed(|| mlp::train(&train, &test, &cfg));
            let (model, curve) = result?;
            write_text(&args.out.join("learning_curve.csv"), &report::render_learning_curve_csv(&curve))?;
            let (pred, inference) = timed(|| model.predict_all(&test.x));
            pred?;
            let train_acc = mlp::accuracy(&model, &train)?;
            let metrics = json!({
                "config": cfg,
                "activation": "relu",
                "scaling": "z-score fit on the training split",
            });
            let timing = Timing {
                grid_search: None,
                training,
                inference,
                test_samples: test.len(),
            };
            (Model::Mlp(model), train_acc, timing, metrics, true)
        }
    };

    let pred = model.predict_all(&test.x)?;
    let cm = confusion_matrix(&pred, &test.y, &classes)?;
    let eval = EvalReport::from_confusion(&cm, Some(train_acc))?;
    write_confusion(&args.out, &eval)?;
    ModelFile::new(model.clone(), set.feature_names.clone()).save(args.out.join("model.json"))?;

    let name = match args.model {
        ModelKind::Svm => "SVM",
        ModelKind::Mlp => "NN",
    };
    write_text(&args.out.join("timing.csv"), &report::render_timing_csv(&[(name, timing)]))?;
    write_text(&args.out.join("timing.txt"), &report::render_timing_text(&[(name, timing)]))?;

    let obj = metrics.as_object_mut().expect("object");
    obj.insert("model".into(), json!(model.kind()));
    obj.insert("variant".into(), json!(args.variant.name()));
    obj.insert("seed".into(), json!(args.seed));
    obj.insert("test_fraction".into(), json!(args.test_fraction));
    obj.insert("features".into(), json!(data.dim()));
    obj.insert("train_samples".into(), json!(train.len()));
    obj.insert("test_samples".into(), json!(test.len()));
    obj.insert("train_accuracy".into(), json!(eval.train_accuracy));
    obj.insert("test_accuracy".into(), json!(eval.test_accuracy));
    obj.insert("per_class_accuracy".into(), per_class_json(&eval));
    obj.insert("converged".into(), json!(converged));
    write_json(&args.out.join("metrics.json"), &metrics)?;

    print!("{}", report::render_confusion_text(&eval));
    if !converged {
        return Err(Failure::Convergence(
            "the selected SVM configuration did not converge within the iteration cap; outputs were written".into(),
        ));
    }
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs) -> Outcome {
    let file = ModelFile::load(&args.model)?;
    let set = load_samples(&args.samples).map_err(|e| annotate(e, &args.samples))?;
    let columns = file
        .feature_names
        .iter()
        .map(|n| {
            set.feature_names
                .iter()
                .position(|f| f == n)
                .ok_or_else(|| Failure::Data(format!("samples lack feature '{n}' required by the model")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let labelled: Vec<_> = set.samples.iter().filter(|s| s.label.is_some()).collect();
    let x: Vec<Vec<f64>> = labelled.iter().map(|s| columns.iter().map(|&c| s.features[c]).collect()).collect();
    let y: Vec<usize> = labelled.iter().map(|s| s.label.unwrap().index()).collect();
    if x.is_empty() {
        return Err(Failure::Data("no labelled samples".into()));
    }
    let data = Dataset::new(x, y)?;
    let chosen: Vec<usize> = match args.split {
        SplitArg::All => (0..data.len()).collect(),
        split => {
            let idx: Vec<usize> = (0..data.len()).collect();
            let tagged = Dataset::new(idx.iter().map(|&i| vec![i as f64]).collect(), data.y.clone())?;
            let (tr, te) = tagged.stratified_split(args.test_fraction, args.seed)?;
            let part = if split == SplitArg::Train { tr } else { te };
            part.x.iter().map(|r| r[0] as usize).collect()
        }
    };
    let subset = data.subset(&chosen);
    let pred = file.model.predict_all(&subset.x)?;
    let mut classes = subset.classes();
    classes.extend(pred.iter().copied());
    classes.sort_unstable();
    classes.dedup();
    let cm = confusion_matrix(&pred, &subset.y, &classes)?;
    let eval = EvalReport::from_confusion(&cm, None)?;
    create_dir(&args.out)?;
    write_confusion(&args.out, &eval)?;

    let mut rows = String::from("t_start,label,predicted\n");
    for (&i, &p) in chosen.iter().zip(&pred) {
        let s = labelled[i];
        let name = |c: usize| Terrain::from_index(c).map(|t| t.name()).unwrap_or("?");
        rows.push_str(&format!("{},{},{}\n", s.t_start, s.label.unwrap().name(), name(p)));
    }
    write_text(&args.out.join("predictions.csv"), &rows)?;
    write_json(
        &args.out.join("metrics.json"),
        &json!({
            "model": file.model.kind(),
            "split": format!("{:?}", args.split).to_lowercase(),
            "samples": subset.len(),
            "accuracy": eval.test_accuracy,
            "per_class_accuracy": per_class_json(&eval),
        }),
    )?;
    print!("{}", report::render_confusion_text(&eval));
    Ok(())
}

fn cm_to_m(cm: f64) -> Result<f64, Failure> {
    if !(cm >= 0.0 && cm.is_finite()) {
        return Err(Failure::Usage(format!("tolerance must be >= 0 cm, got {cm}")));
    }
    Ok(cm / 100.0)
}

pub fn drawbar(args: &DrawbarArgs) -> Outcome {
    let geometry = WheelGeometry {
        sensor_to_axle: args.sensor_to_axle,
        wheel_diameter: args.wheel_diameter,
    };
    geometry.validate()?;
    if args.tolerances.is_empty() {
        return Err(Failure::Usage("at least one tolerance is required".into()));
    }
    let tolerances = args.tolerances.iter().map(|&c| cm_to_m(c)).collect::<Result<Vec<_>, _>>()?;
    let filter_tol = cm_to_m(args.filter_tolerance.unwrap_or(args.tolerances[0]))?;
    let params = StableParams {
        min_duration: args.min_duration,
        max_std: args.max_std,
        rolling_window: args.rolling_window,
    };
    if !(args.eps_force > 0.0) {
        return Err(Failure::Usage("--eps-force must be > 0".into()));
    }

    let mut streams: Vec<_> = load_inputs(&args.input)?
        .into_iter()
        .filter(|s| s.sensor().kind() == SensorKind::Fts)
        .collect();
    if streams.is_empty() {
        return Err(Failure::Data("no force-torque streams among the inputs".into()));
    }
    streams.sort_by_key(|s| s.sensor().position());
    let series = streams
        .iter()
        .map(|s| LeverSeries::from_stream(s, args.eps_force))
        .collect::<Result<Vec<_>, _>>()?;

    create_dir(&args.out)?;
    let retention = retention_report(&series, &geometry, &tolerances, args.min_abs_fx)?;
    write_text(&args.out.join("retention.csv"), &report::render_retention_csv(&retention))?;
    write_text(&args.out.join("retention.txt"), &report::render_retention_text(&retention))?;

    let filter = LeverFilter {
        geometry,
        tolerance: filter_tol,
        min_abs_fx: args.min_abs_fx,
    };
    let mut intervals = Vec::new();
    for s in &series {
        let filtered = filter.apply(s);
        let name = s.wheel.name();
        with_file(&args.out.join(format!("lever_{name}.csv")), |w| write_lever_csv(&filtered, w))?;
        with_file(&args.out.join(format!("scatter_{name}_valid.csv")), |w| {
            write_scatter_csv(&filtered, true, w)
        })?;
        with_file(&args.out.join(format!("scatter_{name}_invalid.csv")), |w| {
            write_scatter_csv(&filtered, false, w)
        })?;
        let found = detect_stable_intervals(&filtered, &params)?;
        intervals.extend(drawbar_estimate(&filtered, &found).into_iter().map(|f| (s.wheel, f)));
    }
    write_text(&args.out.join("intervals.csv"), &report::render_intervals_csv(&intervals))?;
    write_text(&args.out.join("intervals.txt"), &report::render_intervals_text(&intervals))?;
    write_json(
        &args.out.join("drawbar.json"),
        &json!({
            "geometry": geometry,
            "l_min": geometry.l_min(),
            "l_max": geometry.l_max(),
            "eps_force": args.eps_force,
            "min_abs_fx": args.min_abs_fx,
            "tolerances_m": tolerances,
            "filter_tolerance_m": filter_tol,
            "stable": params,
            "retention_denominator": "all points, including those with undefined lever length",
        }),
    )?;
    print!("{}", report::render_retention_text(&retention));
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Outcome {
    let mut cfg = match &args.scenario {
        Some(p) => SynthConfig::load(p)?,
        None => SynthConfig {
            scenario: ScenarioSpec::four_class(args.seconds_per_class, 42),
            profiles: Vec::new(),
        },
    };
    if let Some(seed) = args.seed {
        cfg.scenario.seed = seed;
    }
    let mut profiles = cfg.resolved_profiles();
    for p in &mut profiles {
        if args.noiseless {
            *p = p.scaled_noise(0.0);
        }
        if let Some(l) = args.lever {
            p.lever = l;
        }
    }
    let out = generate(&cfg.scenario, &profiles)?;
    out.write_dir(&args.out)?;
    for s in &out.levers {
        with_file(&args.out.join(format!("truth_{}.csv", s.wheel.name())), |w| write_lever_csv(s, w))?;
    }
    let resolved = SynthConfig {
        scenario: cfg.scenario.clone(),
        profiles,
    };
    let text = toml::to_string(&resolved).map_err(|e| Failure::Data(e.to_string()))?;
    write_text(&args.out.join("scenario.toml"), &text)?;
    log::info!(
        "{} s over {} segments written to {}",
        cfg.scenario.duration(),
        cfg.scenario.segments.len(),
        args.out.display()
    );
    Ok(())
}

fn downsample(points: Vec<(f64, f64)>, max: usize) -> Vec<(f64, f64)> {
    let step = points.len().div_ceil(max).max(1);
    points.into_iter().step_by(step).collect()
}

pub fn report(args: &ReportArgs) -> Outcome {
    create_dir(&args.out)?;
    let mut text = String::new();
    for (i, dir) in args.inputs.iter().enumerate() {
        if !dir.is_dir() {
            return Err(Failure::Data(format!("{} is not a directory", dir.display())));
        }
        let tag = dir
            .file_name()
            .and_then(|n| n.to_str())
            .map(String::from)
            .unwrap_or_else(|| format!("run{i}"));
        text.push_str(&format!("== {} ==\n\n", dir.display()));
        let mut found = false;

        let conf = dir.join("confusion.csv");
        if conf.exists() {
            let r = report::parse_confusion_csv(&read_text(&conf)?).map_err(|e| annotate(e, &conf))?;
            text.push_str(&report::render_confusion_text(&r));
            text.push('\n');
            found = true;
        }
        for name in ["grid.txt", "timing.txt", "retention.txt", "intervals.txt"] {
            let p = dir.join(name);
            if p.exists() {
                text.push_str(&read_text(&p)?);
                text.push('\n');
                found = true;
            }
        }
        let curve_path = dir.join("learning_curve.csv");
        if curve_path.exists() {
            let curve = report::parse_learning_curve_csv(&read_text(&curve_path)?).map_err(|e| annotate(e, &curve_path))?;
            let series = |name: &str, f: fn(&mlp::EpochStats) -> f64| {
                Series::new(name, curve.iter().map(|e| (e.epoch as f64, f(e))).collect())
            };
            let loss = report::svg_line_chart(
                "Loss",
                "epoch",
                "cross-entropy",
                &[series("train", |e| e.train_loss), series("test", |e| e.test_loss)],
                &[],
            );
            let acc = report::svg_line_chart(
                "Accuracy",
                "epoch",
                "accuracy",
                &[series("train", |e| e.train_acc), series("test", |e| e.test_acc)],
                &[],
            );
            write_text(&args.out.join(format!("{tag}_loss.svg")), &loss)?;
            write_text(&args.out.join(format!("{tag}_accuracy.svg")), &acc)?;
            found = true;
        }
        let (l_min, l_max) = {
            let p = dir.join("drawbar.json");
            if p.exists() {
                let v: serde_json::Value =
                    serde_json::from_str(&read_text(&p)?).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?;
                (v["l_min"].as_f64(), v["l_max"].as_f64())
            } else {
                let g = WheelGeometry::default();
                (Some(g.l_min()), Some(g.l_max()))
            }
        };
        for wheel in Position::WHEELS {
            let p = dir.join(format!("lever_{}.csv", wheel.name()));
            if !p.exists() {
                continue;
            }
            let f = File::open(&p).map_err(|e| Error::io(&p, e))?;
            let s = read_lever_csv(wheel, std::io::BufReader::new(f)).map_err(|e| annotate(e, &p))?;
            let valid = s.points.iter().filter(|q| q.valid).filter_map(|q| q.lever.map(|l| (q.t, l))).collect();
            let all = s.points.iter().filter_map(|q| q.lever.map(|l| (q.t, l))).collect();
            let chart = report::svg_line_chart(
                &format!("Lever length {}", wheel.label()),
                "t [s]",
                "L [m]",
                &[Series::new("all", downsample(all, 4000)), Series::new("valid", downsample(valid, 4000))],
                &[l_min, l_max].into_iter().flatten().collect::<Vec<_>>(),
            );
            write_text(&args.out.join(format!("{tag}_lever_{}.svg", wheel.name())), &chart)?;
            found = true;
        }
        if !found {
            log::warn!("nothing to report in {}", dir.display());
        }
    }
    write_text(&args.out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}
