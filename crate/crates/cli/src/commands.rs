use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use mibwatch_core::chart::{
    alarms_to_csv, flags_to_csv, parse_flags_csv, stream_detect, BaselineUpdate, WindowConfig,
};
use mibwatch_core::metrics::{confusion_from_flags, error_report, WindowLabel};
use mibwatch_core::mib::{Dataset, MibVariable, Scaler, VARIABLE_COUNT};
use mibwatch_core::nnarx::{
    build_regressors_segments, residuals, LagConfig, Network, RegressionSet, TrainConfig,
};
use mibwatch_core::sim::{gen_scenario, ScenarioConfig, PRESET_NAMES};
use mibwatch_core::Error as CoreError;

/// Command failure with its exit code class.
#[derive(Debug)]
pub enum CmdError {
    /// Exit 2: bad usage, configuration, or input format.
    Usage(String),
    /// Exit 3: filesystem failures.
    Io(String),
    /// Exit 4: numeric failures.
    Numeric(String),
}

impl CmdError {
    pub fn code(&self) -> u8 {
        match self {
            CmdError::Usage(_) => 2,
            CmdError::Io(_) => 3,
            CmdError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Usage(m) | CmdError::Io(m) | CmdError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<CoreError> for CmdError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Divergence { .. } | CoreError::MmreUndefined => {
                CmdError::Numeric(e.to_string())
            }
            other => CmdError::Usage(other.to_string()),
        }
    }
}

/// What a successful command reports back for the manifest.
pub struct RunOutcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub settings: serde_json::Value,
}

fn read_text(path: &Path) -> Result<String, CmdError> {
    fs::read_to_string(path).map_err(|e| CmdError::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CmdError> {
    fs::write(path, text).map_err(|e| CmdError::Io(format!("cannot write {}: {e}", path.display())))
}

fn parse_variable(name: &str) -> Result<MibVariable, CmdError> {
    MibVariable::from_name(name).map_err(CmdError::from)
}

/// Parses a dataset CSV and converts the cumulative counters to deltas.
fn load_deltas(path: &Path) -> Result<Dataset, CmdError> {
    let raw = Dataset::parse(&read_text(path)?)?;
    Ok(raw.counter_deltas()?)
}

pub fn simulate(
    preset: Option<&str>,
    config: Option<&Path>,
    out: &Path,
    seed_override: Option<u64>,
    quiet: bool,
) -> Result<RunOutcome, CmdError> {
    let mut cfg = match (preset, config) {
        (Some(name), None) => ScenarioConfig::preset(name).ok_or_else(|| {
            CmdError::Usage(format!(
                "unknown preset {name:?}; bundled presets: {}",
                PRESET_NAMES.join(", ")
            ))
        })?,
        (None, Some(path)) => ScenarioConfig::parse(&read_text(path)?)?,
        _ => {
            return Err(CmdError::Usage(
                "simulate needs exactly one of --preset or --config".to_string(),
            ))
        }
    };
    if let Some(seed) = seed_override {
        cfg.baseline.seed = seed;
    }

    let deltas = gen_scenario(&cfg)?;
    // Emit what a poller would have written: cumulative counters.
    let cumulative = deltas.accumulate([0; VARIABLE_COUNT])?;
    write_text(out, &cumulative.to_csv())?;

    if !quiet {
        let attacks: usize = cfg.attacks.iter().map(|a| a.duration).sum();
        println!(
            "wrote {} records ({} samples, {} attack) to {}",
            cumulative.len(),
            cfg.length,
            attacks,
            out.display()
        );
    }
    Ok(RunOutcome {
        inputs: config.map(Path::to_path_buf).into_iter().collect(),
        outputs: vec![out.to_path_buf()],
        seed: Some(cfg.baseline.seed),
        settings: json!({
            "preset": preset,
            "length": cfg.length,
            "episodes": cfg.attacks.len(),
        }),
    })
}

pub struct TrainArgs<'a> {
    pub data: &'a Path,
    pub out: &'a Path,
    pub target: &'a str,
    pub na: usize,
    pub nb: usize,
    pub nk: usize,
    pub exogenous: Option<&'a str>,
    pub iterations: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub init_scale: f64,
    pub split: f64,
    pub seed: u64,
    pub quiet: bool,
}

fn print_report_table(train: &ReportColumn, test: &ReportColumn) {
    println!("{:<10}{:>18}{:>18}", "criteria", "training", "testing");
    println!("{:<10}{:>18}{:>18}", "samples", train.n, test.n);
    for (name, a, b) in [
        ("MSE", train.mse, test.mse),
        ("MD", train.md, test.md),
        ("ED", train.ed, test.ed),
        ("MMRE", train.mmre, test.mmre),
    ] {
        println!("{:<10}{:>18}{:>18}", name, fmt_metric(a), fmt_metric(b));
    }
}

struct ReportColumn {
    n: usize,
    mse: Option<f64>,
    ed: Option<f64>,
    md: Option<f64>,
    mmre: Option<f64>,
}

impl ReportColumn {
    fn empty() -> Self {
        ReportColumn {
            n: 0,
            mse: None,
            ed: None,
            md: None,
            mmre: None,
        }
    }
}

fn fmt_metric(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.8e}"),
        None => "n/a".to_string(),
    }
}

fn report_column(net: &Network, set: &RegressionSet) -> Result<ReportColumn, CmdError> {
    if set.is_empty() {
        return Ok(ReportColumn::empty());
    }
    let predicted: Vec<f64> = set
        .inputs
        .iter()
        .map(|row| net.forward(row).map_err(CmdError::from))
        .collect::<Result<_, _>>()?;
    let report = error_report(&set.targets, &predicted)?;
    Ok(ReportColumn {
        n: report.n,
        mse: Some(report.mse),
        ed: Some(report.ed),
        md: Some(report.md),
        mmre: Some(report.mmre),
    })
}

fn split_rows(set: RegressionSet, split: f64) -> (RegressionSet, RegressionSet) {
    let n = set.len();
    let n_train = ((n as f64 * split).round() as usize).clamp(1, n);
    let test = RegressionSet {
        inputs: set.inputs[n_train..].to_vec(),
        targets: set.targets[n_train..].to_vec(),
        timestamps: set.timestamps[n_train..].to_vec(),
    };
    let train = RegressionSet {
        inputs: set.inputs[..n_train].to_vec(),
        targets: set.targets[..n_train].to_vec(),
        timestamps: set.timestamps[..n_train].to_vec(),
    };
    (train, test)
}

pub fn train(args: TrainArgs<'_>) -> Result<RunOutcome, CmdError> {
    if !(args.split > 0.0 && args.split <= 1.0) {
        return Err(CmdError::Usage(format!(
            "--split must be in (0, 1], got {}",
            args.split
        )));
    }
    let target = parse_variable(args.target)?;
    let lag = LagConfig {
        na: args.na,
        nb: args.nb,
        nk: args.nk,
        exogenous: args.exogenous.map(parse_variable).transpose()?,
    };
    lag.validate()?;
    let train_cfg = TrainConfig {
        iterations: args.iterations,
        learning_rate: args.learning_rate,
        momentum: args.momentum,
        seed: args.seed,
        init_scale: args.init_scale,
    };
    train_cfg.validate()?;

    let deltas = load_deltas(args.data)?;
    let segments = deltas.normal_segments();
    if segments.is_empty() {
        return Err(CmdError::Usage(
            "dataset has no Normal-labeled records to train on".to_string(),
        ));
    }
    let scaler = Scaler::fit_segments(&segments)?;
    let rows = build_regressors_segments(&segments, target, &lag, &scaler)?;
    let (train_rows, test_rows) = split_rows(rows, args.split);

    let net = Network::init(lag, scaler, train_cfg.seed, train_cfg.init_scale)?;
    let outcome = net.train(&train_rows, &train_cfg)?;
    let trained = outcome.network;

    write_text(args.out, &trained.to_text())?;

    if !args.quiet {
        let train_col = report_column(&trained, &train_rows)?;
        let test_col = report_column(&trained, &test_rows)?;
        print_report_table(&train_col, &test_col);
        println!("model written to {}", args.out.display());
    }

    Ok(RunOutcome {
        inputs: vec![args.data.to_path_buf()],
        outputs: vec![args.out.to_path_buf()],
        seed: Some(train_cfg.seed),
        settings: json!({
            "target": args.target,
            "na": args.na,
            "nb": args.nb,
            "nk": args.nk,
            "exogenous": args.exogenous,
            "iterations": args.iterations,
            "learning_rate": args.learning_rate,
            "momentum": args.momentum,
            "init_scale": args.init_scale,
            "split": args.split,
        }),
    })
}

pub struct DetectArgs<'a> {
    pub data: &'a Path,
    pub model: &'a Path,
    pub target: &'a str,
    pub k: f64,
    pub window_size: usize,
    pub baseline_update: &'a str,
    pub alarms_out: &'a Path,
    pub flags_out: &'a Path,
    pub quiet: bool,
}

pub fn detect(args: DetectArgs<'_>) -> Result<RunOutcome, CmdError> {
    let target = parse_variable(args.target)?;
    let baseline_update = BaselineUpdate::parse(args.baseline_update)?;
    let cfg = WindowConfig {
        window_size: args.window_size,
        k: args.k,
        baseline_update,
        ..WindowConfig::default()
    };

    let deltas = load_deltas(args.data)?;
    let net = Network::from_text(&read_text(args.model)?)?;

    let predictions = net.predict_series(&deltas, target)?;
    let observed = deltas.series(target);
    let observed_tail = &observed[observed.len() - predictions.len()..];
    let resid = residuals(observed_tail, &predictions)?;
    let outcome = stream_detect(&resid, &cfg)?;

    write_text(args.alarms_out, &alarms_to_csv(&outcome.alarms))?;
    write_text(args.flags_out, &flags_to_csv(&outcome.windows))?;

    if !args.quiet {
        println!(
            "tested {} windows: {} flagged, {} alarms; wrote {} and {}",
            outcome.windows.len(),
            outcome.flagged_count(),
            outcome.alarms.len(),
            args.alarms_out.display(),
            args.flags_out.display()
        );
    }

    Ok(RunOutcome {
        inputs: vec![args.data.to_path_buf(), args.model.to_path_buf()],
        outputs: vec![args.alarms_out.to_path_buf(), args.flags_out.to_path_buf()],
        seed: None,
        settings: json!({
            "target": args.target,
            "k": args.k,
            "window_size": args.window_size,
            "baseline_update": args.baseline_update,
        }),
    })
}

fn fmt_rate(rate: Result<f64, CoreError>) -> String {
    match rate {
        Ok(r) => format!("{:.1}%", 100.0 * r),
        Err(_) => "n/a".to_string(),
    }
}

pub fn evaluate(flags_path: &Path, data_path: &Path, quiet: bool) -> Result<RunOutcome, CmdError> {
    let windows = parse_flags_csv(&read_text(flags_path)?)?;
    if windows.is_empty() {
        return Err(CmdError::Usage("flag file contains no windows".to_string()));
    }
    let data = Dataset::parse(&read_text(data_path)?)?;

    let mut labels = Vec::with_capacity(windows.len());
    for w in &windows {
        let in_window: Vec<_> = data
            .records()
            .iter()
            .filter(|r| r.timestamp >= w.start_timestamp && r.timestamp <= w.end_timestamp)
            .collect();
        if in_window.is_empty() {
            return Err(CmdError::Usage(format!(
                "window {} ({}..{}) aligns with no dataset records",
                w.window_index, w.start_timestamp, w.end_timestamp
            )));
        }
        labels.push(if in_window.iter().any(|r| r.label.is_attack()) {
            WindowLabel::Attack
        } else {
            WindowLabel::Normal
        });
    }

    let flags: Vec<_> = windows.iter().map(|w| w.flag).collect();
    let cm = confusion_from_flags(&labels, &flags)?;

    if !quiet {
        println!(
            "{:<16}{:>18}{:>20}",
            "", "predicted attack", "predicted normal"
        );
        println!(
            "{:<16}{:>18}{:>20}",
            "actual attack", cm.true_positives, cm.false_negatives
        );
        println!(
            "{:<16}{:>18}{:>20}",
            "actual normal", cm.false_positives, cm.true_negatives
        );
        println!();
        println!("sensitivity  {}", fmt_rate(cm.sensitivity()));
        println!("specificity  {}", fmt_rate(cm.specificity()));
        println!("accuracy     {}", fmt_rate(cm.accuracy()));
    }

    Ok(RunOutcome {
        inputs: vec![flags_path.to_path_buf(), data_path.to_path_buf()],
        outputs: Vec::new(),
        seed: None,
        settings: json!({
            "windows": windows.len(),
            "tp": cm.true_positives,
            "fp": cm.false_positives,
            "tn": cm.true_negatives,
            "fn": cm.false_negatives,
        }),
    })
}
