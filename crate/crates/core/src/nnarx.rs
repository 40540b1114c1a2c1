//! One-step-ahead traffic prediction with a small sigmoid MLP.
//!
//! The regressor for time t stacks lagged target values (and optionally
//! lagged values of one exogenous variable), scaled to `[0, 1]`. The
//! network is a single hidden layer of seven sigmoid units feeding one
//! linear output, trained by full-batch backpropagation with momentum on
//! the mean squared error.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mib::{CounterMode, Dataset, MibVariable, Scaler};

/// Hidden layer width.
pub const HIDDEN_WIDTH: usize = 7;

/// Default regressor width (eight lagged target values).
pub const DEFAULT_INPUT_WIDTH: usize = 8;

const MODEL_HEADER: &str = "NNARX v1";

/// The logistic sigmoid `1 / (1 + e^(-beta * x))`.
///
/// The output is clamped to stay strictly inside `(0, 1)` even where the
/// exponential saturates.
pub fn sigmoid(x: f64, beta: f64) -> f64 {
    let y = 1.0 / (1.0 + (-beta * x).exp());
    y.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Lag structure of the regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LagConfig {
    /// How many past target values feed the regressor.
    pub na: usize,
    /// How many past exogenous values feed the regressor.
    pub nb: usize,
    /// Input delay applied to the exogenous variable.
    pub nk: usize,
    /// The exogenous variable; required when `nb > 0`.
    pub exogenous: Option<MibVariable>,
}

impl Default for LagConfig {
    /// Pure autoregression on the target: eight lags, no exogenous input.
    fn default() -> Self {
        LagConfig {
            na: DEFAULT_INPUT_WIDTH,
            nb: 0,
            nk: 1,
            exogenous: None,
        }
    }
}

impl LagConfig {
    pub fn validate(&self) -> Result<()> {
        if self.na < 1 {
            return Err(Error::InvalidConfig {
                reason: "na must be at least 1".to_string(),
            });
        }
        if self.nk < 1 {
            return Err(Error::InvalidConfig {
                reason: "nk must be at least 1".to_string(),
            });
        }
        if self.nb > 0 && self.exogenous.is_none() {
            return Err(Error::InvalidConfig {
                reason: "nb > 0 requires an exogenous variable".to_string(),
            });
        }
        Ok(())
    }

    /// Width of the regressor rows this lag structure produces.
    pub fn input_width(&self) -> usize {
        self.na + self.nb
    }

    /// Index of the earliest sample that can serve as a target.
    pub fn first_target_index(&self) -> usize {
        self.na.max(self.nb + self.nk - 1)
    }
}

/// Lagged, scaled regression rows with their targets and timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSet {
    /// Row-major inputs, one row per target.
    pub inputs: Vec<Vec<f64>>,
    /// Scaled target values, aligned with `inputs`.
    pub targets: Vec<f64>,
    /// Source timestamp of each target.
    pub timestamps: Vec<i64>,
}

impl RegressionSet {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Builds regression rows from a delta-mode series.
///
/// Row t holds `[y(t-1) .. y(t-na), u(t-nk) .. u(t-nk-nb+1)]` scaled to
/// `[0, 1]` and clipped there, so out-of-range values (an attack surge seen
/// at prediction time) cannot push the hidden layer outside its trained
/// domain. The target is the scaled `y(t)`; only strictly earlier samples
/// ever enter a row.
pub fn build_regressors(
    series: &Dataset,
    target: MibVariable,
    lag: &LagConfig,
    scaler: &Scaler,
) -> Result<RegressionSet> {
    lag.validate()?;
    if series.mode() != CounterMode::Delta {
        return Err(Error::WrongMode {
            expected: "delta",
            found: "cumulative",
        });
    }
    let first = lag.first_target_index();
    if series.len() <= first {
        return Err(Error::InsufficientData {
            needed: first + 1,
            got: series.len(),
        });
    }

    let y: Vec<f64> = series
        .values(target)
        .iter()
        .map(|v| scaler.scale(target, *v))
        .collect();
    let exo: Option<Vec<f64>> = lag.exogenous.map(|var| {
        series
            .values(var)
            .iter()
            .map(|v| scaler.scale(var, *v))
            .collect()
    });

    let mut inputs = Vec::with_capacity(series.len() - first);
    let mut targets = Vec::with_capacity(series.len() - first);
    let mut timestamps = Vec::with_capacity(series.len() - first);
    for t in first..series.len() {
        let mut row = Vec::with_capacity(lag.input_width());
        for j in 1..=lag.na {
            row.push(y[t - j].clamp(0.0, 1.0));
        }
        if let Some(u) = &exo {
            for j in 0..lag.nb {
                row.push(u[t - lag.nk - j].clamp(0.0, 1.0));
            }
        }
        inputs.push(row);
        targets.push(y[t]);
        timestamps.push(series.records()[t].timestamp);
    }
    Ok(RegressionSet {
        inputs,
        targets,
        timestamps,
    })
}

/// Builds one regression set across several delta-mode segments, skipping
/// segments too short for the lag structure. Rows never straddle a segment
/// boundary, so excluded records cannot leak into any regressor.
pub fn build_regressors_segments(
    segments: &[Dataset],
    target: MibVariable,
    lag: &LagConfig,
    scaler: &Scaler,
) -> Result<RegressionSet> {
    let mut combined = RegressionSet {
        inputs: Vec::new(),
        targets: Vec::new(),
        timestamps: Vec::new(),
    };
    for seg in segments {
        match build_regressors(seg, target, lag, scaler) {
            Ok(mut set) => {
                combined.inputs.append(&mut set.inputs);
                combined.targets.append(&mut set.targets);
                combined.timestamps.append(&mut set.timestamps);
            }
            Err(Error::InsufficientData { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    if combined.is_empty() {
        return Err(Error::InsufficientData {
            needed: lag.first_target_index() + 1,
            got: segments.iter().map(Dataset::len).max().unwrap_or(0),
        });
    }
    Ok(combined)
}

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Full-batch gradient descent epochs.
    pub iterations: usize,
    pub learning_rate: f64,
    /// Heavy-ball momentum in `[0, 1)`.
    pub momentum: f64,
    /// Seed for weight initialization.
    pub seed: u64,
    /// Weights start uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 1000,
            learning_rate: 0.05,
            momentum: 0.9,
            seed: 42,
            init_scale: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::InvalidConfig {
                reason: "iterations must be at least 1".to_string(),
            });
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig {
                reason: format!("learning rate must be positive, got {}", self.learning_rate),
            });
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig {
                reason: format!("momentum must be in [0, 1), got {}", self.momentum),
            });
        }
        if !self.init_scale.is_finite() || self.init_scale <= 0.0 {
            return Err(Error::InvalidConfig {
                reason: format!("init scale must be positive, got {}", self.init_scale),
            });
        }
        Ok(())
    }
}

/// The predictor: one hidden layer of sigmoid units, one linear output,
/// plus the lag structure and scaler it was fitted with.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    /// Hidden weights, `HIDDEN_WIDTH` rows of `input_width` values.
    pub w1: Vec<Vec<f64>>,
    /// Hidden biases.
    pub b1: Vec<f64>,
    /// Output weights, one per hidden unit.
    pub w2: Vec<f64>,
    /// Output bias.
    pub b2: f64,
    /// Sigmoid slope.
    pub beta: f64,
    pub lag: LagConfig,
    pub scaler: Scaler,
}

/// Parameter-shaped gradient (or velocity) buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl Gradients {
    fn zeros(input_width: usize) -> Self {
        Gradients {
            w1: vec![vec![0.0; input_width]; HIDDEN_WIDTH],
            b1: vec![0.0; HIDDEN_WIDTH],
            w2: vec![0.0; HIDDEN_WIDTH],
            b2: 0.0,
        }
    }
}

/// A trained network and its per-epoch loss trace.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: Network,
    /// MSE at the start of each epoch, one entry per epoch.
    pub loss_history: Vec<f64>,
}

impl Network {
    /// Fresh network with every parameter drawn uniformly from
    /// `[-init_scale, init_scale]`, deterministically from `seed`.
    pub fn init(lag: LagConfig, scaler: Scaler, seed: u64, init_scale: f64) -> Result<Network> {
        lag.validate()?;
        if !init_scale.is_finite() || init_scale <= 0.0 {
            return Err(Error::InvalidConfig {
                reason: format!("init scale must be positive, got {init_scale}"),
            });
        }
        let width = lag.input_width();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut ChaCha8Rng| rng.random_range(-init_scale..init_scale);
        let w1 = (0..HIDDEN_WIDTH)
            .map(|_| (0..width).map(|_| draw(&mut rng)).collect())
            .collect();
        let b1 = (0..HIDDEN_WIDTH).map(|_| draw(&mut rng)).collect();
        let w2 = (0..HIDDEN_WIDTH).map(|_| draw(&mut rng)).collect();
        let b2 = draw(&mut rng);
        Ok(Network {
            w1,
            b1,
            w2,
            b2,
            beta: 1.0,
            lag,
            scaler,
        })
    }

    pub fn input_width(&self) -> usize {
        self.lag.input_width()
    }

    fn hidden_activations(&self, input: &[f64], out: &mut [f64; HIDDEN_WIDTH]) {
        for (j, h) in out.iter_mut().enumerate() {
            let mut z = self.b1[j];
            for (w, x) in self.w1[j].iter().zip(input) {
                z += w * x;
            }
            *h = sigmoid(z, self.beta);
        }
    }

    /// Single forward pass: sigmoid hidden layer, linear output.
    pub fn forward(&self, input: &[f64]) -> Result<f64> {
        if input.len() != self.input_width() {
            return Err(Error::Dimension {
                expected: self.input_width(),
                got: input.len(),
            });
        }
        let mut hidden = [0.0; HIDDEN_WIDTH];
        self.hidden_activations(input, &mut hidden);
        let mut out = self.b2;
        for (w, h) in self.w2.iter().zip(hidden) {
            out += w * h;
        }
        Ok(out)
    }

    fn check_data(&self, data: &RegressionSet) -> Result<()> {
        if data.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        for row in &data.inputs {
            if row.len() != self.input_width() {
                return Err(Error::Dimension {
                    expected: self.input_width(),
                    got: row.len(),
                });
            }
        }
        Ok(())
    }

    /// Mean squared error over a regression set.
    pub fn loss(&self, data: &RegressionSet) -> Result<f64> {
        self.check_data(data)?;
        Ok(self.loss_and_gradients(data).0)
    }

    /// Analytic loss gradient, for training and for checking against
    /// finite differences.
    pub fn gradients(&self, data: &RegressionSet) -> Result<Gradients> {
        self.check_data(data)?;
        Ok(self.loss_and_gradients(data).1)
    }

    fn loss_and_gradients(&self, data: &RegressionSet) -> (f64, Gradients) {
        let n = data.len() as f64;
        let mut grads = Gradients::zeros(self.input_width());
        let mut loss = 0.0;
        let mut hidden = [0.0; HIDDEN_WIDTH];
        for (row, &y) in data.inputs.iter().zip(&data.targets) {
            self.hidden_activations(row, &mut hidden);
            let mut out = self.b2;
            for (w, h) in self.w2.iter().zip(hidden) {
                out += w * h;
            }
            let err = out - y;
            loss += err * err;
            let g_out = 2.0 * err / n;
            grads.b2 += g_out;
            for j in 0..HIDDEN_WIDTH {
                let h = hidden[j];
                grads.w2[j] += g_out * h;
                let g_z = g_out * self.w2[j] * self.beta * h * (1.0 - h);
                grads.b1[j] += g_z;
                for (slot, x) in grads.w1[j].iter_mut().zip(row) {
                    *slot += g_z * x;
                }
            }
        }
        (loss / n, grads)
    }

    /// Runs full-batch gradient descent with momentum for
    /// `cfg.iterations` epochs and returns the trained network with its
    /// loss trace. Deterministic for a fixed starting network and config.
    ///
    /// A non-finite loss aborts with a divergence error naming the epoch;
    /// the history is never poisoned with non-finite entries.
    pub fn train(&self, data: &RegressionSet, cfg: &TrainConfig) -> Result<TrainOutcome> {
        cfg.validate()?;
        self.check_data(data)?;
        let mut net = self.clone();
        let mut velocity = Gradients::zeros(self.input_width());
        let mut history = Vec::with_capacity(cfg.iterations);
        for epoch in 0..cfg.iterations {
            let (loss, grads) = net.loss_and_gradients(data);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            history.push(loss);
            for j in 0..HIDDEN_WIDTH {
                for i in 0..net.w1[j].len() {
                    velocity.w1[j][i] =
                        cfg.momentum * velocity.w1[j][i] - cfg.learning_rate * grads.w1[j][i];
                    net.w1[j][i] += velocity.w1[j][i];
                }
                velocity.b1[j] = cfg.momentum * velocity.b1[j] - cfg.learning_rate * grads.b1[j];
                net.b1[j] += velocity.b1[j];
                velocity.w2[j] = cfg.momentum * velocity.w2[j] - cfg.learning_rate * grads.w2[j];
                net.w2[j] += velocity.w2[j];
            }
            velocity.b2 = cfg.momentum * velocity.b2 - cfg.learning_rate * grads.b2;
            net.b2 += velocity.b2;
        }
        if !net.is_finite() {
            return Err(Error::Divergence {
                epoch: cfg.iterations,
            });
        }
        Ok(TrainOutcome {
            network: net,
            loss_history: history,
        })
    }

    fn is_finite(&self) -> bool {
        self.w1.iter().flatten().all(|w| w.is_finite())
            && self.b1.iter().all(|b| b.is_finite())
            && self.w2.iter().all(|w| w.is_finite())
            && self.b2.is_finite()
    }

    /// One-step-ahead predictions over a delta-mode series, in original
    /// (unscaled) units, aligned to the source timestamps.
    pub fn predict_series(
        &self,
        series: &Dataset,
        target: MibVariable,
    ) -> Result<Vec<(i64, f64)>> {
        let set = build_regressors(series, target, &self.lag, &self.scaler)?;
        let mut out = Vec::with_capacity(set.len());
        for (row, ts) in set.inputs.iter().zip(&set.timestamps) {
            let scaled = self.forward(row)?;
            out.push((*ts, self.scaler.unscale(target, scaled)));
        }
        Ok(out)
    }

    /// Serializes to the versioned plain-text model format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MODEL_HEADER}");
        let _ = writeln!(out, "dims {} {} 1", self.input_width(), HIDDEN_WIDTH);
        let _ = writeln!(out, "beta {:.17e}", self.beta);
        let exo = self.lag.exogenous.map_or("-", |v| v.name());
        let _ = writeln!(
            out,
            "lags {} {} {} {}",
            self.lag.na, self.lag.nb, self.lag.nk, exo
        );
        for var in MibVariable::ALL {
            let (min, max) = self.scaler.range(var);
            let _ = writeln!(out, "scaler {} {:.17e} {:.17e}", var.name(), min, max);
        }
        for row in &self.w1 {
            let _ = writeln!(out, "{}", join_floats(row));
        }
        let _ = writeln!(out, "{}", join_floats(&self.b1));
        let _ = writeln!(out, "{}", join_floats(&self.w2));
        let _ = writeln!(out, "{:.17e}", self.b2);
        out
    }

    /// Parses the plain-text model format, naming the offending field on
    /// any failure.
    pub fn from_text(text: &str) -> Result<Network> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut next = |field: &str| {
            lines.next().ok_or_else(|| Error::ModelFormat {
                field: format!("missing {field}"),
            })
        };

        let header = next("header")?;
        if header.trim() != MODEL_HEADER {
            if let Some(version) = header.trim().strip_prefix("NNARX ") {
                return Err(Error::UnsupportedModelVersion {
                    found: version.to_string(),
                });
            }
            return Err(Error::ModelFormat {
                field: "header".to_string(),
            });
        }

        let dims_line = next("dims")?;
        let dims = parse_prefixed_floats(dims_line, "dims", 3)?;
        let (input_width, hidden, output) = (dims[0] as usize, dims[1] as usize, dims[2] as usize);
        if hidden != HIDDEN_WIDTH || output != 1 || input_width == 0 {
            return Err(Error::ModelFormat {
                field: format!("dims {input_width} {hidden} {output}"),
            });
        }

        let beta = parse_prefixed_floats(next("beta")?, "beta", 1)?[0];
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::ModelFormat {
                field: "beta".to_string(),
            });
        }

        let lags_line = next("lags")?;
        let parts: Vec<&str> = lags_line.split_whitespace().collect();
        if parts.len() != 5 || parts[0] != "lags" {
            return Err(Error::ModelFormat {
                field: "lags".to_string(),
            });
        }
        let parse_lag = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::ModelFormat {
                field: format!("lags value {s:?}"),
            })
        };
        let lag = LagConfig {
            na: parse_lag(parts[1])?,
            nb: parse_lag(parts[2])?,
            nk: parse_lag(parts[3])?,
            exogenous: match parts[4] {
                "-" => None,
                name => Some(MibVariable::from_name(name)?),
            },
        };
        lag.validate()?;
        if lag.input_width() != input_width {
            return Err(Error::ModelFormat {
                field: format!(
                    "dims: input width {} does not match lag structure {}",
                    input_width,
                    lag.input_width()
                ),
            });
        }

        let mut ranges = [(0.0, 0.0); crate::mib::VARIABLE_COUNT];
        for var in MibVariable::ALL {
            let field = format!("scaler {}", var.name());
            let line = next(&field)?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "scaler" || parts[1] != var.name() {
                return Err(Error::ModelFormat { field });
            }
            let min = parse_float(parts[2], &field)?;
            let max = parse_float(parts[3], &field)?;
            ranges[var.index()] = (min, max);
        }
        let scaler = Scaler::from_ranges(ranges)?;

        let mut w1 = Vec::with_capacity(HIDDEN_WIDTH);
        for j in 0..HIDDEN_WIDTH {
            let field = format!("w1 row {j}");
            w1.push(parse_floats(next(&field)?, &field, input_width)?);
        }
        let b1 = parse_floats(next("b1")?, "b1", HIDDEN_WIDTH)?;
        let w2 = parse_floats(next("w2")?, "w2", HIDDEN_WIDTH)?;
        let b2 = parse_floats(next("b2")?, "b2", 1)?[0];
        if lines.next().is_some() {
            return Err(Error::ModelFormat {
                field: "unexpected trailing content".to_string(),
            });
        }

        let net = Network {
            w1,
            b1,
            w2,
            b2,
            beta,
            lag,
            scaler,
        };
        if !net.is_finite() {
            return Err(Error::ModelFormat {
                field: "non-finite weight".to_string(),
            });
        }
        Ok(net)
    }
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.17e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_float(s: &str, field: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::ModelFormat {
        field: format!("{field}: bad number {s:?}"),
    })
}

fn parse_floats(line: &str, field: &str, expected: usize) -> Result<Vec<f64>> {
    let values: Vec<f64> = line
        .split_whitespace()
        .map(|s| parse_float(s, field))
        .collect::<Result<_>>()?;
    if values.len() != expected {
        return Err(Error::ModelFormat {
            field: format!("{field}: expected {expected} values, got {}", values.len()),
        });
    }
    Ok(values)
}

fn parse_prefixed_floats(line: &str, prefix: &str, expected: usize) -> Result<Vec<f64>> {
    let rest = line.strip_prefix(prefix).ok_or_else(|| Error::ModelFormat {
        field: prefix.to_string(),
    })?;
    parse_floats(rest, prefix, expected)
}

/// Element-wise observed minus predicted over timestamp-aligned series.
pub fn residuals(observed: &[(i64, f64)], predicted: &[(i64, f64)]) -> Result<Vec<(i64, f64)>> {
    if observed.len() != predicted.len() {
        return Err(Error::Dimension {
            expected: observed.len(),
            got: predicted.len(),
        });
    }
    observed
        .iter()
        .zip(predicted)
        .enumerate()
        .map(|(index, ((t_obs, obs), (t_pred, pred)))| {
            if t_obs != t_pred {
                return Err(Error::MisalignedSeries { index });
            }
            Ok((*t_obs, obs - pred))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mib::{MibRecord, TrafficClass, VARIABLE_COUNT};
    use crate::sim::{gen_normal, BaselineParams};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn identity_scaler() -> Scaler {
        Scaler::from_ranges([(0.0, 1.0); VARIABLE_COUNT]).unwrap()
    }

    fn zero_network(width: usize) -> Network {
        Network {
            w1: vec![vec![0.0; width]; HIDDEN_WIDTH],
            b1: vec![0.0; HIDDEN_WIDTH],
            w2: vec![0.0; HIDDEN_WIDTH],
            b2: 0.0,
            beta: 1.0,
            lag: LagConfig {
                na: width,
                ..LagConfig::default()
            },
            scaler: identity_scaler(),
        }
    }

    fn random_set(net: &Network, rows: usize, seed: u64) -> RegressionSet {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let width = net.input_width();
        RegressionSet {
            inputs: (0..rows)
                .map(|_| (0..width).map(|_| rng.random_range(0.0..1.0)).collect())
                .collect(),
            targets: (0..rows).map(|_| rng.random_range(0.0..1.0)).collect(),
            timestamps: (0..rows as i64).map(|i| 15 * i).collect(),
        }
    }

    fn delta_column(var: MibVariable, values: &[u64]) -> Dataset {
        let records = values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut counters = [0u64; VARIABLE_COUNT];
                counters[var.index()] = *v;
                MibRecord {
                    timestamp: 15 * i as i64,
                    counters,
                    label: TrafficClass::Normal,
                }
            })
            .collect();
        Dataset::new(records, CounterMode::Delta).unwrap()
    }

    #[test]
    fn sigmoid_fixed_points() {
        assert_eq!(sigmoid(0.0, 1.0), 0.5);
        assert_relative_eq!(sigmoid(1.0, 1.0), 0.7310585786300049, max_relative = 1e-12);
    }

    #[test]
    fn sigmoid_stays_strictly_inside_unit_interval() {
        for x in [-1e9, -50.0, 0.0, 50.0, 1e9] {
            let y = sigmoid(x, 1.0);
            assert!(y > 0.0 && y < 1.0, "sigmoid({x}) = {y}");
        }
    }

    #[test]
    fn forward_zero_network_outputs_zero() {
        let net = zero_network(8);
        // Zero pre-activations put every hidden unit at 1/2; the zero output
        // layer collapses that to 0.
        assert_eq!(net.forward(&[0.25; 8]).unwrap(), 0.0);
    }

    #[test]
    fn forward_constant_head() {
        let mut net = Network::init(LagConfig::default(), identity_scaler(), 5, 0.5).unwrap();
        net.w2 = vec![0.0; HIDDEN_WIDTH];
        net.b2 = 3.25;
        assert_eq!(net.forward(&[0.9; 8]).unwrap(), 3.25);
        assert_eq!(net.forward(&[0.1; 8]).unwrap(), 3.25);
    }

    #[test]
    fn forward_checks_arity() {
        let net = zero_network(8);
        assert_eq!(
            net.forward(&[0.0; 5]),
            Err(Error::Dimension {
                expected: 8,
                got: 5
            })
        );
    }

    #[test]
    fn forward_matches_independent_matrix_oracle() {
        // Second route through the same formulas: column-major accumulation
        // over an explicitly transposed weight matrix.
        fn oracle(net: &Network, input: &[f64]) -> f64 {
            let width = net.input_width();
            let mut transposed = vec![vec![0.0; HIDDEN_WIDTH]; width];
            for (j, row) in net.w1.iter().enumerate() {
                for (i, w) in row.iter().enumerate() {
                    transposed[i][j] = *w;
                }
            }
            let mut z = net.b1.clone();
            for (i, col) in transposed.iter().enumerate() {
                for (j, w) in col.iter().enumerate() {
                    z[j] += w * input[i];
                }
            }
            let h: Vec<f64> = z
                .iter()
                .map(|z| 1.0 / (1.0 + (-net.beta * z).exp()))
                .collect();
            net.b2 + h.iter().zip(&net.w2).map(|(h, w)| h * w).sum::<f64>()
        }

        for seed in 0..100 {
            let net = Network::init(LagConfig::default(), identity_scaler(), seed, 0.5).unwrap();
            let set = random_set(&net, 1, seed ^ 0xabcd);
            let got = net.forward(&set.inputs[0]).unwrap();
            let want = oracle(&net, &set.inputs[0]);
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn regressor_count_is_length_minus_na() {
        let series = delta_column(MibVariable::IfInOctets, &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]);
        let scaler = Scaler::fit(&series).unwrap();
        let set =
            build_regressors(&series, MibVariable::IfInOctets, &LagConfig::default(), &scaler)
                .unwrap();
        assert_eq!(set.len(), 2);
    }

    #[test]
    fn regressor_single_lag_structure() {
        let series = delta_column(MibVariable::IfInOctets, &[1, 2, 3]);
        let scaler = Scaler::fit(&series).unwrap();
        let lag = LagConfig {
            na: 1,
            ..LagConfig::default()
        };
        let set = build_regressors(&series, MibVariable::IfInOctets, &lag, &scaler).unwrap();
        let s = |v: f64| scaler.scale(MibVariable::IfInOctets, v);
        assert_eq!(set.inputs, vec![vec![s(1.0)], vec![s(2.0)]]);
        assert_eq!(set.targets, vec![s(2.0), s(3.0)]);
        assert_eq!(set.timestamps, vec![15, 30]);
    }

    #[test]
    fn regressor_requires_exogenous_variable_when_nb_positive() {
        let series = delta_column(MibVariable::IfInOctets, &[1; 20]);
        let scaler = Scaler::fit(&series).unwrap();
        let lag = LagConfig {
            na: 4,
            nb: 4,
            nk: 1,
            exogenous: None,
        };
        assert!(matches!(
            build_regressors(&series, MibVariable::IfInOctets, &lag, &scaler),
            Err(Error::InvalidConfig { .. })
        ));
    }

    #[test]
    fn regressor_exogenous_lags_respect_delay() {
        let target = MibVariable::IfInOctets;
        let exo = MibVariable::IfInUcastPkts;
        let mut records = Vec::new();
        for i in 0..6u64 {
            let mut counters = [0u64; VARIABLE_COUNT];
            counters[target.index()] = i;
            counters[exo.index()] = 10 * i;
            records.push(MibRecord {
                timestamp: 15 * i as i64,
                counters,
                label: TrafficClass::Normal,
            });
        }
        let series = Dataset::new(records, CounterMode::Delta).unwrap();
        let scaler = Scaler::fit(&series).unwrap();
        let lag = LagConfig {
            na: 2,
            nb: 2,
            nk: 2,
            exogenous: Some(exo),
        };
        let set = build_regressors(&series, target, &lag, &scaler).unwrap();
        // First target index is max(na, nb + nk - 1) = 3.
        assert_eq!(set.timestamps[0], 45);
        let sy = |v: f64| scaler.scale(target, v);
        let su = |v: f64| scaler.scale(exo, v);
        // Row for t = 3: y(2), y(1), u(1), u(0).
        assert_eq!(set.inputs[0], vec![sy(2.0), sy(1.0), su(10.0), su(0.0)]);
    }

    #[test]
    fn regressor_insufficient_series() {
        let series = delta_column(MibVariable::IfInOctets, &[1, 2, 3]);
        let scaler = Scaler::fit(&series).unwrap();
        assert!(matches!(
            build_regressors(&series, MibVariable::IfInOctets, &LagConfig::default(), &scaler),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn training_learns_a_constant_target() {
        let lag = LagConfig {
            na: 1,
            ..LagConfig::default()
        };
        let net = Network::init(lag, identity_scaler(), 7, 0.5).unwrap();
        let mut set = random_set(&net, 40, 99);
        set.targets = vec![0.5; set.len()];
        let outcome = net.train(&set, &TrainConfig::default()).unwrap();
        let final_loss = *outcome.loss_history.last().unwrap();
        assert!(final_loss < 1e-4, "final MSE {final_loss}");
        assert_eq!(outcome.loss_history.len(), 1000);
    }

    #[test]
    fn zero_learning_rate_freezes_the_loss() {
        let net = Network::init(LagConfig::default(), identity_scaler(), 3, 0.5).unwrap();
        let set = random_set(&net, 10, 4);
        let cfg = TrainConfig {
            learning_rate: f64::MIN_POSITIVE,
            momentum: 0.0,
            iterations: 25,
            ..TrainConfig::default()
        };
        let outcome = net.train(&set, &cfg).unwrap();
        let first = outcome.loss_history[0];
        for loss in &outcome.loss_history {
            assert_relative_eq!(*loss, first, max_relative = 1e-12);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let net = Network::init(LagConfig::default(), identity_scaler(), 11, 0.5).unwrap();
        let set = random_set(&net, 30, 12);
        let cfg = TrainConfig {
            iterations: 50,
            ..TrainConfig::default()
        };
        let a = net.train(&set, &cfg).unwrap();
        let b = net.train(&set, &cfg).unwrap();
        let bits =
            |h: &[f64]| h.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.loss_history), bits(&b.loss_history));
        assert_eq!(a.network, b.network);
    }

    #[test]
    fn divergence_raises_with_epoch() {
        let net = Network::init(LagConfig::default(), identity_scaler(), 2, 0.5).unwrap();
        let set = random_set(&net, 10, 5);
        let cfg = TrainConfig {
            learning_rate: 1e12,
            momentum: 0.9,
            ..TrainConfig::default()
        };
        match net.train(&set, &cfg) {
            Err(Error::Divergence { epoch }) => assert!(epoch > 0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        fn flatten(net: &Network) -> Vec<f64> {
            let mut flat: Vec<f64> = net.w1.iter().flatten().copied().collect();
            flat.extend(&net.b1);
            flat.extend(&net.w2);
            flat.push(net.b2);
            flat
        }
        fn param_mut(net: &mut Network, idx: usize) -> &mut f64 {
            let width = net.input_width();
            let w1_len = HIDDEN_WIDTH * width;
            if idx < w1_len {
                &mut net.w1[idx / width][idx % width]
            } else if idx < w1_len + HIDDEN_WIDTH {
                &mut net.b1[idx - w1_len]
            } else if idx < w1_len + 2 * HIDDEN_WIDTH {
                &mut net.w2[idx - w1_len - HIDDEN_WIDTH]
            } else {
                &mut net.b2
            }
        }

        let step = 1e-5;
        for seed in 0..20 {
            let net = Network::init(LagConfig::default(), identity_scaler(), seed, 0.5).unwrap();
            let set = random_set(&net, 12, seed.wrapping_mul(31) + 1);
            let analytic = net.gradients(&set).unwrap();
            let analytic_flat = {
                let mut flat: Vec<f64> = analytic.w1.iter().flatten().copied().collect();
                flat.extend(&analytic.b1);
                flat.extend(&analytic.w2);
                flat.push(analytic.b2);
                flat
            };
            let n_params = flatten(&net).len();
            for idx in 0..n_params {
                let mut plus = net.clone();
                *param_mut(&mut plus, idx) += step;
                let mut minus = net.clone();
                *param_mut(&mut minus, idx) -= step;
                let numeric =
                    (plus.loss(&set).unwrap() - minus.loss(&set).unwrap()) / (2.0 * step);
                let a = analytic_flat[idx];
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
                assert!(
                    rel < 1e-4,
                    "seed {seed} param {idx}: analytic {a} vs numeric {numeric}"
                );
            }
        }
    }

    #[test]
    fn in_sample_predictions_track_training_error() {
        let series = gen_normal(&BaselineParams::default(), 120).unwrap();
        let scaler = Scaler::fit(&series).unwrap();
        let target = MibVariable::IfInOctets;
        let net = Network::init(LagConfig::default(), scaler.clone(), 1, 0.5).unwrap();
        let set = build_regressors(&series, target, &LagConfig::default(), &scaler).unwrap();
        let outcome = net.train(&set, &TrainConfig::default()).unwrap();
        let trained = outcome.network;

        let preds = trained.predict_series(&series, target).unwrap();
        let observed = series.series(target);
        let observed_tail = &observed[observed.len() - preds.len()..];
        let obs: Vec<f64> = observed_tail.iter().map(|(_, v)| *v).collect();
        let pred: Vec<f64> = preds.iter().map(|(_, v)| *v).collect();
        // Scaled in-sample error should match the reported training loss.
        let scaled_obs: Vec<f64> = obs.iter().map(|v| scaler.scale(target, *v)).collect();
        let scaled_pred: Vec<f64> = pred.iter().map(|v| scaler.scale(target, *v)).collect();
        let mse = scaled_obs
            .iter()
            .zip(&scaled_pred)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / scaled_obs.len() as f64;
        let final_loss = trained.loss(&set).unwrap();
        assert_relative_eq!(mse, final_loss, max_relative = 1e-6);
    }

    #[test]
    fn perfectly_learned_constant_predicts_a_constant() {
        let series = delta_column(MibVariable::IfInOctets, &[400; 30]);
        let scaler = Scaler::fit(&series).unwrap();
        let mut net = Network::init(LagConfig::default(), scaler, 21, 0.5).unwrap();
        net.w2 = vec![0.0; HIDDEN_WIDTH];
        net.b2 = 0.0; // constant variable scales to 0
        let preds = net.predict_series(&series, MibVariable::IfInOctets).unwrap();
        assert_eq!(preds.len(), 22);
        for (_, p) in preds {
            assert_eq!(p, 400.0);
        }
    }

    #[test]
    fn prediction_error_on_simulated_normal_traffic_is_small() {
        let params = BaselineParams {
            seed: 2024,
            ..BaselineParams::default()
        };
        let series = gen_normal(&params, 400).unwrap();
        let scaler = Scaler::fit(&series).unwrap();
        let target = MibVariable::IfInOctets;
        let net = Network::init(LagConfig::default(), scaler.clone(), 8, 0.5).unwrap();
        let set = build_regressors(&series, target, &LagConfig::default(), &scaler).unwrap();
        let trained = net.train(&set, &TrainConfig::default()).unwrap().network;

        let preds = trained.predict_series(&series, target).unwrap();
        let observed = series.series(target);
        let obs: Vec<f64> = observed[observed.len() - preds.len()..]
            .iter()
            .map(|(_, v)| *v)
            .collect();
        let pred: Vec<f64> = preds.iter().map(|(_, v)| *v).collect();
        let report = crate::metrics::error_report(&obs, &pred).unwrap();
        assert!(report.mmre < 0.05, "MMRE {}", report.mmre);
    }

    #[test]
    fn residual_arithmetic() {
        let observed = [(0, 5.0), (15, 7.0)];
        let predicted = [(0, 4.0), (15, 9.0)];
        assert_eq!(
            residuals(&observed, &predicted).unwrap(),
            vec![(0, 1.0), (15, -2.0)]
        );
        let same = residuals(&observed, &observed).unwrap();
        assert!(same.iter().all(|(_, r)| *r == 0.0));
    }

    #[test]
    fn residual_misalignment() {
        let observed = [(0, 5.0), (15, 7.0)];
        let shifted = [(0, 4.0), (30, 9.0)];
        assert_eq!(
            residuals(&observed, &shifted),
            Err(Error::MisalignedSeries { index: 1 })
        );
        assert!(matches!(
            residuals(&observed, &shifted[..1]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn model_round_trip_preserves_forward_outputs() {
        let net = Network::init(LagConfig::default(), identity_scaler(), 77, 0.5).unwrap();
        let text = net.to_text();
        let reloaded = Network::from_text(&text).unwrap();
        let set = random_set(&net, 100, 123);
        for row in &set.inputs {
            let a = net.forward(row).unwrap();
            let b = reloaded.forward(row).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn truncated_model_is_rejected() {
        let net = Network::init(LagConfig::default(), identity_scaler(), 1, 0.5).unwrap();
        let text = net.to_text();
        let cut: String = text.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(matches!(
            Network::from_text(&cut),
            Err(Error::ModelFormat { .. })
        ));
    }

    #[test]
    fn future_model_version_is_rejected() {
        let err = Network::from_text("NNARX v999\n").unwrap_err();
        assert_eq!(
            err,
            Error::UnsupportedModelVersion {
                found: "v999".to_string()
            }
        );
    }

    #[test]
    fn corrupt_numeric_field_names_the_field() {
        let net = Network::init(LagConfig::default(), identity_scaler(), 1, 0.5).unwrap();
        let text = net.to_text().replace("beta 1.0", "beta forty");
        match Network::from_text(&text) {
            Err(Error::ModelFormat { field }) => assert!(field.contains("beta")),
            other => panic!("expected a model format error, got {other:?}"),
        }
    }

    proptest! {
        /// Sigmoid symmetry: f(x) + f(-x) = 1, and monotonicity in x.
        #[test]
        fn sigmoid_symmetry_and_monotonicity(x in -300.0f64..300.0, beta in 0.1f64..4.0,
                                             dx in 0.0f64..10.0) {
            let sum = sigmoid(x, beta) + sigmoid(-x, beta);
            prop_assert!((sum - 1.0).abs() <= 1e-15);
            prop_assert!(sigmoid(x + dx, beta) >= sigmoid(x, beta));
        }

        /// Training either returns an all-finite loss history or raises a
        /// divergence error; the history is never poisoned.
        #[test]
        fn loss_history_is_finite_or_divergence(seed in 0u64..500, lr in 1e-4f64..0.5) {
            let net = Network::init(LagConfig::default(), identity_scaler(), seed, 0.5).unwrap();
            let set = random_set(&net, 8, seed ^ 0x55);
            let cfg = TrainConfig { iterations: 60, learning_rate: lr, ..TrainConfig::default() };
            match net.train(&set, &cfg) {
                Ok(outcome) => prop_assert!(outcome.loss_history.iter().all(|l| l.is_finite())),
                Err(Error::Divergence { .. }) => {}
                Err(other) => prop_assert!(false, "unexpected error {other:?}"),
            }
        }

        /// Causality: perturbing sample t leaves every row with an earlier
        /// or equal target untouched.
        #[test]
        fn regressors_never_leak_the_future(values in proptest::collection::vec(1u64..1000, 12..40),
                                            t in 9usize..11) {
            let target = MibVariable::IfInOctets;
            let series = delta_column(target, &values);
            let scaler = Scaler::fit(&series).unwrap();
            let lag = LagConfig::default();
            let base = build_regressors(&series, target, &lag, &scaler).unwrap();

            let mut perturbed = values.clone();
            perturbed[t] = perturbed[t].wrapping_add(500);
            let changed = build_regressors(&delta_column(target, &perturbed), target, &lag, &scaler).unwrap();

            let first = lag.first_target_index();
            for (row, (a, b)) in base.inputs.iter().zip(&changed.inputs).enumerate() {
                let target_index = first + row;
                if target_index <= t {
                    prop_assert_eq!(a, b, "row with target {} changed", target_index);
                    prop_assert_eq!(base.targets[row] < f64::INFINITY, true);
                    if target_index < t {
                        prop_assert_eq!(base.targets[row], changed.targets[row]);
                    }
                }
            }
        }
    }
}
