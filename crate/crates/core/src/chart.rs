//! Control-chart change detection over residual streams.
//!
//! Limits are learned from one window of samples (center line at the mean,
//! upper/lower limits k sample deviations out) and applied to the next
//! window; any sample strictly outside the limits raises an alarm. The
//! stream driver pairs consecutive non-overlapping windows and advances the
//! baseline according to the configured policy.

use std::fmt;

use crate::error::{Error, Result};

/// Control limits fitted on one learning window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlLimits {
    /// Window mean.
    pub mean: f64,
    /// Sample standard deviation (denominator n-1), floored at the
    /// configured sigma floor.
    pub sigma: f64,
    /// Limit distance in deviations.
    pub k: f64,
    /// Center line, equal to the mean.
    pub cl: f64,
    /// Upper control limit `cl + k * sigma`.
    pub ucl: f64,
    /// Lower control limit `cl - k * sigma`.
    pub lcl: f64,
}

/// Computes control limits from a learning window.
///
/// `sigma_floor` guards constant windows: with sigma 0 the limits collapse
/// onto the center line and every deviation alarms, so a small floor keeps
/// the band non-degenerate.
pub fn control_limits(window: &[f64], k: f64, sigma_floor: f64) -> Result<ControlLimits> {
    if window.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: window.len(),
        });
    }
    if !k.is_finite() || k <= 0.0 {
        return Err(Error::InvalidConfig {
            reason: format!("k must be positive and finite, got {k}"),
        });
    }
    if !sigma_floor.is_finite() || sigma_floor < 0.0 {
        return Err(Error::InvalidConfig {
            reason: format!("sigma floor must be non-negative and finite, got {sigma_floor}"),
        });
    }
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let sum_sq = window.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    let sigma = (sum_sq / (n - 1.0)).sqrt().max(sigma_floor);
    let half_width = k * sigma;
    Ok(ControlLimits {
        mean,
        sigma,
        k,
        cl: mean,
        ucl: mean + half_width,
        lcl: mean - half_width,
    })
}

/// Which boundary a sample crossed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolatedBound {
    Upper,
    Lower,
}

impl fmt::Display for ViolatedBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolatedBound::Upper => "Upper",
            ViolatedBound::Lower => "Lower",
        })
    }
}

/// One out-of-bounds sample within a tested window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    /// Offset of the sample inside the tested window.
    pub offset: usize,
    pub value: f64,
    pub violated: ViolatedBound,
}

/// Returns exactly the samples strictly outside the limits, in order.
///
/// A value equal to a limit is not an alarm; the comparisons are strict, so
/// a constant window tested against its own limits stays silent.
pub fn detect_window(limits: &ControlLimits, window: &[f64]) -> Vec<Violation> {
    window
        .iter()
        .enumerate()
        .filter_map(|(offset, &value)| {
            let violated = if value > limits.ucl {
                ViolatedBound::Upper
            } else if value < limits.lcl {
                ViolatedBound::Lower
            } else {
                return None;
            };
            Some(Violation {
                offset,
                value,
                violated,
            })
        })
        .collect()
}

/// A detected abnormal sample in a residual stream.
#[derive(Debug, Clone, PartialEq)]
pub struct AlarmEvent {
    /// Index of the tested window within the stream partition.
    pub window_index: usize,
    /// Global index of the sample in the residual stream.
    pub sample_index: usize,
    pub timestamp: i64,
    pub value: f64,
    pub violated: ViolatedBound,
    /// The limits in force when the alarm fired.
    pub limits: ControlLimits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowFlag {
    Flagged,
    Clear,
}

impl fmt::Display for WindowFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowFlag::Flagged => "flagged",
            WindowFlag::Clear => "clear",
        })
    }
}

/// Baseline advancement policy for the stream driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineUpdate {
    /// Every tested window becomes the next learning window.
    Always,
    /// Only alarm-free windows become the next learning window, so an
    /// attack window cannot contaminate the baseline.
    CleanOnly,
}

impl BaselineUpdate {
    pub fn name(self) -> &'static str {
        match self {
            BaselineUpdate::Always => "always",
            BaselineUpdate::CleanOnly => "clean-only",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "always" => Ok(BaselineUpdate::Always),
            "clean-only" => Ok(BaselineUpdate::CleanOnly),
            other => Err(Error::InvalidConfig {
                reason: format!("unknown baseline update policy {other:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowConfig {
    pub window_size: usize,
    pub k: f64,
    pub sigma_floor: f64,
    pub baseline_update: BaselineUpdate,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            window_size: 9,
            k: 3.0,
            sigma_floor: 1e-9,
            baseline_update: BaselineUpdate::CleanOnly,
        }
    }
}

impl WindowConfig {
    fn validate(&self) -> Result<()> {
        if self.window_size < 2 {
            return Err(Error::InvalidConfig {
                reason: format!("window size must be at least 2, got {}", self.window_size),
            });
        }
        Ok(())
    }
}

/// Verdict for one tested window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowReport {
    pub window_index: usize,
    pub start_timestamp: i64,
    pub end_timestamp: i64,
    pub flag: WindowFlag,
}

/// Everything `stream_detect` produces for one residual stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamOutcome {
    pub alarms: Vec<AlarmEvent>,
    /// One report per tested window, in order. Window 0 is the initial
    /// learning window and is never tested or reported.
    pub windows: Vec<WindowReport>,
}

impl StreamOutcome {
    pub fn flags(&self) -> Vec<WindowFlag> {
        self.windows.iter().map(|w| w.flag).collect()
    }

    pub fn flagged_count(&self) -> usize {
        self.windows
            .iter()
            .filter(|w| w.flag == WindowFlag::Flagged)
            .count()
    }
}

/// Folds a residual stream through consecutive learn/test windows.
///
/// The stream is partitioned into non-overlapping windows of
/// `cfg.window_size`; a trailing partial window is dropped. Window 0 seeds
/// the baseline, every later window is tested against the current
/// baseline's limits, and afterwards the baseline advances to the tested
/// window per `cfg.baseline_update`.
pub fn stream_detect(residuals: &[(i64, f64)], cfg: &WindowConfig) -> Result<StreamOutcome> {
    cfg.validate()?;
    let w = cfg.window_size;
    let n_windows = residuals.len() / w;
    if n_windows < 2 {
        return Err(Error::InsufficientData {
            needed: 2 * w,
            got: residuals.len(),
        });
    }

    let values: Vec<f64> = residuals.iter().map(|(_, v)| *v).collect();
    let mut limits = control_limits(&values[..w], cfg.k, cfg.sigma_floor)?;
    let mut alarms = Vec::new();
    let mut windows = Vec::with_capacity(n_windows - 1);

    for window_index in 1..n_windows {
        let start = window_index * w;
        let window = &values[start..start + w];
        let violations = detect_window(&limits, window);
        let flag = if violations.is_empty() {
            WindowFlag::Clear
        } else {
            WindowFlag::Flagged
        };
        for v in violations {
            let sample_index = start + v.offset;
            alarms.push(AlarmEvent {
                window_index,
                sample_index,
                timestamp: residuals[sample_index].0,
                value: v.value,
                violated: v.violated,
                limits,
            });
        }
        windows.push(WindowReport {
            window_index,
            start_timestamp: residuals[start].0,
            end_timestamp: residuals[start + w - 1].0,
            flag,
        });
        let advance = match cfg.baseline_update {
            BaselineUpdate::Always => true,
            BaselineUpdate::CleanOnly => flag == WindowFlag::Clear,
        };
        if advance {
            limits = control_limits(window, cfg.k, cfg.sigma_floor)?;
        }
    }

    Ok(StreamOutcome { alarms, windows })
}

/// Header of the alarm log CSV format.
pub const ALARM_CSV_HEADER: &str = "window_index,sample_index,timestamp,value,violated,cl,ucl,lcl";

/// Serializes alarms to the alarm log CSV format.
pub fn alarms_to_csv(alarms: &[AlarmEvent]) -> String {
    let mut out = String::from(ALARM_CSV_HEADER);
    out.push('\n');
    for a in alarms {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            a.window_index,
            a.sample_index,
            a.timestamp,
            a.value,
            a.violated,
            a.limits.cl,
            a.limits.ucl,
            a.limits.lcl
        ));
    }
    out
}

/// Header of the per-window flag CSV format.
pub const FLAGS_CSV_HEADER: &str = "window_index,start_timestamp,end_timestamp,flag";

/// Serializes per-window verdicts to the flag CSV format.
pub fn flags_to_csv(windows: &[WindowReport]) -> String {
    let mut out = String::from(FLAGS_CSV_HEADER);
    out.push('\n');
    for w in windows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            w.window_index, w.start_timestamp, w.end_timestamp, w.flag
        ));
    }
    out
}

/// Parses a flag CSV back into window reports.
pub fn parse_flags_csv(csv: &str) -> Result<Vec<WindowReport>> {
    let mut lines = csv.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        reason: "missing header row".to_string(),
    })?;
    if header.trim_end() != FLAGS_CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            reason: format!("header must be {:?}", FLAGS_CSV_HEADER),
        });
    }
    let mut windows = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let parse_err = |reason: String| Error::Parse { line, reason };
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 4 {
            return Err(parse_err(format!("expected 4 fields, got {}", fields.len())));
        }
        let window_index = fields[0]
            .parse()
            .map_err(|_| parse_err(format!("bad window index {:?}", fields[0])))?;
        let start_timestamp = fields[1]
            .parse()
            .map_err(|_| parse_err(format!("bad start timestamp {:?}", fields[1])))?;
        let end_timestamp = fields[2]
            .parse()
            .map_err(|_| parse_err(format!("bad end timestamp {:?}", fields[2])))?;
        let flag = match fields[3] {
            "flagged" => WindowFlag::Flagged,
            "clear" => WindowFlag::Clear,
            other => return Err(parse_err(format!("bad flag {other:?}"))),
        };
        windows.push(WindowReport {
            window_index,
            start_timestamp,
            end_timestamp,
            flag,
        });
    }
    Ok(windows)
}
