//! Synthetic labeled MIB traffic.
//!
//! The baseline is a seeded per-variable AR(1) process with bounded
//! (uniform) noise, emitted as integer counter deltas. Attack episodes
//! multiply class-specific variables by an intensity profile and relabel
//! the affected records. Everything is deterministic given the config.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mib::{
    CounterMode, Dataset, MibRecord, MibVariable, TrafficClass, POLL_INTERVAL_SECS,
    VARIABLE_COUNT,
};

/// Baseline traffic process parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineParams {
    /// Mean counter delta per 15-second interval, per variable.
    pub mean_rates: [f64; VARIABLE_COUNT],
    /// Noise standard deviation as a fraction of the mean, per variable.
    /// Draws are uniform, so the noise is bounded.
    pub noise_fractions: [f64; VARIABLE_COUNT],
    /// AR(1) coefficient shared by all variables, in `[0, 1)`.
    pub ar_coefficient: f64,
    pub seed: u64,
    /// Timestamp of the first emitted record.
    pub start_timestamp: i64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        BaselineParams {
            // Loosely modeled on a busy access link polled every 15 s.
            mean_rates: [
                2_600_000.0, // ifInOctets
                1_900_000.0, // ifOutOctets
                25.0,        // ifOutDiscards
                46_000.0,    // ifInUcastPkts
                320.0,       // ifInNUcastPkts
                25.0,        // ifInDiscards
                39_000.0,    // ifOutUcastPkts
                180.0,       // ifOutNUcastPkts
                2.0,         // tcpOutRsts
            ],
            noise_fractions: [0.05, 0.05, 0.3, 0.06, 0.12, 0.3, 0.06, 0.12, 0.3],
            ar_coefficient: 0.35,
            seed: 1,
            start_timestamp: 1_600_000_000,
        }
    }
}

impl BaselineParams {
    fn validate(&self) -> Result<()> {
        for (i, m) in self.mean_rates.iter().enumerate() {
            if !m.is_finite() || *m < 0.0 {
                return Err(Error::InvalidConfig {
                    reason: format!("mean rate for {} must be >= 0", MibVariable::ALL[i]),
                });
            }
        }
        for (i, f) in self.noise_fractions.iter().enumerate() {
            if !(0.0..1.0).contains(f) {
                return Err(Error::InvalidConfig {
                    reason: format!(
                        "noise fraction for {} must be in [0, 1)",
                        MibVariable::ALL[i]
                    ),
                });
            }
        }
        if !(0.0..1.0).contains(&self.ar_coefficient) {
            return Err(Error::InvalidConfig {
                reason: format!(
                    "AR coefficient must be in [0, 1), got {}",
                    self.ar_coefficient
                ),
            });
        }
        Ok(())
    }
}

/// Intensity profile applied across an attack episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackShape {
    /// Full intensity from the first sample.
    Step,
    /// Linear climb from no effect to full intensity.
    Ramp,
    /// A quarter of the intensity surplus, held flat: the slow-attack
    /// profile of connection-hogging floods.
    SustainedLow,
}

impl AttackShape {
    pub fn name(self) -> &'static str {
        match self {
            AttackShape::Step => "step",
            AttackShape::Ramp => "ramp",
            AttackShape::SustainedLow => "sustained-low",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "step" => Ok(AttackShape::Step),
            "ramp" => Ok(AttackShape::Ramp),
            "sustained-low" => Ok(AttackShape::SustainedLow),
            other => Err(Error::InvalidConfig {
                reason: format!("unknown attack shape {other:?}"),
            }),
        }
    }

    /// Base factor at sample `i` of a `duration`-sample episode.
    fn factor(self, intensity: f64, i: usize, duration: usize) -> f64 {
        match self {
            AttackShape::Step => intensity,
            AttackShape::Ramp => {
                if duration <= 1 {
                    intensity
                } else {
                    1.0 + (intensity - 1.0) * i as f64 / (duration - 1) as f64
                }
            }
            AttackShape::SustainedLow => 1.0 + (intensity - 1.0) * 0.25,
        }
    }
}

/// One attack episode to inject.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackSpec {
    pub class: TrafficClass,
    /// First affected sample index.
    pub start_index: usize,
    /// Episode length in samples.
    pub duration: usize,
    /// Peak multiplicative surge factor, > 1.
    pub intensity: f64,
    pub shape: AttackShape,
}

impl AttackSpec {
    pub fn validate(&self) -> Result<()> {
        if self.class == TrafficClass::Normal {
            return Err(Error::InvalidConfig {
                reason: "attack class cannot be Normal".to_string(),
            });
        }
        if self.duration == 0 {
            return Err(Error::InvalidConfig {
                reason: "attack duration must be at least 1".to_string(),
            });
        }
        if !self.intensity.is_finite() || self.intensity <= 1.0 {
            return Err(Error::InvalidConfig {
                reason: format!("attack intensity must exceed 1, got {}", self.intensity),
            });
        }
        Ok(())
    }

    fn end(&self) -> usize {
        self.start_index + self.duration
    }
}

/// Which variables an attack class drives, and how strongly.
///
/// The weight scales the intensity surplus: 1.0 applies the full profile,
/// smaller weights give the secondary footprint of the attack (a SYN flood
/// is many small packets, so packet counts surge far more than octets; slow
/// HTTP attacks trickle bytes over many held connections).
pub fn class_signature(class: TrafficClass) -> &'static [(MibVariable, f64)] {
    match class {
        TrafficClass::Normal => &[],
        TrafficClass::TcpSyn => &[
            (MibVariable::IfInUcastPkts, 1.0),
            (MibVariable::TcpOutRsts, 1.0),
            (MibVariable::IfInOctets, 0.3),
        ],
        TrafficClass::UdpFlood => &[
            (MibVariable::IfInOctets, 1.0),
            (MibVariable::IfInUcastPkts, 1.0),
        ],
        TrafficClass::IcmpEcho => &[
            (MibVariable::IfInNUcastPkts, 1.0),
            (MibVariable::IfInOctets, 1.0),
        ],
        TrafficClass::HttpFlood => &[
            (MibVariable::IfInOctets, 1.0),
            (MibVariable::IfOutOctets, 1.0),
        ],
        TrafficClass::Slowloris | TrafficClass::Slowpost => &[
            (MibVariable::IfInUcastPkts, 1.0),
            (MibVariable::IfInOctets, 0.3),
        ],
        TrafficClass::BruteForce => &[
            (MibVariable::IfInUcastPkts, 0.5),
            (MibVariable::IfInOctets, 0.3),
        ],
    }
}

/// Generates n records of Normal-labeled baseline traffic in delta mode.
///
/// Each variable follows `x(t) = mu + ar * (x(t-1) - mu) + noise` with the
/// state clamped at zero, then rounds to an integer counter delta.
pub fn gen_normal(params: &BaselineParams, n: usize) -> Result<Dataset> {
    params.validate()?;
    if n == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    // Uniform half-widths giving the configured noise standard deviation.
    let half_widths: [f64; VARIABLE_COUNT] = std::array::from_fn(|i| {
        3f64.sqrt() * params.noise_fractions[i] * params.mean_rates[i]
    });
    let mut state = params.mean_rates;
    let mut records = Vec::with_capacity(n);
    for t in 0..n {
        let mut counters = [0u64; VARIABLE_COUNT];
        for i in 0..VARIABLE_COUNT {
            let noise = if half_widths[i] > 0.0 {
                rng.random_range(-half_widths[i]..half_widths[i])
            } else {
                0.0
            };
            state[i] = (params.mean_rates[i]
                + params.ar_coefficient * (state[i] - params.mean_rates[i])
                + noise)
                .max(0.0);
            counters[i] = state[i].round() as u64;
        }
        records.push(MibRecord {
            timestamp: params.start_timestamp + POLL_INTERVAL_SECS * t as i64,
            counters,
            label: TrafficClass::Normal,
        });
    }
    Dataset::new(records, CounterMode::Delta)
}

/// Applies one attack episode to a delta-mode dataset.
///
/// Records inside the episode have the class's variables multiplied by the
/// shaped intensity and are relabeled; everything else is untouched.
pub fn inject_attack(data: &Dataset, spec: &AttackSpec) -> Result<Dataset> {
    spec.validate()?;
    if data.mode() != CounterMode::Delta {
        return Err(Error::WrongMode {
            expected: "delta",
            found: "cumulative",
        });
    }
    if spec.end() > data.len() {
        return Err(Error::EpisodeOutOfBounds {
            start: spec.start_index,
            duration: spec.duration,
            len: data.len(),
        });
    }
    let mut records = data.records().to_vec();
    for (i, rec) in records[spec.start_index..spec.end()].iter_mut().enumerate() {
        if rec.label != TrafficClass::Normal {
            return Err(Error::EpisodeOverlap {
                start: spec.start_index,
            });
        }
        let base = spec.shape.factor(spec.intensity, i, spec.duration);
        for (var, weight) in class_signature(spec.class) {
            let effective = 1.0 + (base - 1.0) * weight;
            let idx = var.index();
            rec.counters[idx] = (rec.counters[idx] as f64 * effective).round() as u64;
        }
        rec.label = spec.class;
    }
    Dataset::new(records, CounterMode::Delta)
}

/// A complete synthetic scenario: baseline length plus attack episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Number of baseline samples to generate.
    pub length: usize,
    pub baseline: BaselineParams,
    pub attacks: Vec<AttackSpec>,
}

/// Names accepted by [`ScenarioConfig::preset`].
pub const PRESET_NAMES: [&str; 2] = ["paper-shape", "smoke"];

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.baseline.validate()?;
        if self.length == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let mut sorted: Vec<&AttackSpec> = self.attacks.iter().collect();
        sorted.sort_by_key(|a| a.start_index);
        for (i, spec) in sorted.iter().enumerate() {
            spec.validate()?;
            if spec.end() > self.length {
                return Err(Error::EpisodeOutOfBounds {
                    start: spec.start_index,
                    duration: spec.duration,
                    len: self.length,
                });
            }
            if i + 1 < sorted.len() && spec.end() > sorted[i + 1].start_index {
                return Err(Error::EpisodeOverlap {
                    start: sorted[i + 1].start_index,
                });
            }
        }
        Ok(())
    }

    /// A bundled scenario by name, or None if the name is unknown.
    pub fn preset(name: &str) -> Option<ScenarioConfig> {
        match name {
            "paper-shape" => Some(Self::paper_shape()),
            "smoke" => Some(Self::smoke()),
            _ => None,
        }
    }

    /// Desk-scale evaluation scenario: roughly 600 normal samples with one
    /// episode per flooding class at intensity >= 5, laid out so every
    /// episode spans whole 9-sample detection windows (assuming the default
    /// eight-lag predictor) plus one overhang sample that absorbs the
    /// post-attack prediction transient.
    pub fn paper_shape() -> ScenarioConfig {
        let episode = |class, window: usize, windows: usize, intensity, shape| AttackSpec {
            class,
            // Residual window w starts at delta index 9w + 8.
            start_index: 9 * window + 8,
            duration: 9 * windows + 1,
            intensity,
            shape,
        };
        ScenarioConfig {
            length: 728,
            baseline: BaselineParams {
                seed: 11,
                ..BaselineParams::default()
            },
            attacks: vec![
                episode(TrafficClass::TcpSyn, 6, 2, 8.0, AttackShape::Step),
                episode(TrafficClass::UdpFlood, 12, 1, 8.0, AttackShape::Step),
                episode(TrafficClass::IcmpEcho, 18, 1, 8.0, AttackShape::Step),
                episode(TrafficClass::HttpFlood, 24, 1, 8.0, AttackShape::Step),
                episode(TrafficClass::Slowloris, 30, 3, 7.0, AttackShape::SustainedLow),
                episode(TrafficClass::Slowpost, 38, 2, 7.0, AttackShape::SustainedLow),
            ],
        }
    }

    /// Small fast scenario for smoke runs: one UDP flood inside ~100
    /// samples.
    pub fn smoke() -> ScenarioConfig {
        ScenarioConfig {
            length: 98,
            baseline: BaselineParams {
                seed: 7,
                ..BaselineParams::default()
            },
            attacks: vec![AttackSpec {
                class: TrafficClass::UdpFlood,
                start_index: 35,
                duration: 10,
                intensity: 8.0,
                shape: AttackShape::Step,
            }],
        }
    }

    /// Parses the plain-text scenario format: `key = value` lines for the
    /// baseline plus one `[attack]` block per episode.
    pub fn parse(text: &str) -> Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig {
            length: 0,
            baseline: BaselineParams::default(),
            attacks: Vec::new(),
        };
        let mut in_attack = false;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let parse_err = |reason: String| Error::Parse {
                line: line_no,
                reason,
            };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == "[attack]" {
                cfg.attacks.push(AttackSpec {
                    class: TrafficClass::TcpSyn,
                    start_index: 0,
                    duration: 0,
                    intensity: 2.0,
                    shape: AttackShape::Step,
                });
                in_attack = true;
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| parse_err(format!("expected key = value, got {line:?}")))?;

            if in_attack {
                let spec = cfg.attacks.last_mut().unwrap();
                match key {
                    "class" => {
                        spec.class =
                            TrafficClass::parse(value).map_err(|e| parse_err(e.to_string()))?
                    }
                    "start" => {
                        spec.start_index = value
                            .parse()
                            .map_err(|_| parse_err(format!("bad start {value:?}")))?
                    }
                    "duration" => {
                        spec.duration = value
                            .parse()
                            .map_err(|_| parse_err(format!("bad duration {value:?}")))?
                    }
                    "intensity" => {
                        spec.intensity = value
                            .parse()
                            .map_err(|_| parse_err(format!("bad intensity {value:?}")))?
                    }
                    "shape" => {
                        spec.shape =
                            AttackShape::parse(value).map_err(|e| parse_err(e.to_string()))?
                    }
                    other => return Err(parse_err(format!("unknown attack key {other:?}"))),
                }
                continue;
            }

            match key {
                "length" => {
                    cfg.length = value
                        .parse()
                        .map_err(|_| parse_err(format!("bad length {value:?}")))?
                }
                "seed" => {
                    cfg.baseline.seed = value
                        .parse()
                        .map_err(|_| parse_err(format!("bad seed {value:?}")))?
                }
                "ar" => {
                    cfg.baseline.ar_coefficient = value
                        .parse()
                        .map_err(|_| parse_err(format!("bad ar {value:?}")))?
                }
                "start-timestamp" => {
                    cfg.baseline.start_timestamp = value
                        .parse()
                        .map_err(|_| parse_err(format!("bad start-timestamp {value:?}")))?
                }
                _ => {
                    let (kind, var_name) = key
                        .split_once('.')
                        .ok_or_else(|| parse_err(format!("unknown key {key:?}")))?;
                    let var = MibVariable::from_name(var_name)
                        .map_err(|e| parse_err(e.to_string()))?;
                    let parsed: f64 = value
                        .parse()
                        .map_err(|_| parse_err(format!("bad value {value:?}")))?;
                    match kind {
                        "mean" => cfg.baseline.mean_rates[var.index()] = parsed,
                        "noise" => cfg.baseline.noise_fractions[var.index()] = parsed,
                        other => return Err(parse_err(format!("unknown key kind {other:?}"))),
                    }
                }
            }
        }

        cfg.validate()?;
        Ok(cfg)
    }
}

/// Generates the baseline and applies every episode in order.
pub fn gen_scenario(cfg: &ScenarioConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut data = gen_normal(&cfg.baseline, cfg.length)?;
    for spec in &cfg.attacks {
        data = inject_attack(&data, spec)?;
    }
    Ok(data)
}
