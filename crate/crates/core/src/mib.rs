//! SNMP interface-group dataset model: polled counter records, CSV
//! parsing/serialization, cumulative-to-delta conversion with 32-bit wrap
//! correction, per-variable summaries, and min-max scaling.

use std::fmt;

use crate::error::{Error, Result};

/// Seconds between successive counter polls.
pub const POLL_INTERVAL_SECS: i64 = 15;

/// Number of tracked counter variables.
pub const VARIABLE_COUNT: usize = 9;

/// Modulus used to correct 32-bit counter wraps.
const COUNTER_MODULUS: i128 = 1 << 32;

/// The monitored counter variables, in dataset column order.
///
/// Eight interface-group counters plus `tcpOutRsts`, which rides along with
/// the interface group in this schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MibVariable {
    IfInOctets,
    IfOutOctets,
    IfOutDiscards,
    IfInUcastPkts,
    IfInNUcastPkts,
    IfInDiscards,
    IfOutUcastPkts,
    IfOutNUcastPkts,
    TcpOutRsts,
}

impl MibVariable {
    pub const ALL: [MibVariable; VARIABLE_COUNT] = [
        MibVariable::IfInOctets,
        MibVariable::IfOutOctets,
        MibVariable::IfOutDiscards,
        MibVariable::IfInUcastPkts,
        MibVariable::IfInNUcastPkts,
        MibVariable::IfInDiscards,
        MibVariable::IfOutUcastPkts,
        MibVariable::IfOutNUcastPkts,
        MibVariable::TcpOutRsts,
    ];

    /// The SNMP object name, as used in CSV headers and model files.
    pub fn name(self) -> &'static str {
        match self {
            MibVariable::IfInOctets => "ifInOctets",
            MibVariable::IfOutOctets => "ifOutOctets",
            MibVariable::IfOutDiscards => "ifOutDiscards",
            MibVariable::IfInUcastPkts => "ifInUcastPkts",
            MibVariable::IfInNUcastPkts => "ifInNUcastPkts",
            MibVariable::IfInDiscards => "ifInDiscards",
            MibVariable::IfOutUcastPkts => "ifOutUcastPkts",
            MibVariable::IfOutNUcastPkts => "ifOutNUcastPkts",
            MibVariable::TcpOutRsts => "tcpOutRsts",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == name)
            .ok_or_else(|| Error::UnknownVariable {
                name: name.to_string(),
            })
    }

    /// Column position of this variable in a record's counter array.
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|v| *v == self).unwrap()
    }
}

impl fmt::Display for MibVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Traffic class labels carried by every record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrafficClass {
    Normal,
    TcpSyn,
    UdpFlood,
    IcmpEcho,
    HttpFlood,
    Slowloris,
    Slowpost,
    BruteForce,
}

impl TrafficClass {
    pub const ALL: [TrafficClass; 8] = [
        TrafficClass::Normal,
        TrafficClass::TcpSyn,
        TrafficClass::UdpFlood,
        TrafficClass::IcmpEcho,
        TrafficClass::HttpFlood,
        TrafficClass::Slowloris,
        TrafficClass::Slowpost,
        TrafficClass::BruteForce,
    ];

    /// Canonical label string, as emitted in CSV datasets.
    pub fn name(self) -> &'static str {
        match self {
            TrafficClass::Normal => "Normal",
            TrafficClass::TcpSyn => "TCP-SYN",
            TrafficClass::UdpFlood => "UDP flood",
            TrafficClass::IcmpEcho => "ICMP-ECHO",
            TrafficClass::HttpFlood => "HTTP flood",
            TrafficClass::Slowloris => "Slowloris",
            TrafficClass::Slowpost => "Slowpost",
            TrafficClass::BruteForce => "Brute force",
        }
    }

    /// Parses a label, ignoring case and `-`/`_`/space separators, so both
    /// `"TCP-SYN"` and `"TcpSyn"` resolve to the same class.
    pub fn parse(label: &str) -> Result<Self> {
        let key: String = label
            .chars()
            .filter(|c| !matches!(c, ' ' | '-' | '_'))
            .flat_map(char::to_lowercase)
            .collect();
        let class = match key.as_str() {
            "normal" => TrafficClass::Normal,
            "tcpsyn" => TrafficClass::TcpSyn,
            "udpflood" => TrafficClass::UdpFlood,
            "icmpecho" => TrafficClass::IcmpEcho,
            "httpflood" => TrafficClass::HttpFlood,
            "slowloris" => TrafficClass::Slowloris,
            "slowpost" => TrafficClass::Slowpost,
            "bruteforce" => TrafficClass::BruteForce,
            _ => {
                return Err(Error::UnknownLabel {
                    name: label.to_string(),
                })
            }
        };
        Ok(class)
    }

    pub fn is_attack(self) -> bool {
        self != TrafficClass::Normal
    }
}

impl fmt::Display for TrafficClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One 15-second poll: timestamp, the nine counter values, and a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MibRecord {
    /// Seconds since the epoch, on a 15-second grid.
    pub timestamp: i64,
    /// Counter values in [`MibVariable::ALL`] order.
    pub counters: [u64; VARIABLE_COUNT],
    pub label: TrafficClass,
}

impl MibRecord {
    pub fn counter(&self, var: MibVariable) -> u64 {
        self.counters[var.index()]
    }
}

/// Whether counter values are raw cumulative readings or per-interval deltas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterMode {
    Cumulative,
    Delta,
}

impl CounterMode {
    fn name(self) -> &'static str {
        match self {
            CounterMode::Cumulative => "cumulative",
            CounterMode::Delta => "delta",
        }
    }
}

/// Header line of the CSV dataset format.
pub const CSV_HEADER: &str = "timestamp,ifInOctets,ifOutOctets,ifOutDiscards,ifInUcastPkts,\
ifInNUcastPkts,ifInDiscards,ifOutUcastPkts,ifOutNUcastPkts,tcpOutRsts,label";

/// An ordered, homogeneous sequence of records on the 15-second poll grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<MibRecord>,
    mode: CounterMode,
}

impl Dataset {
    /// Builds a dataset, checking that it is non-empty and that timestamps
    /// increase by exactly one poll interval per record.
    pub fn new(records: Vec<MibRecord>, mode: CounterMode) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for pair in records.windows(2) {
            if pair[1].timestamp != pair[0].timestamp + POLL_INTERVAL_SECS {
                return Err(Error::InvalidConfig {
                    reason: format!(
                        "timestamps must increase by {}s: {} follows {}",
                        POLL_INTERVAL_SECS, pair[1].timestamp, pair[0].timestamp
                    ),
                });
            }
        }
        Ok(Dataset { records, mode })
    }

    pub fn records(&self) -> &[MibRecord] {
        &self.records
    }

    pub fn mode(&self) -> CounterMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn expect_mode(&self, expected: CounterMode) -> Result<()> {
        if self.mode != expected {
            return Err(Error::WrongMode {
                expected: expected.name(),
                found: self.mode.name(),
            });
        }
        Ok(())
    }

    /// Parses a CSV dataset in the [`CSV_HEADER`] format. The result is in
    /// cumulative mode, matching what an SNMP poller writes.
    ///
    /// Every failure carries the offending 1-based line number; no partial
    /// dataset is ever returned.
    pub fn parse(csv: &str) -> Result<Self> {
        let mut lines = csv.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            reason: "missing header row".to_string(),
        })?;
        if header.trim_end() != CSV_HEADER {
            return Err(Error::Parse {
                line: 1,
                reason: format!("header must be {:?}", CSV_HEADER),
            });
        }

        let mut records = Vec::new();
        for (idx, raw) in lines {
            let line = idx + 1;
            let row = raw.trim_end_matches('\r');
            if row.is_empty() {
                continue;
            }
            records.push(Self::parse_row(row, line, records.last())?);
        }
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Dataset::new(records, CounterMode::Cumulative)
    }

    fn parse_row(row: &str, line: usize, prev: Option<&MibRecord>) -> Result<MibRecord> {
        let parse_err = |reason: String| Error::Parse { line, reason };
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != VARIABLE_COUNT + 2 {
            return Err(parse_err(format!(
                "expected {} fields, got {}",
                VARIABLE_COUNT + 2,
                fields.len()
            )));
        }
        let timestamp: i64 = fields[0]
            .parse()
            .map_err(|_| parse_err(format!("bad timestamp {:?}", fields[0])))?;
        if let Some(prev) = prev {
            if timestamp != prev.timestamp + POLL_INTERVAL_SECS {
                return Err(parse_err(format!(
                    "timestamp {} is not {}s after the previous record",
                    timestamp, POLL_INTERVAL_SECS
                )));
            }
        }
        let mut counters = [0u64; VARIABLE_COUNT];
        for (slot, field) in counters.iter_mut().zip(&fields[1..=VARIABLE_COUNT]) {
            *slot = field
                .parse()
                .map_err(|_| parse_err(format!("bad counter value {:?}", field)))?;
        }
        let label = TrafficClass::parse(fields[VARIABLE_COUNT + 1])
            .map_err(|e| parse_err(e.to_string()))?;
        Ok(MibRecord {
            timestamp,
            counters,
            label,
        })
    }

    /// Serializes to the CSV dataset format, line-feed terminated.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for rec in &self.records {
            out.push_str(&rec.timestamp.to_string());
            for c in rec.counters {
                out.push(',');
                out.push_str(&c.to_string());
            }
            out.push(',');
            out.push_str(rec.label.name());
            out.push('\n');
        }
        out
    }

    /// Converts cumulative counters to per-interval deltas.
    ///
    /// Each delta is the successor difference modulo 2^32, which corrects
    /// 32-bit counter wraps: `[4294967290, 10]` yields `16`. Timestamps and
    /// labels come from the later record of each pair, so the result is one
    /// record shorter.
    pub fn counter_deltas(&self) -> Result<Dataset> {
        self.expect_mode(CounterMode::Cumulative)?;
        if self.records.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: self.records.len(),
            });
        }
        let records = self
            .records
            .windows(2)
            .map(|pair| {
                let mut counters = [0u64; VARIABLE_COUNT];
                for (i, slot) in counters.iter_mut().enumerate() {
                    let diff = pair[1].counters[i] as i128 - pair[0].counters[i] as i128;
                    *slot = diff.rem_euclid(COUNTER_MODULUS) as u64;
                }
                MibRecord {
                    timestamp: pair[1].timestamp,
                    counters,
                    label: pair[1].label,
                }
            })
            .collect();
        Dataset::new(records, CounterMode::Delta)
    }

    /// Inverse of [`Dataset::counter_deltas`]: running sums modulo 2^32 on
    /// top of `base` counters, with a leading base record one poll interval
    /// before the first delta. The result is one record longer.
    pub fn accumulate(&self, base: [u64; VARIABLE_COUNT]) -> Result<Dataset> {
        self.expect_mode(CounterMode::Delta)?;
        let mut state = [0u64; VARIABLE_COUNT];
        for (slot, b) in state.iter_mut().zip(base) {
            *slot = (b as i128).rem_euclid(COUNTER_MODULUS) as u64;
        }
        let mut records = Vec::with_capacity(self.records.len() + 1);
        records.push(MibRecord {
            timestamp: self.records[0].timestamp - POLL_INTERVAL_SECS,
            counters: state,
            label: TrafficClass::Normal,
        });
        for rec in &self.records {
            for (slot, d) in state.iter_mut().zip(rec.counters) {
                *slot = (*slot as i128 + d as i128).rem_euclid(COUNTER_MODULUS) as u64;
            }
            records.push(MibRecord {
                timestamp: rec.timestamp,
                counters: state,
                label: rec.label,
            });
        }
        Dataset::new(records, CounterMode::Cumulative)
    }

    /// Per-variable minimum, maximum, and sample standard deviation
    /// (denominator n-1). Needs at least two records for the deviation to
    /// be defined.
    pub fn summarize(&self) -> Result<VariableSummary> {
        if self.records.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: self.records.len(),
            });
        }
        let n = self.records.len() as f64;
        let mut stats = [VariableStats {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            std: 0.0,
        }; VARIABLE_COUNT];
        let mut means = [0.0f64; VARIABLE_COUNT];
        for rec in &self.records {
            for (i, c) in rec.counters.iter().enumerate() {
                let v = *c as f64;
                stats[i].min = stats[i].min.min(v);
                stats[i].max = stats[i].max.max(v);
                means[i] += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        for rec in &self.records {
            for (i, c) in rec.counters.iter().enumerate() {
                let d = *c as f64 - means[i];
                stats[i].std += d * d;
            }
        }
        for s in &mut stats {
            s.std = (s.std / (n - 1.0)).sqrt();
        }
        Ok(VariableSummary { stats })
    }

    /// One variable as a `(timestamp, value)` series.
    pub fn series(&self, var: MibVariable) -> Vec<(i64, f64)> {
        let idx = var.index();
        self.records
            .iter()
            .map(|r| (r.timestamp, r.counters[idx] as f64))
            .collect()
    }

    /// One variable's values in record order.
    pub fn values(&self, var: MibVariable) -> Vec<f64> {
        let idx = var.index();
        self.records.iter().map(|r| r.counters[idx] as f64).collect()
    }

    /// Maximal contiguous runs of Normal-labeled records, each returned as
    /// its own dataset. Attack records never appear in the output.
    pub fn normal_segments(&self) -> Vec<Dataset> {
        let mut segments = Vec::new();
        let mut run: Vec<MibRecord> = Vec::new();
        for rec in &self.records {
            if rec.label == TrafficClass::Normal {
                run.push(*rec);
            } else if !run.is_empty() {
                segments.push(Dataset {
                    records: std::mem::take(&mut run),
                    mode: self.mode,
                });
            }
        }
        if !run.is_empty() {
            segments.push(Dataset {
                records: run,
                mode: self.mode,
            });
        }
        segments
    }
}

/// Per-variable min/max/standard-deviation summary of a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariableStats {
    pub min: f64,
    pub max: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariableSummary {
    stats: [VariableStats; VARIABLE_COUNT],
}

impl VariableSummary {
    pub fn stat(&self, var: MibVariable) -> VariableStats {
        self.stats[var.index()]
    }
}

/// Per-variable affine map onto `[0, 1]`, fitted from delta-mode data.
///
/// A constant variable maps to 0 and inverts back to its fitted value.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    ranges: [(f64, f64); VARIABLE_COUNT],
}

impl Scaler {
    /// Fits per-variable min/max on a delta-mode dataset.
    pub fn fit(data: &Dataset) -> Result<Self> {
        Self::fit_segments(std::slice::from_ref(data))
    }

    /// Fits one scaler across several delta-mode segments, e.g. the Normal
    /// runs of a labeled dataset.
    pub fn fit_segments(segments: &[Dataset]) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut ranges = [(f64::INFINITY, f64::NEG_INFINITY); VARIABLE_COUNT];
        for seg in segments {
            seg.expect_mode(CounterMode::Delta)?;
            for rec in seg.records() {
                for (i, c) in rec.counters.iter().enumerate() {
                    let v = *c as f64;
                    ranges[i].0 = ranges[i].0.min(v);
                    ranges[i].1 = ranges[i].1.max(v);
                }
            }
        }
        Ok(Scaler { ranges })
    }

    /// Builds a scaler from explicit per-variable `(min, max)` pairs.
    pub fn from_ranges(ranges: [(f64, f64); VARIABLE_COUNT]) -> Result<Self> {
        for (i, (min, max)) in ranges.iter().enumerate() {
            if !(min.is_finite() && max.is_finite()) || max < min {
                return Err(Error::InvalidConfig {
                    reason: format!(
                        "bad scaler range for {}: ({}, {})",
                        MibVariable::ALL[i],
                        min,
                        max
                    ),
                });
            }
        }
        Ok(Scaler { ranges })
    }

    pub fn range(&self, var: MibVariable) -> (f64, f64) {
        self.ranges[var.index()]
    }

    /// Maps a raw value into the fitted `[0, 1]` range of `var`.
    pub fn scale(&self, var: MibVariable, value: f64) -> f64 {
        let (min, max) = self.range(var);
        if max > min {
            (value - min) / (max - min)
        } else {
            0.0
        }
    }

    /// Inverse of [`Scaler::scale`].
    pub fn unscale(&self, var: MibVariable, scaled: f64) -> f64 {
        let (min, max) = self.range(var);
        if max > min {
            min + scaled * (max - min)
        } else {
            min
        }
    }

    pub fn scale_series(&self, var: MibVariable, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| self.scale(var, *v)).collect()
    }
}
