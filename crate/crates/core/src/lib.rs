//! Detects abnormal network traffic from SNMP interface counters.
//!
//! The pipeline has two stages: a small autoregressive neural network
//! predicts the next counter delta from recent history, and a windowed
//! control chart watches the prediction residuals for values outside its
//! learned boundaries. A seeded traffic simulator generates labeled
//! datasets so the whole pipeline can be exercised without live polling.

pub mod chart;
pub mod error;
pub mod metrics;
pub mod mib;
pub mod nnarx;
pub mod sim;

pub use chart::{
    AlarmEvent, BaselineUpdate, ControlLimits, StreamOutcome, WindowConfig, WindowFlag,
    WindowReport,
};
pub use error::{Error, Result};
pub use metrics::{ConfusionMatrix, ErrorReport, WindowLabel};
pub use mib::{
    CounterMode, Dataset, MibRecord, MibVariable, Scaler, TrafficClass, VariableSummary,
};
pub use nnarx::{LagConfig, Network, RegressionSet, TrainConfig, TrainOutcome};
pub use sim::{AttackShape, AttackSpec, BaselineParams, ScenarioConfig};
