use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::commands::RunOutcome;

/// Record of one pipeline run: re-running the recorded argv with the same
/// inputs reproduces the listed outputs byte for byte (seeds are explicit
/// everywhere; only this manifest's duration field varies).
#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    argv: Vec<String>,
    settings: &'a serde_json::Value,
    seed: Option<u64>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    tool_version: &'static str,
    duration_ms: u128,
}

pub fn write(
    path: &Path,
    command: &str,
    outcome: &RunOutcome,
    duration_ms: u128,
) -> io::Result<()> {
    let manifest = RunManifest {
        command,
        argv: std::env::args().collect(),
        settings: &outcome.settings,
        seed: outcome.seed,
        inputs: outcome
            .inputs
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        outputs: outcome
            .outputs
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        tool_version: env!("CARGO_PKG_VERSION"),
        duration_ms,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(path, text)
}
