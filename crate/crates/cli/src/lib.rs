//! Scenario runner, attack suite and benchmark front end for the
//! TrustChain ledger.
//!
//! A scenario is a TOML file that declares participants and quality
//! contracts, then replays a timeline of transactions and application
//! actions through the orderer and the ledger. See `docs/serialization.md`
//! for the format.

pub mod attacks;
pub mod cli;
pub mod runner;
pub mod scenario;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;
use trustchain_core::LedgerMode;

pub use runner::{execute, RunOutput, RunReport};
pub use scenario::Scenario;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("{0}")]
    Runtime(String),
    #[error("{} expectation(s) failed:\n  {}", .failures.len(), .failures.join("\n  "))]
    AssertionFailed { failures: Vec<String>, report: Box<RunReport> },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io { path: path.to_path_buf(), source }
}

/// Parses and runs a scenario from text.
pub fn run_scenario_str(text: &str, seed: Option<u64>, mode: Option<LedgerMode>) -> Result<RunOutput, ScenarioError> {
    execute(&Scenario::parse(text)?, seed, mode)
}

/// Parses and runs a scenario file.
pub fn run_scenario(path: &Path, seed: Option<u64>, mode: Option<LedgerMode>) -> Result<RunOutput, ScenarioError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    run_scenario_str(&text, seed, mode)
}

/// Writes `report.json`, `events.jsonl`, `state.json` and `chain.bin` into
/// `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, out: &RunOutput) -> Result<(), ScenarioError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let write = |name: &str, bytes: &[u8]| {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|source| ScenarioError::Io { path: p, source })
    };
    let report = serde_json::to_string_pretty(&out.report).expect("report serializes");
    write("report.json", report.as_bytes())?;
    write("events.jsonl", out.ledger.events().to_jsonl().as_bytes())?;
    write("state.json", out.ledger.state().to_json().as_bytes())?;
    write("chain.bin", &out.ledger.export_chain())
}
