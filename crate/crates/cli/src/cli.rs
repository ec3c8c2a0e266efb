//! Command-line front end. `main` only forwards to [`main_with_args`].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Deserialize;
use trustchain_core::application::{query, Issuer, Query};
use trustchain_core::ledger::{verify_chain_bytes, LedgerState, ParticipantId, Tick};
use trustchain_core::{LedgerConfig, LedgerMode};
use trustchain_simnet::{
    compare_modes, parse_rates, run_bench, run_realtime, BenchPlan, BenchResult, BenchTx, PipelineConfig, Workload,
};

use crate::attacks::run_attack_suite;
use crate::runner::execute;
use crate::scenario::{Scenario, CONSUMER};
use crate::{write_outputs, ScenarioError};

#[derive(Debug, Parser)]
#[command(name = "trustchain", version, about = "Supply-chain ledger with reputation and trust scoring")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replay a scenario file and write its report.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario's key-derivation seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for report.json, events.jsonl, state.json and chain.bin.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        mode: Option<LedgerMode>,
        /// TOML ledger config replacing the scenario's `[config]` table.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run every bundled attack scenario.
    Attacks {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Send-rate sweep on the simulated pipeline. Without --mode both modes
    /// run and an overhead table is written too.
    Bench {
        #[arg(long)]
        mode: Option<LedgerMode>,
        #[arg(long = "tx")]
        tx: Option<BenchTx>,
        /// `start:end:step` or a comma list, in tx/s.
        #[arg(long)]
        rates: Option<String>,
        /// Seconds of simulated time per run.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// TOML file with `[pipeline]` and `[plan]` tables.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run one threaded wall-clock pass per rate instead of the
        /// discrete-event sweep.
        #[arg(long)]
        realtime: bool,
        /// Simulated seconds per wall-clock second in --realtime.
        #[arg(long, default_value_t = 20.0)]
        speedup: f64,
    },
    /// Answer a query against a saved state.json.
    Query {
        #[arg(long)]
        state: PathBuf,
        /// Participant id, or `consumer`.
        #[arg(long = "as")]
        issuer: String,
        /// Query as JSON, e.g. `{"query":"revoked_list"}`.
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 0)]
        now: Tick,
    },
    /// Check the hash links of an exported chain.bin.
    Verify {
        #[arg(long)]
        chain: PathBuf,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BenchFile {
    pipeline: PipelineConfig,
    plan: BenchPlan,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: &Option<PathBuf>, name: &str, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let p = dir.join(name);
            fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        }
        None => {
            writeln!(stdout, "# {name}")?;
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn run_cmd(
    scenario: &Path,
    seed: Option<u64>,
    out: &Option<PathBuf>,
    mode: Option<LedgerMode>,
    config: &Option<PathBuf>,
    stdout: &mut dyn Write,
) -> Result<()> {
    let mut s = Scenario::parse(&read(scenario)?).with_context(|| scenario.display().to_string())?;
    if let Some(c) = config {
        s.config = toml::from_str::<LedgerConfig>(&read(c)?).with_context(|| format!("parsing {}", c.display()))?;
    }
    let output = execute(&s, seed, mode)?;
    if let Some(dir) = out {
        write_outputs(dir, &output)?;
    }
    let r = &output.report;
    writeln!(stdout, "scenario {} seed {} mode {}", r.scenario, r.seed, r.mode)?;
    writeln!(stdout, "height {} head {} valid {}", r.chain_height, r.chain_head, r.chain_valid)?;
    writeln!(stdout, "state digest {}", r.state_digest)?;
    for t in &r.trust {
        writeln!(stdout, "  {} {}: R={:.6} T={:.6}", t.id, t.commodity_type, t.reputation, t.trust)?;
    }
    let failures = r.failures();
    if !failures.is_empty() {
        return Err(ScenarioError::AssertionFailed { failures, report: Box::new(output.report) }.into());
    }
    writeln!(stdout, "all {} steps and {} checks passed", r.steps.len(), r.assertions.len())?;
    Ok(())
}

fn attacks_cmd(out: &Option<PathBuf>, stdout: &mut dyn Write) -> Result<()> {
    let suite = run_attack_suite();
    for o in &suite.outcomes {
        writeln!(stdout, "{} {}", if o.passed { "PASS" } else { "FAIL" }, o.row)?;
    }
    for row in &suite.external {
        writeln!(stdout, "DOC  {row} (defended outside the ledger)")?;
    }
    if out.is_some() {
        emit(out, "attacks.json", &serde_json::to_string_pretty(&suite)?, stdout)?;
    }
    if !suite.passed() {
        bail!("attack suite regressions:\n  {}", suite.failures().join("\n  "));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bench_cmd(
    mode: Option<LedgerMode>,
    tx: Option<BenchTx>,
    rates: &Option<String>,
    duration: Option<f64>,
    runs: Option<usize>,
    seed: Option<u64>,
    config: &Option<PathBuf>,
    out: &Option<PathBuf>,
    realtime: bool,
    speedup: f64,
    stdout: &mut dyn Write,
) -> Result<()> {
    let file: BenchFile = match config {
        Some(p) => toml::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => BenchFile::default(),
    };
    let mut plan = file.plan;
    if let Some(r) = rates {
        plan.send_rates = parse_rates(r).map_err(anyhow::Error::msg)?;
    }
    if let Some(d) = duration {
        plan.duration_s = d;
    }
    if let Some(n) = runs {
        plan.runs = n;
    }
    if let Some(s) = seed {
        plan.seed = s;
    }
    if let Some(t) = tx {
        plan.tx_kind = t;
    }
    plan.validate()?;
    let modes = match mode {
        Some(m) => vec![m],
        None => vec![LedgerMode::Baseline, LedgerMode::TrustChain],
    };

    if realtime {
        if !(speedup.is_finite() && speedup > 0.0) {
            bail!("--speedup must be positive");
        }
        let mut csv = String::from("rate,mode,tx_kind,throughput,mean_latency_s,max_latency_s,committed,dropped\n");
        for m in &modes {
            let cfg = file.pipeline.clone().with_mode(*m);
            cfg.validate()?;
            for &rate in &plan.send_rates {
                let w = Workload { rate, duration_s: plan.duration_s, kind: plan.tx_kind };
                let trace = run_realtime(&cfg, &w, plan.seed, speedup);
                let (mean, max) = trace.latency_stats();
                csv.push_str(&format!(
                    "{rate},{m},{},{},{mean},{max},{},{}\n",
                    plan.tx_kind,
                    trace.throughput(),
                    trace.committed(),
                    trace.dropped()
                ));
            }
        }
        return emit(out, "realtime.csv", &csv, stdout);
    }

    let mut results: Vec<BenchResult> = Vec::new();
    for m in &modes {
        let res = run_bench(&plan, &file.pipeline.clone().with_mode(*m))?;
        writeln!(
            stdout,
            "{m} {}: saturation at {}",
            plan.tx_kind,
            res.saturation_rate.map_or("none".into(), |r| format!("{r} tx/s"))
        )?;
        emit(out, &format!("{m}_{}_cells.csv", plan.tx_kind), &res.cells_csv(), stdout)?;
        emit(out, &format!("{m}_{}_summary.csv", plan.tx_kind), &res.summary_csv(), stdout)?;
        results.push(res);
    }
    if let [base, tc] = results.as_slice() {
        let report = compare_modes(base, tc)?;
        emit(out, &format!("overhead_{}.csv", plan.tx_kind), &report.to_csv(), stdout)?;
    }
    Ok(())
}

fn query_cmd(state: &Path, issuer: &str, q: &str, now: Tick, stdout: &mut dyn Write) -> Result<()> {
    let state = LedgerState::from_json(&read(state)?).context("parsing state snapshot")?;
    let q: Query = serde_json::from_str(q).context("parsing --query")?;
    let issuer = if issuer == CONSUMER {
        Issuer::Consumer
    } else {
        Issuer::Member(ParticipantId::new(issuer).context("empty --as")?)
    };
    // Snapshots carry no ACL; queries are checked against the default rules.
    let acl = trustchain_core::ledger::AccessControlList::default();
    let result = query(&state, &acl, &issuer, &q, now)?;
    writeln!(stdout, "{}", serde_json::to_string_pretty(&result)?)?;
    Ok(())
}

fn verify_cmd(chain: &Path, stdout: &mut dyn Write) -> Result<()> {
    let bytes = fs::read(chain).with_context(|| format!("reading {}", chain.display()))?;
    if !verify_chain_bytes(&bytes) {
        bail!("{}: chain verification failed", chain.display());
    }
    writeln!(stdout, "{}: ok", chain.display())?;
    Ok(())
}

pub fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Run { scenario, seed, out, mode, config } => run_cmd(&scenario, seed, &out, mode, &config, stdout),
        Command::Attacks { out } => attacks_cmd(&out, stdout),
        Command::Bench { mode, tx, rates, duration, runs, seed, config, out, realtime, speedup } => {
            bench_cmd(mode, tx, &rates, duration, runs, seed, &config, &out, realtime, speedup, stdout)
        }
        Command::Query { state, issuer, query, now } => query_cmd(&state, &issuer, &query, now, stdout),
        Command::Verify { chain } => verify_cmd(&chain, stdout),
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code: 0 on success, 1 on runtime errors and
/// failed expectations, 2 on usage errors.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            1
        }
    }
}
