//! Throughput and latency benchmark for the ledger, run on a simulated
//! endorse → order → validate → commit pipeline.
//!
//! The core is a deterministic discrete-event model ([`run_pipeline`]); a
//! send-rate sweep ([`run_bench`]) runs its (rate, run) cells in parallel and
//! [`compare_modes`] turns a baseline and a TrustChain sweep into an overhead
//! table. [`LedgerSink`] lets the same pipeline drive a real [`Ledger`]
//! so its commit order can be checked against direct submission.
//!
//! [`Ledger`]: trustchain_core::Ledger

mod bench;
mod config;
mod pipeline;
mod realtime;
mod sink;

pub use bench::{
    compare_modes, run_bench, saturation_rate, BenchResult, CellResult, OverheadReport, OverheadRow, RateSummary,
};
pub use config::{parse_rates, BenchPlan, BenchTx, Degradation, PipelineConfig};
pub use pipeline::{run_pipeline, run_pipeline_with, Arrival, CommitSink, NullSink, Trace, TxTrace, Workload};
pub use realtime::run_realtime;
pub use sink::LedgerSink;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error("invalid bench plan: {0}")]
    InvalidPlan(String),
    #[error("plan mismatch: {0}")]
    PlanMismatch(String),
}
