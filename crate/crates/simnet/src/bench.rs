use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use trustchain_core::LedgerMode;

use crate::config::{BenchPlan, BenchTx, PipelineConfig};
use crate::pipeline::{run_cell, Workload};
use crate::SimError;

/// One (rate, run) cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub rate: f64,
    pub run: usize,
    pub mode: LedgerMode,
    pub tx_kind: BenchTx,
    pub throughput: f64,
    pub mean_latency_s: f64,
    pub max_latency_s: f64,
    pub committed: usize,
    pub dropped: usize,
    pub issued: usize,
    pub queued: usize,
}

/// Run-averaged figures for one send rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub rate: f64,
    pub throughput: f64,
    pub mean_latency_s: f64,
    pub max_latency_s: f64,
    pub committed: f64,
    pub dropped: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub plan: BenchPlan,
    pub mode: LedgerMode,
    pub cells: Vec<CellResult>,
    pub rates: Vec<RateSummary>,
    /// First swept rate whose successor commits no more; `None` if
    /// throughput rose across the whole sweep.
    pub saturation_rate: Option<f64>,
}

/// Cell stream id: depends on the rate value and run index only, so two
/// sweeps over the same plan see the same arrivals whatever their mode.
fn cell_id(rate: f64, run: usize) -> u64 {
    rate.to_bits().rotate_left(17) ^ run as u64
}

pub fn run_bench(plan: &BenchPlan, config: &PipelineConfig) -> Result<BenchResult, SimError> {
    plan.validate()?;
    config.validate()?;
    let jobs: Vec<(f64, usize)> =
        plan.send_rates.iter().flat_map(|&r| (0..plan.runs).map(move |run| (r, run))).collect();
    let cells: Vec<CellResult> = jobs
        .par_iter()
        .map(|&(rate, run)| {
            let w = Workload { rate, duration_s: plan.duration_s, kind: plan.tx_kind };
            let t = run_cell(config, &w, plan.seed, cell_id(rate, run));
            let (mean, max) = t.latency_stats();
            CellResult {
                rate,
                run,
                mode: config.mode,
                tx_kind: plan.tx_kind,
                throughput: t.throughput(),
                mean_latency_s: mean,
                max_latency_s: max,
                committed: t.committed(),
                dropped: t.dropped(),
                issued: t.issued(),
                queued: t.queued(),
            }
        })
        .collect();
    let rates: Vec<RateSummary> = cells
        .chunks(plan.runs)
        .map(|c| {
            let avg = |f: &dyn Fn(&CellResult) -> f64| c.iter().map(f).sum::<f64>() / c.len() as f64;
            RateSummary {
                rate: c[0].rate,
                throughput: avg(&|x| x.throughput),
                mean_latency_s: avg(&|x| x.mean_latency_s),
                max_latency_s: avg(&|x| x.max_latency_s),
                committed: avg(&|x| x.committed as f64),
                dropped: avg(&|x| x.dropped as f64),
            }
        })
        .collect();
    let saturation_rate = saturation_rate(&rates);
    Ok(BenchResult { plan: plan.clone(), mode: config.mode, cells, rates, saturation_rate })
}

pub fn saturation_rate(rates: &[RateSummary]) -> Option<f64> {
    rates.windows(2).find(|w| w[1].throughput <= w[0].throughput).map(|w| w[0].rate)
}

impl BenchResult {
    /// Per-cell CSV: `rate,run,mode,tx_kind,throughput,mean_latency_s,max_latency_s,committed,dropped`.
    pub fn cells_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["rate", "run", "mode", "tx_kind", "throughput", "mean_latency_s", "max_latency_s", "committed", "dropped"])
            .expect("in-memory write");
        for c in &self.cells {
            w.write_record([
                c.rate.to_string(),
                c.run.to_string(),
                c.mode.to_string(),
                c.tx_kind.to_string(),
                format!("{:.6}", c.throughput),
                format!("{:.6}", c.mean_latency_s),
                format!("{:.6}", c.max_latency_s),
                c.committed.to_string(),
                c.dropped.to_string(),
            ])
            .expect("in-memory write");
        }
        into_string(w)
    }

    /// Run-averaged CSV: `rate,mode,tx_kind,throughput,mean_latency_s,max_latency_s,committed,dropped`.
    pub fn summary_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["rate", "mode", "tx_kind", "throughput", "mean_latency_s", "max_latency_s", "committed", "dropped"])
            .expect("in-memory write");
        for r in &self.rates {
            w.write_record([
                r.rate.to_string(),
                self.mode.to_string(),
                self.plan.tx_kind.to_string(),
                format!("{:.6}", r.throughput),
                format!("{:.6}", r.mean_latency_s),
                format!("{:.6}", r.max_latency_s),
                format!("{:.1}", r.committed),
                format!("{:.1}", r.dropped),
            ])
            .expect("in-memory write");
        }
        into_string(w)
    }
}

fn into_string(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadRow {
    pub rate: f64,
    pub throughput_baseline: f64,
    pub throughput_trustchain: f64,
    /// baseline - trustchain
    pub throughput_delta: f64,
    /// delta / baseline, zero when the baseline committed nothing
    pub relative_loss: f64,
    pub latency_baseline_s: f64,
    pub latency_trustchain_s: f64,
    /// trustchain - baseline
    pub latency_delta_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadReport {
    pub tx_kind: BenchTx,
    pub rows: Vec<OverheadRow>,
    pub saturation_baseline: Option<f64>,
    pub saturation_trustchain: Option<f64>,
}

impl OverheadReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).expect("in-memory write");
        }
        into_string(w)
    }
}

/// Per-rate delta table between a baseline and a TrustChain sweep of the
/// same plan.
pub fn compare_modes(baseline: &BenchResult, trustchain: &BenchResult) -> Result<OverheadReport, SimError> {
    if baseline.mode != LedgerMode::Baseline || trustchain.mode != LedgerMode::TrustChain {
        return Err(SimError::PlanMismatch(format!(
            "expected baseline vs trustchain, got {} vs {}",
            baseline.mode, trustchain.mode
        )));
    }
    if baseline.plan != trustchain.plan {
        return Err(SimError::PlanMismatch("sweeps were run with different plans".into()));
    }
    let rows = baseline
        .rates
        .iter()
        .zip(&trustchain.rates)
        .map(|(b, t)| {
            let delta = b.throughput - t.throughput;
            OverheadRow {
                rate: b.rate,
                throughput_baseline: b.throughput,
                throughput_trustchain: t.throughput,
                throughput_delta: delta,
                relative_loss: if b.throughput > 0.0 { delta / b.throughput } else { 0.0 },
                latency_baseline_s: b.mean_latency_s,
                latency_trustchain_s: t.mean_latency_s,
                latency_delta_s: t.mean_latency_s - b.mean_latency_s,
            }
        })
        .collect();
    Ok(OverheadReport {
        tx_kind: baseline.plan.tx_kind,
        rows,
        saturation_baseline: baseline.saturation_rate,
        saturation_trustchain: trustchain.saturation_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(rate: f64, throughput: f64) -> RateSummary {
        RateSummary { rate, throughput, mean_latency_s: 0.0, max_latency_s: 0.0, committed: 0.0, dropped: 0.0 }
    }

    #[test]
    fn saturation_is_the_first_non_increase() {
        let s = [summary(10.0, 10.0), summary(20.0, 19.0), summary(30.0, 19.0), summary(40.0, 12.0)];
        assert_eq!(saturation_rate(&s), Some(20.0));
        assert_eq!(saturation_rate(&s[..2]), None);
        assert_eq!(saturation_rate(&[]), None);
    }

    #[test]
    fn csv_headers() {
        let plan = BenchPlan { send_rates: vec![5.0], duration_s: 5.0, runs: 2, ..Default::default() };
        let r = run_bench(&plan, &PipelineConfig::default()).unwrap();
        let csv = r.cells_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "rate,run,mode,tx_kind,throughput,mean_latency_s,max_latency_s,committed,dropped"
        );
        assert!(lines.next().unwrap().starts_with("5,0,trustchain,trade,"));
        assert_eq!(r.summary_csv().lines().count(), 2);
    }
}
