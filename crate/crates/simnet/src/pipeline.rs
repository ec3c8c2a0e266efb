//! Event-driven model of the consortium pipeline.
//!
//! Each tx goes through a single FIFO endorser, the orderer (cut at
//! `batch_size` txs or `batch_timeout_s` after the first pending tx), a
//! broadcast delay, and a single FIFO validating peer that processes whole
//! blocks. A tx counts as committed when its block finishes validation.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{BenchTx, PipelineConfig};

/// One tx offered to the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrival<P> {
    pub at: f64,
    pub kind: BenchTx,
    pub payload: P,
}

/// Open-loop fixed-rate load, as a benchmark client would send it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub rate: f64,
    pub duration_s: f64,
    pub kind: BenchTx,
}

impl Workload {
    /// Tx `i` is issued at `(i + u/2) / rate` with `u` uniform in [0, 1), so
    /// issue order equals index order and every tx falls inside the window.
    pub fn arrivals(&self, rng: &mut impl Rng) -> Vec<Arrival<()>> {
        let n = (self.rate * self.duration_s + 1e-9).floor() as usize;
        (0..n)
            .map(|i| Arrival { at: (i as f64 + 0.5 * rng.gen::<f64>()) / self.rate, kind: self.kind, payload: () })
            .collect()
    }
}

/// Receives each block's payloads, in order, as the block commits.
pub trait CommitSink<P> {
    fn commit(&mut self, payloads: Vec<P>, at: f64);
}

/// Discards payloads; used by the benchmark.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl<P> CommitSink<P> for NullSink {
    fn commit(&mut self, _: Vec<P>, _: f64) {}
}

/// Per-tx stage timestamps. Stages not reached before the end of the run
/// are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxTrace {
    pub kind: BenchTx,
    pub issued_at: f64,
    pub endorsed_at: Option<f64>,
    pub ordered_at: Option<f64>,
    pub committed_at: Option<f64>,
    pub dropped: bool,
}

impl TxTrace {
    pub fn latency(&self) -> Option<f64> {
        self.committed_at.map(|c| c - self.issued_at)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub duration_s: f64,
    pub txs: Vec<TxTrace>,
    pub blocks: usize,
}

impl Trace {
    pub fn issued(&self) -> usize {
        self.txs.len()
    }

    pub fn committed(&self) -> usize {
        self.txs.iter().filter(|t| t.committed_at.is_some()).count()
    }

    pub fn dropped(&self) -> usize {
        self.txs.iter().filter(|t| t.dropped).count()
    }

    /// Issued but neither committed nor dropped when the clock ran out.
    pub fn queued(&self) -> usize {
        self.issued() - self.committed() - self.dropped()
    }

    pub fn throughput(&self) -> f64 {
        self.committed() as f64 / self.duration_s
    }

    /// Mean and max latency over committed txs; zero when nothing committed.
    pub fn latency_stats(&self) -> (f64, f64) {
        let (mut n, mut sum, mut max) = (0usize, 0.0, 0.0f64);
        for l in self.txs.iter().filter_map(TxTrace::latency) {
            n += 1;
            sum += l;
            max = max.max(l);
        }
        if n == 0 {
            (0.0, 0.0)
        } else {
            (sum / n as f64, max)
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Ev {
    Arrive(usize),
    Endorsed(usize),
    Timeout(u64),
    Delivered(usize),
    Validated,
}

#[derive(Debug)]
struct Scheduled {
    at: f64,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    // min-heap on (time, insertion order)
    fn cmp(&self, other: &Self) -> Ordering {
        other.at.total_cmp(&self.at).then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Sim<'a, P, S> {
    cfg: &'a PipelineConfig,
    sink: &'a mut S,
    heap: BinaryHeap<Scheduled>,
    seq: u64,
    trace: Vec<TxTrace>,
    payloads: Vec<Option<P>>,
    endorse_rng: ChaCha8Rng,
    validate_rng: ChaCha8Rng,
    endorse_q: VecDeque<usize>,
    endorsing: bool,
    pending: Vec<usize>,
    batch_seq: u64,
    blocks: Vec<Vec<usize>>,
    validate_q: VecDeque<usize>,
    validate_q_txs: usize,
    validating: Option<usize>,
    committed_blocks: usize,
}

impl<P, S: CommitSink<P>> Sim<'_, P, S> {
    fn schedule(&mut self, at: f64, ev: Ev) {
        self.seq += 1;
        self.heap.push(Scheduled { at, seq: self.seq, ev });
    }

    fn noise(rng: &mut ChaCha8Rng, jitter: f64) -> f64 {
        if jitter == 0.0 {
            1.0
        } else {
            1.0 + jitter * (2.0 * rng.gen::<f64>() - 1.0)
        }
    }

    fn start_endorsing(&mut self, now: f64) {
        if self.endorsing {
            return;
        }
        if let Some(i) = self.endorse_q.pop_front() {
            let base = self.cfg.endorse_cost(self.trace[i].kind);
            let d = base * Self::noise(&mut self.endorse_rng, self.cfg.service_jitter);
            self.endorsing = true;
            self.schedule(now + d, Ev::Endorsed(i));
        }
    }

    fn cut_block(&mut self, now: f64) {
        let txs = std::mem::take(&mut self.pending);
        self.batch_seq += 1;
        for &i in &txs {
            self.trace[i].ordered_at = Some(now);
        }
        self.blocks.push(txs);
        let b = self.blocks.len() - 1;
        self.schedule(now + self.cfg.broadcast_s, Ev::Delivered(b));
    }

    fn start_validating(&mut self, now: f64) {
        if self.validating.is_some() {
            return;
        }
        if let Some(b) = self.validate_q.pop_front() {
            self.validate_q_txs -= self.blocks[b].len();
            let work: f64 = self.blocks[b].iter().map(|&i| self.cfg.validate_cost(self.trace[i].kind)).sum();
            let f = self.cfg.degradation.factor(self.validate_q_txs);
            let d = work * f * Self::noise(&mut self.validate_rng, self.cfg.service_jitter) + self.cfg.commit_block_s;
            self.validating = Some(b);
            self.schedule(now + d, Ev::Validated);
        }
    }

    fn handle(&mut self, now: f64, ev: Ev) {
        match ev {
            Ev::Arrive(i) => {
                if self.endorse_q.len() >= self.cfg.queue_capacity {
                    self.trace[i].dropped = true;
                    self.payloads[i] = None;
                } else {
                    self.endorse_q.push_back(i);
                    self.start_endorsing(now);
                }
            }
            Ev::Endorsed(i) => {
                self.endorsing = false;
                self.trace[i].endorsed_at = Some(now);
                self.pending.push(i);
                if self.pending.len() >= self.cfg.batch_size {
                    self.cut_block(now);
                } else if self.pending.len() == 1 {
                    let seq = self.batch_seq;
                    self.schedule(now + self.cfg.batch_timeout_s, Ev::Timeout(seq));
                }
                self.start_endorsing(now);
            }
            Ev::Timeout(seq) => {
                if seq == self.batch_seq && !self.pending.is_empty() {
                    self.cut_block(now);
                }
            }
            Ev::Delivered(b) => {
                self.validate_q_txs += self.blocks[b].len();
                self.validate_q.push_back(b);
                self.start_validating(now);
            }
            Ev::Validated => {
                let b = self.validating.take().expect("validation in progress");
                let mut out = Vec::with_capacity(self.blocks[b].len());
                for &i in &self.blocks[b] {
                    self.trace[i].committed_at = Some(now);
                    if let Some(p) = self.payloads[i].take() {
                        out.push(p);
                    }
                }
                self.committed_blocks += 1;
                self.sink.commit(out, now);
                self.start_validating(now);
            }
        }
    }
}

/// Per-stage rng streams, so changing validation costs never perturbs the
/// endorsement noise and baseline/TrustChain runs see the same arrivals.
pub(crate) fn stage_rngs(seed: u64, cell: u64) -> [ChaCha8Rng; 3] {
    [0u64, 1, 2].map(|stage| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(cell.wrapping_mul(4).wrapping_add(stage));
        rng
    })
}

/// Runs a fixed-rate workload with no sink.
pub fn run_pipeline(config: &PipelineConfig, workload: &Workload, seed: u64) -> Trace {
    run_cell(config, workload, seed, 0)
}

pub(crate) fn run_cell(config: &PipelineConfig, workload: &Workload, seed: u64, cell: u64) -> Trace {
    let [mut arrive, endorse, validate] = stage_rngs(seed, cell);
    let arrivals = workload.arrivals(&mut arrive);
    simulate(config, arrivals, workload.duration_s, endorse, validate, &mut NullSink)
}

/// Runs explicit arrivals, handing committed payloads to `sink` in block
/// order. Arrivals must be sorted by time.
pub fn run_pipeline_with<P, S: CommitSink<P>>(
    config: &PipelineConfig,
    arrivals: Vec<Arrival<P>>,
    duration_s: f64,
    seed: u64,
    sink: &mut S,
) -> Trace {
    let [_, endorse, validate] = stage_rngs(seed, 0);
    simulate(config, arrivals, duration_s, endorse, validate, sink)
}

fn simulate<P, S: CommitSink<P>>(
    cfg: &PipelineConfig,
    arrivals: Vec<Arrival<P>>,
    duration_s: f64,
    endorse_rng: ChaCha8Rng,
    validate_rng: ChaCha8Rng,
    sink: &mut S,
) -> Trace {
    debug_assert!(arrivals.windows(2).all(|w| w[0].at <= w[1].at));
    let n = arrivals.len();
    let mut sim = Sim {
        cfg,
        sink,
        heap: BinaryHeap::with_capacity(n + 8),
        seq: 0,
        trace: Vec::with_capacity(n),
        payloads: Vec::with_capacity(n),
        endorse_rng,
        validate_rng,
        endorse_q: VecDeque::new(),
        endorsing: false,
        pending: Vec::new(),
        batch_seq: 0,
        blocks: Vec::new(),
        validate_q: VecDeque::new(),
        validate_q_txs: 0,
        validating: None,
        committed_blocks: 0,
    };
    for (i, a) in arrivals.into_iter().enumerate() {
        sim.trace.push(TxTrace {
            kind: a.kind,
            issued_at: a.at,
            endorsed_at: None,
            ordered_at: None,
            committed_at: None,
            dropped: false,
        });
        sim.payloads.push(Some(a.payload));
        sim.schedule(a.at, Ev::Arrive(i));
    }
    while let Some(Scheduled { at, ev, .. }) = sim.heap.pop() {
        if at > duration_s {
            break;
        }
        sim.handle(at, ev);
    }
    Trace { duration_s, txs: sim.trace, blocks: sim.committed_blocks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> PipelineConfig {
        PipelineConfig { service_jitter: 0.0, ..Default::default() }
    }

    #[test]
    fn single_tx_latency_is_the_sum_of_stage_costs() {
        let cfg = quiet();
        let arrivals = vec![Arrival { at: 1.0, kind: BenchTx::Trade, payload: () }];
        let t = run_pipeline_with(&cfg, arrivals, 10.0, 0, &mut NullSink);
        let tx = &t.txs[0];
        let endorse = cfg.endorse_trade_s;
        assert!((tx.endorsed_at.unwrap() - (1.0 + endorse)).abs() < 1e-12);
        // alone in its batch, so the timeout cuts the block
        assert!((tx.ordered_at.unwrap() - (1.0 + endorse + cfg.batch_timeout_s)).abs() < 1e-12);
        let expected = endorse + cfg.batch_timeout_s + cfg.broadcast_s + cfg.validate_cost(BenchTx::Trade) + cfg.commit_block_s;
        assert!((tx.latency().unwrap() - expected).abs() < 1e-12);
        assert_eq!(t.blocks, 1);
    }

    #[test]
    fn full_batch_cuts_without_waiting() {
        let cfg = PipelineConfig { batch_size: 2, ..quiet() };
        let arrivals = (0..2).map(|i| Arrival { at: i as f64 * 0.1, kind: BenchTx::Trade, payload: i }).collect();
        struct Keep(Vec<Vec<i32>>);
        impl CommitSink<i32> for Keep {
            fn commit(&mut self, p: Vec<i32>, _: f64) {
                self.0.push(p);
            }
        }
        let mut sink = Keep(vec![]);
        let t = run_pipeline_with(&cfg, arrivals, 10.0, 0, &mut sink);
        assert_eq!(sink.0, vec![vec![0, 1]]);
        assert!((t.txs[1].ordered_at.unwrap() - t.txs[1].endorsed_at.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn overload_drops_past_queue_capacity() {
        let cfg = PipelineConfig { queue_capacity: 3, ..quiet() };
        let arrivals = (0..20).map(|_| Arrival { at: 0.0, kind: BenchTx::Create, payload: () }).collect();
        let t = run_pipeline_with(&cfg, arrivals, 5.0, 0, &mut NullSink);
        // one in service, three waiting
        assert_eq!(t.dropped(), 16);
        assert_eq!(t.issued(), t.committed() + t.queued() + t.dropped());
    }

    #[test]
    fn events_past_the_window_are_left_queued() {
        let cfg = quiet();
        let w = Workload { rate: 10.0, duration_s: 3.0, kind: BenchTx::Trade };
        let t = run_pipeline(&cfg, &w, 1);
        assert_eq!(t.issued(), 30);
        assert!(t.queued() > 0);
        assert_eq!(t.issued(), t.committed() + t.queued() + t.dropped());
    }
}
