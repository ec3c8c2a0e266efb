//! Wall-clock variant of the pipeline: one thread per stage, sleeping for
//! each service time scaled down by `speedup`. Timings are subject to OS
//! scheduling, so this is for smoke tests only; benchmarks use the
//! event-driven model.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::{channel, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use crate::config::PipelineConfig;
use crate::pipeline::{stage_rngs, Trace, TxTrace, Workload};

pub fn run_realtime(config: &PipelineConfig, workload: &Workload, seed: u64, speedup: f64) -> Trace {
    assert!(speedup > 0.0, "speedup must be positive");
    let [mut rng, ..] = stage_rngs(seed, 0);
    let arrivals = workload.arrivals(&mut rng);
    let trace = Mutex::new(
        arrivals
            .iter()
            .map(|a| TxTrace {
                kind: a.kind,
                issued_at: a.at,
                endorsed_at: None,
                ordered_at: None,
                committed_at: None,
                dropped: false,
            })
            .collect::<Vec<_>>(),
    );
    let block_count = AtomicUsize::new(0);
    let queued_for_endorsement = AtomicUsize::new(0);
    let start = Instant::now();
    let end = start + Duration::from_secs_f64(workload.duration_s / speedup);
    let now = || start.elapsed().as_secs_f64() * speedup;
    let sleep_until_sim = |t: f64| {
        let target = start + Duration::from_secs_f64(t / speedup);
        if let Some(d) = target.checked_duration_since(Instant::now()) {
            thread::sleep(d);
        }
    };
    let sleep_sim = |d: f64| thread::sleep(Duration::from_secs_f64(d / speedup));
    let poll = Duration::from_millis(5);

    let (to_endorse, endorse_rx) = channel::<usize>();
    let (to_order, order_rx) = channel::<usize>();
    let (to_validate, validate_rx) = channel::<(Vec<usize>, f64)>();

    let (trace_ref, blocks, waiting, arrivals) = (&trace, &block_count, &queued_for_endorsement, &arrivals);
    thread::scope(|s| {
        s.spawn(move || {
            for (i, a) in arrivals.iter().enumerate() {
                sleep_until_sim(a.at);
                if waiting.load(Ordering::SeqCst) >= config.queue_capacity {
                    trace_ref.lock().unwrap()[i].dropped = true;
                    continue;
                }
                waiting.fetch_add(1, Ordering::SeqCst);
                if to_endorse.send(i).is_err() {
                    return;
                }
            }
        });
        s.spawn(move || {
            while Instant::now() < end {
                let Ok(i) = endorse_rx.recv_timeout(poll) else { continue };
                waiting.fetch_sub(1, Ordering::SeqCst);
                let kind = trace_ref.lock().unwrap()[i].kind;
                sleep_sim(config.endorse_cost(kind));
                trace_ref.lock().unwrap()[i].endorsed_at = Some(now());
                if to_order.send(i).is_err() {
                    return;
                }
            }
        });
        s.spawn(move || {
            let mut pending = Vec::new();
            let mut deadline: Option<f64> = None;
            let cut = |pending: &mut Vec<usize>| {
                let t = now();
                let txs = std::mem::take(pending);
                let mut tr = trace_ref.lock().unwrap();
                for &i in &txs {
                    tr[i].ordered_at = Some(t);
                }
                to_validate.send((txs, t + config.broadcast_s)).is_ok()
            };
            while Instant::now() < end {
                match order_rx.recv_timeout(poll) {
                    Ok(i) => {
                        pending.push(i);
                        if pending.len() == 1 {
                            deadline = Some(now() + config.batch_timeout_s);
                        }
                        if pending.len() >= config.batch_size && !cut(&mut pending) {
                            return;
                        }
                    }
                    Err(RecvTimeoutError::Timeout) => {}
                    Err(RecvTimeoutError::Disconnected) => return,
                }
                if deadline.is_some_and(|d| now() >= d) && !pending.is_empty() {
                    deadline = None;
                    if !cut(&mut pending) {
                        return;
                    }
                }
            }
        });
        s.spawn(move || {
            let mut queued = 0usize;
            let mut backlog = std::collections::VecDeque::new();
            while Instant::now() < end {
                while let Ok(b) = validate_rx.try_recv() {
                    queued += b.0.len();
                    backlog.push_back(b);
                }
                let Some((txs, deliver_at)) = backlog.pop_front() else {
                    thread::sleep(poll);
                    continue;
                };
                queued -= txs.len();
                sleep_until_sim(deliver_at);
                let work: f64 = {
                    let tr = trace_ref.lock().unwrap();
                    txs.iter().map(|&i| config.validate_cost(tr[i].kind)).sum()
                };
                sleep_sim(work * config.degradation.factor(queued) + config.commit_block_s);
                let t = now();
                if t > workload.duration_s {
                    return;
                }
                let mut tr = trace_ref.lock().unwrap();
                for &i in &txs {
                    tr[i].committed_at = Some(t);
                }
                blocks.fetch_add(1, Ordering::SeqCst);
            }
        });
    });

    Trace { duration_s: workload.duration_s, txs: trace.into_inner().unwrap(), blocks: block_count.into_inner() }
}
