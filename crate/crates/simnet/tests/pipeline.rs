use proptest::prelude::*;
use trustchain_core::contracts::QualityContract;
use trustchain_core::crypto::{Hash32, SignatureScheme};
use trustchain_core::ledger::{Cid, ContractId, Identity, ParticipantId, Role, Transaction};
use trustchain_core::trust::TrustConfig;
use trustchain_core::{Ledger, LedgerConfig, LedgerMode};
use trustchain_simnet::*;

fn quiet() -> PipelineConfig {
    PipelineConfig { service_jitter: 0.0, ..Default::default() }
}

#[test]
fn light_load_commits_everything_at_fixed_cost() {
    let cfg = quiet();
    let w = Workload { rate: 5.0, duration_s: 60.0, kind: BenchTx::Trade };
    let t = run_pipeline(&cfg, &w, 3);
    // everything except the last partial batch gets through
    assert!(t.throughput() > 0.95 * w.rate, "{}", t.throughput());
    // at 5 tx/s a batch never fills, so each tx waits out the timeout from
    // the first tx of its batch
    let floor = cfg.endorse_trade_s + cfg.broadcast_s + cfg.commit_block_s;
    let ceiling = floor + cfg.batch_timeout_s + cfg.batch_size as f64 * cfg.validate_cost(BenchTx::Trade);
    for l in t.txs.iter().filter_map(TxTrace::latency) {
        assert!(l >= floor && l <= ceiling, "{l}");
    }
}

#[test]
fn overload_without_degradation_plateaus_at_service_rate() {
    let cfg = PipelineConfig { degradation: Degradation { threshold: 1.0, slope: 0.0 }, ..quiet() };
    let block = cfg.batch_size as f64 * cfg.validate_cost(BenchTx::Trade) + cfg.commit_block_s;
    let service_rate = cfg.batch_size as f64 / block;
    let mut last_mean = 0.0;
    for duration_s in [50.0, 100.0, 200.0] {
        let w = Workload { rate: 2.0 * service_rate, duration_s, kind: BenchTx::Trade };
        let t = run_pipeline(&cfg, &w, 1);
        assert!((t.throughput() - service_rate).abs() < 0.05 * service_rate, "{} vs {service_rate}", t.throughput());
        let (mean, _) = t.latency_stats();
        // the backlog, and so latency, grows with the run length
        assert!(mean > 1.5 * last_mean);
        last_mean = mean;
    }
}

#[test]
fn degradation_makes_overload_worse_than_plateau() {
    let w = Workload { rate: 80.0, duration_s: 100.0, kind: BenchTx::Trade };
    let flat = PipelineConfig { degradation: Degradation { threshold: 1.0, slope: 0.0 }, ..quiet() };
    assert!(run_pipeline(&quiet(), &w, 1).throughput() < run_pipeline(&flat, &w, 1).throughput());
}

#[test]
fn same_seed_same_trace() {
    let cfg = PipelineConfig::default();
    let w = Workload { rate: 45.0, duration_s: 30.0, kind: BenchTx::Create };
    assert_eq!(run_pipeline(&cfg, &w, 11), run_pipeline(&cfg, &w, 11));
    assert_ne!(run_pipeline(&cfg, &w, 11), run_pipeline(&cfg, &w, 12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trace_invariants(
        rate in 1.0f64..150.0,
        duration_s in 1.0f64..40.0,
        seed in any::<u64>(),
        create in any::<bool>(),
        baseline in any::<bool>(),
        capacity in 1usize..400,
    ) {
        let kind = if create { BenchTx::Create } else { BenchTx::Trade };
        let mode = if baseline { LedgerMode::Baseline } else { LedgerMode::TrustChain };
        let cfg = PipelineConfig { queue_capacity: capacity, ..Default::default() }.with_mode(mode);
        let t = run_pipeline(&cfg, &Workload { rate, duration_s, kind }, seed);
        prop_assert_eq!(t.issued(), t.committed() + t.queued() + t.dropped());
        prop_assert!(t.throughput() <= rate + 1e-9);
        let min_endorse = cfg.endorse_cost(kind) * (1.0 - cfg.service_jitter);
        for tx in &t.txs {
            prop_assert!(tx.issued_at <= duration_s);
            if tx.dropped {
                prop_assert!(tx.endorsed_at.is_none());
                continue;
            }
            // stage timestamps only ever move forward
            let stages = [Some(tx.issued_at), tx.endorsed_at, tx.ordered_at, tx.committed_at];
            let reached: Vec<f64> = stages.iter().map_while(|s| *s).collect();
            prop_assert!(reached.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(stages[reached.len()..].iter().all(Option::is_none));
            if let Some(l) = tx.latency() {
                prop_assert!(l >= min_endorse);
                prop_assert!(tx.committed_at.unwrap() <= duration_s);
            }
        }
    }
}

#[test]
fn bench_cells_and_summaries() {
    let plan = BenchPlan { send_rates: vec![10.0, 60.0], duration_s: 20.0, runs: 3, ..Default::default() };
    let r = run_bench(&plan, &PipelineConfig::default()).unwrap();
    assert_eq!(r.cells.len(), 6);
    assert_eq!(r.rates.len(), 2);
    for c in &r.cells {
        assert!(c.throughput <= c.rate);
        assert_eq!(c.issued, c.committed + c.queued + c.dropped);
    }
    let mean: f64 = r.cells[..3].iter().map(|c| c.throughput).sum::<f64>() / 3.0;
    assert!((r.rates[0].throughput - mean).abs() < 1e-12);
    // same plan and config again: identical, whatever rayon's scheduling
    assert_eq!(r, run_bench(&plan, &PipelineConfig::default()).unwrap());
    assert!(matches!(
        run_bench(&BenchPlan { send_rates: vec![], ..plan }, &PipelineConfig::default()),
        Err(SimError::InvalidPlan(_))
    ));
}

#[test]
fn zero_contract_cost_means_zero_overhead() {
    let plan = BenchPlan { send_rates: vec![20.0, 70.0], duration_s: 30.0, runs: 2, ..Default::default() };
    let free = PipelineConfig { contract_trade_s: 0.0, contract_create_s: 0.0, ..Default::default() };
    let b = run_bench(&plan, &free.clone().with_mode(LedgerMode::Baseline)).unwrap();
    let t = run_bench(&plan, &free).unwrap();
    let report = compare_modes(&b, &t).unwrap();
    for row in &report.rows {
        assert_eq!(row.throughput_delta, 0.0);
        assert_eq!(row.latency_delta_s, 0.0);
    }
}

#[test]
fn contract_cost_adds_latency_at_every_rate() {
    let plan = BenchPlan { duration_s: 50.0, runs: 3, ..Default::default() };
    let cfg = PipelineConfig::default();
    let b = run_bench(&plan, &cfg.clone().with_mode(LedgerMode::Baseline)).unwrap();
    let t = run_bench(&plan, &cfg).unwrap();
    let report = compare_modes(&b, &t).unwrap();
    assert_eq!(report.rows.len(), 10);
    for row in &report.rows {
        assert!(row.latency_delta_s > 0.0, "{row:?}");
        assert!(row.throughput_delta >= 0.0, "{row:?}");
    }
    let csv = report.to_csv();
    assert!(csv.starts_with("rate,throughput_baseline,throughput_trustchain,throughput_delta,relative_loss,"));
}

#[test]
fn compare_rejects_mismatched_sweeps() {
    let plan = BenchPlan { send_rates: vec![10.0], duration_s: 5.0, runs: 1, ..Default::default() };
    let cfg = PipelineConfig::default();
    let b = run_bench(&plan, &cfg.clone().with_mode(LedgerMode::Baseline)).unwrap();
    let t = run_bench(&plan, &cfg).unwrap();
    assert!(matches!(compare_modes(&t, &b), Err(SimError::PlanMismatch(_))));
    let other = run_bench(&BenchPlan { seed: 9, ..plan }, &cfg).unwrap();
    assert!(matches!(compare_modes(&b, &other), Err(SimError::PlanMismatch(_))));
}

fn ident(name: &str) -> Identity {
    let id = ParticipantId::new(name).unwrap();
    Identity::new(id, SignatureScheme::Digest.signer_from_seed(name.as_bytes()))
}

struct Consortium {
    ledger: Ledger,
    producer: Identity,
    shipper: Identity,
    retailer: Identity,
    gateway: Identity,
    contract: ContractId,
}

fn consortium() -> Consortium {
    let config = LedgerConfig {
        scheme: SignatureScheme::Digest,
        trust: TrustConfig { recompute_period: None, ..Default::default() },
        ..Default::default()
    };
    let admin = ident("admin");
    let mut ledger = Ledger::new(config, vec![(admin.id.clone(), admin.public_key())]).unwrap();
    let mut reg = |name: &str, role| {
        let i = ident(name);
        ledger.register_participant(&admin.id, name, role, i.public_key(), 0).unwrap();
        i
    };
    let producer = reg("producer", Role::PrimaryProducer);
    let shipper = reg("shipper", Role::Logistics);
    let retailer = reg("retailer", Role::Retailer);
    let gateway = reg("gateway", Role::GatewayDevice);
    let contract = ContractId::new("qc").unwrap();
    let qc = QualityContract::new(contract.clone(), "frozen", -25.0, -18.0, 0.0, 4.0).unwrap();
    ledger.instantiate_quality_contract(&admin.id, qc, 0).unwrap();
    Consortium { ledger, producer, shipper, retailer, gateway, contract }
}

/// Lots moving producer → shipper → retailer with readings along the way,
/// plus a self-trade and a duplicate create that must be rejected either way.
fn workload(c: &Consortium, lots: usize) -> Vec<Transaction> {
    let mut txs = Vec::new();
    let mut tick = 0;
    let mut next = || {
        tick += 1;
        tick
    };
    for i in 0..lots {
        let cid = Cid::new(format!("lot{i}")).unwrap();
        txs.push(Transaction::create(&c.producer, cid.clone(), Hash32::ZERO, c.contract.clone(), next()));
        txs.push(Transaction::sensory(&c.gateway, cid.clone(), vec![-20.0 + i as f64, -10.0, 6.0], next()));
        txs.push(Transaction::trade(&c.producer, &c.shipper, cid.clone(), Hash32::ZERO, 0.8, next()));
        txs.push(Transaction::trade(&c.shipper, &c.shipper, cid.clone(), Hash32::ZERO, 1.0, next()));
        txs.push(Transaction::sensory(&c.gateway, cid.clone(), vec![-12.0], next()));
        txs.push(Transaction::trade(&c.shipper, &c.retailer, cid.clone(), Hash32::ZERO, 0.6, next()));
        txs.push(Transaction::receipt(&c.retailer, cid.clone(), next()));
        txs.push(Transaction::create(&c.producer, cid, Hash32::ZERO, c.contract.clone(), next()));
    }
    txs
}

#[test]
fn pipeline_adds_timing_not_semantics() {
    let direct = {
        let mut c = consortium();
        for (i, tx) in workload(&c, 12).into_iter().enumerate() {
            c.ledger.commit_batch(vec![tx], 1 + i as u64).unwrap();
        }
        c.ledger
    };
    for rate in [3.0, 40.0] {
        let c = consortium();
        let txs = workload(&c, 12);
        let n = txs.len();
        let arrivals: Vec<_> = txs
            .into_iter()
            .enumerate()
            .map(|(i, tx)| Arrival { at: i as f64 / rate, kind: BenchTx::Trade, payload: tx })
            .collect();
        let mut sink = LedgerSink::new(c.ledger);
        let trace = run_pipeline_with(&PipelineConfig::default(), arrivals, 1_000.0, 5, &mut sink);
        assert_eq!(trace.committed(), n);
        assert!(sink.errors.is_empty(), "{:?}", sink.errors);
        assert_eq!(sink.ledger.state_digest(), direct.state_digest(), "rate {rate}");
        let rejected: usize = sink.outcomes.iter().map(|o| o.rejected.len()).sum();
        assert_eq!(rejected, 24);
        assert!(sink.ledger.verify_chain());
    }
}

#[test]
fn realtime_smoke() {
    let w = Workload { rate: 20.0, duration_s: 10.0, kind: BenchTx::Trade };
    let t = run_realtime(&PipelineConfig::default(), &w, 1, 50.0);
    assert_eq!(t.issued(), 200);
    assert_eq!(t.issued(), t.committed() + t.queued() + t.dropped());
    assert!(t.committed() > 0);
    for tx in &t.txs {
        if let (Some(e), Some(c)) = (tx.endorsed_at, tx.committed_at) {
            assert!(tx.issued_at <= e && e <= c);
        }
    }
}
