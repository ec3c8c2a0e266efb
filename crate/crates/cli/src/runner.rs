//! Replays a scenario through the full stack and collects a report.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use trustchain_core::application::{
    self, publish, publish_commodity_rating, publish_revoked_list, publish_rewards, AppError, Issuer, Query,
    QueryResult,
};
use trustchain_core::contracts::QualityContract;
use trustchain_core::crypto::{sha256, Hash32};
use trustchain_core::ledger::{
    verify_chain_bytes, Cid, ContractId, Identity, Orderer, ParticipantId, Role, Status, Tick, Transaction, TxId,
};
use trustchain_core::trust::TrustError;
use trustchain_core::{Event, Ledger, LedgerError, LedgerMode};

use crate::scenario::{Action, Assertion, PublishWhat, Scenario, CONSUMER};
use crate::ScenarioError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub index: usize,
    pub tick: Tick,
    pub action: String,
    /// `accepted`, `rejected:<Code>`, `ok`, `reweight`, `no_reweight` or
    /// `error:<Code>`.
    pub outcome: String,
    pub expected: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tx_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionResult {
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub step: usize,
    pub tick: Tick,
    pub by: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<QueryResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Final R and T of one seller for one commodity type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityTrust {
    pub id: ParticipantId,
    pub commodity_type: String,
    pub reputation: f64,
    pub trust: f64,
    pub rep_events: usize,
    pub successful_tx: u64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub mode: LedgerMode,
    pub state_digest: String,
    pub chain_head: String,
    pub chain_height: u64,
    pub chain_valid: bool,
    pub final_tick: Tick,
    pub steps: Vec<StepOutcome>,
    pub assertions: Vec<AssertionResult>,
    pub queries: Vec<QueryRecord>,
    pub publications: Vec<application::PublicationRecord>,
    pub trust: Vec<EntityTrust>,
    pub event_count: usize,
}

impl RunReport {
    /// Failed step expectations followed by failed checks.
    pub fn failures(&self) -> Vec<String> {
        let steps = self.steps.iter().filter(|s| !s.passed).map(|s| {
            format!("timeline[{}] {} at tick {}: expected {}, got {}", s.index, s.action, s.tick, s.expected, s.outcome)
        });
        let checks = self.assertions.iter().filter(|a| !a.passed).map(|a| format!("{}: {}", a.check, a.detail));
        steps.chain(checks).collect()
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }
}

/// Everything a run produces: the report plus the ledger it ran on.
pub struct RunOutput {
    pub report: RunReport,
    pub ledger: Ledger,
}

fn ledger_code(e: &LedgerError) -> String {
    match e {
        LedgerError::Unauthorized { .. } => "Unauthorized".into(),
        LedgerError::DuplicateIdentity(_) => "DuplicateIdentity".into(),
        LedgerError::Malformed(_) => "Malformed".into(),
        LedgerError::InvalidTransactionInBatch { .. } => "InvalidTransactionInBatch".into(),
        LedgerError::NonMonotonicTimestamp { .. } => "NonMonotonicTimestamp".into(),
        LedgerError::InvalidConfig(_) => "InvalidConfig".into(),
        LedgerError::Contract(_) => "Contract".into(),
        LedgerError::Trust(t) => match t {
            TrustError::DimensionMismatch { .. } => "DimensionMismatch",
            TrustError::NoSuchTrade(_) => "NoSuchTrade",
            TrustError::DuplicateFlag(_) => "DuplicateFlag",
            TrustError::NotPartyToTrade(_) => "NotPartyToTrade",
            TrustError::UnknownSeller(_) => "UnknownSeller",
            TrustError::ParticipantRevoked(_) => "ParticipantRevoked",
            TrustError::InvalidConfig(_) => "InvalidConfig",
        }
        .into(),
    }
}

fn app_code(e: &AppError) -> String {
    match e {
        AppError::Ledger(l) => ledger_code(l),
        other => other.code().into(),
    }
}

struct Pending {
    step: usize,
    tx_id: TxId,
}

struct Runner {
    seed: u64,
    ledger: Ledger,
    ids: BTreeMap<String, Identity>,
    orderer: Orderer,
    pending: Vec<Pending>,
    labels: BTreeMap<String, Transaction>,
    steps: Vec<StepOutcome>,
    queries: Vec<QueryRecord>,
    publications: Vec<application::PublicationRecord>,
    revoked_at: BTreeMap<String, (Tick, Tick)>,
    first_admin: Option<String>,
}

fn pid(s: &str) -> ParticipantId {
    ParticipantId::new(s).expect("validated id")
}

fn cid(s: &str) -> Result<Cid, String> {
    Cid::new(s).ok_or_else(|| format!("invalid cid `{s}`"))
}

fn data_hash(data: &Option<String>) -> Hash32 {
    data.as_deref().map_or(Hash32::ZERO, |d| sha256(d.as_bytes()))
}

impl Runner {
    fn identity(&self, seed_name: &str, id: &str) -> Identity {
        let scheme = self.ledger.config().scheme;
        Identity::new(pid(id), scheme.signer_from_seed(format!("{}/{seed_name}", self.seed).as_bytes()))
    }

    fn who(&self, id: &str) -> &Identity {
        &self.ids[id]
    }

    fn admin(&self) -> ParticipantId {
        pid(self.first_admin.as_deref().expect("validated: scenario has an admin"))
    }

    fn commit_pending(&mut self, ts: Tick) -> Result<(), ScenarioError> {
        let txs = self.orderer.flush();
        if txs.is_empty() {
            return Ok(());
        }
        let ts = ts.max(self.ledger.chain().tip().timestamp);
        let outcome = self.ledger.commit_batch(txs, ts).map_err(|e| ScenarioError::Runtime(e.to_string()))?;
        let mut accepted: Vec<Option<TxId>> = outcome.accepted.into_iter().map(Some).collect();
        let mut rejected: Vec<Option<(TxId, String)>> =
            outcome.rejected.into_iter().map(|(id, r)| Some((id, r.code().to_string()))).collect();
        for p in std::mem::take(&mut self.pending) {
            let result = if let Some(slot) = accepted.iter_mut().find(|a| **a == Some(p.tx_id)) {
                slot.take();
                "accepted".to_string()
            } else if let Some(slot) = rejected.iter_mut().find(|r| r.as_ref().is_some_and(|(id, _)| *id == p.tx_id)) {
                format!("rejected:{}", slot.take().expect("found").1)
            } else {
                unreachable!("every submitted tx is either accepted or rejected")
            };
            self.steps[p.step].outcome = result;
        }
        Ok(())
    }

    fn submit(&mut self, step: usize, tx: Transaction, now: Tick) -> Result<(), ScenarioError> {
        let tx_id = tx.id();
        self.steps[step].tx_id = Some(tx_id.to_string());
        self.pending.push(Pending { step, tx_id });
        if self.orderer.submit(tx, now).is_some() {
            unreachable!("flush drains the orderer")
        }
        if self.orderer.len() >= self.ledger.config().batch.max_txs {
            self.commit_pending(now)?;
        }
        Ok(())
    }

    fn build_tx(&mut self, action: &Action, at: Tick) -> Result<Transaction, String> {
        Ok(match action {
            Action::Create { by, cid: c, contract, data } => {
                let hash = match data {
                    Some(d) => self.ledger.put_payload(d.as_bytes().to_vec()),
                    None => Hash32::ZERO,
                };
                let contract = ContractId::new(contract.as_str()).ok_or("invalid contract id")?;
                Transaction::create(self.who(by), cid(c)?, hash, contract, at)
            }
            Action::Sense { by, cid: c, readings } => Transaction::sensory(self.who(by), cid(c)?, readings.clone(), at),
            Action::Trade { seller, buyer, cid: c, rating, data, signed_by } => {
                let s = self.who(seller);
                let signer = signed_by.as_deref().map_or(s, |x| self.who(x));
                Transaction::trade_with_keys(
                    signer.signer.as_ref(),
                    s.public_key(),
                    self.who(buyer),
                    cid(c)?,
                    data_hash(data),
                    *rating,
                    at,
                )
            }
            Action::Regulate { by, seller, commodity_type, rating, issued_at } => Transaction::regulator_rating(
                self.who(by),
                pid(seller),
                commodity_type.as_str(),
                Hash32::ZERO,
                *rating,
                issued_at.unwrap_or(at),
            ),
            Action::Receipt { by, cid: c } => Transaction::receipt(self.who(by), cid(c)?, at),
            Action::Replay { of } => self.labels[of].clone(),
            _ => unreachable!("not an ordered action"),
        })
    }

    /// Executes an immediate action. Returns the outcome string.
    fn immediate(&mut self, step: usize, action: &Action, now: Tick) -> Result<String, String> {
        let app = |e: AppError| format!("error:{}", app_code(&e));
        let led = |e: LedgerError| format!("error:{}", ledger_code(&e));
        match action {
            Action::Register { by, id, role, key_seed, key_of } => {
                let ident = match key_of {
                    Some(other) => Identity::new(pid(id), self.who(other).signer.clone()),
                    None => self.identity(key_seed.as_deref().unwrap_or(id), id),
                };
                self.ledger.register_participant(&pid(by), id, *role, ident.public_key(), now).map_err(led)?;
                self.ids.insert(id.clone(), ident);
            }
            Action::Flag { seller, buyer, trade, evidence } => {
                let tx_id = self.labels[trade].id();
                let (_, action) = self
                    .ledger
                    .raise_flag(&pid(seller), &pid(buyer), tx_id, data_hash(evidence), now)
                    .map_err(led)?;
                return Ok(if action.is_some() { "reweight" } else { "no_reweight" }.into());
            }
            Action::Revoke { by, target, penalty } => {
                let admin = self.who(by).clone();
                application::revoke(&mut self.ledger, &admin, &pid(target), now).map_err(app)?;
                self.revoked_at.insert(target.clone(), (now, *penalty));
            }
            Action::Resume { by, target } => {
                if let Some(&(at, penalty)) = self.revoked_at.get(target) {
                    if now < at + penalty {
                        return Err("error:PenaltyNotServed".into());
                    }
                }
                let admin = self.who(by).clone();
                application::resume(&mut self.ledger, &admin, &pid(target), now).map_err(app)?;
                self.revoked_at.remove(target);
            }
            Action::Query { by, query } => {
                let issuer = if by == CONSUMER { Issuer::Consumer } else { Issuer::Member(pid(by)) };
                let res = application::query(self.ledger.state(), self.ledger.acl(), &issuer, query, now);
                let (result, error) = match &res {
                    Ok(r) => (Some(r.clone()), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                self.queries.push(QueryRecord { step, tick: now, by: by.clone(), result, error });
                res.map_err(app)?;
            }
            Action::Recompute { by, seller, commodity_type } => {
                application::request_trust_recompute(&mut self.ledger, &pid(by), &pid(seller), commodity_type, now)
                    .map_err(app)?;
            }
            Action::Publish { what, k, cid: c } => {
                let record = match what {
                    PublishWhat::HighTrust => publish_rewards(self.ledger.state(), k.unwrap_or(3), now),
                    PublishWhat::Revoked => publish_revoked_list(self.ledger.state(), now),
                    PublishWhat::Rating => {
                        let c = cid(c.as_deref().expect("validated")).map_err(|_| "error:Malformed".to_string())?;
                        publish_commodity_rating(self.ledger.state(), &c, now).map_err(app)?
                    }
                };
                publish(&mut self.ledger, record.clone());
                self.publications.push(record);
            }
            Action::Cut {} => {}
            _ => unreachable!("ordered action"),
        }
        Ok("ok".into())
    }
}

/// Runs a parsed scenario. `seed` overrides the scenario's own seed and
/// `mode` its ledger mode.
pub fn execute(scenario: &Scenario, seed: Option<u64>, mode: Option<LedgerMode>) -> Result<RunOutput, ScenarioError> {
    let seed = seed.unwrap_or(scenario.seed);
    let mut config = scenario.config.clone();
    if let Some(m) = mode {
        config.mode = m;
    }
    let scheme = config.scheme;
    let key = |p: &crate::scenario::ParticipantDecl| {
        let name = p.key_seed.as_deref().unwrap_or(&p.id);
        Identity::new(pid(&p.id), scheme.signer_from_seed(format!("{seed}/{name}").as_bytes()))
    };
    let admins: Vec<_> = scenario
        .participants
        .iter()
        .filter(|p| p.role == Role::Admin)
        .map(|p| (pid(&p.id), key(p).public_key()))
        .collect();
    let batch = config.batch;
    let ledger = Ledger::new(config, admins).map_err(|e| ScenarioError::Runtime(e.to_string()))?;
    let mut r = Runner {
        seed,
        ledger,
        ids: BTreeMap::new(),
        orderer: Orderer::new(batch),
        pending: Vec::new(),
        labels: BTreeMap::new(),
        steps: Vec::new(),
        queries: Vec::new(),
        publications: Vec::new(),
        revoked_at: BTreeMap::new(),
        first_admin: scenario.participants.iter().find(|p| p.role == Role::Admin).map(|p| p.id.clone()),
    };
    let setup = |e: LedgerError| ScenarioError::Runtime(format!("setup: {e}"));
    for p in &scenario.participants {
        let ident = key(p);
        if p.role != Role::Admin {
            let admin = r.admin();
            r.ledger.register_participant(&admin, &p.id, p.role, ident.public_key(), 0).map_err(setup)?;
        }
        r.ids.insert(p.id.clone(), ident);
    }
    for c in &scenario.contracts {
        let by = c.by.as_deref().map_or_else(|| r.admin(), pid);
        let id = ContractId::new(c.id.as_str()).ok_or_else(|| ScenarioError::Runtime(format!("invalid contract id `{}`", c.id)))?;
        let qc = QualityContract::new(id, c.commodity_type.as_str(), c.damage_low, c.boundary_low, c.boundary_high, c.damage_high)
            .map_err(|e| ScenarioError::Runtime(format!("contract {}: {e}", c.id)))?;
        r.ledger.instantiate_quality_contract(&by, qc, 0).map_err(setup)?;
    }

    let mut last_tick = 0;
    for (i, step) in scenario.timeline.iter().enumerate() {
        let now = step.tick;
        last_tick = now;
        if let Some(deadline) = r.orderer.deadline() {
            if deadline <= now {
                r.commit_pending(deadline)?;
            }
        }
        let expected = step.expectation();
        r.steps.push(StepOutcome {
            index: i,
            tick: now,
            action: step.action.name().into(),
            outcome: String::new(),
            expected: step.expect.clone().unwrap_or_else(|| format!("{expected:?}").to_lowercase()),
            passed: false,
            tx_id: None,
            detail: None,
        });
        if step.action.is_ordered() {
            match r.build_tx(&step.action, now) {
                Ok(tx) => {
                    if let Some(l) = &step.label {
                        r.labels.insert(l.clone(), tx.clone());
                    }
                    r.submit(i, tx, now)?;
                }
                Err(m) => {
                    r.steps[i].outcome = "rejected:Malformed".into();
                    r.steps[i].detail = Some(m);
                }
            }
        } else {
            r.commit_pending(now)?;
            let out = r.immediate(i, &step.action, now).unwrap_or_else(|e| e);
            r.steps[i].outcome = out;
        }
    }
    if let Some(deadline) = r.orderer.deadline() {
        r.commit_pending(deadline.max(last_tick))?;
    }
    for (s, step) in r.steps.iter_mut().zip(&scenario.timeline) {
        s.passed = step.expectation().matches(&s.outcome);
    }

    let final_tick = last_tick.max(r.ledger.chain().tip().timestamp);
    let assertions = scenario.asserts.iter().map(|a| check(&r.ledger, a, final_tick, seed)).collect();
    let trust_cfg = r.ledger.config().trust.clone();
    let trust = r
        .ledger
        .state()
        .trust
        .profiles
        .iter()
        .flat_map(|(id, p)| {
            let cfg = &trust_cfg;
            p.by_type.iter().map(move |(ty, rep)| {
                let snap = rep.evaluate(final_tick, cfg);
                EntityTrust {
                    id: id.clone(),
                    commodity_type: ty.clone(),
                    reputation: snap.reputation,
                    trust: snap.trust,
                    rep_events: rep.history.len(),
                    successful_tx: rep.successful_at(final_tick),
                    status: p.status,
                }
            })
        })
        .collect();
    let ledger = r.ledger;
    let report = RunReport {
        scenario: scenario.name.clone(),
        seed,
        mode: ledger.config().mode,
        state_digest: ledger.state_digest().to_hex(),
        chain_head: ledger.chain().head().to_hex(),
        chain_height: ledger.height(),
        chain_valid: ledger.verify_chain(),
        final_tick,
        steps: r.steps,
        assertions,
        queries: r.queries,
        publications: r.publications,
        trust,
        event_count: ledger.events().len(),
    };
    Ok(RunOutput { report, ledger })
}

fn result(check: &str, passed: bool, detail: String) -> AssertionResult {
    AssertionResult { check: check.into(), passed, detail }
}

fn check(ledger: &Ledger, a: &Assertion, now: Tick, seed: u64) -> AssertionResult {
    let state = ledger.state();
    let commodity = |c: &str| Cid::new(c).and_then(|c| state.commodity(&c));
    match a {
        Assertion::Owner { cid, equals } => {
            let got = commodity(cid).map(|c| c.owner.to_string());
            result("owner", got.as_deref() == Some(equals.as_str()), format!("{cid}: owner {got:?}, want {equals}"))
        }
        Assertion::ChainComplete { cid, equals } => {
            let got = commodity(cid).map(|c| c.chain_complete);
            result("chain_complete", got == Some(*equals), format!("{cid}: {got:?}, want {equals}"))
        }
        Assertion::OverallRating { cid, present, approx } => {
            let got = commodity(cid).and_then(|c| c.overall_rating).map(|r| r.value);
            let ok = got.is_some() == *present
                && match (approx, got) {
                    (Some(want), Some(v)) => (v - want).abs() <= 1e-9,
                    _ => true,
                };
            result("overall_rating", ok, format!("{cid}: {got:?}, want present={present} approx={approx:?}"))
        }
        Assertion::SensorScores { cid, count } => {
            let got = commodity(cid).map(|c| c.sensor_scores.len());
            result("sensor_scores", got == Some(*count), format!("{cid}: {got:?} scores, want {count}"))
        }
        Assertion::RepHistory { id, commodity_type, count } => {
            let got = ParticipantId::new(id.as_str())
                .and_then(|p| state.trust.profiles.get(&p))
                .map_or(0, |p| p.by_type.get(commodity_type).map_or(0, |r| r.history.len()));
            result("rep_history", got == *count, format!("{id}/{commodity_type}: {got} records, want {count}"))
        }
        Assertion::Status { id, equals } => {
            let got = ParticipantId::new(id.as_str()).and_then(|p| state.participant(&p)).map(|p| p.status);
            result("status", got == Some(*equals), format!("{id}: {got:?}, want {equals:?}"))
        }
        Assertion::Registered { id, equals } => {
            let got = ParticipantId::new(id.as_str()).is_some_and(|p| state.participant(&p).is_some());
            result("registered", got == *equals, format!("{id}: registered={got}, want {equals}"))
        }
        Assertion::IncompleteChains { older_than, includes, excludes } => {
            let admin = state.participants.values().find(|p| p.role == Role::Admin).map(|p| p.id.clone());
            let issuer = admin.map_or(Issuer::Consumer, Issuer::Member);
            let q = Query::IncompleteChains { older_than: *older_than };
            match application::query(state, ledger.acl(), &issuer, &q, now) {
                Ok(QueryResult::IncompleteChains { cids }) => {
                    let names: Vec<String> = cids.iter().map(|c| c.to_string()).collect();
                    let ok = includes.iter().all(|c| names.contains(c)) && excludes.iter().all(|c| !names.contains(c));
                    result("incomplete_chains", ok, format!("got {names:?}, includes {includes:?}, excludes {excludes:?}"))
                }
                other => result("incomplete_chains", false, format!("query failed: {other:?}")),
            }
        }
        Assertion::ChainValid { equals } => {
            let got = ledger.verify_chain() && verify_chain_bytes(&ledger.export_chain());
            result("chain_valid", got == *equals, format!("valid={got}, want {equals}"))
        }
        Assertion::TamperDetected { mutations } => {
            let bytes = ledger.export_chain();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut survived = Vec::new();
            for _ in 0..*mutations {
                let mut copy = bytes.clone();
                let at = rng.gen_range(0..copy.len());
                copy[at] ^= rng.gen_range(1..=255u8);
                if verify_chain_bytes(&copy) {
                    survived.push(at);
                }
            }
            let intact = verify_chain_bytes(&bytes);
            result(
                "tamper_detected",
                intact && survived.is_empty(),
                format!("{mutations} mutations, undetected at offsets {survived:?}, original valid={intact}"),
            )
        }
        Assertion::Warnings { count, cid } => {
            let got = ledger
                .events()
                .warnings()
                .filter(|w| cid.as_deref().is_none_or(|c| w.cid.as_str() == c))
                .count();
            result("warnings", got == *count, format!("{got} warnings, want {count}"))
        }
        Assertion::Events { event, count } => {
            let got = ledger
                .events()
                .iter()
                .filter(|e| event_tag(e) == *event)
                .count();
            result("events", got == *count, format!("{got} `{event}` events, want {count}"))
        }
        Assertion::Reweighted { seller, buyer, equals } => {
            let got = state.trust.audit.iter().any(|a| a.seller_id.as_str() == seller && a.buyer_id.as_str() == buyer);
            result("reweighted", got == *equals, format!("{seller} vs {buyer}: reweighted={got}, want {equals}"))
        }
        Assertion::TrustBelowMin { id, commodity_type, equals } => {
            let cfg = &ledger.config().trust;
            let got = ParticipantId::new(id.as_str())
                .and_then(|p| state.trust.profiles.get(&p))
                .and_then(|p| p.by_type.get(commodity_type))
                .map(|r| r.evaluate(now, cfg).trust < cfg.trust_min);
            result("trust_below_min", got == Some(*equals), format!("{id}/{commodity_type}: {got:?}, want {equals}"))
        }
    }
}

/// Event tag as written to `events.jsonl`.
pub fn event_tag(e: &Event) -> String {
    serde_json::to_value(e)
        .ok()
        .and_then(|v| v.get("event").and_then(|t| t.as_str().map(String::from)))
        .unwrap_or_default()
}
