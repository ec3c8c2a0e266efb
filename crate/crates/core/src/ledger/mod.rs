//! Permissioned, append-only ledger: identity registry, transaction
//! validation against the access rules, block formation and the commit path
//! that drives the contracts and the trust module.

mod acl;
mod apply;
mod chain;
mod state;
mod store;
mod types;
mod validate;

pub use acl::{AccessControlList, Operation, Permission, QueryKind, Subject};
pub use chain::{verify_chain_bytes, Chain};
pub use state::{LedgerState, RegulatorRecord, EMPTY_STATE_DIGEST};
pub use store::OffChainStore;
pub use types::*;
pub use validate::{validate_transaction, RejectReason, Verdict};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contracts::{ContractError, QualityContract, RatingConfig};
use crate::crypto::{Hash32, PublicKey, SignatureScheme, VerifierRef};
use crate::events::{Event, EventLog};
use crate::trust::{
    check_trust_violation, DissatisfactionFlag, ReweightAction, TrustConfig, TrustError, TrustSnapshot,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LedgerMode {
    /// Ownership records only: no contracts, ratings or trust.
    Baseline,
    #[default]
    TrustChain,
}

impl LedgerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LedgerMode::Baseline => "baseline",
            LedgerMode::TrustChain => "trustchain",
        }
    }
}

impl std::fmt::Display for LedgerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LedgerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(LedgerMode::Baseline),
            "trustchain" => Ok(LedgerMode::TrustChain),
            other => Err(format!("unknown mode `{other}` (expected baseline or trustchain)")),
        }
    }
}

/// Orderer batching: a block is cut at `max_txs` transactions or once the
/// oldest pending transaction has waited `timeout` ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatchConfig {
    pub max_txs: usize,
    pub timeout: Tick,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig { max_txs: 50, timeout: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct LedgerConfig {
    pub mode: LedgerMode,
    pub batch: BatchConfig,
    pub rating: RatingConfig,
    pub trust: TrustConfig,
    pub scheme: SignatureScheme,
}

impl LedgerConfig {
    pub fn validate(&self) -> Result<(), LedgerError> {
        self.rating.validate()?;
        self.trust.validate()?;
        if self.batch.max_txs == 0 {
            return Err(LedgerError::InvalidConfig("batch.max_txs must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LedgerError {
    #[error("{caller} is not allowed to {op:?}")]
    Unauthorized { caller: String, op: Operation },
    #[error("identity already registered: {0}")]
    DuplicateIdentity(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("transaction {index} ({tx_id}) rejected: {reason}")]
    InvalidTransactionInBatch {
        index: usize,
        tx_id: TxId,
        reason: RejectReason,
    },
    #[error("block timestamp {got} precedes the chain tip at {tip}")]
    NonMonotonicTimestamp { got: Tick, tip: Tick },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error(transparent)]
    Trust(#[from] TrustError),
}

/// Transactions accepted into a block and those filtered out.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommitOutcome {
    pub block_height: Option<u64>,
    pub accepted: Vec<TxId>,
    pub rejected: Vec<(TxId, RejectReason)>,
}

pub struct Ledger {
    config: LedgerConfig,
    verifier: VerifierRef,
    acl: AccessControlList,
    state: LedgerState,
    chain: Chain,
    store: OffChainStore,
    events: EventLog,
}

impl std::fmt::Debug for Ledger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ledger")
            .field("mode", &self.config.mode)
            .field("height", &self.chain.height())
            .field("participants", &self.state.participants.len())
            .finish()
    }
}

impl Ledger {
    /// A ledger holding only genesis, with the given administrators enrolled
    /// at tick 0.
    pub fn new(config: LedgerConfig, admins: Vec<(ParticipantId, PublicKey)>) -> Result<Self, LedgerError> {
        config.validate()?;
        let mut ledger = Ledger {
            verifier: config.scheme.verifier(),
            config,
            acl: AccessControlList::default(),
            state: LedgerState::default(),
            chain: Chain::default(),
            store: OffChainStore::default(),
            events: EventLog::default(),
        };
        for (id, key) in admins {
            ledger.enrol(id, Role::Admin, key, 0)?;
        }
        Ok(ledger)
    }

    pub fn with_acl(mut self, acl: AccessControlList) -> Self {
        self.acl = acl;
        self
    }

    pub fn config(&self) -> &LedgerConfig {
        &self.config
    }

    pub fn acl(&self) -> &AccessControlList {
        &self.acl
    }

    pub fn state(&self) -> &LedgerState {
        &self.state
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn store(&self) -> &OffChainStore {
        &self.store
    }

    pub fn events(&self) -> &EventLog {
        &self.events
    }

    pub fn height(&self) -> u64 {
        self.chain.height()
    }

    pub fn state_digest(&self) -> Hash32 {
        self.state.digest()
    }

    pub fn verify_chain(&self) -> bool {
        self.chain.verify()
    }

    pub fn export_chain(&self) -> Vec<u8> {
        self.chain.to_bytes()
    }

    pub fn push_event(&mut self, event: Event) {
        self.events.push(event);
    }

    /// Stores a raw payload off-chain and returns its digest.
    pub fn put_payload(&mut self, payload: Vec<u8>) -> Hash32 {
        self.store.put(payload)
    }

    fn authorize(&self, caller: &ParticipantId, op: Operation) -> Result<&Participant, LedgerError> {
        let denied = || LedgerError::Unauthorized { caller: caller.to_string(), op };
        let p = self.state.participant(caller).ok_or_else(denied)?;
        if !p.is_active() || !self.acl.permits_role(p.role, op) {
            return Err(denied());
        }
        Ok(p)
    }

    fn enrol(&mut self, id: ParticipantId, role: Role, public_key: PublicKey, tick: Tick) -> Result<(), LedgerError> {
        if self.state.participant(&id).is_some() {
            return Err(LedgerError::DuplicateIdentity(id.to_string()));
        }
        if self.state.participant_by_key(&public_key).is_some() {
            return Err(LedgerError::DuplicateIdentity(format!("key of {id}")));
        }
        if public_key.0.is_empty() {
            return Err(LedgerError::Malformed("empty public key".into()));
        }
        if self.config.mode == LedgerMode::TrustChain {
            self.state.trust.register(id.clone(), self.config.trust.trust_min);
        }
        self.state.insert_participant(Participant {
            id: id.clone(),
            public_key,
            role,
            status: Status::Active,
            registered_at: tick,
        });
        self.events.push(Event::Registered { tick, participant_id: id, role });
        Ok(())
    }

    /// Enrols a participant through the central authority. The caller must
    /// be an active administrator. Both the id and the key must be new.
    pub fn register_participant(
        &mut self,
        caller: &ParticipantId,
        id: &str,
        role: Role,
        public_key: PublicKey,
        tick: Tick,
    ) -> Result<&Participant, LedgerError> {
        self.authorize(caller, Operation::RegisterParticipant)?;
        let pid = ParticipantId::new(id).ok_or_else(|| LedgerError::Malformed("empty participant id".into()))?;
        self.enrol(pid.clone(), role, public_key, tick)?;
        Ok(&self.state.participants[&pid])
    }

    pub fn instantiate_quality_contract(
        &mut self,
        caller: &ParticipantId,
        contract: QualityContract,
        tick: Tick,
    ) -> Result<&QualityContract, LedgerError> {
        self.authorize(caller, Operation::InstantiateContract)?;
        let id = contract.contract_id.clone();
        let commodity_type = contract.commodity_type.clone();
        self.state.contracts.instantiate(contract)?;
        self.events.push(Event::ContractInstantiated {
            tick,
            contract_id: id.clone(),
            commodity_type,
        });
        Ok(self.state.contracts.get(&id).expect("just inserted"))
    }

    pub fn validate(&self, tx: &Transaction) -> Verdict {
        validate_transaction(tx, &self.state, &self.acl, self.verifier.as_ref(), self.config.mode)
    }

    fn check_timestamp(&self, timestamp: Tick) -> Result<(), LedgerError> {
        let tip = self.chain.tip().timestamp;
        if timestamp < tip {
            return Err(LedgerError::NonMonotonicTimestamp { got: timestamp, tip });
        }
        Ok(())
    }

    fn seal(&mut self, mut state: LedgerState, store: OffChainStore, txs: Vec<Transaction>, timestamp: Tick, mut events: Vec<Event>) -> u64 {
        apply::periodic_recompute(&mut state, &self.config, timestamp, &mut events);
        let height = self.chain.height() + 1;
        let tx_count = txs.len();
        self.chain.push(Block::new(height, self.chain.head(), timestamp, txs));
        self.state = state;
        self.store = store;
        self.events.extend(events);
        self.events.push(Event::BlockCommitted { tick: timestamp, height, tx_count });
        height
    }

    /// Appends a block holding exactly `txs`. Every transaction must be valid
    /// against the state left by its predecessors; otherwise nothing changes.
    pub fn append_block(&mut self, txs: Vec<Transaction>, timestamp: Tick) -> Result<&Block, LedgerError> {
        self.check_timestamp(timestamp)?;
        let mut state = self.state.clone();
        let mut store = self.store.clone();
        let mut events = Vec::new();
        for (index, tx) in txs.iter().enumerate() {
            let verdict = validate_transaction(tx, &state, &self.acl, self.verifier.as_ref(), self.config.mode);
            if let Verdict::Reject(reason) = verdict {
                return Err(LedgerError::InvalidTransactionInBatch { index, tx_id: tx.id(), reason });
            }
            apply::apply_transaction(&mut state, &mut store, tx, &self.config, &mut events);
        }
        self.seal(state, store, txs, timestamp, events);
        Ok(self.chain.tip())
    }

    /// Orderer-side commit: invalid transactions are filtered out and
    /// reported, the rest go into one block. No block is cut when nothing is
    /// accepted.
    pub fn commit_batch(&mut self, txs: Vec<Transaction>, timestamp: Tick) -> Result<CommitOutcome, LedgerError> {
        self.check_timestamp(timestamp)?;
        let mut state = self.state.clone();
        let mut store = self.store.clone();
        let mut events = Vec::new();
        let mut outcome = CommitOutcome::default();
        let mut block_txs = Vec::new();
        for tx in txs {
            let id = tx.id();
            match validate_transaction(&tx, &state, &self.acl, self.verifier.as_ref(), self.config.mode) {
                Verdict::Accept => {
                    apply::apply_transaction(&mut state, &mut store, &tx, &self.config, &mut events);
                    outcome.accepted.push(id);
                    block_txs.push(tx);
                }
                Verdict::Reject(reason) => {
                    self.events.push(Event::TxRejected {
                        tick: timestamp,
                        tx_id: id,
                        kind: tx.kind(),
                        reason: reason.to_string(),
                    });
                    outcome.rejected.push((id, reason));
                }
            }
        }
        if !block_txs.is_empty() {
            outcome.block_height = Some(self.seal(state, store, block_txs, timestamp, events));
        }
        Ok(outcome)
    }

    /// Records a seller's dissatisfaction flag against the buyer of one of
    /// its trades and runs arbitration.
    pub fn raise_flag(
        &mut self,
        seller: &ParticipantId,
        buyer: &ParticipantId,
        trade_tx: TxId,
        evidence_hash: Hash32,
        tick: Tick,
    ) -> Result<(DissatisfactionFlag, Option<ReweightAction>), LedgerError> {
        self.authorize(seller, Operation::RaiseFlag)?;
        self.require_trust_mode()?;
        let (flag, action) =
            self.state
                .trust
                .raise_dissatisfaction_flag(seller, buyer, trade_tx, evidence_hash, tick, &self.config.trust)?;
        self.events.push(Event::FlagRaised(flag.clone()));
        if let Some(a) = &action {
            for entry in &a.entries {
                self.events.push(Event::Reweight(entry.clone()));
            }
        }
        Ok((flag, action))
    }

    fn require_trust_mode(&self) -> Result<(), LedgerError> {
        if self.config.mode == LedgerMode::Baseline {
            return Err(LedgerError::InvalidConfig("baseline ledger keeps no trust state".into()));
        }
        Ok(())
    }

    /// Computes and stores R(t_n) and T for one seller and commodity type.
    /// Only administrators and regulators may ask.
    pub fn recompute_trust(
        &mut self,
        issuer: &ParticipantId,
        seller: &ParticipantId,
        commodity_type: &str,
        t_n: Tick,
    ) -> Result<TrustSnapshot, LedgerError> {
        self.authorize(issuer, Operation::RecomputeTrust)?;
        self.require_trust_mode()?;
        let snap = self.state.trust.recompute(seller, commodity_type, t_n, &self.config.trust)?;
        self.events.push(Event::TrustRecomputed {
            tick: t_n,
            participant_id: seller.clone(),
            commodity_type: commodity_type.to_string(),
            reputation: snap.reputation,
            trust: snap.trust,
        });
        let profile = &self.state.trust.profiles[seller];
        if let Some(notice) = check_trust_violation(profile, commodity_type, &self.config.trust, t_n) {
            self.events.push(Event::Violation(notice));
        }
        Ok(snap)
    }

    /// Authorization check shared with the application layer.
    pub fn authorize_member(&self, caller: &ParticipantId, op: Operation) -> Result<&Participant, LedgerError> {
        self.authorize(caller, op)
    }
}

/// Pending-transaction buffer of the single orderer.
#[derive(Debug, Clone, Default)]
pub struct Orderer {
    config: BatchConfig,
    pending: Vec<Transaction>,
    oldest: Option<Tick>,
}

impl Orderer {
    pub fn new(config: BatchConfig) -> Self {
        Orderer { config, pending: Vec::new(), oldest: None }
    }

    /// Queues a transaction. Returns a full batch once `max_txs` is reached.
    pub fn submit(&mut self, tx: Transaction, now: Tick) -> Option<Vec<Transaction>> {
        self.oldest.get_or_insert(now);
        self.pending.push(tx);
        (self.pending.len() >= self.config.max_txs).then(|| self.flush())
    }

    /// Returns the pending batch if its timeout has expired at `now`.
    pub fn poll(&mut self, now: Tick) -> Option<Vec<Transaction>> {
        let due = self.oldest.is_some_and(|t| now >= t + self.config.timeout);
        due.then(|| self.flush())
    }

    /// Tick at which the pending batch times out, if any.
    pub fn deadline(&self) -> Option<Tick> {
        self.oldest.map(|t| t + self.config.timeout)
    }

    pub fn flush(&mut self) -> Vec<Transaction> {
        self.oldest = None;
        std::mem::take(&mut self.pending)
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }
}
