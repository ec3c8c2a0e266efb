use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{overall_reputation, trust_score, TrustConfig};
use crate::codec::{Encode, Encoder};
use crate::contracts::TradeRatingInputs;
use crate::ledger::{ParticipantId, Status, Tick, TxId};

/// Seller reputation for one committed trade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub tick: Tick,
    pub value: f64,
    pub trade_tx: TxId,
    /// Inputs the rating contract used, kept so the value can be re-derived.
    pub inputs: TradeRatingInputs,
    /// Counted towards the successful-transaction feature.
    pub successful: bool,
    /// Buyer-rating weight was reduced after an upheld dissatisfaction flag.
    pub reweighted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustSnapshot {
    pub reputation: f64,
    pub trust: f64,
    pub computed_at: Tick,
}

/// Reputation state of one seller for one commodity type.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeReputation {
    pub history: Vec<RepRecord>,
    pub successful_tx: u64,
    pub cached: Option<TrustSnapshot>,
}

impl TypeReputation {
    pub fn push(&mut self, record: RepRecord) {
        debug_assert!(self.history.last().is_none_or(|last| last.tick <= record.tick));
        if record.successful {
            self.successful_tx += 1;
        }
        self.history.push(record);
    }

    pub fn record_successful_tx(&mut self) -> u64 {
        self.successful_tx += 1;
        self.successful_tx
    }

    /// Successful trades visible at `t_n`, derived from the history.
    pub fn successful_at(&self, t_n: Tick) -> u64 {
        self.history.iter().filter(|r| r.successful && r.tick <= t_n).count() as u64
    }

    /// Overall reputation and trust at `t_n`, computed from the history.
    pub fn evaluate(&self, t_n: Tick, config: &TrustConfig) -> TrustSnapshot {
        let reputation = overall_reputation(self.history.iter().map(|r| (r.tick, r.value)), t_n, config.lambda);
        let f1 = config.feature_table.score(self.successful_at(t_n));
        let trust = trust_score(reputation, &[f1], &config.alpha).expect("config validated");
        TrustSnapshot {
            reputation,
            trust,
            computed_at: t_n,
        }
    }
}

/// Digital profile of a participant. Only the commit path and the admin
/// recompute path write to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustProfile {
    pub participant_id: ParticipantId,
    pub status: Status,
    /// Trust assumed until a score has been computed.
    pub initial_trust: f64,
    pub by_type: BTreeMap<String, TypeReputation>,
}

impl TrustProfile {
    pub fn new(participant_id: ParticipantId, trust_min: f64) -> Self {
        TrustProfile {
            participant_id,
            status: Status::Active,
            initial_trust: trust_min,
            by_type: BTreeMap::new(),
        }
    }

    /// Current trust for a commodity type: the cached score, or the initial
    /// trust when none has been computed.
    pub fn trust(&self, commodity_type: &str) -> f64 {
        self.by_type
            .get(commodity_type)
            .and_then(|t| t.cached)
            .map_or(self.initial_trust, |s| s.trust)
    }

    /// Back to the initial trust; histories stay intact.
    pub fn reinitialize(&mut self, trust_min: f64) {
        self.initial_trust = trust_min;
        for rep in self.by_type.values_mut() {
            rep.cached = None;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationNotice {
    pub tick: Tick,
    pub participant_id: ParticipantId,
    pub commodity_type: String,
    pub trust: f64,
    pub trust_min: f64,
}

/// A notice for the administrator when trust for `commodity_type` has
/// fallen strictly below the minimum.
pub fn check_trust_violation(
    profile: &TrustProfile,
    commodity_type: &str,
    config: &TrustConfig,
    tick: Tick,
) -> Option<ViolationNotice> {
    let trust = profile.trust(commodity_type);
    (trust < config.trust_min).then(|| ViolationNotice {
        tick,
        participant_id: profile.participant_id.clone(),
        commodity_type: commodity_type.to_string(),
        trust,
        trust_min: config.trust_min,
    })
}

impl Encode for TrustProfile {
    fn encode(&self, enc: &mut Encoder) {
        enc.put(&self.participant_id).put(&self.status).f64(self.initial_trust);
        enc.len(self.by_type.len());
        for (ty, rep) in &self.by_type {
            enc.str(ty);
            enc.len(rep.history.len());
            for r in &rep.history {
                let i = &r.inputs;
                enc.u64(r.tick)
                    .f64(r.value)
                    .put(&r.trade_tx)
                    .f64(i.rep_sens)
                    .f64(i.rep_trader)
                    .f64(i.rep_reg)
                    .f64(i.weights.sensor)
                    .f64(i.weights.trader)
                    .f64(i.weights.regulator)
                    .opt(i.reg_issued_at.as_ref())
                    .bool(r.successful)
                    .bool(r.reweighted);
            }
            enc.u64(rep.successful_tx);
            match &rep.cached {
                None => enc.u8(0),
                Some(s) => enc.u8(1).f64(s.reputation).f64(s.trust).u64(s.computed_at),
            };
        }
    }
}
