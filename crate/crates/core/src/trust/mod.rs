//! Reputation and trust: time-decayed aggregation of per-trade seller
//! reputations, linear trust scores with feature terms, the minimum-trust
//! check, and dissatisfaction-flag arbitration.

mod config;
mod profile;
mod reputation;
mod state;

pub use config::{FeatureBand, FeatureTable, TrustConfig};
pub use profile::{check_trust_violation, RepRecord, TrustProfile, TrustSnapshot, TypeReputation, ViolationNotice};
pub use reputation::{forgetting_factor, overall_reputation, trust_score};
pub use state::{flags_upheld, DissatisfactionFlag, ReweightAction, ReweightAudit, TradeRecord, TrustState};

use thiserror::Error;

use crate::ledger::{ParticipantId, TxId};

/// Feature score for a successful-transaction count under the default table.
pub fn feature_score_successful_tx(count: u64) -> f64 {
    FeatureTable::successful_transactions().score(count)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrustError {
    #[error("expected one weight per feature plus one for reputation, got {alphas} weights for {features} features")]
    DimensionMismatch { alphas: usize, features: usize },
    #[error("no committed trade {0}")]
    NoSuchTrade(TxId),
    #[error("trade {0} already carries a dissatisfaction flag")]
    DuplicateFlag(TxId),
    #[error("flag issuer is not the seller of trade {0}, or the buyer does not match")]
    NotPartyToTrade(TxId),
    #[error("unknown seller {0}")]
    UnknownSeller(ParticipantId),
    #[error("participant {0} is revoked")]
    ParticipantRevoked(ParticipantId),
    #[error("invalid trust configuration: {0}")]
    InvalidConfig(String),
}
