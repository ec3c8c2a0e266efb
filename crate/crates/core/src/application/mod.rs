//! Application layer: queries for administrators, regulators, traders and
//! consumers, reward publications, and the revoke/resume penalties.

mod actions;
mod query;
mod rewards;

pub use actions::{request_trust_recompute, resume, revoke};
pub use query::{query, Issuer, Query, QueryResult};
pub use rewards::{
    publish, publish_commodity_rating, publish_revoked_list, publish_rewards, PublicationKind, PublicationPayload,
    PublicationRecord, RankedTrader,
};

use thiserror::Error;

use crate::ledger::{Cid, LedgerError, ParticipantId, RejectReason};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AppError {
    #[error("unauthorized: {0}")]
    Unauthorized(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("product chain of {0} is not complete")]
    ChainIncomplete(Cid),
    #[error("unknown seller {0}")]
    UnknownSeller(ParticipantId),
    #[error("{0} is already revoked")]
    AlreadyRevoked(ParticipantId),
    #[error("{0} is not revoked")]
    NotRevoked(ParticipantId),
    #[error("transaction rejected: {0}")]
    Rejected(RejectReason),
    #[error(transparent)]
    Ledger(LedgerError),
}

impl AppError {
    /// Variant name, used by scenario expectations such as `error:Unauthorized`.
    pub fn code(&self) -> &'static str {
        match self {
            AppError::Unauthorized(_) => "Unauthorized",
            AppError::NotFound(_) => "NotFound",
            AppError::ChainIncomplete(_) => "ChainIncomplete",
            AppError::UnknownSeller(_) => "UnknownSeller",
            AppError::AlreadyRevoked(_) => "AlreadyRevoked",
            AppError::NotRevoked(_) => "NotRevoked",
            AppError::Rejected(r) => r.code(),
            AppError::Ledger(_) => "Ledger",
        }
    }
}

impl From<LedgerError> for AppError {
    fn from(e: LedgerError) -> Self {
        use crate::trust::TrustError;
        match e {
            LedgerError::Unauthorized { caller, op } => AppError::Unauthorized(format!("{caller} may not {op:?}")),
            LedgerError::Trust(TrustError::UnknownSeller(id)) => AppError::UnknownSeller(id),
            other => AppError::Ledger(other),
        }
    }
}
