//! Smart contracts: the quality contract (commodity scoring and warnings)
//! and the rating contract (seller reputation per trade).

mod quality;
mod rating;

pub use quality::{
    commodity_score, overall_commodity_rating, process_sensor_reading, ContractRegistry,
    QualityContract, ReadingZone, SegmentScore, WarningEvent, WarningKind,
};
pub use rating::{
    apply_staleness, compute_seller_rep, normalize_rating, RatingConfig, TradeRatingInputs, Weights,
};

use thiserror::Error;

use crate::ledger::{Cid, ContractId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContractError {
    #[error(
        "thresholds must satisfy damage_low <= boundary_low <= boundary_high <= damage_high \
         (got {damage_low}, {boundary_low}, {boundary_high}, {damage_high})"
    )]
    InvalidThresholds {
        damage_low: f64,
        boundary_low: f64,
        boundary_high: f64,
        damage_high: f64,
    },
    #[error("contract must name a commodity type")]
    EmptyCommodityType,
    #[error("contract {0} already exists")]
    DuplicateContract(ContractId),
    #[error("unknown contract {0}")]
    UnknownContract(ContractId),
    #[error("unknown commodity {0}")]
    UnknownCommodity(Cid),
    #[error("product chain of {0} is not complete")]
    ChainIncomplete(Cid),
    #[error("weights ({sensor}, {trader}, {regulator}) must be non-negative and sum to 1")]
    InvalidWeights { sensor: f64, trader: f64, regulator: f64 },
    #[error("rating {0} outside the accepted scale")]
    RatingOutOfRange(f64),
    #[error("invalid rating configuration: {0}")]
    InvalidConfig(String),
}
