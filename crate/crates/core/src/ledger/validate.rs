use std::fmt;

use serde::{Deserialize, Serialize};

use super::acl::{AccessControlList, Operation};
use super::{readings_hash, LedgerMode, LedgerState, Participant, ParticipantId, Role, Status, Transaction, TxBody, TxKind};
use crate::crypto::{PublicKey, Signature, Verifier};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RejectReason {
    Replay,
    Malformed(String),
    UnknownParticipant(ParticipantId),
    UnknownCommodity,
    UnknownContract,
    DuplicateCommodity,
    BadSignature,
    AclDenied { role: Role, kind: TxKind },
    ParticipantRevoked(ParticipantId),
    SelfTrade,
    NotOwner,
    InvalidCounterparty,
    ChainComplete,
    RatingOutOfRange,
    DataHashMismatch,
    StaleTick,
    AlreadyRevoked,
    NotRevoked,
    SelfAction,
}

impl RejectReason {
    /// Variant name, used by scenario expectations such as `reject:SelfTrade`.
    pub fn code(&self) -> &'static str {
        match self {
            RejectReason::Replay => "Replay",
            RejectReason::Malformed(_) => "Malformed",
            RejectReason::UnknownParticipant(_) => "UnknownParticipant",
            RejectReason::UnknownCommodity => "UnknownCommodity",
            RejectReason::UnknownContract => "UnknownContract",
            RejectReason::DuplicateCommodity => "DuplicateCommodity",
            RejectReason::BadSignature => "BadSignature",
            RejectReason::AclDenied { .. } => "AclDenied",
            RejectReason::ParticipantRevoked(_) => "ParticipantRevoked",
            RejectReason::SelfTrade => "SelfTrade",
            RejectReason::NotOwner => "NotOwner",
            RejectReason::InvalidCounterparty => "InvalidCounterparty",
            RejectReason::ChainComplete => "ChainComplete",
            RejectReason::RatingOutOfRange => "RatingOutOfRange",
            RejectReason::DataHashMismatch => "DataHashMismatch",
            RejectReason::StaleTick => "StaleTick",
            RejectReason::AlreadyRevoked => "AlreadyRevoked",
            RejectReason::NotRevoked => "NotRevoked",
            RejectReason::SelfAction => "SelfAction",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::Malformed(why) => write!(f, "Malformed: {why}"),
            RejectReason::UnknownParticipant(id) => write!(f, "UnknownParticipant: {id}"),
            RejectReason::ParticipantRevoked(id) => write!(f, "ParticipantRevoked: {id}"),
            RejectReason::AclDenied { role, kind } => write!(f, "AclDenied: {role:?} may not submit {kind:?}"),
            other => f.write_str(other.code()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }
}

type Check = Result<(), RejectReason>;

fn finite(x: f64, what: &str) -> Check {
    if x.is_finite() {
        Ok(())
    } else {
        Err(RejectReason::Malformed(format!("{what} is not finite")))
    }
}

fn unit_interval(x: f64) -> Check {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(RejectReason::RatingOutOfRange)
    }
}

fn known<'a>(state: &'a LedgerState, id: &ParticipantId) -> Result<&'a Participant, RejectReason> {
    state
        .participant(id)
        .ok_or_else(|| RejectReason::UnknownParticipant(id.clone()))
}

fn by_key<'a>(state: &'a LedgerState, key: &PublicKey) -> Result<&'a Participant, RejectReason> {
    state.participant_by_key(key).ok_or(RejectReason::BadSignature)
}

fn signed(verifier: &dyn Verifier, p: &Participant, msg: &[u8], sig: &Signature) -> Check {
    if verifier.verify(&p.public_key, msg, sig) {
        Ok(())
    } else {
        Err(RejectReason::BadSignature)
    }
}

fn active(p: &Participant) -> Check {
    if p.status == Status::Active {
        Ok(())
    } else {
        Err(RejectReason::ParticipantRevoked(p.id.clone()))
    }
}

fn permitted(acl: &AccessControlList, p: &Participant, kind: TxKind) -> Check {
    if acl.permits_role(p.role, Operation::Submit(kind)) {
        Ok(())
    } else {
        Err(RejectReason::AclDenied { role: p.role, kind })
    }
}

/// Decides whether `tx` may be committed on top of `state`. Pure.
///
/// Checks run in a fixed order so the reported reason is stable: replay,
/// well-formedness, referential integrity, signatures, participant status,
/// access rules, structural rules, then tick ordering.
pub fn validate_transaction(
    tx: &Transaction,
    state: &LedgerState,
    acl: &AccessControlList,
    verifier: &dyn Verifier,
    mode: LedgerMode,
) -> Verdict {
    match check(tx, state, acl, verifier, mode) {
        Ok(()) => Verdict::Accept,
        Err(r) => Verdict::Reject(r),
    }
}

fn check(
    tx: &Transaction,
    state: &LedgerState,
    acl: &AccessControlList,
    verifier: &dyn Verifier,
    mode: LedgerMode,
) -> Check {
    if state.is_committed(&tx.id()) {
        return Err(RejectReason::Replay);
    }
    let msg = tx.signing_bytes();
    let at = tx.submitted_at;
    match &tx.body {
        TxBody::Create { cid, owner_id, contract_id, sig, pub_key, .. } => {
            let owner = known(state, owner_id)?;
            if mode == LedgerMode::TrustChain && state.contracts.get(contract_id).is_none() {
                return Err(RejectReason::UnknownContract);
            }
            if state.commodity(cid).is_some() {
                return Err(RejectReason::DuplicateCommodity);
            }
            if *pub_key != owner.public_key {
                return Err(RejectReason::BadSignature);
            }
            signed(verifier, owner, &msg, sig)?;
            active(owner)?;
            permitted(acl, owner, TxKind::Create)
        }
        TxBody::Trade { cid, buyer_id, seller_sig, seller_pub, buyer_sig, buyer_pub, buyer_rating, .. } => {
            finite(*buyer_rating, "buyer_rating")?;
            let commodity = state.commodity(cid).ok_or(RejectReason::UnknownCommodity)?;
            let buyer = known(state, buyer_id)?;
            let seller = by_key(state, seller_pub)?;
            if *buyer_pub != buyer.public_key {
                return Err(RejectReason::BadSignature);
            }
            signed(verifier, seller, &msg, seller_sig)?;
            signed(verifier, buyer, &msg, buyer_sig)?;
            active(seller)?;
            active(buyer)?;
            permitted(acl, seller, TxKind::Trade)?;
            if seller.id == buyer.id {
                return Err(RejectReason::SelfTrade);
            }
            if commodity.owner != seller.id {
                return Err(RejectReason::NotOwner);
            }
            if !buyer.role.is_trader() {
                return Err(RejectReason::InvalidCounterparty);
            }
            if commodity.chain_complete {
                return Err(RejectReason::ChainComplete);
            }
            unit_interval(*buyer_rating)?;
            // Each trade opens a new scoring segment, so trade ticks of one
            // commodity must strictly increase.
            let last_trade = commodity.provenance.iter().skip(1).last().map(|p| p.since);
            if last_trade.is_some_and(|t| t >= at) || at < commodity.created_at {
                return Err(RejectReason::StaleTick);
            }
            if commodity.readings.last().is_some_and(|r| r.tick > at) {
                return Err(RejectReason::StaleTick);
            }
            Ok(())
        }
        TxBody::Sensory { cid, data_hash, device_id, device_sig, readings } => {
            if readings.is_empty() {
                return Err(RejectReason::Malformed("no readings".into()));
            }
            for r in readings {
                finite(*r, "reading")?;
            }
            let commodity = state.commodity(cid).ok_or(RejectReason::UnknownCommodity)?;
            let device = known(state, device_id)?;
            signed(verifier, device, &msg, device_sig)?;
            active(device)?;
            permitted(acl, device, TxKind::Sensory)?;
            if *data_hash != readings_hash(readings) {
                return Err(RejectReason::DataHashMismatch);
            }
            if at < commodity.last_movement() || commodity.readings.last().is_some_and(|r| r.tick > at) {
                return Err(RejectReason::StaleTick);
            }
            Ok(())
        }
        TxBody::RegulatorRating { regulator_id, seller_id, commodity_type, rating, issued_at, sig, .. } => {
            finite(*rating, "rating")?;
            if commodity_type.trim().is_empty() {
                return Err(RejectReason::Malformed("empty commodity type".into()));
            }
            let regulator = known(state, regulator_id)?;
            let seller = known(state, seller_id)?;
            signed(verifier, regulator, &msg, sig)?;
            active(regulator)?;
            permitted(acl, regulator, TxKind::RegulatorRating)?;
            if regulator.id == seller.id {
                return Err(RejectReason::SelfAction);
            }
            if !seller.role.is_trader() {
                return Err(RejectReason::InvalidCounterparty);
            }
            unit_interval(*rating)?;
            if *issued_at > at {
                return Err(RejectReason::StaleTick);
            }
            Ok(())
        }
        TxBody::Receipt { cid, retailer_sig, retailer_pub } => {
            let commodity = state.commodity(cid).ok_or(RejectReason::UnknownCommodity)?;
            let retailer = by_key(state, retailer_pub)?;
            signed(verifier, retailer, &msg, retailer_sig)?;
            active(retailer)?;
            permitted(acl, retailer, TxKind::Receipt)?;
            if commodity.owner != retailer.id {
                return Err(RejectReason::NotOwner);
            }
            if commodity.chain_complete {
                return Err(RejectReason::ChainComplete);
            }
            if at < commodity.last_movement() {
                return Err(RejectReason::StaleTick);
            }
            Ok(())
        }
        TxBody::Revoke { admin_id, participant_id, sig } | TxBody::Resume { admin_id, participant_id, sig } => {
            let admin = known(state, admin_id)?;
            let target = known(state, participant_id)?;
            signed(verifier, admin, &msg, sig)?;
            active(admin)?;
            permitted(acl, admin, tx.kind())?;
            if admin.id == target.id {
                return Err(RejectReason::SelfAction);
            }
            match (tx.kind(), target.status) {
                (TxKind::Revoke, Status::Revoked) => Err(RejectReason::AlreadyRevoked),
                (TxKind::Resume, Status::Active) => Err(RejectReason::NotRevoked),
                _ => Ok(()),
            }
        }
    }
}
