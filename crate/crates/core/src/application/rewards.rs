use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AppError;
use crate::events::Event;
use crate::ledger::{Cid, CommodityRating, Ledger, LedgerState, ParticipantId, Status, Tick};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PublicationKind {
    HighTrustList,
    RevokedList,
    CommodityRating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTrader {
    pub id: ParticipantId,
    pub trust: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PublicationPayload {
    HighTrust { by_type: BTreeMap<String, Vec<RankedTrader>> },
    Revoked { ids: Vec<ParticipantId> },
    Rating { cid: Cid, rating: CommodityRating },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub tick: Tick,
    pub kind: PublicationKind,
    pub payload: PublicationPayload,
}

/// Top `k` active traders by current trust for every commodity type that
/// has a reputation history. Equal trust ranks the lower id first.
pub fn publish_rewards(state: &LedgerState, k: usize, tick: Tick) -> PublicationRecord {
    let mut by_type: BTreeMap<String, Vec<RankedTrader>> = BTreeMap::new();
    for profile in state.trust.profiles.values() {
        if profile.status != Status::Active {
            continue;
        }
        for (ty, rep) in &profile.by_type {
            if rep.history.is_empty() {
                continue;
            }
            by_type.entry(ty.clone()).or_default().push(RankedTrader {
                id: profile.participant_id.clone(),
                trust: profile.trust(ty),
            });
        }
    }
    for list in by_type.values_mut() {
        list.sort_by(|a, b| b.trust.total_cmp(&a.trust).then_with(|| a.id.cmp(&b.id)));
        list.truncate(k);
    }
    by_type.retain(|_, l| !l.is_empty());
    PublicationRecord {
        tick,
        kind: PublicationKind::HighTrustList,
        payload: PublicationPayload::HighTrust { by_type },
    }
}

pub fn publish_revoked_list(state: &LedgerState, tick: Tick) -> PublicationRecord {
    PublicationRecord {
        tick,
        kind: PublicationKind::RevokedList,
        payload: PublicationPayload::Revoked {
            ids: state
                .participants
                .values()
                .filter(|p| p.status == Status::Revoked)
                .map(|p| p.id.clone())
                .collect(),
        },
    }
}

pub fn publish_commodity_rating(state: &LedgerState, cid: &Cid, tick: Tick) -> Result<PublicationRecord, AppError> {
    let c = state
        .commodity(cid)
        .ok_or_else(|| AppError::NotFound(format!("commodity {cid}")))?;
    if !c.chain_complete {
        return Err(AppError::ChainIncomplete(cid.clone()));
    }
    let rating = c
        .overall_rating
        .ok_or_else(|| AppError::NotFound(format!("rating of {cid}")))?;
    Ok(PublicationRecord {
        tick,
        kind: PublicationKind::CommodityRating,
        payload: PublicationPayload::Rating { cid: cid.clone(), rating },
    })
}

/// Appends a publication to the ledger's event log.
pub fn publish(ledger: &mut Ledger, record: PublicationRecord) {
    ledger.push_event(Event::Publication(record));
}
