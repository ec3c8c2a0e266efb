use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AppError;
use crate::ledger::{
    AccessControlList, Cid, CommodityRating, LedgerState, Operation, OwnershipRecord, ParticipantId, QueryKind,
    SensorReading, SensorScore, Status, Subject, Tick,
};

/// Who issues a query. Consumers are anonymous.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Issuer {
    Consumer,
    Member(ParticipantId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "query", rename_all = "snake_case")]
pub enum Query {
    CommoditySensorHistory { cid: Cid },
    ProvenanceTrail { cid: Cid },
    IncompleteChains { older_than: Tick },
    TopTraders { commodity_type: String, k: usize },
    RevokedList,
    TraderTrust { id: ParticipantId, commodity_type: String },
    OverallCommodityRating { cid: Cid },
}

impl Query {
    pub fn kind(&self) -> QueryKind {
        match self {
            Query::CommoditySensorHistory { .. } => QueryKind::CommoditySensorHistory,
            Query::ProvenanceTrail { .. } => QueryKind::ProvenanceTrail,
            Query::IncompleteChains { .. } => QueryKind::IncompleteChains,
            Query::TopTraders { .. } => QueryKind::TopTraders,
            Query::RevokedList => QueryKind::RevokedList,
            Query::TraderTrust { .. } => QueryKind::TraderTrust,
            Query::OverallCommodityRating { .. } => QueryKind::OverallCommodityRating,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum QueryResult {
    SensorHistory {
        cid: Cid,
        readings: Vec<SensorReading>,
        scores: Vec<SensorScore>,
    },
    Provenance {
        cid: Cid,
        owners: Vec<ParticipantId>,
        records: Vec<OwnershipRecord>,
    },
    IncompleteChains {
        cids: Vec<Cid>,
    },
    TopTraders {
        commodity_type: String,
        traders: Vec<(ParticipantId, u64)>,
    },
    Revoked {
        ids: Vec<ParticipantId>,
    },
    TraderTrust {
        id: ParticipantId,
        commodity_type: String,
        trust: f64,
        reputation: Option<f64>,
        computed_at: Option<Tick>,
    },
    CommodityRating {
        cid: Cid,
        rating: CommodityRating,
    },
}

fn subject_of(state: &LedgerState, issuer: &Issuer) -> Result<Subject, AppError> {
    match issuer {
        Issuer::Consumer => Ok(Subject::Consumer),
        Issuer::Member(id) => {
            let p = state
                .participant(id)
                .ok_or_else(|| AppError::Unauthorized(format!("{id} is not registered")))?;
            if p.status == Status::Revoked {
                return Err(AppError::Unauthorized(format!("{id} is revoked")));
            }
            Ok(Subject::Member(p.role))
        }
    }
}

/// Answers a read query from a state snapshot. Access is decided by the
/// ledger's rules, so the outcome is the same whichever layer checks it.
pub fn query(
    state: &LedgerState,
    acl: &AccessControlList,
    issuer: &Issuer,
    q: &Query,
    now: Tick,
) -> Result<QueryResult, AppError> {
    let subject = subject_of(state, issuer)?;
    if !acl.permits(subject, Operation::Query(q.kind())) {
        return Err(AppError::Unauthorized(format!("{subject:?} may not run {:?}", q.kind())));
    }
    let commodity = |cid: &Cid| {
        state
            .commodity(cid)
            .ok_or_else(|| AppError::NotFound(format!("commodity {cid}")))
    };
    Ok(match q {
        Query::CommoditySensorHistory { cid } => {
            let c = commodity(cid)?;
            QueryResult::SensorHistory {
                cid: cid.clone(),
                readings: c.readings.clone(),
                scores: c.sensor_scores.clone(),
            }
        }
        Query::ProvenanceTrail { cid } => {
            let c = commodity(cid)?;
            QueryResult::Provenance {
                cid: cid.clone(),
                owners: c.provenance.iter().map(|r| r.owner.clone()).collect(),
                records: c.provenance.clone(),
            }
        }
        Query::IncompleteChains { older_than } => QueryResult::IncompleteChains {
            cids: state
                .commodities
                .values()
                .filter(|c| !c.chain_complete && now.saturating_sub(c.last_movement()) > *older_than)
                .map(|c| c.cid.clone())
                .collect(),
        },
        Query::TopTraders { commodity_type, k } => {
            let mut counts: BTreeMap<&ParticipantId, u64> = BTreeMap::new();
            for t in state.trust.trades.iter().filter(|t| t.commodity_type == *commodity_type) {
                *counts.entry(&t.seller).or_default() += 1;
            }
            let mut ranked: Vec<(ParticipantId, u64)> = counts.into_iter().map(|(id, n)| (id.clone(), n)).collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            ranked.truncate(*k);
            QueryResult::TopTraders {
                commodity_type: commodity_type.clone(),
                traders: ranked,
            }
        }
        Query::RevokedList => QueryResult::Revoked {
            ids: state
                .participants
                .values()
                .filter(|p| p.status == Status::Revoked)
                .map(|p| p.id.clone())
                .collect(),
        },
        Query::TraderTrust { id, commodity_type } => {
            let profile = state
                .trust
                .profiles
                .get(id)
                .ok_or_else(|| AppError::NotFound(format!("profile of {id}")))?;
            let cached = profile.by_type.get(commodity_type).and_then(|t| t.cached);
            QueryResult::TraderTrust {
                id: id.clone(),
                commodity_type: commodity_type.clone(),
                trust: profile.trust(commodity_type),
                reputation: cached.map(|s| s.reputation),
                computed_at: cached.map(|s| s.computed_at),
            }
        }
        Query::OverallCommodityRating { cid } => {
            let c = commodity(cid)?;
            if !c.chain_complete {
                return Err(AppError::ChainIncomplete(cid.clone()));
            }
            let rating = c
                .overall_rating
                .ok_or_else(|| AppError::NotFound(format!("rating of {cid}")))?;
            QueryResult::CommodityRating { cid: cid.clone(), rating }
        }
    })
}
