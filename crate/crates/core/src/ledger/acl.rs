use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Role, TxKind};

/// Who is asking. Consumers are anonymous readers outside the consortium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subject {
    Consumer,
    Member(Role),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    CommoditySensorHistory,
    ProvenanceTrail,
    IncompleteChains,
    TopTraders,
    RevokedList,
    TraderTrust,
    OverallCommodityRating,
}

impl QueryKind {
    pub const ALL: [QueryKind; 7] = [
        QueryKind::CommoditySensorHistory,
        QueryKind::ProvenanceTrail,
        QueryKind::IncompleteChains,
        QueryKind::TopTraders,
        QueryKind::RevokedList,
        QueryKind::TraderTrust,
        QueryKind::OverallCommodityRating,
    ];
}

/// Everything the access rules govern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Operation {
    Submit(TxKind),
    Query(QueryKind),
    RegisterParticipant,
    InstantiateContract,
    RecomputeTrust,
    PublishRewards,
    RaiseFlag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Permission {
    Permit,
    Deny,
}

/// Role-based access rules. Any pair without a rule is denied.
///
/// Structural rules that depend on the transaction contents (no self-trade,
/// only the owner sells, no writing to one's own profile) live in
/// validation, which consults this table first.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessControlList {
    rules: BTreeMap<(Subject, Operation), Permission>,
}

impl AccessControlList {
    pub fn deny_all() -> Self {
        Self { rules: BTreeMap::new() }
    }

    pub fn set(&mut self, subject: Subject, op: Operation, permission: Permission) -> &mut Self {
        self.rules.insert((subject, op), permission);
        self
    }

    pub fn permit(&mut self, subject: Subject, op: Operation) -> &mut Self {
        self.set(subject, op, Permission::Permit)
    }

    pub fn evaluate(&self, subject: Subject, op: Operation) -> Permission {
        self.rules.get(&(subject, op)).copied().unwrap_or(Permission::Deny)
    }

    pub fn permits(&self, subject: Subject, op: Operation) -> bool {
        self.evaluate(subject, op) == Permission::Permit
    }

    pub fn permits_role(&self, role: Role, op: Operation) -> bool {
        self.permits(Subject::Member(role), op)
    }
}

impl Default for AccessControlList {
    fn default() -> Self {
        use Operation::*;
        use QueryKind::*;
        use Role::*;

        let mut acl = Self::deny_all();
        let traders = [PrimaryProducer, Logistics, Retailer];
        let m = Subject::Member;

        acl.permit(m(PrimaryProducer), Submit(TxKind::Create));
        for r in traders {
            acl.permit(m(r), Submit(TxKind::Trade));
            acl.permit(m(r), RaiseFlag);
        }
        acl.permit(m(GatewayDevice), Submit(TxKind::Sensory));
        acl.permit(m(Regulator), Submit(TxKind::RegulatorRating));
        acl.permit(m(Retailer), Submit(TxKind::Receipt));
        acl.permit(m(Admin), Submit(TxKind::Revoke));
        acl.permit(m(Admin), Submit(TxKind::Resume));
        acl.permit(m(Admin), RegisterParticipant);
        acl.permit(m(Admin), InstantiateContract);
        acl.permit(m(Admin), PublishRewards);
        acl.permit(m(Admin), RecomputeTrust);
        acl.permit(m(Regulator), RecomputeTrust);

        for q in QueryKind::ALL {
            acl.permit(m(Admin), Query(q));
            acl.permit(m(Regulator), Query(q));
        }
        for r in traders {
            for q in [CommoditySensorHistory, ProvenanceTrail, TopTraders, RevokedList, TraderTrust, OverallCommodityRating] {
                acl.permit(m(r), Query(q));
            }
        }
        acl.permit(Subject::Consumer, Query(CommoditySensorHistory));
        acl.permit(Subject::Consumer, Query(OverallCommodityRating));
        acl
    }
}
