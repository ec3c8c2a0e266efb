//! Structured event log, serialized one JSON record per line.

use serde::{Deserialize, Serialize};

use crate::application::PublicationRecord;
use crate::contracts::WarningEvent;
use crate::ledger::{Cid, ContractId, ParticipantId, Role, Status, Tick, TxId, TxKind};
use crate::trust::{DissatisfactionFlag, ReweightAudit, ViolationNotice};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Registered {
        tick: Tick,
        participant_id: ParticipantId,
        role: Role,
    },
    ContractInstantiated {
        tick: Tick,
        contract_id: ContractId,
        commodity_type: String,
    },
    BlockCommitted {
        tick: Tick,
        height: u64,
        tx_count: usize,
    },
    TxRejected {
        tick: Tick,
        tx_id: TxId,
        kind: TxKind,
        reason: String,
    },
    Warning(WarningEvent),
    CommodityRated {
        tick: Tick,
        cid: Cid,
        rating: f64,
        unmonitored: bool,
    },
    StatusChanged {
        tick: Tick,
        participant_id: ParticipantId,
        status: Status,
    },
    TrustRecomputed {
        tick: Tick,
        participant_id: ParticipantId,
        commodity_type: String,
        reputation: f64,
        trust: f64,
    },
    Violation(ViolationNotice),
    FlagRaised(DissatisfactionFlag),
    Reweight(ReweightAudit),
    Publication(PublicationRecord),
}

impl Event {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("events always serialize")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn push(&mut self, e: Event) {
        self.events.push(e);
    }

    pub fn extend(&mut self, events: impl IntoIterator<Item = Event>) {
        self.events.extend(events);
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Event> {
        self.events.iter()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn warnings(&self) -> impl Iterator<Item = &WarningEvent> {
        self.events.iter().filter_map(|e| match e {
            Event::Warning(w) => Some(w),
            _ => None,
        })
    }

    pub fn violations(&self) -> impl Iterator<Item = &ViolationNotice> {
        self.events.iter().filter_map(|e| match e {
            Event::Violation(v) => Some(v),
            _ => None,
        })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_json_line());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::WarningKind;

    #[test]
    fn warning_line_shape() {
        let e = Event::Warning(WarningEvent {
            tick: 4,
            cid: Cid::new("c1").unwrap(),
            reading: 7.5,
            kind: WarningKind::DamageBreach,
        });
        assert_eq!(
            e.to_json_line(),
            r#"{"event":"warning","tick":4,"cid":"c1","reading":7.5,"kind":"DamageBreach"}"#
        );
        let back: Event = serde_json::from_str(&e.to_json_line()).unwrap();
        assert_eq!(back, e);
    }
}
