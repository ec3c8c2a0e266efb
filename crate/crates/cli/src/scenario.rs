//! Scenario files: a versioned TOML document describing participants,
//! contracts, a timeline of actions and post-run checks.
//!
//! The full schema is in `docs/serialization.md`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use trustchain_core::application::Query;
use trustchain_core::ledger::{ParticipantId, Role, Status, Tick};
use trustchain_core::LedgerConfig;

use crate::ScenarioError;

pub const FORMAT: &str = "trustchain-scenario/1";

/// Reserved issuer name for anonymous consumer queries.
pub const CONSUMER: &str = "consumer";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub format: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Default key-derivation seed; `--seed` overrides it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub config: LedgerConfig,
    #[serde(default)]
    pub participants: Vec<ParticipantDecl>,
    #[serde(default)]
    pub contracts: Vec<ContractDecl>,
    #[serde(default)]
    pub timeline: Vec<Step>,
    #[serde(default, rename = "assert")]
    pub asserts: Vec<Assertion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticipantDecl {
    pub id: String,
    pub role: Role,
    /// Key material seed; defaults to the id.
    #[serde(default)]
    pub key_seed: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractDecl {
    pub id: String,
    pub commodity_type: String,
    pub damage_low: f64,
    pub boundary_low: f64,
    pub boundary_high: f64,
    pub damage_high: f64,
    /// Instantiating admin; defaults to the first declared admin.
    #[serde(default)]
    pub by: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub tick: Tick,
    /// Names a trade so later `flag` and `replay` steps can refer to it.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub expect: Option<String>,
    #[serde(flatten)]
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    /// Runtime enrolment, e.g. a sybil or a re-joining trader.
    Register {
        by: String,
        id: String,
        role: Role,
        #[serde(default)]
        key_seed: Option<String>,
        /// Reuse the key of an already declared participant.
        #[serde(default)]
        key_of: Option<String>,
    },
    Create {
        by: String,
        cid: String,
        contract: String,
        #[serde(default)]
        data: Option<String>,
    },
    Sense {
        by: String,
        cid: String,
        readings: Vec<f64>,
    },
    Trade {
        seller: String,
        buyer: String,
        cid: String,
        rating: f64,
        #[serde(default)]
        data: Option<String>,
        /// Sign with this participant's key while claiming the seller's.
        #[serde(default)]
        signed_by: Option<String>,
    },
    Regulate {
        by: String,
        seller: String,
        commodity_type: String,
        rating: f64,
        #[serde(default)]
        issued_at: Option<Tick>,
    },
    Receipt {
        by: String,
        cid: String,
    },
    /// Resubmits a labelled transaction byte for byte.
    Replay {
        of: String,
    },
    Flag {
        seller: String,
        buyer: String,
        trade: String,
        #[serde(default)]
        evidence: Option<String>,
    },
    Revoke {
        by: String,
        target: String,
        /// Ticks before a resume is allowed. Required: there is no default.
        penalty: Tick,
    },
    Resume {
        by: String,
        target: String,
    },
    Query {
        by: String,
        query: Query,
    },
    Recompute {
        by: String,
        seller: String,
        commodity_type: String,
    },
    Publish {
        what: PublishWhat,
        #[serde(default)]
        k: Option<usize>,
        #[serde(default)]
        cid: Option<String>,
    },
    /// Forces the orderer to cut a block.
    Cut {},
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PublishWhat {
    HighTrust,
    Revoked,
    Rating,
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::Register { .. } => "register",
            Action::Create { .. } => "create",
            Action::Sense { .. } => "sense",
            Action::Trade { .. } => "trade",
            Action::Regulate { .. } => "regulate",
            Action::Receipt { .. } => "receipt",
            Action::Replay { .. } => "replay",
            Action::Flag { .. } => "flag",
            Action::Revoke { .. } => "revoke",
            Action::Resume { .. } => "resume",
            Action::Query { .. } => "query",
            Action::Recompute { .. } => "recompute",
            Action::Publish { .. } => "publish",
            Action::Cut {} => "cut",
        }
    }

    /// Goes through the orderer rather than executing immediately.
    pub fn is_ordered(&self) -> bool {
        matches!(
            self,
            Action::Create { .. }
                | Action::Sense { .. }
                | Action::Trade { .. }
                | Action::Regulate { .. }
                | Action::Receipt { .. }
                | Action::Replay { .. }
        )
    }
}

/// What a step is expected to do.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expect {
    Accept,
    Reject(Option<String>),
    Ok,
    Error(Option<String>),
    Reweight,
    NoReweight,
}

impl Expect {
    pub fn parse(s: &str) -> Result<Self, String> {
        let (head, code) = match s.split_once(':') {
            Some((h, c)) if !c.is_empty() => (h, Some(c.to_string())),
            Some(_) => return Err(format!("empty code in `{s}`")),
            None => (s, None),
        };
        Ok(match (head, code) {
            ("accept", None) => Expect::Accept,
            ("reject", c) => Expect::Reject(c),
            ("ok", None) => Expect::Ok,
            ("error", c) => Expect::Error(c),
            ("reweight", None) => Expect::Reweight,
            ("no_reweight", None) => Expect::NoReweight,
            _ => return Err(format!("unknown expectation `{s}`")),
        })
    }

    /// Whether an outcome string such as `rejected:SelfTrade` meets this.
    pub fn matches(&self, outcome: &str) -> bool {
        let (head, code) = match outcome.split_once(':') {
            Some((h, c)) => (h, Some(c)),
            None => (outcome, None),
        };
        match self {
            Expect::Accept => head == "accepted",
            Expect::Reject(want) => head == "rejected" && want.as_deref().is_none_or(|w| Some(w) == code),
            Expect::Ok => matches!(head, "ok" | "reweight" | "no_reweight"),
            Expect::Error(want) => head == "error" && want.as_deref().is_none_or(|w| Some(w) == code),
            Expect::Reweight => head == "reweight",
            Expect::NoReweight => head == "no_reweight",
        }
    }
}

impl Step {
    pub fn expectation(&self) -> Expect {
        match &self.expect {
            Some(s) => Expect::parse(s).expect("validated"),
            None if self.action.is_ordered() => Expect::Accept,
            None => Expect::Ok,
        }
    }
}

/// Post-run checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum Assertion {
    Owner { cid: String, equals: String },
    ChainComplete { cid: String, equals: bool },
    OverallRating {
        cid: String,
        #[serde(default = "yes")]
        present: bool,
        #[serde(default)]
        approx: Option<f64>,
    },
    SensorScores { cid: String, count: usize },
    RepHistory { id: String, commodity_type: String, count: usize },
    Status { id: String, equals: Status },
    Registered { id: String, equals: bool },
    IncompleteChains {
        older_than: Tick,
        #[serde(default)]
        includes: Vec<String>,
        #[serde(default)]
        excludes: Vec<String>,
    },
    ChainValid { equals: bool },
    /// Flips `mutations` single bytes of the exported chain, one at a time,
    /// and requires verification to fail for every one.
    TamperDetected { mutations: usize },
    Warnings {
        count: usize,
        #[serde(default)]
        cid: Option<String>,
    },
    Events { event: String, count: usize },
    Reweighted { seller: String, buyer: String, equals: bool },
    TrustBelowMin { id: String, commodity_type: String, equals: bool },
}

fn yes() -> bool {
    true
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            ScenarioError::Parse { line, column, message: e.message().to_string() }
        })?;
        s.validate()?;
        Ok(s)
    }

    /// Checks every reference before anything executes. Reports all problems
    /// at once, each with its field path.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut errs = Vec::new();
        if self.format != FORMAT {
            errs.push(format!("format: expected `{FORMAT}`, got `{}`", self.format));
        }
        let mut ids = BTreeSet::new();
        for (i, p) in self.participants.iter().enumerate() {
            if ParticipantId::new(p.id.as_str()).is_none() {
                errs.push(format!("participants[{i}].id: invalid id `{}`", p.id));
            }
            if p.id == CONSUMER {
                errs.push(format!("participants[{i}].id: `{CONSUMER}` is reserved"));
            }
            if !ids.insert(p.id.clone()) {
                errs.push(format!("participants[{i}].id: duplicate `{}`", p.id));
            }
        }
        let has_admin = self.participants.iter().any(|p| p.role == Role::Admin);
        if !has_admin && (self.participants.len() + self.contracts.len() + self.timeline.len()) > 0 {
            errs.push("participants: at least one admin is required".into());
        }
        let mut contracts = BTreeSet::new();
        for (i, c) in self.contracts.iter().enumerate() {
            if !contracts.insert(c.id.clone()) {
                errs.push(format!("contracts[{i}].id: duplicate `{}`", c.id));
            }
            if let Some(by) = &c.by {
                if !ids.contains(by) {
                    errs.push(format!("contracts[{i}].by: undeclared participant `{by}`"));
                }
            }
        }
        let mut labels = BTreeSet::new();
        let mut last_tick = 0;
        for (i, step) in self.timeline.iter().enumerate() {
            let at = |field: &str| format!("timeline[{i}].{field}");
            if step.tick < last_tick {
                errs.push(format!("{}: tick {} goes backwards from {last_tick}", at("tick"), step.tick));
            }
            last_tick = step.tick;
            if let Some(e) = &step.expect {
                if let Err(m) = Expect::parse(e) {
                    errs.push(format!("{}: {m}", at("expect")));
                }
            }
            let mut need = |field: &str, id: &str| {
                if !ids.contains(id) {
                    errs.push(format!("{}: undeclared participant `{id}`", at(field)));
                }
            };
            match &step.action {
                Action::Register { by, key_of, .. } => {
                    need("by", by);
                    if let Some(k) = key_of {
                        need("key_of", k);
                    }
                }
                Action::Create { by, contract, .. } => {
                    need("by", by);
                    if !contracts.contains(contract) {
                        errs.push(format!("{}: undeclared contract `{contract}`", at("contract")));
                    }
                }
                Action::Sense { by, readings, .. } => {
                    need("by", by);
                    if readings.is_empty() {
                        errs.push(format!("{}: no readings", at("readings")));
                    }
                }
                Action::Trade { seller, buyer, signed_by, .. } => {
                    need("seller", seller);
                    need("buyer", buyer);
                    if let Some(s) = signed_by {
                        need("signed_by", s);
                    }
                }
                Action::Regulate { by, seller, .. } => {
                    need("by", by);
                    need("seller", seller);
                }
                Action::Receipt { by, .. } => need("by", by),
                Action::Replay { of } => {
                    if !labels.contains(of) {
                        errs.push(format!("{}: unknown label `{of}`", at("of")));
                    }
                }
                Action::Flag { seller, buyer, trade, .. } => {
                    need("seller", seller);
                    need("buyer", buyer);
                    if !labels.contains(trade) {
                        errs.push(format!("{}: unknown label `{trade}`", at("trade")));
                    }
                }
                Action::Revoke { by, target, penalty } => {
                    need("by", by);
                    need("target", target);
                    if *penalty == 0 {
                        errs.push(format!("{}: penalty must be positive", at("penalty")));
                    }
                }
                Action::Resume { by, target } => {
                    need("by", by);
                    need("target", target);
                }
                Action::Query { by, .. } => {
                    if by != CONSUMER {
                        need("by", by);
                    }
                }
                Action::Recompute { by, seller, .. } => {
                    need("by", by);
                    need("seller", seller);
                }
                Action::Publish { what, cid, .. } => {
                    if *what == PublishWhat::Rating && cid.is_none() {
                        errs.push(format!("{}: rating publication needs a cid", at("cid")));
                    }
                }
                Action::Cut {} => {}
            }
            if let Action::Register { id, .. } = &step.action {
                if ParticipantId::new(id.as_str()).is_none() || id == CONSUMER {
                    errs.push(format!("{}: invalid id `{id}`", at("id")));
                }
                // declared from here on; a clash with an existing id is left
                // for the ledger to reject
                ids.insert(id.clone());
            }
            if let Some(l) = &step.label {
                if !matches!(step.action, Action::Trade { .. } | Action::Create { .. } | Action::Sense { .. } | Action::Regulate { .. } | Action::Receipt { .. }) {
                    errs.push(format!("{}: only transaction steps can be labelled", at("label")));
                }
                if !labels.insert(l.clone()) {
                    errs.push(format!("{}: duplicate label `{l}`", at("label")));
                }
            }
        }
        let check = |field: String, id: &str, errs: &mut Vec<String>| {
            if !ids.contains(id) {
                errs.push(format!("{field}: undeclared participant `{id}`"));
            }
        };
        for (i, a) in self.asserts.iter().enumerate() {
            let f = |name: &str| format!("assert[{i}].{name}");
            match a {
                Assertion::Owner { equals, .. } => check(f("equals"), equals, &mut errs),
                Assertion::RepHistory { id, .. }
                | Assertion::Status { id, .. }
                | Assertion::TrustBelowMin { id, .. } => check(f("id"), id, &mut errs),
                Assertion::Reweighted { seller, buyer, .. } => {
                    check(f("seller"), seller, &mut errs);
                    check(f("buyer"), buyer, &mut errs);
                }
                _ => {}
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Invalid(errs))
        }
    }
}
