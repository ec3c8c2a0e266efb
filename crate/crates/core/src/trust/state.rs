use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{RepRecord, TrustConfig, TrustError, TrustProfile, TrustSnapshot};
use crate::codec::{Encode, Encoder};
use crate::contracts::compute_seller_rep;
use crate::crypto::Hash32;
use crate::ledger::{Cid, ParticipantId, Status, Tick, TxId};

/// A committed trade together with the buyer's rating of the seller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub tx_id: TxId,
    pub cid: Cid,
    pub seller: ParticipantId,
    pub buyer: ParticipantId,
    pub commodity_type: String,
    pub tick: Tick,
    pub buyer_rating: f64,
}

/// A seller's objection to the rating a buyer gave on one trade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissatisfactionFlag {
    pub seller_id: ParticipantId,
    pub buyer_id: ParticipantId,
    pub trade_tx: TxId,
    pub evidence_hash: Hash32,
    pub tick: Tick,
}

/// Correction of one seller reputation after an upheld flag. The original
/// value is kept here; the profile holds the corrected one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReweightAudit {
    pub tick: Tick,
    pub seller_id: ParticipantId,
    pub buyer_id: ParticipantId,
    pub trade_tx: TxId,
    pub commodity_type: String,
    pub original: f64,
    pub corrected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReweightAction {
    pub buyer_id: ParticipantId,
    pub entries: Vec<ReweightAudit>,
}

/// Whether flags a seller raised against a buyer are upheld: more than one
/// seller has flagged the buyer, and this seller's longest run of
/// consecutively flagged trades is shorter than its trade count with the
/// buyer.
pub fn flags_upheld(distinct_flagging_sellers: usize, consecutive_flags: usize, trades_between: usize) -> bool {
    distinct_flagging_sellers >= 2 && consecutive_flags < trades_between
}

/// Reputation-and-trust state derived from committed transactions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrustState {
    pub profiles: BTreeMap<ParticipantId, TrustProfile>,
    /// Committed trades in commit order.
    pub trades: Vec<TradeRecord>,
    pub flags: BTreeMap<TxId, DissatisfactionFlag>,
    pub audit: Vec<ReweightAudit>,
}

impl TrustState {
    pub fn register(&mut self, id: ParticipantId, trust_min: f64) {
        self.profiles
            .entry(id.clone())
            .or_insert_with(|| TrustProfile::new(id, trust_min));
    }

    pub fn set_status(&mut self, id: &ParticipantId, status: Status) {
        if let Some(p) = self.profiles.get_mut(id) {
            p.status = status;
        }
    }

    pub fn record_trade(&mut self, trade: TradeRecord, rep: RepRecord) {
        self.profiles
            .get_mut(&trade.seller)
            .expect("seller profile exists for a committed trade")
            .by_type
            .entry(trade.commodity_type.clone())
            .or_default()
            .push(rep);
        self.trades.push(trade);
    }

    pub fn trade(&self, tx_id: &TxId) -> Option<&TradeRecord> {
        self.trades.iter().find(|t| t.tx_id == *tx_id)
    }

    /// Recomputes and caches overall reputation and trust for one seller and
    /// commodity type.
    pub fn recompute(
        &mut self,
        seller: &ParticipantId,
        commodity_type: &str,
        t_n: Tick,
        config: &TrustConfig,
    ) -> Result<TrustSnapshot, TrustError> {
        let profile = self
            .profiles
            .get_mut(seller)
            .ok_or_else(|| TrustError::UnknownSeller(seller.clone()))?;
        let rep = profile.by_type.entry(commodity_type.to_string()).or_default();
        let snapshot = rep.evaluate(t_n, config);
        rep.cached = Some(snapshot);
        Ok(snapshot)
    }

    /// Recomputes every (seller, commodity type) pair that has a history.
    pub fn recompute_all(&mut self, t_n: Tick, config: &TrustConfig) -> Vec<(ParticipantId, String)> {
        let mut touched = Vec::new();
        for (id, profile) in &mut self.profiles {
            for (ty, rep) in &mut profile.by_type {
                if rep.history.is_empty() {
                    continue;
                }
                rep.cached = Some(rep.evaluate(t_n, config));
                touched.push((id.clone(), ty.clone()));
            }
        }
        touched
    }

    /// Records a flag and runs arbitration for the buyer.
    pub fn raise_dissatisfaction_flag(
        &mut self,
        seller: &ParticipantId,
        buyer: &ParticipantId,
        trade_tx: TxId,
        evidence_hash: Hash32,
        tick: Tick,
        config: &TrustConfig,
    ) -> Result<(DissatisfactionFlag, Option<ReweightAction>), TrustError> {
        let trade = self.trade(&trade_tx).ok_or(TrustError::NoSuchTrade(trade_tx))?;
        if trade.seller != *seller || trade.buyer != *buyer {
            return Err(TrustError::NotPartyToTrade(trade_tx));
        }
        if self.flags.contains_key(&trade_tx) {
            return Err(TrustError::DuplicateFlag(trade_tx));
        }
        if self.profiles.get(seller).is_some_and(|p| p.status == Status::Revoked) {
            return Err(TrustError::ParticipantRevoked(seller.clone()));
        }
        let flag = DissatisfactionFlag {
            seller_id: seller.clone(),
            buyer_id: buyer.clone(),
            trade_tx,
            evidence_hash,
            tick,
        };
        self.flags.insert(trade_tx, flag.clone());
        let action = self.resolve_flags(buyer, tick, config);
        Ok((flag, action))
    }

    /// Longest run of consecutively flagged trades from `seller` to `buyer`,
    /// and the number of trades between them.
    pub fn flag_run(&self, seller: &ParticipantId, buyer: &ParticipantId) -> (usize, usize) {
        let mut trades = 0;
        let (mut run, mut longest) = (0, 0);
        for t in self.trades.iter().filter(|t| t.seller == *seller && t.buyer == *buyer) {
            trades += 1;
            if self.flags.contains_key(&t.tx_id) {
                run += 1;
                longest = longest.max(run);
            } else {
                run = 0;
            }
        }
        (longest, trades)
    }

    /// Arbitrates the flags raised against `buyer`. For every flagging seller
    /// whose flags are upheld, the buyer-rating weight of each flagged trade is
    /// reduced and the seller's reputation for that trade recomputed.
    pub fn resolve_flags(&mut self, buyer: &ParticipantId, tick: Tick, config: &TrustConfig) -> Option<ReweightAction> {
        let sellers: BTreeSet<ParticipantId> = self
            .flags
            .values()
            .filter(|f| f.buyer_id == *buyer)
            .map(|f| f.seller_id.clone())
            .collect();
        let mut entries = Vec::new();
        for seller in &sellers {
            let (run, trades) = self.flag_run(seller, buyer);
            if !flags_upheld(sellers.len(), run, trades) {
                continue;
            }
            let flagged: Vec<(TxId, String)> = self
                .trades
                .iter()
                .filter(|t| t.seller == *seller && t.buyer == *buyer && self.flags.contains_key(&t.tx_id))
                .map(|t| (t.tx_id, t.commodity_type.clone()))
                .collect();
            for (tx_id, ty) in flagged {
                if let Some(entry) = self.reweight(seller, buyer, tx_id, &ty, tick, config) {
                    entries.push(entry);
                }
            }
        }
        if entries.is_empty() {
            return None;
        }
        let affected: BTreeSet<(ParticipantId, String)> = entries
            .iter()
            .map(|e| (e.seller_id.clone(), e.commodity_type.clone()))
            .collect();
        for (seller, ty) in affected {
            let _ = self.recompute(&seller, &ty, tick, config);
        }
        self.audit.extend(entries.iter().cloned());
        Some(ReweightAction {
            buyer_id: buyer.clone(),
            entries,
        })
    }

    fn reweight(
        &mut self,
        seller: &ParticipantId,
        buyer: &ParticipantId,
        tx_id: TxId,
        commodity_type: &str,
        tick: Tick,
        config: &TrustConfig,
    ) -> Option<ReweightAudit> {
        let rep = self.profiles.get_mut(seller)?.by_type.get_mut(commodity_type)?;
        let record = rep.history.iter_mut().find(|r| r.trade_tx == tx_id)?;
        if record.reweighted {
            return None;
        }
        let original = record.value;
        record.inputs.weights = record.inputs.weights.shrink_trader(config.flag_gamma);
        record.value = compute_seller_rep(&record.inputs);
        record.reweighted = true;
        let corrected = record.value;
        if record.successful {
            record.successful = false;
            rep.successful_tx -= 1;
        }
        Some(ReweightAudit {
            tick,
            seller_id: seller.clone(),
            buyer_id: buyer.clone(),
            trade_tx: tx_id,
            commodity_type: commodity_type.to_string(),
            original,
            corrected,
        })
    }
}

impl Encode for TrustState {
    fn encode(&self, enc: &mut Encoder) {
        enc.len(self.profiles.len());
        for p in self.profiles.values() {
            enc.put(p);
        }
        enc.len(self.trades.len());
        for t in &self.trades {
            enc.put(&t.tx_id)
                .put(&t.cid)
                .put(&t.seller)
                .put(&t.buyer)
                .str(&t.commodity_type)
                .u64(t.tick)
                .f64(t.buyer_rating);
        }
        enc.len(self.flags.len());
        for f in self.flags.values() {
            enc.put(&f.seller_id)
                .put(&f.buyer_id)
                .put(&f.trade_tx)
                .put(&f.evidence_hash)
                .u64(f.tick);
        }
        enc.len(self.audit.len());
        for a in &self.audit {
            enc.u64(a.tick)
                .put(&a.seller_id)
                .put(&a.buyer_id)
                .put(&a.trade_tx)
                .str(&a.commodity_type)
                .f64(a.original)
                .f64(a.corrected);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::{TradeRatingInputs, Weights};
    use crate::crypto::sha256;

    fn pid(s: &str) -> ParticipantId {
        ParticipantId::new(s).unwrap()
    }

    fn txid(n: u64) -> TxId {
        TxId(sha256(&n.to_be_bytes()))
    }

    struct Fixture {
        state: TrustState,
        next: u64,
        cfg: TrustConfig,
    }

    impl Fixture {
        fn new(names: &[&str]) -> Self {
            let mut state = TrustState::default();
            for n in names {
                state.register(pid(n), 0.3);
            }
            Fixture { state, next: 0, cfg: TrustConfig::default() }
        }

        fn trade(&mut self, seller: &str, buyer: &str, rating: f64) -> TxId {
            self.next += 1;
            let tx_id = txid(self.next);
            let inputs = TradeRatingInputs {
                rep_sens: 1.0,
                rep_trader: rating,
                rep_reg: 1.0,
                weights: Weights::equal(),
                reg_issued_at: Some(0),
            };
            let rec = RepRecord {
                tick: self.next,
                value: compute_seller_rep(&inputs),
                trade_tx: tx_id,
                inputs,
                successful: true,
                reweighted: false,
            };
            self.state.record_trade(
                TradeRecord {
                    tx_id,
                    cid: Cid::new(format!("c{}", self.next)).unwrap(),
                    seller: pid(seller),
                    buyer: pid(buyer),
                    commodity_type: "fish".into(),
                    tick: self.next,
                    buyer_rating: rating,
                },
                rec,
            );
            tx_id
        }

        fn flag(&mut self, seller: &str, buyer: &str, tx: TxId) -> Result<Option<ReweightAction>, TrustError> {
            self.state
                .raise_dissatisfaction_flag(&pid(seller), &pid(buyer), tx, Hash32::ZERO, 100, &self.cfg)
                .map(|(_, a)| a)
        }
    }

    #[test]
    fn flag_errors() {
        let mut f = Fixture::new(&["s", "b", "x"]);
        let t = f.trade("s", "b", 0.1);
        assert_eq!(f.flag("s", "b", txid(99)), Err(TrustError::NoSuchTrade(txid(99))));
        assert_eq!(f.flag("x", "b", t), Err(TrustError::NotPartyToTrade(t)));
        assert_eq!(f.flag("s", "x", t), Err(TrustError::NotPartyToTrade(t)));
        assert_eq!(f.flag("s", "b", t), Ok(None));
        assert_eq!(f.flag("s", "b", t), Err(TrustError::DuplicateFlag(t)));
    }

    #[test]
    fn two_sellers_with_partial_flags_trigger_reweight() {
        let mut f = Fixture::new(&["s", "s2", "b"]);
        let t1 = f.trade("s", "b", 0.0);
        let t2 = f.trade("s", "b", 0.0);
        f.trade("s", "b", 0.9);
        let u1 = f.trade("s2", "b", 0.0);
        f.trade("s2", "b", 0.9);
        assert_eq!(f.flag("s", "b", t1).unwrap(), None);
        assert_eq!(f.flag("s", "b", t2).unwrap(), None);
        let action = f.flag("s2", "b", u1).unwrap().expect("both conditions hold");
        let touched: BTreeSet<TxId> = action.entries.iter().map(|e| e.trade_tx).collect();
        assert_eq!(touched, [t1, t2, u1].into_iter().collect());
        for e in &action.entries {
            // Buyer weight 1/3 -> 1/6, the rest goes to sensor and regulator.
            let expected = (5.0 / 12.0) * 1.0 + (1.0 / 6.0) * 0.0 + (5.0 / 12.0) * 1.0;
            assert!((e.corrected - expected).abs() < 1e-12);
            assert!((e.original - 2.0 / 3.0).abs() < 1e-12);
        }
        let rep = &f.state.profiles[&pid("s")].by_type["fish"];
        assert_eq!(rep.successful_tx, 1);
        assert!(rep.cached.is_some());
        assert_eq!(f.state.audit.len(), 3);
    }

    #[test]
    fn single_flagging_seller_never_fires() {
        let mut f = Fixture::new(&["s", "b"]);
        let t1 = f.trade("s", "b", 0.0);
        f.trade("s", "b", 0.9);
        assert_eq!(f.flag("s", "b", t1).unwrap(), None);
        assert!(f.state.audit.is_empty());
    }

    #[test]
    fn seller_flagging_every_trade_is_not_upheld() {
        let mut f = Fixture::new(&["s", "s2", "b"]);
        let t1 = f.trade("s", "b", 0.0);
        let t2 = f.trade("s", "b", 0.0);
        let u1 = f.trade("s2", "b", 0.0);
        f.trade("s2", "b", 0.9);
        f.flag("s", "b", t1).unwrap();
        f.flag("s", "b", t2).unwrap();
        let action = f.flag("s2", "b", u1).unwrap().unwrap();
        assert!(action.entries.iter().all(|e| e.seller_id == pid("s2")));
        assert_eq!(f.state.flag_run(&pid("s"), &pid("b")), (2, 2));
    }

    #[test]
    fn predicate_truth_table() {
        assert!(!flags_upheld(1, 1, 5));
        assert!(!flags_upheld(2, 3, 3));
        assert!(flags_upheld(2, 2, 3));
        assert!(flags_upheld(4, 0, 1));
    }

    #[test]
    fn recompute_unknown_seller() {
        let mut f = Fixture::new(&["s"]);
        assert_eq!(
            f.state.recompute(&pid("nobody"), "fish", 0, &TrustConfig::default()),
            Err(TrustError::UnknownSeller(pid("nobody")))
        );
    }
}
