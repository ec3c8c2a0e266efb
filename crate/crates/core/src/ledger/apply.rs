//! Commit path: state transitions for validated transactions.

use super::store::OffChainStore;
use super::{
    readings_payload, Commodity, LedgerConfig, LedgerMode, LedgerState, OwnershipRecord, RegulatorRecord,
    SensorScore, Status, Tick, Transaction, TxBody,
};
use crate::contracts::{
    apply_staleness, commodity_score, compute_seller_rep, overall_commodity_rating, process_sensor_reading,
    TradeRatingInputs,
};
use crate::events::Event;
use crate::trust::{check_trust_violation, RepRecord, TradeRecord};

/// Applies one transaction that has already been validated against `state`.
pub(crate) fn apply_transaction(
    state: &mut LedgerState,
    store: &mut OffChainStore,
    tx: &Transaction,
    config: &LedgerConfig,
    events: &mut Vec<Event>,
) {
    let tx_id = tx.id();
    let at = tx.submitted_at;
    let full = config.mode == LedgerMode::TrustChain;
    match &tx.body {
        TxBody::Create { cid, data_hash, owner_id, contract_id, .. } => {
            let commodity_type = state
                .contracts
                .get(contract_id)
                .map(|c| c.commodity_type.clone())
                .unwrap_or_default();
            state.commodities.insert(
                cid.clone(),
                Commodity {
                    cid: cid.clone(),
                    commodity_type,
                    contract_id: contract_id.clone(),
                    owner: owner_id.clone(),
                    data_hash: *data_hash,
                    created_at: at,
                    chain_complete: false,
                    sensor_scores: Vec::new(),
                    readings: Vec::new(),
                    segment_start: 0,
                    provenance: vec![OwnershipRecord { owner: owner_id.clone(), since: at, tx_id }],
                    overall_rating: None,
                },
            );
        }
        TxBody::Trade { cid, buyer_id, seller_pub, buyer_rating, .. } => {
            let seller = state.participant_by_key(seller_pub).expect("validated").id.clone();
            if full {
                let commodity = &state.commodities[cid];
                let contract = state.contracts.get(&commodity.contract_id).expect("validated");
                let segment: Vec<f64> = commodity.segment_readings().iter().map(|r| r.celsius).collect();
                let seg = commodity_score(contract, &segment, config.rating.neutral_score);
                let commodity_type = commodity.commodity_type.clone();

                let reg = state.regulator_rating(&seller, &commodity_type);
                let rep_reg = reg.map_or(0.0, |r| r.rating);
                let reg_issued_at = reg.map(|r| r.issued_at);
                let weights = apply_staleness(
                    config.rating.weights,
                    reg_issued_at,
                    at,
                    config.rating.inspection_period,
                    config.rating.staleness_gamma,
                );
                let inputs = TradeRatingInputs {
                    rep_sens: seg.score,
                    rep_trader: *buyer_rating,
                    rep_reg,
                    weights,
                    reg_issued_at,
                };
                let value = compute_seller_rep(&inputs);
                state.trust.record_trade(
                    TradeRecord {
                        tx_id,
                        cid: cid.clone(),
                        seller: seller.clone(),
                        buyer: buyer_id.clone(),
                        commodity_type,
                        tick: at,
                        buyer_rating: *buyer_rating,
                    },
                    RepRecord {
                        tick: at,
                        value,
                        trade_tx: tx_id,
                        inputs,
                        successful: !seg.damage_breach,
                        reweighted: false,
                    },
                );
                let commodity = state.commodities.get_mut(cid).expect("validated");
                commodity.sensor_scores.push(SensorScore {
                    tick: at,
                    score: seg.score,
                    unmonitored: seg.unmonitored,
                });
                commodity.segment_start = commodity.readings.len();
            }
            let commodity = state.commodities.get_mut(cid).expect("validated");
            commodity.owner = buyer_id.clone();
            commodity.provenance.push(OwnershipRecord { owner: buyer_id.clone(), since: at, tx_id });
        }
        TxBody::Sensory { cid, readings, .. } => {
            store.put(readings_payload(readings));
            if full {
                for &r in readings {
                    let warning = process_sensor_reading(&state.contracts, &mut state.commodities, cid, r, at)
                        .expect("validated");
                    if let Some(w) = warning {
                        events.push(Event::Warning(w));
                    }
                }
            }
        }
        TxBody::RegulatorRating { regulator_id, seller_id, data_hash, commodity_type, rating, issued_at, .. } => {
            if full {
                let slot = state
                    .regulator_ratings
                    .entry(seller_id.clone())
                    .or_default()
                    .entry(commodity_type.clone());
                let record = RegulatorRecord {
                    regulator_id: regulator_id.clone(),
                    rating: *rating,
                    issued_at: *issued_at,
                    data_hash: *data_hash,
                };
                use std::collections::btree_map::Entry;
                match slot {
                    Entry::Vacant(v) => {
                        v.insert(record);
                    }
                    Entry::Occupied(mut o) => {
                        if o.get().issued_at <= *issued_at {
                            o.insert(record);
                        }
                    }
                }
            }
        }
        TxBody::Receipt { cid, .. } => {
            let commodity = state.commodities.get_mut(cid).expect("validated");
            commodity.chain_complete = true;
            if full {
                let rating = overall_commodity_rating(commodity, config.rating.neutral_score, at).expect("complete");
                commodity.overall_rating = Some(rating);
                events.push(Event::CommodityRated {
                    tick: at,
                    cid: cid.clone(),
                    rating: rating.value,
                    unmonitored: rating.unmonitored,
                });
            }
        }
        TxBody::Revoke { participant_id, .. } | TxBody::Resume { participant_id, .. } => {
            let status = if matches!(tx.body, TxBody::Revoke { .. }) {
                Status::Revoked
            } else {
                Status::Active
            };
            state.participants.get_mut(participant_id).expect("validated").status = status;
            if full {
                state.trust.set_status(participant_id, status);
                if status == Status::Active {
                    if let Some(p) = state.trust.profiles.get_mut(participant_id) {
                        p.reinitialize(config.trust.trust_min);
                    }
                }
            }
            events.push(Event::StatusChanged {
                tick: at,
                participant_id: participant_id.clone(),
                status,
            });
        }
    }
    state.committed.insert(tx_id);
}

/// Periodic aggregation: recomputes every seller profile once the recompute
/// period has elapsed since the last run, and reports trust violations.
pub(crate) fn periodic_recompute(state: &mut LedgerState, config: &LedgerConfig, now: Tick, events: &mut Vec<Event>) {
    if config.mode != LedgerMode::TrustChain {
        return;
    }
    let Some(period) = config.trust.recompute_period else {
        return;
    };
    if now < state.last_recompute.saturating_add(period) {
        return;
    }
    state.last_recompute = now;
    for (id, ty) in state.trust.recompute_all(now, &config.trust) {
        let profile = &state.trust.profiles[&id];
        let snap = profile.by_type[&ty].cached.expect("just computed");
        events.push(Event::TrustRecomputed {
            tick: now,
            participant_id: id.clone(),
            commodity_type: ty.clone(),
            reputation: snap.reputation,
            trust: snap.trust,
        });
        if let Some(notice) = check_trust_violation(profile, &ty, &config.trust, now) {
            events.push(Event::Violation(notice));
        }
    }
}
