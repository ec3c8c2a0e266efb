use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ContractError;
use crate::codec::{Encode, Encoder};
use crate::ledger::{Cid, Commodity, CommodityRating, ContractId, SensorReading, Tick};

/// Temperature thresholds a commodity is bound to.
///
/// Readings inside `[boundary_low, boundary_high]` are safe. Readings outside
/// `[damage_low, damage_high]` mean the commodity is spoiled. Anything in
/// between is a boundary violation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityContract {
    pub contract_id: ContractId,
    pub commodity_type: String,
    pub damage_low: f64,
    pub boundary_low: f64,
    pub boundary_high: f64,
    pub damage_high: f64,
    pub max_score: f64,
}

impl QualityContract {
    pub fn new(
        contract_id: ContractId,
        commodity_type: impl Into<String>,
        damage_low: f64,
        boundary_low: f64,
        boundary_high: f64,
        damage_high: f64,
    ) -> Result<Self, ContractError> {
        let commodity_type = commodity_type.into();
        if commodity_type.trim().is_empty() {
            return Err(ContractError::EmptyCommodityType);
        }
        let bounds = [damage_low, boundary_low, boundary_high, damage_high];
        if bounds.iter().any(|b| !b.is_finite()) || bounds.windows(2).any(|w| w[0] > w[1]) {
            return Err(ContractError::InvalidThresholds {
                damage_low,
                boundary_low,
                boundary_high,
                damage_high,
            });
        }
        Ok(Self {
            contract_id,
            commodity_type,
            damage_low,
            boundary_low,
            boundary_high,
            damage_high,
            max_score: 1.0,
        })
    }

    pub fn classify(&self, celsius: f64) -> ReadingZone {
        if !(self.damage_low..=self.damage_high).contains(&celsius) {
            ReadingZone::DamageBreach
        } else if !(self.boundary_low..=self.boundary_high).contains(&celsius) {
            ReadingZone::BoundaryViolation
        } else {
            ReadingZone::InBand
        }
    }
}

impl Encode for QualityContract {
    fn encode(&self, enc: &mut Encoder) {
        enc.put(&self.contract_id)
            .str(&self.commodity_type)
            .f64(self.damage_low)
            .f64(self.boundary_low)
            .f64(self.boundary_high)
            .f64(self.damage_high)
            .f64(self.max_score);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadingZone {
    InBand = 0,
    BoundaryViolation = 1,
    DamageBreach = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WarningKind {
    DamageBreach,
}

/// Alert for the commodity owner: a reading left the damage band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarningEvent {
    pub tick: Tick,
    pub cid: Cid,
    pub reading: f64,
    pub kind: WarningKind,
}

/// Quality contracts addressable by id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContractRegistry {
    contracts: BTreeMap<ContractId, QualityContract>,
}

impl ContractRegistry {
    pub fn instantiate(&mut self, contract: QualityContract) -> Result<&QualityContract, ContractError> {
        use std::collections::btree_map::Entry;
        match self.contracts.entry(contract.contract_id.clone()) {
            Entry::Occupied(e) => Err(ContractError::DuplicateContract(e.key().clone())),
            Entry::Vacant(e) => Ok(e.insert(contract)),
        }
    }

    pub fn get(&self, id: &ContractId) -> Option<&QualityContract> {
        self.contracts.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &QualityContract> {
        self.contracts.values()
    }

    pub fn len(&self) -> usize {
        self.contracts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contracts.is_empty()
    }
}

/// Records a reading in the commodity's history and emits a warning when it
/// breaches the damage band. Scores are not touched here; they are computed
/// when the commodity is traded.
pub fn process_sensor_reading(
    contracts: &ContractRegistry,
    commodities: &mut BTreeMap<Cid, Commodity>,
    cid: &Cid,
    celsius: f64,
    tick: Tick,
) -> Result<Option<WarningEvent>, ContractError> {
    let commodity = commodities
        .get_mut(cid)
        .ok_or_else(|| ContractError::UnknownCommodity(cid.clone()))?;
    let contract = contracts
        .get(&commodity.contract_id)
        .ok_or_else(|| ContractError::UnknownContract(commodity.contract_id.clone()))?;
    let zone = contract.classify(celsius);
    commodity.readings.push(SensorReading { tick, celsius, zone });
    Ok((zone == ReadingZone::DamageBreach).then(|| WarningEvent {
        tick,
        cid: cid.clone(),
        reading: celsius,
        kind: WarningKind::DamageBreach,
    }))
}

/// Sensor score of one trade segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentScore {
    pub score: f64,
    pub unmonitored: bool,
    pub damage_breach: bool,
}

/// Scores the readings taken since the previous trade: zero on any damage
/// breach, otherwise the fraction of readings that stayed in band. An empty
/// segment gets `neutral_score` and is flagged unmonitored.
pub fn commodity_score(contract: &QualityContract, readings: &[f64], neutral_score: f64) -> SegmentScore {
    if readings.is_empty() {
        return SegmentScore {
            score: neutral_score,
            unmonitored: true,
            damage_breach: false,
        };
    }
    let mut violations = 0usize;
    for &r in readings {
        match contract.classify(r) {
            ReadingZone::DamageBreach => {
                return SegmentScore {
                    score: 0.0,
                    unmonitored: false,
                    damage_breach: true,
                }
            }
            ReadingZone::BoundaryViolation => violations += 1,
            ReadingZone::InBand => {}
        }
    }
    SegmentScore {
        score: contract.max_score * (1.0 - violations as f64 / readings.len() as f64),
        unmonitored: false,
        damage_breach: false,
    }
}

/// Overall quality rating over the commodity's per-trade sensor scores
/// (arithmetic mean). Only available once the chain is complete.
pub fn overall_commodity_rating(
    commodity: &Commodity,
    neutral_score: f64,
    now: Tick,
) -> Result<CommodityRating, ContractError> {
    if !commodity.chain_complete {
        return Err(ContractError::ChainIncomplete(commodity.cid.clone()));
    }
    let scores = &commodity.sensor_scores;
    if scores.is_empty() {
        return Ok(CommodityRating {
            value: neutral_score,
            unmonitored: true,
            computed_at: now,
        });
    }
    let mean = scores.iter().map(|s| s.score).sum::<f64>() / scores.len() as f64;
    Ok(CommodityRating {
        value: mean,
        unmonitored: scores.iter().all(|s| s.unmonitored),
        computed_at: now,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::Hash32;
    use crate::ledger::{ParticipantId, SensorScore};
    use proptest::prelude::*;

    fn frozen() -> QualityContract {
        QualityContract::new(ContractId::new("qc").unwrap(), "frozen", -25.0, -18.0, 0.0, 4.0).unwrap()
    }

    fn commodity(scores: &[f64], complete: bool) -> Commodity {
        Commodity {
            cid: Cid::new("c1").unwrap(),
            commodity_type: "frozen".into(),
            contract_id: ContractId::new("qc").unwrap(),
            owner: ParticipantId::new("p").unwrap(),
            data_hash: Hash32::ZERO,
            created_at: 0,
            chain_complete: complete,
            sensor_scores: scores
                .iter()
                .enumerate()
                .map(|(i, &score)| SensorScore { tick: i as u64, score, unmonitored: false })
                .collect(),
            readings: vec![],
            segment_start: 0,
            provenance: vec![],
            overall_rating: None,
        }
    }

    #[test]
    fn threshold_ordering_enforced() {
        let id = ContractId::new("q").unwrap();
        assert!(QualityContract::new(id.clone(), "t", -25.0, -18.0, 0.0, 4.0).is_ok());
        assert!(matches!(
            QualityContract::new(id.clone(), "t", -25.0, -18.0, 5.0, 4.0),
            Err(ContractError::InvalidThresholds { .. })
        ));
        assert!(QualityContract::new(id.clone(), "t", f64::NAN, -18.0, 0.0, 4.0).is_err());
        assert_eq!(
            QualityContract::new(id, " ", -25.0, -18.0, 0.0, 4.0),
            Err(ContractError::EmptyCommodityType)
        );
    }

    #[test]
    fn duplicate_contract_rejected() {
        let mut reg = ContractRegistry::default();
        reg.instantiate(frozen()).unwrap();
        assert!(matches!(reg.instantiate(frozen()), Err(ContractError::DuplicateContract(_))));
    }

    #[test]
    fn zones() {
        let c = frozen();
        assert_eq!(c.classify(-10.0), ReadingZone::InBand);
        assert_eq!(c.classify(0.0), ReadingZone::InBand);
        assert_eq!(c.classify(2.0), ReadingZone::BoundaryViolation);
        assert_eq!(c.classify(4.0), ReadingZone::BoundaryViolation);
        assert_eq!(c.classify(4.5), ReadingZone::DamageBreach);
        assert_eq!(c.classify(-26.0), ReadingZone::DamageBreach);
    }

    #[test]
    fn reading_recording_and_warnings() {
        let mut reg = ContractRegistry::default();
        reg.instantiate(frozen()).unwrap();
        let mut map = BTreeMap::new();
        let c = commodity(&[], false);
        map.insert(c.cid.clone(), c);
        let cid = Cid::new("c1").unwrap();
        assert_eq!(process_sensor_reading(&reg, &mut map, &cid, -10.0, 1).unwrap(), None);
        assert_eq!(process_sensor_reading(&reg, &mut map, &cid, 2.0, 2).unwrap(), None);
        let w = process_sensor_reading(&reg, &mut map, &cid, 9.0, 3).unwrap().unwrap();
        assert_eq!(w.kind, WarningKind::DamageBreach);
        assert_eq!(w.reading, 9.0);
        let zones: Vec<_> = map[&cid].readings.iter().map(|r| r.zone).collect();
        assert_eq!(
            zones,
            vec![ReadingZone::InBand, ReadingZone::BoundaryViolation, ReadingZone::DamageBreach]
        );
        let unknown = Cid::new("zz").unwrap();
        assert_eq!(
            process_sensor_reading(&reg, &mut map, &unknown, 0.0, 4),
            Err(ContractError::UnknownCommodity(unknown))
        );
    }

    #[test]
    fn segment_scores() {
        let c = frozen();
        assert_eq!(commodity_score(&c, &[-10.0; 10], 0.5).score, 1.0);
        let mut r = vec![-10.0; 10];
        r[3] = 9.0;
        assert_eq!(commodity_score(&c, &r, 0.5).score, 0.0);
        // 2 of 10 in the boundary-violation zone: 1 - 2/10.
        let mut r = vec![-10.0; 10];
        r[0] = 1.0;
        r[7] = 3.5;
        assert!((commodity_score(&c, &r, 0.5).score - 0.8).abs() < 1e-12);
        let empty = commodity_score(&c, &[], 0.5);
        assert_eq!((empty.score, empty.unmonitored), (0.5, true));
    }

    #[test]
    fn overall_rating_is_mean() {
        assert_eq!(overall_commodity_rating(&commodity(&[1.0, 1.0, 1.0], true), 0.5, 9).unwrap().value, 1.0);
        assert_eq!(overall_commodity_rating(&commodity(&[1.0, 0.0], true), 0.5, 9).unwrap().value, 0.5);
        let none = overall_commodity_rating(&commodity(&[], true), 0.5, 9).unwrap();
        assert_eq!((none.value, none.unmonitored), (0.5, true));
        assert!(matches!(
            overall_commodity_rating(&commodity(&[1.0], false), 0.5, 9),
            Err(ContractError::ChainIncomplete(_))
        ));
    }

    proptest! {
        #[test]
        fn score_bounded_and_monotone(readings in prop::collection::vec(-30.0f64..10.0, 0..30), extra in -30.0f64..10.0) {
            let c = frozen();
            let base = commodity_score(&c, &readings, 0.5);
            prop_assert!((0.0..=1.0).contains(&base.score));
            if readings.is_empty() {
                return Ok(());
            }
            let mut more = readings.clone();
            more.push(extra);
            let next = commodity_score(&c, &more, 0.5).score;
            match c.classify(extra) {
                ReadingZone::InBand => prop_assert!(next >= base.score),
                _ => prop_assert!(next <= base.score),
            }
        }
    }
}
