use serde::{Deserialize, Serialize};

use super::TrustError;
use crate::ledger::Tick;

/// One row of the feature-score table: counts in `[min, max]` (or `[min, ∞)`
/// when `max` is `None`) map to `score`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureBand {
    pub min: u64,
    pub max: Option<u64>,
    pub score: f64,
}

/// Banded score for the number of successful transactions.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FeatureTable {
    bands: Vec<FeatureBand>,
}

impl FeatureTable {
    /// Bands must be sorted, contiguous from zero, and end open.
    pub fn new(bands: Vec<FeatureBand>) -> Result<Self, TrustError> {
        let bad = |why: &str| Err(TrustError::InvalidConfig(format!("feature table: {why}")));
        let Some(first) = bands.first() else {
            return bad("no bands");
        };
        if first.min != 0 {
            return bad("first band must start at 0");
        }
        for pair in bands.windows(2) {
            match pair[0].max {
                Some(max) if max >= pair[0].min && pair[1].min == max + 1 => {}
                _ => return bad("bands must be contiguous and non-overlapping"),
            }
        }
        if bands.last().unwrap().max.is_some() {
            return bad("last band must be open-ended");
        }
        if bands.iter().any(|b| !b.score.is_finite()) {
            return bad("scores must be finite");
        }
        Ok(Self { bands })
    }

    /// The successful-transaction table: 0 → −1, 1–3 → 0.5, 4–5 → 1.5,
    /// 6 and above → 2.
    pub fn successful_transactions() -> Self {
        Self::new(vec![
            FeatureBand { min: 0, max: Some(0), score: -1.0 },
            FeatureBand { min: 1, max: Some(3), score: 0.5 },
            FeatureBand { min: 4, max: Some(5), score: 1.5 },
            FeatureBand { min: 6, max: None, score: 2.0 },
        ])
        .expect("built-in table is valid")
    }

    pub fn score(&self, count: u64) -> f64 {
        self.bands
            .iter()
            .find(|b| count >= b.min && b.max.is_none_or(|m| count <= m))
            .map(|b| b.score)
            .expect("bands are exhaustive")
    }

    pub fn bands(&self) -> &[FeatureBand] {
        &self.bands
    }
}

impl Default for FeatureTable {
    fn default() -> Self {
        Self::successful_transactions()
    }
}

impl<'de> Deserialize<'de> for FeatureTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let bands = Vec::<FeatureBand>::deserialize(d)?;
        FeatureTable::new(bands).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrustConfig {
    /// Forgetting rate per tick: an event of age `a` is weighted `e^(-lambda*a)`.
    pub lambda: f64,
    /// `alpha[0]` weights the overall reputation, `alpha[i]` the i-th feature.
    pub alpha: Vec<f64>,
    pub feature_table: FeatureTable,
    pub trust_min: f64,
    /// Factor applied to the buyer-rating weight when a flag is upheld.
    pub flag_gamma: f64,
    /// Ticks between automatic recomputations; `None` disables them.
    pub recompute_period: Option<Tick>,
}

impl Default for TrustConfig {
    fn default() -> Self {
        TrustConfig {
            lambda: 0.05,
            alpha: vec![1.0, 0.1],
            feature_table: FeatureTable::default(),
            trust_min: 0.3,
            flag_gamma: 0.5,
            recompute_period: Some(50),
        }
    }
}

impl TrustConfig {
    pub fn validate(&self) -> Result<(), TrustError> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(TrustError::InvalidConfig("lambda must be finite and >= 0".into()));
        }
        match self.alpha.first() {
            Some(a0) if *a0 > 0.0 => {}
            _ => return Err(TrustError::InvalidConfig("alpha[0] must be > 0".into())),
        }
        if self.alpha.len() != 2 {
            // Only the successful-transaction feature exists.
            return Err(TrustError::DimensionMismatch {
                alphas: self.alpha.len(),
                features: 1,
            });
        }
        if !(0.0..=1.0).contains(&self.flag_gamma) {
            return Err(TrustError::InvalidConfig("flag_gamma must lie in [0,1]".into()));
        }
        if self.recompute_period == Some(0) {
            return Err(TrustError::InvalidConfig("recompute_period must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        let t = FeatureTable::default();
        assert_eq!(t.score(0), -1.0);
        assert_eq!(t.score(2), 0.5);
        assert_eq!(t.score(5), 1.5);
        assert_eq!(t.score(6), 2.0);
        assert_eq!(t.score(u64::MAX), 2.0);
    }

    #[test]
    fn malformed_tables_rejected() {
        let b = |min, max, score| FeatureBand { min, max, score };
        assert!(FeatureTable::new(vec![]).is_err());
        assert!(FeatureTable::new(vec![b(1, None, 1.0)]).is_err());
        // Two bands both claiming 6.
        assert!(FeatureTable::new(vec![b(0, Some(6), 1.0), b(6, None, 2.0)]).is_err());
        assert!(FeatureTable::new(vec![b(0, Some(2), 1.0), b(4, None, 2.0)]).is_err());
        assert!(FeatureTable::new(vec![b(0, Some(2), 1.0)]).is_err());
        assert!(FeatureTable::new(vec![b(0, None, 1.0)]).is_ok());
    }

    #[test]
    fn config_validation() {
        assert!(TrustConfig::default().validate().is_ok());
        let bad = TrustConfig { lambda: -1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = TrustConfig { alpha: vec![0.0, 0.1], ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = TrustConfig { alpha: vec![1.0], ..Default::default() };
        assert!(matches!(bad.validate(), Err(TrustError::DimensionMismatch { .. })));
    }

    #[test]
    fn table_deserializes_with_validation() {
        let ok: FeatureTable =
            serde_json::from_str(r#"[{"min":0,"max":null,"score":1.0}]"#).unwrap();
        assert_eq!(ok.score(10), 1.0);
        assert!(serde_json::from_str::<FeatureTable>(r#"[{"min":3,"max":null,"score":1.0}]"#).is_err());
    }
}
