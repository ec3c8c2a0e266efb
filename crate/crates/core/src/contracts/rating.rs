use serde::{Deserialize, Serialize};

use super::ContractError;
use crate::ledger::Tick;

const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Weights of the sensor, buyer and regulator components of a seller's
/// per-trade reputation. Non-negative and summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub sensor: f64,
    pub trader: f64,
    pub regulator: f64,
}

impl Weights {
    pub fn new(sensor: f64, trader: f64, regulator: f64) -> Result<Self, ContractError> {
        let w = Weights { sensor, trader, regulator };
        let parts = w.as_array();
        let sum: f64 = parts.iter().sum();
        if parts.iter().any(|x| !x.is_finite() || *x < 0.0) || (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(ContractError::InvalidWeights { sensor, trader, regulator });
        }
        Ok(w)
    }

    pub fn equal() -> Self {
        Weights {
            sensor: 1.0 / 3.0,
            trader: 1.0 / 3.0,
            regulator: 1.0 / 3.0,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.sensor, self.trader, self.regulator]
    }

    fn from_array(w: [f64; 3]) -> Self {
        Weights {
            sensor: w[0],
            trader: w[1],
            regulator: w[2],
        }
    }

    pub fn sum(&self) -> f64 {
        self.as_array().iter().sum()
    }

    /// Scales one component by `factor` and hands the freed weight to the
    /// other two in proportion to their current values (equally when both
    /// are zero).
    fn shrink(self, idx: usize, factor: f64) -> Self {
        let mut w = self.as_array();
        let deficit = w[idx] * (1.0 - factor);
        w[idx] *= factor;
        let others: Vec<usize> = (0..3).filter(|&i| i != idx).collect();
        let other_sum: f64 = others.iter().map(|&i| w[i]).sum();
        for &i in &others {
            w[i] += if other_sum > 0.0 {
                deficit * w[i] / other_sum
            } else {
                deficit / 2.0
            };
        }
        let total: f64 = w.iter().sum();
        Self::from_array(w.map(|x| x / total))
    }

    /// Reduces the regulator weight by `factor`.
    pub fn shrink_regulator(self, factor: f64) -> Self {
        self.shrink(2, factor)
    }

    /// Reduces the buyer-rating weight by `factor`.
    pub fn shrink_trader(self, factor: f64) -> Self {
        self.shrink(1, factor)
    }
}

impl Default for Weights {
    fn default() -> Self {
        Self::equal()
    }
}

/// Rating-contract parameters, fixed by the consortium at network start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RatingConfig {
    pub weights: Weights,
    /// Factor applied to the regulator weight once its rating is stale.
    pub staleness_gamma: f64,
    /// Age in ticks after which a regulator rating counts as stale.
    pub inspection_period: Tick,
    /// Score for a trade segment without readings, and for a commodity that
    /// was never scored.
    pub neutral_score: f64,
}

impl Default for RatingConfig {
    fn default() -> Self {
        RatingConfig {
            weights: Weights::equal(),
            staleness_gamma: 0.5,
            inspection_period: 100,
            neutral_score: 0.5,
        }
    }
}

impl RatingConfig {
    pub fn validate(&self) -> Result<(), ContractError> {
        let w = self.weights;
        Weights::new(w.sensor, w.trader, w.regulator)?;
        if !(0.0..=1.0).contains(&self.staleness_gamma) {
            return Err(ContractError::InvalidConfig("staleness_gamma must lie in [0,1]".into()));
        }
        if !(0.0..=1.0).contains(&self.neutral_score) {
            return Err(ContractError::InvalidConfig("neutral_score must lie in [0,1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeRatingInputs {
    pub rep_sens: f64,
    pub rep_trader: f64,
    pub rep_reg: f64,
    pub weights: Weights,
    pub reg_issued_at: Option<Tick>,
}

/// Lowers the regulator weight when its rating is older than the inspection
/// period. A missing rating is treated as fully expired.
pub fn apply_staleness(
    weights: Weights,
    reg_issued_at: Option<Tick>,
    now: Tick,
    inspection_period: Tick,
    gamma: f64,
) -> Weights {
    match reg_issued_at {
        None => weights.shrink_regulator(0.0),
        Some(at) if now.saturating_sub(at) > inspection_period => weights.shrink_regulator(gamma),
        Some(_) => weights,
    }
}

/// Seller reputation for one trade: the weighted sum of the three inputs.
pub fn compute_seller_rep(inputs: &TradeRatingInputs) -> f64 {
    let w = inputs.weights;
    let rep = w.sensor * inputs.rep_sens + w.trader * inputs.rep_trader + w.regulator * inputs.rep_reg;
    rep.clamp(0.0, 1.0)
}

/// Maps a rating on `[0, scale_max]` onto `[0, 1]`.
pub fn normalize_rating(value: f64, scale_max: f64) -> Result<f64, ContractError> {
    if !(scale_max > 0.0) || !value.is_finite() || !(0.0..=scale_max).contains(&value) {
        return Err(ContractError::RatingOutOfRange(value));
    }
    Ok(value / scale_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn weight_validation() {
        assert!(Weights::new(0.5, 0.25, 0.25).is_ok());
        assert!(Weights::new(0.5, 0.5, 0.5).is_err());
        assert!(Weights::new(1.2, -0.2, 0.0).is_err());
    }

    #[test]
    fn weighted_sum_examples() {
        let inputs = TradeRatingInputs {
            rep_sens: 0.9,
            rep_trader: 0.6,
            rep_reg: 0.9,
            weights: Weights::equal(),
            reg_issued_at: Some(0),
        };
        assert!(close(compute_seller_rep(&inputs), 0.8));
        let inputs = TradeRatingInputs {
            rep_sens: 0.7,
            rep_trader: 0.1,
            rep_reg: 0.1,
            weights: Weights::new(1.0, 0.0, 0.0).unwrap(),
            reg_issued_at: None,
        };
        assert!(close(compute_seller_rep(&inputs), 0.7));
    }

    #[test]
    fn staleness_examples() {
        let w = Weights::equal();
        assert_eq!(apply_staleness(w, Some(50), 100, 100, 0.5), w);
        // Exactly at the period boundary is still fresh.
        assert_eq!(apply_staleness(w, Some(0), 100, 100, 0.5), w);
        let stale = apply_staleness(w, Some(0), 101, 100, 0.5);
        assert!(close(stale.sensor, 5.0 / 12.0));
        assert!(close(stale.trader, 5.0 / 12.0));
        assert!(close(stale.regulator, 1.0 / 6.0));
        assert!(close(stale.sum(), 1.0));
        let expired = apply_staleness(w, Some(0), 500, 100, 0.0);
        assert!(close(expired.sensor, 0.5) && close(expired.trader, 0.5) && expired.regulator == 0.0);
        assert_eq!(apply_staleness(w, None, 0, 100, 0.5), expired);
    }

    #[test]
    fn shrink_with_zero_others_splits_evenly() {
        let w = Weights::new(0.0, 0.0, 1.0).unwrap().shrink_regulator(0.5);
        assert!(close(w.sensor, 0.25) && close(w.trader, 0.25) && close(w.regulator, 0.5));
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_rating(4.0, 5.0).unwrap(), 0.8);
        assert!(normalize_rating(6.0, 5.0).is_err());
        assert!(normalize_rating(1.0, 0.0).is_err());
    }

    fn arb_weights() -> impl Strategy<Value = Weights> {
        (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_filter_map("degenerate", |(a, b, c)| {
            let s = a + b + c;
            (s > 1e-6).then(|| Weights::from_array([a / s, b / s, c / s]))
        })
    }

    proptest! {
        #[test]
        fn staleness_keeps_normalization(w in arb_weights(), gamma in 0.0f64..=1.0, age in 0u64..300) {
            let adj = apply_staleness(w, Some(0), age, 100, gamma);
            prop_assert!(close(adj.sum(), 1.0));
            prop_assert!(adj.as_array().iter().all(|x| *x >= 0.0));
            prop_assert!(adj.regulator <= w.regulator + 1e-12);
        }

        #[test]
        fn convex_combination_of_equal_inputs(w in arb_weights(), x in 0.0f64..=1.0) {
            let inputs = TradeRatingInputs { rep_sens: x, rep_trader: x, rep_reg: x, weights: w, reg_issued_at: None };
            prop_assert!(close(compute_seller_rep(&inputs), x));
        }

        #[test]
        fn linear_in_each_input(w in arb_weights(), a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0, d in 0.0f64..=1.0) {
            // Moving one input by d changes the output by exactly weight * d.
            let base = TradeRatingInputs { rep_sens: a, rep_trader: b, rep_reg: c, weights: w, reg_issued_at: None };
            let moved = TradeRatingInputs { rep_trader: d, ..base };
            let diff = compute_seller_rep(&moved) - compute_seller_rep(&base);
            prop_assert!((diff - w.trader * (d - b)).abs() < 1e-12);
        }
    }
}
