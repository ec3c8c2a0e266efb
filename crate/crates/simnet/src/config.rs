use serde::{Deserialize, Serialize};
use trustchain_core::LedgerMode;

use crate::SimError;

/// Transaction kind driven through the pipeline by the load generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchTx {
    Create,
    Trade,
}

impl BenchTx {
    pub fn as_str(self) -> &'static str {
        match self {
            BenchTx::Create => "create",
            BenchTx::Trade => "trade",
        }
    }
}

impl std::fmt::Display for BenchTx {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BenchTx {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "create" => Ok(BenchTx::Create),
            "trade" => Ok(BenchTx::Trade),
            other => Err(format!("unknown tx kind `{other}` (expected create|trade)")),
        }
    }
}

/// Service-time inflation once a queue backs up past `threshold` txs.
///
/// Service time is multiplied by `1 + slope * max(0, q - threshold) / threshold`.
/// This is what turns a plateau into the decline seen past saturation: the
/// longer the validation backlog, the slower each block goes through.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Degradation {
    pub threshold: f64,
    pub slope: f64,
}

impl Default for Degradation {
    fn default() -> Self {
        Degradation { threshold: 150.0, slope: 0.25 }
    }
}

impl Degradation {
    pub fn factor(&self, queued: usize) -> f64 {
        let excess = (queued as f64 - self.threshold).max(0.0);
        1.0 + self.slope * excess / self.threshold
    }
}

/// Costs and limits of the simulated endorse → order → validate → commit
/// pipeline. All times are in seconds of simulated time.
///
/// The defaults are a calibration, not a measurement: they put the
/// TrustChain trade path at roughly 43 tx/s of validation capacity and the
/// baseline at 50 tx/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub mode: LedgerMode,
    /// Per-tx endorsement cost. Creation is dearer because the endorser also
    /// validates the new resource.
    pub endorse_create_s: f64,
    pub endorse_trade_s: f64,
    /// Orderer to peer delivery delay per block.
    pub broadcast_s: f64,
    pub batch_size: usize,
    pub batch_timeout_s: f64,
    /// Per-tx validation cost shared by both modes.
    pub validate_s: f64,
    /// Extra per-tx cost of contract execution and trust bookkeeping. Only
    /// charged in TrustChain mode.
    pub contract_create_s: f64,
    pub contract_trade_s: f64,
    /// Per-block ledger write.
    pub commit_block_s: f64,
    /// Endorsement requests allowed to wait; arrivals past this are dropped.
    pub queue_capacity: usize,
    /// Uniform relative noise on every service time, in [0, 1).
    pub service_jitter: f64,
    pub degradation: Degradation,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: LedgerMode::TrustChain,
            endorse_create_s: 0.009,
            endorse_trade_s: 0.006,
            broadcast_s: 0.005,
            batch_size: 50,
            batch_timeout_s: 2.0,
            validate_s: 0.020,
            contract_create_s: 0.004,
            contract_trade_s: 0.003,
            commit_block_s: 0.010,
            queue_capacity: 10_000,
            service_jitter: 0.1,
            degradation: Degradation::default(),
        }
    }
}

impl PipelineConfig {
    pub fn with_mode(mut self, mode: LedgerMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn endorse_cost(&self, kind: BenchTx) -> f64 {
        match kind {
            BenchTx::Create => self.endorse_create_s,
            BenchTx::Trade => self.endorse_trade_s,
        }
    }

    /// Validation cost of one tx before degradation.
    pub fn validate_cost(&self, kind: BenchTx) -> f64 {
        let contract = match (self.mode, kind) {
            (LedgerMode::Baseline, _) => 0.0,
            (LedgerMode::TrustChain, BenchTx::Create) => self.contract_create_s,
            (LedgerMode::TrustChain, BenchTx::Trade) => self.contract_trade_s,
        };
        self.validate_s + contract
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("endorse_create_s", self.endorse_create_s),
            ("endorse_trade_s", self.endorse_trade_s),
            ("batch_timeout_s", self.batch_timeout_s),
            ("validate_s", self.validate_s),
            ("degradation.threshold", self.degradation.threshold),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("broadcast_s", self.broadcast_s),
            ("contract_create_s", self.contract_create_s),
            ("contract_trade_s", self.contract_trade_s),
            ("commit_block_s", self.commit_block_s),
            ("degradation.slope", self.degradation.slope),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::InvalidConfig(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.batch_size == 0 || self.queue_capacity == 0 {
            return Err(SimError::InvalidConfig("batch_size and queue_capacity must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.service_jitter) {
            return Err(SimError::InvalidConfig("service_jitter must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// A send-rate sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchPlan {
    pub send_rates: Vec<f64>,
    pub duration_s: f64,
    pub runs: usize,
    pub tx_kind: BenchTx,
    pub seed: u64,
}

impl Default for BenchPlan {
    fn default() -> Self {
        BenchPlan {
            send_rates: (1..=10).map(|i| 10.0 * i as f64).collect(),
            duration_s: 100.0,
            runs: 10,
            tx_kind: BenchTx::Trade,
            seed: 0,
        }
    }
}

impl BenchPlan {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.send_rates.is_empty() {
            return Err(SimError::InvalidPlan("no send rates".into()));
        }
        if let Some(r) = self.send_rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(SimError::InvalidPlan(format!("send rate must be positive, got {r}")));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(SimError::InvalidPlan("duration must be positive".into()));
        }
        if self.runs == 0 {
            return Err(SimError::InvalidPlan("runs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Parses `start:end:step` (inclusive) or a comma list into send rates.
pub fn parse_rates(s: &str) -> Result<Vec<f64>, String> {
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("bad rate `{x}`: {e}"));
    let parts: Vec<&str> = s.split(':').collect();
    let rates = match parts.as_slice() {
        [a, b, c] => {
            let (a, b, c) = (num(a)?, num(b)?, num(c)?);
            if !(c > 0.0) || b < a {
                return Err(format!("bad range `{s}`"));
            }
            let n = ((b - a) / c + 1e-9).floor() as usize;
            (0..=n).map(|i| a + c * i as f64).collect()
        }
        [one] => one.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(format!("bad rate list `{s}` (use start:end:step or a,b,c)")),
    };
    if rates.is_empty() || rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(format!("rates must be positive: `{s}`"));
    }
    Ok(rates)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_ranges() {
        assert_eq!(parse_rates("10:100:10").unwrap().len(), 10);
        assert_eq!(parse_rates("10:30:10").unwrap(), vec![10.0, 20.0, 30.0]);
        assert_eq!(parse_rates("5,7.5").unwrap(), vec![5.0, 7.5]);
        assert!(parse_rates("10:5:1").is_err());
        assert!(parse_rates("0").is_err());
        assert!(parse_rates("1:2").is_err());
    }

    #[test]
    fn baseline_skips_contract_cost() {
        let c = PipelineConfig::default();
        assert!(c.validate_cost(BenchTx::Trade) > c.validate_s);
        let b = c.with_mode(LedgerMode::Baseline);
        assert_eq!(b.validate_cost(BenchTx::Trade), b.validate_s);
        assert_eq!(b.validate_cost(BenchTx::Create), b.validate_s);
    }

    #[test]
    fn config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        let bad = PipelineConfig { validate_s: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = PipelineConfig { batch_size: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(BenchPlan::default().validate().is_ok());
        assert!(BenchPlan { runs: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn degradation_kicks_in_past_threshold() {
        let d = Degradation { threshold: 100.0, slope: 1.0 };
        assert_eq!(d.factor(0), 1.0);
        assert_eq!(d.factor(100), 1.0);
        assert_eq!(d.factor(200), 2.0);
    }
}
