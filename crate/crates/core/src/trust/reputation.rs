use super::TrustError;
use crate::ledger::Tick;

/// Forgetting factor for an event of the given age.
pub fn forgetting_factor(age: Tick, lambda: f64) -> f64 {
    (-lambda * age as f64).exp()
}

/// Time-decayed overall reputation at `t_n`: every per-trade reputation is
/// weighted by `e^(-lambda * (t_n - t))`. Events after `t_n` are not yet
/// visible and are skipped.
pub fn overall_reputation<I>(events: I, t_n: Tick, lambda: f64) -> f64
where
    I: IntoIterator<Item = (Tick, f64)>,
{
    events
        .into_iter()
        .filter(|(t, _)| *t <= t_n)
        .map(|(t, rep)| rep * forgetting_factor(t_n - t, lambda))
        .sum()
}

/// Linear trust score: `alpha[0] * reputation + sum(alpha[i] * features[i-1])`.
pub fn trust_score(reputation: f64, features: &[f64], alpha: &[f64]) -> Result<f64, TrustError> {
    if alpha.len() != features.len() + 1 {
        return Err(TrustError::DimensionMismatch {
            alphas: alpha.len(),
            features: features.len(),
        });
    }
    Ok(alpha[0] * reputation + alpha[1..].iter().zip(features).map(|(a, f)| a * f).sum::<f64>())
}
