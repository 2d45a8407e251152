use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::urn::chernoff_lower_tail;

pub const REPLICATION_CAP: u64 = 1_000_000;

/// Smallest `R` with `sqrt(variance / R) <= margin / 4`.
pub fn plan_replications(target_margin: f64, pilot_variance: f64) -> Result<u64> {
    if !(target_margin > 0.0 && target_margin.is_finite()) {
        return Err(Error::param("target_margin", "must be positive"));
    }
    if !(pilot_variance >= 0.0 && pilot_variance.is_finite()) {
        return Err(Error::param("pilot_variance", "must be non-negative"));
    }
    let se_target = target_margin / 4.0;
    let meets = |r: u64| (pilot_variance / r as f64).sqrt() <= se_target * (1.0 + 1e-12);
    let guess = (pilot_variance / (se_target * se_target)).ceil();
    if guess > REPLICATION_CAP as f64 {
        return Err(Error::UnreachableMargin { margin: target_margin, cap: REPLICATION_CAP });
    }
    let mut r = (guess as u64).max(1);
    while r > 1 && meets(r - 1) {
        r -= 1;
    }
    while !meets(r) {
        r += 1;
    }
    if r > REPLICATION_CAP {
        return Err(Error::UnreachableMargin { margin: target_margin, cap: REPLICATION_CAP });
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorPlan {
    pub replications: u64,
    /// Chernoff bound on the chance the hit count falls `margin * R` below its mean.
    pub chernoff_tail: f64,
}

/// [`plan_replications`] for a Bernoulli(`p`) mean, with the Chernoff
/// lower-tail bound at the chosen `R` as a cross-check.
pub fn plan_indicator_replications(p: f64, margin: f64) -> Result<IndicatorPlan> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param("p", "must lie in (0, 1]"));
    }
    if !(margin > 0.0 && margin <= p) {
        return Err(Error::param("margin", "must lie in (0, p]"));
    }
    let replications = plan_replications(margin, p * (1.0 - p))?;
    let chernoff_tail = chernoff_lower_tail(1.0 - margin / p, replications as f64 * p)?;
    Ok(IndicatorPlan { replications, chernoff_tail })
}
