//! Threshold policies producing the random pair `(rho1_hat, rho2_hat)`.
//!
//! Policies are immutable descriptions; per-replication state (running
//! estimates, order-violation count) lives in [`ThresholdTracker`].

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::urn::{Color, ModelKind, ReinforcementSpec};
use crate::{Real, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceMode {
    AlmostSure,
    InProbabilityOnly,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicyKind<T> {
    Fixed,
    /// `rho1_hat = clamp(offset + slope * m1_hat / (m1_hat + m2_hat))`,
    /// `rho2_hat = clamp(rho1_hat - gap)`, clamped to `[rho_min, rho_max]`.
    AdaptiveMeanMap { offset: T, slope: T, gap: T },
    /// Limits shifted by `+-scale * n^(-1/4)` with probability `n^(-1/2)`.
    NoisyConvergent { scale: T },
    /// Leaves `[rho_min, rho_max]` with probability `exp(-c_rho n)`.
    AdversarialExcursion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy<T> {
    pub kind: PolicyKind<T>,
    pub rho1_limit: T,
    pub rho2_limit: T,
    pub rho_min: T,
    pub rho_max: T,
    pub c_rho: T,
    pub convergence_mode: ConvergenceMode,
}

/// Default coefficients of the adaptive mean map.
pub const DEFAULT_MAP: (f64, f64, f64) = (0.3, 0.4, 0.2);
pub const DEFAULT_RHO_RANGE: (f64, f64) = (0.05, 0.95);

fn unit<T: Scalar>(name: &'static str, x: T) -> Result<T> {
    ensure_finite(name, x)?;
    if x < T::zero() || x > T::one() {
        return Err(Error::param(name, "must lie in [0, 1]"));
    }
    Ok(x)
}

impl<T: Scalar> ThresholdPolicy<T> {
    pub fn fixed(rho1: T, rho2: T) -> Result<Self> {
        let p = Self {
            kind: PolicyKind::Fixed,
            rho1_limit: rho1,
            rho2_limit: rho2,
            rho_min: rho2,
            rho_max: rho1,
            c_rho: T::one(),
            convergence_mode: ConvergenceMode::AlmostSure,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn noisy_convergent(rho1: T, rho2: T, scale: T, rho_min: T, rho_max: T) -> Result<Self> {
        let p = Self {
            kind: PolicyKind::NoisyConvergent { scale },
            rho1_limit: rho1,
            rho2_limit: rho2,
            rho_min,
            rho_max,
            c_rho: T::one(),
            convergence_mode: ConvergenceMode::InProbabilityOnly,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn adversarial_excursion(rho1: T, rho2: T, rho_min: T, rho_max: T, c_rho: T) -> Result<Self> {
        let p = Self {
            kind: PolicyKind::AdversarialExcursion,
            rho1_limit: rho1,
            rho2_limit: rho2,
            rho_min,
            rho_max,
            c_rho,
            convergence_mode: ConvergenceMode::AlmostSure,
        };
        p.validate()?;
        Ok(p)
    }

    /// Whether the policy claims `rho_min <= rho2_hat <= rho1_hat <= rho_max`
    /// with probability tending to one exponentially fast.
    pub fn claims_bounded_range(&self) -> bool {
        !matches!(self.kind, PolicyKind::Fixed)
            || (self.rho_min > T::zero() && self.rho_max < T::one())
    }

    pub fn validate(&self) -> Result<()> {
        unit("rho1_limit", self.rho1_limit)?;
        unit("rho2_limit", self.rho2_limit)?;
        unit("rho_min", self.rho_min)?;
        unit("rho_max", self.rho_max)?;
        if self.rho2_limit > self.rho1_limit {
            return Err(Error::param("rho2_limit", "limits need rho2 <= rho1"));
        }
        if !matches!(self.kind, PolicyKind::Fixed) {
            let ok = T::zero() < self.rho_min
                && self.rho_min <= self.rho2_limit
                && self.rho1_limit <= self.rho_max
                && self.rho_max < T::one();
            if !ok {
                return Err(Error::param(
                    "rho_range",
                    "need 0 < rho_min <= rho2 <= rho1 <= rho_max < 1",
                ));
            }
        }
        ensure_finite("c_rho", self.c_rho)?;
        if !(self.c_rho > T::zero()) {
            return Err(Error::param("c_rho", "must be positive"));
        }
        match self.kind {
            PolicyKind::AdaptiveMeanMap { offset, slope, gap } => {
                ensure_finite("offset", offset)?;
                ensure_finite("slope", slope)?;
                ensure_finite("gap", gap)?;
                if gap < T::zero() {
                    return Err(Error::param("gap", "must be non-negative"));
                }
            }
            PolicyKind::NoisyConvergent { scale } => {
                ensure_finite("scale", scale)?;
                if scale < T::zero() {
                    return Err(Error::param("scale", "must be non-negative"));
                }
            }
            PolicyKind::Fixed | PolicyKind::AdversarialExcursion => {}
        }
        Ok(())
    }
}

fn clamp<T: Scalar>(x: T, lo: T, hi: T) -> T {
    if x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}

/// Evaluate the adaptive map at a pair of mean estimates.
pub fn mean_map<T: Scalar>(
    offset: T,
    slope: T,
    gap: T,
    rho_min: T,
    rho_max: T,
    m1: T,
    m2: T,
) -> (T, T) {
    let rho1 = clamp(offset + slope * m1 / (m1 + m2), rho_min, rho_max);
    let rho2 = clamp(rho1 - gap, rho_min, rho_max);
    (rho1, rho2)
}

impl<T: Scalar> ThresholdPolicy<T> {
    /// Adaptive map whose declared limits are the map evaluated at the true means.
    #[allow(clippy::too_many_arguments)]
    pub fn adaptive_mean_map(
        offset: T,
        slope: T,
        gap: T,
        rho_min: T,
        rho_max: T,
        m1: T,
        m2: T,
    ) -> Result<Self> {
        let (rho1, rho2) = mean_map(offset, slope, gap, rho_min, rho_max, m1, m2);
        let p = Self {
            kind: PolicyKind::AdaptiveMeanMap { offset, slope, gap },
            rho1_limit: rho1,
            rho2_limit: rho2,
            rho_min,
            rho_max,
            c_rho: T::one(),
            convergence_mode: ConvergenceMode::AlmostSure,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same policy with declared limits re-derived for new reinforcement means.
    pub fn rebased(&self, m1: T, m2: T) -> Result<Self> {
        match self.kind {
            PolicyKind::AdaptiveMeanMap { offset, slope, gap } => Self::adaptive_mean_map(
                offset,
                slope,
                gap,
                self.rho_min,
                self.rho_max,
                m1,
                m2,
            ),
            _ => Ok(self.clone()),
        }
    }
}

/// Running per-color means of the reinforcements actually applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveEstimates<T> {
    pub m1_hat: T,
    pub m2_hat: T,
    pub count1: u64,
    pub count2: u64,
}

impl<T: Scalar> AdaptiveEstimates<T> {
    /// Estimates start at the given priors with zero observations.
    pub fn new(prior1: T, prior2: T) -> Self {
        Self { m1_hat: prior1, m2_hat: prior2, count1: 0, count2: 0 }
    }
}

/// Fold one step into the estimates. `observed` is `Some` exactly when the
/// drawn color was reinforced; `support` is that color's law.
pub fn update_estimates<T: Scalar + num_traits::FromPrimitive>(
    est: &AdaptiveEstimates<T>,
    drawn: Color,
    observed: Option<T>,
    support: &ReinforcementSpec<T>,
) -> Result<AdaptiveEstimates<T>> {
    let Some(d) = observed else {
        return Ok(*est);
    };
    if !support.contains(d) {
        let f = |x: T| x.approx_f64();
        return Err(Error::ReinforcementOutOfSupport {
            value: f(d),
            low: f(support.low()),
            high: f(support.high()),
        });
    }
    let mut next = *est;
    let (mean, count) = match drawn {
        Color::Red => (&mut next.m1_hat, &mut next.count1),
        Color::White => (&mut next.m2_hat, &mut next.count2),
    };
    *count += 1;
    let k = T::from_u64(*count).ok_or(Error::NonFinite("count"))?;
    *mean = *mean + (d - *mean) / k;
    Ok(next)
}

/// One emitted threshold pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emission<T> {
    pub rho1: T,
    pub rho2: T,
    /// The raw pair had `rho2 > rho1` and was clamped to `rho2 = rho1`.
    pub clamped: bool,
}

/// Thresholds in force at step `n`, from the history summary `est` and the
/// auxiliary uniform `aux_u`.
pub fn emit<T: Real>(
    policy: &ThresholdPolicy<T>,
    est: &AdaptiveEstimates<T>,
    n: u64,
    aux_u: T,
) -> Emission<T> {
    let (rho1, rho2) = match policy.kind {
        PolicyKind::Fixed => (policy.rho1_limit, policy.rho2_limit),
        PolicyKind::AdaptiveMeanMap { offset, slope, gap } => mean_map(
            offset,
            slope,
            gap,
            policy.rho_min,
            policy.rho_max,
            est.m1_hat,
            est.m2_hat,
        ),
        PolicyKind::NoisyConvergent { scale } => {
            let n = T::lit(n.max(1) as f64);
            let p = n.powf(T::lit(-0.5)).min(T::one());
            let mut shift = T::zero();
            if aux_u < p {
                let size = scale * n.powf(T::lit(-0.25));
                shift = if aux_u < p / T::lit(2.0) { size } else { -size };
            }
            let bound = |x: T| x.max(T::zero()).min(T::one());
            (bound(policy.rho1_limit + shift), bound(policy.rho2_limit + shift))
        }
        PolicyKind::AdversarialExcursion => {
            let p = (-policy.c_rho * T::lit(n as f64)).exp();
            if aux_u < p {
                let two = T::lit(2.0);
                ((T::one() + policy.rho_max) / two, policy.rho_min / two)
            } else {
                (policy.rho1_limit, policy.rho2_limit)
            }
        }
    };
    if rho2 > rho1 {
        Emission { rho1, rho2: rho1, clamped: true }
    } else {
        Emission { rho1, rho2, clamped: false }
    }
}

/// Per-replication threshold state for any model kind.
#[derive(Debug, Clone)]
pub struct ThresholdTracker<T> {
    model: ModelKind<T>,
    estimates: AdaptiveEstimates<T>,
    order_violations: u64,
}

impl<T: Real> ThresholdTracker<T> {
    /// Estimates start at the support midpoints.
    pub fn new(model: &ModelKind<T>, r1: &ReinforcementSpec<T>, r2: &ReinforcementSpec<T>) -> Self {
        let two = T::lit(2.0);
        Self {
            model: model.clone(),
            estimates: AdaptiveEstimates::new(
                (r1.low() + r1.high()) / two,
                (r2.low() + r2.high()) / two,
            ),
            order_violations: 0,
        }
    }

    pub fn emit(&mut self, n: u64, aux_u: T) -> (T, T) {
        match &self.model {
            ModelKind::Rru => (T::one(), T::zero()),
            ModelKind::Mrru { rho1, rho2 } => (*rho1, *rho2),
            ModelKind::Arru { policy } => {
                let e = emit(policy, &self.estimates, n, aux_u);
                if e.clamped {
                    self.order_violations += 1;
                }
                (e.rho1, e.rho2)
            }
        }
    }

    pub fn observe(
        &mut self,
        drawn: Color,
        observed: Option<T>,
        support: &ReinforcementSpec<T>,
    ) -> Result<()> {
        if matches!(self.model, ModelKind::Arru { .. }) {
            self.estimates = update_estimates(&self.estimates, drawn, observed, support)?;
        }
        Ok(())
    }

    pub fn estimates(&self) -> &AdaptiveEstimates<T> {
        &self.estimates
    }

    pub fn order_violations(&self) -> u64 {
        self.order_violations
    }
}
