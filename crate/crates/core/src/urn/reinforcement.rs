use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::quadrature;
use crate::error::{Error, Result};
use crate::{Real, Scalar};

/// Law of a bounded reinforcement on `[low, high]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReinforcementKind<T> {
    PointMass { value: T },
    /// `high` with probability `p_high`, otherwise `low`.
    TwoPoint { low: T, high: T, p_high: T },
    Uniform { low: T, high: T },
    /// `low + (high - low) * X` with `X ~ Beta(alpha, beta)`.
    ScaledBeta { low: T, high: T, alpha: T, beta: T },
}

/// A reinforcement distribution together with its support and exact moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ReinforcementKind<T>", into = "ReinforcementKind<T>")]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct ReinforcementSpec<T> {
    kind: ReinforcementKind<T>,
    low: T,
    high: T,
    mean: T,
    variance: T,
}

fn positive<T: Scalar>(name: &'static str, x: T) -> Result<T> {
    crate::error::ensure_finite(name, x)?;
    if x > T::zero() {
        Ok(x)
    } else {
        Err(Error::param(name, "must be positive"))
    }
}

fn ordered<T: Scalar>(low: T, high: T) -> Result<(T, T)> {
    positive("low", low)?;
    crate::error::ensure_finite("high", high)?;
    if high < low {
        return Err(Error::param("high", "support must satisfy low <= high"));
    }
    Ok((low, high))
}

impl<T: Scalar> ReinforcementSpec<T> {
    pub fn new(kind: ReinforcementKind<T>) -> Result<Self> {
        let one = T::one();
        let two = one + one;
        match kind {
            ReinforcementKind::PointMass { value } => {
                positive("value", value)?;
                Ok(Self { kind, low: value, high: value, mean: value, variance: T::zero() })
            }
            ReinforcementKind::TwoPoint { low, high, p_high } => {
                let (low, high) = ordered(low, high)?;
                crate::error::ensure_finite("p_high", p_high)?;
                if p_high < T::zero() || p_high > one {
                    return Err(Error::param("p_high", "must lie in [0, 1]"));
                }
                let spread = high - low;
                let mean = low + p_high * spread;
                let variance = p_high * (one - p_high) * spread * spread;
                Ok(Self { kind, low, high, mean, variance })
            }
            ReinforcementKind::Uniform { low, high } => {
                let (low, high) = ordered(low, high)?;
                let spread = high - low;
                let twelve = two * two * (two + one);
                Ok(Self {
                    kind,
                    low,
                    high,
                    mean: (low + high) / two,
                    variance: spread * spread / twelve,
                })
            }
            ReinforcementKind::ScaledBeta { low, high, alpha, beta } => {
                let (low, high) = ordered(low, high)?;
                positive("alpha", alpha)?;
                positive("beta", beta)?;
                let spread = high - low;
                let total = alpha + beta;
                let mean = low + spread * alpha / total;
                let variance = spread * spread * alpha * beta / (total * total * (total + one));
                Ok(Self { kind, low, high, mean, variance })
            }
        }
    }

    pub fn point_mass(value: T) -> Result<Self> {
        Self::new(ReinforcementKind::PointMass { value })
    }

    pub fn two_point(low: T, high: T, p_high: T) -> Result<Self> {
        Self::new(ReinforcementKind::TwoPoint { low, high, p_high })
    }

    pub fn uniform(low: T, high: T) -> Result<Self> {
        Self::new(ReinforcementKind::Uniform { low, high })
    }

    pub fn scaled_beta(low: T, high: T, alpha: T, beta: T) -> Result<Self> {
        Self::new(ReinforcementKind::ScaledBeta { low, high, alpha, beta })
    }

    pub fn kind(&self) -> &ReinforcementKind<T> {
        &self.kind
    }

    /// Lower support bound `a`.
    pub fn low(&self) -> T {
        self.low
    }

    /// Upper support bound `b`.
    pub fn high(&self) -> T {
        self.high
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    pub fn variance(&self) -> T {
        self.variance
    }

    pub fn contains(&self, d: T) -> bool {
        d >= self.low && d <= self.high
    }

    /// Same law translated by `offset`; the support must stay positive.
    pub fn shifted(&self, offset: T) -> Result<Self> {
        let kind = match self.kind {
            ReinforcementKind::PointMass { value } => {
                ReinforcementKind::PointMass { value: value + offset }
            }
            ReinforcementKind::TwoPoint { low, high, p_high } => ReinforcementKind::TwoPoint {
                low: low + offset,
                high: high + offset,
                p_high,
            },
            ReinforcementKind::Uniform { low, high } => {
                ReinforcementKind::Uniform { low: low + offset, high: high + offset }
            }
            ReinforcementKind::ScaledBeta { low, high, alpha, beta } => {
                ReinforcementKind::ScaledBeta { low: low + offset, high: high + offset, alpha, beta }
            }
        };
        Self::new(kind)
    }
}

impl<T: Scalar> TryFrom<ReinforcementKind<T>> for ReinforcementSpec<T> {
    type Error = Error;

    fn try_from(kind: ReinforcementKind<T>) -> Result<Self> {
        Self::new(kind)
    }
}

impl<T> From<ReinforcementSpec<T>> for ReinforcementKind<T> {
    fn from(spec: ReinforcementSpec<T>) -> Self {
        spec.kind
    }
}

/// Relative tolerance used for the quadrature-backed expectations.
pub const EXPECTATION_RTOL: f64 = 1e-12;

impl<T: Real> ReinforcementSpec<T> {
    /// `E[D / (y + D)]` for a reinforcement `D` drawn from this law.
    pub fn expected_share(&self, y: T) -> T {
        let share = |d: T| d / (y + d);
        match self.kind {
            ReinforcementKind::PointMass { value } => share(value),
            ReinforcementKind::TwoPoint { low, high, p_high } => {
                (T::one() - p_high) * share(low) + p_high * share(high)
            }
            ReinforcementKind::Uniform { low, high } => {
                if high == low {
                    return share(low);
                }
                quadrature::adaptive_simpson(share, low, high, T::lit(EXPECTATION_RTOL))
                    / (high - low)
            }
            ReinforcementKind::ScaledBeta { low, high, alpha, beta } => {
                let spread = high - low;
                quadrature::beta_expectation(
                    |x| share(low + spread * x),
                    alpha,
                    beta,
                    T::lit(EXPECTATION_RTOL),
                )
            }
        }
    }

    pub fn sampler(&self) -> Sampler<T> {
        let inner = match self.kind {
            ReinforcementKind::PointMass { value } => SamplerKind::Constant(value),
            ReinforcementKind::TwoPoint { low, high, p_high } => {
                SamplerKind::TwoPoint { low, high, p_high: p_high.as_f64() }
            }
            ReinforcementKind::Uniform { low, high } => SamplerKind::Uniform { low, high },
            ReinforcementKind::ScaledBeta { low, high, alpha, beta } => SamplerKind::Beta {
                low,
                high,
                beta: Beta::new(alpha.as_f64(), beta.as_f64())
                    .expect("shape parameters validated at construction"),
            },
        };
        Sampler { inner }
    }
}

#[derive(Debug, Clone)]
enum SamplerKind<T> {
    Constant(T),
    TwoPoint { low: T, high: T, p_high: f64 },
    Uniform { low: T, high: T },
    Beta { low: T, high: T, beta: Beta<f64> },
}

/// Prepared sampler for one reinforcement law.
#[derive(Debug, Clone)]
pub struct Sampler<T> {
    inner: SamplerKind<T>,
}

impl<T: Real> Sampler<T> {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match &self.inner {
            SamplerKind::Constant(v) => *v,
            SamplerKind::TwoPoint { low, high, p_high } => {
                if rng.random::<f64>() < *p_high {
                    *high
                } else {
                    *low
                }
            }
            SamplerKind::Uniform { low, high } => {
                let u = T::lit(rng.random::<f64>());
                clamp(*low + (*high - *low) * u, *low, *high)
            }
            SamplerKind::Beta { low, high, beta } => {
                let x = T::lit(beta.sample(rng));
                clamp(*low + (*high - *low) * x, *low, *high)
            }
        }
    }
}

fn clamp<T: Real>(x: T, low: T, high: T) -> T {
    x.max(low).min(high)
}
