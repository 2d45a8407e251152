//! Two-color urn dynamics under the RRU, MRRU and ARRU replacement rules.

mod bounds;
pub(crate) mod quadrature;
mod reinforcement;

pub use bounds::{
    chernoff_lower_tail, clt_variances, conditional_drift, s_delta_window, step_bound_guard,
    CltVariances, SDeltaWindow,
};
pub use reinforcement::{ReinforcementKind, ReinforcementSpec, Sampler, EXPECTATION_RTOL};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::thresholds::ThresholdPolicy;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    White,
}

/// Urn configuration after `n` draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UrnState<T> {
    pub n: u64,
    pub y1: T,
    pub y2: T,
    pub y: T,
    pub z: T,
    pub n1: u64,
    pub n2: u64,
    /// Indicators in force for the draw that produced this state.
    pub last_w1: bool,
    pub last_w2: bool,
}

impl<T: Scalar> UrnState<T> {
    pub fn new(y1_0: T, y2_0: T) -> Result<Self> {
        ensure_finite("y1_0", y1_0)?;
        ensure_finite("y2_0", y2_0)?;
        if !(y1_0 > T::zero()) {
            return Err(Error::param("y1_0", "initial red mass must be positive"));
        }
        if !(y2_0 > T::zero()) {
            return Err(Error::param("y2_0", "initial white mass must be positive"));
        }
        let y = ensure_finite("y_0", y1_0 + y2_0)?;
        Ok(Self {
            n: 0,
            y1: y1_0,
            y2: y2_0,
            y,
            z: y1_0 / y,
            n1: 0,
            n2: 0,
            last_w1: true,
            last_w2: true,
        })
    }
}

/// One draw with reinforcement.
///
/// Red is drawn iff `u <= z`; the drawn color gains `d * w` mass. The
/// proportion is recomputed from the masses rather than updated in place.
pub fn step<T: Scalar>(
    state: &UrnState<T>,
    w1: bool,
    w2: bool,
    u: T,
    d1: T,
    d2: T,
) -> Result<UrnState<T>> {
    ensure_finite("u", u)?;
    ensure_finite("d1", d1)?;
    ensure_finite("d2", d2)?;
    if !w1 && !w2 {
        return Err(Error::FrozenUrn);
    }
    let mut next = *state;
    if u <= state.z {
        if w1 {
            next.y1 = state.y1 + d1;
        }
        next.n1 += 1;
    } else {
        if w2 {
            next.y2 = state.y2 + d2;
        }
        next.n2 += 1;
    }
    next.n += 1;
    next.y = next.y1 + next.y2;
    next.z = next.y1 / next.y;
    next.last_w1 = w1;
    next.last_w2 = w2;
    Ok(next)
}

/// Color of the ball drawn with uniform `u` from an urn at proportion `z`.
#[inline]
pub fn drawn_color<T: Scalar>(z: T, u: T) -> Color {
    if u <= z {
        Color::Red
    } else {
        Color::White
    }
}

/// Reinforcement indicators `(1{z <= rho1_hat}, 1{z >= rho2_hat})`.
pub fn indicators<T: Scalar>(z: T, rho1_hat: T, rho2_hat: T) -> Result<(bool, bool)> {
    if rho2_hat > rho1_hat {
        return Err(Error::ThresholdOrder {
            rho1: rho1_hat.approx_f64(),
            rho2: rho2_hat.approx_f64(),
        });
    }
    Ok((z <= rho1_hat, z >= rho2_hat))
}

/// Replacement rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub enum ModelKind<T> {
    /// Both indicators always one.
    Rru,
    /// Fixed thresholds `0 < rho2 <= rho1 < 1`.
    Mrru { rho1: T, rho2: T },
    /// Random thresholds from a policy.
    Arru { policy: ThresholdPolicy<T> },
}

impl<T: Scalar> ModelKind<T> {
    pub fn mrru(rho1: T, rho2: T) -> Result<Self> {
        ensure_finite("rho1", rho1)?;
        ensure_finite("rho2", rho2)?;
        if !(T::zero() < rho2 && rho2 <= rho1 && rho1 < T::one()) {
            return Err(Error::param("rho", "MRRU needs 0 < rho2 <= rho1 < 1"));
        }
        Ok(ModelKind::Mrru { rho1, rho2 })
    }

    /// Target limits `(rho1, rho2)`; the RRU never binds, so `(1, 0)`.
    pub fn limits(&self) -> (T, T) {
        match self {
            ModelKind::Rru => (T::one(), T::zero()),
            ModelKind::Mrru { rho1, rho2 } => (*rho1, *rho2),
            ModelKind::Arru { policy } => (policy.rho1_limit, policy.rho2_limit),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelKind::Rru => Ok(()),
            ModelKind::Mrru { rho1, rho2 } => Self::mrru(*rho1, *rho2).map(|_| ()),
            ModelKind::Arru { policy } => policy.validate(),
        }
    }
}
