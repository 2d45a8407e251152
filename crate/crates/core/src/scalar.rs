//! Scalar abstractions.
//!
//! The urn update rule only needs field arithmetic and an order, so it is
//! written against [`Scalar`] and runs unchanged on `f32`, `f64` and exact
//! rationals. Anything that samples, integrates or takes logarithms needs
//! [`Real`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{Float, FloatConst, FromPrimitive, Num};

/// Ordered field element usable as an urn mass.
pub trait Scalar: Copy + PartialOrd + Num + Debug + Send + Sync + 'static {
    /// `false` for NaN and infinities; always `true` for exact types.
    fn is_finite_scalar(&self) -> bool;

    /// Nearest `f64`, for diagnostics and error payloads.
    fn approx_f64(&self) -> f64;
}

impl Scalar for f32 {
    fn is_finite_scalar(&self) -> bool {
        self.is_finite()
    }

    fn approx_f64(&self) -> f64 {
        f64::from(*self)
    }
}

impl Scalar for f64 {
    fn is_finite_scalar(&self) -> bool {
        self.is_finite()
    }

    fn approx_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for Ratio<i64> {
    fn is_finite_scalar(&self) -> bool {
        true
    }

    fn approx_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

impl Scalar for Ratio<i128> {
    fn is_finite_scalar(&self) -> bool {
        true
    }

    fn approx_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

/// Floating point scalar for sampling and numerics.
pub trait Real: Scalar + Float + FloatConst + FromPrimitive + Display + Sum + Default {
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal fits every Real")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
