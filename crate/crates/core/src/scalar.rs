//! Scalar abstraction shared by every numeric module.
//!
//! All geometry and grid code is written against [`Real`], which is
//! implemented for `f32` and `f64`. The accuracy targets quoted throughout the
//! crate (1e-10 residuals, 1e-12 special functions) assume `f64`; the `f32`
//! instantiation is supported for memory-bound grid work where a few digits
//! suffice.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for `T::lit`.
#[inline]
pub(crate) fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub(crate) fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// `x^p` with fast paths for the exponents used by the verification suites.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Power<T> {
    One,
    OneAndHalf,
    Two,
    Three,
    General(T),
}

impl<T: Real> Power<T> {
    pub(crate) fn new(p: T) -> Self {
        if p == T::one() {
            Power::One
        } else if p == lit(1.5) {
            Power::OneAndHalf
        } else if p == lit(2.0) {
            Power::Two
        } else if p == lit(3.0) {
            Power::Three
        } else {
            Power::General(p)
        }
    }

    /// Evaluates `x^p` for `x >= 0`.
    #[inline]
    pub(crate) fn eval(self, x: T) -> T {
        match self {
            Power::One => x,
            Power::OneAndHalf => x * x.sqrt(),
            Power::Two => x * x,
            Power::Three => x * x * x,
            Power::General(p) => x.powf(p),
        }
    }
}
