//! Scalar abstraction for the analytic layer.
//!
//! Counting is exact integer arithmetic throughout the crate; everything that
//! lives in the real numbers (grid functions, spectra, counting forms, box
//! norms, regularity decompositions) is generic over a floating-point scalar.
//! `f64` is the default used by the type aliases at the crate root; `f32`
//! works for exploratory runs at correspondingly looser tolerances.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Lossless-enough conversion for desk-scale counts (q <= 2048, counts < 2^53).
#[inline]
pub fn real_from_u64<R: Real>(n: u64) -> R {
    R::from_u64(n).expect("count representable in scalar type")
}

#[inline]
pub fn real_from_usize<R: Real>(n: usize) -> R {
    R::from_usize(n).expect("count representable in scalar type")
}

#[inline]
pub fn real_from_f64<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("f64 constant representable in scalar type")
}

#[inline]
pub fn real_to_f64<R: Real>(x: R) -> f64 {
    x.to_f64().expect("scalar convertible to f64")
}
