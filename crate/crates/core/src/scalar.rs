//! Scalar abstraction shared by every solver in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
///
/// Tolerances throughout the crate are written as `f64` literals and pass
/// through [`Real::tol`], which never returns less than a small multiple of
/// machine epsilon, so the same code runs (with looser guarantees) in `f32`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn tol(x: f64) -> Self {
        Self::lit(x).max(Self::epsilon() * Self::lit(64.0))
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn sum<S: Real>(xs: impl IntoIterator<Item = S>) -> S {
    xs.into_iter().fold(S::zero(), |a, b| a + b)
}

pub(crate) fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn max_abs<S: Real>(xs: impl IntoIterator<Item = S>) -> S {
    xs.into_iter().fold(S::zero(), |m, x| m.max(x.abs()))
}
