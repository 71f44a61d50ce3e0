//! Floating-point scalar abstraction shared by every numeric routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar the game and metric routines are generic over.
///
/// Implemented for `f32` and `f64`. Tolerances that depend on the precision of
/// the underlying type (simplex sums, pivots) are exposed as associated
/// constants so generic code can stay honest about them.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Allowed deviation of a probability vector's sum from one.
    const SIMPLEX_TOL: f64;
    /// Pivot magnitude below which a linear system is treated as singular.
    const PIVOT_TOL: f64;

    /// Converts an `f64` literal. Panics only for non-representable values,
    /// which never happens for the finite literals used in this crate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits in float")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Scalar for f64 {
    const SIMPLEX_TOL: f64 = 1e-9;
    const PIVOT_TOL: f64 = 1e-12;
}

impl Scalar for f32 {
    const SIMPLEX_TOL: f64 = 1e-5;
    const PIVOT_TOL: f64 = 1e-6;
}

/// Dot product of two equal-length slices.
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn l2_norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
