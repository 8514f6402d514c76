//! Floating-point abstraction shared by the channel, divergence and LP code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the information-theoretic primitives are generic over.
///
/// Implemented for every `Float` type (in practice `f32` and `f64`).
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a count into this scalar.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    /// Tolerance on row sums of stochastic vectors.
    ///
    /// `1e-12` for `f64`; widened to a few ulps-times-length for narrower types.
    #[inline]
    fn stochastic_tol() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(32.0))
    }

    /// Entries at or below this magnitude count as structural zeros.
    #[inline]
    fn zero_floor() -> Self {
        // 1e-300 underflows to 0 in f32, which is the intended floor there.
        Self::lit(1e-300)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

/// `x log2 x` with the `0 log 0 = 0` convention.
#[inline]
pub(crate) fn xlog2x<T: Scalar>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else {
        x * x.log2()
    }
}

/// Shannon entropy in bits of a (not necessarily normalized) nonnegative vector.
pub fn entropy_bits<T: Scalar>(p: &[T]) -> T {
    p.iter().fold(T::zero(), |acc, &x| acc - xlog2x(x))
}

/// Binary entropy function in bits.
pub fn binary_entropy<T: Scalar>(p: T) -> T {
    entropy_bits(&[p, T::one() - p])
}
