//! Floating-point abstraction used by every numeric routine in this crate.

use core::fmt::{Debug, Display};
use core::iter::Sum;
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Scalar type for all vector, matrix, and dynamical computations.
///
/// Implemented for `f32` and `f64`. The crate-root type aliases fix `f64`,
/// which is what the command-line tools and the documented tolerances assume;
/// `f32` is available for callers who trade precision for footprint and
/// supply their own tolerances.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` constant (tolerance, default, literal) into `Self`.
    #[inline]
    fn real(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant must be representable")
    }

    /// Lossy view of `self` as `f64`, for reports and serialization.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar must convert to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Maximum absolute value over a slice; zero for an empty slice.
pub fn inf_norm<S: Scalar>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |acc, &x| acc.max(x.abs()))
}

/// Euclidean norm of a slice.
pub fn two_norm<S: Scalar>(v: &[S]) -> S {
    v.iter().map(|&x| x * x).sum::<S>().sqrt()
}

/// Dot product of two equal-length slices.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
