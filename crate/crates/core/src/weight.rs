//! Scalar weight arithmetic for measures.
//!
//! Measure algebra in this crate is generic over [`Weight`] so the same
//! construction can run either in fast `f64` arithmetic or in exact rational
//! arithmetic, where algebraic identities are expected to hold with zero
//! deviation. Since every finite `f64` is a rational number, lifting an
//! `f64`-weighted model into the rational implementation loses nothing.

use core::ops::{Add, Div, Mul, Sub};

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Scalar type used for measure weights.
///
/// Implementors form an ordered field containing the dyadic rationals;
/// [`Weight::from_f64`] must embed every finite `f64` exactly.
pub trait Weight:
    Clone
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    /// `true` when arithmetic carries no rounding error at all.
    const EXACT: bool;

    /// Additive identity.
    fn zero() -> Self;

    /// Multiplicative identity.
    fn one() -> Self;

    /// Exact embedding of a finite `f64`.
    ///
    /// # Panics
    ///
    /// Panics if `x` is NaN or infinite.
    fn from_f64(x: f64) -> Self;

    /// Nearest-`f64` view of the weight, used for reporting.
    fn to_f64(&self) -> f64;

    /// Absolute value.
    fn abs(&self) -> Self;

    /// `true` for the additive identity.
    fn is_zero(&self) -> bool;

    /// Magnitudes strictly below this threshold are treated as accumulated
    /// round-off and clipped to zero where measure operations subtract
    /// nearly equal masses. Exact implementations return zero, so nothing
    /// but true zeros is ever clipped.
    fn dust_threshold() -> Self;
}

impl Weight for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "weight must be finite, got {x}");
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }

    fn dust_threshold() -> Self {
        1e-12
    }
}

impl Weight for BigRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }

    fn one() -> Self {
        num_traits::One::one()
    }

    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("weight must be finite")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn dust_threshold() -> Self {
        Zero::zero()
    }
}
