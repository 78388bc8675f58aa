//! Coefficient ring abstraction: exact rationals by default, `f64` fallback.

use num_rational::BigRational;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};
use std::fmt::Debug;

/// Exact rational scalar. Every finite `f64` converts into it losslessly,
/// so float-specified inputs can still be checked coefficient-exactly.
pub type Rational = BigRational;

/// Scalars usable as polynomial/form coefficients.
///
/// Implemented for [`Rational`] (exact mode) and `f64` (float mode). The
/// operations are by-reference because rational coefficients are heap
/// allocated.
pub trait Coeff: Clone + PartialEq + Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn div(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn from_int(v: i64) -> Self;
    /// Lossless for rationals (every finite `f64` is rational).
    ///
    /// Panics on non-finite input; callers validate floats at the boundary.
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
}

impl Coeff for Rational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as One>::one()
    }
    fn is_zero(&self) -> bool {
        <BigRational as Zero>::is_zero(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn from_int(v: i64) -> Self {
        <BigRational as FromPrimitive>::from_i64(v).expect("i64 is always rational")
    }
    fn from_f64(v: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(v)
            .unwrap_or_else(|| panic!("cannot convert non-finite {v} to a rational"))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            // Fall back to a quotient of approximations for huge operands.
            let n = self.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }
}

impl Coeff for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn from_int(v: i64) -> Self {
        v as f64
    }
    fn from_f64(v: f64) -> Self {
        assert!(v.is_finite(), "cannot use non-finite {v} as a coefficient");
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

/// Magnitude of a coefficient as an `f64`, used for residual reporting.
pub fn coeff_abs<C: Coeff>(c: &C) -> f64 {
    c.to_f64().abs()
}
