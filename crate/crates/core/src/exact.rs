//! Exact and floating accumulation.
//!
//! Theorem checks run over function indices with exact rational weights, so
//! identities can be asserted with `==`. Float mode exists for priors that
//! are not rational (Dirichlet draws) and uses compensated summation.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number. Every finite `f64` converts without rounding.
pub type Exact = BigRational;

/// Exact image of a finite float.
///
/// Panics on NaN or infinity; spaces reject non-finite values at
/// construction, so callers only hand over validated values.
pub fn exact_from_f64(v: f64) -> Exact {
    BigRational::from_float(v).expect("finite value")
}

pub fn exact_ratio(num: i64, den: i64) -> Exact {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn exact_int(v: usize) -> Exact {
    BigRational::from_integer(BigInt::from(v))
}

pub fn exact_to_f64(v: &Exact) -> f64 {
    ToPrimitive::to_f64(v).unwrap_or(f64::NAN)
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(items: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in items {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Probability-mass scalar: either exact rationals or `f64`.
pub trait Mass: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {
    const EXACT: bool;
    fn zero_mass() -> Self;
    fn unit_mass() -> Self;
    fn from_exact(v: &Exact) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn sum<I: IntoIterator<Item = Self>>(items: I) -> Self;
    fn to_f64(&self) -> f64;
    /// |self - other| as a float.
    fn deviation(&self, other: &Self) -> f64;
    fn is_negative(&self) -> bool;
}

impl Mass for Exact {
    const EXACT: bool = true;

    fn zero_mass() -> Self {
        Zero::zero()
    }

    fn unit_mass() -> Self {
        One::one()
    }

    fn from_exact(v: &Exact) -> Self {
        v.clone()
    }

    fn mul(&self, other: &Self) -> Self {
        self * other
    }

    fn sum<I: IntoIterator<Item = Self>>(items: I) -> Self {
        items.into_iter().fold(Zero::zero(), |acc: Exact, v| acc + v)
    }

    fn to_f64(&self) -> f64 {
        exact_to_f64(self)
    }

    fn deviation(&self, other: &Self) -> f64 {
        exact_to_f64(&(self - other).abs())
    }

    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
}

impl Mass for f64 {
    const EXACT: bool = false;

    fn zero_mass() -> Self {
        0.0
    }

    fn unit_mass() -> Self {
        1.0
    }

    fn from_exact(v: &Exact) -> Self {
        exact_to_f64(v)
    }

    fn mul(&self, other: &Self) -> Self {
        self * other
    }

    fn sum<I: IntoIterator<Item = Self>>(items: I) -> Self {
        compensated_sum(items)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn deviation(&self, other: &Self) -> f64 {
        (self - other).abs()
    }

    fn is_negative(&self) -> bool {
        *self < 0.0
    }
}
