use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Commutative ring with unit, by-value operators.
pub trait Ring:
    Clone
    + PartialEq
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_i64(n: i64) -> Self;

    fn is_one(&self) -> bool {
        *self == Self::one()
    }

    fn sq(&self) -> Self {
        self.clone() * self.clone()
    }

    fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.sq();
            }
        }
        acc
    }
}

/// A ring in which nonzero elements are invertible.
///
/// Formula code throughout the crate is generic over this trait, so the same
/// expression runs over exact Gaussian rationals, floating complex numbers,
/// rational functions of `q` and truncated power series.
pub trait Field: Ring {
    /// Whether equality is decided exactly.
    const EXACT: bool;

    fn try_inv(&self) -> Result<Self>;

    fn from_ratio(n: i64, d: i64) -> Self;

    /// Size hint used for pivoting and tolerance checks.
    fn magnitude(&self) -> f64;

    /// Growth measure checked against degree caps; zero for plain scalars.
    fn complexity(&self) -> usize {
        0
    }

    fn try_div(&self, other: &Self) -> Result<Self> {
        Ok(self.clone() * other.try_inv()?)
    }

    /// Zero test used by elimination routines; inexact types compare against a scale.
    fn negligible(&self, scale: f64) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.magnitude() <= 1e-13 * scale.max(1e-300)
        }
    }
}

/// Quotient `a / b` with a descriptive error when `b` vanishes.
pub fn div_or<F: Field>(a: F, b: &F, what: impl FnOnce() -> Error) -> Result<F> {
    if b.is_zero() {
        return Err(what());
    }
    Ok(a * b.try_inv()?)
}

impl Ring for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn from_i64(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }
}

impl Field for Complex64 {
    const EXACT: bool = false;

    fn try_inv(&self) -> Result<Self> {
        if Ring::is_zero(self) || !self.norm().is_finite() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.inv())
    }
    fn from_ratio(n: i64, d: i64) -> Self {
        Complex64::new(n as f64 / d as f64, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}
