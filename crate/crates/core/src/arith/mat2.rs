use std::ops::{Add, Mul, Neg, Sub};

use super::field::{Field, Ring};
use crate::error::{Error, Result};

/// 2x2 matrix `[[a, b], [c, d]]` over a commutative ring.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Mat2<R> {
    pub a: R,
    pub b: R,
    pub c: R,
    pub d: R,
}

impl<R: Ring> Mat2<R> {
    pub fn new(a: R, b: R, c: R, d: R) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn diag(a: R, d: R) -> Self {
        Mat2 { a, b: R::zero(), c: R::zero(), d }
    }

    pub fn identity() -> Self {
        Self::diag(R::one(), R::one())
    }

    pub fn zero() -> Self {
        Self::diag(R::zero(), R::zero())
    }

    pub fn scalar(s: R) -> Self {
        Self::diag(s.clone(), s)
    }

    pub fn det(&self) -> R {
        self.a.clone() * self.d.clone() - self.b.clone() * self.c.clone()
    }

    pub fn trace(&self) -> R {
        self.a.clone() + self.d.clone()
    }

    pub fn scale(&self, s: &R) -> Self {
        self.map(|e| e.clone() * s.clone())
    }

    pub fn adjugate(&self) -> Self {
        Mat2 { a: self.d.clone(), b: -self.b.clone(), c: -self.c.clone(), d: self.a.clone() }
    }

    pub fn transpose(&self) -> Self {
        Mat2 { a: self.a.clone(), b: self.c.clone(), c: self.b.clone(), d: self.d.clone() }
    }

    /// `[self, o] = self o - o self`.
    pub fn commutator(&self, o: &Self) -> Self {
        self.clone() * o.clone() - o.clone() * self.clone()
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero() && self.c.is_zero() && self.d.is_zero()
    }

    pub fn is_diagonal(&self) -> bool {
        self.b.is_zero() && self.c.is_zero()
    }

    pub fn entries(&self) -> [&R; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    /// Entry `(i, j)` with 0-based indices.
    pub fn get(&self, i: usize, j: usize) -> &R {
        match (i, j) {
            (0, 0) => &self.a,
            (0, 1) => &self.b,
            (1, 0) => &self.c,
            _ => &self.d,
        }
    }

    pub fn map<S: Ring>(&self, f: impl Fn(&R) -> S) -> Mat2<S> {
        Mat2 { a: f(&self.a), b: f(&self.b), c: f(&self.c), d: f(&self.d) }
    }

    pub fn try_map<S: Ring>(&self, f: impl Fn(&R) -> Result<S>) -> Result<Mat2<S>> {
        Ok(Mat2 { a: f(&self.a)?, b: f(&self.b)?, c: f(&self.c)?, d: f(&self.d)? })
    }
}

impl<F: Field> Mat2<F> {
    /// Inverse via the adjugate.
    pub fn try_inv(&self) -> Result<Self> {
        let det = self.det();
        if det.is_zero() {
            return Err(Error::Singular);
        }
        let inv = det.try_inv()?;
        Ok(self.adjugate().scale(&inv))
    }

    pub fn try_div_scalar(&self, s: &F) -> Result<Self> {
        let inv = s.try_inv()?;
        Ok(self.scale(&inv))
    }

    /// Largest entry magnitude.
    pub fn max_norm(&self) -> f64 {
        self.entries().iter().map(|e| e.magnitude()).fold(0.0, f64::max)
    }
}

impl<R: Ring> Add for Mat2<R> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Mat2 { a: self.a + o.a, b: self.b + o.b, c: self.c + o.c, d: self.d + o.d }
    }
}

impl<R: Ring> Sub for Mat2<R> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Mat2 { a: self.a - o.a, b: self.b - o.b, c: self.c - o.c, d: self.d - o.d }
    }
}

impl<R: Ring> Neg for Mat2<R> {
    type Output = Self;
    fn neg(self) -> Self {
        Mat2 { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
    }
}

impl<R: Ring> Mul for Mat2<R> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Mat2 {
            a: self.a.clone() * o.a.clone() + self.b.clone() * o.c.clone(),
            b: self.a * o.b.clone() + self.b * o.d.clone(),
            c: self.c.clone() * o.a + self.d.clone() * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

/// Matrices over a commutative ring form a (noncommutative) ring; only the
/// operations in [`Ring`] are used generically.
impl<R: Ring> Ring for Mat2<R> {
    fn zero() -> Self {
        Mat2::zero()
    }
    fn one() -> Self {
        Mat2::identity()
    }
    fn is_zero(&self) -> bool {
        Mat2::is_zero(self)
    }
    fn from_i64(n: i64) -> Self {
        Mat2::scalar(R::from_i64(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::GaussRat;

    fn m(v: [i64; 4]) -> Mat2<GaussRat> {
        Mat2::new(GaussRat::int(v[0]), GaussRat::int(v[1]), GaussRat::int(v[2]), GaussRat::int(v[3]))
    }

    #[test]
    fn inverse_and_det() {
        let a = m([2, 1, 5, 3]);
        assert_eq!(a.clone() * a.try_inv().unwrap(), Mat2::identity());
        assert_eq!(m([1, 2, 2, 4]).try_inv(), Err(Error::Singular));
        let b = m([0, 1, -3, 7]);
        assert_eq!((a.clone() * b.clone()).det(), a.det() * b.det());
    }
}
