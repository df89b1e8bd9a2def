//! Truncated power series `sum c_k s^k`, `s = t - center`.
//!
//! A series knows its coefficients `c_0..=c_N` and carries the error term
//! `O(s^(N+1))`. Exact constants and polynomials use an unbounded order, so
//! arithmetic results have the minimum order of the operands.

use std::ops::{Add, Mul, Neg, Sub};

use super::field::{Field, Ring};
use crate::error::{Error, Result};

pub const EXACT_ORDER: usize = usize::MAX;

#[derive(Clone, PartialEq, Debug)]
pub struct SeriesT<F> {
    pub center: F,
    coeffs: Vec<F>,
    order: usize,
}

impl<F: Field> SeriesT<F> {
    /// Series with coefficients `c_0..=c_order`; extra coefficients are dropped.
    pub fn new(center: F, mut coeffs: Vec<F>, order: usize) -> Self {
        if order != EXACT_ORDER {
            coeffs.truncate(order.saturating_add(1));
        }
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        SeriesT { center, coeffs, order }
    }

    /// Exact polynomial in `s`.
    pub fn polynomial(center: F, coeffs: Vec<F>) -> Self {
        Self::new(center, coeffs, EXACT_ORDER)
    }

    pub fn constant(c: F) -> Self {
        Self::polynomial(F::zero(), vec![c])
    }

    /// The shift variable `s` around `center`, truncated at `order`.
    pub fn variable(center: F, order: usize) -> Self {
        Self::new(center, vec![F::zero(), F::one()], order)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeff(&self, k: usize) -> F {
        self.coeffs.get(k).cloned().unwrap_or_else(F::zero)
    }

    pub fn coeffs_to_order(&self) -> Vec<F> {
        let n = if self.order == EXACT_ORDER { self.coeffs.len() } else { self.order + 1 };
        (0..n).map(|k| self.coeff(k)).collect()
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::new(self.center.clone(), self.coeffs.clone(), order.min(self.order))
    }

    /// Evaluates the known part at offset `s`.
    pub fn eval_offset(&self, s: &F) -> F {
        let mut acc = F::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * s.clone() + c.clone();
        }
        acc
    }

    /// Termwise derivative in `s`; the order drops by one.
    pub fn derivative(&self) -> Self {
        let order = if self.order == EXACT_ORDER { EXACT_ORDER } else { self.order.saturating_sub(1) };
        let c = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.clone() * F::from_i64(k as i64))
            .collect();
        Self::new(self.center.clone(), c, order)
    }

    /// Antiderivative with zero constant term; the order grows by one.
    pub fn integrate(&self) -> Self {
        let order = if self.order == EXACT_ORDER { EXACT_ORDER } else { self.order + 1 };
        let mut c = vec![F::zero()];
        for (k, a) in self.coeffs.iter().enumerate() {
            c.push(a.clone() * F::from_ratio(1, k as i64 + 1));
        }
        Self::new(self.center.clone(), c, order)
    }

    fn merged_center(&self, o: &Self) -> F {
        if self.center.is_zero() {
            o.center.clone()
        } else {
            self.center.clone()
        }
    }
}

impl<F: Field> Add for SeriesT<F> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let order = self.order.min(o.order);
        let n = self.coeffs.len().max(o.coeffs.len());
        let c = (0..n).map(|k| self.coeff(k) + o.coeff(k)).collect();
        Self::new(self.merged_center(&o), c, order)
    }
}

impl<F: Field> Sub for SeriesT<F> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<F: Field> Neg for SeriesT<F> {
    type Output = Self;
    fn neg(self) -> Self {
        SeriesT { center: self.center, coeffs: self.coeffs.into_iter().map(|c| -c).collect(), order: self.order }
    }
}

impl<F: Field> Mul for SeriesT<F> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let order = self.order.min(o.order);
        if self.coeffs.is_empty() || o.coeffs.is_empty() {
            return Self::new(self.merged_center(&o), Vec::new(), order);
        }
        let full = self.coeffs.len() + o.coeffs.len() - 1;
        let n = if order == EXACT_ORDER { full } else { full.min(order + 1) };
        let mut c = vec![F::zero(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if i >= n {
                break;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if i + j >= n {
                    break;
                }
                c[i + j] = c[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self::new(self.merged_center(&o), c, order)
    }
}

impl<F: Field> Ring for SeriesT<F> {
    fn zero() -> Self {
        Self::polynomial(F::zero(), Vec::new())
    }
    fn one() -> Self {
        Self::constant(F::one())
    }
    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
    fn from_i64(n: i64) -> Self {
        Self::constant(F::from_i64(n))
    }
}

impl<F: Field> Field for SeriesT<F> {
    const EXACT: bool = F::EXACT;

    /// Inverse of a unit; exact polynomials become series truncated at the
    /// largest order in use, which callers set through [`SeriesT::truncate`].
    fn try_inv(&self) -> Result<Self> {
        let c0 = self.coeff(0);
        if c0.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.coeffs.len() == 1 {
            return Ok(Self::new(self.center.clone(), vec![c0.try_inv()?], self.order));
        }
        if self.order == EXACT_ORDER {
            return Err(Error::Precondition("inverse of an untruncated nonconstant series".into()));
        }
        let inv0 = c0.try_inv()?;
        let n = self.order + 1;
        let mut out: Vec<F> = Vec::with_capacity(n);
        out.push(inv0.clone());
        for k in 1..n {
            let mut acc = F::zero();
            for j in 1..=k {
                acc = acc + self.coeff(j) * out[k - j].clone();
            }
            out.push(-(acc * inv0.clone()));
        }
        Ok(Self::new(self.center.clone(), out, self.order))
    }

    fn from_ratio(n: i64, d: i64) -> Self {
        Self::constant(F::from_ratio(n, d))
    }

    fn magnitude(&self) -> f64 {
        self.coeff(0).magnitude()
    }
}
