//! Reduced rational functions of one variable `q` over Q(i).

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::field::{Field, Ring};
use super::gauss::GaussRat;
use super::poly::Poly;
use crate::error::{Error, Result};

pub type PolyQ = Poly<GaussRat>;

/// Default bound on `max(deg num, deg den)` enforced by iteration drivers.
pub const DEFAULT_DEGREE_CAP: usize = 4096;

/// `num / den` with `gcd(num, den) = 1`, `den` monic, and zero stored as `0/1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatFunQ {
    num: PolyQ,
    den: PolyQ,
}

impl RatFunQ {
    /// Reduces `num / den` to canonical form.
    pub fn reduce(num: PolyQ, den: PolyQ) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        if num.is_zero() {
            return Ok(Self::zero());
        }
        let g = num.gcd(&den)?;
        let (num, den) = if g.is_constant() {
            (num, den)
        } else {
            (num.exact_div(&g)?, den.exact_div(&g)?)
        };
        Self::normalize_coprime(num, den)
    }

    /// Makes the denominator monic; assumes `num` and `den` are coprime.
    fn normalize_coprime(num: PolyQ, den: PolyQ) -> Result<Self> {
        if num.is_zero() {
            return Ok(Self::zero());
        }
        let lc = den.lead();
        if lc.is_one() {
            return Ok(RatFunQ { num, den });
        }
        let inv = lc.try_inv()?;
        Ok(RatFunQ { num: num.scale(&inv), den: den.scale(&inv) })
    }

    pub fn from_poly(p: PolyQ) -> Self {
        RatFunQ { num: p, den: Poly::one() }
    }

    pub fn constant(c: GaussRat) -> Self {
        Self::from_poly(Poly::constant(c))
    }

    /// The variable `q`.
    pub fn q() -> Self {
        Self::from_poly(Poly::x())
    }

    pub fn num(&self) -> &PolyQ {
        &self.num
    }

    pub fn den(&self) -> &PolyQ {
        &self.den
    }

    pub fn degree(&self) -> usize {
        self.num.deg0().max(self.den.deg0())
    }

    pub fn is_constant(&self) -> bool {
        self.num.is_constant() && self.den.is_constant()
    }

    /// The constant value, if this function does not depend on `q`.
    pub fn as_constant(&self) -> Option<GaussRat> {
        if self.is_constant() {
            Some(self.num.coeff(0))
        } else {
            None
        }
    }

    /// Evaluation; fails with [`Error::Pole`] where the reduced denominator vanishes.
    pub fn eval(&self, q0: &GaussRat) -> Result<GaussRat> {
        let d = self.den.eval(q0);
        if d.is_zero() {
            return Err(Error::Pole);
        }
        Ok(self.num.eval(q0) * d.try_inv()?)
    }

    /// True when the reduced denominator vanishes at `q0`.
    pub fn has_pole_at(&self, q0: &GaussRat) -> bool {
        self.den.eval(q0).is_zero()
    }

    /// Errors once the degree exceeds `cap`.
    pub fn check_degree(&self, cap: usize) -> Result<()> {
        let degree = self.degree();
        if degree > cap {
            return Err(Error::DegreeCap { degree, cap });
        }
        Ok(())
    }

    /// Composition `self(g(q))`, reduced.
    pub fn compose(&self, g: &RatFunQ) -> Result<Self> {
        let n = self.num.eval_in(g, |c| RatFunQ::constant(c.clone()));
        let d = self.den.eval_in(g, |c| RatFunQ::constant(c.clone()));
        n.try_div(&d)
    }

    fn mul_ref(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        if self.den.is_one() && o.den.is_one() {
            return RatFunQ { num: self.num.clone() * o.num.clone(), den: Poly::one() };
        }
        let g1 = self.num.gcd(&o.den).expect("nonzero gcd inputs");
        let g2 = o.num.gcd(&self.den).expect("nonzero gcd inputs");
        let n1 = divide_out(&self.num, &g1);
        let d2 = divide_out(&o.den, &g1);
        let n2 = divide_out(&o.num, &g2);
        let d1 = divide_out(&self.den, &g2);
        Self::normalize_coprime(n1 * n2, d1 * d2).expect("monic normalization")
    }

    fn add_ref(&self, o: &Self) -> Self {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.den == o.den {
            let n = self.num.clone() + o.num.clone();
            if self.den.is_one() {
                return RatFunQ { num: n, den: Poly::one() };
            }
            return Self::reduce(n, self.den.clone()).expect("nonzero denominator");
        }
        if self.den.is_one() {
            let n = self.num.clone() * o.den.clone() + o.num.clone();
            return RatFunQ { num: n, den: o.den.clone() };
        }
        if o.den.is_one() {
            let n = o.num.clone() * self.den.clone() + self.num.clone();
            return RatFunQ { num: n, den: self.den.clone() };
        }
        let g = self.den.gcd(&o.den).expect("nonzero gcd inputs");
        if g.is_one() {
            let n = self.num.clone() * o.den.clone() + o.num.clone() * self.den.clone();
            return Self::normalize_coprime(n, self.den.clone() * o.den.clone())
                .expect("monic normalization");
        }
        let b = divide_out(&self.den, &g);
        let d = divide_out(&o.den, &g);
        let t = self.num.clone() * d.clone() + o.num.clone() * b.clone();
        if t.is_zero() {
            return Self::zero();
        }
        let g2 = t.gcd(&g).expect("nonzero gcd inputs");
        let num = divide_out(&t, &g2);
        let den = b * divide_out(&o.den, &g2);
        Self::normalize_coprime(num, den).expect("monic normalization")
    }
}

fn divide_out(p: &PolyQ, g: &PolyQ) -> PolyQ {
    if g.is_one() {
        p.clone()
    } else {
        p.exact_div(g).expect("gcd divides")
    }
}

impl Add for RatFunQ {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.add_ref(&o)
    }
}

impl Sub for RatFunQ {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.add_ref(&-o)
    }
}

impl Mul for RatFunQ {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        self.mul_ref(&o)
    }
}

impl Neg for RatFunQ {
    type Output = Self;
    fn neg(self) -> Self {
        RatFunQ { num: -self.num, den: self.den }
    }
}

impl Div for RatFunQ {
    type Output = Self;
    /// Panics on a zero divisor; use [`Field::try_div`] for a checked quotient.
    fn div(self, o: Self) -> Self {
        self.try_div(&o).expect("division by zero rational function")
    }
}

impl Ring for RatFunQ {
    fn zero() -> Self {
        RatFunQ { num: Poly::zero(), den: Poly::one() }
    }
    fn one() -> Self {
        RatFunQ { num: Poly::one(), den: Poly::one() }
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
    fn from_i64(n: i64) -> Self {
        Self::constant(GaussRat::int(n))
    }
}

impl Field for RatFunQ {
    const EXACT: bool = true;

    fn try_inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Self::normalize_coprime(self.den.clone(), self.num.clone())
    }

    fn from_ratio(n: i64, d: i64) -> Self {
        Self::constant(GaussRat::ratio(n, d))
    }

    fn magnitude(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            1.0
        }
    }

    fn complexity(&self) -> usize {
        self.degree()
    }
}

impl From<GaussRat> for RatFunQ {
    fn from(c: GaussRat) -> Self {
        RatFunQ::constant(c)
    }
}

impl fmt::Display for RatFunQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "[{}] / [{}]", self.num, self.den)
        }
    }
}

impl fmt::Debug for RatFunQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
