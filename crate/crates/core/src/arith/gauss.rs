//! Exact Gaussian rationals `a + b i` with `a, b` in Q.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::field::{Field, Ring};
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct GaussRat {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRat {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussRat { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        GaussRat { re, im: BigRational::zero() }
    }

    pub fn int(n: i64) -> Self {
        Self::real(BigRational::from_integer(n.into()))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Self::real(BigRational::new(n.into(), d.into()))
    }

    pub fn complex(re: (i64, i64), im: (i64, i64)) -> Self {
        GaussRat {
            re: BigRational::new(re.0.into(), re.1.into()),
            im: BigRational::new(im.0.into(), im.1.into()),
        }
    }

    pub fn i() -> Self {
        GaussRat { re: BigRational::zero(), im: BigRational::one() }
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussRat { re: self.re.clone(), im: -self.im.clone() }
    }

    /// `re^2 + im^2`.
    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(rat_to_f64(&self.re), rat_to_f64(&self.im))
    }

    /// Least common multiple of the denominators of both parts.
    pub fn denom_lcm(&self) -> BigInt {
        num_integer::Integer::lcm(self.re.denom(), self.im.denom())
    }

    /// Nonnegative integer power; negative powers invert first.
    pub fn powi(&self, n: i32) -> Result<Self> {
        if n >= 0 {
            Ok(Ring::pow(self, n as u32))
        } else {
            Ok(Ring::pow(&self.try_inv()?, (-n) as u32))
        }
    }
}

pub(crate) fn rat_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Fall back to scaled integer division for huge numerators/denominators.
    let n = r.numer();
    let d = r.denom();
    let shift = (n.bits() as i64 - d.bits() as i64).clamp(-1000, 1000);
    let (nn, dd) = if shift > 0 {
        (n.clone(), d.clone() << (shift as usize))
    } else {
        (n.clone() << ((-shift) as usize), d.clone())
    };
    let ratio = nn.to_f64().unwrap_or(f64::NAN) / dd.to_f64().unwrap_or(f64::NAN);
    ratio * 2f64.powi(shift as i32)
}

fn fmt_rat(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            return write!(f, "{}", fmt_rat(&self.re));
        }
        let im_abs = self.im.abs();
        let im_txt = if im_abs.is_one() { String::new() } else { fmt_rat(&im_abs) };
        if self.re.is_zero() {
            let sign = if self.im.is_negative() { "-" } else { "" };
            return write!(f, "{sign}{im_txt}i");
        }
        let sign = if self.im.is_negative() { '-' } else { '+' };
        write!(f, "{}{}{}i", fmt_rat(&self.re), sign, im_txt)
    }
}

impl fmt::Debug for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_rat(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty number".into()));
    }
    let bad = || Error::Parse(format!("invalid rational {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        // Decimal literal, converted exactly.
        let neg = ip.trim_start().starts_with('-');
        let ip_val = if ip.trim().is_empty() || ip.trim() == "-" || ip.trim() == "+" {
            BigInt::zero()
        } else {
            BigInt::from_str(ip.trim()).map_err(|_| bad())?.abs()
        };
        if !fp.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let scale = BigInt::from(10u32).pow(fp.len() as u32);
        let frac = if fp.is_empty() { BigInt::zero() } else { BigInt::from_str(fp).map_err(|_| bad())? };
        let mag = BigRational::new(ip_val * &scale + frac, scale);
        return Ok(if neg { -mag } else { mag });
    }
    Ok(BigRational::from_integer(BigInt::from_str(s).map_err(|_| bad())?))
}

impl FromStr for GaussRat {
    type Err = Error;

    /// Accepts `p/q`, decimals, `i`, `3i`, `1/2+3/4i`, `-2-i`.
    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(Error::Parse("empty number".into()));
        }
        if let Some(body) = s.strip_suffix('i') {
            // Split at the last sign that is not leading and not after '/'.
            let bytes = body.as_bytes();
            let mut split = None;
            for k in (1..bytes.len()).rev() {
                if (bytes[k] == b'+' || bytes[k] == b'-') && bytes[k - 1] != b'/' {
                    split = Some(k);
                    break;
                }
            }
            let (re_txt, im_txt) = match split {
                Some(k) => (&body[..k], &body[k..]),
                None => ("", body),
            };
            let im = match im_txt {
                "" | "+" => BigRational::one(),
                "-" => -BigRational::one(),
                t => parse_rat(t)?,
            };
            let re = if re_txt.is_empty() { BigRational::zero() } else { parse_rat(re_txt)? };
            return Ok(GaussRat { re, im });
        }
        Ok(GaussRat::real(parse_rat(&s)?))
    }
}

impl Add for GaussRat {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        GaussRat { re: self.re + o.re, im: self.im + o.im }
    }
}

impl<'a> Add<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn add(self, o: &GaussRat) -> GaussRat {
        GaussRat { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl AddAssign<&GaussRat> for GaussRat {
    fn add_assign(&mut self, o: &GaussRat) {
        self.re += &o.re;
        if !o.im.is_zero() {
            self.im += &o.im;
        }
    }
}

impl Sub for GaussRat {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        GaussRat { re: self.re - o.re, im: self.im - o.im }
    }
}

impl<'a> Sub<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn sub(self, o: &GaussRat) -> GaussRat {
        GaussRat { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl SubAssign<&GaussRat> for GaussRat {
    fn sub_assign(&mut self, o: &GaussRat) {
        self.re -= &o.re;
        if !o.im.is_zero() {
            self.im -= &o.im;
        }
    }
}

impl<'a> Mul<&'a GaussRat> for &'a GaussRat {
    type Output = GaussRat;
    fn mul(self, o: &GaussRat) -> GaussRat {
        match (self.im.is_zero(), o.im.is_zero()) {
            (true, true) => GaussRat::real(&self.re * &o.re),
            (true, false) => GaussRat { re: &self.re * &o.re, im: &self.re * &o.im },
            (false, true) => GaussRat { re: &self.re * &o.re, im: &self.im * &o.re },
            (false, false) => GaussRat {
                re: &self.re * &o.re - &self.im * &o.im,
                im: &self.re * &o.im + &self.im * &o.re,
            },
        }
    }
}

impl Mul for GaussRat {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        &self * &o
    }
}

impl MulAssign<&GaussRat> for GaussRat {
    fn mul_assign(&mut self, o: &GaussRat) {
        *self = &*self * o;
    }
}

impl Neg for GaussRat {
    type Output = Self;
    fn neg(self) -> Self {
        GaussRat { re: -self.re, im: -self.im }
    }
}

impl Div for GaussRat {
    type Output = Self;
    /// Panics on a zero divisor; use [`Field::try_div`] for a checked quotient.
    fn div(self, o: Self) -> Self {
        self.try_div(&o).expect("division by zero")
    }
}

impl From<i64> for GaussRat {
    fn from(n: i64) -> Self {
        GaussRat::int(n)
    }
}

impl From<BigRational> for GaussRat {
    fn from(r: BigRational) -> Self {
        GaussRat::real(r)
    }
}

impl Ring for GaussRat {
    fn zero() -> Self {
        GaussRat::default_zero()
    }
    fn one() -> Self {
        GaussRat::real(BigRational::one())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn from_i64(n: i64) -> Self {
        GaussRat::int(n)
    }
    fn is_one(&self) -> bool {
        self.im.is_zero() && self.re.is_one()
    }
}

impl GaussRat {
    fn default_zero() -> Self {
        GaussRat { re: BigRational::zero(), im: BigRational::zero() }
    }
}

impl Field for GaussRat {
    const EXACT: bool = true;

    fn try_inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.im.is_zero() {
            return Ok(GaussRat::real(self.re.recip()));
        }
        let n = self.norm_sqr();
        Ok(GaussRat { re: &self.re / &n, im: -(&self.im / &n) })
    }

    fn from_ratio(n: i64, d: i64) -> Self {
        GaussRat::ratio(n, d)
    }

    fn magnitude(&self) -> f64 {
        self.to_c64().norm()
    }
}
