//! Polynomial gcd over Q(i) by subresultant pseudo-remainder sequences.
//!
//! Inputs are scaled to integer (or Gaussian integer) coefficients, their
//! integer content is stripped, and the subresultant PRS runs with exact
//! divisions only. Purely real inputs stay in Z[x].

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::gauss::GaussRat;
use super::poly::Poly;
use crate::error::Result;

/// Coefficient domains the PRS runs over.
trait Domain: Clone + PartialEq {
    fn d_one() -> Self;
    fn d_is_zero(&self) -> bool;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn exact_div(&self, o: &Self) -> Self;
    fn int_content(&self) -> BigInt;
    fn div_int(&self, n: &BigInt) -> Self;

    fn pow(&self, n: usize) -> Self {
        let mut acc = Self::d_one();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }
}

impl Domain for BigInt {
    fn d_one() -> Self {
        One::one()
    }
    fn d_is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn exact_div(&self, o: &Self) -> Self {
        debug_assert!(Zero::is_zero(&(self % o)));
        self / o
    }
    fn int_content(&self) -> BigInt {
        self.abs()
    }
    fn div_int(&self, n: &BigInt) -> Self {
        self / n
    }
}

/// Gaussian integer `re + im i`.
#[derive(Clone, PartialEq, Debug)]
struct GInt {
    re: BigInt,
    im: BigInt,
}

impl Domain for GInt {
    fn d_one() -> Self {
        GInt { re: BigInt::one(), im: BigInt::zero() }
    }
    fn d_is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn sub(&self, o: &Self) -> Self {
        GInt { re: &self.re - &o.re, im: &self.im - &o.im }
    }
    fn mul(&self, o: &Self) -> Self {
        GInt {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
    fn exact_div(&self, o: &Self) -> Self {
        let n = &o.re * &o.re + &o.im * &o.im;
        let re = &self.re * &o.re + &self.im * &o.im;
        let im = &self.im * &o.re - &self.re * &o.im;
        debug_assert!(Zero::is_zero(&(&re % &n)) && Zero::is_zero(&(&im % &n)));
        GInt { re: re / &n, im: im / n }
    }
    fn int_content(&self) -> BigInt {
        self.re.gcd(&self.im)
    }
    fn div_int(&self, n: &BigInt) -> Self {
        GInt { re: &self.re / n, im: &self.im / n }
    }
}

fn trim<D: Domain>(v: &mut Vec<D>) {
    while v.last().is_some_and(|c| c.d_is_zero()) {
        v.pop();
    }
}

fn primitive<D: Domain>(v: Vec<D>) -> Vec<D> {
    let mut g = BigInt::zero();
    for c in &v {
        g = g.gcd(&c.int_content());
        if g.is_one() {
            return v;
        }
    }
    if g.is_zero() {
        return v;
    }
    v.iter().map(|c| c.div_int(&g)).collect()
}

/// Pseudo-remainder `lc(b)^(deg a - deg b + 1) a mod b`.
fn prem<D: Domain>(a: &[D], b: &[D]) -> Vec<D> {
    let db = b.len() - 1;
    let lb = b[db].clone();
    let mut r: Vec<D> = a.to_vec();
    let delta = a.len() - b.len();
    let mut steps = 0usize;
    while r.len() >= b.len() && !r.is_empty() {
        let lr = r.last().unwrap().clone();
        let shift = r.len() - b.len();
        for c in r.iter_mut() {
            *c = c.mul(&lb);
        }
        for (j, bc) in b.iter().enumerate() {
            r[shift + j] = r[shift + j].sub(&lr.mul(bc));
        }
        r.pop();
        trim(&mut r);
        steps += 1;
    }
    let extra = delta + 1 - steps.min(delta + 1);
    if extra > 0 {
        let f = lb.pow(extra);
        for c in r.iter_mut() {
            *c = c.mul(&f);
        }
    }
    r
}

fn subresultant<D: Domain>(a: Vec<D>, b: Vec<D>) -> Vec<D> {
    let (mut a, mut b) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    a = primitive(a);
    b = primitive(b);
    if b.is_empty() {
        return a;
    }
    let mut g = D::d_one();
    let mut h = D::d_one();
    loop {
        let delta = a.len() - b.len();
        let r = prem(&a, &b);
        if r.is_empty() {
            return primitive(b);
        }
        if r.len() == 1 {
            return vec![D::d_one()];
        }
        a = b;
        let denom = g.mul(&h.pow(delta));
        b = r.iter().map(|c| c.exact_div(&denom)).collect();
        g = a.last().unwrap().clone();
        h = if delta == 0 {
            h
        } else {
            g.pow(delta).exact_div(&h.pow(delta - 1))
        };
    }
}

fn scale_to_integers(p: &Poly<GaussRat>) -> (Vec<GaussRat>, BigInt) {
    let mut l = BigInt::one();
    for c in p.coeffs() {
        l = l.lcm(&c.denom_lcm());
    }
    let lr = BigRational::from_integer(l.clone());
    (p.coeffs().iter().map(|c| GaussRat::new(&c.re * &lr, &c.im * &lr)).collect(), l)
}

fn to_int(v: &[GaussRat]) -> Vec<BigInt> {
    v.iter().map(|c| c.re.numer().clone()).collect()
}

fn to_gint(v: &[GaussRat]) -> Vec<GInt> {
    v.iter().map(|c| GInt { re: c.re.numer().clone(), im: c.im.numer().clone() }).collect()
}

/// Monic gcd over Q(i). The gcd of two zero polynomials is zero.
pub fn gcd(a: &Poly<GaussRat>, b: &Poly<GaussRat>) -> Result<Poly<GaussRat>> {
    if a.is_zero_poly() {
        return b.monic();
    }
    if b.is_zero_poly() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Ok(Poly::constant(GaussRat::int(1)));
    }
    let (ai, _) = scale_to_integers(a);
    let (bi, _) = scale_to_integers(b);
    let real = ai.iter().chain(bi.iter()).all(|c| c.is_real());
    let g: Vec<GaussRat> = if real {
        subresultant(to_int(&ai), to_int(&bi))
            .into_iter()
            .map(|c| GaussRat::real(BigRational::from_integer(c)))
            .collect()
    } else {
        subresultant(to_gint(&ai), to_gint(&bi))
            .into_iter()
            .map(|c| {
                GaussRat::new(BigRational::from_integer(c.re), BigRational::from_integer(c.im))
            })
            .collect()
    };
    Poly::new(g).monic()
}

impl Poly<GaussRat> {
    fn is_zero_poly(&self) -> bool {
        self.coeffs().is_empty()
    }

    /// Monic gcd by subresultant PRS.
    pub fn gcd(&self, other: &Self) -> Result<Self> {
        gcd(self, other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::field::Ring;

    fn p(v: &[i64]) -> Poly<GaussRat> {
        Poly::new(v.iter().map(|&c| GaussRat::int(c)).collect())
    }

    #[test]
    fn gcd_of_products() {
        let f = p(&[-1, 1]) * p(&[2, 0, 1]);
        let g = p(&[-1, 1]) * p(&[3, 1]) * p(&[3, 1]);
        assert_eq!(gcd(&f, &g).unwrap(), p(&[-1, 1]));
        assert_eq!(gcd(&p(&[1, 1]), &p(&[2, 1])).unwrap(), Poly::one());
    }

    #[test]
    fn gcd_gaussian() {
        let i = GaussRat::i();
        let xi = Poly::new(vec![-i.clone(), GaussRat::int(1)]);
        let f = xi.clone() * p(&[1, 2]);
        let g = xi.clone() * Poly::new(vec![i.clone(), GaussRat::int(3)]);
        assert_eq!(gcd(&f, &g).unwrap(), xi);
    }

    #[test]
    fn gcd_high_degree_common_factor() {
        let mut c = Poly::one();
        for k in 1..8 {
            c = c * p(&[k, 1, k * k]);
        }
        let f = c.clone() * p(&[5, 0, 0, 1]);
        let g = c.clone() * p(&[7, 3]);
        assert_eq!(gcd(&f, &g).unwrap(), c.monic().unwrap());
    }
}
