//! The limit `q -> 1`: spectral data `Theta = 1 + (q-1) theta/2`, the sequences
//! `(a_n, b_n)` built from exact discrete solutions, the power-series solution of
//! the Hamiltonian system, and slope checks of the q-Schlesinger limit.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::arith::{Field, GaussRat, Mat2, RatFunQ, Ring, SeriesT, ToJson, DEFAULT_DEGREE_CAP};
use crate::error::{Error, Result};
use crate::fuchsian_diff::{hamiltonian, p6_rhs, ThetaDiff};
use crate::fuchsian_q::ThetaQ;
use crate::ode::{integrate, OdeOptions};
use crate::qp6_dynamics::modified_qp6_map;

type C = Complex64;

/// Differential data together with the induced `Theta(q)` over `Q(i)(q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfluentSpectral {
    pub theta: ThetaDiff<GaussRat>,
    pub big: ThetaQ<RatFunQ>,
}

impl ConfluentSpectral {
    /// `Theta_inf = Theta_bar_inf` identically; the q-Fuchsian assembly is unavailable.
    pub fn is_degenerate(&self) -> bool {
        self.theta.thinf.is_zero()
    }

    pub fn at(&self, q0: &GaussRat) -> Result<ThetaQ<GaussRat>> {
        self.big.try_map(|f| f.eval(q0))
    }

    pub fn numeric(&self, q: C) -> Result<ThetaQ<C>> {
        ThetaQ::from_diff(&self.theta.map(|v| v.to_c64()), &q)
    }

    /// `Theta_0 Theta_bar_0 = Theta_inf Theta_bar_inf Theta_t Theta_bar_t Theta_1 Theta_bar_1`.
    pub fn relation_holds(&self) -> bool {
        let b = &self.big;
        let lhs = b.th0.clone() * b.th0b.clone();
        let rhs = b.thinf.clone() * b.thinfb.clone() * b.tht.clone() * b.thtb.clone() * b.th1.clone() * b.th1b.clone();
        lhs == rhs
    }
}

pub fn make_confluent(theta: &ThetaDiff<GaussRat>) -> ConfluentSpectral {
    let q = RatFunQ::q();
    let big = ThetaQ::from_diff(&theta.map(|v| RatFunQ::constant(v.clone())), &q)
        .expect("1 + (q-1) theta/2 is a nonzero rational function");
    ConfluentSpectral { theta: theta.clone(), big }
}

/// `X = (y-1)(y-t)(1+(q-1)yZ) / ((y-Theta_1)(y-Theta_bar_1))`.
pub fn x_conf<F: Field>(y: &F, z: &F, t: &F, q: &F, th: &ThetaQ<F>) -> Result<F> {
    let one = F::one();
    let w = one.clone() + (q.clone() - one.clone()) * y.clone() * z.clone();
    let num = (y.clone() - one) * (y.clone() - t.clone()) * w;
    let den = (y.clone() - th.th1.clone()) * (y.clone() - th.th1b.clone());
    den.try_inv().map(|d| num * d).map_err(|_| Error::Precondition("y in {Theta_1, Theta_bar_1}".into()))
}

/// `E = (q/y) (X - t Theta_0)(X - t Theta_bar_0) / ((Theta_inf X - 1)(q Theta_bar_inf X - 1))`.
pub fn e_conf<F: Field>(y: &F, z: &F, t: &F, q: &F, th: &ThetaQ<F>) -> Result<F> {
    let one = F::one();
    let x = x_conf(y, z, t, q, th)?;
    let num = q.clone() * (x.clone() - t.clone() * th.th0.clone()) * (x.clone() - t.clone() * th.th0b.clone());
    let den = y.clone()
        * (th.thinf.clone() * x.clone() - one.clone())
        * (q.clone() * th.thinfb.clone() * x - one);
    den.try_inv().map(|d| num * d).map_err(|_| Error::Precondition("pole of E".into()))
}

/// `(d_q lambda / lambda, d_q y, d_q Z)` with `d_q f = (f(qt) - f(t))/((q-1)t)`.
pub fn qschles_diff_rhs<F: Field>(y: &F, z: &F, t: &F, q: &F, th: &ThetaQ<F>) -> Result<(F, F, F)> {
    let one = F::one();
    let x = x_conf(y, z, t, q, th)?;
    let e = e_conf(y, z, t, q, th)?;
    let q1 = q.clone() - one.clone();
    let iqt = (q1.clone() * t.clone()).try_inv()?;
    let dl = (th.thinf.clone() - q.clone() * th.thinfb.clone()) * x.clone()
        * (q1.clone() * t.clone() * (one.clone() - th.thinf.clone() * x.clone())).try_inv()?;
    let dy = (e.clone() - y.clone()) * iqt.clone();
    let qt = q.clone() * t.clone();
    let num = (e.clone() - qt.clone() * th.tht.clone()) * (e.clone() - qt.clone() * th.thtb.clone());
    let den = q.clone() * q1.clone() * e.clone() * (e.clone() - one.clone()) * (e.clone() - qt) * x;
    let dz = (num * den.try_inv()? - (q1 * e).try_inv()? - z.clone()) * iqt;
    Ok((dl, dy, dz))
}

/// Exact initial data at `t0`, possibly depending on `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfluenceInit {
    pub y0: RatFunQ,
    pub z0: RatFunQ,
    pub t0: GaussRat,
}

impl ConfluenceInit {
    pub fn constant(y0: GaussRat, z0: GaussRat, t0: GaussRat) -> Self {
        ConfluenceInit { y0: RatFunQ::constant(y0), z0: RatFunQ::constant(z0), t0 }
    }

    fn check(&self) -> Result<()> {
        let one = GaussRat::one();
        if self.t0.is_zero() || self.t0 == one {
            return Err(Error::Precondition("t0 in {0, 1}".into()));
        }
        let y1 = self.y0.eval(&one).map_err(|_| Error::Precondition("y0 has a pole at q = 1".into()))?;
        self.z0.eval(&one).map_err(|_| Error::Precondition("Z0 has a pole at q = 1".into()))?;
        if y1.is_zero() || y1 == one || y1 == self.t0 {
            return Err(Error::Precondition("y0 in {0, 1, t0}".into()));
        }
        Ok(())
    }
}

/// `(y_n, Z_n)` on `t_n = q^n t0` and the transforms `(a_n, b_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfluenceSequences {
    pub t0: GaussRat,
    pub yz: Vec<(RatFunQ, RatFunQ)>,
    pub ab: Vec<(RatFunQ, RatFunQ)>,
}

impl ConfluenceSequences {
    /// `(a_n(1), b_n(1))`.
    pub fn at_one(&self) -> Result<Vec<(GaussRat, GaussRat)>> {
        let one = GaussRat::one();
        self.ab.iter().map(|(a, b)| Ok((a.eval(&one)?, b.eval(&one)?))).collect()
    }

    /// Roots of the denominators of `y_n, Z_n` within `radius` of `q = 1`, as floats.
    pub fn exclusions_near_one(&self, radius: f64) -> Vec<C> {
        let mut out: Vec<C> = Vec::new();
        for (y, z) in &self.yz {
            for f in [y, z] {
                for r in poly_roots(&f.den().coeffs().iter().map(|c| c.to_c64()).collect::<Vec<_>>()) {
                    if (r - C::new(1.0, 0.0)).norm() <= radius && !out.iter().any(|o| (o - r).norm() < 1e-9) {
                        out.push(r);
                    }
                }
            }
        }
        out
    }
}

fn binomial(n: usize, k: usize) -> i64 {
    let mut acc: i64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as i64 / (i + 1) as i64;
    }
    acc
}

fn q_minus_one() -> RatFunQ {
    RatFunQ::q() - RatFunQ::one()
}

/// `a_n = (q-1)^{-n} sum_k C(n,k) (-1)^{n-k} y_k`.
pub fn binomial_forward(ys: &[RatFunQ]) -> Result<Vec<RatFunQ>> {
    let q1 = q_minus_one();
    let mut out = Vec::with_capacity(ys.len());
    for n in 0..ys.len() {
        let mut acc = RatFunQ::zero();
        for (k, yk) in ys.iter().enumerate().take(n + 1) {
            let c = binomial(n, k) * if (n - k) % 2 == 0 { 1 } else { -1 };
            acc = acc + yk.clone() * RatFunQ::from_i64(c);
        }
        out.push(acc.try_div(&q1.pow(n as u32))?);
    }
    Ok(out)
}

/// `y_n = sum_k C(n,k) (q-1)^k a_k`.
pub fn binomial_inverse(a: &[RatFunQ]) -> Vec<RatFunQ> {
    let q1 = q_minus_one();
    (0..a.len())
        .map(|n| {
            let mut acc = RatFunQ::zero();
            for (k, ak) in a.iter().enumerate().take(n + 1) {
                acc = acc + ak.clone() * q1.pow(k as u32) * RatFunQ::from_i64(binomial(n, k));
            }
            acc
        })
        .collect()
}

/// Iterates the modified map over `Q(i)(q)` and forms `(a_n, b_n)`;
/// fails with [`Error::ConfluenceViolated`] if some `a_n` or `b_n` has a pole at `q = 1`.
pub fn an_bn(init: &ConfluenceInit, spec: &ConfluentSpectral, n_max: usize, cap: usize) -> Result<ConfluenceSequences> {
    init.check()?;
    let q = RatFunQ::q();
    let mut t = RatFunQ::constant(init.t0.clone());
    let mut yz = vec![(init.y0.clone(), init.z0.clone())];
    for _ in 0..n_max {
        let (y, z) = yz.last().expect("nonempty");
        let (sy, sz) = modified_qp6_map(y, z, &t, &q, &spec.big)?;
        sy.check_degree(cap)?;
        sz.check_degree(cap)?;
        yz.push((sy, sz));
        t = t * q.clone();
    }
    let ys: Vec<RatFunQ> = yz.iter().map(|p| p.0.clone()).collect();
    let zs: Vec<RatFunQ> = yz.iter().map(|p| p.1.clone()).collect();
    let a = binomial_forward(&ys)?;
    let b = binomial_forward(&zs)?;
    let one = GaussRat::one();
    for (n, (an, bn)) in a.iter().zip(&b).enumerate() {
        if an.has_pole_at(&one) {
            return Err(Error::ConfluenceViolated(format!("a_{n} has a pole at q = 1")));
        }
        if bn.has_pole_at(&one) {
            return Err(Error::ConfluenceViolated(format!("b_{n} has a pole at q = 1")));
        }
    }
    Ok(ConfluenceSequences { t0: init.t0.clone(), yz, ab: a.into_iter().zip(b).collect() })
}

/// [`an_bn`] with the default degree cap.
pub fn an_bn_default(init: &ConfluenceInit, spec: &ConfluentSpectral, n_max: usize) -> Result<ConfluenceSequences> {
    an_bn(init, spec, n_max, DEFAULT_DEGREE_CAP)
}

type Eps = SeriesT<GaussRat>;

/// Expansion of `f(q)` in `e = q - 1` to order `order`; `f` must be finite at `q = 1`.
pub fn expand_at_one(f: &RatFunQ, order: usize) -> Result<Eps> {
    let one = GaussRat::one();
    let num = f.num().shift(&one);
    let den = f.den().shift(&one);
    let trunc = |p: &crate::arith::PolyQ| Eps::new(GaussRat::zero(), p.coeffs().to_vec(), order);
    trunc(&num).try_div(&trunc(&den)).map_err(|_| Error::Precondition("pole at q = 1".into()))
}

/// `s / e`, which requires `s(0) = 0`.
fn div_eps(s: &Eps, what: &str) -> Result<Eps> {
    if !s.coeff(0).is_zero() {
        return Err(Error::ConfluenceViolated(format!("{what} has a pole at q = 1")));
    }
    let c = s.coeffs_to_order();
    Ok(Eps::new(GaussRat::zero(), c[1..].to_vec(), s.order().saturating_sub(1)))
}

/// The modified map through `E`: `sigma y = E`,
/// `sigma Z = ((E - qt Theta_t)(E - qt Theta_bar_t)/(q (E-1)(E-qt) X) - 1)/((q-1) E)`,
/// with the final division by `q - 1` carried out on the expansion.
fn step_eps(y: &Eps, z: &Eps, t: &Eps, q: &Eps, th: &ThetaQ<Eps>) -> Result<(Eps, Eps)> {
    let one = Eps::one();
    let x = x_conf(y, z, t, q, th)?;
    let e = e_conf(y, z, t, q, th)?;
    let qt = q.clone() * t.clone();
    let num = (e.clone() - qt.clone() * th.tht.clone()) * (e.clone() - qt.clone() * th.thtb.clone());
    let den = q.clone() * (e.clone() - one.clone()) * (e.clone() - qt) * x;
    let ratio = num.try_div(&den)?;
    let sz = div_eps(&(ratio - one), "sigma Z")?.try_div(&e)?;
    Ok((e, sz))
}

/// Exact `(a_n(1), b_n(1))` for `n <= n_max` from the expansions of `y_n, Z_n`
/// in `q - 1`; a nonvanishing coefficient below order `n` in
/// `sum_k C(n,k)(-1)^{n-k} y_k` is reported as [`Error::ConfluenceViolated`].
pub fn an_bn_at_one(init: &ConfluenceInit, spec: &ConfluentSpectral, n_max: usize) -> Result<Vec<(GaussRat, GaussRat)>> {
    init.check()?;
    // Each step costs one order of precision in `Z`, hence in the next `y`.
    let order = 2 * n_max + 2;
    let k = |c: GaussRat| Eps::new(GaussRat::zero(), vec![c], order);
    let eps = Eps::variable(GaussRat::zero(), order);
    let q = k(GaussRat::one()) + eps;
    let th = ThetaQ::from_diff(&spec.theta.map(|v| k(v.clone())), &q)?;
    let mut t = k(init.t0.clone());
    let mut ys = vec![expand_at_one(&init.y0, order)?];
    let mut zs = vec![expand_at_one(&init.z0, order)?];
    for _ in 0..n_max {
        let (sy, sz) = step_eps(ys.last().expect("nonempty"), zs.last().expect("nonempty"), &t, &q, &th)?;
        ys.push(sy);
        zs.push(sz);
        t = t * q.clone();
    }
    let coeff_n = |v: &[Eps], n: usize, name: &str| -> Result<GaussRat> {
        if v.iter().take(n + 1).any(|s| s.order() < n) {
            return Err(Error::Precondition(format!("expansion order exhausted at {name}_{n}")));
        }
        let mut acc = Eps::zero();
        for (j, vj) in v.iter().enumerate().take(n + 1) {
            let c = binomial(n, j) * if (n - j) % 2 == 0 { 1 } else { -1 };
            acc = acc + vj.clone() * Eps::from_i64(c);
        }
        if let Some(j) = (0..n).find(|&j| !acc.coeff(j).is_zero()) {
            return Err(Error::ConfluenceViolated(format!("{name}_{n} has a pole of order {} at q = 1", n - j)));
        }
        Ok(acc.coeff(n))
    };
    (0..=n_max).map(|n| Ok((coeff_n(&ys, n, "a")?, coeff_n(&zs, n, "b")?))).collect()
}

/// Power-series solution `(y, Z)` in `s = t - t0` to order `order`, by
/// repeated substitution into the Hamiltonian system.
pub fn p6_taylor(
    y0: &GaussRat,
    z0: &GaussRat,
    t0: &GaussRat,
    theta: &ThetaDiff<GaussRat>,
    order: usize,
) -> Result<(SeriesT<GaussRat>, SeriesT<GaussRat>)> {
    let t = SeriesT::constant(t0.clone()) + SeriesT::variable(t0.clone(), order);
    let th = theta.map(|v| SeriesT::constant(v.clone()));
    let base = |c: &GaussRat| SeriesT::new(t0.clone(), vec![c.clone()], order);
    let (mut y, mut z) = (base(y0), base(z0));
    for _ in 0..=order {
        let (dy, dz, _) = p6_rhs(&y, &z, &t, &th)?;
        y = (base(y0) + dy.integrate()).truncate(order);
        z = (base(z0) + dz.integrate()).truncate(order);
    }
    Ok((y, z))
}

/// `(y' - H_Z, Z' + H_y)` for series `(y, Z)`; zero through order `N - 1` for a solution.
pub fn p6_taylor_residual(
    y: &SeriesT<GaussRat>,
    z: &SeriesT<GaussRat>,
    theta: &ThetaDiff<GaussRat>,
) -> Result<(SeriesT<GaussRat>, SeriesT<GaussRat>)> {
    let t0 = y.center.clone();
    let t = SeriesT::constant(t0.clone()) + SeriesT::variable(t0, y.order());
    let th = theta.map(|v| SeriesT::constant(v.clone()));
    let (dy, dz, _) = p6_rhs(y, z, &t, &th)?;
    let n = y.order().saturating_sub(1);
    Ok(((y.derivative() - dy).truncate(n), (z.derivative() - dz).truncate(n)))
}

/// Truncated polynomial in the three shifts `(y - y0, Z - Z0, t - t0)`,
/// monomials of total degree above `deg` dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet<F> {
    terms: BTreeMap<[u32; 3], F>,
    deg: usize,
}

impl<F: Field> Jet<F> {
    fn from_terms(terms: BTreeMap<[u32; 3], F>, deg: usize) -> Self {
        let terms = terms
            .into_iter()
            .filter(|(e, c)| !c.is_zero() && (e.iter().sum::<u32>() as usize) <= deg)
            .collect();
        Jet { terms, deg }
    }

    pub fn constant(c: F) -> Self {
        Self::from_terms(BTreeMap::from([([0, 0, 0], c)]), usize::MAX)
    }

    /// `c + e_i`, truncated at `deg`.
    pub fn var(i: usize, c: F, deg: usize) -> Self {
        let mut e = [0u32; 3];
        e[i] = 1;
        Self::from_terms(BTreeMap::from([([0, 0, 0], c), (e, F::one())]), deg)
    }

    pub fn value(&self) -> F {
        self.terms.get(&[0, 0, 0]).cloned().unwrap_or_else(F::zero)
    }

    pub fn partial(&self, i: usize) -> Self {
        let mut out = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut f = *e;
                f[i] -= 1;
                out.insert(f, c.clone() * F::from_i64(e[i] as i64));
            }
        }
        Self::from_terms(out, self.deg.saturating_sub(1))
    }
}

impl<F: Field> Add for Jet<F> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut terms = self.terms;
        for (e, c) in o.terms {
            let v = terms.remove(&e).unwrap_or_else(F::zero) + c;
            terms.insert(e, v);
        }
        Self::from_terms(terms, self.deg.min(o.deg))
    }
}

impl<F: Field> Neg for Jet<F> {
    type Output = Self;
    fn neg(self) -> Self {
        Jet { terms: self.terms.into_iter().map(|(e, c)| (e, -c)).collect(), deg: self.deg }
    }
}

impl<F: Field> Sub for Jet<F> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<F: Field> Mul for Jet<F> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let deg = self.deg.min(o.deg);
        let mut terms: BTreeMap<[u32; 3], F> = BTreeMap::new();
        for (e, a) in &self.terms {
            for (f, b) in &o.terms {
                let g = [e[0] + f[0], e[1] + f[1], e[2] + f[2]];
                if (g.iter().sum::<u32>() as usize) > deg {
                    continue;
                }
                let v = terms.remove(&g).unwrap_or_else(F::zero) + a.clone() * b.clone();
                terms.insert(g, v);
            }
        }
        Self::from_terms(terms, deg)
    }
}

impl<F: Field> Ring for Jet<F> {
    fn zero() -> Self {
        Jet { terms: BTreeMap::new(), deg: usize::MAX }
    }
    fn one() -> Self {
        Self::constant(F::one())
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn from_i64(n: i64) -> Self {
        Self::constant(F::from_i64(n))
    }
}

impl<F: Field> Field for Jet<F> {
    const EXACT: bool = F::EXACT;

    fn try_inv(&self) -> Result<Self> {
        let c0 = self.value();
        let inv0 = c0.try_inv()?;
        if self.terms.len() == 1 {
            return Ok(Self::constant(inv0));
        }
        if self.deg == usize::MAX {
            return Err(Error::Precondition("inverse of an untruncated nonconstant jet".into()));
        }
        // 1/(c0 (1 + n)) = (1/c0) sum (-n)^k with n nilpotent.
        let n = self.clone() * Self::constant(inv0.clone()) - Self::one();
        let mut acc = Self::one();
        let mut pw = Self::one();
        for _ in 0..self.deg {
            pw = pw * (-n.clone());
            acc = acc + pw.clone();
        }
        Ok(Jet { deg: self.deg, ..acc } * Self::constant(inv0))
    }

    fn from_ratio(n: i64, d: i64) -> Self {
        Self::constant(F::from_ratio(n, d))
    }

    fn magnitude(&self) -> f64 {
        self.value().magnitude()
    }
}

/// `delta_t^k y(t0), delta_t^k Z(t0)` for `k <= n`, `delta_t = t d/dt`, by the
/// chain rule `H^(k) = H^(k-1)_y delta y + H^(k-1)_Z delta Z + H^(k-1)_t t`.
pub fn delta_derivatives(
    y0: &GaussRat,
    z0: &GaussRat,
    t0: &GaussRat,
    theta: &ThetaDiff<GaussRat>,
    n: usize,
) -> Result<Vec<(GaussRat, GaussRat)>> {
    let mut out = vec![(y0.clone(), z0.clone())];
    if n == 0 {
        return Ok(out);
    }
    let deg = n - 1;
    let y = Jet::var(0, y0.clone(), deg);
    let z = Jet::var(1, z0.clone(), deg);
    let t = Jet::var(2, t0.clone(), deg);
    let th = theta.map(|v| Jet::constant(v.clone()));
    let (dy, dz, _) = p6_rhs(&y, &z, &t, &th)?;
    let h1 = t.clone() * dy;
    let h2 = t.clone() * dz;
    let total = |f: &Jet<GaussRat>| f.partial(0) * h1.clone() + f.partial(1) * h2.clone() + f.partial(2) * t.clone();
    let (mut f1, mut f2) = (h1.clone(), h2.clone());
    for k in 1..=n {
        out.push((f1.value(), f2.value()));
        if k < n {
            f1 = total(&f1);
            f2 = total(&f2);
        }
    }
    Ok(out)
}

/// Stirling numbers of the second kind `S(n, k)`, `k <= n`.
fn stirling2(n: usize) -> Vec<i64> {
    let mut row = vec![1i64];
    for m in 1..=n {
        let mut next = vec![0i64; m + 1];
        for k in 1..=m {
            let prev = if k < row.len() { row[k] } else { 0 };
            next[k] = k as i64 * prev + row[k - 1];
        }
        row = next;
    }
    row
}

/// `delta_t^n f(t0) = sum_k S(n,k) t0^k k! c_k` from Taylor coefficients `c_k`.
pub fn delta_from_taylor(s: &SeriesT<GaussRat>, n: usize) -> GaussRat {
    let st = stirling2(n);
    let mut acc = GaussRat::zero();
    let mut fact = GaussRat::one();
    for (k, skn) in st.iter().enumerate() {
        if k > 0 {
            fact = fact * GaussRat::int(k as i64);
        }
        acc = acc + GaussRat::int(*skn) * s.center.pow(k as u32) * fact.clone() * s.coeff(k);
    }
    acc
}

/// `t0^n n! c_n`.
pub fn scaled_taylor(s: &SeriesT<GaussRat>, n: usize) -> GaussRat {
    let mut fact = GaussRat::one();
    for k in 1..=n {
        fact = fact * GaussRat::int(k as i64);
    }
    s.center.pow(n as u32) * fact * s.coeff(n)
}

/// One row of the confluence report.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfluenceRow {
    pub n: usize,
    pub a_n_at_1: GaussRat,
    pub b_n_at_1: GaussRat,
    /// `t0^n n! c_n` for `y` and `Z`.
    pub taylor_coeff: GaussRat,
    pub taylor_coeff_z: GaussRat,
    /// `delta_t^n y(t0)`, `delta_t^n Z(t0)`.
    pub delta_n: GaussRat,
    pub delta_n_z: GaussRat,
}

impl ConfluenceRow {
    pub fn equal(&self) -> bool {
        self.a_n_at_1 == self.taylor_coeff && self.b_n_at_1 == self.taylor_coeff_z
    }

    pub fn equal_delta(&self) -> bool {
        self.a_n_at_1 == self.delta_n && self.b_n_at_1 == self.delta_n_z
    }
}

impl ToJson for ConfluenceRow {
    fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "a_n_at_1": self.a_n_at_1.to_json(),
            "taylor_coeff": self.taylor_coeff.to_json(),
            "equal": self.equal(),
            "b_n_at_1": self.b_n_at_1.to_json(),
            "taylor_coeff_z": self.taylor_coeff_z.to_json(),
            "delta_n": self.delta_n.to_json(),
            "delta_n_z": self.delta_n_z.to_json(),
            "equal_delta": self.equal_delta(),
        })
    }
}

/// Compares `(a_n(1), b_n(1))` with the series solution.
pub fn confluence_rows(
    vals: &[(GaussRat, GaussRat)],
    ys: &SeriesT<GaussRat>,
    zs: &SeriesT<GaussRat>,
) -> Vec<ConfluenceRow> {
    vals.iter()
        .cloned()
        .into_iter()
        .enumerate()
        .map(|(n, (a, b))| ConfluenceRow {
            n,
            a_n_at_1: a,
            b_n_at_1: b,
            taylor_coeff: scaled_taylor(ys, n),
            taylor_coeff_z: scaled_taylor(zs, n),
            delta_n: delta_from_taylor(ys, n),
            delta_n_z: delta_from_taylor(zs, n),
        })
        .collect()
}

/// `sum_n v_n h^n / n!`.
pub fn partial_sum(vals: &[GaussRat], h: f64) -> C {
    let mut acc = C::new(0.0, 0.0);
    let mut w = 1.0;
    for (n, v) in vals.iter().enumerate() {
        if n > 0 {
            w *= h / n as f64;
        }
        acc += v.to_c64() * w;
    }
    acc
}

/// `(y, Z)(t1)` for the Hamiltonian system by adaptive integration from `t0`.
pub fn numeric_solution(y0: C, z0: C, t0: C, t1: C, theta: &ThetaDiff<GaussRat>, opts: &OdeOptions) -> Result<(C, C)> {
    let th = theta.map(|v| v.to_c64());
    let nodes = integrate(
        |t, u| {
            let (dy, dz, _) = p6_rhs(&u[0], &u[1], &t, &th)?;
            Ok(vec![dy, dz])
        },
        t0,
        t1,
        &[y0, z0],
        opts,
    )?;
    let last = &nodes.last().expect("nonempty").1;
    Ok((last[0], last[1]))
}

/// Two-point slope fit of residuals `r(q)` at offsets `q - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlopeFit {
    pub label: String,
    pub offsets: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl SlopeFit {
    /// `r(h_0) / r(h_1)`.
    pub fn ratio(&self) -> f64 {
        self.residuals[0] / self.residuals[1]
    }

    /// `r / |q - 1|` at the smallest offset.
    pub fn constant(&self) -> f64 {
        let i = self.residuals.len() - 1;
        self.residuals[i] / self.offsets[i].abs()
    }

    pub fn exact_zero(&self) -> bool {
        self.residuals.iter().all(|r| *r == 0.0)
    }

    /// Linear decay: exact zero, or ratio within `[lo, hi]`.
    pub fn passes(&self, lo: f64, hi: f64) -> bool {
        self.exact_zero() || (lo..=hi).contains(&self.ratio())
    }
}

impl ToJson for SlopeFit {
    fn to_json(&self) -> Value {
        let ratio = if self.exact_zero() { Value::Null } else { json!(self.ratio()) };
        json!({"label": self.label, "offsets": self.offsets, "residuals": self.residuals,
               "ratio": ratio, "constant": self.constant()})
    }
}

/// `|y_n(q) - y(q^n t0)|` and `|Z_n(q) - Z(q^n t0)|` for `n <= n_max`, where
/// `(y_n(q), Z_n(q))` is the exact discrete solution at `q = 1 + offset` and
/// `(y, Z)` solves the Hamiltonian system from the data at `q = 1`.
pub fn remark_estimate_check(
    init: &ConfluenceInit,
    theta: &ThetaDiff<GaussRat>,
    n_max: usize,
    offsets: &[GaussRat],
    opts: &OdeOptions,
) -> Result<Vec<SlopeFit>> {
    init.check()?;
    let one = GaussRat::one();
    let t0 = init.t0.to_c64();
    let (y0, z0) = (init.y0.eval(&one)?.to_c64(), init.z0.eval(&one)?.to_c64());
    let mut ry = vec![Vec::new(); n_max + 1];
    let mut rz = vec![Vec::new(); n_max + 1];
    for h in offsets {
        let q = one.clone() + h.clone();
        let th = ThetaQ::from_diff(theta, &q)?;
        let (mut y, mut z, mut t) = (init.y0.eval(&q)?, init.z0.eval(&q)?, init.t0.clone());
        for n in 0..=n_max {
            if n > 0 {
                (y, z) = modified_qp6_map(&y, &z, &t, &q, &th)?;
                t = t * q.clone();
            }
            let (ye, ze) = numeric_solution(y0, z0, t0, t.to_c64(), theta, opts)?;
            ry[n].push((y.to_c64() - ye).norm());
            rz[n].push((z.to_c64() - ze).norm());
        }
    }
    let hs: Vec<f64> = offsets.iter().map(|h| h.to_c64().re).collect();
    let fit = |name: &str, n: usize, r: Vec<f64>| SlopeFit { label: format!("{name}_{n}"), offsets: hs.clone(), residuals: r };
    let mut out: Vec<SlopeFit> = ry.into_iter().enumerate().map(|(n, r)| fit("y", n, r)).collect();
    out.extend(rz.into_iter().enumerate().map(|(n, r)| fit("Z", n, r)));
    Ok(out)
}

/// `A_inf~(q) = diag((1 - Theta_bar_inf)/(q-1), (1 - Theta_inf)/(q-1))`.
pub fn ainf_tilde<F: Field>(q: &F, th: &ThetaQ<F>) -> Result<Mat2<F>> {
    let one = F::one();
    let iq = (q.clone() - one.clone()).try_inv()?;
    Ok(Mat2::diag((one.clone() - th.thinfb.clone()) * iq.clone(), (one - th.thinf.clone()) * iq))
}

fn kappa<F: Field>(t: &F, th: &ThetaQ<F>) -> F {
    (t.clone() * th.tht.clone() - F::one()) * (t.clone() * th.thtb.clone() - F::one())
}

/// `B_0(A0~, A1~, t, q)` in the tilde normalisation.
pub fn b0_tilde<F: Field>(a0: &Mat2<F>, a1: &Mat2<F>, t: &F, q: &F, th: &ThetaQ<F>) -> Result<Mat2<F>> {
    let one = F::one();
    let id = Mat2::<F>::identity();
    let q1 = q.clone() - one.clone();
    let ik = kappa(t, th).try_inv()?;
    let t1 = t.clone() - one;
    let ainf = ainf_tilde(q, th)?;
    let left = id.clone() + (a1.scale(&(t1.clone() * ik.clone())) - ainf).scale(&q1);
    let right = id + (a0.clone() + a1.scale(&(t.clone() * t1 * ik))).scale(&q1);
    let ri = right.try_inv().map_err(|_| Error::DegenerateSchlesinger("singular B_0 factor".into()))?;
    Ok((left * ri).scale(&-(q.clone() * t.clone())))
}

/// `A_t~ = -(A0~ + A1~ + A_inf~(q))`.
pub fn at_tilde<F: Field>(a0: &Mat2<F>, a1: &Mat2<F>, q: &F, th: &ThetaQ<F>) -> Result<Mat2<F>> {
    Ok(-(a0.clone() + a1.clone() + ainf_tilde(q, th)?))
}

/// Right-hand sides `d_q A_i~` of the q-Schlesinger equations for `i = 0, 1, t`.
pub fn qschles_tilde_rhs<F: Field>(a0: &Mat2<F>, a1: &Mat2<F>, t: &F, q: &F, th: &ThetaQ<F>) -> Result<[Mat2<F>; 3]> {
    let one = F::one();
    let id = Mat2::<F>::identity();
    let q1 = q.clone() - one.clone();
    let b0 = b0_tilde(a0, a1, t, q, th)?;
    let b0i = b0.try_inv().map_err(|_| Error::DegenerateSchlesinger("B_0 singular".into()))?;
    let ib0i = (id.clone() + b0.clone())
        .try_inv()
        .map_err(|_| Error::DegenerateSchlesinger("I + B_0 singular".into()))?;
    let at = at_tilde(a0, a1, q, th)?;
    let iqt = (q1.clone() * t.clone()).try_inv()?;
    let qt = q.clone() * t.clone();
    let k = kappa(t, th);
    let kq = kappa(&qt, th);
    let qt1 = qt.clone() - one.clone();
    let t1 = t.clone() - one.clone();
    let qib0 = id.scale(q) + b0.clone();

    let f0 = (b0.clone() * a0.clone() * b0i.clone() - a0.clone()).scale(&iqt);

    let c1 = t1.clone() * kq.clone() * (qt1.clone() * q.clone() * k.clone()).try_inv()?;
    let f1 = ((qib0.clone() * a1.clone() * ib0i.clone()).scale(&c1) - a1.clone()).scale(&iqt);

    let itt = (qt.clone() * th.tht.clone() * th.thtb.clone()).try_inv()?;
    let first = (id.clone() + b0.scale(&itt)).scale(&-(q1.sq() * t.clone()).try_inv()?);
    let second = (b0.clone() * a0.clone() * (id.scale(&itt) + b0i) + at).scale(&-iqt);
    let third_coef = -(t1 * (q.clone() * q1 * t.clone() * k).try_inv()?);
    let inner = id + ib0i.scale(&(kq * qt1.try_inv()?));
    let third = (qib0 * a1.clone()).scale(&third_coef) * inner;
    Ok([f0, f1, first + second + third])
}

/// `B~(x) = ((x - qt)(x I + B_0) / ((x - qt Theta_t)(x - qt Theta_bar_t)) - I) / ((q-1)t)`.
pub fn btilde<F: Field>(a0: &Mat2<F>, a1: &Mat2<F>, x: &F, t: &F, q: &F, th: &ThetaQ<F>) -> Result<Mat2<F>> {
    let qt = q.clone() * t.clone();
    let b0 = b0_tilde(a0, a1, t, q, th)?;
    let s = (x.clone() - qt.clone())
        * ((x.clone() - qt.clone() * th.tht.clone()) * (x.clone() - qt * th.thtb.clone())).try_inv()?;
    let iqt = ((q.clone() - F::one()) * t.clone()).try_inv()?;
    Ok(((Mat2::scalar(x.clone()) + b0).scale(&s) - Mat2::identity()).scale(&iqt))
}

/// Residuals of the q-Schlesinger right-hand sides against the Schlesinger
/// brackets `[A_i~, A_t~]/(i - t)`, and of `B~(x)` against `-A_t~/(x - t)`,
/// one [`SlopeFit`] per equation and per sample `x`.
pub fn qschles_limit_check<F: Field>(
    a0: &Mat2<F>,
    a1: &Mat2<F>,
    t: &F,
    theta: &ThetaDiff<F>,
    offsets: &[F],
    xs: &[F],
) -> Result<Vec<SlopeFit>> {
    let one = F::one();
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); 3 + xs.len()];
    for h in offsets {
        let q = one.clone() + h.clone();
        let th = ThetaQ::from_diff(theta, &q)?;
        let f = qschles_tilde_rhs(a0, a1, t, &q, &th)?;
        let at = at_tilde(a0, a1, &q, &th)?;
        let s0 = a0.commutator(&at).scale(&(-t.clone()).try_inv()?);
        let s1 = a1.commutator(&at).scale(&(one.clone() - t.clone()).try_inv()?);
        let st = -(s0.clone() + s1.clone());
        for (i, s) in [s0, s1, st].into_iter().enumerate() {
            rows[i].push((f[i].clone() - s).max_norm());
        }
        for (j, x) in xs.iter().enumerate() {
            let b = btilde(a0, a1, x, t, &q, &th)?;
            let lim = at.scale(&-(x.clone() - t.clone()).try_inv()?);
            rows[3 + j].push((b - lim).max_norm());
        }
    }
    let hs: Vec<f64> = offsets.iter().map(|h| h.magnitude()).collect();
    let mut labels = vec!["A0".to_string(), "A1".to_string(), "At".to_string()];
    labels.extend((0..xs.len()).map(|j| format!("Btilde(x_{j})")));
    Ok(labels
        .into_iter()
        .zip(rows)
        .map(|(label, residuals)| SlopeFit { label, offsets: hs.clone(), residuals })
        .collect())
}

/// `(R_1, R_2)` of the Hamiltonian form of the modified map at an exact point,
/// as rational functions of `q`:
/// `R_1 = ((f - y)/((q-1)t) - d_{q,Z} H)/(q-1)`, `R_2 = ((g - Z)/((q-1)t) + d_{q,y} H)/(q-1)`.
pub fn hamiltonian_remainders(
    y: &GaussRat,
    z: &GaussRat,
    t: &GaussRat,
    spec: &ConfluentSpectral,
) -> Result<(RatFunQ, RatFunQ)> {
    if z.is_zero() {
        return Err(Error::Precondition("Z = 0".into()));
    }
    let q = RatFunQ::q();
    let q1 = q_minus_one();
    let k = |v: &GaussRat| RatFunQ::constant(v.clone());
    let (yq, zq, tq) = (k(y), k(z), k(t));
    let th = spec.theta.map(|v| RatFunQ::constant(v.clone()));
    let (f, g) = modified_qp6_map(&yq, &zq, &tq, &q, &spec.big)?;
    let h = hamiltonian(&yq, &zq, &tq, &th)?;
    let dz_h = (hamiltonian(&yq, &(q.clone() * zq.clone()), &tq, &th)? - h.clone()).try_div(&(q1.clone() * zq.clone()))?;
    let dy_h = (hamiltonian(&(q.clone() * yq.clone()), &zq, &tq, &th)? - h).try_div(&(q1.clone() * yq.clone()))?;
    let iqt = (q1.clone() * tq).try_inv()?;
    let r1 = ((f - yq) * iqt.clone() - dz_h).try_div(&q1)?;
    let r2 = ((g - zq) * iqt + dy_h).try_div(&q1)?;
    Ok((r1, r2))
}

/// Roots of `sum c_k x^k` by Durand-Kerner iteration.
fn poly_roots(c: &[C]) -> Vec<C> {
    let mut c = c.to_vec();
    while c.last().is_some_and(|v| v.norm() == 0.0) {
        c.pop();
    }
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let monic: Vec<C> = c.iter().map(|v| v / lead).collect();
    let eval = |x: C| monic.iter().rev().fold(C::new(0.0, 0.0), |acc, v| acc * x + v);
    let seed = C::new(0.4, 0.9);
    let mut roots: Vec<C> = (0..n).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut den = C::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= roots[i] - roots[j];
                }
            }
            if den.norm() == 0.0 {
                continue;
            }
            let step = eval(roots[i]) / den;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-14 {
            break;
        }
    }
    roots
}
