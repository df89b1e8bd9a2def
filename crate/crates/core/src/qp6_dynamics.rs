//! The qP_VI map `(y, z) -> (f, g)`, its modified form in `(y, Z)`, the
//! biregular step on the surface blown up at eight points, and discrete
//! solutions.
//!
//! A point of the blown-up surface is either a point of `P1 x P1` away from
//! the eight centers, or a point `e` of the exceptional line over a center.
//! Near a center `(y0, z0)` the local coordinates are `u = y - y0` (or `1/y`
//! at infinity) and `v = z - z0` (or `1/z`), and `e = v/u` in `P1`.

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::arith::{Field, ToJson};
use crate::error::{Error, Result};
use crate::fuchsian_q::{ThetaQ, RESONANCE_BOUND};

/// A point of the projective line, canonically scaled.
#[derive(Clone, Debug, PartialEq)]
pub enum P1<F> {
    Fin(F),
    Inf,
}

impl<F: Field> P1<F> {
    pub fn zero() -> Self {
        P1::Fin(F::zero())
    }

    /// From homogeneous coordinates `[a : b]`.
    pub fn from_homogeneous(a: F, b: F) -> Result<Self> {
        if !b.is_zero() {
            Ok(P1::Fin(a * b.try_inv()?))
        } else if !a.is_zero() {
            Ok(P1::Inf)
        } else {
            Err(Error::Precondition("[0:0] is not a point".into()))
        }
    }

    pub fn homogeneous(&self) -> (F, F) {
        match self {
            P1::Fin(x) => (x.clone(), F::one()),
            P1::Inf => (F::one(), F::zero()),
        }
    }

    pub fn is_inf(&self) -> bool {
        matches!(self, P1::Inf)
    }

    pub fn finite(&self) -> Option<&F> {
        match self {
            P1::Fin(x) => Some(x),
            P1::Inf => None,
        }
    }

    fn is_zero_pt(&self) -> bool {
        match self {
            P1::Fin(x) => x.negligible(1.0),
            P1::Inf => false,
        }
    }

    /// `1/x` with `0 <-> inf`.
    pub fn recip(&self) -> Self {
        match self {
            P1::Inf => P1::zero(),
            P1::Fin(x) if x.negligible(1.0) => P1::Inf,
            P1::Fin(x) => P1::Fin(x.try_inv().expect("nonzero")),
        }
    }

    /// `k x` for `k != 0`.
    pub fn scale(&self, k: &F) -> Self {
        match self {
            P1::Inf => P1::Inf,
            P1::Fin(x) => P1::Fin(k.clone() * x.clone()),
        }
    }

    /// Equality, up to rounding for inexact fields.
    pub fn near(&self, other: &Self) -> bool {
        match (self, other) {
            (P1::Inf, P1::Inf) => true,
            (P1::Fin(a), P1::Fin(b)) => near(a, b),
            _ => false,
        }
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> P1<G> {
        match self {
            P1::Fin(x) => P1::Fin(f(x)),
            P1::Inf => P1::Inf,
        }
    }

    pub fn try_map<G: Field>(&self, f: impl Fn(&F) -> Result<G>) -> Result<P1<G>> {
        Ok(match self {
            P1::Fin(x) => P1::Fin(f(x)?),
            P1::Inf => P1::Inf,
        })
    }

    /// Distance in the chordal metric, for numeric comparisons.
    pub fn chordal(&self, other: &Self) -> f64 {
        let (a0, a1) = self.homogeneous();
        let (b0, b1) = other.homogeneous();
        let num = (a0.clone() * b1.clone() - a1.clone() * b0.clone()).magnitude();
        let na = (a0.magnitude().powi(2) + a1.magnitude().powi(2)).sqrt();
        let nb = (b0.magnitude().powi(2) + b1.magnitude().powi(2)).sqrt();
        num / (na * nb)
    }
}

fn near<F: Field>(a: &F, b: &F) -> bool {
    let scale = a.magnitude().max(b.magnitude()).max(1.0);
    (a.clone() - b.clone()).negligible(scale)
}

impl<F: Field + ToJson> ToJson for P1<F> {
    fn to_json(&self) -> Value {
        match self {
            P1::Fin(x) => x.to_json(),
            P1::Inf => json!("inf"),
        }
    }
}

/// A point of `P1 x P1`.
#[derive(Clone, Debug, PartialEq)]
pub struct P1P1Point<F> {
    pub y: P1<F>,
    pub z: P1<F>,
}

impl<F: Field> P1P1Point<F> {
    pub fn new(y: P1<F>, z: P1<F>) -> Self {
        P1P1Point { y, z }
    }

    pub fn finite(y: F, z: F) -> Self {
        P1P1Point { y: P1::Fin(y), z: P1::Fin(z) }
    }

    pub fn near(&self, o: &Self) -> bool {
        self.y.near(&o.y) && self.z.near(&o.z)
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> P1P1Point<G> {
        P1P1Point { y: self.y.map(&f), z: self.z.map(&f) }
    }
}

/// Labels of the eight blow-up centers, in serialization order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gamma {
    ZeroMinus,
    ZeroPlus,
    OneMinus,
    OnePlus,
    TMinus,
    TPlus,
    InfMinus,
    InfPlus,
}

impl Gamma {
    pub const ALL: [Gamma; 8] = [
        Gamma::ZeroMinus,
        Gamma::ZeroPlus,
        Gamma::OneMinus,
        Gamma::OnePlus,
        Gamma::TMinus,
        Gamma::TPlus,
        Gamma::InfMinus,
        Gamma::InfPlus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Gamma::ZeroMinus => "gamma_0^-",
            Gamma::ZeroPlus => "gamma_0^+",
            Gamma::OneMinus => "gamma_1^-",
            Gamma::OnePlus => "gamma_1^+",
            Gamma::TMinus => "gamma_t^-",
            Gamma::TPlus => "gamma_t^+",
            Gamma::InfMinus => "gamma_inf^-",
            Gamma::InfPlus => "gamma_inf^+",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Gamma::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown blow-up label {s:?}")))
    }
}

/// A point of the blown-up surface.
#[derive(Clone, Debug, PartialEq)]
pub enum SakaiPoint<F> {
    Base(P1P1Point<F>),
    Exc { tag: Gamma, e: P1<F> },
}

impl<F: Field> SakaiPoint<F> {
    pub fn base(y: F, z: F) -> Self {
        SakaiPoint::Base(P1P1Point::finite(y, z))
    }

    /// Image in `P1 x P1`; exceptional points project to their center.
    pub fn project(&self, t: &F, q: &F, th: &ThetaQ<F>) -> Result<P1P1Point<F>> {
        match self {
            SakaiPoint::Base(p) => Ok(p.clone()),
            SakaiPoint::Exc { tag, .. } => Ok(gamma_points(t, q, th)?[tag.index()].clone()),
        }
    }

    pub fn near(&self, o: &Self) -> bool {
        match (self, o) {
            (SakaiPoint::Base(a), SakaiPoint::Base(b)) => a.near(b),
            (SakaiPoint::Exc { tag: a, e: ea }, SakaiPoint::Exc { tag: b, e: eb }) => a == b && ea.near(eb),
            _ => false,
        }
    }

    /// Chordal distance between points of the same kind; infinite otherwise.
    pub fn distance(&self, o: &Self) -> f64 {
        match (self, o) {
            (SakaiPoint::Base(a), SakaiPoint::Base(b)) => a.y.chordal(&b.y).max(a.z.chordal(&b.z)),
            (SakaiPoint::Exc { tag: a, e: ea }, SakaiPoint::Exc { tag: b, e: eb }) if a == b => ea.chordal(eb),
            _ => f64::INFINITY,
        }
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> SakaiPoint<G> {
        match self {
            SakaiPoint::Base(p) => SakaiPoint::Base(p.map(f)),
            SakaiPoint::Exc { tag, e } => SakaiPoint::Exc { tag: *tag, e: e.map(f) },
        }
    }
}

impl<F: Field + ToJson> ToJson for SakaiPoint<F> {
    fn to_json(&self) -> Value {
        match self {
            SakaiPoint::Base(p) => json!({"y": p.y.to_json(), "z": p.z.to_json()}),
            SakaiPoint::Exc { tag, e } => json!({"exceptional": tag.name(), "e": e.to_json()}),
        }
    }
}

/// The eight centers at time `t`, in [`Gamma::ALL`] order.
pub fn gamma_points<F: Field>(t: &F, q: &F, th: &ThetaQ<F>) -> Result<[P1P1Point<F>; 8]> {
    let qi = q.try_inv()?;
    let f = |y: F, z: F| P1P1Point::finite(y, z);
    let tc = t.clone();
    Ok([
        f(F::zero(), tc.clone() * th.th0.clone() * qi.clone()),
        f(F::zero(), tc.clone() * th.th0b.clone() * qi.clone()),
        P1P1Point::new(P1::Fin(th.th1b.clone()), P1::Inf),
        P1P1Point::new(P1::Fin(th.th1.clone()), P1::Inf),
        f(tc.clone() * th.tht.clone(), F::zero()),
        f(tc * th.thtb.clone(), F::zero()),
        P1P1Point::new(P1::Inf, P1::Fin(th.thinfb.clone())),
        P1P1Point::new(P1::Inf, P1::Fin(th.thinf.clone() * qi)),
    ])
}

/// `f(y, z)` and `g(y, z)` from their numerators and denominators.
fn quotient<F: Field>(num: F, den: F, what: &str) -> Result<F> {
    let scale = num.magnitude().max(1.0);
    if den.negligible(scale) {
        if num.negligible(scale) {
            return Err(Error::BasePoint);
        }
        return Err(Error::SingularLocus(format!("pole of {what}")));
    }
    num.try_div(&den)
}

/// `g = (y - t Thetat)(y - t Thetatb) / (q z (y - Theta1)(y - Theta1b))`.
pub fn g_map<F: Field>(y: &F, z: &F, t: &F, q: &F, th: &ThetaQ<F>) -> Result<F> {
    let num = (y.clone() - t.clone() * th.tht.clone()) * (y.clone() - t.clone() * th.thtb.clone());
    let den = q.clone() * z.clone() * (y.clone() - th.th1.clone()) * (y.clone() - th.th1b.clone());
    quotient(num, den, "g")
}

/// `f = (g - t Theta0)(g - t Theta0b) / (y (g - Thinf/q)(g - Thinfb))`.
pub fn f_map<F: Field>(y: &F, g: &F, t: &F, q: &F, th: &ThetaQ<F>) -> Result<F> {
    let num = (g.clone() - t.clone() * th.th0.clone()) * (g.clone() - t.clone() * th.th0b.clone());
    let den = y.clone() * (g.clone() - th.thinf.clone() * q.try_inv()?) * (g.clone() - th.thinfb.clone());
    quotient(num, den, "f")
}

/// One step `(y, z) -> (f, g)` of qP_VI at finite input.
pub fn qp6_map<F: Field>(y: &F, z: &F, t: &F, q: &F, th: &ThetaQ<F>) -> Result<(F, F)> {
    let g = g_map(y, z, t, q, th)?;
    let f = f_map(y, &g, t, q, th)?;
    Ok((f, g))
}

/// Residuals of the two product relations between `(y, z)` at `t` and `(y1, z1)` at `qt`,
/// with denominators cleared.
pub fn qpvi_relations<F: Field>(y: &F, z: &F, y1: &F, z1: &F, t: &F, q: &F, th: &ThetaQ<F>) -> Result<(F, F)> {
    let r1 = y.clone() * y1.clone() * (z1.clone() - th.thinf.clone() * q.try_inv()?) * (z1.clone() - th.thinfb.clone())
        - (z1.clone() - t.clone() * th.th0.clone()) * (z1.clone() - t.clone() * th.th0b.clone());
    let r2 = q.clone() * z.clone() * z1.clone() * (y.clone() - th.th1.clone()) * (y.clone() - th.th1b.clone())
        - (y.clone() - t.clone() * th.tht.clone()) * (y.clone() - t.clone() * th.thtb.clone());
    Ok((r1, r2))
}

/// Coordinate systems related by [`change_coordinates`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordChange {
    /// `(y, z) -> (y, Z)`.
    ZToBigZ,
    /// `(y, Z) -> (y, z)`.
    BigZToZ,
    /// `(y, Z) -> (u, v)`, `v = y(y-1)(y-t) Z`.
    YZToUV,
    /// `(u, v) -> (y, Z)`.
    UVToYZ,
}

impl CoordChange {
    pub fn inverse(self) -> Self {
        match self {
            CoordChange::ZToBigZ => CoordChange::BigZToZ,
            CoordChange::BigZToZ => CoordChange::ZToBigZ,
            CoordChange::YZToUV => CoordChange::UVToYZ,
            CoordChange::UVToYZ => CoordChange::YZToUV,
        }
    }
}

fn nonzero<F: Field>(v: F, locus: &str) -> Result<F> {
    if v.negligible(1.0) {
        return Err(Error::SingularLocus(locus.into()));
    }
    Ok(v)
}

/// Exact change of variables between `(y, z)`, `(y, Z)` and `(u, v)`.
pub fn change_coordinates<F: Field>(p: (&F, &F), dir: CoordChange, t: &F, q: &F, th: &ThetaQ<F>) -> Result<(F, F)> {
    let (y, w) = (p.0.clone(), p.1.clone());
    let one = F::one();
    let qm1 = q.clone() - one.clone();
    let pt = (y.clone() - t.clone() * th.tht.clone()) * (y.clone() - t.clone() * th.thtb.clone());
    let d = (y.clone() - one.clone()) * (y.clone() - t.clone());
    match dir {
        CoordChange::ZToBigZ => {
            let den = nonzero(q.clone() * d * w, "z = 0 or y in {1, t}")?;
            let yd = nonzero(qm1 * y.clone(), "y = 0")?;
            let bz = (pt.try_div(&den)? - one).try_div(&yd)?;
            Ok((y, bz))
        }
        CoordChange::BigZToZ => {
            let wq = nonzero(one + qm1 * y.clone() * w, "1 + (q-1) y Z = 0")?;
            let den = nonzero(q.clone() * d * wq, "y in {1, t}")?;
            Ok((y, pt.try_div(&den)?))
        }
        CoordChange::YZToUV => {
            let v = y.clone() * d * w;
            Ok((y, v))
        }
        CoordChange::UVToYZ => {
            let den = nonzero(y.clone() * d, "u in {0, 1, t}")?;
            Ok((y, w.try_div(&den)?))
        }
    }
}

/// The qP_VI step in `(y, Z)` at `t`, giving `(y, Z)` at `qt`.
pub fn modified_qp6_map<F: Field>(y: &F, bz: &F, t: &F, q: &F, th: &ThetaQ<F>) -> Result<(F, F)> {
    let one = F::one();
    let qm1 = q.clone() - one.clone();
    let w = nonzero(one.clone() + qm1.clone() * y.clone() * bz.clone(), "1 + (q-1) y Z = 0")?;
    let p1 = (y.clone() - th.th1.clone()) * (y.clone() - th.th1b.clone());
    let d = (y.clone() - one.clone()) * (y.clone() - t.clone());
    let x = quotient(d.clone() * w.clone(), p1.clone(), "X")?;
    let qi = q.try_inv()?;
    let sy = quotient(
        (x.clone() - t.clone() * th.th0.clone()) * (x.clone() - t.clone() * th.th0b.clone()),
        y.clone() * (x.clone() - th.thinf.clone() * qi) * (x - th.thinfb.clone()),
        "sigma y",
    )?;
    let qt = q.clone() * t.clone();
    let num = (sy.clone() - qt.clone() * th.tht.clone()) * (sy.clone() - qt.clone() * th.thtb.clone()) * p1;
    let den = q.clone() * (sy.clone() - one.clone()) * (sy.clone() - qt) * d * w;
    let ratio = quotient(num, den, "sigma Z")?;
    let sz = (ratio - one).try_div(&nonzero(qm1 * sy.clone(), "sigma y = 0")?)?;
    Ok((sy, sz))
}

/// `z_2` on the orbit through `(Theta1b, z0)` at `t0`.
pub fn special_orbit_z2<F: Field>(t0: &F, z0: &F, q: &F, th: &ThetaQ<F>) -> Result<F> {
    let qt0 = q.clone() * t0.clone();
    let num = (th.th1.clone() - qt0.clone() * th.tht.clone()) * (th.th1.clone() - qt0 * th.thtb.clone());
    let a = (t0.clone() * th.th1.clone() - th.tht.clone()) * (t0.clone() * th.th1.clone() - th.thtb.clone());
    let b = q.clone()
        * th.th1.clone()
        * (th.th1.clone() - th.th1b.clone())
        * ((th.thinf.clone() * q.try_inv()? + th.thinfb.clone()) - t0.clone() * (th.th0.clone() + th.th0b.clone()));
    num.try_div(&(a.try_div(z0)? + b))
}

/// `q^k` for `|k| <= bound`, as `(k, q^k)`.
fn q_powers<F: Field>(q: &F, bound: i32) -> Result<Vec<(i32, F)>> {
    let qi = q.try_inv()?;
    let mut out = vec![(0, F::one())];
    let (mut up, mut down) = (F::one(), F::one());
    for k in 1..=bound {
        up = up * q.clone();
        down = down * qi.clone();
        out.push((k, up.clone()));
        out.push((-k, down.clone()));
    }
    Ok(out)
}

/// Whether `t` lies in `{Theta1^+-1 Thetat^+-1, Theta0^+-1 Thinf^+-1} q^k`, `|k| <= bound`.
pub fn in_sq<F: Field>(t: &F, q: &F, th: &ThetaQ<F>, bound: i32) -> Result<bool> {
    let pm = |x: &F| -> Result<[F; 2]> { Ok([x.clone(), x.try_inv()?]) };
    let mut base = Vec::new();
    for a in pm(&th.th1)? {
        for b in pm(&th.tht)? {
            base.push(a.clone() * b);
        }
    }
    for a in pm(&th.th0)? {
        for b in pm(&th.thinf)? {
            base.push(a.clone() * b);
        }
    }
    let powers = q_powers(q, bound)?;
    for s in &base {
        let r = t.try_div(s)?;
        if powers.iter().any(|(_, p)| near(&r, p)) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Checks that the step is biregular at `t`: the four center pairs are
/// nondegenerate and `t` avoids the guard set.
pub fn check_biregular<F: Field>(t: &F, q: &F, th: &ThetaQ<F>) -> Result<()> {
    let bad = |s: &str| Err(Error::NonBiregular(s.into()));
    if near(&th.th0, &th.th0b) {
        return bad("Theta_0^2 = 1");
    }
    if near(&th.th1, &th.th1b) {
        return bad("Theta_1^2 = 1");
    }
    if near(&th.tht, &th.thtb) {
        return bad("Theta_t^2 = 1");
    }
    if near(&th.thinf, &(q.clone() * th.thinfb.clone())) {
        return bad("Theta_inf^2 = q");
    }
    if t.negligible(1.0) {
        return bad("t = 0");
    }
    if in_sq(t, q, th, RESONANCE_BOUND)? {
        return bad("t in S_q");
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Zero,
    Pole,
    Other,
}

/// Point of an intermediate surface, in the orientation of the current stage.
#[derive(Clone, Debug)]
enum Loc<F> {
    Base(P1<F>, P1<F>),
    Exc(usize, P1<F>),
}

type Centers<F> = [(P1<F>, P1<F>); 8];

fn swap_loc<F: Field>(p: Loc<F>) -> Loc<F> {
    match p {
        Loc::Base(a, b) => Loc::Base(b, a),
        Loc::Exc(i, e) => Loc::Exc(i, e.recip()),
    }
}

fn swap_centers<F: Field>(c: &Centers<F>) -> Centers<F> {
    c.clone().map(|(a, b)| (b, a))
}

fn at_center() -> Error {
    Error::Precondition("base point given at a blow-up center; use its exceptional line".into())
}

/// `b -> b r(a)` with `r` monic of degree zero, zeros at the `Zero` centers
/// and poles at the `Pole` centers, lifted to the blown-up surfaces.
struct Elementary<F> {
    roles: [Role; 8],
    centers: Centers<F>,
}

impl<F: Field> Elementary<F> {
    fn a_of(&self, i: usize) -> Result<F> {
        self.centers[i].0.finite().cloned().ok_or_else(|| Error::Precondition("center at a = inf".into()))
    }

    fn roots(&self, role: Role) -> Result<Vec<(usize, F)>> {
        (0..8).filter(|&i| self.roles[i] == role).map(|i| Ok((i, self.a_of(i)?))).collect()
    }

    fn r(&self, a: &P1<F>) -> Result<F> {
        let Some(a) = a.finite() else { return Ok(F::one()) };
        let mut num = F::one();
        for (_, z) in self.roots(Role::Zero)? {
            num = num * (a.clone() - z);
        }
        let mut den = F::one();
        for (_, p) in self.roots(Role::Pole)? {
            den = den * (a.clone() - p);
        }
        num.try_div(&den)
    }

    /// `r(a) / (a - alpha_i)` at `a = alpha_i`.
    fn rho(&self, i: usize) -> Result<F> {
        let ai = self.a_of(i)?;
        let mut num = F::one();
        for (j, z) in self.roots(Role::Zero)? {
            if j != i {
                num = num * (ai.clone() - z);
            }
        }
        let mut den = F::one();
        for (_, p) in self.roots(Role::Pole)? {
            den = den * (ai.clone() - p);
        }
        num.try_div(&den)
    }

    /// `r(a) (a - pi_j)` at `a = pi_j`.
    fn sigma(&self, j: usize) -> Result<F> {
        let pj = self.a_of(j)?;
        let mut num = F::one();
        for (_, z) in self.roots(Role::Zero)? {
            num = num * (pj.clone() - z);
        }
        let mut den = F::one();
        for (k, p) in self.roots(Role::Pole)? {
            if k != j {
                den = den * (pj.clone() - p);
            }
        }
        num.try_div(&den)
    }

    /// Derivative of `r` in the local coordinate `u` at `a0`.
    fn dr(&self, a0: &P1<F>) -> Result<F> {
        let zeros = self.roots(Role::Zero)?;
        let poles = self.roots(Role::Pole)?;
        match a0 {
            P1::Inf => {
                let mut s = F::zero();
                for (_, p) in poles {
                    s = s + p;
                }
                for (_, z) in zeros {
                    s = s - z;
                }
                Ok(s)
            }
            P1::Fin(x) => {
                let mut s = F::zero();
                for (_, z) in zeros {
                    s = s + (x.clone() - z).try_inv()?;
                }
                for (_, p) in poles {
                    s = s - (x.clone() - p).try_inv()?;
                }
                Ok(self.r(a0)? * s)
            }
        }
    }

    fn target_centers(&self) -> Result<Centers<F>> {
        let mut out = self.centers.clone();
        for (i, slot) in out.iter_mut().enumerate() {
            let (a, b) = &self.centers[i];
            *slot = match self.roles[i] {
                Role::Zero => (a.clone(), P1::zero()),
                Role::Pole => (a.clone(), P1::Inf),
                Role::Other => (a.clone(), b.scale(&self.r(a)?)),
            };
        }
        Ok(out)
    }

    fn inverse(&self) -> Result<Self> {
        let roles = self.roles.map(|r| match r {
            Role::Zero => Role::Pole,
            Role::Pole => Role::Zero,
            Role::Other => Role::Other,
        });
        Ok(Elementary { roles, centers: self.target_centers()? })
    }

    fn apply(&self, p: Loc<F>) -> Result<Loc<F>> {
        match p {
            Loc::Base(a, b) => {
                for i in 0..8 {
                    let (ca, cb) = &self.centers[i];
                    if !a.near(ca) {
                        continue;
                    }
                    match self.roles[i] {
                        Role::Zero => {
                            return match &b {
                                P1::Inf => Err(at_center()),
                                P1::Fin(bv) => Ok(Loc::Exc(i, P1::Fin(bv.clone() * self.rho(i)?))),
                            };
                        }
                        Role::Pole => {
                            return match &b {
                                P1::Inf => Ok(Loc::Exc(i, P1::zero())),
                                P1::Fin(_) if b.is_zero_pt() => Err(at_center()),
                                P1::Fin(bv) => Ok(Loc::Exc(i, P1::Fin((bv.clone() * self.sigma(i)?).try_inv()?))),
                            };
                        }
                        Role::Other => {
                            if b.near(cb) {
                                return Err(at_center());
                            }
                        }
                    }
                }
                let r = self.r(&a)?;
                Ok(Loc::Base(a, b.scale(&r)))
            }
            Loc::Exc(i, e) => {
                if e.is_inf() {
                    return Ok(Loc::Exc(i, P1::Inf));
                }
                let (ca, cb) = &self.centers[i];
                let ev = e.finite().unwrap().clone();
                match self.roles[i] {
                    Role::Zero => {
                        if e.is_zero_pt() {
                            Ok(Loc::Base(ca.clone(), P1::Inf))
                        } else {
                            Ok(Loc::Base(ca.clone(), P1::Fin(self.rho(i)?.try_div(&ev)?)))
                        }
                    }
                    Role::Pole => Ok(Loc::Base(ca.clone(), P1::Fin(self.sigma(i)? * ev))),
                    Role::Other => {
                        let b0 = cb.finite().cloned().ok_or_else(|| Error::Precondition("center at b = inf".into()))?;
                        Ok(Loc::Exc(i, P1::Fin(self.r(ca)? * ev + b0 * self.dr(ca)?)))
                    }
                }
            }
        }
    }
}

/// `z -> 1/(q z)` on the second factor.
fn flip_z<F: Field>(p: Loc<F>, centers: &Centers<F>, q: &F) -> Result<Loc<F>> {
    let f = |z: &P1<F>| -> Result<P1<F>> {
        Ok(match z {
            P1::Inf => P1::zero(),
            P1::Fin(_) if z.is_zero_pt() => P1::Inf,
            P1::Fin(v) => P1::Fin((q.clone() * v.clone()).try_inv()?),
        })
    };
    Ok(match p {
        Loc::Base(y, z) => Loc::Base(y, f(&z)?),
        Loc::Exc(i, e) => {
            let z0 = &centers[i].1;
            let k = match z0 {
                P1::Inf => q.try_inv()?,
                P1::Fin(_) if z0.is_zero_pt() => q.clone(),
                P1::Fin(c) => -(q.clone() * c.sq()).try_inv()?,
            };
            Loc::Exc(i, e.scale(&k))
        }
    })
}

fn flip_z_centers<F: Field>(c: &Centers<F>, q: &F) -> Result<Centers<F>> {
    let mut out = c.clone();
    for (slot, (y, z)) in out.iter_mut().zip(c.iter()) {
        if let Loc::Base(y1, z1) = flip_z(Loc::Base(y.clone(), z.clone()), c, q)? {
            *slot = (y1, z1);
        }
    }
    Ok(out)
}

/// `y -> 1/y` on the first factor.
fn flip_y<F: Field>(p: Loc<F>, centers: &Centers<F>) -> Result<Loc<F>> {
    Ok(match p {
        Loc::Base(y, z) => Loc::Base(y.recip(), z),
        Loc::Exc(i, e) => {
            let y0 = &centers[i].0;
            match y0 {
                P1::Fin(c) if !y0.is_zero_pt() => Loc::Exc(i, e.scale(&(-c.sq()))),
                _ => Loc::Exc(i, e),
            }
        }
    })
}

fn flip_y_centers<F: Field>(c: &Centers<F>) -> Centers<F> {
    c.clone().map(|(y, z)| (y.recip(), z))
}

/// The four stages at time `t` and the relabelling onto the centers at `qt`.
struct Factorization<F> {
    e1: Elementary<F>,
    l2: Centers<F>,
    e3: Elementary<F>,
    l4: Centers<F>,
    q: F,
    /// Stage-four index to label at `qt`.
    perm: [usize; 8],
}

const ROLES1: [Role; 8] = [Role::Other, Role::Other, Role::Zero, Role::Zero, Role::Pole, Role::Pole, Role::Other, Role::Other];
const ROLES3: [Role; 8] = [Role::Pole, Role::Pole, Role::Other, Role::Other, Role::Other, Role::Other, Role::Zero, Role::Zero];

fn to_centers<F: Field>(g: &[P1P1Point<F>; 8]) -> Centers<F> {
    g.clone().map(|p| (p.y, p.z))
}

impl<F: Field> Factorization<F> {
    fn new(t: &F, q: &F, th: &ThetaQ<F>) -> Result<Self> {
        let l0 = to_centers(&gamma_points(t, q, th)?);
        let e1 = Elementary { roles: ROLES1, centers: l0 };
        let l1 = e1.target_centers()?;
        let l2 = flip_z_centers(&l1, q)?;
        let e3 = Elementary { roles: ROLES3, centers: swap_centers(&l2) };
        let l3 = swap_centers(&e3.target_centers()?);
        let l4 = flip_y_centers(&l3);
        let target = to_centers(&gamma_points(&(q.clone() * t.clone()), q, th)?);
        let mut perm = [0usize; 8];
        for (k, c) in l4.iter().enumerate() {
            perm[k] = target
                .iter()
                .position(|g| g.0.near(&c.0) && g.1.near(&c.1))
                .ok_or_else(|| Error::NonBiregular("blow-up centers do not match after the step".into()))?;
        }
        Ok(Factorization { e1, l2, e3, l4, q: q.clone(), perm })
    }

    fn forward(&self, p: Loc<F>) -> Result<Loc<F>> {
        let p = self.e1.apply(p)?;
        let l1 = self.e1.target_centers()?;
        let p = flip_z(p, &l1, &self.q)?;
        let p = swap_loc(self.e3.apply(swap_loc(p))?);
        let l3 = swap_centers(&self.e3.target_centers()?);
        let p = flip_y(p, &l3)?;
        Ok(match p {
            Loc::Exc(k, e) => Loc::Exc(self.perm[k], e),
            b => b,
        })
    }

    fn backward(&self, p: Loc<F>) -> Result<Loc<F>> {
        let p = match p {
            Loc::Exc(j, e) => Loc::Exc(self.perm.iter().position(|&x| x == j).expect("permutation"), e),
            b => b,
        };
        let p = flip_y(p, &self.l4)?;
        let p = swap_loc(self.e3.inverse()?.apply(swap_loc(p))?);
        let p = flip_z(p, &self.l2, &self.q)?;
        self.e1.inverse()?.apply(p)
    }
}

fn to_loc<F: Field>(p: &SakaiPoint<F>) -> Loc<F> {
    match p {
        SakaiPoint::Base(b) => Loc::Base(b.y.clone(), b.z.clone()),
        SakaiPoint::Exc { tag, e } => Loc::Exc(tag.index(), e.clone()),
    }
}

fn from_loc<F: Field>(p: Loc<F>) -> SakaiPoint<F> {
    match p {
        Loc::Base(y, z) => SakaiPoint::Base(P1P1Point { y, z }),
        Loc::Exc(i, e) => SakaiPoint::Exc { tag: Gamma::ALL[i], e },
    }
}

/// The biregular step from the surface at `t` to the one at `qt` (forward)
/// or `t/q` (backward), as two elementary transformations and two flips.
pub fn sakai_step<F: Field>(p: &SakaiPoint<F>, t: &F, q: &F, th: &ThetaQ<F>, dir: Direction) -> Result<SakaiPoint<F>> {
    check_biregular(t, q, th)?;
    let out = match dir {
        Direction::Forward => Factorization::new(t, q, th)?.forward(to_loc(p))?,
        Direction::Backward => Factorization::new(&t.try_div(q)?, q, th)?.backward(to_loc(p))?,
    };
    Ok(from_loc(out))
}

/// Initial data of a discrete solution.
#[derive(Clone, Debug, PartialEq)]
pub struct QP6State<F> {
    pub theta: ThetaQ<F>,
    pub q: F,
    pub t: F,
    pub point: SakaiPoint<F>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Exact,
    Numeric,
}

/// Chart in which a numeric orbit point is stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chart {
    /// Per coordinate: `false` for `x`, `true` for `1/x`.
    Affine { y_rec: bool, z_rec: bool },
    Exceptional(Gamma),
}

impl Chart {
    pub fn label(&self) -> String {
        match self {
            Chart::Affine { y_rec, z_rec } => {
                format!("{}{}", if *y_rec { "1/y" } else { "y" }, if *z_rec { ",1/z" } else { ",z" })
            }
            Chart::Exceptional(g) => format!("E({})", g.name()),
        }
    }
}

/// Threshold above which a coordinate moves to the reciprocal chart.
pub const CHART_SWITCH: f64 = 1e6;
/// Threshold below which it moves back.
pub const CHART_RETURN: f64 = 1e4;

fn chart_coord<F: Field>(x: &P1<F>, rec: bool) -> bool {
    match x {
        P1::Inf => true,
        P1::Fin(v) => {
            let m = v.magnitude();
            if rec {
                m >= CHART_RETURN
            } else {
                m > CHART_SWITCH
            }
        }
    }
}

/// One point of a discrete solution.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitPoint<F> {
    pub ell: i64,
    pub t: F,
    pub point: SakaiPoint<F>,
    pub chart: Chart,
    pub exact: bool,
}

impl<F: Field + ToJson> OrbitPoint<F> {
    /// JSON line `{ell, t, y, z, chart, exact}`; exceptional points report
    /// their center and add `e`.
    pub fn to_json_line(&self, q: &F, th: &ThetaQ<F>) -> Result<Value> {
        let p = self.point.project(&self.t, q, th)?;
        let mut v = json!({
            "ell": self.ell,
            "t": self.t.to_json(),
            "y": p.y.to_json(),
            "z": p.z.to_json(),
            "chart": self.chart.label(),
            "exact": self.exact,
        });
        if let SakaiPoint::Exc { e, .. } = &self.point {
            v["e"] = e.to_json();
        }
        Ok(v)
    }
}

fn next_chart<F: Field>(p: &SakaiPoint<F>, prev: Chart, hysteresis: bool) -> Chart {
    match p {
        SakaiPoint::Exc { tag, .. } => Chart::Exceptional(*tag),
        SakaiPoint::Base(b) => {
            let (py, pz) = match prev {
                Chart::Affine { y_rec, z_rec } if hysteresis => (y_rec, z_rec),
                _ => (false, false),
            };
            Chart::Affine { y_rec: chart_coord(&b.y, py), z_rec: chart_coord(&b.z, pz) }
        }
    }
}

fn orbit<F: Field>(
    init: &QP6State<F>,
    n_min: i64,
    n_max: i64,
    exact: bool,
    check: impl Fn(&SakaiPoint<F>) -> Result<()>,
) -> Result<Vec<OrbitPoint<F>>> {
    if n_min > 0 || n_max < 0 {
        return Err(Error::Precondition("range must contain 0".into()));
    }
    let QP6State { theta, q, t, point } = init;
    check_biregular(t, q, theta)?;
    let start = OrbitPoint { ell: 0, t: t.clone(), point: point.clone(), chart: next_chart(point, Chart::Affine { y_rec: false, z_rec: false }, false), exact };
    let mut fwd = vec![start.clone()];
    for ell in 0..n_max {
        let cur = fwd.last().unwrap();
        let p = sakai_step(&cur.point, &cur.t, q, theta, Direction::Forward)?;
        check(&p)?;
        let chart = next_chart(&p, cur.chart, !exact);
        fwd.push(OrbitPoint { ell: ell + 1, t: q.clone() * cur.t.clone(), point: p, chart, exact });
    }
    let mut bwd = Vec::new();
    let mut cur = start;
    for ell in (n_min..0).rev() {
        let p = sakai_step(&cur.point, &cur.t, q, theta, Direction::Backward)?;
        check(&p)?;
        let chart = next_chart(&p, cur.chart, !exact);
        cur = OrbitPoint { ell, t: cur.t.try_div(q)?, point: p, chart, exact };
        bwd.push(cur.clone());
    }
    bwd.reverse();
    bwd.extend(fwd);
    Ok(bwd)
}

fn point_complexity<F: Field>(p: &SakaiPoint<F>) -> usize {
    let c = |x: &P1<F>| x.finite().map_or(0, |v| v.complexity());
    match p {
        SakaiPoint::Base(b) => c(&b.y).max(c(&b.z)),
        SakaiPoint::Exc { e, .. } => c(e),
    }
}

/// Discrete solution on `l in [n_min, n_max]` over an exact field; every
/// iterate is reduced, and iterates whose degree in `q` exceeds `cap` fail.
pub fn discrete_solution<F: Field>(init: &QP6State<F>, n_min: i64, n_max: i64, cap: usize) -> Result<Vec<OrbitPoint<F>>> {
    if !F::EXACT {
        return Err(Error::Precondition("exact backend needs an exact field".into()));
    }
    orbit(init, n_min, n_max, true, |p| {
        let degree = point_complexity(p);
        if degree > cap {
            return Err(Error::DegreeCap { degree, cap });
        }
        Ok(())
    })
}

/// Discrete solution in floating point with chart bookkeeping.
pub fn discrete_solution_numeric(init: &QP6State<Complex64>, n_min: i64, n_max: i64) -> Result<Vec<OrbitPoint<Complex64>>> {
    orbit(init, n_min, n_max, false, |p| {
        let ok = |x: &P1<Complex64>| x.finite().is_none_or(|v| v.re.is_finite() && v.im.is_finite());
        let fine = match p {
            SakaiPoint::Base(b) => ok(&b.y) && ok(&b.z),
            SakaiPoint::Exc { e, .. } => ok(e),
        };
        if fine {
            Ok(())
        } else {
            Err(Error::NonBiregular("iterate overflowed".into()))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{gr, GaussRat, Ring};

    fn theta() -> ThetaQ<GaussRat> {
        ThetaQ::inverse(gr(3, 2), gr(5, 3), gr(7, 4), gr(9, 5)).unwrap()
    }

    #[test]
    fn interior_matches_map() {
        let (q, t, th) = (gr(2, 1), gr(3, 7), theta());
        let (y, z) = (gr(5, 1), gr(7, 1));
        let (f, g) = qp6_map(&y, &z, &t, &q, &th).unwrap();
        let p = sakai_step(&SakaiPoint::base(y.clone(), z.clone()), &t, &q, &th, Direction::Forward).unwrap();
        assert_eq!(p, SakaiPoint::base(f.clone(), g.clone()));
        let (r1, r2) = qpvi_relations(&y, &z, &f, &g, &t, &q, &th).unwrap();
        assert!(r1.is_zero() && r2.is_zero());
        let back = sakai_step(&p, &(q.clone() * t.clone()), &q, &th, Direction::Backward).unwrap();
        assert_eq!(back, SakaiPoint::base(y, z));
    }

    #[test]
    fn exceptional_round_trip() {
        let (q, t, th) = (gr(2, 1), gr(3, 7), theta());
        let qt = q.clone() * t.clone();
        for g in Gamma::ALL {
            for e in [P1::zero(), P1::Inf, P1::Fin(gr(4, 3))] {
                let p = SakaiPoint::Exc { tag: g, e };
                let f = sakai_step(&p, &t, &q, &th, Direction::Forward).unwrap();
                assert_eq!(sakai_step(&f, &qt, &q, &th, Direction::Backward).unwrap(), p);
                let b = sakai_step(&p, &t, &q, &th, Direction::Backward).unwrap();
                assert_eq!(sakai_step(&b, &(t.clone() / q.clone()), &q, &th, Direction::Forward).unwrap(), p);
            }
        }
    }

    #[test]
    fn special_orbit() {
        let (q, t, th) = (gr(2, 1), gr(3, 7), theta());
        let z0 = gr(11, 5);
        let p0 = SakaiPoint::base(th.th1b.clone(), z0.clone());
        let p1 = sakai_step(&p0, &t, &q, &th, Direction::Forward).unwrap();
        let qt = q.clone() * t.clone();
        let SakaiPoint::Exc { tag, .. } = &p1 else { panic!("expected exceptional point, got {p1:?}") };
        assert_eq!(p1.project(&qt, &q, &th).unwrap(), P1P1Point::new(P1::Fin(th.th1.clone()), P1::Inf));
        assert_eq!(*tag, Gamma::OnePlus);
        let p2 = sakai_step(&p1, &qt, &q, &th, Direction::Forward).unwrap();
        let SakaiPoint::Base(b) = p2 else { panic!() };
        assert_eq!(b.z, P1::Fin(special_orbit_z2(&t, &z0, &q, &th).unwrap()));
    }

    #[test]
    fn coordinate_changes() {
        let (q, t, th) = (gr(11, 10), gr(2, 1), theta());
        let (y, z) = (gr(3, 1), gr(1, 4));
        let (_, bz) = change_coordinates((&y, &z), CoordChange::ZToBigZ, &t, &q, &th).unwrap();
        let (_, z1) = change_coordinates((&y, &bz), CoordChange::BigZToZ, &t, &q, &th).unwrap();
        assert_eq!(z1, z);
        let (y1, g) = qp6_map(&y, &z, &t, &q, &th).unwrap();
        let qt = q.clone() * t.clone();
        let (_, bz1) = change_coordinates((&y1, &g), CoordChange::ZToBigZ, &qt, &q, &th).unwrap();
        assert_eq!(modified_qp6_map(&y, &bz, &t, &q, &th).unwrap(), (y1, bz1));
    }

    #[test]
    fn guards() {
        let (q, th) = (gr(2, 1), theta());
        let t = th.th1.clone() * th.tht.clone() * gr(8, 1);
        assert!(matches!(check_biregular(&t, &q, &th), Err(Error::NonBiregular(_))));
        let bad = ThetaQ::inverse(gr(1, 1), gr(5, 3), gr(7, 4), gr(9, 5)).unwrap();
        assert!(check_biregular(&gr(3, 7), &q, &bad).is_err());
        let y = th.tht.clone() * gr(3, 7);
        assert!(qp6_map(&y, &gr(1, 1), &gr(3, 7), &q, &th).unwrap().1.is_zero());
    }
}
