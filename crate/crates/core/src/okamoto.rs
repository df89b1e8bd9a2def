//! Spaces of initial conditions: the Hirzebruch surface `F2` with its four
//! charts, the eight base points of the sixth Painleve field and the blow-up
//! charts over them, the regularized vector field and its integration, the
//! q-analogues `P_t` (blow-up of `P1 x P1`) and `P~_t` (blow-up of `F2`) with
//! the correspondence `phi`, and intersection diagrams of the boundary.
//!
//! Blow-up charts over a center `(a, b)` of Hirzebruch chart `k`, with local
//! coordinates `U = c1 - a`, `V = c2 - b`, are chart 1: `(U, V/U)` and chart 2:
//! `(U/V, V)`. The exceptional line is `{U = 0}` in chart 1 and `{V = 0}` in
//! chart 2.

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::arith::{Field, GaussRat, Poly, RatFunQ, Ring, SeriesT, ToJson};
use crate::error::{Error, Result};
use crate::fuchsian_diff::ThetaDiff;
use crate::fuchsian_q::ThetaQ;
use crate::ode::{dopri_step, next_step, OdeOptions};
use crate::qp6_dynamics::{gamma_points, Direction, Gamma, P1P1Point, SakaiPoint, P1};

fn near<F: Field>(a: &F, b: &F) -> bool {
    let scale = a.magnitude().max(b.magnitude()).max(1.0);
    (a.clone() - b.clone()).negligible(scale)
}

fn small<F: Field>(a: &F) -> bool {
    a.negligible(1.0)
}

// ---------------------------------------------------------------------------
// Hirzebruch charts

/// A point of `F2` in one of its four affine charts.
#[derive(Clone, Debug, PartialEq)]
pub struct F2Point<F> {
    pub chart: u8,
    pub c1: F,
    pub c2: F,
}

impl<F: Field> F2Point<F> {
    pub fn new(chart: u8, c1: F, c2: F) -> Self {
        F2Point { chart, c1, c2 }
    }

    /// Base coordinate (`u` or `1/u`) and fiber coordinate as homogeneous `[w0 : w1]`
    /// relative to chart 0 (charts 0, 1) or chart 2 (charts 2, 3).
    fn split(&self) -> (bool, F, (F, F)) {
        let hi = self.chart >= 2;
        let w = if self.chart % 2 == 0 { (self.c2.clone(), F::one()) } else { (F::one(), self.c2.clone()) };
        (hi, self.c1.clone(), w)
    }

    fn join(chart: u8, b: F, w: (F, F)) -> Result<Self> {
        let (w0, w1) = w;
        let c2 = if chart % 2 == 0 {
            if small(&w1) {
                return Err(Error::Precondition(format!("point not in chart {chart}")));
            }
            w0.try_div(&w1)?
        } else {
            if small(&w0) {
                return Err(Error::Precondition(format!("point not in chart {chart}")));
            }
            w1.try_div(&w0)?
        };
        Ok(F2Point { chart, c1: b, c2 })
    }

    /// Coordinates in chart `to`; fails off the overlap.
    pub fn to_chart(&self, to: u8) -> Result<Self> {
        if to > 3 {
            return Err(Error::Precondition(format!("no chart {to}")));
        }
        let (hi, b, (w0, w1)) = self.split();
        if hi == (to >= 2) {
            return Self::join(to, b, (w0, w1));
        }
        if small(&b) {
            return Err(Error::Precondition(format!("point not in chart {to}")));
        }
        // v2 = v / u^2 and v = v2 / x^2 both read [w0 : w1 b^2].
        let nb = b.try_inv()?;
        Self::join(to, nb, (w0, w1 * b.sq()))
    }

    /// Fiber coordinate `u` as a point of `P1`.
    pub fn u(&self) -> P1<F> {
        if self.chart < 2 {
            P1::Fin(self.c1.clone())
        } else {
            P1::Fin(self.c1.clone()).recip()
        }
    }

    pub fn near(&self, o: &Self) -> bool {
        match o.to_chart(self.chart) {
            Ok(p) => near(&p.c1, &self.c1) && near(&p.c2, &self.c2),
            Err(_) => false,
        }
    }
}

// ---------------------------------------------------------------------------
// Base points and blow-up charts

/// Labels of the eight base points of `F2`, in serialization order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Beta {
    ZeroMinus,
    ZeroPlus,
    OneMinus,
    OnePlus,
    TMinus,
    TPlus,
    InfMinus,
    InfPlus,
}

impl Beta {
    pub const ALL: [Beta; 8] = [
        Beta::ZeroMinus,
        Beta::ZeroPlus,
        Beta::OneMinus,
        Beta::OnePlus,
        Beta::TMinus,
        Beta::TPlus,
        Beta::InfMinus,
        Beta::InfPlus,
    ];

    pub fn index(self) -> usize {
        Beta::ALL.iter().position(|b| *b == self).expect("listed")
    }

    pub fn name(self) -> &'static str {
        ["beta_0^-", "beta_0^+", "beta_1^-", "beta_1^+", "beta_t^-", "beta_t^+", "beta_inf^-", "beta_inf^+"][self.index()]
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Beta::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown base point {s:?}")))
    }

    /// The center of `P_t` with the same index.
    pub fn gamma(self) -> Gamma {
        Gamma::ALL[self.index()]
    }
}

/// A blow-up center `(a, b)` in Hirzebruch chart `chart`.
#[derive(Clone, Debug, PartialEq)]
pub struct Center<F> {
    pub chart: u8,
    pub a: F,
    pub b: F,
}

impl<F: Field> Center<F> {
    pub fn point(&self) -> F2Point<F> {
        F2Point::new(self.chart, self.a.clone(), self.b.clone())
    }
}

fn cond8bp<F: Field>(th: &ThetaDiff<F>) -> Result<()> {
    if small(&th.th0) || small(&th.th1) || small(&th.tht) {
        return Err(Error::FewerBasePoints("theta_0 theta_1 theta_t = 0".into()));
    }
    if near(&th.thinf, &F::one()) {
        return Err(Error::FewerBasePoints("theta_inf = 1".into()));
    }
    Ok(())
}

/// The eight base points of the sixth Painleve field on `F2` at time `t`.
pub fn base_points_diff<F: Field>(th: &ThetaDiff<F>, t: &F) -> Result<[Center<F>; 8]> {
    cond8bp(th)?;
    if small(t) || near(t, &F::one()) {
        return Err(Error::Precondition("t in {0, 1}".into()));
    }
    let h = F::from_ratio(1, 2);
    let t1 = t.clone() - F::one();
    let c = |chart: u8, a: F, b: F| Center { chart, a, b };
    let b0 = t.clone() * th.th0.clone() * h.clone();
    let b1 = t1.clone() * th.th1.clone() * h.clone();
    let bt = t.clone() * t1 * th.tht.clone() * h.clone();
    Ok([
        c(0, F::zero(), -b0.clone()),
        c(0, F::zero(), b0),
        c(0, F::one(), -b1.clone()),
        c(0, F::one(), b1),
        c(0, t.clone(), -bt.clone()),
        c(0, t.clone(), bt),
        c(2, F::zero(), -th.thinf.clone() * h.clone()),
        c(2, F::zero(), (th.thinf.clone() - F::from_i64(2)) * h),
    ])
}

/// `d/dt` of the centers `(a, b)` of [`base_points_diff`].
pub fn base_point_rates<F: Field>(th: &ThetaDiff<F>, t: &F) -> [(F, F); 8] {
    let h = F::from_ratio(1, 2);
    let z = F::zero;
    let db0 = th.th0.clone() * h.clone();
    let db1 = th.th1.clone() * h.clone();
    let dbt = (F::from_i64(2) * t.clone() - F::one()) * th.tht.clone() * h;
    [
        (z(), -db0.clone()),
        (z(), db0),
        (z(), -db1.clone()),
        (z(), db1),
        (F::one(), -dbt.clone()),
        (F::one(), dbt),
        (z(), z()),
        (z(), z()),
    ]
}

/// Chart of the blown-up surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OkaChart {
    Hirz(u8),
    Blowup { site: Beta, chart: u8 },
}

impl OkaChart {
    pub const ALL: [OkaChart; 20] = {
        let mut out = [OkaChart::Hirz(0); 20];
        let mut k = 0;
        while k < 4 {
            out[k] = OkaChart::Hirz(k as u8);
            k += 1;
        }
        let mut i = 0;
        while i < 8 {
            out[4 + 2 * i] = OkaChart::Blowup { site: Beta::ALL[i], chart: 1 };
            out[5 + 2 * i] = OkaChart::Blowup { site: Beta::ALL[i], chart: 2 };
            i += 1;
        }
        out
    };

    pub fn label(&self) -> String {
        match self {
            OkaChart::Hirz(k) => format!("u{k}v{k}"),
            OkaChart::Blowup { site, chart } => format!("{}:{}", site.name(), chart),
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        OkaChart::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| Error::Parse(format!("unknown chart {s:?}")))
    }
}

/// A point of `F2` blown up at eight centers, in one chart.
#[derive(Clone, Debug, PartialEq)]
pub struct OkaPoint<F> {
    pub chart: OkaChart,
    pub c1: F,
    pub c2: F,
}

impl<F: Field> OkaPoint<F> {
    pub fn new(chart: OkaChart, c1: F, c2: F) -> Self {
        OkaPoint { chart, c1, c2 }
    }

    pub fn hirz(p: F2Point<F>) -> Self {
        OkaPoint { chart: OkaChart::Hirz(p.chart), c1: p.c1, c2: p.c2 }
    }

    /// Whether the point lies on an exceptional line.
    pub fn on_exceptional(&self) -> bool {
        match self.chart {
            OkaChart::Hirz(_) => false,
            OkaChart::Blowup { chart: 1, .. } => small(&self.c1),
            OkaChart::Blowup { .. } => small(&self.c2),
        }
    }

    /// Image in `F2`; exceptional points project to their center.
    pub fn project(&self, centers: &[Center<F>; 8]) -> F2Point<F> {
        match self.chart {
            OkaChart::Hirz(k) => F2Point::new(k, self.c1.clone(), self.c2.clone()),
            OkaChart::Blowup { site, chart } => {
                let c = &centers[site.index()];
                let (du, dv) = if chart == 1 {
                    (self.c1.clone(), self.c2.clone() * self.c1.clone())
                } else {
                    (self.c1.clone() * self.c2.clone(), self.c2.clone())
                };
                F2Point::new(c.chart, c.a.clone() + du, c.b.clone() + dv)
            }
        }
    }

    /// Slope `V/U` on the exceptional line, as a point of `P1`.
    pub fn slope(&self) -> Option<(Beta, P1<F>)> {
        match self.chart {
            OkaChart::Blowup { site, chart: 1 } => Some((site, P1::Fin(self.c2.clone()))),
            OkaChart::Blowup { site, .. } => Some((site, P1::Fin(self.c1.clone()).recip())),
            OkaChart::Hirz(_) => None,
        }
    }

    /// The exceptional point with slope `w` over `site`.
    pub fn exceptional(site: Beta, w: P1<F>) -> Self {
        match w {
            P1::Fin(w) => OkaPoint::new(OkaChart::Blowup { site, chart: 1 }, F::zero(), w),
            P1::Inf => OkaPoint::new(OkaChart::Blowup { site, chart: 2 }, F::zero(), F::zero()),
        }
    }

    /// Coordinates in chart `to`; fails off the overlap.
    pub fn to_chart(&self, to: OkaChart, centers: &[Center<F>; 8]) -> Result<Self> {
        let off = || Error::Precondition(format!("point not in chart {}", to.label()));
        if let (OkaChart::Blowup { site: s1, .. }, OkaChart::Blowup { site: s2, chart: k2 }) = (self.chart, to) {
            if s1 == s2 && self.on_exceptional() {
                let (_, w) = self.slope().expect("blow-up chart");
                return match (k2, w) {
                    (1, P1::Fin(w)) => Ok(OkaPoint::new(to, F::zero(), w)),
                    (2, w) => match w.recip() {
                        P1::Fin(s) => Ok(OkaPoint::new(to, s, F::zero())),
                        P1::Inf => Err(off()),
                    },
                    _ => Err(off()),
                };
            }
        }
        if self.on_exceptional() {
            return Err(off());
        }
        let base = self.project(centers);
        match to {
            OkaChart::Hirz(k) => Ok(OkaPoint::hirz(base.to_chart(k)?)),
            OkaChart::Blowup { site, chart } => {
                let c = &centers[site.index()];
                let p = base.to_chart(c.chart)?;
                let du = p.c1 - c.a.clone();
                let dv = p.c2 - c.b.clone();
                if chart == 1 {
                    if small(&du) {
                        return Err(off());
                    }
                    let w = dv.try_div(&du)?;
                    Ok(OkaPoint::new(to, du, w))
                } else {
                    if small(&dv) {
                        return Err(off());
                    }
                    let s = du.try_div(&dv)?;
                    Ok(OkaPoint::new(to, s, dv))
                }
            }
        }
    }

    /// The Painleve unknown `y = u`.
    pub fn y(&self, centers: &[Center<F>; 8]) -> P1<F> {
        self.project(centers).u()
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> OkaPoint<G> {
        OkaPoint { chart: self.chart, c1: f(&self.c1), c2: f(&self.c2) }
    }
}

impl<F: Field + ToJson> ToJson for OkaPoint<F> {
    fn to_json(&self) -> Value {
        json!({"chart": self.chart.label(), "c1": self.c1.to_json(), "c2": self.c2.to_json()})
    }
}

// ---------------------------------------------------------------------------
// Regularized vector field

fn cst<F: Field>(c: F) -> Poly<F> {
    Poly::constant(c)
}

/// Numerator polynomials `A2, A1, A0` in `u` with `v' = (A2 v^2 + A1 v + A0) / D(u)`.
fn field_polys<F: Field>(t: &F, th: &ThetaDiff<F>) -> [Poly<F>; 3] {
    let u = Poly::<F>::x();
    let one = cst(F::one());
    let tc = cst(t.clone());
    let um1 = u.clone() - one.clone();
    let umt = u.clone() - tc.clone();
    let t1 = t.clone() - F::one();
    let sq = |x: &F| x.sq();
    let a2 = (um1.clone() * umt.clone() + u.clone() * umt.clone() + u.clone() * um1.clone()).scale(&F::from_i64(4));
    let prod = u.clone() * um1.clone() * umt.clone();
    let a1 = (prod.clone() * (um1.clone() + tc.clone())).scale(&F::from_i64(4));
    let th0 = sq(&th.th0);
    let th1 = sq(&th.th1);
    let tht = sq(&th.tht);
    let thi = th.thinf.clone() * (th.thinf.clone() - F::from_i64(2));
    let tt1 = t.clone() * t1.clone();
    let bracket = (um1.clone() - tc.clone()).scale(&(-th0.clone() * t.clone()))
        + (u.clone() + one.clone() - tc.clone()).scale(&(th1.clone() * t1.clone()))
        - (um1.clone() + tc.clone()).scale(&(tt1.clone() * tht.clone()));
    let a0 = (um1.clone() * umt.clone()).scale(&(-sq(t) * th0))
        - (u.clone() * umt.clone()).scale(&(sq(&t1) * th1))
        - (u.clone() * um1.clone()).scale(&(sq(&tt1) * tht))
        + prod.sq().scale(&thi)
        + prod * bracket;
    [a2, a1, a0]
}

/// `x^n p(1/x)`.
fn reversed<F: Field>(p: &Poly<F>, n: usize) -> Poly<F> {
    let mut c: Vec<F> = (0..=n).map(|k| p.coeff(k)).collect();
    c.reverse();
    Poly::new(c)
}

/// Numerators and denominators of the field in Hirzebruch chart `k`, with the
/// chart coordinates given as polynomials in an auxiliary variable.
fn hirz_parts<F: Field>(k: u8, c1: &Poly<F>, c2: &Poly<F>, t: &F, th: &ThetaDiff<F>) -> [(Poly<F>, Poly<F>); 2] {
    let [a2, a1, a0] = field_polys(t, th);
    let tt1 = t.clone() * (t.clone() - F::one());
    let one = cst(F::one());
    let two = F::from_i64(2);
    let four_tt1 = tt1.clone() * F::from_i64(4);
    match k {
        0 | 1 => {
            let u = c1;
            let d = (u.clone() * (u.clone() - one.clone()) * (u.clone() - cst(t.clone()))).scale(&four_tt1);
            let (e2, e1, e0) = (a2.compose(u), a1.compose(u), a0.compose(u));
            let uu1 = u.clone() * (u.clone() - one.clone());
            if k == 0 {
                let v = c2;
                let n1 = v.scale(&two) + uu1;
                let n2 = e2 * v.sq() + e1 * v.clone() + e0;
                [(n1, cst(tt1)), (n2, d)]
            } else {
                let w = c2;
                let n1 = cst(two) + uu1 * w.clone();
                let n2 = -(e2 + e1 * w.clone() + e0 * w.sq());
                [(n1, w.scale(&tt1)), (n2, d)]
            }
        }
        _ => {
            let x = c1;
            let (r2, r1, r0) = (reversed(&a2, 2).compose(x), reversed(&a1, 4).compose(x), reversed(&a0, 6).compose(x));
            let lin = (one.clone() - x.clone()) * (one.clone() - x.scale(t));
            let dd = x.clone() * lin.scale(&four_tt1);
            let eight = F::from_i64(8);
            if k == 2 {
                let v = c2;
                let inner = v.scale(&two) + one.clone() - x.clone();
                let n1 = -inner.clone();
                let n2 = r2 * v.sq() + r1 * v.clone() + r0 - (v.clone() * inner * lin).scale(&eight);
                [(n1, cst(tt1)), (n2, dd)]
            } else {
                let w = c2;
                let inner = cst(two) + (one.clone() - x.clone()) * w.clone();
                let n1 = -inner.clone();
                let n2 = -(r2 + r1 * w.clone() + r0 * w.sq() - (inner * lin).scale(&eight));
                [(n1, w.scale(&tt1)), (n2, dd)]
            }
        }
    }
}

fn poly_scale<F: Field>(p: &Poly<F>) -> f64 {
    p.coeffs().iter().map(|c| c.magnitude()).fold(0.0, f64::max)
}

fn negl<F: Field>(c: &F, scale: f64, rel: f64) -> bool {
    if F::EXACT {
        c.is_zero()
    } else {
        c.magnitude() <= rel * scale
    }
}

/// `p(e) / (e^extra q(e))` at `e = at`, cancelling the common power of `e`.
fn ratio_at<F: Field>(p: &Poly<F>, q: &Poly<F>, extra: usize, at: &F) -> Result<F> {
    let qs = poly_scale(q);
    let vq = q.coeffs().iter().position(|c| !negl(c, qs, 1e-12)).ok_or(Error::InfiniteField)?;
    let cut = vq + extra;
    let ps = poly_scale(p);
    if p.coeffs().iter().take(cut).any(|c| !negl(c, ps, 1e-8)) {
        return Err(Error::InfiniteField);
    }
    let ph = Poly::new(p.coeffs().iter().skip(cut).cloned().collect());
    let qh = Poly::new(q.coeffs()[vq..].to_vec());
    let den = qh.eval(at);
    let dscale = poly_scale(&qh) * (1.0 + at.magnitude()).powi(qh.deg0() as i32);
    if negl(&den, dscale, 1e-14) || den.is_zero() {
        return Err(Error::InfiniteField);
    }
    ph.eval(at).try_div(&den)
}

/// The regularized field `(c1', c2')` (with `t' = 1`) at a point of the
/// blown-up surface over time `t`.
pub fn vf_chart<F: Field>(p: &OkaPoint<F>, t: &F, th: &ThetaDiff<F>) -> Result<[F; 2]> {
    match p.chart {
        OkaChart::Hirz(k) => {
            let [(n1, d1), (n2, d2)] = hirz_parts(k, &cst(p.c1.clone()), &cst(p.c2.clone()), t, th);
            let z = F::zero();
            Ok([ratio_at(&n1, &d1, 0, &z)?, ratio_at(&n2, &d2, 0, &z)?])
        }
        OkaChart::Blowup { site, chart } => {
            let centers = base_points_diff(th, t)?;
            let c = &centers[site.index()];
            let (da, db) = base_point_rates(th, t)[site.index()].clone();
            let e = Poly::<F>::x();
            let (c1, c2) = if chart == 1 {
                (cst(c.a.clone()) + e.clone(), cst(c.b.clone()) + e.scale(&p.c2))
            } else {
                (cst(c.a.clone()) + e.scale(&p.c1), cst(c.b.clone()) + e.clone())
            };
            let [(n1, d1), (n2, d2)] = hirz_parts(c.chart, &c1, &c2, t, th);
            let m1 = n1 - d1.scale(&da);
            let m2 = n2 - d2.scale(&db);
            let dd = d1.clone() * d2.clone();
            if chart == 1 {
                let x = &p.c1;
                let w = cst(p.c2.clone());
                let fx = ratio_at(&m1, &d1, 0, x)?;
                let fw = ratio_at(&(m2 * d1 - w * m1 * d2), &dd, 1, x)?;
                Ok([fx, fw])
            } else {
                let v = &p.c2;
                let s = cst(p.c1.clone());
                let fs = ratio_at(&(m1 * d2.clone() - s * m2.clone() * d1), &dd, 1, v)?;
                let fv = ratio_at(&m2, &d2, 0, v)?;
                Ok([fs, fv])
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Integration

pub type C = Complex64;

/// One accepted node of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct OkaNode {
    pub t: C,
    pub point: OkaPoint<C>,
}

/// Chart whose coordinates and field are smallest at `p`, with its score.
fn best_chart(p: &OkaPoint<C>, t: C, th: &ThetaDiff<C>, centers: &[Center<C>; 8]) -> Option<(OkaPoint<C>, f64)> {
    let mut best: Option<(OkaPoint<C>, f64)> = None;
    for ch in OkaChart::ALL {
        let Ok(q) = p.to_chart(ch, centers) else { continue };
        let s = score(&q, t, th);
        if s.is_finite() && best.as_ref().is_none_or(|(_, b)| s < *b) {
            best = Some((q, s));
        }
    }
    best
}

fn score(p: &OkaPoint<C>, t: C, th: &ThetaDiff<C>) -> f64 {
    match vf_chart(p, &t, th) {
        Ok([f1, f2]) => [p.c1.norm(), p.c2.norm(), f1.norm(), f2.norm()].into_iter().fold(0.0, f64::max),
        Err(_) => f64::INFINITY,
    }
}

/// Integrates the regularized field from `(p0, t0)` to `t1` along the segment,
/// switching charts as coordinates or velocities grow.
pub fn integrate_okamoto(p0: &OkaPoint<C>, t0: C, t1: C, th: &ThetaDiff<C>, opts: &OdeOptions) -> Result<Vec<OkaNode>> {
    base_points_diff(th, &t0)?;
    let mut out = vec![OkaNode { t: t0, point: p0.clone() }];
    let dt = t1 - t0;
    if dt.norm() == 0.0 {
        return Ok(out);
    }
    let left = |t: C| Error::LeftOkamoto(format!("{t}"));
    let mut cur = p0.clone();
    let mut cur_score = score(&cur, t0, th);
    if !cur_score.is_finite() {
        let (q, s) = best_chart(&cur, t0, th, &base_points_diff(th, &t0)?).ok_or_else(|| left(t0))?;
        cur = q;
        cur_score = s;
    }
    let (mut s, mut h) = (0.0f64, opts.h0);
    let mut steps = 0;
    while s < 1.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Precondition("step budget exhausted".into()));
        }
        h = h.min(1.0 - s);
        let chart = cur.chart;
        let mut g = |sv: f64, y: &[C]| -> Result<Vec<C>> {
            let tv = t0 + dt * sv;
            let f = vf_chart(&OkaPoint::new(chart, y[0], y[1]), &tv, th)?;
            Ok(vec![f[0] * dt, f[1] * dt])
        };
        match dopri_step(&mut g, s, &[cur.c1, cur.c2], h, opts) {
            Ok((y5, err)) if err <= 1.0 => {
                s = if 1.0 - s - h < 1e-15 { 1.0 } else { s + h };
                let t = t0 + dt * s;
                cur = OkaPoint::new(chart, y5[0], y5[1]);
                cur_score = score(&cur, t, th);
                let centers = base_points_diff(th, &t)?;
                if let Some((q, sc)) = best_chart(&cur, t, th, &centers) {
                    if sc < 0.5 * cur_score {
                        cur = q;
                        cur_score = sc;
                    }
                } else if !cur_score.is_finite() {
                    return Err(left(t));
                }
                out.push(OkaNode { t, point: cur.clone() });
                h = next_step(h, err);
            }
            Ok((_, err)) => h = next_step(h, err),
            Err(Error::InfiniteField) | Err(Error::DivisionByZero) => h *= 0.25,
            Err(e) => return Err(e),
        }
        if h < 1e-14 {
            let t = t0 + dt * s;
            let (q, sc) = best_chart(&cur, t, th, &base_points_diff(th, &t)?).ok_or_else(|| left(t))?;
            if q.chart == cur.chart {
                return Err(left(t));
            }
            cur = q;
            cur_score = sc;
            h = opts.h0.min(1e-6);
        }
    }
    let _ = cur_score;
    Ok(out)
}

/// CSV export: `t_re,t_im,chart,c1_re,c1_im,c2_re,c2_im`.
pub fn trajectory_csv(nodes: &[OkaNode]) -> String {
    let mut s = String::from("t_re,t_im,chart,c1_re,c1_im,c2_re,c2_im\n");
    for n in nodes {
        let p = &n.point;
        s.push_str(&format!(
            "{:.17e},{:.17e},{},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            n.t.re,
            n.t.im,
            p.chart.label(),
            p.c1.re,
            p.c1.im,
            p.c2.re,
            p.c2.im
        ));
    }
    s
}

/// Taylor coefficients `c_1..=c_order` of `y` at `t0` for the trajectory through
/// `p0`, by Cauchy's formula on the circle `|t - t0| = r` with `n` nodes.
pub fn taylor_coefficients_y(p0: &OkaPoint<C>, t0: C, th: &ThetaDiff<C>, r: f64, n: usize, order: usize, opts: &OdeOptions) -> Result<Vec<C>> {
    let mut ys = Vec::with_capacity(n);
    for k in 0..n {
        let phase = C::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64);
        let nodes = integrate_okamoto(p0, t0, t0 + phase * r, th, opts)?;
        let last = nodes.last().expect("nonempty");
        let centers = base_points_diff(th, &last.t)?;
        match last.point.y(&centers) {
            P1::Fin(y) => ys.push((phase, y)),
            P1::Inf => return Err(Error::Precondition("pole of y on the circle".into())),
        }
    }
    Ok((1..=order)
        .map(|m| {
            let acc: C = ys.iter().map(|(ph, y)| y * ph.powi(-(m as i32))).sum();
            acc / (n as f64 * r.powi(m as i32))
        })
        .collect())
}

/// `(u, v) = (y, y (y - 1)(y - t) Z)`.
pub fn uv_from_yz<F: Field>(y: &F, z: &F, t: &F) -> F2Point<F> {
    let v = y.clone() * (y.clone() - F::one()) * (y.clone() - t.clone()) * z.clone();
    F2Point::new(0, y.clone(), v)
}

/// Inverse of [`uv_from_yz`] off `{u = 0, 1, t}`.
pub fn yz_from_uv<F: Field>(p: &F2Point<F>, t: &F) -> Result<(F, F)> {
    let p = p.to_chart(0)?;
    let y = p.c1;
    let d = y.clone() * (y.clone() - F::one()) * (y.clone() - t.clone());
    Ok((y.clone(), p.c2.try_div(&d)?))
}

// ---------------------------------------------------------------------------
// q-analogues

/// Checks `Theta_i^2 != 1` (`Theta_inf^2 != q`) and the four conditions on `t`.
pub fn check_q_okamoto<F: Field>(t: &F, q: &F, th: &ThetaQ<F>) -> Result<()> {
    let bad = |s: &str| Err(Error::NonBiregular(s.into()));
    if near(&th.th0, &th.th0b) || near(&th.th1, &th.th1b) || near(&th.tht, &th.thtb) {
        return bad("Theta_i^2 = 1");
    }
    if near(&th.thinf, &(q.clone() * th.thinfb.clone())) {
        return bad("Theta_inf^2 = q");
    }
    if small(t) {
        return bad("t = 0");
    }
    let qi = q.try_inv()?;
    for th0 in [&th.th0, &th.th0b] {
        if near(t, &(th0.clone() * th.thinf.clone() * qi.clone())) || near(t, &(th0.clone() * th.thinfb.clone())) {
            return bad("t = Theta_0^(+-1) Theta_inf^(+-)");
        }
    }
    for tht in [&th.tht, &th.thtb] {
        if near(t, &(tht.clone() * th.th1.clone())) || near(t, &(tht.clone() * th.th1b.clone())) {
            return bad("t = Theta_t^(+-1) Theta_1^(+-1)");
        }
    }
    Ok(())
}

/// The eight centers of `P~_t`, without parameter checks.
pub fn beta_points_q<F: Field>(t: &F, q: &F, th: &ThetaQ<F>) -> Result<[Center<F>; 8]> {
    let one = F::one();
    let iq1 = (q.clone() - one.clone()).try_inv()?;
    let c = |chart: u8, a: F, b: F| Center { chart, a, b };
    let b0 = |th0: &F| t.clone() * (th0.clone() - one.clone()) * iq1.clone();
    let b1 = |th1: &F| (th1.clone() - one.clone()) * (t.clone() - th1.clone()) * iq1.clone();
    let bt = |tht: &F| -t.clone() * (tht.clone() - one.clone()) * (t.clone() * tht.clone() - one.clone()) * iq1.clone();
    Ok([
        c(0, F::zero(), b0(&th.th0b)),
        c(0, F::zero(), b0(&th.th0)),
        c(0, th.th1b.clone(), b1(&th.th1b)),
        c(0, th.th1.clone(), b1(&th.th1)),
        c(0, t.clone() * th.tht.clone(), bt(&th.tht)),
        c(0, t.clone() * th.thtb.clone(), bt(&th.thtb)),
        c(2, F::zero(), (th.thinfb.clone() - one) * iq1.clone()),
        c(2, F::zero(), (th.thinf.clone() - q.clone()) * (q.clone() * (q.clone() - F::one())).try_inv()?),
    ])
}

/// The centers `gamma` of `P_t` and `beta` of `P~_t`.
pub fn base_points_q<F: Field>(t: &F, q: &F, th: &ThetaQ<F>) -> Result<([P1P1Point<F>; 8], [Center<F>; 8])> {
    check_q_okamoto(t, q, th)?;
    Ok((gamma_points(t, q, th)?, beta_points_q(t, q, th)?))
}

/// The centers of `P~_t` for `Theta = 1 + (q-1) theta / 2`, as rational
/// functions of `q`.
pub fn omega_base_points(theta: &ThetaDiff<GaussRat>, t: &GaussRat) -> Result<[Center<RatFunQ>; 8]> {
    let th = ThetaQ::from_diff(&theta.map(|x| RatFunQ::constant(x.clone())), &RatFunQ::q())?;
    beta_points_q(&RatFunQ::constant(t.clone()), &RatFunQ::q(), &th)
}

/// Evaluation of [`omega_base_points`] at `q0`.
pub fn omega_base_points_at(theta: &ThetaDiff<GaussRat>, t: &GaussRat, q0: &GaussRat) -> Result<[Center<GaussRat>; 8]> {
    let pts = omega_base_points(theta, t)?;
    let ev = |c: &Center<RatFunQ>| -> Result<Center<GaussRat>> { Ok(Center { chart: c.chart, a: c.a.eval(q0)?, b: c.b.eval(q0)? }) };
    let v: Vec<Center<GaussRat>> = pts.iter().map(ev).collect::<Result<_>>()?;
    Ok(v.try_into().expect("eight"))
}

/// `P(y) = (y - t Thetat)(y - t Thetatb)` and `d(y) = (y - 1)(y - t)` as polynomials.
fn pd_polys<F: Field>(t: &F, th: &ThetaQ<F>) -> (Poly<F>, Poly<F>) {
    let p = Poly::linear_root(t.clone() * th.tht.clone()) * Poly::linear_root(t.clone() * th.thtb.clone());
    let d = Poly::linear_root(F::one()) * Poly::linear_root(t.clone());
    (p, d)
}

fn ser<F: Field>(x: &F) -> SeriesT<F> {
    SeriesT::constant(x.clone())
}

fn eps<F: Field>() -> SeriesT<F> {
    SeriesT::variable(F::zero(), 2)
}

/// Local arc `(du, dv)` through a center in direction `e`.
fn arc<F: Field>(e: &P1<F>) -> (SeriesT<F>, SeriesT<F>) {
    match e {
        P1::Fin(e) => (eps(), eps::<F>() * ser(e)),
        P1::Inf => (SeriesT::constant(F::zero()), eps()),
    }
}

/// Slope `dv/du` at the origin of an arc with vanishing constant terms.
fn arc_slope<F: Field>(du: &SeriesT<F>, dv: &SeriesT<F>) -> Result<P1<F>> {
    let (a, b) = (du.coeff(1), dv.coeff(1));
    if small(&a) && small(&b) {
        return Err(Error::Precondition("degenerate arc".into()));
    }
    P1::from_homogeneous(b, a)
}

/// A point of either q-surface.
#[derive(Clone, Debug, PartialEq)]
pub enum QSurfacePoint<F> {
    /// A point of `P_t`.
    Sakai(SakaiPoint<F>),
    /// A point of `P~_t`.
    Modified(OkaPoint<F>),
}

fn match_center<F: Field>(p: &F2Point<F>, centers: &[Center<F>; 8]) -> Option<Beta> {
    Beta::ALL.into_iter().find(|b| centers[b.index()].point().near(p))
}

fn match_gamma<F: Field>(p: &P1P1Point<F>, gammas: &[P1P1Point<F>; 8]) -> Option<Gamma> {
    Gamma::ALL.into_iter().find(|g| gammas[g.index()].near(p))
}

/// `phi : P_t -> P~_t`.
pub fn phi<F: Field>(p: &SakaiPoint<F>, t: &F, q: &F, th: &ThetaQ<F>) -> Result<OkaPoint<F>> {
    let (gammas, betas) = base_points_q(t, q, th)?;
    let (pp, dd) = pd_polys(t, th);
    let qq1 = q.clone() * (q.clone() - F::one());
    let one = F::one();
    match p {
        SakaiPoint::Base(b) => {
            if match_gamma(b, &gammas).is_some() {
                return Err(Error::SingularLocus("blow-up center; give the exceptional coordinate".into()));
            }
            let zi = b.z.recip();
            match &b.y {
                P1::Fin(y) => {
                    for (site, y0) in [(Beta::TMinus, t.clone() * th.tht.clone()), (Beta::TPlus, t.clone() * th.thtb.clone())] {
                        if near(y, &y0) {
                            let zinv = zi.finite().cloned().expect("z != 0 off the center");
                            let w = (pp.derivative().eval(&y0) * zinv - q.clone() * dd.derivative().eval(&y0)).try_div(&qq1)?;
                            return Ok(OkaPoint::exceptional(site, P1::Fin(w)));
                        }
                    }
                    match zi {
                        P1::Inf => Ok(OkaPoint::hirz(F2Point::new(1, y.clone(), F::zero()))),
                        P1::Fin(zinv) => {
                            let v = (pp.eval(y) * zinv - q.clone() * dd.eval(y)).try_div(&qq1)?;
                            Ok(OkaPoint::hirz(F2Point::new(0, y.clone(), v)))
                        }
                    }
                }
                P1::Inf => match zi {
                    P1::Inf => Ok(OkaPoint::hirz(F2Point::new(3, F::zero(), F::zero()))),
                    P1::Fin(zinv) => {
                        let v2 = (zinv - q.clone()).try_div(&qq1)?;
                        Ok(OkaPoint::hirz(F2Point::new(2, F::zero(), v2)))
                    }
                },
            }
        }
        SakaiPoint::Exc { tag, e } => {
            let center = gammas[tag.index()].clone();
            match tag {
                Gamma::TMinus | Gamma::TPlus => {
                    let site = Beta::ALL[tag.index()];
                    let y0 = center.y.finite().cloned().expect("finite");
                    let other = if *tag == Gamma::TMinus { t.clone() * th.thtb.clone() } else { t.clone() * th.tht.clone() };
                    match e {
                        P1::Inf => Ok(OkaPoint::exceptional(site, P1::Inf)),
                        P1::Fin(ev) if small(ev) => Ok(OkaPoint::hirz(F2Point::new(1, y0, F::zero()))),
                        P1::Fin(ev) => {
                            let v = ((y0.clone() - other).try_div(ev)? - q.clone() * dd.eval(&y0)).try_div(&qq1)?;
                            Ok(OkaPoint::hirz(F2Point::new(0, y0, v)))
                        }
                    }
                }
                _ => {
                    let (du, dv) = arc(e);
                    let sq = ser(q);
                    let sqq1 = ser(&qq1);
                    let (c1, c2, chart) = match (&center.y, &center.z) {
                        (P1::Fin(y0), P1::Fin(z0)) => {
                            let y = ser(y0) + du;
                            let z = ser(z0) + dv;
                            let v = (pp.eval_in(&y, ser) * z.try_inv()? - sq * dd.eval_in(&y, ser)).try_div(&sqq1)?;
                            (y, v, 0u8)
                        }
                        (P1::Fin(y0), P1::Inf) => {
                            let y = ser(y0) + du;
                            let v = (pp.eval_in(&y, ser) * dv - sq * dd.eval_in(&y, ser)).try_div(&sqq1)?;
                            (y, v, 0u8)
                        }
                        (P1::Inf, P1::Fin(z0)) => {
                            let x = du;
                            let z = ser(z0) + dv;
                            let ph = reversed(&pp, 2).eval_in(&x, ser);
                            let dh = reversed(&dd, 2).eval_in(&x, ser);
                            let v2 = (ph * z.try_inv()? - sq * dh).try_div(&sqq1)?;
                            (x, v2, 2u8)
                        }
                        _ => return Err(Error::Precondition("center at (inf, inf)".into())),
                    };
                    let image = F2Point::new(chart, c1.coeff(0), c2.coeff(0));
                    let site = match_center(&image, &betas).ok_or_else(|| Error::Precondition("image is not a center".into()))?;
                    let c = &betas[site.index()];
                    let w = arc_slope(&(c1 - ser(&c.a)), &(c2 - ser(&c.b)))?;
                    let _ = one;
                    Ok(OkaPoint::exceptional(site, w))
                }
            }
        }
    }
}

/// `psi = phi^(-1) : P~_t -> P_t`.
pub fn psi<F: Field>(p: &OkaPoint<F>, t: &F, q: &F, th: &ThetaQ<F>) -> Result<SakaiPoint<F>> {
    let (gammas, betas) = base_points_q(t, q, th)?;
    let (pp, dd) = pd_polys(t, th);
    let qm1 = q.clone() - F::one();
    let tsites = [(Beta::TMinus, Gamma::TMinus, t.clone() * th.tht.clone(), t.clone() * th.thtb.clone()), (Beta::TPlus, Gamma::TPlus, t.clone() * th.thtb.clone(), t.clone() * th.tht.clone())];
    if p.on_exceptional() {
        let (site, w) = p.slope().expect("blow-up chart");
        let c = &betas[site.index()];
        if let Some((_, g, y0, other)) = tsites.iter().find(|s| s.0 == site) {
            return Ok(match w {
                P1::Inf => SakaiPoint::Exc { tag: *g, e: P1::Inf },
                P1::Fin(w) => {
                    let den = q.clone() * (dd.derivative().eval(y0) + qm1.clone() * w);
                    let z = P1::from_homogeneous(y0.clone() - other.clone(), den)?;
                    SakaiPoint::Base(P1P1Point::new(P1::Fin(y0.clone()), z))
                }
            });
        }
        let (du, dv) = arc(&w);
        let sq = ser(q);
        let sqm1 = ser(&qm1);
        let (u_loc, v_loc, center) = if c.chart == 0 {
            let u = ser(&c.a) + du.clone();
            let v = ser(&c.b) + dv;
            let num = pp.eval_in(&u, ser);
            let den = sq * (dd.eval_in(&u, ser) + sqm1 * v);
            if small(&den.coeff(0)) {
                let zeta = den.try_div(&num)?;
                (du, zeta, P1P1Point::new(P1::Fin(c.a.clone()), P1::Inf))
            } else {
                let z = num.try_div(&den)?;
                let z0 = z.coeff(0);
                (du, z - ser(&z0), P1P1Point::new(P1::Fin(c.a.clone()), P1::Fin(z0)))
            }
        } else {
            let x = du.clone();
            let v2 = ser(&c.b) + dv;
            let num = reversed(&pp, 2).eval_in(&x, ser);
            let den = sq * (reversed(&dd, 2).eval_in(&x, ser) + sqm1 * v2);
            let z = num.try_div(&den)?;
            let z0 = z.coeff(0);
            (du, z - ser(&z0), P1P1Point::new(P1::Inf, P1::Fin(z0)))
        };
        let tag = match_gamma(&center, &gammas).ok_or_else(|| Error::Precondition("image is not a center".into()))?;
        let e = arc_slope(&u_loc, &v_loc)?;
        return Ok(SakaiPoint::Exc { tag, e });
    }
    let base = p.project(&betas);
    if match_center(&base, &betas).is_some() {
        return Err(Error::SingularLocus("blow-up center; give the exceptional coordinate".into()));
    }
    let (u, fiber_inf) = match base.to_chart(0).or_else(|_| base.to_chart(1)) {
        Ok(b) if b.chart == 0 => (P1::Fin(b.c1), false),
        Ok(b) => {
            debug_assert!(small(&b.c2));
            (P1::Fin(b.c1), true)
        }
        Err(_) => (P1::Inf, false),
    };
    match u {
        P1::Fin(u) => {
            if fiber_inf {
                for (_, g, y0, _) in &tsites {
                    if near(&u, y0) {
                        return Ok(SakaiPoint::Exc { tag: *g, e: P1::zero() });
                    }
                }
                return Ok(SakaiPoint::Base(P1P1Point::new(P1::Fin(u), P1::zero())));
            }
            let v = base.to_chart(0)?.c2;
            let den = dd.eval(&u) + qm1 * v;
            for (_, g, y0, other) in &tsites {
                if near(&u, y0) {
                    let e = P1::from_homogeneous(y0.clone() - other.clone(), q.clone() * den)?;
                    return Ok(SakaiPoint::Exc { tag: *g, e });
                }
            }
            let z = P1::from_homogeneous(pp.eval(&u), q.clone() * den)?;
            Ok(SakaiPoint::Base(P1P1Point::new(P1::Fin(u), z)))
        }
        P1::Inf => {
            let z = match base.to_chart(2) {
                Ok(b) => P1::from_homogeneous(F::one(), q.clone() * (F::one() + qm1 * b.c2))?,
                Err(_) => P1::zero(),
            };
            Ok(SakaiPoint::Base(P1P1Point::new(P1::Inf, z)))
        }
    }
}

/// `phi` (`Forward`, on points of `P_t`) or `psi` (`Backward`, on points of `P~_t`).
pub fn phi_map<F: Field>(p: &QSurfacePoint<F>, dir: Direction, t: &F, q: &F, th: &ThetaQ<F>) -> Result<QSurfacePoint<F>> {
    match (p, dir) {
        (QSurfacePoint::Sakai(s), Direction::Forward) => Ok(QSurfacePoint::Modified(phi(s, t, q, th)?)),
        (QSurfacePoint::Modified(m), Direction::Backward) => Ok(QSurfacePoint::Sakai(psi(m, t, q, th)?)),
        _ => Err(Error::Precondition("direction does not match the surface of the point".into())),
    }
}

// ---------------------------------------------------------------------------
// Divisor classes

/// The minimal surface before blowing up.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Surface {
    /// `P1 x P1`, basis `(H1, H2)` with `H1 = {y = c}`, `H2 = {z = c}`.
    F0,
    /// `F2`, basis `(F, S)`: fiber and a section disjoint from the `(-2)`-curve.
    F2,
}

/// An integer class `base . (B1, B2) + sum exc_i E_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivisorClass {
    pub surface: Surface,
    pub base: [i64; 2],
    pub exc: [i64; 8],
}

impl DivisorClass {
    pub fn new(surface: Surface, base: [i64; 2]) -> Self {
        DivisorClass { surface, base, exc: [0; 8] }
    }

    pub fn exceptional(surface: Surface, i: usize) -> Self {
        let mut exc = [0; 8];
        exc[i] = 1;
        DivisorClass { surface, base: [0, 0], exc }
    }

    fn gram(&self) -> [[i64; 2]; 2] {
        match self.surface {
            Surface::F0 => [[0, 1], [1, 0]],
            Surface::F2 => [[0, 1], [1, 2]],
        }
    }

    pub fn pair(&self, o: &Self) -> Result<i64> {
        if self.surface != o.surface {
            return Err(Error::Precondition("classes on different surfaces".into()));
        }
        let g = self.gram();
        let mut s = 0;
        for i in 0..2 {
            for j in 0..2 {
                s += self.base[i] * g[i][j] * o.base[j];
            }
        }
        s -= self.exc.iter().zip(&o.exc).map(|(a, b)| a * b).sum::<i64>();
        Ok(s)
    }

    pub fn self_intersection(&self) -> i64 {
        self.pair(self).expect("same surface")
    }

    /// Strict transform of a curve through the centers `through` (multiplicity one).
    pub fn strict(&self, through: &[usize]) -> Self {
        let mut c = self.clone();
        for &i in through {
            c.exc[i] -= 1;
        }
        c
    }
}

impl std::ops::Add for DivisorClass {
    type Output = DivisorClass;
    fn add(self, o: Self) -> Self {
        let mut c = self;
        for i in 0..2 {
            c.base[i] += o.base[i];
        }
        for i in 0..8 {
            c.exc[i] += o.exc[i];
        }
        c
    }
}

impl ToJson for DivisorClass {
    fn to_json(&self) -> Value {
        json!({"surface": format!("{:?}", self.surface), "base": self.base, "exc": self.exc})
    }
}

/// Which intersection diagram to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagramSpace {
    /// Boundary of the differential Okamoto space.
    DiffOkamoto,
    /// Boundary of `P_t`.
    QOkamoto,
    /// Boundary of `P~_t`.
    QOkamotoModified,
    /// The `P~_t` family at `q = 1`.
    OmegaLimit,
}

impl DiagramSpace {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "diff" | "diff-okamoto" => Ok(DiagramSpace::DiffOkamoto),
            "q" | "q-okamoto" => Ok(DiagramSpace::QOkamoto),
            "q-modified" => Ok(DiagramSpace::QOkamotoModified),
            "omega" | "omega-limit" => Ok(DiagramSpace::OmegaLimit),
            _ => Err(Error::Parse(format!("unknown diagram space {s:?}"))),
        }
    }
}

/// A boundary component with its class.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub name: String,
    pub class: DivisorClass,
}

/// Components, self-intersections and pairwise intersection numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagram {
    pub components: Vec<Component>,
    /// `(i, j, C_i . C_j)` for `i < j` with nonzero pairing.
    pub edges: Vec<(usize, usize, i64)>,
    /// Extra relations checked while building, e.g. class decompositions.
    pub notes: Vec<String>,
}

impl Diagram {
    fn build(components: Vec<Component>, notes: Vec<String>) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..components.len() {
            for j in i + 1..components.len() {
                let m = components[i].class.pair(&components[j].class)?;
                if m != 0 {
                    edges.push((i, j, m));
                }
            }
        }
        Ok(Diagram { components, edges, notes })
    }

    pub fn self_intersections(&self) -> Vec<i64> {
        self.components.iter().map(|c| c.class.self_intersection()).collect()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name == name)
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph boundary {\n");
        for (i, c) in self.components.iter().enumerate() {
            s.push_str(&format!("  n{i} [label=\"{} ({})\"];\n", c.name, c.class.self_intersection()));
        }
        for (i, j, m) in &self.edges {
            s.push_str(&format!("  n{i} -- n{j} [label=\"{m}\"];\n"));
        }
        s.push_str("}\n");
        s
    }
}

impl ToJson for Diagram {
    fn to_json(&self) -> Value {
        let comps: Vec<Value> = self
            .components
            .iter()
            .map(|c| json!({"name": c.name, "self_intersection": c.class.self_intersection(), "class": c.class.to_json()}))
            .collect();
        let edges: Vec<Value> = self.edges.iter().map(|(i, j, m)| json!([i, j, m])).collect();
        json!({"components": comps, "edges": edges, "notes": self.notes})
    }
}

/// Curves of `F2` given by an equation in one of the charts.
enum F2Curve<F> {
    /// `{v = inf}`.
    H,
    /// The fiber `u = c`.
    Fiber(F),
    /// The fiber `u = inf`.
    FiberInf,
    /// `(u - 1)(u - t) + (q - 1) v = 0`.
    C { t: F, qm1: F },
}

impl<F: Field> F2Curve<F> {
    fn class(&self) -> DivisorClass {
        match self {
            F2Curve::H => DivisorClass::new(Surface::F2, [-2, 1]),
            F2Curve::Fiber(_) | F2Curve::FiberInf => DivisorClass::new(Surface::F2, [1, 0]),
            F2Curve::C { .. } => DivisorClass::new(Surface::F2, [0, 1]),
        }
    }

    fn contains(&self, p: &F2Point<F>) -> bool {
        match self {
            F2Curve::H => [1u8, 3].iter().any(|&k| p.to_chart(k).is_ok_and(|q| small(&q.c2))),
            F2Curve::Fiber(c) => p.u().near(&P1::Fin(c.clone())),
            F2Curve::FiberInf => p.u().is_inf(),
            F2Curve::C { t, qm1 } => {
                if let Ok(q) = p.to_chart(0) {
                    let u = q.c1;
                    return small(&((u.clone() - F::one()) * (u - t.clone()) + qm1.clone() * q.c2));
                }
                if let Ok(q) = p.to_chart(2) {
                    let x = q.c1;
                    return small(&((F::one() - x.clone()) * (F::one() - t.clone() * x) + qm1.clone() * q.c2));
                }
                false
            }
        }
    }

    fn strict(&self, centers: &[Center<F>; 8]) -> DivisorClass {
        let through: Vec<usize> = (0..8).filter(|&i| self.contains(&centers[i].point())).collect();
        self.class().strict(&through)
    }
}

fn f2_diagram<F: Field>(curves: Vec<(&str, F2Curve<F>)>, centers: &[Center<F>; 8], notes: Vec<String>) -> Result<Diagram> {
    let comps = curves.into_iter().map(|(n, c)| Component { name: n.into(), class: c.strict(centers) }).collect();
    Diagram::build(comps, notes)
}

/// Boundary of the differential Okamoto space at `t`.
pub fn diagram_diff<F: Field>(th: &ThetaDiff<F>, t: &F) -> Result<Diagram> {
    let centers = base_points_diff(th, t)?;
    let curves = vec![
        ("H", F2Curve::H),
        ("D_0", F2Curve::Fiber(F::zero())),
        ("D_1", F2Curve::Fiber(F::one())),
        ("D_t", F2Curve::Fiber(t.clone())),
        ("D_inf", F2Curve::FiberInf),
    ];
    f2_diagram(curves, &centers, vec![])
}

/// Boundary of `P~_t`.
pub fn diagram_q_modified<F: Field>(t: &F, q: &F, th: &ThetaQ<F>) -> Result<Diagram> {
    let (_, centers) = base_points_q(t, q, th)?;
    let c = F2Curve::C { t: t.clone(), qm1: q.clone() - F::one() };
    let before = c.class().self_intersection();
    let curves = vec![("H", F2Curve::H), ("D_0", F2Curve::Fiber(F::zero())), ("D_inf", F2Curve::FiberInf), ("C", c)];
    f2_diagram(curves, &centers, vec![format!("C^2 = {before} in F2")])
}

/// Boundary of `P_t`: strict transforms of `z = 0`, `z = inf`, `y = 0`, `y = inf`.
pub fn diagram_q<F: Field>(t: &F, q: &F, th: &ThetaQ<F>) -> Result<Diagram> {
    let (gammas, _) = base_points_q(t, q, th)?;
    let lines: [(&str, bool, P1<F>); 4] =
        [("H_0", false, P1::zero()), ("H_inf", false, P1::Inf), ("V_0", true, P1::zero()), ("V_inf", true, P1::Inf)];
    let comps = lines
        .into_iter()
        .map(|(name, vertical, c)| {
            let through: Vec<usize> =
                (0..8).filter(|&i| if vertical { gammas[i].y.near(&c) } else { gammas[i].z.near(&c) }).collect();
            let base = if vertical { [1, 0] } else { [0, 1] };
            Component { name: name.into(), class: DivisorClass::new(Surface::F0, base).strict(&through) }
        })
        .collect();
    Diagram::build(comps, vec![])
}

/// The `P~_t` family at `q = 1`: the centers become those of the differential
/// space and the class of `C` splits as `H + D_1 + D_t`.
pub fn diagram_omega_limit(theta: &ThetaDiff<GaussRat>, t: &GaussRat) -> Result<Diagram> {
    let one = GaussRat::int(1);
    let centers = omega_base_points_at(theta, t, &one)?;
    let diff = base_points_diff(theta, t)?;
    if centers != diff {
        return Err(Error::Precondition("q = 1 centers differ from the differential ones".into()));
    }
    let d = diagram_diff(theta, t)?;
    // Strict transform of C through beta_1 and beta_t, as in P~_t.
    let c_class = DivisorClass::new(Surface::F2, [0, 1]).strict(&[2, 3, 4, 5]);
    let sum = ["H", "D_1", "D_t"]
        .iter()
        .map(|n| d.components[d.index(n).expect("component")].class.clone())
        .reduce(|a, b| a + b)
        .expect("three");
    let mut notes = d.notes.clone();
    notes.push(format!("C**** = H + D_1** + D_t**: {}", c_class == sum));
    if c_class != sum {
        return Err(Error::Precondition("class of C does not decompose".into()));
    }
    Diagram::build(d.components, notes)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::gr;

    fn theta() -> ThetaDiff<GaussRat> {
        ThetaDiff::new(gr(1, 3), gr(2, 5), gr(3, 7), gr(5, 4))
    }

    #[test]
    fn hirz_round_trips() {
        let p = F2Point::new(0, gr(3, 2), gr(-2, 7));
        for k in 0..4 {
            let q = p.to_chart(k).unwrap();
            assert_eq!(q.to_chart(0).unwrap(), p);
        }
        assert!(F2Point::new(0, gr(0, 1), gr(1, 1)).to_chart(2).is_err());
    }

    #[test]
    fn u_prime_example() {
        let th = theta();
        let f = vf_chart(&OkaPoint::hirz(F2Point::new(0, gr(2, 1), gr(0, 1))), &gr(3, 1), &th).unwrap();
        assert_eq!(f[0], gr(1, 3));
    }

    #[test]
    fn base_point_is_indeterminate() {
        let th = theta();
        let t = gr(3, 1);
        let c = &base_points_diff(&th, &t).unwrap()[0];
        assert_eq!(vf_chart(&OkaPoint::hirz(c.point()), &t, &th), Err(Error::InfiniteField));
        let e = OkaPoint::exceptional(Beta::ZeroMinus, P1::Fin(gr(1, 2)));
        assert!(vf_chart(&e, &t, &th).is_ok());
    }

    #[test]
    fn fewer_base_points() {
        let th = ThetaDiff::new(gr(0, 1), gr(2, 5), gr(3, 7), gr(5, 4));
        assert!(matches!(base_points_diff(&th, &gr(3, 1)), Err(Error::FewerBasePoints(_))));
    }

    #[test]
    fn divisor_pairing() {
        let e = DivisorClass::exceptional(Surface::F2, 3);
        assert_eq!(e.self_intersection(), -1);
        assert_eq!(DivisorClass::new(Surface::F2, [1, 1]).pair(&e).unwrap(), 0);
    }
}
