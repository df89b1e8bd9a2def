//! Rank-two q-Fuchsian systems with poles at `1, t` and the q-Schlesinger
//! deformation `t -> qt`.

use serde_json::{json, Value};

use crate::arith::json::field;
use crate::arith::{Field, FromJson, Mat2, Poly, ToJson};
use crate::error::{Error, Result};
use crate::fuchsian_diff::ThetaDiff;

/// Default exponent bound for the q-resonance test.
pub const RESONANCE_BOUND: i32 = 64;

/// Spectral data `(Theta_i, Theta_bar_i)` for `i = 0, 1, t, inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaQ<F> {
    pub th0: F,
    pub th1: F,
    pub tht: F,
    pub thinf: F,
    pub th0b: F,
    pub th1b: F,
    pub thtb: F,
    pub thinfb: F,
}

impl<F: Field> ThetaQ<F> {
    /// Unconstrained pair; checks `Theta_0 Theta0b = Thinf Thinfb Thetat Thetatb Theta1 Theta1b`.
    pub fn general(th: [F; 4], thb: [F; 4]) -> Result<Self> {
        let [th0, th1, tht, thinf] = th;
        let [th0b, th1b, thtb, thinfb] = thb;
        let s = ThetaQ { th0, th1, tht, thinf, th0b, th1b, thtb, thinfb };
        if s.all().iter().any(|v| v.is_zero()) {
            return Err(Error::Precondition("Theta_i = 0".into()));
        }
        let lhs = s.th0.clone() * s.th0b.clone();
        let rhs = s.thinf.clone() * s.thinfb.clone() * s.tht.clone() * s.thtb.clone() * s.th1.clone() * s.th1b.clone();
        if !(lhs.clone() - rhs).negligible(lhs.magnitude()) {
            return Err(Error::Precondition("theta relation violated".into()));
        }
        Ok(s)
    }

    /// Convention `Theta_bar_i = 1/Theta_i`.
    pub fn inverse(th0: F, th1: F, tht: F, thinf: F) -> Result<Self> {
        let inv = |v: &F| v.try_inv().map_err(|_| Error::Precondition("Theta_i = 0".into()));
        Ok(ThetaQ {
            th0b: inv(&th0)?,
            th1b: inv(&th1)?,
            thtb: inv(&tht)?,
            thinfb: inv(&thinf)?,
            th0,
            th1,
            tht,
            thinf,
        })
    }

    /// `Theta_i = 1 + (q-1) theta_i / 2`, `Theta_bar_i = 1/Theta_i`.
    pub fn from_diff(theta: &ThetaDiff<F>, q: &F) -> Result<Self> {
        let h = (q.clone() - F::one()) * F::from_ratio(1, 2);
        let f = |th: &F| F::one() + h.clone() * th.clone();
        Self::inverse(f(&theta.th0), f(&theta.th1), f(&theta.tht), f(&theta.thinf))
    }

    fn all(&self) -> [&F; 8] {
        [&self.th0, &self.th1, &self.tht, &self.thinf, &self.th0b, &self.th1b, &self.thtb, &self.thinfb]
    }

    pub fn pairs(&self) -> [(&F, &F); 4] {
        [(&self.th0, &self.th0b), (&self.th1, &self.th1b), (&self.tht, &self.thtb), (&self.thinf, &self.thinfb)]
    }

    /// `Theta_i / Theta_bar_i` avoids `q^k` for `1 <= |k| <= bound`.
    pub fn is_nonresonant(&self, q: &F, bound: i32) -> Result<bool> {
        let qi = q.try_inv()?;
        for (a, b) in self.pairs() {
            let r = a.clone() * b.try_inv()?;
            let (mut up, mut down) = (F::one(), F::one());
            for _ in 0..bound {
                up = up * q.clone();
                down = down * qi.clone();
                let scale = r.magnitude().max(1.0);
                if (r.clone() - up.clone()).negligible(scale) || (r.clone() - down.clone()).negligible(scale) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// `p(x) = (x - t Theta_t)(x - t Theta_bar_t)(x - Theta_1)(x - Theta_bar_1)` at `x`.
    pub fn pfrak(&self, x: &F, t: &F) -> F {
        (x.clone() - t.clone() * self.tht.clone())
            * (x.clone() - t.clone() * self.thtb.clone())
            * (x.clone() - self.th1.clone())
            * (x.clone() - self.th1b.clone())
    }

    /// `p` as a polynomial in `x`.
    pub fn pfrak_poly(&self, t: &F) -> Poly<F> {
        Poly::linear_root(t.clone() * self.tht.clone())
            * Poly::linear_root(t.clone() * self.thtb.clone())
            * Poly::linear_root(self.th1.clone())
            * Poly::linear_root(self.th1b.clone())
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> ThetaQ<G> {
        ThetaQ {
            th0: f(&self.th0),
            th1: f(&self.th1),
            tht: f(&self.tht),
            thinf: f(&self.thinf),
            th0b: f(&self.th0b),
            th1b: f(&self.th1b),
            thtb: f(&self.thtb),
            thinfb: f(&self.thinfb),
        }
    }

    pub fn try_map<G: Field>(&self, f: impl Fn(&F) -> Result<G>) -> Result<ThetaQ<G>> {
        Ok(ThetaQ {
            th0: f(&self.th0)?,
            th1: f(&self.th1)?,
            tht: f(&self.tht)?,
            thinf: f(&self.thinf)?,
            th0b: f(&self.th0b)?,
            th1b: f(&self.th1b)?,
            thtb: f(&self.thtb)?,
            thinfb: f(&self.thinfb)?,
        })
    }
}

/// The triple `(lambda, y, Z)` at time `t`, with the dilation `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct TripleQ<F> {
    pub lambda: F,
    pub y: F,
    pub z: F,
    pub t: F,
    pub q: F,
}

impl<F: Field> TripleQ<F> {
    pub fn new(lambda: F, y: F, z: F, t: F, q: F) -> Self {
        TripleQ { lambda, y, z, t, q }
    }

    /// `1 + (q-1) y Z`, the value of the `(1,1)` entry at `x = y`.
    pub fn w(&self) -> F {
        F::one() + (self.q.clone() - F::one()) * self.y.clone() * self.z.clone()
    }
}

/// Auxiliary scalars of the assembly.
#[derive(Clone, Debug, PartialEq)]
pub struct QAux<F> {
    pub z1: F,
    pub z2: F,
    pub alpha: F,
    pub beta: F,
    pub gamma: F,
    pub delta: F,
}

/// `A(x) = A_0 + x/(x-1) A_1 + x/(t(x-t)) A_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct FuchsQ<F> {
    pub a0: Mat2<F>,
    pub a1: Mat2<F>,
    pub at: Mat2<F>,
    pub t: F,
    pub aux: Option<QAux<F>>,
}

impl<F: Field> FuchsQ<F> {
    pub fn new(a0: Mat2<F>, a1: Mat2<F>, at: Mat2<F>, t: F) -> Self {
        FuchsQ { a0, a1, at, t, aux: None }
    }

    /// `A_0 + A_1 + A_t / t`.
    pub fn a_inf(&self) -> Result<Mat2<F>> {
        Ok(self.a0.clone() + self.a1.clone() + self.at.try_div_scalar(&self.t)?)
    }

    pub fn eval(&self, x: &F) -> Result<Mat2<F>> {
        let one = F::one();
        let f1 = x.clone() * (x.clone() - one).try_inv()?;
        let ft = x.clone() * (self.t.clone() * (x.clone() - self.t.clone())).try_inv()?;
        Ok(self.a0.clone() + self.a1.scale(&f1) + self.at.scale(&ft))
    }

    /// `N(x) = (x-1)(x-t) A(x) = A_0 (x-1)(x-t) + A_1 x(x-t) + A_t x(x-1)/t`.
    pub fn numerator(&self) -> Result<Mat2<Poly<F>>> {
        let one = F::one();
        let x = Poly::<F>::x();
        let l1 = Poly::linear_root(one.clone());
        let lt = Poly::linear_root(self.t.clone());
        let it = self.t.try_inv()?;
        let w0 = l1.clone() * lt.clone();
        let w1 = x.clone() * lt;
        let wt = (x * l1).scale(&it);
        let lift = |m: &Mat2<F>, w: &Poly<F>| m.map(|e| w.scale(e));
        Ok(lift(&self.a0, &w0) + lift(&self.a1, &w1) + lift(&self.at, &wt))
    }

    pub fn residues(&self) -> [&Mat2<F>; 3] {
        [&self.a0, &self.a1, &self.at]
    }
}

fn assembly_err<T>(what: &str) -> Result<T> {
    Err(Error::Assembly(what.to_string()))
}

fn check_triple<F: Field>(tr: &TripleQ<F>, th: &ThetaQ<F>) -> Result<()> {
    let one = F::one();
    if tr.lambda.is_zero() {
        return assembly_err("lambda = 0");
    }
    if tr.q.is_zero() || tr.q == one {
        return assembly_err("q in {0, 1}");
    }
    if tr.t.is_zero() || tr.t == one {
        return assembly_err("t in {0, 1}");
    }
    if tr.y.is_zero() || tr.y == one || tr.y == tr.t {
        return assembly_err("y in {0, 1, t}");
    }
    if tr.w().is_zero() {
        return assembly_err("1 + (q-1) y Z = 0");
    }
    if th.thinf == th.thinfb {
        return assembly_err("Theta_inf = Theta_bar_inf");
    }
    Ok(())
}

/// `(p(0)-p(y))/(t y) + (p(t)-p(y))/(t(t-1)(y-t)) - (p(1)-p(y))/((t-1)(y-1))`.
fn pfrak_combo<F: Field>(th: &ThetaQ<F>, y: &F, t: &F) -> Result<(F, F, F)> {
    let one = F::one();
    let py = th.pfrak(y, t);
    let d0 = th.pfrak(&F::zero(), t) - py.clone();
    let d1 = th.pfrak(&one, t) - py.clone();
    let dt = th.pfrak(t, t) - py;
    let t1 = t.clone() - one.clone();
    let s = d0.clone() * (t.clone() * y.clone()).try_inv()?
        + dt * (t.clone() * t1.clone() * (y.clone() - t.clone())).try_inv()?
        - d1.clone() * (t1 * (y.clone() - one)).try_inv()?;
    Ok((s, d0, d1))
}

/// Assembles `A_0, A_1, A_t` from `(lambda, y, Z)`.
pub fn assemble_qa<F: Field>(tr: &TripleQ<F>, th: &ThetaQ<F>) -> Result<FuchsQ<F>> {
    check_triple(tr, th)?;
    let (l, y, t, q) = (&tr.lambda, &tr.y, &tr.t, &tr.q);
    let one = F::one();
    let q1 = q.clone() - one.clone();
    let (ti, tib) = (&th.thinf, &th.thinfb);

    let z1 = (y.clone() - one.clone()) * (y.clone() - t.clone()) * tr.w() * tib.try_inv()?;
    let z2 = th.pfrak(y, t) * z1.try_inv()?;
    let (s, d0, d1) = pfrak_combo(th, y, t)?;
    let dinf = (ti.clone() - tib.clone()).try_inv()?;
    let alpha = -(t.clone() * (th.th0.clone() + th.th0b.clone())
        - (tib.clone() * z1.clone() + ti.clone() * z2.clone()))
        * dinf.clone()
        * y.try_inv()?
        + ti.clone() * dinf * (one.clone() + t.clone() - y.clone() + s.clone());
    let beta = -(alpha.clone() - one.clone()) - (y.clone() - t.clone()) + s;
    let gamma = z1.clone() + z2.clone() + alpha.clone() * beta.clone()
        + (alpha.clone() - one.clone() + beta.clone()) * (y.clone() - one.clone())
        - d0 * y.try_inv()?
        + d1 * (y.clone() - one.clone()).try_inv()?;
    let p0 = th.pfrak(&F::zero(), t);
    let delta = (p0 - (alpha.clone() * y.clone() + z1.clone()) * (beta.clone() * y.clone() + z2.clone()))
        * y.try_inv()?;

    // N(x) entries evaluated at x.
    let ql = q1.clone() * l.clone();
    let n21_scale = ti.clone() * tib.clone() * ql.try_inv()?;
    let numer = |x: &F| -> Mat2<F> {
        let xy = x.clone() - y.clone();
        Mat2::new(
            tib.clone() * (xy.clone() * (x.clone() - alpha.clone()) + z1.clone()),
            ql.clone() * xy.clone(),
            n21_scale.clone() * (gamma.clone() * x.clone() + delta.clone()),
            ti.clone() * (xy * (x.clone() - beta.clone()) + z2.clone()),
        )
    };
    let t1 = t.clone() - one.clone();
    let a0 = numer(&F::zero()).scale(&t.try_inv()?);
    let a1 = numer(&one).scale(&(-t1.clone()).try_inv()?);
    let at = numer(t).scale(&t1.try_inv()?);
    Ok(FuchsQ { a0, a1, at, t: t.clone(), aux: Some(QAux { z1, z2, alpha, beta, gamma, delta }) })
}

/// Recovers `(lambda, y, Z)` from the residues.
pub fn extract_triple_q<F: Field>(f: &FuchsQ<F>, q: &F) -> Result<TripleQ<F>> {
    let one = F::one();
    let t = f.t.clone();
    let q1 = q.clone() - one.clone();
    let ql = (one.clone() - t.clone()) * f.a1.b.clone() - t.clone() * f.a0.b.clone();
    if ql.is_zero() {
        return assembly_err("lambda = 0");
    }
    let lambda = ql.clone() * q1.try_inv()?;
    let y = -(t.clone() * f.a0.b.clone()) * ql.try_inv()?;
    let a11 = f.eval(&y)?.a;
    let z = (a11 - one) * (q1 * y.clone()).try_inv()?;
    Ok(TripleQ { lambda, y, z, t, q: q.clone() })
}

/// `X = (y-1)(y-t)(1+(q-1)yZ) / (Thinf Thinfb (y-Theta_1)(y-Theta_bar_1))`.
pub fn x_prop<F: Field>(tr: &TripleQ<F>, th: &ThetaQ<F>) -> Result<F> {
    let one = F::one();
    let num = (tr.y.clone() - one.clone()) * (tr.y.clone() - tr.t.clone()) * tr.w();
    let den = th.thinf.clone() * th.thinfb.clone() * (tr.y.clone() - th.th1.clone()) * (tr.y.clone() - th.th1b.clone());
    den.try_inv().map(|d| num * d).map_err(|_| degenerate("y = Theta_1 or Theta_bar_1"))
}

fn degenerate(what: &str) -> Error {
    Error::DegenerateSchlesinger(what.to_string())
}

fn nonzero<F: Field>(v: F, what: &str) -> Result<F> {
    if v.is_zero() {
        Err(degenerate(what))
    } else {
        Ok(v)
    }
}

/// `sigma lambda = lambda (1 - q Thinfb X)/(1 - Thinf X)`, which makes `c = 1`.
pub fn sigma_lambda<F: Field>(tr: &TripleQ<F>, th: &ThetaQ<F>) -> Result<F> {
    let x = x_prop(tr, th)?;
    let one = F::one();
    let den = nonzero(one.clone() - th.thinf.clone() * x.clone(), "Thinf X = 1")?;
    Ok(tr.lambda.clone() * (one - tr.q.clone() * th.thinfb.clone() * x) * den.try_inv()?)
}

/// `(tTheta_t - 1)(tTheta_bar_t - 1)` at time `s`.
fn kappa<F: Field>(th: &ThetaQ<F>, s: &F) -> F {
    (s.clone() * th.tht.clone() - F::one()) * (s.clone() * th.thtb.clone() - F::one())
}

/// `B_0` and the diagonal gauge `C = diag(c, 1)`.
pub fn compute_b0_c<F: Field>(
    f: &FuchsQ<F>,
    tr: &TripleQ<F>,
    th: &ThetaQ<F>,
    sigma_lambda: &F,
) -> Result<(Mat2<F>, Mat2<F>)> {
    let (t, q) = (&tr.t, &tr.q);
    let one = F::one();
    let t1 = t.clone() - one.clone();
    let k = nonzero(kappa(th, t), "t Theta_t = 1")?;
    let ki = k.try_inv()?;
    let ainf = f.a_inf()?;
    let left = ainf + f.a1.scale(&(t1.clone() * ki.clone()));
    let tt = th.tht.clone() * th.thtb.clone();
    let right = f.a0.scale(&tt.try_inv()?) + f.a1.scale(&(t.clone() * t1 * ki));
    let right_inv = right.try_inv().map_err(|_| degenerate("singular B_0 factor"))?;
    let b0 = (left * right_inv).scale(&-(q.clone() * t.clone()));

    let x = x_prop(tr, th)?;
    nonzero(x.clone(), "X = 0")?;
    let den = nonzero(q.clone() * th.thinfb.clone() * x.clone() - one.clone(), "q Thinfb X = 1")?;
    let numx = nonzero(th.thinf.clone() * x - one.clone(), "Thinf X = 1")?;
    let c = sigma_lambda.clone() * tr.lambda.try_inv()? * numx * den.try_inv()?;
    Ok((b0, Mat2::diag(c, one)))
}

/// One step of the q-Schlesinger equations; the result lives at time `qt`.
pub fn qschlesinger_step_with<F: Field>(f: &FuchsQ<F>, tr: &TripleQ<F>, th: &ThetaQ<F>, b0: &Mat2<F>, cg: &Mat2<F>) -> Result<FuchsQ<F>> {
    let (t, q) = (&tr.t, &tr.q);
    let one = F::one();
    let id = Mat2::<F>::identity();
    let qt = q.clone() * t.clone();
    let t1 = t.clone() - one.clone();
    let k = kappa(th, t);
    let kq = kappa(th, &qt);
    let qt1 = nonzero(qt.clone() - one.clone(), "qt = 1")?;
    let ci = cg.try_inv().map_err(|_| degenerate("c = 0"))?;
    let b0i = b0.try_inv().map_err(|_| degenerate("B_0 singular"))?;
    let ib0i = (id.clone() + b0.clone()).try_inv().map_err(|_| degenerate("I + B_0 singular"))?;
    let qib0 = id.scale(q) + b0.clone();
    let tt = th.tht.clone() * th.thtb.clone();

    let s0 = cg.clone() * b0.clone() * f.a0.clone() * b0i.clone() * ci.clone();

    let coef1 = t1.clone() * qt1.try_inv()? * kq.clone() * (q.clone() * k.clone()).try_inv()?;
    let s1 = (cg.clone() * qib0.clone() * f.a1.clone() * ib0i.clone() * ci.clone()).scale(&coef1);

    let m1 = cg.clone() * b0.clone() * f.a0.clone() * (id.scale(&tt.try_inv()?) + b0i.scale(&qt)) * ci.clone();
    let inner = id.clone() + ib0i.scale(&(kq * qt1.try_inv()?));
    let m2 = (cg.clone() * qib0 * f.a1.clone()).scale(&(t.clone() * t1 * k.try_inv()?)) * inner * ci;
    let st = -m1 - m2;
    Ok(FuchsQ::new(s0, s1, st, qt))
}

/// q-Schlesinger step with `sigma lambda` from [`sigma_lambda`].
pub fn qschlesinger_step<F: Field>(f: &FuchsQ<F>, tr: &TripleQ<F>, th: &ThetaQ<F>) -> Result<FuchsQ<F>> {
    let sl = sigma_lambda(tr, th)?;
    let (b0, cg) = compute_b0_c(f, tr, th, &sl)?;
    qschlesinger_step_with(f, tr, th, &b0, &cg)
}

/// The map `(y, Z) -> (sigma y, sigma Z)` characterising q-isomonodromy,
/// together with `sigma lambda` from [`sigma_lambda`].
pub fn qpvi_yz_step<F: Field>(tr: &TripleQ<F>, th: &ThetaQ<F>) -> Result<TripleQ<F>> {
    let (y, t, q) = (&tr.y, &tr.t, &tr.q);
    let one = F::one();
    let x = x_prop(tr, th)?;
    nonzero(x.clone(), "X = 0")?;
    let tt = th.tht.clone() * th.thtb.clone();
    let n0 = x.clone() - t.clone() * tt.clone() * th.th0.try_inv()?;
    let n1 = x.clone() - t.clone() * tt * th.th0b.try_inv()?;
    let d0 = nonzero(x.clone() - th.thinf.try_inv()?, "Thinf X = 1")?;
    let d1 = nonzero(x.clone() - (q.clone() * th.thinfb.clone()).try_inv()?, "q Thinfb X = 1")?;
    let sy = th.th1.clone() * th.th1b.clone() * y.try_inv()? * n0 * n1 * (d0 * d1).try_inv()?;
    let sy = nonzero(sy, "sigma y = 0")?;
    let qt = q.clone() * t.clone();
    let num = (sy.clone() - qt.clone() * th.tht.clone()) * (sy.clone() - qt.clone() * th.thtb.clone());
    let den = q.clone() * (sy.clone() - one.clone()) * (sy.clone() - qt.clone()) * x;
    let den = nonzero(den, "sigma y in {1, qt}")?;
    let sz = (num * den.try_inv()? - one.clone()) * ((q.clone() - one) * sy.clone()).try_inv()?;
    let sl = sigma_lambda(tr, th)?;
    Ok(TripleQ { lambda: sl, y: sy, z: sz, t: qt, q: q.clone() })
}

/// `B(x) = C (x - qt)(x I + B_0) / ((x - qt Theta_t)(x - qt Theta_bar_t))`.
pub fn b_matrix<F: Field>(x: &F, t: &F, q: &F, th: &ThetaQ<F>, b0: &Mat2<F>, cg: &Mat2<F>) -> Result<Mat2<F>> {
    let qt = q.clone() * t.clone();
    let den = (x.clone() - qt.clone() * th.tht.clone()) * (x.clone() - qt.clone() * th.thtb.clone());
    let s = (x.clone() - qt) * den.try_inv()?;
    Ok(cg.clone() * (Mat2::scalar(x.clone()) + b0.clone()).scale(&s))
}

/// One sample of the q-Lax residual.
#[derive(Clone, Debug, PartialEq)]
pub struct LaxSample<F> {
    pub x: F,
    pub norm: f64,
    pub exact_zero: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LaxReport<F> {
    pub samples: Vec<LaxSample<F>>,
    /// Cleared polynomial identity; `None` for inexact scalars.
    pub polynomial_zero: Option<bool>,
    /// Degree in `x` of the cleared residual (`None` when it vanishes).
    pub residual_degree: Option<usize>,
}

impl<F> LaxReport<F> {
    pub fn all_zero(&self) -> bool {
        self.samples.iter().all(|s| s.exact_zero) && self.polynomial_zero != Some(false)
    }

    pub fn max_norm(&self) -> f64 {
        self.samples.iter().map(|s| s.norm).fold(0.0, f64::max)
    }
}

fn mat_poly<F: Field>(m: &Mat2<F>) -> Mat2<Poly<F>> {
    m.map(|e| Poly::constant(e.clone()))
}

/// `q (x-tTt)(x-tTbt) N_qt(x) C (xI+B_0) - (x-qtTt)(x-qtTbt) C (qxI+B_0) N_t(x)`.
pub fn qlax_polynomial<F: Field>(ft: &FuchsQ<F>, fqt: &FuchsQ<F>, q: &F, th: &ThetaQ<F>, b0: &Mat2<F>, cg: &Mat2<F>) -> Result<Mat2<Poly<F>>> {
    let t = &ft.t;
    let qt = q.clone() * t.clone();
    let x = Poly::<F>::x();
    let pt = Poly::linear_root(t.clone() * th.tht.clone()) * Poly::linear_root(t.clone() * th.thtb.clone());
    let pqt = Poly::linear_root(qt.clone() * th.tht.clone()) * Poly::linear_root(qt * th.thtb.clone());
    let xb = Mat2::scalar(x.clone()) + mat_poly(b0);
    let qxb = Mat2::scalar(x.scale(q)) + mat_poly(b0);
    let c = mat_poly(cg);
    let lhs = (fqt.numerator()? * c.clone() * xb).scale(&pt.scale(q));
    let rhs = (c * qxb * ft.numerator()?).scale(&pqt);
    Ok(lhs - rhs)
}

/// Evaluates `A(x, qt) B(x, t) - B(qx, t) A(x, t)` at the samples.
pub fn qlax_residual<F: Field>(
    ft: &FuchsQ<F>,
    fqt: &FuchsQ<F>,
    q: &F,
    th: &ThetaQ<F>,
    b0: &Mat2<F>,
    cg: &Mat2<F>,
    samples: &[F],
) -> Result<LaxReport<F>> {
    let t = &ft.t;
    let qt = q.clone() * t.clone();
    let excluded = [F::one(), t.clone(), qt.clone(), qt.clone() * th.tht.clone(), qt * th.thtb.clone()];
    let mut out = Vec::with_capacity(samples.len());
    for x in samples {
        let xq = x.clone() * q.try_inv()?;
        for e in &excluded {
            let scale = e.magnitude().max(1.0);
            if (x.clone() - e.clone()).negligible(scale) || (xq.clone() - e.clone()).negligible(scale) {
                return Err(Error::Precondition("sample on excluded locus".into()));
            }
        }
        let qx = q.clone() * x.clone();
        let lhs = fqt.eval(x)? * b_matrix(x, t, q, th, b0, cg)?;
        let rhs = b_matrix(&qx, t, q, th, b0, cg)? * ft.eval(x)?;
        let r = lhs - rhs;
        out.push(LaxSample { x: x.clone(), norm: r.max_norm(), exact_zero: r.is_zero() });
    }
    let (polynomial_zero, residual_degree) = if F::EXACT {
        let p = qlax_polynomial(ft, fqt, q, th, b0, cg)?;
        let deg = p.entries().iter().filter_map(|e| e.degree()).max();
        (Some(p.is_zero()), deg)
    } else {
        (None, None)
    };
    Ok(LaxReport { samples: out, polynomial_zero, residual_degree })
}

impl<F: Field + ToJson> ToJson for ThetaQ<F> {
    fn to_json(&self) -> Value {
        json!({
            "Theta": [self.th0.to_json(), self.th1.to_json(), self.tht.to_json(), self.thinf.to_json()],
            "ThetaBar": [self.th0b.to_json(), self.th1b.to_json(), self.thtb.to_json(), self.thinfb.to_json()],
        })
    }
}

impl<F: Field + FromJson> FromJson for ThetaQ<F> {
    fn from_json(v: &Value) -> Result<Self> {
        let four = |key: &str| -> Result<Option<[F; 4]>> {
            match v.get(key) {
                None => Ok(None),
                Some(a) => {
                    let e: Vec<F> = Vec::from_json(a)?;
                    let arr: [F; 4] = e.try_into().map_err(|_| Error::Parse(format!("{key} needs four entries")))?;
                    Ok(Some(arr))
                }
            }
        };
        let th = four("Theta")?.ok_or_else(|| Error::Parse("missing field \"Theta\"".into()))?;
        match four("ThetaBar")? {
            Some(thb) => ThetaQ::general(th, thb),
            None => {
                let [a, b, c, d] = th;
                ThetaQ::inverse(a, b, c, d)
            }
        }
    }
}

impl<F: Field + ToJson> ToJson for TripleQ<F> {
    fn to_json(&self) -> Value {
        json!({"lambda": self.lambda.to_json(), "y": self.y.to_json(), "Z": self.z.to_json(),
               "t": self.t.to_json(), "q": self.q.to_json()})
    }
}

impl<F: Field + FromJson> FromJson for TripleQ<F> {
    fn from_json(v: &Value) -> Result<Self> {
        Ok(TripleQ {
            lambda: field(v, "lambda")?,
            y: field(v, "y")?,
            z: field(v, "Z")?,
            t: field(v, "t")?,
            q: field(v, "q")?,
        })
    }
}

impl<F: Field + ToJson> ToJson for FuchsQ<F> {
    fn to_json(&self) -> Value {
        json!({"A0": self.a0.to_json(), "A1": self.a1.to_json(), "At": self.at.to_json(), "t": self.t.to_json()})
    }
}

impl<F: Field + FromJson> FromJson for FuchsQ<F> {
    fn from_json(v: &Value) -> Result<Self> {
        Ok(FuchsQ::new(field(v, "A0")?, field(v, "A1")?, field(v, "At")?, field(v, "t")?))
    }
}

impl<F: Field + ToJson> ToJson for LaxReport<F> {
    fn to_json(&self) -> Value {
        json!({
            "samples": self.samples.iter().map(|s| json!({"x": s.x.to_json(), "norm": s.norm, "exact_zero": s.exact_zero})).collect::<Vec<_>>(),
            "polynomial_zero": self.polynomial_zero,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{gr, GaussRat};

    fn setup() -> (TripleQ<GaussRat>, ThetaQ<GaussRat>) {
        let th = ThetaQ::inverse(gr(3, 2), gr(3, 2), gr(3, 2), gr(2, 1)).unwrap();
        (TripleQ::new(gr(1, 1), gr(5, 1), gr(1, 7), gr(3, 1), gr(2, 1)), th)
    }

    #[test]
    fn assembly_example() {
        let (tr, th) = setup();
        let f = assemble_qa(&tr, &th).unwrap();
        assert_eq!(f.a0.trace(), gr(13, 6));
        assert_eq!(f.a0.det(), gr(1, 1));
        assert_eq!(f.a_inf().unwrap(), Mat2::diag(gr(1, 2), gr(2, 1)));
        assert_eq!(extract_triple_q(&f, &tr.q).unwrap(), tr);
    }

    #[test]
    fn step_matches_map() {
        let (tr, th) = setup();
        let f = assemble_qa(&tr, &th).unwrap();
        let g = qschlesinger_step(&f, &tr, &th).unwrap();
        let tr2 = qpvi_yz_step(&tr, &th).unwrap();
        let g2 = assemble_qa(&tr2, &th).unwrap();
        assert_eq!((g.a0, g.a1, g.at), (g2.a0, g2.a1, g2.at));
    }
}
