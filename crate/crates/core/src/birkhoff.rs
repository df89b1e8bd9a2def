//! Fundamental solutions at `0` and `inf` for `|q| > 1`, the Birkhoff
//! connection matrix and its pseudo-constancy.
//!
//! `U_0 = H_0 P^{-1} L_0` and `U_inf = H_inf L_inf`, where `H_0`, `H_inf` are
//! convergent series normalised to the identity and `L_0`, `L_inf` are built
//! from the Jacobi theta function.

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::arith::{solve_linear, solve_sylvester, Field, Mat2, ToJson};
use crate::error::{Error, Result};
use crate::fuchsian_q::{
    assemble_qa, b_matrix, compute_b0_c, qschlesinger_step_with, sigma_lambda, FuchsQ, ThetaQ, TripleQ,
};

type C = Complex64;

/// Hard limit on the number of theta terms.
const THETA_MAX_TERMS: usize = 4096;

/// Default relative accuracy required of a sampled fundamental solution.
pub const SAMPLE_TOL: f64 = 1e-9;

/// Longest chain of functional-equation pushes used to reach the series disc.
const MAX_PUSHES: usize = 200;

fn check_modulus(q: C) -> Result<()> {
    if q.norm() <= 1.0 {
        Err(Error::ThetaModulus)
    } else {
        Ok(())
    }
}

fn check_x(x: C) -> Result<()> {
    if x.norm() == 0.0 || !x.norm().is_finite() {
        Err(Error::Precondition("x = 0".into()))
    } else {
        Ok(())
    }
}

/// `theta_q(x) = sum_n q^{-n(n+1)/2} x^n` truncated to `|n| <= n_terms`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaFn {
    pub q: C,
    pub n_terms: usize,
}

impl ThetaFn {
    pub fn new(q: C, n_terms: usize) -> Result<Self> {
        check_modulus(q)?;
        Ok(ThetaFn { q, n_terms })
    }

    /// Smallest truncation whose bound at `|x| = r` and `1/r` is below `tol`.
    pub fn for_tolerance(q: C, r: f64, tol: f64) -> Result<Self> {
        check_modulus(q)?;
        let x = C::new(r.max(1.0 / r), 0.0);
        for n in 1..=THETA_MAX_TERMS {
            let th = ThetaFn { q, n_terms: n };
            if th.truncation_bound(x) <= tol {
                return Ok(th);
            }
        }
        Err(Error::Precondition(format!("theta truncation exceeds {THETA_MAX_TERMS} terms")))
    }

    /// Bound on the neglected terms:
    /// `|q|^{-N(N+1)/2} m^N * 2m / (1 - m |q|^{-(N+1)})` with `m = max(|x|, 1/|x|)`.
    pub fn truncation_bound(&self, x: C) -> f64 {
        let m = x.norm().max(1.0 / x.norm());
        let n = self.n_terms as f64;
        let lq = self.q.norm().ln();
        let rho = (m.ln() - (n + 1.0) * lq).exp();
        if rho >= 1.0 {
            return f64::INFINITY;
        }
        (-(n * (n + 1.0) / 2.0) * lq + n * m.ln()).exp() * 2.0 * m / (1.0 - rho)
    }

    /// `(theta(x), x theta'(x), sum of term magnitudes)`.
    fn sums(&self, x: C) -> Result<(C, C, f64)> {
        check_x(x)?;
        let (mut s, mut ds, mut abs) = (C::new(0.0, 0.0), C::new(0.0, 0.0), 0.0);
        let n = self.n_terms as i64;
        for k in -n..=n {
            let e = -((k * (k + 1)) as f64) / 2.0;
            let term = (self.q.ln() * e + x.ln() * k as f64).exp();
            s += term;
            ds += term * k as f64;
            abs += term.norm();
        }
        Ok((s, ds, abs))
    }

    pub fn eval(&self, x: C) -> Result<C> {
        Ok(self.sums(x)?.0)
    }

    /// `e_{q,a}(x) = theta(x) / theta(x/a)`, so that `e(qx) = a e(x)`.
    pub fn qchar(&self, a: C, x: C) -> Result<C> {
        if a.norm() == 0.0 {
            return Err(Error::Precondition("a = 0".into()));
        }
        let (num, _, _) = self.sums(x)?;
        let (den, _, abs) = self.sums(x / a)?;
        if den.norm() <= 1e-13 * abs {
            return Err(Error::ThetaZero);
        }
        Ok(num / den)
    }

    /// `l_q(x) = x theta'(x) / theta(x)`, so that `l(qx) = l(x) + 1`.
    pub fn qlog(&self, x: C) -> Result<C> {
        let (s, ds, abs) = self.sums(x)?;
        if s.norm() <= 1e-13 * abs {
            return Err(Error::ThetaZero);
        }
        Ok(ds / s)
    }
}

fn default_theta(q: C, x: C) -> Result<ThetaFn> {
    check_x(x)?;
    ThetaFn::for_tolerance(q, x.norm(), 1e-18)
}

pub fn theta_eval(q: C, x: C) -> Result<C> {
    default_theta(q, x)?.eval(x)
}

pub fn qchar_eval(q: C, a: C, x: C) -> Result<C> {
    check_x(x)?;
    if a.norm() == 0.0 {
        return Err(Error::Precondition("a = 0".into()));
    }
    let r = x.norm().max(1.0 / x.norm()).max((x / a).norm()).max((a / x).norm());
    ThetaFn::for_tolerance(q, r, 1e-18)?.qchar(a, x)
}

pub fn qlog_eval(q: C, x: C) -> Result<C> {
    default_theta(q, x)?.qlog(x)
}

/// Expansion point of a local solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Zero,
    Infinity,
}

impl Side {
    pub fn name(&self) -> &'static str {
        match self {
            Side::Zero => "0",
            Side::Infinity => "inf",
        }
    }
}

/// Series `H = sum_n H_n s^n` with `s = x` at `0` and `s = 1/x` at `inf`,
/// solving `H(qx) L = A(x) H(x)` where `L` is `A_0` or `A_inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSolution<F> {
    pub side: Side,
    pub coeffs: Vec<Mat2<F>>,
    pub lead: Mat2<F>,
    pub q: F,
    pub system: FuchsQ<F>,
}

/// Coefficient of `s^k` in `A` around the given side.
fn expansion_coeff<F: Field>(f: &FuchsQ<F>, side: Side, k: usize) -> Result<Mat2<F>> {
    let t = &f.t;
    match (side, k) {
        (Side::Zero, 0) => Ok(f.a0.clone()),
        (Side::Infinity, 0) => f.a_inf(),
        (Side::Zero, _) => {
            // x/(x-1) = -sum x^k, x/(t(x-t)) = -sum x^k / t^{k+1}
            let tk = t.pow(k as u32 + 1).try_inv()?;
            Ok(-(f.a1.clone() + f.at.scale(&tk)))
        }
        (Side::Infinity, _) => Ok(f.a1.clone() + f.at.scale(&t.pow(k as u32 - 1))),
    }
}

/// `q^n` at `0`, `q^{-n}` at `inf`.
fn side_power<F: Field>(q: &F, side: Side, n: usize) -> Result<F> {
    let p = q.pow(n as u32);
    match side {
        Side::Zero => Ok(p),
        Side::Infinity => p.try_inv(),
    }
}

fn check_local<F: Field>(f: &FuchsQ<F>, q: &F, side: Side) -> Result<Mat2<F>> {
    if q.magnitude() <= 1.0 {
        return Err(Error::ThetaModulus);
    }
    let lead = expansion_coeff(f, side, 0)?;
    if side == Side::Infinity {
        let scale = lead.max_norm();
        if !lead.b.negligible(scale) || !lead.c.negligible(scale) {
            return Err(Error::Precondition("A_inf is not diagonal".into()));
        }
    }
    Ok(lead)
}

/// `H_n = Psi_{q^{+-n}}^{-1}(sum_{i=1}^n A_i H_{n-i})` with `Psi_l(X) = l X L - L X`.
pub fn local_solution<F: Field>(f: &FuchsQ<F>, q: &F, side: Side, order: usize) -> Result<LocalSolution<F>> {
    let lead = check_local(f, q, side)?;
    let a: Vec<Mat2<F>> = (0..=order).map(|k| expansion_coeff(f, side, k)).collect::<Result<_>>()?;
    let mut coeffs = vec![Mat2::identity()];
    for n in 1..=order {
        let mut rhs = Mat2::zero();
        for i in 1..=n {
            rhs = rhs + a[i].clone() * coeffs[n - i].clone();
        }
        let lam = side_power(q, side, n)?;
        let h = solve_sylvester(&lam, &lead, &rhs).map_err(|e| match e {
            Error::ResonantSylvester => Error::ResonantExponent(n),
            other => other,
        })?;
        coeffs.push(h);
    }
    Ok(LocalSolution { side, coeffs, lead, q: q.clone(), system: f.clone() })
}

/// The same coefficients from one block-triangular linear system of size `4 order`.
pub fn local_solution_direct<F: Field>(f: &FuchsQ<F>, q: &F, side: Side, order: usize) -> Result<LocalSolution<F>> {
    let lead = check_local(f, q, side)?;
    let a: Vec<Mat2<F>> = (0..=order).map(|k| expansion_coeff(f, side, k)).collect::<Result<_>>()?;
    let dim = 4 * order;
    let mut m = vec![vec![F::zero(); dim]; dim];
    let mut b = vec![F::zero(); dim];
    let unit = |i: usize, j: usize| {
        let mut e = Mat2::zero();
        match (i, j) {
            (0, 0) => e.a = F::one(),
            (0, 1) => e.b = F::one(),
            (1, 0) => e.c = F::one(),
            _ => e.d = F::one(),
        }
        e
    };
    let flat = |x: &Mat2<F>| [x.a.clone(), x.b.clone(), x.c.clone(), x.d.clone()];
    // Row block n: lam_n H_n L - A_0 H_n - sum_{i=1}^{n-1} A_i H_{n-i} = A_n.
    for n in 1..=order {
        let lam = side_power(q, side, n)?;
        for col in 0..4 {
            let e = unit(col / 2, col % 2);
            let own = flat(&((e.clone() * lead.clone()).scale(&lam) - lead.clone() * e.clone()));
            for r in 0..4 {
                m[4 * (n - 1) + r][4 * (n - 1) + col] = own[r].clone();
            }
            for k in 1..n {
                let other = flat(&-(a[n - k].clone() * e.clone()));
                for r in 0..4 {
                    m[4 * (n - 1) + r][4 * (k - 1) + col] = other[r].clone();
                }
            }
        }
        let rhs = flat(&a[n]);
        for r in 0..4 {
            b[4 * (n - 1) + r] = rhs[r].clone();
        }
    }
    let sol = solve_linear(m, b).map_err(|e| match e {
        Error::Singular => Error::ResonantSylvester,
        other => other,
    })?;
    let mut coeffs = vec![Mat2::identity()];
    for n in 0..order {
        let s = &sol[4 * n..4 * n + 4];
        coeffs.push(Mat2::new(s[0].clone(), s[1].clone(), s[2].clone(), s[3].clone()));
    }
    Ok(LocalSolution { side, coeffs, lead, q: q.clone(), system: f.clone() })
}

impl<F: Field> LocalSolution<F> {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficients of `H(qx) L - A(x) H(x)` through `s^{order}`.
    pub fn residual(&self) -> Result<Vec<Mat2<F>>> {
        let n = self.order();
        let a: Vec<Mat2<F>> = (0..=n).map(|k| expansion_coeff(&self.system, self.side, k)).collect::<Result<_>>()?;
        (0..=n)
            .map(|k| {
                let lam = side_power(&self.q, self.side, k)?;
                let mut r = (self.coeffs[k].clone() * self.lead.clone()).scale(&lam);
                for i in 0..=k {
                    r = r - a[i].clone() * self.coeffs[k - i].clone();
                }
                Ok(r)
            })
            .collect()
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G + Copy) -> LocalSolution<G> {
        LocalSolution {
            side: self.side,
            coeffs: self.coeffs.iter().map(|m| m.map(f)).collect(),
            lead: self.lead.map(f),
            q: f(&self.q),
            system: FuchsQ::new(self.system.a0.map(f), self.system.a1.map(f), self.system.at.map(f), f(&self.system.t)),
        }
    }
}

/// Value with an estimated absolute error.
#[derive(Clone, Debug, PartialEq)]
pub struct Sampled {
    pub value: Mat2<C>,
    pub bound: f64,
}

fn norm2(m: &Mat2<C>) -> f64 {
    2.0 * m.max_norm()
}

impl LocalSolution<C> {
    /// Partial sum at `s` and a geometric tail estimate from the last two terms.
    fn series_at(&self, s: C) -> (Mat2<C>, f64) {
        let n = self.order();
        let mut acc = Mat2::zero();
        for h in self.coeffs.iter().rev() {
            acc = acc.scale(&s) + h.clone();
        }
        let r = s.norm();
        if n == 0 {
            return (acc, if r == 0.0 { 0.0 } else { f64::INFINITY });
        }
        let last = self.coeffs[n].max_norm() * r.powi(n as i32);
        let prev = self.coeffs[n - 1].max_norm() * r.powi(n as i32 - 1);
        let rho = if prev > 0.0 { last / prev } else { 0.0 };
        let bound = if rho < 0.5 { 2.0 * (last + prev * rho) } else { f64::INFINITY };
        (acc, bound)
    }

    /// `H(x)`, moving `x` into the series disc with `H(qx) = A(x) H(x) L^{-1}`.
    pub fn eval(&self, x: C) -> Result<Sampled> {
        check_x(x)?;
        let li = self.lead.try_inv()?;
        let mut left: Vec<Mat2<C>> = Vec::new();
        let mut right_count = 0usize;
        let mut pt = x;
        let (mut value, mut bound);
        loop {
            let s = match self.side {
                Side::Zero => pt,
                Side::Infinity => pt.inv(),
            };
            (value, bound) = self.series_at(s);
            if bound <= 1e-16 * norm2(&value).max(1.0) {
                break;
            }
            if left.len() >= MAX_PUSHES {
                return Err(Error::Annulus(format!("x = {x}: no convergence after {MAX_PUSHES} pushes, bound {bound:e}")));
            }
            match self.side {
                Side::Zero => {
                    // H(pt) = A(pt/q) H(pt/q) A_0^{-1}
                    pt /= self.q;
                    left.push(self.system.eval(&pt).map_err(|_| annulus_pole(x))?);
                }
                Side::Infinity => {
                    // H(pt) = A(pt)^{-1} H(q pt) A_inf
                    let m = self.system.eval(&pt).and_then(|a| a.try_inv()).map_err(|_| annulus_pole(x))?;
                    left.push(m);
                    pt *= self.q;
                }
            }
            right_count += 1;
        }
        let right = match self.side {
            Side::Zero => li,
            Side::Infinity => self.lead.clone(),
        };
        for m in left.iter().rev() {
            bound *= norm2(m) * norm2(&right);
            value = m.clone() * value * right.clone();
        }
        debug_assert_eq!(right_count, left.len());
        Ok(Sampled { value, bound })
    }
}

fn annulus_pole(x: C) -> Error {
    Error::Annulus(format!("x = {x}: functional equation meets a singular point"))
}

/// Lexicographic order on `(re, im)`.
fn lex_less(a: C, b: C) -> bool {
    a.re < b.re || (a.re == b.re && a.im < b.im)
}

/// `P` and `J_0` with `P A_0 P^{-1} = J_0` in Jordan form.
///
/// Eigenvalues are sorted lexicographically; each row of `P` is a left
/// eigenvector scaled to a unit first entry when that entry is nonzero.
pub fn diagonalizer(a0: &Mat2<C>) -> Result<(Mat2<C>, Mat2<C>)> {
    let scale = a0.max_norm().max(1e-300);
    let tr = a0.trace();
    let disc = tr * tr - a0.det() * 4.0;
    let one = C::new(1.0, 0.0);
    let zero = C::new(0.0, 0.0);
    if disc.norm() <= 1e-12 * scale * scale {
        let mu = tr / 2.0;
        let n = a0.clone() - Mat2::scalar(mu);
        if n.max_norm() <= 1e-12 * scale {
            return Ok((Mat2::identity(), Mat2::scalar(mu)));
        }
        // p1 N = p2, p2 N = 0
        let p1 = if n.a.norm() + n.b.norm() > 0.0 { [one, zero] } else { [zero, one] };
        let p2 = [p1[0] * n.a + p1[1] * n.c, p1[0] * n.b + p1[1] * n.d];
        return Ok((Mat2::new(p1[0], p1[1], p2[0], p2[1]), Mat2::new(mu, one, zero, mu)));
    }
    let sq = disc.sqrt();
    let (mut m1, mut m2) = ((tr - sq) / 2.0, (tr + sq) / 2.0);
    if lex_less(m2, m1) {
        std::mem::swap(&mut m1, &mut m2);
    }
    let row = |mu: C| -> [C; 2] {
        // p (A_0 - mu) = 0
        let (u, v) = (a0.a - mu, a0.c);
        let (w, z) = (a0.b, a0.d - mu);
        if v.norm() > 1e-14 * scale {
            [one, -u / v]
        } else if z.norm() > 1e-14 * scale {
            [one, -w / z]
        } else {
            [zero, one]
        }
    };
    let (r1, r2) = (row(m1), row(m2));
    Ok((Mat2::new(r1[0], r1[1], r2[0], r2[1]), Mat2::diag(m1, m2)))
}

/// `U_0 = H_0 P^{-1} L_0` and `U_inf = H_inf L_inf` for one member of a family.
#[derive(Clone, Debug)]
pub struct Fundamental {
    pub h0: LocalSolution<C>,
    pub hinf: LocalSolution<C>,
    pub p: Mat2<C>,
    pub j0: Mat2<C>,
    pub q: C,
}

impl Fundamental {
    /// Uses the deterministic diagonalizer of [`diagonalizer`].
    pub fn new(f: &FuchsQ<C>, q: C, order: usize) -> Result<Self> {
        let (p, _) = diagonalizer(&f.a0)?;
        Self::with_diagonalizer(f, q, order, p)
    }

    /// Uses the given `P`, which must conjugate `A_0` to Jordan form.
    pub fn with_diagonalizer(f: &FuchsQ<C>, q: C, order: usize, p: Mat2<C>) -> Result<Self> {
        check_modulus(q)?;
        let j0 = p.clone() * f.a0.clone() * p.try_inv()?;
        let scale = f.a0.max_norm().max(1e-300);
        if !j0.c.negligible(scale) {
            return Err(Error::Precondition("P A_0 P^{-1} is not upper triangular".into()));
        }
        let jordan = !j0.b.negligible(scale);
        if jordan && (!(j0.a - j0.d).negligible(scale) || !(j0.b - C::new(1.0, 0.0)).negligible(scale)) {
            return Err(Error::Precondition("P A_0 P^{-1} is not in Jordan form".into()));
        }
        let j0 = if jordan {
            Mat2::new(j0.a, C::new(1.0, 0.0), C::new(0.0, 0.0), j0.a)
        } else {
            Mat2::diag(j0.a, j0.d)
        };
        let h0 = local_solution(f, &q, Side::Zero, order)?;
        let hinf = local_solution(f, &q, Side::Infinity, order)?;
        Ok(Fundamental { h0, hinf, p, j0, q })
    }

    fn theta_for(&self, x: C, a: &[C]) -> Result<ThetaFn> {
        let mut r = x.norm().max(1.0 / x.norm());
        for v in a {
            r = r.max((x / v).norm()).max((v / x).norm());
        }
        ThetaFn::for_tolerance(self.q, r, 1e-18)
    }

    /// `L_0(x)`; the Jordan case uses the q-logarithm.
    pub fn l0(&self, x: C) -> Result<Mat2<C>> {
        let (m1, m2) = (self.j0.a, self.j0.d);
        let th = self.theta_for(x, &[m1, m2])?;
        if self.j0.b.norm() == 0.0 {
            return Ok(Mat2::diag(th.qchar(m1, x)?, th.qchar(m2, x)?));
        }
        let e = th.qchar(m1, x)?;
        Ok(Mat2::new(e, e * th.qlog(x)? / m1, C::new(0.0, 0.0), e))
    }

    /// `L_inf(x) = diag(e_{q, A_inf[0]}, e_{q, A_inf[1]})`.
    pub fn linf(&self, x: C) -> Result<Mat2<C>> {
        let (a, d) = (self.hinf.lead.a, self.hinf.lead.d);
        let th = self.theta_for(x, &[a, d])?;
        Ok(Mat2::diag(th.qchar(a, x)?, th.qchar(d, x)?))
    }

    pub fn u0(&self, x: C) -> Result<Sampled> {
        let h = self.h0.eval(x)?;
        let right = self.p.try_inv()? * self.l0(x)?;
        Ok(Sampled { bound: h.bound * norm2(&right), value: h.value * right })
    }

    pub fn uinf(&self, x: C) -> Result<Sampled> {
        let h = self.hinf.eval(x)?;
        let l = self.linf(x)?;
        Ok(Sampled { bound: h.bound * norm2(&l), value: h.value * l })
    }

    /// `P = U_inf^{-1} U_0`.
    pub fn birkhoff(&self, x: C) -> Result<Sampled> {
        let (u0, ui) = (self.u0(x)?, self.uinf(x)?);
        let ii = ui.value.try_inv()?;
        let bound = norm2(&ii) * (u0.bound + ui.bound * norm2(&ii) * norm2(&u0.value));
        Ok(Sampled { value: ii * u0.value, bound })
    }

    /// Variant `U_inf^{-1} U_0 P`, reported without the pseudo-constancy equivalence.
    pub fn birkhoff_tilde(&self, x: C) -> Result<Sampled> {
        let s = self.birkhoff(x)?;
        Ok(Sampled { bound: s.bound * norm2(&self.p), value: s.value * self.p.clone() })
    }
}

/// The rational `B(x) = C (x - qt)(x + B_0)/((x - qt Theta_t)(x - qt Theta_bar_t))`.
#[derive(Clone, Debug)]
pub struct LaxB {
    pub th: ThetaQ<C>,
    pub b0: Mat2<C>,
    pub cg: Mat2<C>,
    pub t: C,
    pub q: C,
}

impl LaxB {
    pub fn eval(&self, x: C) -> Result<Mat2<C>> {
        b_matrix(&x, &self.t, &self.q, &self.th, &self.b0, &self.cg)
    }
}

/// Per-sample comparison between the members at `t` and `qt`.
#[derive(Clone, Debug)]
pub struct BirkhoffSample {
    pub x: C,
    pub p_t: Sampled,
    pub p_qt: Sampled,
    /// `|sigma P - P| / |P|`.
    pub pseudo_residual: f64,
    /// `|B_0 - B_inf| / |B_inf|` with `B_i = sigma U_i U_i^{-1}`.
    pub b0_binf_residual: f64,
    /// `|B_inf - B| / |B|`, when the rational `B` is supplied.
    pub rational_residual: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct BirkhoffReport {
    pub samples: Vec<BirkhoffSample>,
}

impl BirkhoffReport {
    fn max_of(&self, f: impl Fn(&BirkhoffSample) -> f64) -> f64 {
        self.samples.iter().map(f).fold(0.0, f64::max)
    }

    pub fn max_pseudo(&self) -> f64 {
        self.max_of(|s| s.pseudo_residual)
    }

    pub fn max_b0_binf(&self) -> f64 {
        self.max_of(|s| s.b0_binf_residual)
    }

    pub fn max_rational(&self) -> Option<f64> {
        let v: Vec<f64> = self.samples.iter().filter_map(|s| s.rational_residual).collect();
        (!v.is_empty()).then(|| v.into_iter().fold(0.0, f64::max))
    }

    /// Pseudo-constancy holds exactly when `B_0 = B_inf`, both at tolerance `tol`.
    pub fn equivalence_holds(&self, tol: f64) -> bool {
        (self.max_pseudo() <= tol) == (self.max_b0_binf() <= tol)
    }
}

fn rel(a: &Mat2<C>, b: &Mat2<C>) -> f64 {
    (a.clone() - b.clone()).max_norm() / b.max_norm().max(1e-300)
}

/// Samples `P(x, t)`, `P(x, qt)` and the `B` comparisons at `xs`.
///
/// Each sampled value must carry an error bound below `tol` relative to its
/// size, otherwise the sample is rejected.
pub fn birkhoff_matrix(at_t: &Fundamental, at_qt: &Fundamental, xs: &[C], lax: Option<&LaxB>, tol: f64) -> Result<BirkhoffReport> {
    let accept = |s: Sampled, x: C, what: &str| -> Result<Sampled> {
        if s.bound > tol * s.value.max_norm() {
            return Err(Error::Annulus(format!("x = {x}: {what} error bound {:e} above {tol:e}", s.bound)));
        }
        Ok(s)
    };
    let mut samples = Vec::new();
    for &x in xs {
        let p_t = accept(at_t.birkhoff(x)?, x, "P(t)")?;
        let p_qt = accept(at_qt.birkhoff(x)?, x, "P(qt)")?;
        let pseudo_residual = rel(&p_qt.value, &p_t.value);
        let u0t = accept(at_t.u0(x)?, x, "U_0(t)")?.value;
        let u0q = accept(at_qt.u0(x)?, x, "U_0(qt)")?.value;
        let uit = accept(at_t.uinf(x)?, x, "U_inf(t)")?.value;
        let uiq = accept(at_qt.uinf(x)?, x, "U_inf(qt)")?.value;
        let b0 = u0q * u0t.try_inv()?;
        let binf = uiq * uit.try_inv()?;
        let b0_binf_residual = rel(&b0, &binf);
        let rational_residual = match lax {
            Some(l) => Some(rel(&binf, &l.eval(x)?)),
            None => None,
        };
        samples.push(BirkhoffSample { x, p_t, p_qt, pseudo_residual, b0_binf_residual, rational_residual });
    }
    Ok(BirkhoffReport { samples })
}

/// A member of a q-Schlesinger family at `t`, its image at `qt` and the rational `B`.
#[derive(Clone, Debug)]
pub struct SchlesingerPair {
    pub at_t: FuchsQ<C>,
    pub at_qt: FuchsQ<C>,
    pub lax: LaxB,
}

/// Assembles `A(x, t)` from `(lambda, y, Z)` and evolves it one q-Schlesinger step with `C = I`.
pub fn schlesinger_pair<F: Field>(tr: &TripleQ<F>, th: &ThetaQ<F>, to_c: impl Fn(&F) -> C + Copy) -> Result<SchlesingerPair> {
    let f = assemble_qa(tr, th)?;
    let sl = sigma_lambda(tr, th)?;
    let (b0, cg) = compute_b0_c(&f, tr, th, &sl)?;
    let fq = qschlesinger_step_with(&f, tr, th, &b0, &cg)?;
    let conv = |g: &FuchsQ<F>| FuchsQ::new(g.a0.map(to_c), g.a1.map(to_c), g.at.map(to_c), to_c(&g.t));
    Ok(SchlesingerPair {
        at_t: conv(&f),
        at_qt: conv(&fq),
        lax: LaxB { th: th.map(to_c), b0: b0.map(to_c), cg: cg.map(to_c), t: to_c(&tr.t), q: to_c(&tr.q) },
    })
}

impl SchlesingerPair {
    /// Fundamental solutions at `t` (default `P`) and at `qt` with either the
    /// default `P` or the transported `P(qt) = P(t) B(0)^{-1}`.
    pub fn fundamentals(&self, order: usize, transported: bool) -> Result<(Fundamental, Fundamental)> {
        let q = self.lax.q;
        let ft = Fundamental::new(&self.at_t, q, order)?;
        let fq = if transported {
            let p = ft.p.clone() * self.lax.eval(C::new(0.0, 0.0))?.try_inv()?;
            Fundamental::with_diagonalizer(&self.at_qt, q, order, p)?
        } else {
            Fundamental::new(&self.at_qt, q, order)?
        };
        Ok((ft, fq))
    }

    /// Replaces `A(x, qt)` by `A_1 + E`, `A_t - qt E`, which keeps `A_0` and
    /// `A_inf` but breaks the Lax equation.
    pub fn perturbed(&self, e: Mat2<C>) -> SchlesingerPair {
        let mut out = self.clone();
        let qt = self.at_qt.t;
        out.at_qt.a1 = self.at_qt.a1.clone() + e.clone();
        out.at_qt.at = self.at_qt.at.clone() - e.scale(&qt);
        out
    }
}

fn c_json(z: C) -> Value {
    json!([z.re, z.im])
}

impl ToJson for Sampled {
    fn to_json(&self) -> Value {
        json!({ "value": self.value.to_json(), "bound": self.bound })
    }
}

impl ToJson for BirkhoffSample {
    fn to_json(&self) -> Value {
        json!({
            "x": c_json(self.x),
            "P_t": self.p_t.to_json(),
            "P_qt": self.p_qt.to_json(),
            "pseudo_residual": self.pseudo_residual,
            "b0_binf_residual": self.b0_binf_residual,
            "rational_residual": self.rational_residual,
        })
    }
}

impl ToJson for BirkhoffReport {
    fn to_json(&self) -> Value {
        json!({
            "samples": self.samples.iter().map(|s| s.to_json()).collect::<Vec<_>>(),
            "max_pseudo_residual": self.max_pseudo(),
            "max_b0_binf_residual": self.max_b0_binf(),
            "max_rational_residual": self.max_rational(),
        })
    }
}
