//! Rank-two traceless Fuchsian systems with poles at `0, 1, t, inf`, their
//! Schlesinger deformation equations and the Hamiltonian form of the sixth
//! Painleve equation.

use serde_json::{json, Value};

use crate::arith::json::field;
use crate::arith::{div_or, Field, FromJson, GaussRat, Mat2, Ring, ToJson};
use crate::error::{Error, Result};

/// Local exponent differences `(theta_0, theta_1, theta_t, theta_inf)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaDiff<F> {
    pub th0: F,
    pub th1: F,
    pub tht: F,
    pub thinf: F,
}

impl<F: Field> ThetaDiff<F> {
    pub fn new(th0: F, th1: F, tht: F, thinf: F) -> Self {
        ThetaDiff { th0, th1, tht, thinf }
    }

    pub fn as_array(&self) -> [F; 4] {
        [self.th0.clone(), self.th1.clone(), self.tht.clone(), self.thinf.clone()]
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> ThetaDiff<G> {
        ThetaDiff { th0: f(&self.th0), th1: f(&self.th1), tht: f(&self.tht), thinf: f(&self.thinf) }
    }
}

impl ThetaDiff<GaussRat> {
    /// `theta_i` is not a nonzero integer for every `i`.
    pub fn is_nonresonant(&self) -> bool {
        self.as_array().iter().all(|th| th.is_zero() || !(th.is_real() && th.re.is_integer()))
    }
}

/// The triple `(lambda, y, Z)` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct TripleDiff<F> {
    pub lambda: F,
    pub y: F,
    pub z: F,
    pub t: F,
}

impl<F: Field> TripleDiff<F> {
    pub fn new(lambda: F, y: F, z: F, t: F) -> Self {
        TripleDiff { lambda, y, z, t }
    }
}

/// Residues `A_0, A_1, A_t` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct FuchsDiff<F> {
    pub a0: Mat2<F>,
    pub a1: Mat2<F>,
    pub at: Mat2<F>,
    pub t: F,
}

impl<F: Field> FuchsDiff<F> {
    /// Residue at infinity `-A_0 - A_1 - A_t`.
    pub fn a_inf(&self) -> Mat2<F> {
        -(self.a0.clone() + self.a1.clone() + self.at.clone())
    }

    /// `A(x) = A_0/x + A_1/(x-1) + A_t/(x-t)`.
    pub fn eval(&self, x: &F) -> Result<Mat2<F>> {
        let one = F::one();
        let i0 = x.try_inv()?;
        let i1 = (x.clone() - one).try_inv()?;
        let it = (x.clone() - self.t.clone()).try_inv()?;
        Ok(self.a0.scale(&i0) + self.a1.scale(&i1) + self.at.scale(&it))
    }

    pub fn residues(&self) -> [&Mat2<F>; 3] {
        [&self.a0, &self.a1, &self.at]
    }
}

fn check_triple<F: Field>(tr: &TripleDiff<F>, th: &ThetaDiff<F>) -> Result<()> {
    let fail = |what: &str| Err(Error::Assembly(what.to_string()));
    let one = F::one();
    if tr.lambda.is_zero() {
        return fail("lambda = 0");
    }
    if th.thinf.is_zero() {
        return fail("theta_inf = 0");
    }
    if tr.t.is_zero() || tr.t == one {
        return fail("t in {0, 1}");
    }
    if tr.y.is_zero() || tr.y == one || tr.y == tr.t {
        return fail("y in {0, 1, t}");
    }
    Ok(())
}

/// `a = t th0^2/y - (t-1) th1^2/(y-1) + t(t-1) tht^2/(y-t)`.
fn aux_a<F: Field>(y: &F, t: &F, th: &ThetaDiff<F>) -> Result<F> {
    let one = F::one();
    let t1 = t.clone() - one.clone();
    Ok(t.clone() * th.th0.sq() * y.try_inv()?
        - t1.clone() * th.th1.sq() * (y.clone() - one).try_inv()?
        + t.clone() * t1 * th.tht.sq() * (y.clone() - t.clone()).try_inv()?)
}

/// Assembles `A_0, A_1, A_t` from `(lambda, y, Z)`.
///
/// The diagonal residues are the partial-fraction coefficients of the
/// printed `A^(1,1)(x)`: at a pole `c` with `D(x) = x(x-1)(x-t)`,
/// `r(c) = (P(4Z^2(y-c) + 4 Z th_inf + th_inf^2/(y-c)) - a(y-c)) / (4 th_inf D'(c)) - th_inf/4`
/// where `P = y(y-1)(y-t)`. The off-diagonal residues follow from the printed
/// `(1,2)` and `(2,1)` entries directly.
pub fn assemble_a<F: Field>(tr: &TripleDiff<F>, th: &ThetaDiff<F>) -> Result<FuchsDiff<F>> {
    check_triple(tr, th)?;
    let (l, y, z, t) = (&tr.lambda, &tr.y, &tr.z, &tr.t);
    let one = F::one();
    let four = F::from_i64(4);
    let y1 = y.clone() - one.clone();
    let yt = y.clone() - t.clone();
    let t1 = t.clone() - one.clone();
    let p = y.clone() * y1.clone() * yt.clone();
    let a = aux_a(y, t, th)?;
    let thi = th.thinf.clone();

    let residue11 = |c: F, dprime: F| -> Result<F> {
        let yc = y.clone() - c;
        let inner = four.clone() * z.sq() * yc.clone()
            + four.clone() * z.clone() * thi.clone()
            + thi.sq() * yc.try_inv()?;
        let num = p.clone() * inner - a.clone() * yc;
        Ok(num * (four.clone() * thi.clone() * dprime).try_inv()? - thi.clone() * F::from_ratio(1, 4))
    };
    let r0 = residue11(F::zero(), t.clone())?;
    let r1 = residue11(one.clone(), one.clone() - t.clone())?;
    let rt = residue11(t.clone(), t.clone() * t1.clone())?;

    // (1,2): lambda (x - y)/(x(x-1)(x-t)).
    let b0 = -(l.clone() * y.clone()) * t.try_inv()?;
    let b1 = l.clone() * (one.clone() - y.clone()) * (one.clone() - t.clone()).try_inv()?;
    let bt = l.clone() * (t.clone() - y.clone()) * (t.clone() * t1.clone()).try_inv()?;

    // (2,1): (c0/x + c1/(x-1) - (c0+c1)/(x-t)) / lambda.
    let thi2 = thi.sq();
    let quarter = F::from_ratio(1, 4);
    let inner0 = y1.clone() * yt.clone() * (y.clone() * z.clone() + thi.clone()) * z.clone()
        + ((y1.clone() - t.clone()) * thi2.clone() - a.clone()) * quarter.clone();
    let c0 = y.clone() * (t.clone() * thi2.clone()).try_inv()? * inner0.sq()
        - t.clone() * th.th0.sq() * (four.clone() * y.clone()).try_inv()?;
    let inner1 = y.clone() * yt.clone() * (y1.clone() * z.clone() + thi.clone()) * z.clone()
        + ((y.clone() + one.clone() - t.clone()) * thi2.clone() - a.clone()) * quarter.clone();
    let c1 = y1.clone() * ((one.clone() - t.clone()) * thi2).try_inv()? * inner1.sq()
        - (one.clone() - t.clone()) * th.th1.sq() * (four * y1).try_inv()?;
    let il = l.try_inv()?;
    let cc0 = c0.clone() * il.clone();
    let cc1 = c1.clone() * il.clone();
    let cct = -(c0 + c1) * il;

    Ok(FuchsDiff {
        a0: Mat2::new(r0.clone(), b0, cc0, -r0),
        a1: Mat2::new(r1.clone(), b1, cc1, -r1),
        at: Mat2::new(rt.clone(), bt, cct, -rt),
        t: t.clone(),
    })
}

/// Recovers `(lambda, y, Z)` from the residues.
pub fn extract_triple<F: Field>(f: &FuchsDiff<F>) -> Result<TripleDiff<F>> {
    let one = F::one();
    let t = f.t.clone();
    // lambda (x - y) at x = 0 and x = 1.
    let lambda = (one.clone() - t.clone()) * f.a1.b.clone() - t.clone() * f.a0.b.clone();
    if lambda.is_zero() {
        return Err(Error::Assembly("lambda = 0".into()));
    }
    let y = -(f.a0.b.clone() * t.clone()) * lambda.try_inv()?;
    let z = f.a0.a.clone() * y.try_inv()?
        + f.a1.a.clone() * (y.clone() - one).try_inv()?
        + f.at.a.clone() * (y.clone() - t.clone()).try_inv()?;
    Ok(TripleDiff { lambda, y, z, t })
}

/// Schlesinger right-hand sides `([A_0,A_t]/(0-t), [A_1,A_t]/(1-t), minus their sum)`.
pub fn schlesinger_rhs<F: Field>(f: &FuchsDiff<F>, t: &F) -> Result<[Mat2<F>; 3]> {
    let one = F::one();
    if t.is_zero() || *t == one {
        return Err(Error::Precondition("t in {0, 1}".into()));
    }
    let s0 = f.a0.commutator(&f.at).scale(&(-t.clone()).try_inv()?);
    let s1 = f.a1.commutator(&f.at).scale(&(one - t.clone()).try_inv()?);
    let st = -(s0.clone() + s1.clone());
    Ok([s0, s1, st])
}

fn check_p6<F: Field>(y: &F, t: &F) -> Result<()> {
    let one = F::one();
    if t.is_zero() || *t == one {
        return Err(Error::Precondition("t in {0, 1}".into()));
    }
    if y.is_zero() || *y == one || y == t {
        return Err(Error::Precondition("y in {0, 1, t}".into()));
    }
    Ok(())
}

/// `(y', Z', lambda'/lambda)` of the sixth Painleve system in `(y, Z)` form.
pub fn p6_rhs<F: Field>(y: &F, z: &F, t: &F, th: &ThetaDiff<F>) -> Result<(F, F, F)> {
    check_p6(y, t)?;
    let one = F::one();
    let two = F::from_i64(2);
    let three = F::from_i64(3);
    let y1 = y.clone() - one.clone();
    let yt = y.clone() - t.clone();
    let t1 = t.clone() - one.clone();
    let itt = (t.clone() * t1.clone()).try_inv()?;

    let dy = y.clone() * y1.clone() * yt.clone() * itt.clone() * (two.clone() * z.clone() + yt.try_inv()?);

    let quad = -three * y.sq() + two.clone() * (t.clone() + one.clone()) * y.clone() - t.clone();
    let thi1 = th.thinf.clone() - one.clone();
    let bracket = (thi1.sq() - one.clone()) * itt.clone()
        - th.th0.sq() * (t1.clone() * y.sq()).try_inv()?
        - th.tht.sq() * yt.sq().try_inv()?
        + th.th1.sq() * (t.clone() * y1.sq()).try_inv()?;
    let dz = quad * itt.clone() * z.sq() - (two * y.clone() - one) * itt.clone() * z.clone()
        + bracket * F::from_ratio(1, 4);

    let dl = thi1 * yt * itt;
    Ok((dy, dz, dl))
}

/// The Hamiltonian `H(y, Z, t)` whose canonical equations are [`p6_rhs`].
pub fn hamiltonian<F: Field>(y: &F, z: &F, t: &F, th: &ThetaDiff<F>) -> Result<F> {
    check_p6(y, t)?;
    let one = F::one();
    let y1 = y.clone() - one.clone();
    let yt = y.clone() - t.clone();
    let t1 = t.clone() - one.clone();
    let itt = (t.clone() * t1.clone()).try_inv()?;
    let kin = y.clone() * y1.clone() * yt.clone() * itt.clone() * (z.sq() + z.clone() * yt.try_inv()?);
    let thi1 = th.thinf.clone() - one.clone();
    let pot = (thi1.sq() - one) * itt * y.clone()
        + th.th0.sq() * (t1 * y.clone()).try_inv()?
        + th.tht.sq() * yt.try_inv()?
        - th.th1.sq() * (t.clone() * y1).try_inv()?;
    Ok(kin - pot * F::from_ratio(1, 4))
}

/// Second-order form: `y''` from `(y, y', t)`.
pub fn p6_second_order<F: Field>(y: &F, dy: &F, t: &F, th: &ThetaDiff<F>) -> Result<F> {
    check_p6(y, t)?;
    let one = F::one();
    let half = F::from_ratio(1, 2);
    let y1 = y.clone() - one.clone();
    let yt = y.clone() - t.clone();
    let t1 = t.clone() - one.clone();
    let a = half.clone() * (y.try_inv()? + y1.try_inv()? + yt.try_inv()?) * dy.sq();
    let b = (t.try_inv()? + t1.try_inv()? + yt.try_inv()?) * dy.clone();
    let thi1 = th.thinf.clone() - one.clone();
    let c = y.clone() * y1.clone() * yt.clone() * half * (t.sq() * t1.sq()).try_inv()?
        * (thi1.sq() + th.th1.sq() * t1.clone() * y1.sq().try_inv()?
            - th.th0.sq() * t.clone() * y.sq().try_inv()?
            - (th.tht.sq() - one) * t1 * t.clone() * yt.sq().try_inv()?);
    Ok(a - b + c)
}

/// `Z` in terms of `(y, y', t)`.
pub fn z_from_velocity<F: Field>(y: &F, dy: &F, t: &F) -> Result<F> {
    let one = F::one();
    let y1 = y.clone() - one.clone();
    let yt = y.clone() - t.clone();
    let t1 = t.clone() - one;
    let two = F::from_i64(2);
    let first = div_or(t.clone() * t1 * dy.clone(), &(two.clone() * y.clone() * y1 * yt.clone()), || {
        Error::Precondition("y in {0, 1, t}".into())
    })?;
    Ok(first - (two * yt).try_inv()?)
}

impl<F: Field + ToJson> ToJson for ThetaDiff<F> {
    fn to_json(&self) -> Value {
        json!({"theta0": self.th0.to_json(), "theta1": self.th1.to_json(),
               "thetat": self.tht.to_json(), "thetainf": self.thinf.to_json()})
    }
}

impl<F: Field + FromJson> FromJson for ThetaDiff<F> {
    fn from_json(v: &Value) -> Result<Self> {
        if let Some(arr) = v.as_array() {
            if arr.len() != 4 {
                return Err(Error::Parse("theta needs four entries".into()));
            }
            let e: Vec<F> = arr.iter().map(F::from_json).collect::<Result<_>>()?;
            return Ok(ThetaDiff::new(e[0].clone(), e[1].clone(), e[2].clone(), e[3].clone()));
        }
        Ok(ThetaDiff::new(field(v, "theta0")?, field(v, "theta1")?, field(v, "thetat")?, field(v, "thetainf")?))
    }
}

impl<F: Field + ToJson> ToJson for FuchsDiff<F> {
    fn to_json(&self) -> Value {
        json!({"A0": self.a0.to_json(), "A1": self.a1.to_json(), "At": self.at.to_json(), "t": self.t.to_json()})
    }
}

impl<F: Field + FromJson> FromJson for FuchsDiff<F> {
    fn from_json(v: &Value) -> Result<Self> {
        Ok(FuchsDiff { a0: field(v, "A0")?, a1: field(v, "A1")?, at: field(v, "At")?, t: field(v, "t")? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::gr;

    fn theta() -> ThetaDiff<GaussRat> {
        ThetaDiff::new(gr(1, 2), gr(1, 3), gr(1, 5), gr(1, 7))
    }

    #[test]
    fn assembly_invariants() {
        let th = theta();
        let tr = TripleDiff::new(gr(2, 3), gr(3, 1), gr(1, 4), gr(2, 1));
        let f = assemble_a(&tr, &th).unwrap();
        assert_eq!(f.a_inf(), Mat2::diag(gr(1, 14), gr(-1, 14)));
        for (m, thi) in f.residues().iter().zip([&th.th0, &th.th1, &th.tht]) {
            assert!(m.trace().is_zero());
            assert_eq!(m.det(), -(thi.sq() * gr(1, 4)));
        }
        assert_eq!(extract_triple(&f).unwrap(), tr);
    }

    #[test]
    fn preconditions() {
        let th = theta();
        for tr in [
            TripleDiff::new(gr(0, 1), gr(3, 1), gr(0, 1), gr(2, 1)),
            TripleDiff::new(gr(1, 1), gr(2, 1), gr(0, 1), gr(2, 1)),
            TripleDiff::new(gr(1, 1), gr(3, 1), gr(0, 1), gr(1, 1)),
        ] {
            assert!(matches!(assemble_a(&tr, &th), Err(Error::Assembly(_))));
        }
    }

    #[test]
    fn p6_examples() {
        let th = theta();
        let (dy, _, _) = p6_rhs(&gr(3, 1), &gr(0, 1), &gr(2, 1), &th).unwrap();
        assert_eq!(dy, gr(3, 1));
        let th1 = ThetaDiff::new(gr(1, 2), gr(1, 3), gr(1, 5), gr(1, 1));
        let (_, _, dl) = p6_rhs(&gr(5, 2), &gr(7, 3), &gr(-4, 1), &th1).unwrap();
        assert!(dl.is_zero());
    }
}
