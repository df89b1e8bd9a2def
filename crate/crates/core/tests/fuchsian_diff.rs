use num_complex::Complex64;
use proptest::prelude::*;
use qpvi::arith::{gr, solve_linear, Field, FromJson, GaussRat, Mat2, Ring, SeriesT, ToJson};
use qpvi::confluence::p6_taylor;
use qpvi::fuchsian_diff::*;
use qpvi::Error;

type C = Complex64;

fn rat() -> impl Strategy<Value = GaussRat> {
    (-12i64..=12, 1i64..=9).prop_map(|(a, b)| gr(a, b))
}

fn gauss() -> impl Strategy<Value = GaussRat> {
    (-12i64..=12, 1i64..=9, -4i64..=4, 1i64..=5).prop_map(|(a, b, c, d)| GaussRat::complex((a, b), (c, d)))
}

fn nonzero() -> impl Strategy<Value = GaussRat> {
    gauss().prop_filter("nonzero", |v| !v.is_zero())
}

fn theta() -> impl Strategy<Value = ThetaDiff<GaussRat>> {
    (gauss(), gauss(), gauss(), nonzero()).prop_map(|(a, b, c, d)| ThetaDiff::new(a, b, c, d))
}

fn triple() -> impl Strategy<Value = TripleDiff<GaussRat>> {
    (nonzero(), gauss(), rat(), gauss())
        .prop_filter("generic", |(_, y, _, t)| {
            let one = GaussRat::one();
            !t.is_zero() && *t != one && !y.is_zero() && *y != one && y != t
        })
        .prop_map(|(l, y, z, t)| TripleDiff::new(l, y, z, t))
}

fn example_theta() -> ThetaDiff<GaussRat> {
    ThetaDiff::new(gr(1, 2), gr(1, 3), gr(1, 5), gr(1, 7))
}

/// `d/ds f(v + s)` at `s = 0` by evaluating over first-order series.
fn partial(v: &GaussRat, f: impl Fn(&SeriesT<GaussRat>) -> qpvi::Result<SeriesT<GaussRat>>) -> GaussRat {
    let s = SeriesT::new(GaussRat::zero(), vec![v.clone(), GaussRat::one()], 1);
    f(&s).unwrap().coeff(1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn assembly_invariants(tr in triple(), th in theta(), x in gauss()) {
        let f = match assemble_a(&tr, &th) {
            Ok(f) => f,
            Err(Error::Assembly(_)) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        for (m, v) in f.residues().iter().zip([&th.th0, &th.th1, &th.tht]) {
            prop_assert!(m.trace().is_zero());
            prop_assert_eq!(m.det(), -(v.sq() * gr(1, 4)));
        }
        prop_assert_eq!(f.a_inf(), Mat2::diag(th.thinf.clone() * gr(1, 2), th.thinf.clone() * gr(-1, 2)));
        let at_y = f.eval(&tr.y).unwrap();
        prop_assert!(at_y.b.is_zero());
        prop_assert_eq!(&at_y.a, &tr.z);
        let one = GaussRat::one();
        if !x.is_zero() && x != one && x != tr.t {
            let a12 = tr.lambda.clone() * (x.clone() - tr.y.clone())
                / (x.clone() * (x.clone() - one) * (x.clone() - tr.t.clone()));
            prop_assert_eq!(f.eval(&x).unwrap().b, a12);
        }
        prop_assert_eq!(extract_triple(&f).unwrap(), tr);
        prop_assert_eq!(FuchsDiff::from_json(&f.to_json()).unwrap(), f);
    }

    #[test]
    fn schlesinger_rhs_properties(tr in triple(), th in theta()) {
        let Ok(f) = assemble_a(&tr, &th) else { return Ok(()) };
        let [s0, s1, st] = schlesinger_rhs(&f, &tr.t).unwrap();
        prop_assert!((s0.clone() + s1.clone() + st.clone()).is_zero());
        let (a0, at) = (&f.a0, &f.at);
        let e12 = (a0.a.clone() * at.b.clone() + a0.b.clone() * at.d.clone()
            - at.a.clone() * a0.b.clone() - at.b.clone() * a0.d.clone())
            / (-tr.t.clone());
        prop_assert_eq!(&s0.b, &e12);
        // First variation of det(A_i + h R_i) vanishes, so the spectrum is stationary.
        for (a, r) in [(&f.a0, &s0), (&f.a1, &s1), (&f.at, &st)] {
            prop_assert!((a.adjugate() * r.clone()).trace().is_zero());
        }
    }

    #[test]
    fn p6_rhs_is_hamiltonian(y in gauss(), z in rat(), t in gauss(), th in theta()) {
        let one = GaussRat::one();
        prop_assume!(!t.is_zero() && t != one && !y.is_zero() && y != one && y != t);
        let (dy, dz, _) = p6_rhs(&y, &z, &t, &th).unwrap();
        let ths = th.map(|v| SeriesT::constant(v.clone()));
        let k = |v: &GaussRat| SeriesT::constant(v.clone());
        let hz = partial(&z, |s| hamiltonian(&k(&y), s, &k(&t), &ths));
        let hy = partial(&y, |s| hamiltonian(s, &k(&z), &k(&t), &ths));
        prop_assert_eq!(dy.clone(), hz);
        prop_assert_eq!(dz, -hy);
        prop_assert_eq!(z_from_velocity(&y, &dy, &t).unwrap(), z);
    }
}

#[test]
fn partial_fraction_fit_recovers_residues() {
    let th = ThetaDiff::new(gr(1, 1), gr(1, 1), gr(1, 1), gr(2, 1));
    let t = gr(2, 1);
    let f = assemble_a(&TripleDiff::new(gr(1, 1), gr(3, 1), gr(0, 1), t.clone()), &th).unwrap();
    let xs = [gr(5, 1), gr(7, 1), gr(11, 1)];
    let vals: Vec<Mat2<GaussRat>> = xs.iter().map(|x| f.eval(x).unwrap()).collect();
    let rows: Vec<Vec<GaussRat>> = xs
        .iter()
        .map(|x| vec![x.try_inv().unwrap(), (x.clone() - gr(1, 1)).try_inv().unwrap(), (x.clone() - t.clone()).try_inv().unwrap()])
        .collect();
    let mut fitted = [Mat2::<GaussRat>::zero(), Mat2::zero(), Mat2::zero()];
    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let rhs = vals.iter().map(|m| m.get(i, j).clone()).collect();
        let sol = solve_linear(rows.clone(), rhs).unwrap();
        for k in 0..3 {
            let e = sol[k].clone();
            let m = &mut fitted[k];
            match (i, j) {
                (0, 0) => m.a = e,
                (0, 1) => m.b = e,
                (1, 0) => m.c = e,
                _ => m.d = e,
            }
        }
    }
    assert_eq!(fitted[0], f.a0);
    assert_eq!(fitted[1], f.a1);
    assert_eq!(fitted[2], f.at);
}

#[test]
fn p6_examples() {
    let th = example_theta();
    let (y, z, t) = (gr(3, 1), gr(1, 4), gr(2, 1));
    let (dy, dz, _) = p6_rhs(&y, &z, &t, &th).unwrap();
    // y(y-1)(y-t)/(t(t-1)) (2Z + 1/(y-t)) = 3 * 3/2 = 9/2
    assert_eq!(dy, gr(9, 2));
    let ths = th.map(|v| SeriesT::constant(v.clone()));
    let k = |v: &GaussRat| SeriesT::constant(v.clone());
    assert_eq!(dz, -partial(&y, |s| hamiltonian(s, &k(&z), &k(&t), &ths)));
    let (dy0, _, _) = p6_rhs(&y, &gr(0, 1), &t, &th).unwrap();
    assert_eq!(dy0, y.clone() * (y.clone() - gr(1, 1)) / (t.clone() * (t.clone() - gr(1, 1))));
    let th1 = ThetaDiff::new(gr(1, 2), gr(1, 3), gr(1, 5), gr(1, 1));
    assert!(p6_rhs(&y, &z, &t, &th1).unwrap().2.is_zero());
}

#[test]
fn second_order_form_matches_series() {
    let th = example_theta();
    let (y, z, t) = (gr(3, 1), gr(1, 4), gr(2, 1));
    let (ys, _) = p6_taylor(&y, &z, &t, &th, 4).unwrap();
    let ypp = p6_second_order(&y, &ys.coeff(1), &t, &th).unwrap();
    assert_eq!(ypp, ys.coeff(2) * gr(2, 1));
}

#[test]
fn hamiltonian_finite_differences() {
    let th = ThetaDiff::new(C::new(0.3, 0.1), C::new(0.7, 0.0), C::new(0.45, -0.2), C::new(1.6, 0.0));
    let (y, z, t) = (C::new(0.6, 0.3), C::new(0.2, -0.1), C::new(2.5, 0.5));
    let h = 1e-6;
    let (dy, dz, _) = p6_rhs(&y, &z, &t, &th).unwrap();
    let hz = (hamiltonian(&y, &(z + h), &t, &th).unwrap() - hamiltonian(&y, &(z - h), &t, &th).unwrap()) / (2.0 * h);
    let hy = (hamiltonian(&(y + h), &z, &t, &th).unwrap() - hamiltonian(&(y - h), &z, &t, &th).unwrap()) / (2.0 * h);
    assert!((dy - hz).norm() < 1e-8);
    assert!((dz + hy).norm() < 1e-8);
}

#[test]
fn schlesinger_spectrum_drift_is_second_order() {
    let th = example_theta().map(|v| v.to_c64());
    let tr = TripleDiff::new(C::new(0.7, 0.2), C::new(3.0, 0.5), C::new(0.25, -0.1), C::new(2.0, 0.0));
    let f = assemble_a(&tr, &th).unwrap();
    let rhs = schlesinger_rhs(&f, &tr.t).unwrap();
    let drift = |h: f64| -> f64 {
        f.residues().iter().zip(&rhs).map(|(a, r)| ((*a).clone() + r.scale(&C::new(h, 0.0))).det() - a.det()).map(|d| d.norm()).fold(0.0, f64::max)
    };
    let (d1, d2) = (drift(1e-3), drift(1e-4));
    assert!(d1 < 1e-4 && (80.0..120.0).contains(&(d1 / d2)), "{d1} {d2}");
}

#[test]
fn diagonal_residues_commute() {
    let d = |a: i64, b: i64| Mat2::diag(gr(a, b), gr(-a, b));
    let th = example_theta();
    let tr = TripleDiff::new(gr(1, 1), gr(3, 1), gr(0, 1), gr(2, 1));
    let mut f = assemble_a(&tr, &th).unwrap();
    (f.a0, f.a1, f.at) = (d(1, 2), d(1, 3), d(1, 5));
    assert!(schlesinger_rhs(&f, &gr(2, 1)).unwrap().iter().all(|m| m.is_zero()));
}

#[test]
fn preconditions() {
    let th = example_theta();
    for tr in [
        TripleDiff::new(gr(0, 1), gr(3, 1), gr(0, 1), gr(2, 1)),
        TripleDiff::new(gr(1, 1), gr(1, 1), gr(0, 1), gr(2, 1)),
        TripleDiff::new(gr(1, 1), gr(2, 1), gr(0, 1), gr(2, 1)),
        TripleDiff::new(gr(1, 1), gr(3, 1), gr(0, 1), gr(0, 1)),
    ] {
        assert!(matches!(assemble_a(&tr, &th), Err(Error::Assembly(_))));
    }
    let th0 = ThetaDiff::new(gr(1, 2), gr(1, 3), gr(1, 5), gr(0, 1));
    assert!(matches!(assemble_a(&TripleDiff::new(gr(1, 1), gr(3, 1), gr(0, 1), gr(2, 1)), &th0), Err(Error::Assembly(_))));
    assert!(p6_rhs(&gr(2, 1), &gr(0, 1), &gr(2, 1), &th).is_err());
    let f = assemble_a(&TripleDiff::new(gr(1, 1), gr(3, 1), gr(0, 1), gr(2, 1)), &th).unwrap();
    assert!(schlesinger_rhs(&f, &gr(1, 1)).is_err());
    assert!(!ThetaDiff::new(gr(1, 1), gr(1, 3), gr(1, 5), gr(1, 7)).is_nonresonant());
    assert!(th.is_nonresonant());
}
