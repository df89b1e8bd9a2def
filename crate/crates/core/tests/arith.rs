use proptest::prelude::*;
use qpvi::arith::*;
use qpvi::Error;

fn rat() -> impl Strategy<Value = GaussRat> {
    (-12i64..=12, 1i64..=9, -6i64..=6, 1i64..=5).prop_map(|(a, b, c, d)| GaussRat::complex((a, b), (c, d)))
}

fn real_rat() -> impl Strategy<Value = GaussRat> {
    (-12i64..=12, 1i64..=9).prop_map(|(a, b)| gr(a, b))
}

fn poly(max_deg: usize) -> impl Strategy<Value = PolyQ> {
    prop::collection::vec(rat(), 1..=max_deg + 1).prop_map(Poly::new)
}

fn nonzero_poly(max_deg: usize) -> impl Strategy<Value = PolyQ> {
    poly(max_deg).prop_filter("nonzero", |p| p.degree().is_some())
}

fn ratfun() -> impl Strategy<Value = RatFunQ> {
    (poly(3), nonzero_poly(3)).prop_map(|(n, d)| RatFunQ::reduce(n, d).unwrap())
}

fn mat() -> impl Strategy<Value = Mat2<GaussRat>> {
    (rat(), rat(), rat(), rat()).prop_map(|(a, b, c, d)| Mat2::new(a, b, c, d))
}

fn p(v: &[i64]) -> PolyQ {
    Poly::new(v.iter().map(|&c| GaussRat::int(c)).collect())
}

fn is_canonical(f: &RatFunQ) -> bool {
    let monic = f.den().lead().is_one();
    let coprime = f.num().gcd(f.den()).unwrap().degree() == Some(0);
    let zero_form = f.num().degree().is_some() || f.den().degree() == Some(0);
    monic && coprime && zero_form
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reduce_is_canonical(n in poly(4), d in nonzero_poly(4), c in nonzero_poly(2)) {
        let f = RatFunQ::reduce(n.clone(), d.clone()).unwrap();
        prop_assert!(is_canonical(&f));
        // A common factor does not change the representation.
        prop_assert_eq!(RatFunQ::reduce(n * c.clone(), d * c).unwrap(), f);
    }

    #[test]
    fn multiplication_then_division(f in ratfun(), g in ratfun()) {
        prop_assume!(!g.is_zero());
        let back = (f.clone() * g.clone()) * g.try_inv().unwrap();
        prop_assert!(is_canonical(&back));
        prop_assert_eq!(back, f);
    }

    #[test]
    fn evaluation_is_additive(f in ratfun(), g in ratfun(), q0 in rat()) {
        if let (Ok(a), Ok(b)) = (f.eval(&q0), g.eval(&q0)) {
            prop_assert_eq!((f + g).eval(&q0).unwrap(), a + b);
        }
    }

    #[test]
    fn determinant_is_multiplicative(m in mat(), n in mat()) {
        prop_assert_eq!((m.clone() * n.clone()).det(), m.det() * n.det());
    }

    #[test]
    fn determinant_is_multiplicative_over_ratfun(a in ratfun(), b in ratfun(), c in ratfun(), d in ratfun(), e in ratfun()) {
        let m = Mat2::new(a, b.clone(), c, d);
        let n = Mat2::new(e, b, RatFunQ::q(), RatFunQ::one());
        prop_assert_eq!((m.clone() * n.clone()).det(), m.det() * n.det());
    }

    #[test]
    fn series_product_truncates_polynomial_product(a in prop::collection::vec(rat(), 1..6), b in prop::collection::vec(rat(), 1..6), order in 0usize..8) {
        let c = rat_center();
        let prod = SeriesT::new(c.clone(), a.clone(), order) * SeriesT::new(c.clone(), b.clone(), order);
        let full = Poly::new(a) * Poly::new(b);
        for k in 0..=order {
            prop_assert_eq!(prod.coeff(k), full.coeff(k));
        }
        prop_assert_eq!(prod.order(), order);
    }

    #[test]
    fn series_order_is_minimum(a in prop::collection::vec(rat(), 1..4), n in 0usize..6, m in 0usize..6) {
        let c = rat_center();
        let s = SeriesT::new(c.clone(), a.clone(), n) + SeriesT::new(c, a, m);
        prop_assert_eq!(s.order(), n.min(m));
    }

    #[test]
    fn sylvester_residual_is_exact(m in mat(), rhs in mat(), lambda in rat()) {
        match solve_sylvester(&lambda, &m, &rhs) {
            Ok(x) => prop_assert_eq!(x.scale(&lambda) * m.clone() - m * x, rhs),
            // Singular exactly when lambda mu = nu for eigenvalues mu, nu of M:
            // the resultant of det(mu - M) and det(lambda mu - M) in mu vanishes.
            Err(e) => {
                prop_assert_eq!(e, Error::ResonantSylvester);
                let (tr, det) = (m.trace(), m.det());
                let l = lambda;
                let res = (l.clone() - GaussRat::one()).sq() * det.clone()
                    * (l.clone() * tr.sq() - (l.clone() + GaussRat::one()).sq() * det.clone());
                prop_assert!(res.is_zero());
            }
        }
    }

    #[test]
    fn json_round_trips(f in ratfun(), m in mat(), z in real_rat()) {
        prop_assert_eq!(RatFunQ::from_json(&f.to_json()).unwrap(), f);
        prop_assert_eq!(Mat2::<GaussRat>::from_json(&m.to_json()).unwrap(), m);
        prop_assert_eq!(GaussRat::from_json(&z.to_json()).unwrap(), z);
    }

    #[test]
    fn display_parses_back(z in rat()) {
        prop_assert_eq!(z.to_string().parse::<GaussRat>().unwrap(), z);
    }
}

fn rat_center() -> GaussRat {
    gr(2, 3)
}

#[test]
fn reduce_examples() {
    let f = ratfun_reduce(p(&[-1, 0, 1]), p(&[-1, 1])).unwrap();
    assert_eq!((f.num(), f.den()), (&p(&[1, 1]), &p(&[1])));
    let z = ratfun_reduce(Poly::new(vec![]), p(&[2, 0, 0, 1])).unwrap();
    assert_eq!((z.num().degree(), z.den()), (None, &p(&[1])));
    let n = p(&[-1, 1]) * p(&[-2, 1]) * p(&[-2, 1]);
    let f = ratfun_reduce(n, p(&[-6, 3])).unwrap();
    assert_eq!(f.num(), &(p(&[-1, 1]) * p(&[-2, 1])).scale(&gr(1, 3)));
    assert_eq!(ratfun_reduce(p(&[1]), Poly::new(vec![])), Err(Error::ZeroPolynomial));
}

#[test]
fn eval_examples() {
    let one = GaussRat::one();
    assert_eq!(ratfun_eval(&RatFunQ::from_poly(p(&[1, 1])), &one).unwrap(), gr(2, 1));
    let pole = ratfun_reduce(p(&[1]), p(&[-1, 1])).unwrap();
    assert_eq!(ratfun_eval(&pole, &one), Err(Error::Pole));
    let h = ratfun_reduce(p(&[1, 0, 1]), p(&[2, 1])).unwrap();
    assert!(ratfun_eval(&h, &GaussRat::i()).unwrap().is_zero());
}

#[test]
fn sylvester_examples() {
    let id = Mat2::<GaussRat>::identity();
    assert_eq!(solve_sylvester(&gr(1, 1), &id, &id), Err(Error::ResonantSylvester));
    let x = solve_sylvester(&gr(2, 1), &Mat2::diag(gr(1, 1), gr(3, 1)), &Mat2::diag(gr(2, 1), gr(6, 1))).unwrap();
    assert_eq!(x, Mat2::diag(gr(2, 1), gr(2, 1)));
}

#[test]
fn degree_cap_is_a_resource_error() {
    let f = RatFunQ::from_poly(Poly::monomial(GaussRat::one(), 12));
    let err = f.check_degree(8).unwrap_err();
    assert!(matches!(err, Error::DegreeCap { degree: 12, cap: 8 }));
    assert!(err.is_resource());
    assert!(f.check_degree(DEFAULT_DEGREE_CAP).is_ok());
}

#[test]
fn complex_backend_field_ops() {
    let z = Complex64::new(0.3, -1.2);
    assert!((z * z.try_inv().unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    assert!(Complex64::new(0.0, 0.0).try_inv().is_err());
}
