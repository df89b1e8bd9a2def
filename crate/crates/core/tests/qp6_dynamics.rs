use num_complex::Complex64;
use proptest::prelude::*;
use qpvi::arith::{gr, GaussRat, RatFunQ, Ring};
use qpvi::fuchsian_diff::ThetaDiff;
use qpvi::fuchsian_q::ThetaQ;
use qpvi::qp6_dynamics::*;
use qpvi::Error;

type C = Complex64;

fn theta() -> ThetaQ<GaussRat> {
    ThetaQ::inverse(gr(3, 2), gr(5, 3), gr(7, 4), gr(9, 5)).unwrap()
}

fn to_c(v: &GaussRat) -> C {
    v.to_c64()
}

fn theta_c(th: &ThetaQ<GaussRat>) -> ThetaQ<C> {
    ThetaQ::general([to_c(&th.th0), to_c(&th.th1), to_c(&th.tht), to_c(&th.thinf)], [
        to_c(&th.th0b),
        to_c(&th.th1b),
        to_c(&th.thtb),
        to_c(&th.thinfb),
    ])
    .unwrap()
}

fn rat() -> impl Strategy<Value = GaussRat> {
    (-15i64..=15, 1i64..=7).prop_map(|(a, b)| gr(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn map_satisfies_relations(y in rat(), z in rat()) {
        let (q, t, th) = (gr(2, 1), gr(3, 7), theta());
        if let Ok((f, g)) = qp6_map(&y, &z, &t, &q, &th) {
            let (r1, r2) = qpvi_relations(&y, &z, &f, &g, &t, &q, &th).unwrap();
            prop_assert!(r1.is_zero() && r2.is_zero());
        }
    }

    #[test]
    fn coordinate_round_trips(y in rat(), z in rat()) {
        let (q, t, th) = (gr(11, 10), gr(2, 1), theta());
        if let Ok((_, bz)) = change_coordinates((&y, &z), CoordChange::ZToBigZ, &t, &q, &th) {
            if let Ok((_, z1)) = change_coordinates((&y, &bz), CoordChange::BigZToZ, &t, &q, &th) {
                prop_assert_eq!(z1, z.clone());
            }
            let (u, v) = change_coordinates((&y, &bz), CoordChange::YZToUV, &t, &q, &th).unwrap();
            if let Ok((_, bz1)) = change_coordinates((&u, &v), CoordChange::UVToYZ, &t, &q, &th) {
                prop_assert_eq!(bz1, bz);
            }
        }
    }

    #[test]
    fn modified_map_is_conjugate(y in rat(), z in rat()) {
        let (q, t, th) = (gr(11, 10), gr(2, 1), theta());
        let qt = q.clone() * t.clone();
        let Ok((f, g)) = qp6_map(&y, &z, &t, &q, &th) else { return Ok(()) };
        let Ok((_, bz)) = change_coordinates((&y, &z), CoordChange::ZToBigZ, &t, &q, &th) else { return Ok(()) };
        let Ok((_, bz1)) = change_coordinates((&f, &g), CoordChange::ZToBigZ, &qt, &q, &th) else { return Ok(()) };
        prop_assert_eq!(modified_qp6_map(&y, &bz, &t, &q, &th).unwrap(), (f, bz1));
    }

    #[test]
    fn step_round_trips(y in rat(), z in rat(), forward in any::<bool>()) {
        let (q, t, th) = (gr(2, 1), gr(3, 7), theta());
        let p = SakaiPoint::base(y, z);
        let (dir, back, t1) = if forward {
            (Direction::Forward, Direction::Backward, q.clone() * t.clone())
        } else {
            (Direction::Backward, Direction::Forward, t.clone() / q.clone())
        };
        if let Ok(p1) = sakai_step(&p, &t, &q, &th, dir) {
            prop_assert_eq!(sakai_step(&p1, &t1, &q, &th, back).unwrap(), p);
        }
    }

    #[test]
    fn numeric_step_round_trips(yr in -4.0f64..4.0, yi in -2.0f64..2.0, zr in -4.0f64..4.0, zi in -2.0f64..2.0) {
        let th = theta_c(&theta());
        let (q, t) = (C::new(2.0, 0.0), C::new(3.0 / 7.0, 0.0));
        let p = SakaiPoint::base(C::new(yr, yi), C::new(zr, zi));
        if let Ok(p1) = sakai_step(&p, &t, &q, &th, Direction::Forward) {
            let back = sakai_step(&p1, &(q * t), &q, &th, Direction::Backward).unwrap();
            prop_assert!(back.distance(&p) <= 1e-9, "{}", back.distance(&p));
        }
    }
}

#[test]
fn map_example() {
    let th = ThetaQ::inverse(gr(3, 2), gr(3, 2), gr(3, 2), gr(2, 1)).unwrap();
    let (q, t) = (gr(2, 1), gr(3, 1));
    let (y, z) = (gr(5, 1), gr(7, 1));
    let (f, g) = qp6_map(&y, &z, &t, &q, &th).unwrap();
    let (r1, r2) = qpvi_relations(&y, &z, &f, &g, &t, &q, &th).unwrap();
    assert!(r1.is_zero() && r2.is_zero());
    assert_eq!(g, g_map(&y, &z, &t, &q, &th).unwrap());
    assert_eq!(f, f_map(&y, &g, &t, &q, &th).unwrap());
}

#[test]
fn g_vanishes_on_the_t_line() {
    let (q, t, th) = (gr(2, 1), gr(3, 7), theta());
    for y in [t.clone() * th.tht.clone(), t.clone() * th.thtb.clone()] {
        assert!(g_map(&y, &gr(5, 2), &t, &q, &th).unwrap().is_zero());
    }
}

#[test]
fn modified_map_example() {
    let q = gr(11, 10);
    let th = ThetaQ::from_diff(&ThetaDiff::new(gr(1, 2), gr(1, 3), gr(1, 5), gr(1, 7)), &q).unwrap();
    let t = gr(2, 1);
    let (y, z) = (gr(3, 1), gr(1, 4));
    let (_, bz) = change_coordinates((&y, &z), CoordChange::ZToBigZ, &t, &q, &th).unwrap();
    let (y1, bz1) = modified_qp6_map(&y, &bz, &t, &q, &th).unwrap();
    let qt = q.clone() * t.clone();
    let (_, z1) = change_coordinates((&y1, &bz1), CoordChange::BigZToZ, &qt, &q, &th).unwrap();
    let (r1, r2) = qpvi_relations(&y, &z, &y1, &z1, &t, &q, &th).unwrap();
    assert!(r1.is_zero() && r2.is_zero());
}

#[test]
fn coordinate_change_singular_loci() {
    let (q, t, th) = (gr(2, 1), gr(3, 7), theta());
    let r = change_coordinates((&gr(1, 1), &gr(2, 1)), CoordChange::ZToBigZ, &t, &q, &th);
    assert!(matches!(r, Err(Error::SingularLocus(_))));
    let r = change_coordinates((&gr(0, 1), &gr(2, 1)), CoordChange::UVToYZ, &t, &q, &th);
    assert!(matches!(r, Err(Error::SingularLocus(_))));
    for c in [CoordChange::ZToBigZ, CoordChange::YZToUV] {
        assert_eq!(c.inverse().inverse(), c);
    }
}

#[test]
fn base_points_are_reported() {
    let (q, t, th) = (gr(2, 1), gr(3, 7), theta());
    let y = th.th1.clone();
    let z = gr(0, 1);
    let r = g_map(&(t.clone() * th.tht.clone()), &z, &t, &q, &th);
    assert!(matches!(r, Err(Error::BasePoint)));
    assert!(matches!(g_map(&y, &gr(1, 1), &t, &q, &th), Err(Error::SingularLocus(_))));
}

#[test]
fn exceptional_points_over_every_center() {
    let (q, t, th) = (gr(2, 1), gr(3, 7), theta());
    let qt = q.clone() * t.clone();
    let centers = gamma_points(&t, &q, &th).unwrap();
    for g in Gamma::ALL {
        assert_eq!(Gamma::from_name(g.name()).unwrap(), g);
        for e in [P1::zero(), P1::Inf, P1::Fin(gr(-2, 5))] {
            let p = SakaiPoint::Exc { tag: g, e };
            assert_eq!(p.project(&t, &q, &th).unwrap(), centers[g.index()]);
            let f = sakai_step(&p, &t, &q, &th, Direction::Forward).unwrap();
            assert_eq!(sakai_step(&f, &qt, &q, &th, Direction::Backward).unwrap(), p);
        }
    }
    assert!(Gamma::from_name("gamma_2^+").is_err());
}

#[test]
fn base_point_at_a_center_is_rejected() {
    let (q, t, th) = (gr(2, 1), gr(3, 7), theta());
    let c = gamma_points(&t, &q, &th).unwrap()[Gamma::ZeroMinus.index()].clone();
    let r = sakai_step(&SakaiPoint::Base(c), &t, &q, &th, Direction::Forward);
    assert!(matches!(r, Err(Error::Precondition(_))), "{r:?}");
}

#[test]
fn special_orbit_through_the_exceptional_line() {
    let (q, t, th) = (gr(2, 1), gr(3, 7), theta());
    let qt = q.clone() * t.clone();
    for z0 in [gr(11, 5), gr(-3, 4), gr(7, 1)] {
        let p0 = SakaiPoint::base(th.th1b.clone(), z0.clone());
        let p1 = sakai_step(&p0, &t, &q, &th, Direction::Forward).unwrap();
        assert!(matches!(p1, SakaiPoint::Exc { tag: Gamma::OnePlus, .. }), "{p1:?}");
        let p2 = sakai_step(&p1, &qt, &q, &th, Direction::Forward).unwrap();
        let SakaiPoint::Base(b) = &p2 else { panic!("{p2:?}") };
        assert_eq!(b.z, P1::Fin(special_orbit_z2(&t, &z0, &q, &th).unwrap()));
    }
}

#[test]
fn biregularity_guard() {
    let (q, th) = (gr(2, 1), theta());
    assert!(check_biregular(&gr(3, 7), &q, &th).is_ok());
    let t = th.th0.clone() * th.thinf.clone() / gr(4, 1);
    assert!(matches!(check_biregular(&t, &q, &th), Err(Error::NonBiregular(_))));
    assert!(in_sq(&t, &q, &th, 4).unwrap());
    assert!(matches!(check_biregular(&gr(0, 1), &q, &th), Err(Error::NonBiregular(_))));
    let degenerate = ThetaQ::inverse(gr(3, 2), gr(5, 3), gr(1, 1), gr(9, 5)).unwrap();
    assert!(check_biregular(&gr(3, 7), &q, &degenerate).is_err());
    let r = sakai_step(&SakaiPoint::base(gr(1, 1), gr(1, 1)), &t, &q, &th, Direction::Forward);
    assert!(matches!(r, Err(Error::NonBiregular(_))));
}

fn state() -> QP6State<GaussRat> {
    QP6State { theta: theta(), q: gr(2, 1), t: gr(3, 7), point: SakaiPoint::base(gr(5, 1), gr(7, 1)) }
}

#[test]
fn trivial_range_returns_the_input() {
    let s = state();
    let orbit = discrete_solution(&s, 0, 0, 64).unwrap();
    assert_eq!(orbit.len(), 1);
    assert_eq!((orbit[0].ell, &orbit[0].t, &orbit[0].point), (0, &s.t, &s.point));
    assert!(matches!(discrete_solution(&s, 1, 3, 64), Err(Error::Precondition(_))));
}

#[test]
fn exact_orbit_follows_the_map() {
    let s = state();
    let orbit = discrete_solution(&s, -2, 3, 10_000).unwrap();
    assert_eq!(orbit.iter().map(|p| p.ell).collect::<Vec<_>>(), vec![-2, -1, 0, 1, 2, 3]);
    for w in orbit.windows(2) {
        assert_eq!(w[1].t, s.q.clone() * w[0].t.clone());
        if let (SakaiPoint::Base(a), SakaiPoint::Base(b)) = (&w[0].point, &w[1].point) {
            if let (P1::Fin(y), P1::Fin(z), P1::Fin(y1), P1::Fin(z1)) = (&a.y, &a.z, &b.y, &b.z) {
                let (r1, r2) = qpvi_relations(y, z, y1, z1, &w[0].t, &s.q, &s.theta).unwrap();
                assert!(r1.is_zero() && r2.is_zero());
            }
        }
    }
}

#[test]
fn exact_backend_reproduces_the_special_orbit() {
    let th = theta();
    let z0 = gr(-3, 4);
    let s = QP6State { theta: th.clone(), q: gr(2, 1), t: gr(3, 7), point: SakaiPoint::base(th.th1b.clone(), z0.clone()) };
    let orbit = discrete_solution(&s, 0, 2, 64).unwrap();
    assert_eq!(orbit[1].chart, Chart::Exceptional(Gamma::OnePlus));
    let z2 = special_orbit_z2(&s.t, &z0, &s.q, &th).unwrap();
    assert!(matches!(&orbit[2].point, SakaiPoint::Base(b) if b.z == P1::Fin(z2.clone())));
    let line = orbit[1].to_json_line(&s.q, &th).unwrap();
    assert_eq!(line["chart"], "E(gamma_1^+)");
    assert!(line.get("e").is_some());
}

#[test]
fn numeric_and_exact_backends_agree() {
    let s = state();
    let exact = discrete_solution(&s, -3, 3, 10_000).unwrap();
    let sc = QP6State { theta: theta_c(&s.theta), q: to_c(&s.q), t: to_c(&s.t), point: s.point.map(to_c) };
    let numeric = discrete_solution_numeric(&sc, -3, 3).unwrap();
    assert_eq!(exact.len(), numeric.len());
    for (a, b) in exact.iter().zip(&numeric) {
        assert_eq!(a.ell, b.ell);
        let d = a.point.map(to_c).distance(&b.point);
        assert!(d <= 1e-9, "ell {}: {d}", a.ell);
        assert!(a.exact && !b.exact);
    }
}

#[test]
fn orbit_json_lines() {
    let s = state();
    let orbit = discrete_solution(&s, 0, 2, 10_000).unwrap();
    let line = orbit[0].to_json_line(&s.q, &s.theta).unwrap();
    assert_eq!(line["ell"], 0);
    assert_eq!(line["chart"], "y,z");
    assert_eq!(line["exact"], true);
    for key in ["t", "y", "z"] {
        assert!(line.get(key).is_some());
    }
    // Deterministic serialization.
    let again = discrete_solution(&s, 0, 2, 10_000).unwrap();
    for (a, b) in orbit.iter().zip(&again) {
        assert_eq!(a.to_json_line(&s.q, &s.theta).unwrap().to_string(), b.to_json_line(&s.q, &s.theta).unwrap().to_string());
    }
}

#[test]
fn numeric_chart_switches_with_hysteresis() {
    let th = theta_c(&theta());
    let s = QP6State { theta: th, q: C::new(2.0, 0.0), t: C::new(3.0 / 7.0, 0.0), point: SakaiPoint::base(C::new(2e7, 0.0), C::new(0.5, 0.0)) };
    let orbit = discrete_solution_numeric(&s, 0, 0).unwrap();
    assert_eq!(orbit[0].chart, Chart::Affine { y_rec: true, z_rec: false });
    assert_eq!(orbit[0].chart.label(), "1/y,z");
    assert!(CHART_RETURN < CHART_SWITCH);
}

#[test]
fn degree_cap_is_a_resource_error() {
    let k = |v: GaussRat| RatFunQ::constant(v);
    let th = ThetaQ::inverse(k(gr(3, 2)), k(gr(5, 3)), k(gr(7, 4)), k(gr(9, 5))).unwrap();
    let s = QP6State { theta: th, q: RatFunQ::q(), t: k(gr(3, 7)), point: SakaiPoint::base(k(gr(5, 1)), k(gr(7, 1))) };
    let err = discrete_solution(&s, 0, 6, 4).unwrap_err();
    assert!(matches!(err, Error::DegreeCap { cap: 4, .. }), "{err:?}");
    assert!(err.is_resource());
}

#[test]
fn exact_backend_rejects_floats() {
    let s = state();
    let sc = QP6State { theta: theta_c(&s.theta), q: to_c(&s.q), t: to_c(&s.t), point: s.point.map(to_c) };
    assert!(matches!(discrete_solution(&sc, 0, 1, 64), Err(Error::Precondition(_))));
}
