use num_complex::Complex64;
use proptest::prelude::*;
use qpvi::arith::{gr, Field, GaussRat, Ring, SeriesT};
use qpvi::fuchsian_diff::{p6_rhs, ThetaDiff};
use qpvi::fuchsian_q::ThetaQ;
use qpvi::ode::{integrate, OdeOptions};
use qpvi::okamoto::*;
use qpvi::qp6_dynamics::{gamma_points, Direction, Gamma, P1P1Point, SakaiPoint, P1};
use qpvi::Error;

type C = Complex64;

fn theta() -> ThetaDiff<GaussRat> {
    ThetaDiff::new(gr(1, 3), gr(2, 5), gr(3, 7), gr(5, 4))
}

fn inv(x: GaussRat) -> GaussRat {
    x.try_inv().unwrap()
}

/// The displayed field at the blow-up of `beta_0^-`, chart `(u01, v01)`.
fn display_01(u: &GaussRat, v: &GaussRat, t: &GaussRat, th: &ThetaDiff<GaussRat>) -> [GaussRat; 2] {
    let one = gr(1, 1);
    let h = gr(1, 2);
    let q = gr(1, 4);
    let t1 = t.clone() - one.clone();
    let tt1 = t.clone() * t1.clone();
    let tth0 = t.clone() * th.th0.clone();
    let du = (gr(2, 1) * (u.clone() * v.clone() - tth0.clone() * h.clone()) + u.clone() * (u.clone() - one.clone())) * inv(tt1.clone());
    let w = gr(2, 1) * u.clone() * v.clone() - tth0.clone();
    let thi = th.thinf.clone() * (th.thinf.clone() - gr(2, 1));
    let dv = -(v.sq() - v.clone() + tth0.clone() * h.clone()) * inv(tt1.clone())
        - (t.clone() + one.clone()) * inv(t.sq() * t1.clone()) * (u.clone() * v.clone() - tth0.clone()) * v.clone()
        + v.clone() * inv(t.clone())
        + q.clone() * (-th.th0.sq() * inv(t1.clone()) + th.th1.sq() * inv(t.clone()) - th.tht.sq())
        + q * ((w.sq() - t1.sq() * th.th1.sq()) * inv(tt1.clone() * (u.clone() - one.clone()))
            + (w.sq() - tt1.sq() * th.tht.sq()) * inv(t.sq() * t1.clone() * (u.clone() - t.clone()))
            + thi * (u.clone() - one) * (u.clone() - t.clone()) * inv(tt1));
    [du, dv]
}

/// The displayed field in chart `(u02, v02)`.
fn display_02(u: &GaussRat, v: &GaussRat, t: &GaussRat, th: &ThetaDiff<GaussRat>) -> [GaussRat; 2] {
    let one = gr(1, 1);
    let q = gr(1, 4);
    let t1 = t.clone() - one.clone();
    let tt1 = t.clone() * t1.clone();
    let tth0 = t.clone() * th.th0.clone();
    let uv = u.clone() * v.clone();
    let w = gr(2, 1) * v.clone() - tth0.clone();
    let thi = th.thinf.clone() * (th.thinf.clone() - gr(2, 1));
    let lin = -th.th0.sq() * inv(t1.clone()) + th.th1.sq() * inv(t.clone()) - th.tht.sq();
    let du = (one.clone() - u.clone() + tth0.clone() * gr(1, 2) * u.sq()) * inv(tt1.clone())
        + (t.clone() + one.clone()) * inv(t.sq() * t1.clone()) * (v.clone() - tth0.clone()) * u.clone()
        - u.clone() * inv(t.clone())
        - u.sq() * q.clone() * lin
        - u.sq() * q.clone()
            * ((w.sq() - t1.sq() * th.th1.sq()) * inv(tt1.clone() * (uv.clone() - one.clone()))
                + (w.sq() - tt1.sq() * th.tht.sq()) * inv(t.sq() * t1.clone() * (uv.clone() - t.clone()))
                + thi.clone() * (uv.clone() - one.clone()) * (uv.clone() - t.clone()) * inv(tt1.clone()));
    let dv = (v.clone() - tth0) * inv(tt1.clone() * u.clone())
        + q.clone()
            * ((w.sq() - t1.sq() * th.th1.sq()) * inv(tt1.clone() * (uv.clone() - one.clone()))
                + (w.sq() - tt1.sq() * th.tht.sq()) * inv(tt1.clone() * (uv.clone() - t.clone())))
        + thi * uv.clone() * (uv.clone() - one.clone()) * (uv.clone() - t.clone()) * inv(gr(4, 1) * tt1.clone())
        + q * (-th.th0.sq() * (uv.clone() - one.clone() - t.clone()) * inv(t1.clone())
            + th.th1.sq() * (uv.clone() + one.clone() - t.clone()) * inv(t.clone())
            - (tt1.clone() * th.tht.sq() - gr(2, 1) * w) * (uv - one + t.clone()) * inv(tt1))
        + th.th0.clone() * gr(1, 2);
    [du, dv]
}

/// The displayed field in the chart `(u, v)`.
fn display_00(u: &GaussRat, v: &GaussRat, t: &GaussRat, th: &ThetaDiff<GaussRat>) -> [GaussRat; 2] {
    let one = gr(1, 1);
    let q = gr(1, 4);
    let t1 = t.clone() - one.clone();
    let tt1 = t.clone() * t1.clone();
    let v4 = gr(4, 1) * v.sq();
    let thi = th.thinf.clone() * (th.thinf.clone() - gr(2, 1));
    let du = (gr(2, 1) * v.clone() + u.clone() * (u.clone() - one.clone())) * inv(tt1.clone());
    let dv = q.clone()
        * ((v4.clone() - t.sq() * th.th0.sq()) * inv(tt1.clone() * u.clone())
            + (v4.clone() - t1.sq() * th.th1.sq()) * inv(tt1.clone() * (u.clone() - one.clone()))
            + (v4 - tt1.sq() * th.tht.sq()) * inv(tt1.clone() * (u.clone() - t.clone())))
        + thi * u.clone() * (u.clone() - one.clone()) * (u.clone() - t.clone()) * inv(gr(4, 1) * tt1.clone())
        + q * (-th.th0.sq() * (u.clone() - one.clone() - t.clone()) * inv(t1.clone())
            + th.th1.sq() * (u.clone() + one.clone() - t.clone()) * inv(t.clone())
            - (tt1.clone() * th.tht.sq() - gr(4, 1) * v.clone()) * (u.clone() - one + t.clone()) * inv(tt1));
    [du, dv]
}

#[test]
fn chart0_matches_display() {
    let th = theta();
    let t = gr(-3, 2);
    for (u, v) in [(gr(2, 1), gr(0, 1)), (gr(1, 3), gr(-5, 2)), (gr(7, 2), gr(3, 5))] {
        let f = vf_chart(&OkaPoint::hirz(F2Point::new(0, u.clone(), v.clone())), &t, &th).unwrap();
        assert_eq!(f, display_00(&u, &v, &t, &th));
    }
}

#[test]
fn blowup_charts_match_display_at_beta0_minus() {
    let th = theta();
    let t = gr(-3, 2);
    let site = Beta::ZeroMinus;
    for (a, b) in [(gr(1, 3), gr(2, 7)), (gr(-5, 2), gr(1, 9)), (gr(3, 1), gr(-4, 3))] {
        let p1 = OkaPoint::new(OkaChart::Blowup { site, chart: 1 }, a.clone(), b.clone());
        assert_eq!(vf_chart(&p1, &t, &th).unwrap(), display_01(&a, &b, &t, &th));
        let p2 = OkaPoint::new(OkaChart::Blowup { site, chart: 2 }, a.clone(), b.clone());
        assert_eq!(vf_chart(&p2, &t, &th).unwrap(), display_02(&a, &b, &t, &th));
    }
}

#[test]
fn blowup_chart_overlap_identity() {
    let th = theta();
    let t = gr(-3, 2);
    let centers = base_points_diff(&th, &t).unwrap();
    let p = OkaPoint::new(OkaChart::Blowup { site: Beta::ZeroMinus, chart: 1 }, gr(2, 3), gr(5, 7));
    let q = p.to_chart(OkaChart::Blowup { site: Beta::ZeroMinus, chart: 2 }, &centers).unwrap();
    assert_eq!((q.c1.clone(), q.c2.clone()), (inv(gr(5, 7)), gr(2, 3) * gr(5, 7)));
    assert_eq!(q.to_chart(p.chart, &centers).unwrap(), p);
    let e = OkaPoint::exceptional(Beta::TPlus, P1::Fin(gr(3, 1)));
    let e2 = e.to_chart(OkaChart::Blowup { site: Beta::TPlus, chart: 2 }, &centers).unwrap();
    assert_eq!((e2.c1.clone(), e2.c2.clone()), (gr(1, 3), gr(0, 1)));
    assert!(e.to_chart(OkaChart::Hirz(0), &centers).is_err());
}

/// Exact Jacobian transport: move along `p + eps f` with `t + eps`, change
/// chart over truncated series, compare the first-order coefficient.
fn transport_check(p: &OkaPoint<GaussRat>, t: &GaussRat, th: &ThetaDiff<GaussRat>) -> usize {
    type S = SeriesT<GaussRat>;
    let f = vf_chart(p, t, th).unwrap();
    let e = S::variable(gr(0, 1), 2);
    let emb = |x: &GaussRat| S::constant(x.clone());
    let ps = OkaPoint::new(p.chart, emb(&p.c1) + e.clone() * emb(&f[0]), emb(&p.c2) + e.clone() * emb(&f[1]));
    let ts = emb(t) + e;
    let ths = th.map(|x| S::constant(x.clone()));
    let centers = base_points_diff(&ths, &ts).unwrap();
    let mut checked = 0;
    for ch in OkaChart::ALL {
        let Ok(q) = ps.to_chart(ch, &centers) else { continue };
        let q0 = OkaPoint::new(ch, q.c1.coeff(0), q.c2.coeff(0));
        let Ok(g) = vf_chart(&q0, t, th) else { continue };
        assert_eq!(g[0], q.c1.coeff(1), "chart {}", ch.label());
        assert_eq!(g[1], q.c2.coeff(1), "chart {}", ch.label());
        checked += 1;
    }
    checked
}

#[test]
fn jacobian_consistency_all_charts() {
    let th = theta();
    let t = gr(-3, 2);
    let p = OkaPoint::hirz(F2Point::new(0, gr(2, 5), gr(-1, 3)));
    assert_eq!(transport_check(&p, &t, &th), 20);
    let q = OkaPoint::hirz(F2Point::new(0, gr(-7, 3), gr(11, 4)));
    assert_eq!(transport_check(&q, &t, &th), 20);
}

#[test]
fn jacobian_consistency_near_exceptional_lines() {
    let th = theta();
    let t = gr(5, 2);
    for site in Beta::ALL {
        let p = OkaPoint::new(OkaChart::Blowup { site, chart: 1 }, gr(1, 1000), gr(2, 3));
        assert!(transport_check(&p, &t, &th) >= 4, "{}", site.name());
    }
}

#[test]
fn exceptional_line_finite_except_at_strict_transform() {
    let th = theta().map(|x| x.to_c64());
    let t = C::new(-1.5, 0.25);
    let mut finite = 0;
    for k in 0..64 {
        let w = C::from_polar(0.3 + 0.1 * k as f64, 0.7 * k as f64);
        let p = OkaPoint::exceptional(Beta::ZeroMinus, P1::Fin(w));
        let f = vf_chart(&p, &t, &th).unwrap();
        assert!(f.iter().all(|x| x.norm().is_finite()));
        finite += 1;
    }
    assert_eq!(finite, 64);
    let d0 = OkaPoint::exceptional(Beta::ZeroMinus, P1::Inf);
    assert_eq!(vf_chart(&d0, &t, &th), Err(Error::InfiniteField));
}

fn opts() -> OdeOptions {
    OdeOptions { rtol: 1e-13, atol: 1e-15, h0: 1e-3, max_steps: 200_000 }
}

#[test]
fn taylor_expansion_at_exceptional_start() {
    let th = ThetaDiff::new(C::new(0.3, 0.1), C::new(0.7, 0.0), C::new(0.45, -0.2), C::new(1.6, 0.0));
    let t0 = C::new(2.5, 0.5);
    let alpha = C::new(0.4, -0.3);
    let p0 = OkaPoint::exceptional(Beta::ZeroMinus, P1::Fin(alpha));
    let c = taylor_coefficients_y(&p0, t0, &th, 1e-2, 16, 2, &opts()).unwrap();
    let t1 = t0 - 1.0;
    let c1 = -th.th0 / t1;
    let c2 = -th.th0 * (2.0 * alpha - 1.0 - t0) / (2.0 * t0 * t1 * t1);
    assert!((c[0] - c1).norm() < 1e-8, "{} vs {}", c[0], c1);
    assert!((c[1] - c2).norm() < 1e-8, "{} vs {}", c[1], c2);
}

#[test]
fn interior_matches_p6_rhs() {
    let th = ThetaDiff::new(C::new(0.3, 0.0), C::new(0.7, 0.0), C::new(0.45, 0.0), C::new(1.6, 0.0));
    let (t0, t1) = (C::new(2.5, 0.5), C::new(2.8, 0.9));
    let (y0, z0) = (C::new(0.6, 0.3), C::new(0.2, -0.1));
    let nodes = integrate(
        |t, y| {
            let (dy, dz, _) = p6_rhs(&y[0], &y[1], &t, &th)?;
            Ok(vec![dy, dz])
        },
        t0,
        t1,
        &[y0, z0],
        &opts(),
    )
    .unwrap();
    let direct = &nodes.last().unwrap().1;
    let traj = integrate_okamoto(&OkaPoint::hirz(uv_from_yz(&y0, &z0, &t0)), t0, t1, &th, &opts()).unwrap();
    let last = traj.last().unwrap();
    let centers = base_points_diff(&th, &t1).unwrap();
    let (y, z) = yz_from_uv(&last.point.project(&centers), &t1).unwrap();
    assert!((y - direct[0]).norm() < 1e-9);
    assert!((z - direct[1]).norm() < 1e-9);
}

#[test]
fn zero_length_path_returns_input() {
    let th = theta().map(|x| x.to_c64());
    let p = OkaPoint::hirz(F2Point::new(0, C::new(0.5, 0.0), C::new(1.0, 0.0)));
    let t = C::new(2.0, 0.0);
    let tr = integrate_okamoto(&p, t, t, &th, &opts()).unwrap();
    assert_eq!(tr, vec![OkaNode { t, point: p }]);
}

#[test]
fn reparametrization_consistency_through_a_pole() {
    let th = ThetaDiff::new(C::new(0.3, 0.1), C::new(0.7, 0.0), C::new(0.45, -0.2), C::new(1.6, 0.0));
    let t0 = C::new(2.5, 0.5);
    let p0 = OkaPoint::exceptional(Beta::InfPlus, P1::Fin(C::new(0.3, 0.2)));
    let (t1, t2) = (C::new(2.7, 0.3), C::new(2.9, 0.6));
    let a = integrate_okamoto(&p0, t0, t2, &th, &opts()).unwrap();
    let b1 = integrate_okamoto(&p0, t0, t1, &th, &opts()).unwrap();
    let b = integrate_okamoto(&b1.last().unwrap().point, t1, t2, &th, &opts()).unwrap();
    let (pa, pb) = (&a.last().unwrap().point, &b.last().unwrap().point);
    let centers = base_points_diff(&th, &t2).unwrap();
    let pb = pb.to_chart(pa.chart, &centers).unwrap();
    assert!((pa.c1 - pb.c1).norm() < 1e-8 && (pa.c2 - pb.c2).norm() < 1e-8);
    let csv = trajectory_csv(&a);
    assert!(csv.starts_with("t_re,t_im,chart"));
    assert_eq!(csv.lines().count(), a.len() + 1);
}

fn qdata() -> (GaussRat, GaussRat, ThetaQ<GaussRat>) {
    let q = gr(3, 2);
    let th = ThetaQ::from_diff(&theta(), &q).unwrap();
    (gr(5, 3), q, th)
}

#[test]
fn q_base_points_examples() {
    let (t, q, th) = qdata();
    let (gammas, betas) = base_points_q(&t, &q, &th).unwrap();
    assert_eq!(gammas[0], P1P1Point::finite(gr(0, 1), t.clone() * th.th0.clone() * inv(q.clone())));
    let binf = &betas[Beta::InfPlus.index()];
    assert_eq!((binf.chart, binf.a.clone()), (2, gr(0, 1)));
    assert_eq!(binf.b, (th.thinf.clone() - q.clone()) * inv(q.clone() * (q.clone() - gr(1, 1))));
}

#[test]
fn q_base_points_limit_to_differential() {
    let th = theta();
    let t = gr(-3, 2);
    let lim = omega_base_points_at(&th, &t, &gr(1, 1)).unwrap();
    assert_eq!(lim, base_points_diff(&th, &t).unwrap());
}

#[test]
fn q_base_points_are_indeterminacies_of_phi_inverse() {
    // At each beta~ the two coordinates of psi are simultaneously 0/0 in some chart.
    let (t, q, th) = qdata();
    let (_, betas) = base_points_q(&t, &q, &th).unwrap();
    for b in Beta::ALL {
        let p = OkaPoint::hirz(betas[b.index()].point());
        assert!(matches!(psi(&p, &t, &q, &th), Err(Error::SingularLocus(_))));
    }
}

#[test]
fn phi_sends_exceptional_lines_over_gamma_to_beta() {
    let (t, q, th) = qdata();
    let expected = [
        (Gamma::ZeroMinus, Beta::ZeroMinus),
        (Gamma::ZeroPlus, Beta::ZeroPlus),
        (Gamma::OneMinus, Beta::OneMinus),
        (Gamma::OnePlus, Beta::OnePlus),
        // The labels at infinity are exchanged by the formula for phi.
        (Gamma::InfMinus, Beta::InfPlus),
        (Gamma::InfPlus, Beta::InfMinus),
    ];
    for (g, b) in expected {
        for e in [P1::Fin(gr(2, 3)), P1::Fin(gr(0, 1)), P1::Inf] {
            let img = phi(&SakaiPoint::Exc { tag: g, e: e.clone() }, &t, &q, &th).unwrap();
            assert!(img.on_exceptional());
            assert_eq!(img.slope().unwrap().0, b, "{}", g.name());
            let back = psi(&img, &t, &q, &th).unwrap();
            assert_eq!(back, SakaiPoint::Exc { tag: g, e });
        }
    }
}

#[test]
fn phi_on_gamma_t_plus_line_lands_on_d_t_plus() {
    let (t, q, th) = qdata();
    let y0 = t.clone() * th.thtb.clone();
    let e = gr(4, 5);
    let img = phi(&SakaiPoint::Exc { tag: Gamma::TPlus, e: P1::Fin(e.clone()) }, &t, &q, &th).unwrap();
    assert_eq!(img.chart, OkaChart::Hirz(0));
    assert_eq!(img.c1, y0);
    // Oracle: phi along the arc (y0 + s, e s) as s -> 0.
    let thc = th.map(|x| x.to_c64());
    let (tc, qc, ec, y0c) = (t.to_c64(), q.to_c64(), e.to_c64(), y0.to_c64());
    for s in [1e-5, 1e-6, 1e-7] {
        let y = y0c + s;
        let z = ec * s;
        let pp = (y - tc * thc.tht) * (y - tc * thc.thtb);
        let v = (pp - qc * (y - 1.0) * (y - tc) * z) / (qc * (qc - 1.0) * z);
        assert!((v - img.c2.to_c64()).norm() < 10.0 * s);
    }
}

#[test]
fn phi_on_vertical_t_line_lands_on_exceptional_line() {
    let (t, q, th) = qdata();
    let y0 = t.clone() * th.tht.clone();
    let p = SakaiPoint::base(y0, gr(7, 3));
    let img = phi(&p, &t, &q, &th).unwrap();
    assert_eq!(img.slope().unwrap().0, Beta::TMinus);
    assert_eq!(psi(&img, &t, &q, &th).unwrap(), p);
}

#[test]
fn phi_rejects_centers() {
    let (t, q, th) = qdata();
    let g = gamma_points(&t, &q, &th).unwrap();
    for c in g {
        assert!(matches!(phi(&SakaiPoint::Base(c), &t, &q, &th), Err(Error::SingularLocus(_))));
    }
}

#[test]
fn phi_map_checks_direction() {
    let (t, q, th) = qdata();
    let p = QSurfacePoint::Sakai(SakaiPoint::base(gr(1, 2), gr(3, 1)));
    assert!(phi_map(&p, Direction::Backward, &t, &q, &th).is_err());
    let m = phi_map(&p, Direction::Forward, &t, &q, &th).unwrap();
    assert_eq!(phi_map(&m, Direction::Backward, &t, &q, &th).unwrap(), p);
}

fn small_rat() -> impl Strategy<Value = GaussRat> {
    (-40i64..40, 1i64..12).prop_map(|(n, d)| gr(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn psi_phi_identity(y in small_rat(), z in small_rat()) {
        let (t, q, th) = qdata();
        let p = SakaiPoint::base(y, z);
        if let Ok(img) = phi(&p, &t, &q, &th) {
            prop_assert_eq!(psi(&img, &t, &q, &th).unwrap(), p);
        }
    }

    #[test]
    fn phi_psi_identity(u in small_rat(), v in small_rat(), chart in 0u8..4) {
        let (t, q, th) = qdata();
        let p = OkaPoint::hirz(F2Point::new(chart, u, v));
        if let Ok(s) = psi(&p, &t, &q, &th) {
            let back = phi(&s, &t, &q, &th).unwrap();
            let (_, betas) = base_points_q(&t, &q, &th).unwrap();
            let back = if back.on_exceptional() { back } else { back.to_chart(p.chart, &betas).unwrap() };
            prop_assert_eq!(back, p);
        }
    }

    #[test]
    fn hirz_chart_round_trip(u in small_rat(), v in small_rat(), from in 0u8..4, to in 0u8..4) {
        let p = F2Point::new(from, u, v);
        if let Ok(q) = p.to_chart(to) {
            prop_assert_eq!(q.to_chart(from).unwrap(), p);
        }
    }
}

#[test]
fn diagram_differential_star() {
    let d = diagram_diff(&theta(), &gr(-3, 2)).unwrap();
    assert_eq!(d.self_intersections(), vec![-2; 5]);
    let h = d.index("H").unwrap();
    for n in ["D_0", "D_1", "D_t", "D_inf"] {
        let i = d.index(n).unwrap();
        assert!(d.edges.contains(&(h.min(i), h.max(i), 1)));
    }
    assert_eq!(d.edges.len(), 4);
    assert!(d.to_dot().contains("H (-2)"));
}

#[test]
fn diagram_q_cycle() {
    let (t, q, th) = qdata();
    for d in [diagram_q(&t, &q, &th).unwrap(), diagram_q_modified(&t, &q, &th).unwrap()] {
        assert_eq!(d.self_intersections(), vec![-2; 4]);
        assert_eq!(d.edges.len(), 4);
        let mut deg = [0; 4];
        for (i, j, m) in &d.edges {
            assert_eq!(*m, 1);
            deg[*i] += 1;
            deg[*j] += 1;
        }
        assert_eq!(deg, [2; 4]);
    }
    let m = diagram_q_modified(&t, &q, &th).unwrap();
    assert_eq!(m.notes, vec!["C^2 = 2 in F2".to_string()]);
}

#[test]
fn diagram_omega_limit_decomposes_c() {
    let d = diagram_omega_limit(&theta(), &gr(-3, 2)).unwrap();
    assert_eq!(d.self_intersections(), vec![-2; 5]);
    assert!(d.notes.iter().any(|n| n.ends_with("true")));
}
