use elliptic_ybe::abel::*;
use elliptic_ybe::verify::curated_flows;
use proptest::prelude::*;

fn separated(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, n).prop_filter("points too close", |p| {
        (0..p.len()).all(|i| (i + 1..p.len()).all(|j| (p[i] - p[j]).abs() >= 0.2))
    })
}

fn instance() -> impl Strategy<Value = (HyperPoly, Vec<f64>)> {
    (3usize..=6).prop_flat_map(|n| {
        (prop::collection::vec(-1.0f64..1.0, 2 * n - 1), separated(n)).prop_filter_map("degenerate f", move |(c, p)| {
            let f = HyperPoly::new(n, c).ok()?;
            (!f.is_degenerate()).then_some((f, p))
        })
    })
}

/// Five-point central difference.
fn stencil<F: Fn(f64) -> f64>(g: F, x: f64, h: f64) -> f64 {
    (-g(x + 2.0 * h) + 8.0 * g(x + h) - 8.0 * g(x - h) + g(x - 2.0 * h)) / (12.0 * h)
}

#[test]
fn curated_flows_conserve_their_invariant() {
    for flow in curated_flows() {
        let (f, d) = flow.system().unwrap();
        let opts = FlowOptions::new(1.0, 1e-3).unwrap();
        let direct = integrate_flow(&f, &d, opts).unwrap();
        let recip = integrate_reciprocal_flow(&f, &d, opts).unwrap();
        for t in [&direct, &recip] {
            assert!(t.halt.is_none(), "{}: {:?}", flow.name, t.halt);
            assert!(t.invariant_drift().unwrap() <= 1e-6, "{}", flow.name);
            assert!(t.constraint_max.iter().all(|c| *c <= 1e-6), "{}", flow.name);
            assert!(t.eq_p_max.unwrap() <= 1e-4, "{}", flow.name);
        }
        assert!((direct.final_time() - 1.0).abs() <= 1e-12);
        // The two flows share their initial state up to the round trip through 1/x.
        for (a, b) in direct.samples[0].x.iter().zip(&recip.samples[0].x) {
            assert!((a - b).abs() <= 1e-15);
        }
    }
}

#[test]
fn curated_flows_converge_at_fourth_order() {
    for flow in curated_flows() {
        let (f, d) = flow.system().unwrap();
        for reciprocal in [false, true] {
            let drift = |dt: f64| {
                let opts = FlowOptions::new(1.0, dt).unwrap();
                let t = if reciprocal { integrate_reciprocal_flow(&f, &d, opts) } else { integrate_flow(&f, &d, opts) };
                t.unwrap().invariant_drift().unwrap()
            };
            let order = (drift(1e-2) / drift(5e-3)).log2();
            assert!((order - 4.0).abs() <= 0.3, "{} reciprocal={reciprocal}: order {order}", flow.name);
        }
    }
}

#[test]
fn long_elliptic_flow_crosses_branch_points() {
    let (f, d) = elliptic_divisor([0.7, 0.4, -1.1], 0.6).unwrap();
    let t = integrate_flow(&f, &d, FlowOptions::new(3.5, 1e-3).unwrap()).unwrap();
    assert!(t.halt.is_none(), "{:?}", t.halt);
    assert!(t.sign_flips > 0);
    assert!(t.q1_drift <= 1e-6);
    for s in &t.samples {
        for (x, y) in s.x.iter().zip(&s.y) {
            assert!((y * y - f.eval(*x)).abs() <= 1e-8);
        }
    }
}

#[test]
fn elliptic_points_meet_at_zero() {
    // Near t = 3.78 all three points run into the origin together.
    let (f, d) = elliptic_divisor([0.7, 0.4, -1.1], 0.6).unwrap();
    let t = integrate_flow(&f, &d, FlowOptions::new(6.0, 1e-3).unwrap()).unwrap();
    assert!(matches!(t.halt, Some(HaltReason::Unresolved { .. })), "{:?}", t.halt);
    assert!((3.7..3.8).contains(&t.final_time()));
    assert!(t.q1_drift <= 1e-6);
}

#[test]
fn converging_points_halt() {
    // Two close points on opposite-moving branches collide in finite time.
    let f = HyperPoly::new(3, vec![1.0, 0.0, 0.0, 0.0, 0.1]).unwrap();
    let d = Divisor::new(vec![1.0, 1.01, -1.0], vec![-1.0, -1.0, 1.0]).unwrap();
    for dt in [1e-4, 1e-7] {
        let t = integrate_flow(&f, &d, FlowOptions::new(2e-4, dt).unwrap()).unwrap();
        let halted = matches!(t.halt, Some(HaltReason::Collision { .. } | HaltReason::Unresolved { .. }));
        assert!(halted, "{:?}", t.halt);
        assert!(t.final_time() < 1e-4);
    }
    let t = integrate_flow(&f, &d, FlowOptions::new(2e-4, 1e-7).unwrap()).unwrap();
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), t.samples.len() + 1);
}

#[test]
fn points_off_the_real_branch_are_rejected() {
    let f = HyperPoly::elliptic_quartic(0.6);
    let d = Divisor::positive(vec![0.2, 0.5, 1.2]).unwrap();
    assert!(integrate_flow(&f, &d, FlowOptions::new(1.0, 1e-3).unwrap()).is_err());
}

#[test]
fn malformed_systems_are_rejected() {
    assert!(HyperPoly::new(3, vec![1.0, 2.0, 3.0]).is_err());
    assert!(Divisor::positive(vec![0.1, 0.1, 0.3]).is_err());
    assert!(Divisor::new(vec![0.1, 0.2, 0.3], vec![1.0, 0.5, 1.0]).is_err());
    assert!(FlowOptions::new(1.0, 0.1).is_err());
    let f = HyperPoly::elliptic_quartic(0.6);
    let d = Divisor::positive(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    assert!(integrate_flow(&f, &d, FlowOptions::new(1.0, 1e-3).unwrap()).is_err());
}

#[test]
fn false_elliptic_sums_follow_the_parabola() {
    // The three points lie on y = 1 + b x + c x²; the first sum is off by
    // |b (c + k)/(c - k)| and the second by |b|.
    let k = 0.6;
    let e = elliptic_identity_check(0.7, 0.4, k, None).unwrap();
    let (b, c) = e.parabola;
    assert!(e.collinearity <= 1e-12);
    assert!((e.res35 - b.abs()).abs() <= 1e-12);
    assert!((e.res34 - (b * (c + k) / (c - k)).abs()).abs() <= 1e-12);
    assert!((e.q1 - b * b).abs() <= 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn moment_sums_are_exact(p in (3usize..=8).prop_flat_map(separated)) {
        let d = Divisor::positive(p).unwrap();
        let n = d.len();
        for k in 0..n {
            let expected = if k + 1 == n { 1.0 } else { 0.0 };
            let scale: f64 = d.points().iter().zip(d.f_prime()).map(|(x, fp)| (x.powi(k as i32) / fp).abs()).sum();
            prop_assert!((moment_sum(&d, k).unwrap() - expected).abs() <= 1e-12 * scale.max(1.0));
        }
        prop_assert!(moment_sum(&d, n).is_err());
    }

    #[test]
    fn double_pole_coefficients_match_finite_differences((f, p) in instance()) {
        let d = Divisor::positive(p.clone()).unwrap();
        let coeffs = double_pole_coefficients(&f, &d).unwrap();
        for (i, &(a, b)) in coeffs.iter().enumerate() {
            let xi = p[i];
            // (x - x_i)² x² f(x) / F(x)² with the double pole removed.
            let g = |x: f64| {
                let others: f64 = p.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &xj)| x - xj).product();
                x * x * f.eval(x) / (others * others)
            };
            prop_assert!((a - g(xi)).abs() <= 1e-9 * (1.0 + a.abs()));
            let fd = stencil(g, xi, 1e-5);
            prop_assert!((b - fd).abs() <= 1e-6 * (1.0 + b.abs()), "b = {b}, stencil {fd}");
        }
    }

    #[test]
    fn stationary_divisors_do_not_move(i in 2i32..16, j in 2i32..16) {
        // f = (x - r1)² (x - r2)² vanishes to second order at r1 and r2, and
        // the factor x stops the third point at zero. The fixed point is
        // unstable, so the roots are dyadic to make f(r) exactly zero.
        let (r1, r2) = (i as f64 / 8.0, -j as f64 / 8.0);
        let (s, p) = (r1 + r2, r1 * r2);
        let f = HyperPoly::new(3, vec![p * p, -2.0 * p * s, s * s + 2.0 * p, -2.0 * s, 1.0]).unwrap();
        prop_assert!(f.eval(r1) == 0.0 && f.eval(r2) == 0.0);
        let d = Divisor::positive(vec![r1, 0.0, r2]).unwrap();
        let t = integrate_flow(&f, &d, FlowOptions::new(0.5, 1e-2).unwrap()).unwrap();
        prop_assert_eq!(t.q1_drift, 0.0);
        prop_assert!(t.halt.is_none());
        prop_assert_eq!(&t.samples.last().unwrap().x, &vec![r1, 0.0, r2]);
    }

    #[test]
    fn reciprocal_system_is_an_involution((f, p) in instance()) {
        prop_assume!(p.iter().all(|x| x.abs() > 0.1) && f.a(0).abs() > 1e-3);
        let d = Divisor::positive(p).unwrap();
        let (g, e) = reciprocal_system(&f, &d).unwrap();
        let (f2, d2) = reciprocal_system(&g, &e).unwrap();
        prop_assert_eq!(f2.coeffs(), f.coeffs());
        for (a, b) in d2.points().iter().zip(d.points()) {
            prop_assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0));
        }
        prop_assert_eq!(d2.signs(), d.signs());
    }
}
