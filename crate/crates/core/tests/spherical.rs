use std::f64::consts::{FRAC_PI_2, PI};

use elliptic_ybe::elliptic::complete_quarter_period;
use elliptic_ybe::spherical::*;
use proptest::prelude::*;

fn direction() -> impl Strategy<Value = Vec3> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("away from the origin", |(x, y, z)| x * x + y * y + z * z > 1e-2)
        .prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn triad() -> impl Strategy<Value = TriangleVectors> {
    (direction(), direction(), direction())
        .prop_filter_map("degenerate", |(a, b, c)| TriangleVectors::from_directions(a, b, c).ok())
}

fn spectral() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.05f64..0.95, 0.02f64..0.98, 0.05f64..0.95).prop_map(|(k, total, split)| {
        let u2 = total * complete_quarter_period(k).unwrap();
        (u2 * split, u2 * (1.0 - split), k)
    })
}

#[test]
fn octant_triangle() {
    let v = TriangleVectors::new(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)).unwrap();
    let (t, _) = triangle_from_vectors(&v).unwrap();
    for i in 0..3 {
        assert!((t.arcs[i] - FRAC_PI_2).abs() <= 1e-15);
        assert!((t.angles[i] - FRAC_PI_2).abs() <= 1e-15);
    }
    assert!(t.max_law_residual() <= 1e-15);
}

#[test]
fn degenerate_triads_are_rejected() {
    let a = Vec3::new(1.0, 0.0, 0.0);
    let b = Vec3::new(0.0, 1.0, 0.0);
    let c = Vec3::new(1.0, 1.0, 0.0).normalized();
    assert!(TriangleVectors::new(a, b, c).is_err());
    assert!(TriangleVectors::new(a, b, Vec3::new(0.0, 0.0, 2.0)).is_err());
}

#[test]
fn spectral_domain_edges() {
    let kk = complete_quarter_period(0.6).unwrap();
    assert!(triangle_from_spectral(0.6 * kk, 0.6 * kk, 0.6).is_err());
    assert!(triangle_from_spectral(0.3, 0.4, 1.0).is_err());
    // The octant triangle has sine ratio exactly one.
    let octant = SphericalTriangle::from_parts([FRAC_PI_2; 3], [FRAC_PI_2; 3]);
    assert!(spectral_coordinates(&octant).is_err());
    let mixed = SphericalTriangle::from_parts([0.5, 0.6, 0.7], [2.0, 0.3, 0.4]);
    assert!(spectral_coordinates(&mixed).is_err());
}

#[test]
fn differential_step_bounds() {
    assert!(differential_check(0.5, 1.2, 0.6, 1e-9).is_err());
    assert!(differential_check(0.5, 1.2, 0.6, 1e-2).is_err());
    assert!(differential_check(0.5, 1.2, 0.6, 1e-5).unwrap() <= 1e-7);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn laws_hold_for_vector_triangles(v in triad()) {
        let (t, dual) = triangle_from_vectors(&v).unwrap();
        prop_assert!(t.max_law_residual() <= 1e-10);
        for i in 0..3 {
            prop_assert!(t.arcs[i] > 0.0 && t.arcs[i] < PI);
            prop_assert!(t.angles[i] > 0.0 && t.angles[i] < PI);
        }
        // The dual determinant is det² over the norms of the cross products.
        prop_assert!(dual.det() > 0.0);
    }

    #[test]
    fn quadruple_products_and_duality(v in triad(), d in direction()) {
        let r = verify_vector_identities(&v).unwrap();
        prop_assert!(r.quadruple_cross <= 1e-13 && r.quadruple_dot <= 1e-13);
        prop_assert!(r.dual_reconstruction <= 1e-10 && r.dual_triple_product <= 1e-10);
        let [a, b, c] = v.n;
        prop_assert!(quadruple_cross_residual(&a, &b, &c, &d) <= 1e-13);
        prop_assert!(quadruple_dot_residual(&a, &b, &c, &d) <= 1e-13);
    }

    #[test]
    fn spectral_triangles_round_trip((u1, u3, k) in spectral()) {
        let t = triangle_from_spectral(u1, u3, k).unwrap();
        prop_assert_eq!(t.regime(), AngleRegime::ObtuseMiddle);
        prop_assert!(t.max_law_residual() <= 1e-10);
        prop_assert!((t.k_ratio - k).abs() <= 1e-10);
        let c = spectral_coordinates(&t).unwrap();
        let SumRule::Difference { residual } = c.sum_rule else {
            return Err(TestCaseError::fail("expected the difference sum rule"));
        };
        prop_assert!(residual <= 1e-9);
        prop_assert!((c.u[0] - u1).abs() <= 1e-9 && (c.u[2] - u3).abs() <= 1e-9);
        prop_assert!((c.u[1] - u1 - u3).abs() <= 1e-9);
    }

    #[test]
    fn differential_relation(a1 in 0.1f64..1.4, a3 in 0.1f64..1.4, k in 0.05f64..0.95) {
        if let Ok(r) = differential_check(a1, a3, k, 1e-5) {
            prop_assert!(r <= 1e-7, "{r:e}");
        }
    }
}
