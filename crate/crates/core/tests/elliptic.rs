use std::f64::consts::{FRAC_PI_2, PI};

use elliptic_ybe::elliptic::*;
use elliptic_ybe_oracle::{amplitude_by_inversion, elliptic_f_quad, jacobi_by_inversion, quarter_period_quad};
use proptest::prelude::*;

fn triple_close(t: &JacobiTriple, (sn, cn, dn): (f64, f64, f64), tol: f64) {
    assert!((t.sn - sn).abs() <= tol, "sn {} vs {sn}", t.sn);
    assert!((t.cn - cn).abs() <= tol, "cn {} vs {cn}", t.cn);
    assert!((t.dn - dn).abs() <= tol, "dn {} vs {dn}", t.dn);
}

#[test]
fn quarter_period_matches_quadrature() {
    for k in [0.0, 0.1, 0.5, 0.8, 0.99, 0.999] {
        let got = complete_quarter_period(k).unwrap();
        assert!((got - quarter_period_quad(k)).abs() <= 1e-12, "K({k}) = {got}");
    }
    assert_eq!(complete_quarter_period(0.0).unwrap(), FRAC_PI_2);
    assert!(complete_quarter_period(1.0).is_err());
    assert!(complete_quarter_period(-0.2).is_err());
}

#[test]
fn jacobi_matches_inversion_at_reference_point() {
    let t = jacobi(1.3, 0.6).unwrap();
    triple_close(&t, jacobi_by_inversion(1.3, 0.6), 1e-11);
}

#[test]
fn amplitude_matches_inversion() {
    let a = amplitude(2.0, 0.3).unwrap().phi;
    assert!((a - amplitude_by_inversion(2.0, 0.3)).abs() <= 1e-11);
    // Past K the amplitude keeps growing through the half-period.
    let kk = complete_quarter_period(0.7).unwrap();
    let a = amplitude(3.0 * kk, 0.7).unwrap().phi;
    assert!((a - 1.5 * PI).abs() <= 1e-12);
}

#[test]
fn zero_modulus_reduces_to_circular_functions() {
    for u in [-3.0, -0.4, 0.0, 1.1, 5.0] {
        let t = jacobi(u, 0.0).unwrap();
        triple_close(&t, (u.sin(), u.cos(), 1.0), 1e-15);
    }
    let t = jacobi(0.0, 0.5).unwrap();
    assert_eq!((t.sn, t.cn, t.dn), (0.0, 1.0, 1.0));
}

#[test]
fn oracle_agreement_over_seeded_samples() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let k: f64 = rng.gen_range(0.01..0.99);
        let kk = complete_quarter_period(k).unwrap();
        let u = rng.gen_range(-4.0 * kk..4.0 * kk);
        let t = jacobi(u, k).unwrap();
        let (sn, cn, dn) = jacobi_by_inversion(u, k);
        worst = worst.max((t.sn - sn).abs()).max((t.cn - cn).abs()).max((t.dn - dn).abs());
    }
    assert!(worst <= 1e-11, "worst deviation {worst:e}");
}

#[test]
fn incomplete_integral_matches_quadrature() {
    for (phi, k) in [(0.3, 0.2), (1.2, 0.9), (FRAC_PI_2, 0.5), (-0.7, 0.4), (4.0, 0.6)] {
        let got = incomplete_integral(phi, k).unwrap();
        assert!((got - elliptic_f_quad(phi, k)).abs() <= 1e-12, "F({phi}, {k}) = {got}");
    }
}

#[test]
fn reciprocal_amplitude_stays_bounded() {
    let k = 0.6;
    for i in 0..200 {
        let u = -5.0 + 0.05 * i as f64;
        let a = reciprocal_amplitude(u, k).unwrap().phi;
        assert!(a.abs() <= k.asin() + 1e-12);
        assert!((a.sin() - reciprocal_modulus(u, k).unwrap().sn).abs() <= 1e-14);
    }
}

#[test]
fn out_of_range_modulus_is_rejected() {
    assert!(jacobi(0.5, 1.2).is_err());
    assert!(jacobi(f64::NAN, 0.5).is_err());
    assert!(reciprocal_modulus(0.5, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn pythagorean_identities(k in 0.01f64..0.99, frac in -4.0f64..4.0) {
        let u = frac * complete_quarter_period(k).unwrap();
        let t = jacobi(u, k).unwrap();
        let (a, b) = t.pythagorean_residuals(k);
        prop_assert!(a <= 1e-12 && b <= 1e-12);
        prop_assert!(t.dn >= complement(k) - 1e-12);
    }

    #[test]
    fn addition_theorem(k in 0.01f64..0.99, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let kk = complete_quarter_period(k).unwrap();
        let (u1, u3) = (a * kk, b * kk);
        let d = addition_eval(u1, u3, k).unwrap().max_abs_diff(&jacobi(u1 + u3, k).unwrap());
        prop_assert!(d <= 1e-10, "{d:e}");
    }

    #[test]
    fn periodicity_and_parity(k in 0.01f64..0.99, u in -3.0f64..3.0) {
        let kk = complete_quarter_period(k).unwrap();
        let t = jacobi(u, k).unwrap();
        let p = jacobi(u + 4.0 * kk, k).unwrap();
        let h = jacobi(u + 2.0 * kk, k).unwrap();
        let m = jacobi(-u, k).unwrap();
        prop_assert!((p.sn - t.sn).abs() <= 1e-12 && (p.cn - t.cn).abs() <= 1e-12);
        prop_assert!((h.sn + t.sn).abs() <= 1e-12 && (h.cn + t.cn).abs() <= 1e-12 && (h.dn - t.dn).abs() <= 1e-12);
        prop_assert!((m.sn + t.sn).abs() <= 1e-15 && (m.cn - t.cn).abs() <= 1e-15);
    }

    #[test]
    fn amplitude_inverts_the_integral(k in 0.01f64..0.99, phi in -6.0f64..6.0) {
        let u = incomplete_integral(phi, k).unwrap();
        prop_assert!((amplitude(u, k).unwrap().phi - phi).abs() <= 1e-11);
    }

    #[test]
    fn reciprocal_modulus_round_trip(k in 0.05f64..1.0, u in -5.0f64..5.0) {
        let t = reciprocal_modulus(u, k).unwrap();
        // Pythagorean relations for modulus 1/k.
        prop_assert!((t.sn * t.sn + t.cn * t.cn - 1.0).abs() <= 1e-12);
        prop_assert!((t.sn * t.sn / (k * k) + t.dn * t.dn - 1.0).abs() <= 1e-12);
        let back = from_reciprocal_modulus(&t, k).unwrap();
        prop_assert!(back.max_abs_diff(&jacobi(u / k, k).unwrap()) <= 1e-15);
    }

    #[test]
    fn imaginary_transform_satisfies_its_equations(k in 0.05f64..0.95, frac in -0.9f64..0.9) {
        // s(u) = sn(iu, k')/i = sc(u, k) obeys s' = nc·dc and nc² - sc² = 1.
        let u = frac * complete_quarter_period(k).unwrap();
        let t = imaginary_transform(u, k).unwrap();
        prop_assert!((t.nc * t.nc - t.sc * t.sc - 1.0).abs() <= 1e-9 * t.nc * t.nc);
        let h = 1e-6;
        let d = (imaginary_transform(u + h, k).unwrap().sc - imaginary_transform(u - h, k).unwrap().sc) / (2.0 * h);
        prop_assert!((d - t.nc * t.dc).abs() <= 1e-6 * t.nc * t.nc);
    }
}
