//! Ising Boltzmann-weight parameterizations and the star-triangle relation
//!
//! ```text
//! exp(L*3 σx) exp(K2 σz) exp(L*1 σx) = exp(K1 σz) exp(L*2 σx) exp(K3 σz)
//! ```
//!
//! checked as an exact 2×2 matrix identity. Subscript 2 always carries the
//! summed spectral parameter `v1 + v3`.

use num_complex::Complex64;
use serde::Serialize;

use crate::elliptic::{amplitude, complement, complete_quarter_period, jacobi, reciprocal_amplitude};
use crate::error::{Error, Result, POLE_THRESHOLD};
use crate::spherical::{check_spectral_domain, triangle_from_spectral};
use crate::su2::{hyper, rot, Axis, Rep, SmallMatrix};

/// Couplings `K_i` and dual couplings `L*_i`, `i = 1, 2, 3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingSet {
    pub big_k: [f64; 3],
    pub l_star: [f64; 3],
}

impl CouplingSet {
    pub fn zero() -> Self {
        Self {
            big_k: [0.0; 3],
            l_star: [0.0; 3],
        }
    }
}

/// `(cosh 2x, sinh 2x)` as produced by a parameterization, before `x` is extracted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperbolicPair {
    pub cosh: f64,
    pub sinh: f64,
}

impl HyperbolicPair {
    /// `|cosh² - sinh² - 1|`.
    pub fn defect(&self) -> f64 {
        (self.cosh * self.cosh - self.sinh * self.sinh - 1.0).abs()
    }

    /// The `x` with `sinh 2x = sinh`.
    pub fn half_angle(&self) -> f64 {
        0.5 * self.sinh.asinh()
    }
}

/// Spectral parameters `(u1, u1 + u3, u3)`; the middle one is derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralParams {
    pub u1: f64,
    pub u3: f64,
    pub k: f64,
}

impl SpectralParams {
    pub fn u2(&self) -> f64 {
        self.u1 + self.u3
    }

    pub fn all(&self) -> [f64; 3] {
        [self.u1, self.u2(), self.u3]
    }
}

/// A coupling set together with the hyperbolic pairs it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Parameterized {
    pub params: SpectralParams,
    pub couplings: CouplingSet,
    pub k_pairs: [HyperbolicPair; 3],
    pub l_pairs: [HyperbolicPair; 3],
}

impl Parameterized {
    /// Largest `|cosh² - sinh² - 1|` over all six pairs.
    pub fn hyperbolic_defect(&self) -> f64 {
        self.k_pairs
            .iter()
            .chain(self.l_pairs.iter())
            .map(HyperbolicPair::defect)
            .fold(0.0, f64::max)
    }

    fn from_pairs(params: SpectralParams, k_pairs: [HyperbolicPair; 3], l_pairs: [HyperbolicPair; 3]) -> Self {
        Self {
            params,
            couplings: CouplingSet {
                big_k: k_pairs.map(|p| p.half_angle()),
                l_star: l_pairs.map(|p| p.half_angle()),
            },
            k_pairs,
            l_pairs,
        }
    }
}

/// Pairs at a single argument `v` with functions of modulus `k'`:
/// `cosh 2K = nc`, `sinh 2K = sc`, `cosh 2L* = dc`, `sinh 2L* = k sc`.
pub fn pairs_at_v(v: f64, k: f64) -> Result<(HyperbolicPair, HyperbolicPair)> {
    let t = jacobi(v, complement(k))?;
    if t.cn < POLE_THRESHOLD {
        return Err(Error::NearPole(format!("cn({v}, k') = {:e}", t.cn)));
    }
    Ok((
        HyperbolicPair {
            cosh: 1.0 / t.cn,
            sinh: t.sn / t.cn,
        },
        HyperbolicPair {
            cosh: t.dn / t.cn,
            sinh: k * t.sn / t.cn,
        },
    ))
}

fn check_v_domain(v1: f64, v3: f64, k: f64) -> Result<()> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::Domain(format!("modulus must satisfy 0 < k < 1, got {k}")));
    }
    if !(v1 >= 0.0 && v3 >= 0.0) || !(v1 + v3).is_finite() {
        return Err(Error::Domain(format!("need v1, v3 >= 0, got ({v1}, {v3})")));
    }
    let quarter = complete_quarter_period(complement(k))?;
    if v1 + v3 >= quarter {
        return Err(Error::NearPole(format!(
            "v1 + v3 = {} reaches K(k') = {quarter}, where cn(v, k') vanishes",
            v1 + v3
        )));
    }
    Ok(())
}

/// Couplings from the complementary-modulus parameterization at
/// `v ∈ {v1, v1 + v3, v3}`.
pub fn couplings_from_v(v1: f64, v3: f64, k: f64) -> Result<Parameterized> {
    check_v_domain(v1, v3, k)?;
    let params = SpectralParams { u1: v1, u3: v3, k };
    let mut k_pairs = [HyperbolicPair { cosh: 1.0, sinh: 0.0 }; 3];
    let mut l_pairs = k_pairs;
    for (i, v) in params.all().into_iter().enumerate() {
        (k_pairs[i], l_pairs[i]) = pairs_at_v(v, k)?;
    }
    Ok(Parameterized::from_pairs(params, k_pairs, l_pairs))
}

/// Couplings from the crossing form with modulus `k`:
/// `cosh 2K = 1/cn(u)`, `sinh 2K = sn(u)/cn(u)`,
/// `cosh 2L* = 1/sn(K - u)`, `sinh 2L* = cn(K - u)/sn(K - u)`.
pub fn couplings_crossing(u1: f64, u3: f64, k: f64) -> Result<Parameterized> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::Domain(format!("modulus must satisfy 0 < k < 1, got {k}")));
    }
    let quarter = complete_quarter_period(k)?;
    let params = SpectralParams { u1, u3, k };
    let mut k_pairs = [HyperbolicPair { cosh: 1.0, sinh: 0.0 }; 3];
    let mut l_pairs = k_pairs;
    for (i, u) in params.all().into_iter().enumerate() {
        if !(u > 0.0 && u < quarter) {
            return Err(Error::NearPole(format!(
                "crossing form needs 0 < u < K(k) = {quarter}, got u = {u}"
            )));
        }
        let t = jacobi(u, k)?;
        let r = jacobi(quarter - u, k)?;
        if t.cn < POLE_THRESHOLD || r.sn < POLE_THRESHOLD {
            return Err(Error::NearPole(format!("u = {u} too close to 0 or K")));
        }
        k_pairs[i] = HyperbolicPair {
            cosh: 1.0 / t.cn,
            sinh: t.sn / t.cn,
        };
        l_pairs[i] = HyperbolicPair {
            cosh: 1.0 / r.sn,
            sinh: r.cn / r.sn,
        };
    }
    Ok(Parameterized::from_pairs(params, k_pairs, l_pairs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StarTriangle {
    /// `‖LHS - RHS‖_F`.
    pub residual: f64,
    /// `λ` minimizing `‖LHS - λ RHS‖_F`.
    pub scalar: Complex64,
}

fn star_sides(c: &CouplingSet) -> (SmallMatrix, SmallMatrix) {
    let [k1, k2, k3] = c.big_k;
    let [l1, l2, l3] = c.l_star;
    let lhs = hyper(Axis::X, l3).mul(&hyper(Axis::Z, k2)).mul(&hyper(Axis::X, l1));
    let rhs = hyper(Axis::Z, k1).mul(&hyper(Axis::X, l2)).mul(&hyper(Axis::Z, k3));
    (lhs, rhs)
}

pub fn star_triangle_residual(c: &CouplingSet) -> StarTriangle {
    let (lhs, rhs) = star_sides(c);
    StarTriangle {
        residual: lhs.distance(&rhs),
        scalar: rhs.inner(&lhs) / rhs.inner(&rhs),
    }
}

/// Single-parameter couplings `(K(v), L*(v))` of the complementary-modulus form.
pub fn couplings_at(v: f64, k: f64) -> Result<(f64, f64)> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::Domain(format!("modulus must satisfy 0 < k < 1, got {k}")));
    }
    let (kp, lp) = pairs_at_v(v, k)?;
    Ok((kp.half_angle(), lp.half_angle()))
}

/// `‖V(v3) U(w) V(v1) - U(v1) V(w) U(v3)‖_F` with `U(v) = exp(K(v)σz)`,
/// `V(v) = exp(L*(v)σx)` and an arbitrary middle parameter `w`.
pub fn difference_property_residual(v1: f64, v3: f64, middle: f64, k: f64) -> Result<f64> {
    check_v_domain(v1, v3, k)?;
    let quarter = complete_quarter_period(complement(k))?;
    if middle.is_nan() || middle.abs() >= quarter {
        return Err(Error::NearPole(format!("middle parameter {middle} outside (-K(k'), K(k'))")));
    }
    let u = |v: f64| couplings_at(v, k).map(|(kk, _)| hyper(Axis::Z, kk));
    let v = |x: f64| couplings_at(x, k).map(|(_, l)| hyper(Axis::X, l));
    let lhs = v(v3)?.mul(&u(middle)?).mul(&v(v1)?);
    let rhs = u(v1)?.mul(&v(middle)?).mul(&u(v3)?);
    Ok(lhs.distance(&rhs))
}

/// The difference property with the middle parameter exactly `v1 + v3`.
pub fn verify_difference_property(v1: f64, v3: f64, k: f64) -> Result<f64> {
    difference_property_residual(v1, v3, v1 + v3, k)
}

/// Real angle couplings `2K̂_i = am(u_i, k)` and `2L̂*_i = am(k u_i, 1/k)`
/// obtained from `K_i = iK̂_i`, `L*_i = iL̂*_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngleCouplings {
    pub k_hat: [f64; 3],
    pub l_hat: [f64; 3],
    /// Largest mismatch against the spherical triangle at the same
    /// parameters: `2K̂_i = a_i`, `2L̂*_{1,3} = A_{1,3}`, `2L̂*_2 = π - A_2`.
    pub triangle_defect: f64,
}

pub fn angle_form(u1: f64, u3: f64, k: f64) -> Result<AngleCouplings> {
    check_spectral_domain(u1, u3, k, true)?;
    let u = [u1, u1 + u3, u3];
    let mut k_hat = [0.0; 3];
    let mut l_hat = [0.0; 3];
    for i in 0..3 {
        k_hat[i] = 0.5 * amplitude(u[i], k)?.phi;
        l_hat[i] = 0.5 * reciprocal_amplitude(k * u[i], k)?.phi;
    }
    let t = triangle_from_spectral(u1, u3, k)?;
    let mut angles = t.angles;
    angles[1] = std::f64::consts::PI - angles[1];
    let triangle_defect = (0..3)
        .map(|i| (2.0 * k_hat[i] - t.arcs[i]).abs().max((2.0 * l_hat[i] - angles[i]).abs()))
        .fold(0.0, f64::max);
    Ok(AngleCouplings {
        k_hat,
        l_hat,
        triangle_defect,
    })
}

/// Star-triangle relation with imaginary couplings `K_i = iK̂_i`,
/// `L*_i = iL̂*_i`: every `exp(iθσ)` factor is a spin-1/2 rotation by `2θ`.
pub fn angle_star_triangle_residual(a: &AngleCouplings) -> f64 {
    let r = |axis, half: f64| rot(axis, 2.0 * half, Rep::SpinHalf);
    let lhs = r(Axis::X, a.l_hat[2]).mul(&r(Axis::Z, a.k_hat[1])).mul(&r(Axis::X, a.l_hat[0]));
    let rhs = r(Axis::Z, a.k_hat[0]).mul(&r(Axis::X, a.l_hat[1])).mul(&r(Axis::Z, a.k_hat[2]));
    lhs.distance(&rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_couplings() {
        let s = star_triangle_residual(&CouplingSet::zero());
        assert_eq!(s.residual, 0.0);
        assert_eq!(s.scalar, Complex64::new(1.0, 0.0));
        let p = couplings_from_v(0.0, 0.0, 0.5).unwrap();
        assert_eq!(p.couplings, CouplingSet::zero());
    }

    #[test]
    fn from_v_solves_star_triangle() {
        let p = couplings_from_v(0.3, 0.5, 0.6).unwrap();
        assert!(p.hyperbolic_defect() <= 1e-11);
        let s = star_triangle_residual(&p.couplings);
        assert!(s.residual <= 1e-9, "{s:?}");
        assert!((s.scalar - 1.0).norm() <= 1e-9);
    }

    #[test]
    fn perturbed_couplings_fail() {
        let mut c = couplings_from_v(0.3, 0.5, 0.6).unwrap().couplings;
        c.big_k[1] += 0.05;
        assert!(star_triangle_residual(&c).residual >= 1e-3);
    }

    #[test]
    fn crossing_form_symmetric_point() {
        // sn(K - u) = cd(u), cn(K - u) = k' sd(u). At u = K/2 this gives
        // sinh 2K = 1/sqrt(k') and sinh 2L* = sqrt(k'), so L*, the dual of the
        // horizontal coupling, is the dual of K: the isotropic point.
        let k = 0.7;
        let half = 0.5 * complete_quarter_period(k).unwrap();
        let p = couplings_crossing(half / 2.0, half / 2.0, k).unwrap();
        let product = p.k_pairs[1].sinh * p.l_pairs[1].sinh;
        assert!((product - 1.0).abs() <= 1e-12, "{product}");
        assert!((p.k_pairs[1].sinh - 1.0 / complement(k).sqrt()).abs() <= 1e-12);
        assert!(p.hyperbolic_defect() <= 1e-11);
    }

    #[test]
    fn crossing_form_errors_at_boundary() {
        let k = 0.7;
        let kk = complete_quarter_period(k).unwrap();
        assert!(matches!(couplings_crossing(0.0, 0.3, k), Err(Error::NearPole(_))));
        assert!(matches!(couplings_crossing(kk * 0.6, kk * 0.4, k), Err(Error::NearPole(_))));
    }

    #[test]
    fn difference_property_cases() {
        assert!(verify_difference_property(0.4, 0.0, 0.6).unwrap() <= 1e-12);
        assert!(verify_difference_property(0.35, 0.35, 0.6).unwrap() <= 1e-9);
        assert!(difference_property_residual(0.3, 0.4, 0.75, 0.6).unwrap() >= 1e-3);
    }

    #[test]
    fn angle_form_matches_triangle() {
        let a = angle_form(0.5, 0.7, 0.6).unwrap();
        assert!(a.triangle_defect <= 1e-10);
        assert!(angle_star_triangle_residual(&a) <= 1e-12);
        let s = angle_form(0.4, 0.4, 0.6).unwrap();
        assert_eq!(s.k_hat[0], s.k_hat[2]);
        assert_eq!(s.l_hat[0], s.l_hat[2]);
    }
}
