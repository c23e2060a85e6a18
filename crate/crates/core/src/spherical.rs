//! Spherical triangles on the unit sphere.
//!
//! Arcs `a_i` and angles `A_i` follow the labelling where arc `a_1` joins
//! `n_2` and `n_3` and angle `A_i` sits at vertex `n_i`. Triangles come either
//! from three unit vectors (through the dual triad of side-plane normals) or
//! from spectral parameters `(u1, u3, k)` with `u2 = u1 + u3`, in which case
//! `a_i = am(u_i, k)`, `A_1, A_3` are acute and `A_2` is obtuse.

use std::f64::consts::PI;

use serde::Serialize;

use crate::elliptic::{amplitude, complete_quarter_period, incomplete_integral, jacobi, reciprocal_amplitude};
use crate::error::{Error, Result};

/// Minimum `|det(n1, n2, n3)|` for a non-degenerate triangle.
pub const DEGENERACY_THRESHOLD: f64 = 1e-9;
/// Slack allowed on dot products of unit vectors before clamping to `[-1, 1]`.
pub const CLAMP_TOLERANCE: f64 = 1e-12;
const UNIT_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self([x, y, z])
    }

    pub fn dot(&self, o: &Vec3) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn cross(&self, o: &Vec3) -> Vec3 {
        let (a, b) = (&self.0, &o.0);
        Vec3([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: f64) -> Vec3 {
        Vec3([s * self.0[0], s * self.0[1], s * self.0[2]])
    }

    pub fn sub(&self, o: &Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }

    pub fn normalized(&self) -> Vec3 {
        self.scale(1.0 / self.norm())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Scalar triple product `|a, b, c| = a · (b × c)`.
pub fn triple(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    a.dot(&b.cross(c))
}

fn clamped_acos(d: f64) -> Result<f64> {
    if d.abs() > 1.0 + CLAMP_TOLERANCE {
        return Err(Error::Domain(format!("dot product {d} of unit vectors outside [-1, 1]")));
    }
    Ok(d.clamp(-1.0, 1.0).acos())
}

/// Vertices of a spherical triangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriangleVectors {
    pub n: [Vec3; 3],
}

impl TriangleVectors {
    pub fn new(n1: Vec3, n2: Vec3, n3: Vec3) -> Result<Self> {
        let n = [n1, n2, n3];
        for (i, v) in n.iter().enumerate() {
            if (v.norm() - 1.0).abs() > UNIT_TOLERANCE {
                return Err(Error::Domain(format!("n{} has norm {}", i + 1, v.norm())));
            }
        }
        let det = triple(&n1, &n2, &n3);
        if det.abs() < DEGENERACY_THRESHOLD {
            return Err(Error::Degenerate(format!("det(n1, n2, n3) = {det:e}")));
        }
        Ok(Self { n })
    }

    /// Normalizes the three vectors first.
    pub fn from_directions(v1: Vec3, v2: Vec3, v3: Vec3) -> Result<Self> {
        if [v1, v2, v3].iter().map(Vec3::norm).any(|r| r == 0.0 || !r.is_finite()) {
            return Err(Error::Degenerate("zero direction vector".into()));
        }
        Self::new(v1.normalized(), v2.normalized(), v3.normalized())
    }

    pub fn det(&self) -> f64 {
        triple(&self.n[0], &self.n[1], &self.n[2])
    }

    /// Dual triad `n*_i = (n_j × n_k) / |n_j × n_k|` for cyclic `(i, j, k)`.
    pub fn dual(&self) -> DualTriad {
        DualTriad {
            n: dual_of(&self.n),
        }
    }
}

fn dual_of(n: &[Vec3; 3]) -> [Vec3; 3] {
    [
        n[1].cross(&n[2]).normalized(),
        n[2].cross(&n[0]).normalized(),
        n[0].cross(&n[1]).normalized(),
    ]
}

/// Unit normals of the three side planes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualTriad {
    pub n: [Vec3; 3],
}

impl DualTriad {
    /// Dual of the dual, `n_1 = (n*_2 × n*_3) / |n*_2 × n*_3|` and cyclic.
    /// Equals `sign(det(n1, n2, n3)) · n_i`.
    pub fn reconstruct(&self) -> [Vec3; 3] {
        dual_of(&self.n)
    }

    pub fn det(&self) -> f64 {
        triple(&self.n[0], &self.n[1], &self.n[2])
    }
}

/// Which branch the angles of a triangle lie on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AngleRegime {
    /// `A_1`, `A_3` acute and `A_2` obtuse: `u2 = u1 + u3`.
    ObtuseMiddle,
    /// All three angles acute: `u1 + u2 + u3` is the conserved combination.
    AllAcute,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphericalTriangle {
    /// `a_1, a_2, a_3`.
    pub arcs: [f64; 3],
    /// `A_1, A_2, A_3`.
    pub angles: [f64; 3],
    /// Mean of the three ratios `sin A_i / sin a_i`.
    pub k_ratio: f64,
    /// Max minus min of the three sine ratios.
    pub k_spread: f64,
}

impl SphericalTriangle {
    pub fn from_parts(arcs: [f64; 3], angles: [f64; 3]) -> Self {
        let ratios: Vec<f64> = (0..3).map(|i| angles[i].sin() / arcs[i].sin()).collect();
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        Self {
            arcs,
            angles,
            k_ratio: ratios.iter().sum::<f64>() / 3.0,
            k_spread: max - min,
        }
    }

    /// `cos a_i - cos a_j cos a_k - cos A_i sin a_j sin a_k` for cyclic `(i, j, k)`.
    pub fn first_cosine_residuals(&self) -> [f64; 3] {
        let (a, big) = (&self.arcs, &self.angles);
        std::array::from_fn(|i| {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            (a[i].cos() - a[j].cos() * a[k].cos() - big[i].cos() * a[j].sin() * a[k].sin()).abs()
        })
    }

    /// `-cos A_i - cos A_j cos A_k + cos a_i sin A_j sin A_k` for cyclic `(i, j, k)`.
    pub fn second_cosine_residuals(&self) -> [f64; 3] {
        let (a, big) = (&self.arcs, &self.angles);
        std::array::from_fn(|i| {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            (-big[i].cos() - big[j].cos() * big[k].cos() + a[i].cos() * big[j].sin() * big[k].sin())
                .abs()
        })
    }

    /// The two independent sine-law differences, cross-multiplied so that
    /// nothing is divided: `sin A_1 sin a_2 - sin A_2 sin a_1` and the `(2, 3)` one.
    pub fn sine_law_residuals(&self) -> [f64; 2] {
        let (a, big) = (&self.arcs, &self.angles);
        [
            (big[0].sin() * a[1].sin() - big[1].sin() * a[0].sin()).abs(),
            (big[1].sin() * a[2].sin() - big[2].sin() * a[1].sin()).abs(),
        ]
    }

    /// Largest of the eight law residuals.
    pub fn max_law_residual(&self) -> f64 {
        self.first_cosine_residuals()
            .into_iter()
            .chain(self.second_cosine_residuals())
            .chain(self.sine_law_residuals())
            .fold(0.0, f64::max)
    }

    pub fn regime(&self) -> AngleRegime {
        let acute = |x: f64| x < std::f64::consts::FRAC_PI_2;
        let [a1, a2, a3] = self.angles;
        match (acute(a1), acute(a2), acute(a3)) {
            (true, false, true) => AngleRegime::ObtuseMiddle,
            (true, true, true) => AngleRegime::AllAcute,
            _ => AngleRegime::Other,
        }
    }
}

/// Arcs from pairwise dot products and angles from `cos(A_i - π) = n*_j · n*_k`.
pub fn triangle_from_vectors(v: &TriangleVectors) -> Result<(SphericalTriangle, DualTriad)> {
    let n = &v.n;
    let det = v.det();
    if det.abs() < DEGENERACY_THRESHOLD {
        return Err(Error::Degenerate(format!("det(n1, n2, n3) = {det:e}")));
    }
    let arcs = [
        clamped_acos(n[1].dot(&n[2]))?,
        clamped_acos(n[2].dot(&n[0]))?,
        clamped_acos(n[0].dot(&n[1]))?,
    ];
    let dual = v.dual();
    let d = &dual.n;
    let angles = [
        PI - clamped_acos(d[1].dot(&d[2]))?,
        PI - clamped_acos(d[2].dot(&d[0]))?,
        PI - clamped_acos(d[0].dot(&d[1]))?,
    ];
    Ok((SphericalTriangle::from_parts(arcs, angles), dual))
}

/// Residuals of the vector identities behind the spherical laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VectorIdentityReport {
    /// `(a×b)×(c×d)` against both triple-product expansions, over all
    /// 81 ordered choices of `a, b, c, d` from the vertices.
    pub quadruple_cross: f64,
    /// `(a×b)·(c×d) = (a·c)(b·d) - (a·d)(b·c)` over the same choices.
    pub quadruple_dot: f64,
    /// Dual of the dual against `sign(det)·n_i`.
    pub dual_reconstruction: f64,
    /// `|n*_1, n*_2, n*_3| = det² / (|n2×n3||n3×n1||n1×n2|)`.
    pub dual_triple_product: f64,
}

impl VectorIdentityReport {
    pub fn max(&self) -> f64 {
        self.quadruple_cross
            .max(self.quadruple_dot)
            .max(self.dual_reconstruction)
            .max(self.dual_triple_product)
    }
}

/// Max residual of the quadruple cross-product identity for one choice.
pub fn quadruple_cross_residual(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    let lhs = a.cross(b).cross(&c.cross(d));
    let first = b.scale(triple(a, c, d)).sub(&a.scale(triple(b, c, d)));
    let second = c.scale(triple(a, b, d)).sub(&d.scale(triple(a, b, c)));
    lhs.sub(&first).max_abs().max(lhs.sub(&second).max_abs())
}

/// Residual of the quadruple dot-product (Binet-Cauchy) identity.
pub fn quadruple_dot_residual(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    let lhs = a.cross(b).dot(&c.cross(d));
    (lhs - (a.dot(c) * b.dot(d) - a.dot(d) * b.dot(c))).abs()
}

pub fn verify_vector_identities(v: &TriangleVectors) -> Result<VectorIdentityReport> {
    let n = &v.n;
    let det = v.det();
    if det.abs() < DEGENERACY_THRESHOLD {
        return Err(Error::Degenerate(format!("det(n1, n2, n3) = {det:e}")));
    }
    let mut quadruple_cross = 0.0f64;
    let mut quadruple_dot = 0.0f64;
    for a in n {
        for b in n {
            for c in n {
                for d in n {
                    quadruple_cross = quadruple_cross.max(quadruple_cross_residual(a, b, c, d));
                    quadruple_dot = quadruple_dot.max(quadruple_dot_residual(a, b, c, d));
                }
            }
        }
    }
    let dual = v.dual();
    let sign = det.signum();
    let dual_reconstruction = dual
        .reconstruct()
        .iter()
        .zip(n)
        .map(|(r, orig)| r.sub(&orig.scale(sign)).max_abs())
        .fold(0.0, f64::max);
    let sides = n[1].cross(&n[2]).norm() * n[2].cross(&n[0]).norm() * n[0].cross(&n[1]).norm();
    let dual_triple_product = (dual.det() - det * det / sides).abs();
    Ok(VectorIdentityReport {
        quadruple_cross,
        quadruple_dot,
        dual_reconstruction,
        dual_triple_product,
    })
}

/// Spectral parameter domain check shared with the integrability modules:
/// `0 < k < 1`, `u1, u3 >= 0` and `u1 + u3 < K(k)`.
pub(crate) fn check_spectral_domain(u1: f64, u3: f64, k: f64, strict: bool) -> Result<f64> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::Domain(format!("spectral modulus must satisfy 0 < k < 1, got {k}")));
    }
    if !(u1.is_finite() && u3.is_finite()) {
        return Err(Error::Domain(format!("non-finite spectral parameters ({u1}, {u3})")));
    }
    let positive = |u: f64| if strict { u > 0.0 } else { u >= 0.0 };
    if !positive(u1) || !positive(u3) {
        return Err(Error::Branch(format!(
            "spectral parameters must be positive, got u1 = {u1}, u3 = {u3}"
        )));
    }
    let quarter = complete_quarter_period(k)?;
    if u1 + u3 >= quarter {
        return Err(Error::Branch(format!(
            "u2 = u1 + u3 = {} reaches the quarter period K({k}) = {quarter}; \
             the acute/obtuse branch assignment no longer holds",
            u1 + u3
        )));
    }
    Ok(quarter)
}

/// Triangle with `a_i = am(u_i, k)`, `A_{1,3} = am(k u_{1,3}, 1/k)` and
/// `A_2 = π - am(k u_2, 1/k)`, where `u2 = u1 + u3`.
pub fn triangle_from_spectral(u1: f64, u3: f64, k: f64) -> Result<SphericalTriangle> {
    check_spectral_domain(u1, u3, k, true)?;
    let u = [u1, u1 + u3, u3];
    let mut arcs = [0.0; 3];
    let mut angles = [0.0; 3];
    for i in 0..3 {
        arcs[i] = amplitude(u[i], k)?.phi;
        angles[i] = reciprocal_amplitude(k * u[i], k)?.phi;
    }
    angles[1] = PI - angles[1];
    Ok(SphericalTriangle::from_parts(arcs, angles))
}

/// Which sum rule a triangle's spectral coordinates satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SumRule {
    /// `A_2` obtuse: `residual = |u2 - u1 - u3|`.
    Difference { residual: f64 },
    /// All angles acute: only `u1 + u2 + u3` is reported.
    Total { sum: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralCoordinates {
    pub u: [f64; 3],
    pub regime: AngleRegime,
    pub sum_rule: SumRule,
    /// `max_i |sin A_i - k sn(u_i, k)|`.
    pub sine_residual: f64,
}

/// `u_i = F(a_i, k)` with `k` the triangle's sine ratio.
pub fn spectral_coordinates(t: &SphericalTriangle) -> Result<SpectralCoordinates> {
    let k = t.k_ratio;
    if !(k > 0.0 && k < 1.0 - CLAMP_TOLERANCE) {
        return Err(Error::Domain(format!(
            "sine ratio k = {k} must lie in (0, 1); F(a, k) diverges at k = 1"
        )));
    }
    let regime = t.regime();
    if regime == AngleRegime::Other {
        return Err(Error::Branch(format!(
            "angles {:?} are neither (acute, obtuse, acute) nor all acute",
            t.angles
        )));
    }
    let mut u = [0.0; 3];
    let mut sine_residual = 0.0f64;
    for (i, ui) in u.iter_mut().enumerate() {
        *ui = incomplete_integral(t.arcs[i], k)?;
        let sn = jacobi(*ui, k)?.sn;
        sine_residual = sine_residual.max((t.angles[i].sin() - k * sn).abs());
    }
    let sum_rule = match regime {
        AngleRegime::ObtuseMiddle => SumRule::Difference {
            residual: (u[1] - u[0] - u[2]).abs(),
        },
        _ => SumRule::Total { sum: u.iter().sum() },
    };
    Ok(SpectralCoordinates {
        u,
        regime,
        sum_rule,
        sine_residual,
    })
}

/// Branch of the side-angle-side solve used by [`differential_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct SolveBranch {
    obtuse_a3: bool,
    plus_root: bool,
}

/// Cosines of `A_1`, `A_2` of the triangle with sides `a1, a2, a3`.
fn cos_a1_a2(a1: f64, a2: f64, a3: f64) -> (f64, f64) {
    (
        (a1.cos() - a2.cos() * a3.cos()) / (a2.sin() * a3.sin()),
        (a2.cos() - a3.cos() * a1.cos()) / (a3.sin() * a1.sin()),
    )
}

/// Solve `cos a3 = cos a1 cos a2 + cos A3 sin a1 sin a2` for `a2 ∈ (0, π)`,
/// with `sin A3 = k sin a3` on the requested branch of `A3`.
fn solve_a2(a1: f64, a3: f64, k: f64, branch: SolveBranch) -> Option<f64> {
    let s = k * a3.sin();
    if s.abs() > 1.0 {
        return None;
    }
    let mut c3 = ((1.0 - s) * (1.0 + s)).sqrt();
    if branch.obtuse_a3 {
        c3 = -c3;
    }
    let (sa, ca) = a1.sin_cos();
    let r = ca.hypot(c3 * sa);
    let ratio = a3.cos() / r;
    if ratio.abs() > 1.0 {
        return None;
    }
    let shift = (c3 * sa).atan2(ca);
    let offset = ratio.acos();
    let mut a2 = if branch.plus_root { shift + offset } else { shift - offset };
    a2 = (a2 + PI).rem_euclid(2.0 * PI) - PI;
    (a2 > 0.0 && a2 < PI).then_some(a2)
}

fn acute_pair(a1: f64, a2: f64, a3: f64) -> bool {
    let (c1, c2) = cos_a1_a2(a1, a2, a3);
    c1 > 0.0 && c2 > 0.0
}

/// Check `da1/cos A1 + da2/cos A2 = 0` along the family of triangles with
/// fixed `a3` and fixed sine ratio `k`, by a central difference of step `h`.
///
/// Returns `|da2/da1 + cos A2 / cos A1|`. The family is traced on the unique
/// branch where `A1` and `A2` are acute; `A3` may be either.
pub fn differential_check(a1: f64, a3: f64, k: f64, h: f64) -> Result<f64> {
    if !(1e-7..=1e-4).contains(&h) {
        return Err(Error::Domain(format!("step h = {h} outside [1e-7, 1e-4]")));
    }
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::Domain(format!("sine ratio k = {k} outside (0, 1)")));
    }
    if !(a1 > 0.0 && a1 < PI && a3 > 0.0 && a3 < PI) {
        return Err(Error::Domain(format!("arcs must lie in (0, pi), got a1 = {a1}, a3 = {a3}")));
    }
    let branches = [
        SolveBranch { obtuse_a3: false, plus_root: true },
        SolveBranch { obtuse_a3: false, plus_root: false },
        SolveBranch { obtuse_a3: true, plus_root: true },
        SolveBranch { obtuse_a3: true, plus_root: false },
    ];
    let (branch, a2) = branches
        .iter()
        .find_map(|&b| {
            solve_a2(a1, a3, k, b)
                .filter(|&a2| acute_pair(a1, a2, a3))
                .map(|a2| (b, a2))
        })
        .ok_or_else(|| {
            Error::Range(format!(
                "no triangle with a1 = {a1}, a3 = {a3}, k = {k} has A1 and A2 acute"
            ))
        })?;
    let step = |x: f64| {
        solve_a2(x, a3, k, branch)
            .filter(|&a2| acute_pair(x, a2, a3))
            .ok_or_else(|| Error::Range(format!("family leaves the acute regime at a1 = {x}")))
    };
    let slope = (step(a1 + h)? - step(a1 - h)?) / (2.0 * h);
    let (c1, c2) = cos_a1_a2(a1, a2, a3);
    Ok((slope + c2 / c1).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn octant() -> TriangleVectors {
        TriangleVectors::new(
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn octant_triangle() {
        let (t, _) = triangle_from_vectors(&octant()).unwrap();
        for i in 0..3 {
            assert!((t.arcs[i] - FRAC_PI_2).abs() < 1e-15);
            assert!((t.angles[i] - FRAC_PI_2).abs() < 1e-15);
        }
        assert!((t.k_ratio - 1.0).abs() < 1e-15);
        assert!(t.max_law_residual() < 1e-15);
    }

    #[test]
    fn coincident_vertices_are_degenerate() {
        let e1 = Vec3::new(1.0, 0.0, 0.0);
        let e2 = Vec3::new(0.0, 1.0, 0.0);
        assert!(matches!(TriangleVectors::new(e1, e1, e2), Err(Error::Degenerate(_))));
    }

    #[test]
    fn non_unit_vectors_rejected() {
        let r = TriangleVectors::new(
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn orthonormal_identities_exact() {
        let r = verify_vector_identities(&octant()).unwrap();
        assert!(r.max() < 1e-15, "{r:?}");
    }

    #[test]
    fn lagrange_special_case() {
        // a = c, b = d gives |a×b|² = |a|²|b|² - (a·b)².
        let a = Vec3::new(0.3, -0.4, 0.8).normalized();
        let b = Vec3::new(-0.6, 0.1, 0.5).normalized();
        assert!(quadruple_dot_residual(&a, &b, &a, &b) <= 1e-14);
        assert!(quadruple_cross_residual(&a, &b, &a, &b) <= 1e-14);
    }

    #[test]
    fn spectral_isosceles() {
        let t = triangle_from_spectral(0.4, 0.4, 0.7).unwrap();
        assert_eq!(t.arcs[0], t.arcs[2]);
        assert_eq!(t.angles[0], t.angles[2]);
        assert_eq!(t.regime(), AngleRegime::ObtuseMiddle);
        let c = spectral_coordinates(&t).unwrap();
        assert!((c.u[0] - c.u[2]).abs() <= 1e-11);
    }

    #[test]
    fn spectral_laws_hold() {
        let t = triangle_from_spectral(0.5, 0.7, 0.6).unwrap();
        assert!(t.max_law_residual() <= 1e-10, "{t:?}");
        assert!((t.k_ratio - 0.6).abs() < 1e-14);
        let c = spectral_coordinates(&t).unwrap();
        match c.sum_rule {
            SumRule::Difference { residual } => assert!(residual <= 1e-10),
            other => panic!("unexpected {other:?}"),
        }
        assert!((c.u[0] - 0.5).abs() < 1e-10 && (c.u[1] - 1.2).abs() < 1e-10);
    }

    #[test]
    fn spectral_near_unit_modulus_approaches_octant_ratio() {
        let t = triangle_from_spectral(0.01, 0.01, 0.999_999).unwrap();
        assert!((t.k_ratio - 1.0).abs() < 1e-5);
    }

    #[test]
    fn spectral_branch_errors() {
        let kk = complete_quarter_period(0.6).unwrap();
        assert!(matches!(triangle_from_spectral(0.6 * kk, 0.6 * kk, 0.6), Err(Error::Branch(_))));
        assert!(matches!(triangle_from_spectral(-0.1, 0.3, 0.6), Err(Error::Branch(_))));
        assert!(matches!(triangle_from_spectral(0.1, 0.3, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn octant_has_no_spectral_coordinates() {
        let (t, _) = triangle_from_vectors(&octant()).unwrap();
        assert!(matches!(spectral_coordinates(&t), Err(Error::Domain(_))));
    }

    #[test]
    fn all_acute_triangle_reports_total() {
        let v = TriangleVectors::from_directions(
            Vec3::new(1.0, 0.1, 0.0),
            Vec3::new(0.1, 1.0, 0.05),
            Vec3::new(0.05, 0.1, 1.0),
        )
        .unwrap();
        let (t, _) = triangle_from_vectors(&v).unwrap();
        assert_eq!(t.regime(), AngleRegime::AllAcute);
        if t.k_ratio < 1.0 {
            let c = spectral_coordinates(&t).unwrap();
            assert!(matches!(c.sum_rule, SumRule::Total { .. }));
        }
    }

    #[test]
    fn differential_check_examples() {
        assert!(differential_check(0.6, 0.8, 0.5, 1e-5).unwrap() <= 1e-7);
        assert!(differential_check(0.6, 0.8, 0.5, 1.0).is_err());
    }

    #[test]
    fn differential_symmetric_point() {
        // Isosceles a1 = a2 = a: A1 = A2 and the slope must be -1.
        let (a, a3) = (0.7f64, 1.2f64);
        let cos_big3 = (a3.cos() - a.cos() * a.cos()) / (a.sin() * a.sin());
        let k = (1.0 - cos_big3 * cos_big3).sqrt() / a3.sin();
        let r = differential_check(a, a3, k, 1e-5).unwrap();
        assert!(r <= 1e-8, "residual {r}");
    }

    #[test]
    fn differential_planar_limit() {
        // Small k: A1, A2 -> 0, so the family approaches da1 + da2 = 0.
        let k = 1e-3;
        let (a1, a3) = (0.4f64, 1.0f64);
        let h = 1e-5;
        let r = differential_check(a1, a3, k, h).unwrap();
        assert!(r <= 1e-7);
        let branch = SolveBranch { obtuse_a3: true, plus_root: true };
        let slope = (solve_a2(a1 + h, a3, k, branch).unwrap()
            - solve_a2(a1 - h, a3, k, branch).unwrap())
            / (2.0 * h);
        assert!((slope + 1.0).abs() < 1e-5, "slope {slope}");
    }
}
