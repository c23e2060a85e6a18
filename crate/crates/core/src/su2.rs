//! SU(2) rotations in the spin-1/2 and spin-1 representations and the
//! rotation-word identities attached to spherical triangles.
//!
//! Spin-1/2 generators are `J = σ/2`. Spin-1 generators are
//!
//! ```text
//! Jx = [[0, 0, 0], [0, 0, -i], [0, i, 0]]
//! Jz = [[0, -i, 0], [i, 0, 0], [0, 0, 0]]
//! ```
//!
//! so `exp(iθJ)` is a real rotation matrix. All exponentials are closed
//! forms; the hyperbolic factors `exp(cσ)` exist only for spin-1/2.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::elliptic::{amplitude, reciprocal_amplitude};
use crate::error::{Error, Result};
use crate::spherical::{check_spectral_domain, SphericalTriangle};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rep {
    SpinHalf,
    SpinOne,
}

impl Rep {
    pub fn dim(self) -> usize {
        match self {
            Rep::SpinHalf => 2,
            Rep::SpinOne => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axis {
    X,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Kind {
    /// `exp(iθJ_axis)`.
    Circular,
    /// `exp(c·σ_axis)`, spin-1/2 only.
    Hyperbolic,
}

/// Dense complex matrix of dimension 2 or 3, stored in a fixed 3×3 block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallMatrix {
    dim: usize,
    entries: [[Complex64; 3]; 3],
}

impl SmallMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "dimension must be 2 or 3");
        Self {
            dim,
            entries: [[ZERO; 3]; 3],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i][i] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major rows; panics unless square of size 2 or 3.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let mut m = Self::zeros(rows.len());
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), rows.len(), "matrix must be square");
            m.entries[i][..row.len()].copy_from_slice(row);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        assert!(i < self.dim && j < self.dim);
        self.entries[i][j]
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.dim)
            .map(|i| self.entries[i][..self.dim].to_vec())
            .collect()
    }

    fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        let mut m = *self;
        for row in m.entries.iter_mut() {
            for z in row.iter_mut() {
                *z = f(*z);
            }
        }
        m
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    pub fn add(&self, o: &SmallMatrix) -> Self {
        assert_eq!(self.dim, o.dim);
        let mut m = *self;
        for i in 0..3 {
            for j in 0..3 {
                m.entries[i][j] += o.entries[i][j];
            }
        }
        m
    }

    pub fn sub(&self, o: &SmallMatrix) -> Self {
        self.add(&o.scale(-ONE))
    }

    pub fn mul(&self, o: &SmallMatrix) -> Self {
        assert_eq!(self.dim, o.dim);
        let n = self.dim;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.entries[i][j] = (0..n).map(|l| self.entries[i][l] * o.entries[l][j]).sum();
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.entries[i][j] = self.entries[j][i].conj();
            }
        }
        m
    }

    /// Frobenius inner product `tr(A† B)`.
    pub fn inner(&self, o: &SmallMatrix) -> Complex64 {
        assert_eq!(self.dim, o.dim);
        let mut s = ZERO;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.entries[i][j].conj() * o.entries[i][j];
            }
        }
        s
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    pub fn distance(&self, o: &SmallMatrix) -> f64 {
        self.sub(o).frobenius_norm()
    }

    pub fn det(&self) -> Complex64 {
        let e = &self.entries;
        match self.dim {
            2 => e[0][0] * e[1][1] - e[0][1] * e[1][0],
            _ => {
                e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1])
                    - e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0])
                    + e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0])
            }
        }
    }

    /// `‖M M† - I‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        self.mul(&self.adjoint()).distance(&Self::identity(self.dim))
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.entries[i][j] * v[j]).sum())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Generator `J_axis` in the given representation.
pub fn generator(axis: Axis, rep: Rep) -> SmallMatrix {
    let h = Complex64::new(0.5, 0.0);
    match (rep, axis) {
        (Rep::SpinHalf, Axis::X) => SmallMatrix::from_rows(&[vec![ZERO, h], vec![h, ZERO]]),
        (Rep::SpinHalf, Axis::Z) => SmallMatrix::from_rows(&[vec![h, ZERO], vec![ZERO, -h]]),
        (Rep::SpinOne, Axis::X) => SmallMatrix::from_rows(&[
            vec![ZERO, ZERO, ZERO],
            vec![ZERO, ZERO, -I],
            vec![ZERO, I, ZERO],
        ]),
        (Rep::SpinOne, Axis::Z) => SmallMatrix::from_rows(&[
            vec![ZERO, -I, ZERO],
            vec![I, ZERO, ZERO],
            vec![ZERO, ZERO, ZERO],
        ]),
    }
}

/// Pauli matrix `σ_axis`.
pub fn pauli(axis: Axis) -> SmallMatrix {
    generator(axis, Rep::SpinHalf).scale(Complex64::new(2.0, 0.0))
}

/// `exp(iθJ_axis)`.
///
/// Spin-1/2: `cos(θ/2) I + i sin(θ/2) σ`. Spin-1: `I - (1 - cos θ) J² + i sin θ J`,
/// valid because `J³ = J`.
pub fn rot(axis: Axis, theta: f64, rep: Rep) -> SmallMatrix {
    match rep {
        Rep::SpinHalf => {
            let (s, c) = (0.5 * theta).sin_cos();
            SmallMatrix::identity(2)
                .scale(Complex64::new(c, 0.0))
                .add(&pauli(axis).scale(Complex64::new(0.0, s)))
        }
        Rep::SpinOne => {
            let j = generator(axis, rep);
            let (s, c) = theta.sin_cos();
            SmallMatrix::identity(3)
                .sub(&j.mul(&j).scale(Complex64::new(1.0 - c, 0.0)))
                .add(&j.scale(Complex64::new(0.0, s)))
        }
    }
}

/// `exp(c·σ_axis)` as a 2×2 matrix.
pub fn hyper(axis: Axis, c: f64) -> SmallMatrix {
    match axis {
        Axis::Z => SmallMatrix::from_rows(&[
            vec![Complex64::new(c.exp(), 0.0), ZERO],
            vec![ZERO, Complex64::new((-c).exp(), 0.0)],
        ]),
        Axis::X => SmallMatrix::identity(2)
            .scale(Complex64::new(c.cosh(), 0.0))
            .add(&pauli(Axis::X).scale(Complex64::new(c.sinh(), 0.0))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Factor {
    pub axis: Axis,
    pub angle: f64,
    pub kind: Kind,
}

impl Factor {
    pub fn circular(axis: Axis, angle: f64) -> Self {
        Self { axis, angle, kind: Kind::Circular }
    }

    pub fn hyperbolic(axis: Axis, angle: f64) -> Self {
        Self { axis, angle, kind: Kind::Hyperbolic }
    }

    pub fn inverse(&self) -> Self {
        Self { angle: -self.angle, ..*self }
    }

    pub fn matrix(&self, rep: Rep) -> Result<SmallMatrix> {
        if !self.angle.is_finite() {
            return Err(Error::Domain(format!("non-finite factor angle {}", self.angle)));
        }
        match (self.kind, rep) {
            (Kind::Circular, _) => Ok(rot(self.axis, self.angle, rep)),
            (Kind::Hyperbolic, Rep::SpinHalf) => Ok(hyper(self.axis, self.angle)),
            (Kind::Hyperbolic, Rep::SpinOne) => Err(Error::Unsupported(
                "hyperbolic factors are only defined for spin-1/2".into(),
            )),
        }
    }
}

/// Ordered product of rotation factors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationWord {
    factors: Vec<Factor>,
}

impl RotationWord {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Domain("rotation word must be non-empty".into()));
        }
        if let Some(f) = factors.iter().find(|f| !f.angle.is_finite()) {
            return Err(Error::Domain(format!("non-finite factor angle {}", f.angle)));
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Word whose product is the inverse matrix: reversed, each angle negated.
    pub fn inverse(&self) -> Self {
        Self {
            factors: self.factors.iter().rev().map(Factor::inverse).collect(),
        }
    }

    pub fn concat(&self, other: &RotationWord) -> Self {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        Self { factors }
    }
}

/// Left-to-right product of the factor matrices.
pub fn word_product(w: &RotationWord, rep: Rep) -> Result<SmallMatrix> {
    w.factors
        .iter()
        .try_fold(SmallMatrix::identity(rep.dim()), |acc, f| Ok(acc.mul(&f.matrix(rep)?)))
}

/// The two sides of the triangle identity as words:
/// `exp(iA1 Jx) exp(ia2 Jz) exp(iA3 Jx)` and `exp(ia3 Jz) exp(i(π - A2) Jx) exp(ia1 Jz)`.
pub fn triangle_words(t: &SphericalTriangle) -> (RotationWord, RotationWord) {
    let [a1, a2, a3] = t.arcs;
    let [b1, b2, b3] = t.angles;
    let lhs = RotationWord {
        factors: vec![
            Factor::circular(Axis::X, b1),
            Factor::circular(Axis::Z, a2),
            Factor::circular(Axis::X, b3),
        ],
    };
    let rhs = RotationWord {
        factors: vec![
            Factor::circular(Axis::Z, a3),
            Factor::circular(Axis::X, PI - b2),
            Factor::circular(Axis::Z, a1),
        ],
    };
    (lhs, rhs)
}

/// Frobenius norm of the difference between the two sides of the triangle identity.
pub fn verify_triangle_identity(t: &SphericalTriangle, rep: Rep) -> f64 {
    let (lhs, rhs) = triangle_words(t);
    let l = word_product(&lhs, rep).expect("circular words are defined in every representation");
    let r = word_product(&rhs, rep).expect("circular words are defined in every representation");
    l.distance(&r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportComparison {
    /// Operator of the path through `n5, n6`.
    pub path1: SmallMatrix,
    /// Operator of the path through `n2, n3`.
    pub path2: SmallMatrix,
    pub residual: f64,
}

/// Compose the two transport paths around the triangle. Rotations are
/// applied in path order, so the operator of a path is the product with
/// the last step leftmost.
pub fn transport_compare(t: &SphericalTriangle, rep: Rep) -> TransportComparison {
    let [a1, a2, a3] = t.arcs;
    let [b1, b2, b3] = t.angles;
    let compose = |steps: [(Axis, f64); 3]| {
        steps
            .iter()
            .fold(SmallMatrix::identity(rep.dim()), |acc, &(axis, theta)| {
                rot(axis, theta, rep).mul(&acc)
            })
    };
    let path1 = compose([(Axis::X, b3), (Axis::Z, a2), (Axis::X, b1)]);
    let path2 = compose([(Axis::Z, a1), (Axis::X, PI - b2), (Axis::Z, a3)]);
    TransportComparison {
        residual: path1.distance(&path2),
        path1,
        path2,
    }
}

/// Yang-Baxter form of the triangle identity in spectral parameters:
///
/// ```text
/// exp{i am(k u1, 1/k) Jx} exp{i am(u1+u3, k) Jz} exp{i am(k u3, 1/k) Jx}
///   = exp{i am(u3, k) Jz} exp{i am(k(u1+u3), 1/k) Jx} exp{i am(u1, k) Jz}
/// ```
///
/// `u1 = 0` or `u3 = 0` is allowed; both sides then collapse to two factors.
pub fn verify_ybe_spectral(u1: f64, u3: f64, k: f64, rep: Rep) -> Result<f64> {
    check_spectral_domain(u1, u3, k, false)?;
    let u2 = u1 + u3;
    let arc = |u: f64| amplitude(u, k).map(|a| a.phi);
    let ang = |u: f64| reciprocal_amplitude(k * u, k).map(|a| a.phi);
    let lhs = rot(Axis::X, ang(u1)?, rep)
        .mul(&rot(Axis::Z, arc(u2)?, rep))
        .mul(&rot(Axis::X, ang(u3)?, rep));
    let rhs = rot(Axis::Z, arc(u3)?, rep)
        .mul(&rot(Axis::X, ang(u2)?, rep))
        .mul(&rot(Axis::Z, arc(u1)?, rep));
    Ok(lhs.distance(&rhs))
}
