//! Abel flows on the hyperelliptic curve `y² = f(x)`, `deg f = 2n - 2`.
//!
//! `n` divisor points `x_i` carry branch signs `s_i` for `y_i = s_i √f(x_i)`
//! and move by
//!
//! ```text
//! dx_i/dt = x_i y_i / F'(x_i),    F(x) = Π (x - x_i)
//! ```
//!
//! which keeps `Σ_i x_i^k dx_i / y_i = 0` for `k = 0..n-3`. The integrator
//! evolves `(x_i, y_i)` together, with `dy_i/dt = x_i f'(x_i) / (2 F'(x_i))`,
//! so `y_i² - f(x_i)` is conserved and a point passing a root of `f` flips its
//! sign by `y_i` crossing zero instead of by event detection.
//!
//! Two first integrals are provided:
//!
//! ```text
//! Q1 = (Σ x_i y_i / F'_i)² - A_{2n-3} p - A_{2n-2} p²,                  p = Σ x_i
//! Q2 = (Σ y_i / (x_i² F'_i))² (Π x_i)² - A_1 r - A_0 r²,               r = Σ 1/x_i
//! ```
//!
//! `Q1` is conserved by the flow above. `Q2` is `Q1` of the reciprocal system
//! `(g, ξ = 1/x)` and is conserved by the same flow written in `ξ`, which
//! [`integrate_reciprocal_flow`] runs.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 3;
pub const MAX_POINTS: usize = 12;
/// Minimum separation of divisor points at construction.
pub const MIN_GAP: f64 = 1e-9;
/// Integration halts once two points come closer than this.
pub const COLLISION_GAP: f64 = 1e-6;
/// Integration halts when one step moves a point by more than this fraction
/// of the smallest gap, i.e. when points approach faster than `dt` resolves.
pub const MAX_STEP_FRACTION: f64 = 0.25;
/// Minimum distance from a pole for rational-function evaluations.
pub const POLE_DISTANCE: f64 = 1e-6;
/// `f(x_i)` may dip this far below zero (relative to the coefficient scale)
/// before the point is considered off the real branch.
pub const NEGATIVE_F_TOLERANCE: f64 = 1e-9;
/// Points closer to zero than this have no `Q2`.
pub const ZERO_POINT: f64 = 1e-9;

/// `f(x) = A_0 + A_1 x + ... + A_{2n-2} x^{2n-2}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperPoly {
    n: usize,
    coeffs: Vec<f64>,
}

impl HyperPoly {
    /// `coeffs` are `A_0..A_{2n-2}`. A vanishing leading coefficient is
    /// accepted and reported by [`HyperPoly::is_degenerate`].
    pub fn new(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        if !(MIN_POINTS..=MAX_POINTS).contains(&n) {
            return Err(Error::Domain(format!(
                "n = {n} outside [{MIN_POINTS}, {MAX_POINTS}]"
            )));
        }
        if coeffs.len() != 2 * n - 1 {
            return Err(Error::Domain(format!(
                "n = {n} needs {} coefficients A_0..A_{}, got {}",
                2 * n - 1,
                2 * n - 2,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite coefficient".into()));
        }
        if coeffs.iter().all(|&c| c == 0.0) {
            return Err(Error::Degenerate("all coefficients vanish".into()));
        }
        Ok(Self { n, coeffs })
    }

    /// `(1 - x²)(1 - k² x²)` with `n = 3`.
    pub fn elliptic_quartic(k: f64) -> Self {
        let k2 = k * k;
        Self {
            n: 3,
            coeffs: vec![1.0, 0.0, -(1.0 + k2), 0.0, k2],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `A_j`.
    pub fn a(&self, j: usize) -> f64 {
        self.coeffs[j]
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[2 * self.n - 2]
    }

    pub fn is_degenerate(&self) -> bool {
        self.leading() == 0.0
    }

    /// `max_j |A_j|`.
    pub fn scale(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    /// Copy with `max_j |A_j| = 1`, and the factor divided out.
    pub fn normalized(&self) -> (Self, f64) {
        let s = self.scale();
        (
            Self {
                n: self.n,
                coeffs: self.coeffs.iter().map(|c| c / s).collect(),
            },
            s,
        )
    }

    /// `g(ξ) = ξ^{2n-2} f(1/ξ)`: the coefficient list reversed.
    pub fn reversed(&self) -> Self {
        Self {
            n: self.n,
            coeffs: self.coeffs.iter().rev().copied().collect(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (j, &c)| acc * x + j as f64 * c)
    }
}

/// Divisor points with their branch signs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divisor {
    points: Vec<f64>,
    signs: Vec<f64>,
}

impl Divisor {
    pub fn new(points: Vec<f64>, signs: Vec<f64>) -> Result<Self> {
        if points.len() != signs.len() {
            return Err(Error::Domain(format!(
                "{} points but {} signs",
                points.len(),
                signs.len()
            )));
        }
        if points.len() < 2 {
            return Err(Error::Domain("a divisor needs at least two points".into()));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite divisor point".into()));
        }
        if let Some(s) = signs.iter().find(|&&s| s != 1.0 && s != -1.0) {
            return Err(Error::Domain(format!("branch sign must be +1 or -1, got {s}")));
        }
        let gap = min_gap(&points);
        if gap < MIN_GAP {
            return Err(Error::Degenerate(format!("divisor points closer than {MIN_GAP:e}: gap {gap:e}")));
        }
        Ok(Self { points, signs })
    }

    /// All signs `+1`.
    pub fn positive(points: Vec<f64>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0; n])
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `F'(x_i) = Π_{j≠i} (x_i - x_j)`.
    pub fn f_prime(&self) -> Vec<f64> {
        f_prime(&self.points)
    }

    /// Copy with the sign of point `i` flipped.
    pub fn with_flipped_sign(&self, i: usize) -> Self {
        let mut d = self.clone();
        d.signs[i] = -d.signs[i];
        d
    }
}

fn min_gap(points: &[f64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            gap = gap.min((points[i] - points[j]).abs());
        }
    }
    gap
}

fn f_prime(points: &[f64]) -> Vec<f64> {
    (0..points.len())
        .map(|i| {
            points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &xj)| points[i] - xj)
                .product()
        })
        .collect()
}

fn check_matching(f: &HyperPoly, d: &Divisor) -> Result<()> {
    if d.len() != f.n() {
        return Err(Error::Domain(format!(
            "polynomial is for n = {} points, divisor has {}",
            f.n(),
            d.len()
        )));
    }
    Ok(())
}

/// Signed `y_i = s_i √f(x_i)`; fails when a point is off the real branch.
pub fn branch_values(f: &HyperPoly, d: &Divisor) -> Result<Vec<f64>> {
    check_matching(f, d)?;
    let tol = NEGATIVE_F_TOLERANCE * f.scale();
    d.points
        .iter()
        .zip(&d.signs)
        .enumerate()
        .map(|(i, (&x, &s))| {
            let fx = f.eval(x);
            if fx < -tol {
                Err(Error::Branch(format!("f(x_{}) = f({x}) = {fx:e} < 0", i + 1)))
            } else {
                Ok(s * fx.max(0.0).sqrt())
            }
        })
        .collect()
}

/// `Σ_i x_i^k / F'(x_i)`, which is `δ_{k, n-1}` for `0 <= k <= n - 1`.
pub fn moment_sum(d: &Divisor, k: usize) -> Result<f64> {
    if k >= d.len() {
        return Err(Error::Domain(format!("moment k = {k} must be below n = {}", d.len())));
    }
    let fp = d.f_prime();
    Ok(d.points.iter().zip(&fp).map(|(&x, &p)| x.powi(k as i32) / p).sum())
}

fn check_pole_distance(d: &Divisor, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("non-finite evaluation point {x}")));
    }
    if let Some(xi) = d.points.iter().find(|&&xi| (x - xi).abs() < POLE_DISTANCE) {
        return Err(Error::NearPole(format!("x = {x} within {POLE_DISTANCE:e} of divisor point {xi}")));
    }
    Ok(())
}

/// `|x^k / F(x) - Σ_i x_i^k / (F'(x_i)(x - x_i))|`.
pub fn partial_fraction_residual(d: &Divisor, k: usize, x: f64) -> Result<f64> {
    if k >= d.len() {
        return Err(Error::Domain(format!("power k = {k} must be below n = {}", d.len())));
    }
    check_pole_distance(d, x)?;
    let big_f: f64 = d.points.iter().map(|&xi| x - xi).product();
    let fp = d.f_prime();
    let lhs = x.powi(k as i32) / big_f;
    let rhs: f64 = d
        .points
        .iter()
        .zip(&fp)
        .map(|(&xi, &p)| xi.powi(k as i32) / (p * (x - xi)))
        .sum();
    Ok((lhs - rhs).abs())
}

/// Coefficients `(a_i, b_i)` of the double and simple poles of
/// `x² f(x) / F(x)² - A_{2n-2}` at `x_i`.
///
/// With `h = x² f` and `G_i = F / (x - x_i)`:
/// `a_i = h(x_i) / G_i(x_i)²` and
/// `b_i = [h'(x_i) - 2 h(x_i) Σ_{j≠i} 1/(x_i - x_j)] / G_i(x_i)²`.
pub fn double_pole_coefficients(f: &HyperPoly, d: &Divisor) -> Result<Vec<(f64, f64)>> {
    check_matching(f, d)?;
    let fp = d.f_prime();
    Ok(d
        .points
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            let h = xi * xi * f.eval(xi);
            let dh = 2.0 * xi * f.eval(xi) + xi * xi * f.deriv(xi);
            let log_deriv: f64 = d
                .points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &xj)| 1.0 / (xi - xj))
                .sum();
            let g2 = fp[i] * fp[i];
            (h / g2, (dh - 2.0 * h * log_deriv) / g2)
        })
        .collect())
}

/// `|x² f(x)/F(x)² - A_{2n-2} - Σ_i (a_i/(x - x_i)² + b_i/(x - x_i))|`.
pub fn double_pole_residual(f: &HyperPoly, d: &Divisor, x: f64) -> Result<f64> {
    check_pole_distance(d, x)?;
    let coeffs = double_pole_coefficients(f, d)?;
    let big_f: f64 = d.points.iter().map(|&xi| x - xi).product();
    let lhs = x * x * f.eval(x) / (big_f * big_f) - f.leading();
    let rhs: f64 = d
        .points
        .iter()
        .zip(&coeffs)
        .map(|(&xi, &(a, b))| {
            let r = 1.0 / (x - xi);
            a * r * r + b * r
        })
        .sum();
    Ok((lhs - rhs).abs())
}

/// `dx_i/dt = s_i x_i √f(x_i) / F'(x_i)`.
pub fn flow_rhs(f: &HyperPoly, d: &Divisor) -> Result<Vec<f64>> {
    let y = branch_values(f, d)?;
    let fp = d.f_prime();
    if let Some(p) = fp.iter().find(|p| p.abs() < 1e-12) {
        return Err(Error::Degenerate(format!("F'(x_i) = {p:e}: points have collided")));
    }
    Ok(d.points
        .iter()
        .zip(&y)
        .zip(&fp)
        .map(|((&x, &y), &p)| x * y / p)
        .collect())
}

fn q1_from_xy(f: &HyperPoly, x: &[f64], y: &[f64]) -> f64 {
    let n = f.n();
    let fp = f_prime(x);
    let s: f64 = x.iter().zip(y).zip(&fp).map(|((&x, &y), &p)| x * y / p).sum();
    let p: f64 = x.iter().sum();
    s * s - f.a(2 * n - 3) * p - f.a(2 * n - 2) * p * p
}

fn q2_from_xy(f: &HyperPoly, x: &[f64], y: &[f64]) -> Option<f64> {
    if x.iter().any(|v| v.abs() < ZERO_POINT) {
        return None;
    }
    let fp = f_prime(x);
    let s: f64 = x.iter().zip(y).zip(&fp).map(|((&x, &y), &p)| y / (x * x * p)).sum();
    let prod: f64 = x.iter().product();
    let r: f64 = x.iter().map(|v| 1.0 / v).sum();
    let t = s * prod;
    Some(t * t - f.a(1) * r - f.a(0) * r * r)
}

/// `(Σ s_i x_i √f(x_i)/F'(x_i))² - A_{2n-3} Σx_i - A_{2n-2} (Σx_i)²`.
pub fn conserved_q1(f: &HyperPoly, d: &Divisor) -> Result<f64> {
    let y = branch_values(f, d)?;
    Ok(q1_from_xy(f, &d.points, &y))
}

/// `(Σ s_i √f(x_i)/(x_i² F'(x_i)))² (Π x_i)² - A_1 Σ 1/x_i - A_0 (Σ 1/x_i)²`.
pub fn conserved_q2(f: &HyperPoly, d: &Divisor) -> Result<f64> {
    let y = branch_values(f, d)?;
    q2_from_xy(f, &d.points, &y).ok_or_else(|| {
        Error::NearPole(format!("a divisor point lies within {ZERO_POINT:e} of zero"))
    })
}

/// `ξ_i = 1/x_i` on `η² = g(ξ)` with `g` the reversed polynomial. Since
/// `√g(ξ) = |ξ|^{n-1} √f(x)`, the branch sign becomes `s_i sign(ξ_i)^{n-1}`.
pub fn reciprocal_system(f: &HyperPoly, d: &Divisor) -> Result<(HyperPoly, Divisor)> {
    check_matching(f, d)?;
    if let Some(x) = d.points.iter().find(|x| x.abs() < ZERO_POINT) {
        return Err(Error::NearPole(format!("divisor point {x} has no reciprocal")));
    }
    let odd = (f.n() - 1) % 2 == 1;
    let xi: Vec<f64> = d.points.iter().map(|x| 1.0 / x).collect();
    let signs = d
        .signs
        .iter()
        .zip(&xi)
        .map(|(&s, &v)| if odd && v < 0.0 { -s } else { s })
        .collect();
    Ok((f.reversed(), Divisor::new(xi, signs)?))
}

/// Which flow generated a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FlowKind {
    /// `dx_i/dt = x_i y_i / F'(x_i)`; conserves `Q1`.
    Direct,
    /// The same flow for `(g, ξ)`; conserves `Q2`.
    Reciprocal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum HaltReason {
    Collision { t: f64, gap: f64 },
    /// A point moved by `step` while the smallest gap was `gap`.
    Unresolved { t: f64, gap: f64, step: f64 },
    NegativeF { t: f64, index: usize, value: f64 },
    NonFinite { t: f64 },
}

impl std::fmt::Display for HaltReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HaltReason::Collision { t, gap } => {
                write!(f, "point collision at t = {t}: gap {gap:e} < {COLLISION_GAP:e}")
            }
            HaltReason::Unresolved { t, gap, step } => write!(
                f,
                "step at t = {t} moved a point by {step:e} with points {gap:e} apart: approach not resolved by dt"
            ),
            HaltReason::NegativeF { t, index, value } => {
                write!(f, "f(x_{}) = {value:e} < 0 at t = {t}: point left the real branch", index + 1)
            }
            HaltReason::NonFinite { t } => write!(f, "non-finite state at t = {t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    /// Points in the original variable `x`.
    pub x: Vec<f64>,
    /// Signed `y_i` in the original variable, `y_i² ≈ f(x_i)`.
    pub y: Vec<f64>,
    pub q1: f64,
    /// `None` while some point sits at zero.
    pub q2: Option<f64>,
    /// Accumulated `Σ_i ∫ ξ_i^k dξ_i / η_i`, `k = 0..n-3`, in the integrated variables.
    pub constraints: Vec<f64>,
}

impl Sample {
    pub fn signs(&self) -> Vec<f64> {
        self.y.iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub kind: FlowKind,
    pub n: usize,
    pub dt: f64,
    pub samples: Vec<Sample>,
    pub q1_drift: f64,
    /// `None` when `Q2` is undefined at some sample.
    pub q2_drift: Option<f64>,
    /// `max_t |c_k(t)|` for each constraint.
    pub constraint_max: Vec<f64>,
    /// `max |2 p̈ - B_{2n-3} - 2 B_{2n-2} p|` over interior samples, with
    /// `p` the sum of the integrated variables and `B` their polynomial.
    pub eq_p_max: Option<f64>,
    /// Number of times some `y_i` changed sign.
    pub sign_flips: usize,
    pub halt: Option<HaltReason>,
}

impl Trajectory {
    /// Drift of the quantity this flow conserves.
    pub fn invariant_drift(&self) -> Option<f64> {
        match self.kind {
            FlowKind::Direct => Some(self.q1_drift),
            FlowKind::Reciprocal => self.q2_drift,
        }
    }

    pub fn final_time(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// CSV with columns `t, x_1..x_n, s_1..s_n, Q1, Q2, c_0..c_{n-3}`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let io = |e: csv::Error| Error::Unsupported(format!("csv output failed: {e}"));
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.n).map(|i| format!("x_{i}")));
        header.extend((1..=self.n).map(|i| format!("s_{i}")));
        header.push("Q1".into());
        header.push("Q2".into());
        header.extend((0..self.n - 2).map(|k| format!("c_{k}")));
        w.write_record(&header).map_err(io)?;
        for s in &self.samples {
            let mut row = vec![s.t.to_string()];
            row.extend(s.x.iter().map(f64::to_string));
            row.extend(s.signs().iter().map(|v| format!("{v:+}")));
            row.push(s.q1.to_string());
            row.push(s.q2.map_or(String::new(), |v| v.to_string()));
            row.extend(s.constraints.iter().map(f64::to_string));
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Unsupported(format!("csv output failed: {e}")))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowOptions {
    pub t_end: f64,
    pub dt: f64,
}

impl FlowOptions {
    pub const MAX_DT: f64 = 1e-2;

    pub fn new(t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt <= Self::MAX_DT) {
            return Err(Error::Domain(format!("dt = {dt} outside (0, {}]", Self::MAX_DT)));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::Domain(format!("t_end = {t_end} must be positive and finite")));
        }
        Ok(Self { t_end, dt })
    }

    fn steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }
}

/// State `(x, y)` of the integrated system and its right-hand side.
struct Engine<'a> {
    f: &'a HyperPoly,
    n: usize,
}

impl Engine<'_> {
    fn rhs(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let fp = f_prime(x);
        let dx = (0..self.n).map(|i| x[i] * y[i] / fp[i]).collect();
        let dy = (0..self.n).map(|i| x[i] * self.f.deriv(x[i]) / (2.0 * fp[i])).collect();
        (dx, dy)
    }

    fn rk4(&self, x: &[f64], y: &[f64], dt: f64) -> (Vec<f64>, Vec<f64>) {
        let axpy = |v: &[f64], d: &[f64], h: f64| -> Vec<f64> {
            v.iter().zip(d).map(|(a, b)| a + h * b).collect()
        };
        let (k1x, k1y) = self.rhs(x, y);
        let (k2x, k2y) = self.rhs(&axpy(x, &k1x, 0.5 * dt), &axpy(y, &k1y, 0.5 * dt));
        let (k3x, k3y) = self.rhs(&axpy(x, &k2x, 0.5 * dt), &axpy(y, &k2y, 0.5 * dt));
        let (k4x, k4y) = self.rhs(&axpy(x, &k3x, dt), &axpy(y, &k3y, dt));
        let combine = |v: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
            (0..v.len())
                .map(|i| v[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
                .collect()
        };
        (
            combine(x, &k1x, &k2x, &k3x, &k4x),
            combine(y, &k1y, &k2y, &k3y, &k4y),
        )
    }

    /// `Σ_i ∫ x_i^k dx_i / y_i` over one step for `k = 0..n-3`, by 3-point
    /// Gauss-Legendre on the cubic Hermite interpolant of the step. The
    /// integrand is taken as `x^k ẋ / y` or, where `|y|` is smaller than
    /// `|f'(x)|/2`, as the equivalent `2 x^k ẏ / f'(x)`.
    fn constraint_increment(
        &self,
        (x0, y0): (&[f64], &[f64]),
        (x1, y1): (&[f64], &[f64]),
        dt: f64,
    ) -> Vec<f64> {
        const NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
        const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let (dx0, dy0) = self.rhs(x0, y0);
        let (dx1, dy1) = self.rhs(x1, y1);
        let hermite = |p0: f64, p1: f64, m0: f64, m1: f64, s: f64| -> (f64, f64) {
            let (s2, s3) = (s * s, s * s * s);
            let value = (2.0 * s3 - 3.0 * s2 + 1.0) * p0
                + (s3 - 2.0 * s2 + s) * dt * m0
                + (-2.0 * s3 + 3.0 * s2) * p1
                + (s3 - s2) * dt * m1;
            let slope = ((6.0 * s2 - 6.0 * s) * p0
                + (3.0 * s2 - 4.0 * s + 1.0) * dt * m0
                + (-6.0 * s2 + 6.0 * s) * p1
                + (3.0 * s2 - 2.0 * s) * dt * m1)
                / dt;
            (value, slope)
        };
        let mut out = vec![0.0; self.n - 2];
        for (node, weight) in NODES.iter().zip(WEIGHTS) {
            let s = 0.5 * (node + 1.0);
            for i in 0..self.n {
                let (x, xd) = hermite(x0[i], x1[i], dx0[i], dx1[i], s);
                let (y, yd) = hermite(y0[i], y1[i], dy0[i], dy1[i], s);
                let half_fp = 0.5 * self.f.deriv(x);
                let ratio = if y.abs() >= half_fp.abs() { xd / y } else { yd / half_fp };
                let mut power = 1.0;
                for c in out.iter_mut() {
                    *c += 0.5 * dt * weight * power * ratio;
                    power *= x;
                }
            }
        }
        out
    }
}

fn integrate(
    f: &HyperPoly,
    x0: Vec<f64>,
    y0: Vec<f64>,
    opts: FlowOptions,
    kind: FlowKind,
    original: &HyperPoly,
    to_original: impl Fn(&[f64], &[f64]) -> (Vec<f64>, Vec<f64>),
) -> Trajectory {
    let n = f.n();
    let engine = Engine { f, n };
    let tol = NEGATIVE_F_TOLERANCE * f.scale();
    let sample = |t: f64, x: &[f64], y: &[f64], constraints: Vec<f64>| {
        let (ox, oy) = to_original(x, y);
        Sample {
            t,
            q1: q1_from_xy(original, &ox, &oy),
            q2: q2_from_xy(original, &ox, &oy),
            x: ox,
            y: oy,
            constraints,
        }
    };
    let mut samples = vec![sample(0.0, &x0, &y0, vec![0.0; n - 2])];
    let mut p_series = vec![x0.iter().sum::<f64>()];
    let (mut x, mut y) = (x0, y0);
    let mut constraints = vec![0.0; n - 2];
    let mut sign_flips = 0;
    let mut halt = None;
    for step in 1..=opts.steps() {
        let t = step as f64 * opts.dt;
        let (nx, ny) = engine.rk4(&x, &y, opts.dt);
        if nx.iter().chain(&ny).any(|v| !v.is_finite()) {
            halt = Some(HaltReason::NonFinite { t });
            break;
        }
        let moved = x.iter().zip(&nx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let before = min_gap(&x);
        if moved > MAX_STEP_FRACTION * before {
            halt = Some(HaltReason::Unresolved { t, gap: before, step: moved });
            break;
        }
        let gap = min_gap(&nx);
        if gap < COLLISION_GAP {
            halt = Some(HaltReason::Collision { t, gap });
            break;
        }
        if let Some((index, value)) = nx
            .iter()
            .map(|&v| f.eval(v))
            .enumerate()
            .find(|&(_, v)| v < -tol)
        {
            halt = Some(HaltReason::NegativeF { t, index, value });
            break;
        }
        let inc = engine.constraint_increment((&x, &y), (&nx, &ny), opts.dt);
        for (c, d) in constraints.iter_mut().zip(inc) {
            *c += d;
        }
        sign_flips += y.iter().zip(&ny).filter(|(a, b)| **a * **b < 0.0).count();
        p_series.push(nx.iter().sum());
        samples.push(sample(t, &nx, &ny, constraints.clone()));
        x = nx;
        y = ny;
    }
    let q1_0 = samples[0].q1;
    let q1_drift = samples.iter().map(|s| (s.q1 - q1_0).abs()).fold(0.0, f64::max);
    let q2_drift = samples.iter().try_fold(0.0f64, |m, s| {
        Some(m.max((s.q2? - samples[0].q2?).abs()))
    });
    let constraint_max = (0..n - 2)
        .map(|k| samples.iter().map(|s| s.constraints[k].abs()).fold(0.0, f64::max))
        .collect();
    let (b1, b2) = (f.a(2 * n - 3), f.a(2 * n - 2));
    let h2 = opts.dt * opts.dt;
    let eq_p_max = (p_series.len() >= 3).then(|| {
        p_series
            .windows(3)
            .map(|w| (2.0 * (w[2] - 2.0 * w[1] + w[0]) / h2 - b1 - 2.0 * b2 * w[1]).abs())
            .fold(0.0, f64::max)
    });
    Trajectory {
        kind,
        n,
        dt: opts.dt,
        samples,
        q1_drift,
        q2_drift,
        constraint_max,
        eq_p_max,
        sign_flips,
        halt,
    }
}

/// RK4 trajectory of the direct flow. Invalid input is an error; a
/// collision or a point leaving the real branch stops the integration and is
/// reported in [`Trajectory::halt`] with the samples computed so far.
pub fn integrate_flow(f: &HyperPoly, d0: &Divisor, opts: FlowOptions) -> Result<Trajectory> {
    let y0 = branch_values(f, d0)?;
    flow_rhs(f, d0)?;
    Ok(integrate(
        f,
        d0.points.clone(),
        y0,
        opts,
        FlowKind::Direct,
        f,
        |x, y| (x.to_vec(), y.to_vec()),
    ))
}

/// RK4 trajectory of the reciprocal flow, reported in the original variables.
pub fn integrate_reciprocal_flow(f: &HyperPoly, d0: &Divisor, opts: FlowOptions) -> Result<Trajectory> {
    let (g, dxi) = reciprocal_system(f, d0)?;
    let eta0 = branch_values(&g, &dxi)?;
    flow_rhs(&g, &dxi)?;
    let n = f.n();
    Ok(integrate(
        &g,
        dxi.points.clone(),
        eta0,
        opts,
        FlowKind::Reciprocal,
        f,
        |xi, eta| {
            let x: Vec<f64> = xi.iter().map(|v| 1.0 / v).collect();
            let y = x.iter().zip(eta).map(|(&x, &e)| e * x.powi(n as i32 - 1)).collect();
            (x, y)
        },
    ))
}

/// Divisor `x_i = sn(u_i, k)` on `(1 - x²)(1 - k² x²)` with `s_i = sign(cn dn)`.
pub fn elliptic_divisor(u: [f64; 3], k: f64) -> Result<(HyperPoly, Divisor)> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::Domain(format!("modulus must satisfy 0 < k < 1, got {k}")));
    }
    let mut x = Vec::with_capacity(3);
    let mut s = Vec::with_capacity(3);
    for &ui in &u {
        let t = crate::elliptic::jacobi(ui, k)?;
        x.push(t.sn);
        s.push(if t.cn * t.dn < 0.0 { -1.0 } else { 1.0 });
    }
    Ok((HyperPoly::elliptic_quartic(k), Divisor::new(x, s)?))
}

/// The three-point elliptic sums evaluated on `x_i = sn(u_i)`,
/// `y_i = cn(u_i) dn(u_i)`, `u_3 = -u_1 - u_2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipticIdentity {
    pub x: [f64; 3],
    pub y: [f64; 3],
    /// `|Σ x_i y_i / F'_i + k Σ x_i|`.
    pub res34: f64,
    /// `|(x_1 x_2 x_3) Σ y_i / (x_i² F'_i) - Σ 1/x_i|`.
    pub res35: f64,
    /// `(b, c)` of the parabola `y = 1 + b x + c x²` through the first two points.
    pub parabola: (f64, f64),
    /// Distance of the third point from that parabola.
    pub collinearity: f64,
    /// `Q1` of the divisor on the quartic.
    pub q1: f64,
}

/// Evaluate the two three-point sums, optionally flipping the branch of
/// one point (`flip = Some(i)` negates `y_i`).
pub fn elliptic_identity_check(u1: f64, u2: f64, k: f64, flip: Option<usize>) -> Result<EllipticIdentity> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::Domain(format!("modulus must satisfy 0 < k < 1, got {k}")));
    }
    if flip.is_some_and(|i| i > 2) {
        return Err(Error::Domain("flip index must be 0, 1 or 2".into()));
    }
    let u = [u1, u2, -u1 - u2];
    let mut x = [0.0; 3];
    let mut y = [0.0; 3];
    for i in 0..3 {
        let t = crate::elliptic::jacobi(u[i], k)?;
        x[i] = t.sn;
        y[i] = t.cn * t.dn;
    }
    if let Some(i) = flip {
        y[i] = -y[i];
    }
    if let Some(v) = x.iter().find(|v| v.abs() < ZERO_POINT) {
        return Err(Error::Degenerate(format!("sn(u_i) = {v:e} vanishes")));
    }
    let gap = min_gap(&x);
    if gap < MIN_GAP {
        return Err(Error::Degenerate(format!("sn values coincide: gap {gap:e}")));
    }
    let fp = f_prime(&x);
    let s34: f64 = (0..3).map(|i| x[i] * y[i] / fp[i]).sum();
    let sum_x: f64 = x.iter().sum();
    let s35: f64 = (0..3).map(|i| y[i] / (x[i] * x[i] * fp[i])).sum();
    let prod: f64 = x.iter().product();
    let recip: f64 = x.iter().map(|v| 1.0 / v).sum();
    // y_i - 1 = b x_i + c x_i² for i = 1, 2.
    let det = x[0] * x[1] * (x[1] - x[0]);
    let (r0, r1) = (y[0] - 1.0, y[1] - 1.0);
    let b = (r0 * x[1] * x[1] - r1 * x[0] * x[0]) / det;
    let c = (x[0] * r1 - x[1] * r0) / det;
    let collinearity = (1.0 + b * x[2] + c * x[2] * x[2] - y[2]).abs();
    let f = HyperPoly::elliptic_quartic(k);
    Ok(EllipticIdentity {
        x,
        y,
        res34: (s34 + k * sum_x).abs(),
        res35: (prod * s35 - recip).abs(),
        parabola: (b, c),
        collinearity,
        q1: q1_from_xy(&f, &x, &y),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d012() -> Divisor {
        Divisor::positive(vec![0.0, 1.0, 2.0]).unwrap()
    }

    #[test]
    fn moment_sums_by_hand() {
        let d = d012();
        assert_eq!(moment_sum(&d, 0).unwrap(), 0.0);
        assert_eq!(moment_sum(&d, 2).unwrap(), 1.0);
        assert!(moment_sum(&d, 3).is_err());
    }

    #[test]
    fn partial_fractions_at_sample_points() {
        let d = d012();
        assert!(partial_fraction_residual(&d, 0, 5.0).unwrap() <= 1e-14);
        assert!(partial_fraction_residual(&d, 2, 1e6).unwrap() <= 1e-12);
        assert!(matches!(partial_fraction_residual(&d, 1, 1.0 + 1e-8), Err(Error::NearPole(_))));
    }

    #[test]
    fn coincident_points_rejected() {
        assert!(matches!(Divisor::positive(vec![0.5, 0.5, 1.0]), Err(Error::Degenerate(_))));
        assert!(Divisor::new(vec![0.0, 1.0], vec![1.0, 0.5]).is_err());
    }

    #[test]
    fn poly_validation() {
        assert!(HyperPoly::new(2, vec![1.0, 0.0, 1.0]).is_err());
        assert!(HyperPoly::new(3, vec![1.0; 4]).is_err());
        let p = HyperPoly::new(3, vec![1.0, 2.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(p.is_degenerate());
        assert_eq!(p.eval(2.0), 5.0);
        assert_eq!(p.deriv(7.0), 2.0);
    }

    #[test]
    fn double_pole_with_vanishing_leading_coefficient() {
        let f = HyperPoly::new(3, vec![0.3, -0.2, 0.5, 0.1, 0.0]).unwrap();
        let d = Divisor::positive(vec![-0.7, 0.2, 1.1]).unwrap();
        assert!(double_pole_residual(&f, &d, 0.6).unwrap() <= 1e-11);
    }

    #[test]
    fn double_pole_constant_left_side() {
        // f = F(x)² / x² with F = x (x - 1)(x + 2): x² f / F² = 1 = A_4.
        // F² / x² = (x - 1)²(x + 2)² = x⁴ + 2x³ - 3x² - 4x + 4.
        let f = HyperPoly::new(3, vec![4.0, -4.0, -3.0, 2.0, 1.0]).unwrap();
        let d = Divisor::positive(vec![0.0, 1.0, -2.0]).unwrap();
        for x in [0.5, 3.0, -1.3] {
            assert!(double_pole_residual(&f, &d, x).unwrap() <= 1e-11);
        }
    }

    #[test]
    fn flow_rhs_zero_cases() {
        let f = HyperPoly::elliptic_quartic(0.5);
        let d = Divisor::positive(vec![0.0, 0.4, -0.6]).unwrap();
        assert_eq!(flow_rhs(&f, &d).unwrap()[0], 0.0);
        let d = Divisor::positive(vec![1.0, 0.4, -0.6]).unwrap();
        assert_eq!(flow_rhs(&f, &d).unwrap()[0], 0.0);
        let d = Divisor::positive(vec![1.5, 0.4, -0.6]).unwrap();
        assert!(matches!(flow_rhs(&f, &d), Err(Error::Branch(_))));
    }

    #[test]
    fn reciprocal_involution_and_palindrome() {
        let f = HyperPoly::new(3, vec![0.5, -0.2, 0.9, -0.2, 0.5]).unwrap();
        assert_eq!(f.reversed(), f);
        let d = Divisor::new(vec![0.7, -1.3, 2.1], vec![1.0, -1.0, 1.0]).unwrap();
        let (g, e) = reciprocal_system(&f, &d).unwrap();
        let (f2, d2) = reciprocal_system(&g, &e).unwrap();
        assert_eq!(f2, f);
        for (a, b) in d2.points().iter().zip(d.points()) {
            assert!((a - b).abs() <= 1e-13);
        }
        assert_eq!(d2.signs(), d.signs());
    }

    #[test]
    fn q2_is_q1_of_reciprocal_system() {
        let f = HyperPoly::new(3, vec![1.0, -0.69, 0.63, -0.18, 0.57]).unwrap();
        let d = Divisor::positive(vec![1.18, 1.48, -0.7]).unwrap();
        let (g, e) = reciprocal_system(&f, &d).unwrap();
        let q2 = conserved_q2(&f, &d).unwrap();
        assert!((q2 - conserved_q1(&g, &e).unwrap()).abs() <= 1e-12 * q2.abs().max(1.0));
    }

    #[test]
    fn stationary_divisor() {
        // f = (x - 1)²(x + 1)²: double roots at ±1 and x = 0 are fixed.
        let f = HyperPoly::new(3, vec![1.0, 0.0, -2.0, 0.0, 1.0]).unwrap();
        let d = Divisor::positive(vec![-1.0, 0.0, 1.0]).unwrap();
        let q1 = conserved_q1(&f, &d).unwrap();
        assert_eq!(q1, 0.0);
        let tr = integrate_flow(&f, &d, FlowOptions::new(0.5, 1e-2).unwrap()).unwrap();
        assert!(tr.halt.is_none());
        assert_eq!(tr.q1_drift, 0.0);
        assert_eq!(tr.samples.last().unwrap().x, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn elliptic_check_zero_point() {
        assert!(matches!(elliptic_identity_check(0.7, -0.7, 0.6, None), Err(Error::Degenerate(_))));
    }

    #[test]
    fn elliptic_check_parabola() {
        let e = elliptic_identity_check(0.7, 0.4, 0.6, None).unwrap();
        assert!(e.collinearity <= 1e-12, "{e:?}");
        let (b, _) = e.parabola;
        assert!((e.res35 - b.abs()).abs() <= 1e-12);
        assert!((e.q1 - b * b).abs() <= 1e-12);
    }

    #[test]
    fn options_validation() {
        assert!(FlowOptions::new(1.0, 0.02).is_err());
        assert!(FlowOptions::new(0.0, 0.001).is_err());
        assert_eq!(FlowOptions::new(1.0, 1e-3).unwrap().steps(), 1000);
    }

    #[test]
    fn csv_columns() {
        let f = HyperPoly::elliptic_quartic(0.6);
        let (_, d) = elliptic_divisor([0.7, 0.4, -1.1], 0.6).unwrap();
        let tr = integrate_flow(&f, &d, FlowOptions::new(0.02, 1e-2).unwrap()).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,x_1,x_2,x_3,s_1,s_2,s_3,Q1,Q2,c_0");
        assert_eq!(lines.count(), 3);
    }
}
