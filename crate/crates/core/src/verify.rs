//! Seeded randomized verification suites.
//!
//! Each suite is a list of checks. A check draws its inputs sequentially from
//! a ChaCha8 stream (seeded with the run seed, stream number fixed per
//! check), evaluates them in parallel and reduces with `max`/`min` and
//! counts, so a report depends only on the configuration.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::abel::{
    self, double_pole_coefficients, double_pole_residual, elliptic_divisor, elliptic_identity_check, integrate_flow,
    integrate_reciprocal_flow, moment_sum, partial_fraction_residual, Divisor, FlowOptions,
    HyperPoly, Trajectory,
};
use crate::elliptic::{
    addition_eval, amplitude, complement, complete_quarter_period, from_reciprocal_modulus,
    incomplete_integral, jacobi, reciprocal_modulus,
};
use crate::error::{Error, Result};
use crate::ising::{
    angle_form, angle_star_triangle_residual, couplings_crossing, couplings_from_v,
    difference_property_residual, star_triangle_residual, verify_difference_property,
};
use crate::spherical::{
    differential_check, spectral_coordinates, triangle_from_spectral, triangle_from_vectors,
    verify_vector_identities, SumRule, TriangleVectors, Vec3,
};
use crate::su2::{rot, transport_compare, verify_triangle_identity, verify_ybe_spectral, Axis, Rep};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;
/// At most this many failing cases are listed per check.
pub const MAX_LISTED_FAILURES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Elliptic,
    Spherical,
    Su2,
    Ising,
    Abel,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Elliptic, Suite::Spherical, Suite::Su2, Suite::Ising, Suite::Abel];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Elliptic => "elliptic",
            Suite::Spherical => "spherical",
            Suite::Su2 => "su2",
            Suite::Ising => "ising",
            Suite::Abel => "abel",
        }
    }

    pub fn parse(name: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    /// Overrides the sample count of every randomized check.
    pub samples: Option<usize>,
    /// Overrides the tolerance of every upper-bound check.
    pub tol: Option<f64>,
}

impl RunConfig {
    pub fn new(seed: u64, samples: Option<usize>, tol: Option<f64>) -> Result<Self> {
        if samples == Some(0) {
            return Err(Error::Domain("sample count must be positive".into()));
        }
        if let Some(t) = tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Domain(format!("tolerance must be positive, got {t}")));
            }
        }
        Ok(Self { seed, samples, tol })
    }

    fn count(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }

    fn tolerance(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Direction of the comparison against the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// Pass when the largest residual is at most the threshold.
    Upper,
    /// Pass when the smallest value is at least the threshold (negative controls).
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub inputs: Vec<f64>,
    pub residual: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub suite: String,
    pub check: String,
    pub samples: usize,
    pub bound: Bound,
    /// Largest residual for an upper bound, smallest value for a lower bound.
    pub observed: f64,
    pub threshold: f64,
    pub pass: bool,
    pub failure_count: usize,
    /// The first failing cases in input order.
    pub failures: Vec<Failure>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub pass: bool,
    pub checks: Vec<VerificationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub seed: u64,
    pub pass: bool,
    pub suites: Vec<SuiteReport>,
}

impl RunReport {
    pub fn checks(&self) -> impl Iterator<Item = &VerificationReport> {
        self.suites.iter().flat_map(|s| s.checks.iter())
    }

    /// Copy with every wall time zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> RunReport {
        let mut r = self.clone();
        for s in r.suites.iter_mut() {
            for c in s.checks.iter_mut() {
                c.wall_time_s = 0.0;
            }
        }
        r
    }
}

fn run_check<F>(suite: Suite, check: &str, bound: Bound, threshold: f64, inputs: Vec<Vec<f64>>, eval: F) -> VerificationReport
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let start = Instant::now();
    let results: Vec<Result<f64>> = inputs.par_iter().map(|x| eval(x)).collect();
    let mut observed = match bound {
        Bound::Upper => 0.0f64,
        Bound::Lower => f64::INFINITY,
    };
    let mut failures = Vec::new();
    let mut failure_count = 0;
    for (x, r) in inputs.iter().zip(results) {
        let failure = match r {
            Ok(v) if v.is_nan() => Some(Failure { inputs: x.clone(), residual: None, error: Some("NaN residual".into()) }),
            Ok(v) => {
                observed = match bound {
                    Bound::Upper => observed.max(v),
                    Bound::Lower => observed.min(v),
                };
                let ok = match bound {
                    Bound::Upper => v <= threshold,
                    Bound::Lower => v >= threshold,
                };
                (!ok).then(|| Failure { inputs: x.clone(), residual: Some(v), error: None })
            }
            Err(e) => Some(Failure { inputs: x.clone(), residual: None, error: Some(e.to_string()) }),
        };
        if let Some(f) = failure {
            failure_count += 1;
            if failures.len() < MAX_LISTED_FAILURES {
                failures.push(f);
            }
        }
    }
    VerificationReport {
        suite: suite.name().into(),
        check: check.into(),
        samples: inputs.len(),
        bound,
        observed,
        threshold,
        pass: failure_count == 0,
        failure_count,
        failures,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// Uniform point on the unit sphere by rejection from the cube.
fn unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let r = v.norm();
        if r > 1e-3 && r <= 1.0 {
            return v.normalized();
        }
    }
}

/// Non-degenerate vertex triple flattened to nine numbers.
fn random_triangle(rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let n = [unit_vector(rng), unit_vector(rng), unit_vector(rng)];
        if TriangleVectors::new(n[0], n[1], n[2]).is_ok() {
            return n.iter().flat_map(|v| v.0).collect();
        }
    }
}

fn vectors_from(x: &[f64]) -> Result<TriangleVectors> {
    TriangleVectors::new(
        Vec3::new(x[0], x[1], x[2]),
        Vec3::new(x[3], x[4], x[5]),
        Vec3::new(x[6], x[7], x[8]),
    )
}

/// `(u1, u3, k)` with `u1 + u3` inside `(0.02 K, 0.98 K)`.
fn random_spectral(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let k = rng.gen_range(0.05..0.95);
    let kk = complete_quarter_period(k).expect("k < 1");
    let u2 = kk * rng.gen_range(0.02..0.98);
    let split = rng.gen_range(0.05..0.95);
    vec![u2 * split, u2 * (1.0 - split), k]
}

fn sample<F: FnMut(&mut ChaCha8Rng) -> Vec<f64>>(cfg: &RunConfig, stream: u64, count: usize, mut gen: F) -> Vec<Vec<f64>> {
    let mut rng = cfg.rng(stream);
    (0..count).map(|_| gen(&mut rng)).collect()
}

fn elliptic_suite(cfg: &RunConfig) -> Vec<VerificationReport> {
    let s = Suite::Elliptic;
    let n = cfg.count(10_000);
    let wide = |rng: &mut ChaCha8Rng| {
        let k = rng.gen_range(0.01..0.99);
        let kk = complete_quarter_period(k).expect("k < 1");
        vec![rng.gen_range(-4.0 * kk..4.0 * kk), k]
    };
    let mut out = vec![run_check(s, "pythagorean", Bound::Upper, cfg.tolerance(1e-12), sample(cfg, 11, n, wide), |x| {
        let t = jacobi(x[0], x[1])?;
        let (a, b) = t.pythagorean_residuals(x[1]);
        // |dn| >= k' holds up to the same tolerance.
        let floor = (complement(x[1]) - t.dn.abs()).max(0.0);
        Ok(a.max(b).max(floor))
    })];
    let pair = |rng: &mut ChaCha8Rng| {
        let k = rng.gen_range(0.01..0.99);
        let kk = complete_quarter_period(k).expect("k < 1");
        vec![rng.gen_range(-2.0 * kk..2.0 * kk), rng.gen_range(-2.0 * kk..2.0 * kk), k]
    };
    out.push(run_check(s, "addition", Bound::Upper, cfg.tolerance(1e-10), sample(cfg, 12, n, pair), |x| {
        let add = addition_eval(x[0], x[1], x[2])?;
        Ok(add.max_abs_diff(&jacobi(x[0] + x[1], x[2])?))
    }));
    let m = cfg.count(1_000);
    out.push(run_check(s, "derivatives", Bound::Upper, cfg.tolerance(1e-6), sample(cfg, 13, m, wide), |x| {
        let (u, k, h) = (x[0], x[1], 1e-6);
        let (p, q, t) = (jacobi(u + h, k)?, jacobi(u - h, k)?, jacobi(u, k)?);
        let d = |a: f64, b: f64| (a - b) / (2.0 * h);
        Ok((d(p.sn, q.sn) - t.cn * t.dn)
            .abs()
            .max((d(p.cn, q.cn) + t.sn * t.dn).abs())
            .max((d(p.dn, q.dn) + k * k * t.sn * t.cn).abs()))
    }));
    let quadrant = |rng: &mut ChaCha8Rng| vec![rng.gen_range(0.0..FRAC_PI_2), rng.gen_range(0.01..0.99)];
    out.push(run_check(s, "amplitude_round_trip", Bound::Upper, cfg.tolerance(1e-11), sample(cfg, 14, m, quadrant), |x| {
        Ok((amplitude(incomplete_integral(x[0], x[1])?, x[1])?.phi - x[0]).abs())
    }));
    out.push(run_check(s, "reciprocal_round_trip", Bound::Upper, cfg.tolerance(1e-11), sample(cfg, 15, m, wide), |x| {
        let (u, k) = (x[0], x[1]);
        let there = reciprocal_modulus(k * u, k)?;
        let back = from_reciprocal_modulus(&there, k)?;
        Ok(back.max_abs_diff(&jacobi(u, k)?))
    }));
    out
}

fn spherical_suite(cfg: &RunConfig) -> Vec<VerificationReport> {
    let s = Suite::Spherical;
    let n = cfg.count(1_000);
    let triples = sample(cfg, 21, n, random_triangle);
    let mut out = vec![run_check(s, "laws", Bound::Upper, cfg.tolerance(1e-10), triples.clone(), |x| {
        let (t, _) = triangle_from_vectors(&vectors_from(x)?)?;
        Ok(t.max_law_residual())
    })];
    out.push(run_check(s, "quadruple_products", Bound::Upper, cfg.tolerance(1e-13), triples.clone(), |x| {
        let r = verify_vector_identities(&vectors_from(x)?)?;
        Ok(r.quadruple_cross.max(r.quadruple_dot))
    }));
    out.push(run_check(s, "duality", Bound::Upper, cfg.tolerance(1e-10), triples, |x| {
        let v = vectors_from(x)?;
        let r = verify_vector_identities(&v)?;
        let d = v.dual();
        let ortho = (0..3)
            .flat_map(|i| [(i + 1) % 3, (i + 2) % 3].map(|j| d.n[i].dot(&v.n[j]).abs()))
            .fold(0.0, f64::max);
        Ok(r.dual_reconstruction.max(r.dual_triple_product).max(ortho))
    }));
    let spectral = sample(cfg, 22, n, random_spectral);
    out.push(run_check(s, "sum_rule", Bound::Upper, cfg.tolerance(1e-9), spectral.clone(), |x| {
        let c = spectral_coordinates(&triangle_from_spectral(x[0], x[1], x[2])?)?;
        let SumRule::Difference { residual } = c.sum_rule else {
            return Err(Error::Branch("spectral triangle not in the obtuse-middle regime".into()));
        };
        let recovered = (c.u[0] - x[0]).abs().max((c.u[1] - x[0] - x[1]).abs()).max((c.u[2] - x[1]).abs());
        Ok(residual.max(recovered).max(c.sine_residual))
    }));
    let differential = sample(cfg, 23, n, |rng| loop {
        let x = vec![rng.gen_range(0.1..1.4), rng.gen_range(0.1..1.4), rng.gen_range(0.05..0.95)];
        if differential_check(x[0], x[1], x[2], 1e-5).is_ok() {
            return x;
        }
    });
    out.push(run_check(s, "differential", Bound::Upper, cfg.tolerance(1e-7), differential, |x| {
        differential_check(x[0], x[1], x[2], 1e-5)
    }));
    out
}

fn su2_suite(cfg: &RunConfig) -> Vec<VerificationReport> {
    let s = Suite::Su2;
    let n = cfg.count(1_000);
    let reps = [Rep::SpinHalf, Rep::SpinOne];
    let triples = sample(cfg, 31, n, random_triangle);
    let mut out = vec![run_check(s, "triangle_identity", Bound::Upper, cfg.tolerance(1e-9), triples.clone(), |x| {
        let (t, _) = triangle_from_vectors(&vectors_from(x)?)?;
        Ok(reps.iter().map(|&r| verify_triangle_identity(&t, r)).fold(0.0, f64::max))
    })];
    let with_vector = sample(cfg, 32, n, |rng| {
        let mut x = random_triangle(rng);
        x.extend((0..3).map(|_| rng.gen_range(-1.0..1.0)));
        x
    });
    out.push(run_check(s, "transport", Bound::Upper, cfg.tolerance(1e-9), with_vector, |x| {
        let (t, _) = triangle_from_vectors(&vectors_from(&x[..9])?)?;
        let half = transport_compare(&t, Rep::SpinHalf).residual;
        let one = transport_compare(&t, Rep::SpinOne);
        let v: Vec<_> = x[9..].iter().map(|&c| num_complex::Complex64::new(c, 0.0)).collect();
        let moved = one
            .path1
            .apply(&v)
            .iter()
            .zip(one.path2.apply(&v))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        Ok(half.max(one.residual).max(moved))
    }));
    out.push(run_check(s, "ybe_spectral", Bound::Upper, cfg.tolerance(1e-9), sample(cfg, 33, n, random_spectral), |x| {
        reps.iter()
            .map(|&r| verify_ybe_spectral(x[0], x[1], x[2], r))
            .try_fold(0.0f64, |m, v| Ok(m.max(v?)))
    }));
    let angles = sample(cfg, 34, n, |rng| vec![rng.gen_range(-2.0 * PI..2.0 * PI), rng.gen_range(-2.0 * PI..2.0 * PI)]);
    out.push(run_check(s, "group_structure", Bound::Upper, cfg.tolerance(1e-12), angles, |x| {
        let mut worst = 0.0f64;
        for rep in reps {
            for axis in [Axis::X, Axis::Z] {
                let (a, b) = (rot(axis, x[0], rep), rot(axis, x[1], rep));
                worst = worst.max(a.unitarity_defect());
                worst = worst.max(a.mul(&b).distance(&rot(axis, x[0] + x[1], rep)));
            }
        }
        for axis in [Axis::X, Axis::Z] {
            worst = worst.max((crate::su2::hyper(axis, x[0] / PI).det() - 1.0).norm());
        }
        Ok(worst)
    }));
    out
}

/// `side × side` grid covering `v1 + v3 < 0.98 K(k')`, flattened with `k`.
fn ising_grid(side: usize, ks: &[f64]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(side * side * ks.len());
    for &k in ks {
        let kk = complete_quarter_period(complement(k)).expect("k > 0");
        for i in 0..side {
            let total = 0.98 * kk * (i as f64 + 0.5) / side as f64;
            for j in 0..side {
                let split = (j as f64 + 0.5) / side as f64;
                out.push(vec![total * split, total * (1.0 - split), k]);
            }
        }
    }
    out
}

/// The middle parameter moved by 0.05, inward when outward would leave the domain.
fn perturbed_middle(v1: f64, v3: f64, k: f64) -> f64 {
    let kk = complete_quarter_period(complement(k)).expect("k > 0");
    if v1 + v3 + 0.05 < kk {
        v1 + v3 + 0.05
    } else {
        v1 + v3 - 0.05
    }
}

fn ising_suite(cfg: &RunConfig) -> Vec<VerificationReport> {
    let s = Suite::Ising;
    let side = (cfg.count(2_500) as f64).sqrt().ceil() as usize;
    let grid = ising_grid(side, &[0.3, 0.6, 0.9]);
    let mut out = vec![run_check(s, "star_triangle", Bound::Upper, cfg.tolerance(1e-9), grid.clone(), |x| {
        let p = couplings_from_v(x[0], x[1], x[2])?;
        let st = star_triangle_residual(&p.couplings);
        Ok(st.residual.max((st.scalar - 1.0).norm()))
    })];
    out.push(run_check(s, "hyperbolic_consistency", Bound::Upper, cfg.tolerance(1e-11), grid.clone(), |x| {
        Ok(couplings_from_v(x[0], x[1], x[2])?.hyperbolic_defect())
    }));
    out.push(run_check(s, "star_triangle_control", Bound::Lower, 1e-3, grid.clone(), |x| {
        let mut c = couplings_from_v(x[0], x[1], x[2])?.couplings;
        c.big_k[1] += 0.05;
        Ok(star_triangle_residual(&c).residual)
    }));
    out.push(run_check(s, "difference_property", Bound::Upper, cfg.tolerance(1e-9), grid.clone(), |x| {
        verify_difference_property(x[0], x[1], x[2])
    }));
    out.push(run_check(s, "difference_control", Bound::Lower, 1e-3, grid, |x| {
        difference_property_residual(x[0], x[1], perturbed_middle(x[0], x[1], x[2]), x[2])
    }));
    let n = cfg.count(1_000);
    out.push(run_check(s, "crossing_form", Bound::Upper, cfg.tolerance(1e-9), sample(cfg, 41, n, random_spectral), |x| {
        let p = couplings_crossing(x[0], x[1], x[2])?;
        let st = star_triangle_residual(&p.couplings);
        Ok(st.residual.max((st.scalar - 1.0).norm()).max(p.hyperbolic_defect()))
    }));
    out.push(run_check(s, "angle_form", Bound::Upper, cfg.tolerance(1e-10), sample(cfg, 42, n, random_spectral), |x| {
        let a = angle_form(x[0], x[1], x[2])?;
        Ok(a.triangle_defect.max(angle_star_triangle_residual(&a)))
    }));
    out
}

/// Random normalized polynomial and a divisor of well-separated points,
/// flattened as `[n, A_0.., x_1.., k, x]` with `k` a moment index and `x`
/// an evaluation point at least 0.1 from every divisor point.
fn random_abel_instance(rng: &mut ChaCha8Rng, n_max: usize) -> Vec<f64> {
    let n = rng.gen_range(3..=n_max);
    let mut coeffs: Vec<f64> = (0..2 * n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    coeffs.iter_mut().for_each(|c| *c /= scale);
    let points = loop {
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let ok = (0..n).all(|i| (i + 1..n).all(|j| (p[i] - p[j]).abs() >= 0.2));
        if ok {
            break p;
        }
    };
    let x = loop {
        let x: f64 = rng.gen_range(-2.5..2.5);
        if points.iter().all(|p| (x - p).abs() >= 0.1) {
            break x;
        }
    };
    let k = rng.gen_range(0..n);
    let mut out = vec![n as f64];
    out.extend(coeffs);
    out.extend(points);
    out.push(k as f64);
    out.push(x);
    out
}

fn unpack_abel(v: &[f64]) -> Result<(HyperPoly, Divisor, usize, f64)> {
    let n = v[0] as usize;
    let f = HyperPoly::new(n, v[1..2 * n].to_vec())?;
    let d = Divisor::positive(v[2 * n..3 * n].to_vec())?;
    Ok((f, d, v[3 * n] as usize, v[3 * n + 1]))
}

/// Flow instances with their coefficient list, initial points and signs.
pub struct CuratedFlow {
    pub name: &'static str,
    pub coeffs: Vec<f64>,
    pub points: Vec<f64>,
    pub signs: Vec<f64>,
}

impl CuratedFlow {
    pub fn system(&self) -> Result<(HyperPoly, Divisor)> {
        Ok((
            HyperPoly::new(self.points.len(), self.coeffs.clone())?,
            Divisor::new(self.points.clone(), self.signs.clone())?,
        ))
    }
}

/// Flows whose points stay separated, off zero and on the real branch over `t ∈ [0, 1]`.
pub fn curated_flows() -> Vec<CuratedFlow> {
    let (f, d) = elliptic_divisor([0.7, 0.4, -1.1], 0.6).expect("valid elliptic divisor");
    vec![
        CuratedFlow {
            name: "elliptic_k0.6",
            coeffs: f.coeffs().to_vec(),
            points: d.points().to_vec(),
            signs: d.signs().to_vec(),
        },
        CuratedFlow {
            name: "n3_a",
            coeffs: vec![1.0, -0.69, 0.63, -0.18, 0.57],
            points: vec![1.18, 1.48, -0.7],
            signs: vec![1.0; 3],
        },
        CuratedFlow {
            name: "n3_b",
            coeffs: vec![0.68, 0.59, -0.35, 0.69, 1.0],
            points: vec![0.36, -0.44, 1.2],
            signs: vec![1.0; 3],
        },
        CuratedFlow {
            name: "n3_c",
            coeffs: vec![0.71, -0.24, 0.88, -0.41, 1.0],
            points: vec![-1.31, 0.7, -0.63],
            signs: vec![1.0; 3],
        },
        CuratedFlow {
            name: "n4_a",
            coeffs: vec![0.4, -1.0, 0.77, 0.85, 0.48, -0.63, 0.12],
            points: vec![1.46, 0.46, -2.17, -0.28],
            signs: vec![1.0; 4],
        },
        CuratedFlow {
            name: "n4_b",
            coeffs: vec![0.74, -0.34, 0.01, 0.74, 0.34, 1.0, 0.51],
            points: vec![-1.93, 0.78, -0.89, 2.36],
            signs: vec![1.0, -1.0, 1.0, 1.0],
        },
    ]
}

/// Both flows of a curated instance at one step size over `t ∈ [0, 1]`.
fn flow_pair(flow: &CuratedFlow, dt: f64) -> Result<[Trajectory; 2]> {
    let (f, d) = flow.system()?;
    let opts = FlowOptions::new(1.0, dt)?;
    let pair = [integrate_flow(&f, &d, opts)?, integrate_reciprocal_flow(&f, &d, opts)?];
    if let Some(h) = pair.iter().find_map(|t| t.halt.as_ref()) {
        return Err(Error::Range(format!("{}: integration halted: {h}", flow.name)));
    }
    Ok(pair)
}

fn invariant_drift(t: &Trajectory) -> Result<f64> {
    t.invariant_drift()
        .ok_or_else(|| Error::NearPole("conserved quantity undefined along the trajectory".into()))
}

fn abel_suite(cfg: &RunConfig) -> Vec<VerificationReport> {
    let s = Suite::Abel;
    let n = cfg.count(1_000);
    let moments = sample(cfg, 51, n, |rng| random_abel_instance(rng, 8));
    let mut out = vec![run_check(s, "moment_sums", Bound::Upper, cfg.tolerance(1e-12), moments, |v| {
        let (_, d, _, _) = unpack_abel(v)?;
        let fp = d.f_prime();
        let mut worst = 0.0f64;
        for k in 0..d.len() {
            let scale: f64 = d.points().iter().zip(&fp).map(|(x, p)| (x.powi(k as i32) / p).abs()).sum();
            let expected = if k + 1 == d.len() { 1.0 } else { 0.0 };
            worst = worst.max((moment_sum(&d, k)? - expected).abs() / scale.max(1.0));
        }
        Ok(worst)
    })];
    let instances = sample(cfg, 52, n, |rng| random_abel_instance(rng, 8));
    out.push(run_check(s, "partial_fractions", Bound::Upper, cfg.tolerance(1e-10), instances.clone(), |v| {
        let (_, d, k, x) = unpack_abel(v)?;
        partial_fraction_residual(&d, k, x)
    }));
    out.push(run_check(s, "double_pole", Bound::Upper, cfg.tolerance(1e-10), instances, |v| {
        let (f, d, _, x) = unpack_abel(v)?;
        let big_f: f64 = d.points().iter().map(|&p| x - p).product();
        let scale = (x * x * f.eval(x) / (big_f * big_f)).abs()
            + f.leading().abs()
            + d.points()
                .iter()
                .zip(double_pole_coefficients(&f, &d)?)
                .map(|(&p, (a, b))| (a / ((x - p) * (x - p))).abs() + (b / (x - p)).abs())
                .sum::<f64>();
        Ok(double_pole_residual(&f, &d, x)? / scale.max(1.0))
    }));
    let flows = curated_flows();
    let ids: Vec<Vec<f64>> = (0..flows.len()).map(|i| vec![i as f64]).collect();
    let fine: Vec<Result<[Trajectory; 2]>> = flows.par_iter().map(|f| flow_pair(f, 1e-3)).collect();
    let coarse: Vec<Result<[Trajectory; 2]>> = flows.par_iter().map(|f| flow_pair(f, 1e-2)).collect();
    let half: Vec<Result<[Trajectory; 2]>> = flows.par_iter().map(|f| flow_pair(f, 5e-3)).collect();
    let get = |set: &Vec<Result<[Trajectory; 2]>>, v: &[f64]| -> Result<[Trajectory; 2]> { set[v[0] as usize].clone() };
    out.push(run_check(s, "flow_conservation", Bound::Upper, cfg.tolerance(1e-6), ids.clone(), |v| {
        let [direct, recip] = get(&fine, v)?;
        Ok(invariant_drift(&direct)?.max(invariant_drift(&recip)?))
    }));
    out.push(run_check(s, "flow_convergence_order", Bound::Upper, 0.3, ids.clone(), |v| {
        let (a, b) = (get(&coarse, v)?, get(&half, v)?);
        let mut worst = 0.0f64;
        for i in 0..2 {
            let order = (invariant_drift(&a[i])? / invariant_drift(&b[i])?).log2();
            worst = worst.max((order - 4.0).abs());
        }
        Ok(worst)
    }));
    out.push(run_check(s, "abel_constraints", Bound::Upper, cfg.tolerance(1e-6), ids.clone(), |v| {
        let pair = get(&fine, v)?;
        Ok(pair.iter().flat_map(|t| t.constraint_max.iter().copied()).fold(0.0, f64::max))
    }));
    out.push(run_check(s, "second_order_sum", Bound::Upper, cfg.tolerance(1e-4), ids, |v| {
        let pair = get(&fine, v)?;
        pair.iter().try_fold(0.0f64, |m, t| {
            Ok(m.max(t.eq_p_max.ok_or_else(|| Error::Range("trajectory too short".into()))?))
        })
    }));
    let elliptic = sample(cfg, 53, n, |rng| loop {
        let k = rng.gen_range(0.05..0.95);
        let kk = complete_quarter_period(k).expect("k < 1");
        let x = vec![rng.gen_range(-kk..kk), rng.gen_range(-kk..kk), k];
        if let Ok(e) = elliptic_identity_check(x[0], x[1], x[2], None) {
            if e.x.iter().all(|v| v.abs() > 1e-3) && (0..3).all(|i| (e.x[i] - e.x[(i + 1) % 3]).abs() > 1e-3) {
                return x;
            }
        }
    });
    out.push(run_check(s, "elliptic_identities", Bound::Upper, cfg.tolerance(1e-10), elliptic.clone(), |x| {
        let e = elliptic_identity_check(x[0], x[1], x[2], None)?;
        Ok(e.res34.max(e.res35))
    }));
    out.push(run_check(s, "elliptic_branch_control", Bound::Lower, 1e-3, elliptic, |x| {
        let base = elliptic_identity_check(x[0], x[1], x[2], None)?;
        let fp = abel::Divisor::positive(base.x.to_vec())?.f_prime();
        let i = (0..3)
            .max_by(|&a, &b| {
                let w = |j: usize| (base.x[j] * base.y[j] / fp[j]).abs();
                w(a).total_cmp(&w(b))
            })
            .expect("three points");
        Ok(elliptic_identity_check(x[0], x[1], x[2], Some(i))?.res34)
    }));
    out
}

pub fn run_suite(suite: Suite, cfg: &RunConfig) -> SuiteReport {
    let checks = match suite {
        Suite::Elliptic => elliptic_suite(cfg),
        Suite::Spherical => spherical_suite(cfg),
        Suite::Su2 => su2_suite(cfg),
        Suite::Ising => ising_suite(cfg),
        Suite::Abel => abel_suite(cfg),
    };
    SuiteReport {
        suite: suite.name().into(),
        pass: checks.iter().all(|c| c.pass),
        checks,
    }
}

pub fn run(suites: &[Suite], cfg: &RunConfig) -> RunReport {
    let suites: Vec<SuiteReport> = suites.iter().map(|&s| run_suite(s, cfg)).collect();
    RunReport {
        schema: SCHEMA_VERSION,
        seed: cfg.seed,
        pass: suites.iter().all(|s| s.pass),
        suites,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(RunConfig::new(1, Some(0), None).is_err());
        assert!(RunConfig::new(1, None, Some(-1.0)).is_err());
        assert!(RunConfig::new(1, Some(5), Some(1e-3)).is_ok());
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::parse(s.name()), Some(s));
        }
        assert_eq!(Suite::parse("all"), None);
    }

    #[test]
    fn streams_are_reproducible() {
        let cfg = RunConfig::new(7, None, None).unwrap();
        let a = sample(&cfg, 3, 5, random_spectral);
        let b = sample(&cfg, 3, 5, random_spectral);
        assert_eq!(a, b);
        assert_ne!(a, sample(&cfg, 4, 5, random_spectral));
    }

    #[test]
    fn report_flags_failures() {
        let r = run_check(Suite::Abel, "t", Bound::Upper, 1.0, vec![vec![0.5], vec![2.0], vec![-1.0]], |x| {
            if x[0] < 0.0 {
                Err(Error::Domain("negative".into()))
            } else {
                Ok(x[0])
            }
        });
        assert!(!r.pass);
        assert_eq!(r.failure_count, 2);
        let r = run_check(Suite::Abel, "t", Bound::Lower, 1.0, vec![vec![1.5], vec![2.0]], |x| Ok(x[0]));
        assert!(r.pass && r.failures.is_empty());
        assert_eq!(r.observed, 1.5);
    }

    #[test]
    fn grid_stays_in_domain() {
        let g = ising_grid(50, &[0.3, 0.6, 0.9]);
        assert_eq!(g.len(), 7500);
        for x in &g {
            let kk = complete_quarter_period(complement(x[2])).unwrap();
            assert!(x[0] + x[1] < kk && x[0] > 0.0 && x[1] > 0.0);
        }
    }
}
