//! Slow, independent reference computations for the test suites.
//!
//! Nothing here shares code with the `elliptic-ybe` library: elliptic
//! integrals come from adaptive Gauss-Kronrod quadrature of the defining
//! integrand, Jacobi functions from bisection on that quadrature, and matrix
//! exponentials from a Taylor series with scaling and squaring.

// Tabulated rule constants are kept at their published precision.
#![allow(clippy::excessive_precision)]

use num_complex::Complex64;

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) integration to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err) = gk15(f, a, b);
        // Below ~100 ulp of the panel value the Kronrod-Gauss gap is roundoff.
        if err <= tol.max(100.0 * f64::EPSILON * value.abs()) || depth >= 30 {
            return value;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, 0.5 * tol, depth + 1) + recurse(f, m, b, 0.5 * tol, depth + 1)
    }
    recurse(&f, a, b, tol, 0)
}

/// `F(φ, k) = ∫_0^φ dθ / sqrt(1 - k² sin² θ)` by quadrature, `0 <= k < 1`.
pub fn elliptic_f_quad(phi: f64, k: f64) -> f64 {
    let integrand = |t: f64| {
        let s = t.sin();
        1.0 / (1.0 - k * k * s * s).sqrt()
    };
    // Split into pieces of at most π/4 so each panel is smooth and short.
    let pieces = ((phi.abs() / std::f64::consts::FRAC_PI_4).ceil() as usize).max(1);
    let step = phi / pieces as f64;
    (0..pieces)
        .map(|i| integrate(integrand, i as f64 * step, (i + 1) as f64 * step, 1e-16))
        .sum()
}

/// `K(k)` by quadrature.
pub fn quarter_period_quad(k: f64) -> f64 {
    elliptic_f_quad(std::f64::consts::FRAC_PI_2, k)
}

/// Amplitude `φ` with `F(φ, k) = u`, found by bisection on the quadrature.
pub fn amplitude_by_inversion(u: f64, k: f64) -> f64 {
    use std::f64::consts::PI;
    let kk = quarter_period_quad(k);
    // F(φ + π) = F(φ) + 2K, so reduce u into [-K, K] first.
    let m = (u / (2.0 * kk)).round();
    let r = u - 2.0 * m * kk;
    let (mut lo, mut hi) = (-PI / 2.0, PI / 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if elliptic_f_quad(mid, k) < r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi) + m * PI
}

/// `(sn, cn, dn)` from the inversion oracle.
pub fn jacobi_by_inversion(u: f64, k: f64) -> (f64, f64, f64) {
    let phi = amplitude_by_inversion(u, k);
    let s = phi.sin();
    (s, phi.cos(), (1.0 - k * k * s * s).sqrt())
}

/// Row-major square complex matrix.
pub type Matrix = Vec<Vec<Complex64>>;

fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|l| a[i][l] * b[l][j]).sum())
                .collect()
        })
        .collect()
}

/// Matrix exponential by scaling, a truncated Taylor series and repeated
/// squaring. Series terms are summed until they fall below `1e-18`.
pub fn expm(a: &Matrix) -> Matrix {
    let n = a.len();
    let norm: f64 = a
        .iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = (-(squarings as f64)).exp2();
    let scaled: Matrix = a
        .iter()
        .map(|row| row.iter().map(|z| z * scale).collect())
        .collect();
    let mut result: Matrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
                .collect()
        })
        .collect();
    let mut term = result.clone();
    for m in 1..60 {
        term = mat_mul(&term, &scaled);
        for row in term.iter_mut() {
            for z in row.iter_mut() {
                *z /= m as f64;
            }
        }
        let mut size = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
                size = size.max(term[i][j].norm());
            }
        }
        if size < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = mat_mul(&result, &result);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_reproduces_circular_case() {
        assert!((quarter_period_quad(0.0) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((elliptic_f_quad(1.1, 0.0) - 1.1).abs() < 1e-15);
    }

    #[test]
    fn expm_of_rotation_generator() {
        let t = 0.9f64;
        let a = vec![
            vec![Complex64::new(0.0, 0.0), Complex64::new(-t, 0.0)],
            vec![Complex64::new(t, 0.0), Complex64::new(0.0, 0.0)],
        ];
        let e = expm(&a);
        assert!((e[0][0].re - t.cos()).abs() < 1e-15);
        assert!((e[1][0].re - t.sin()).abs() < 1e-15);
    }
}
