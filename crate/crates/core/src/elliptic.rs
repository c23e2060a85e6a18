//! Jacobi elliptic functions and the first-kind elliptic integral for real
//! arguments and a real modulus `0 <= k <= 1`.
//!
//! Evaluation uses the descending Landen (AGM) recursion on an argument
//! reduced modulo the half period `2K`; the amplitude picks up `m·π` for each
//! half period removed, which gives the continuous, monotone branch of
//! `am(u, k)`. The two degenerate moduli are closed forms:
//!
//! ```text
//! k = 0:  (sn, cn, dn) = (sin u, cos u, 1)
//! k = 1:  (sn, cn, dn) = (tanh u, sech u, sech u)
//! ```
//!
//! Moduli above one only enter through the reciprocal-modulus transformation
//! and pure-imaginary arguments only through the imaginary transformation.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{Error, Result, POLE_THRESHOLD};

/// AGM stops once the half-difference drops below this.
const AGM_TOLERANCE: f64 = 1e-15;
const AGM_MAX_ITER: usize = 64;

/// Elliptic modulus together with its complement and quarter period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Modulus {
    pub k: f64,
    pub k_complement: f64,
    /// `K(k)`; `+inf` at `k = 1`.
    pub quarter_period: f64,
}

impl Modulus {
    pub fn new(k: f64) -> Result<Self> {
        check_modulus(k)?;
        let quarter_period = if k == 1.0 {
            f64::INFINITY
        } else {
            complete_quarter_period(k)?
        };
        Ok(Self {
            k,
            k_complement: complement(k),
            quarter_period,
        })
    }

    /// Modulus `k'` with `k^2 + k'^2 = 1`.
    pub fn complementary(&self) -> Result<Self> {
        Self::new(self.k_complement)
    }
}

/// Values of `(sn, cn, dn)` at a single argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobiTriple {
    pub u: f64,
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
}

impl JacobiTriple {
    /// Largest componentwise difference to another triple.
    pub fn max_abs_diff(&self, other: &JacobiTriple) -> f64 {
        (self.sn - other.sn)
            .abs()
            .max((self.cn - other.cn).abs())
            .max((self.dn - other.dn).abs())
    }

    /// `(|sn^2 + cn^2 - 1|, |dn^2 + k^2 sn^2 - 1|)`.
    pub fn pythagorean_residuals(&self, k: f64) -> (f64, f64) {
        (
            (self.sn * self.sn + self.cn * self.cn - 1.0).abs(),
            (self.dn * self.dn + k * k * self.sn * self.sn - 1.0).abs(),
        )
    }
}

/// Amplitude `am(u, k)`, the angle whose sine is `sn(u, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Amplitude {
    pub phi: f64,
}

/// The three real quantities `(sn/cn, 1/cn, dn/cn)` produced by Jacobi's
/// imaginary transformation: `sn(iu, k') = i·sc`, `cn(iu, k') = nc`,
/// `dn(iu, k') = dc`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImaginaryTransform {
    pub sc: f64,
    pub nc: f64,
    pub dc: f64,
}

fn check_modulus(k: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::Domain(format!("modulus k = {k} outside [0, 1]")));
    }
    Ok(())
}

/// `sqrt(1 - k^2)` without cancellation for `k` near one.
pub fn complement(k: f64) -> f64 {
    ((1.0 - k) * (1.0 + k)).sqrt()
}

/// Arithmetic-geometric mean of two positive numbers.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..AGM_MAX_ITER {
        if (a - b).abs() <= AGM_TOLERANCE * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    0.5 * (a + b)
}

/// Complete elliptic integral of the first kind, `K(k) = π / (2·AGM(1, k'))`.
pub fn complete_quarter_period(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::Domain(format!(
            "K(k) requires 0 <= k < 1 (diverges at k = 1), got {k}"
        )));
    }
    if k == 0.0 {
        return Ok(FRAC_PI_2);
    }
    Ok(PI / (2.0 * agm(1.0, complement(k))))
}

/// Amplitude for `|u| <= K` by the descending Landen recursion.
fn landen_amplitude(u: f64, k: f64) -> f64 {
    let mut a = [0.0; AGM_MAX_ITER + 1];
    let mut c = [0.0; AGM_MAX_ITER + 1];
    a[0] = 1.0;
    c[0] = k;
    let mut b = complement(k);
    let mut n = 0;
    while c[n].abs() > AGM_TOLERANCE && n < AGM_MAX_ITER {
        a[n + 1] = 0.5 * (a[n] + b);
        c[n + 1] = 0.5 * (a[n] - b);
        b = (a[n] * b).sqrt();
        n += 1;
    }
    let mut phi = (n as f64).exp2() * a[n] * u;
    for j in (1..=n).rev() {
        phi = 0.5 * (phi + (c[j] / a[j] * phi.sin()).asin());
    }
    phi
}

/// Gudermannian function, `am(u, 1)`.
fn gudermannian(u: f64) -> f64 {
    2.0 * (0.5 * u).tanh().atan()
}

/// Continuous, monotone branch of `am(u, k)` with `am(0) = 0`.
pub fn amplitude(u: f64, k: f64) -> Result<Amplitude> {
    if !u.is_finite() {
        return Err(Error::Domain(format!("non-finite argument u = {u}")));
    }
    check_modulus(k)?;
    let phi = if k == 0.0 {
        u
    } else if k == 1.0 {
        gudermannian(u)
    } else {
        let quarter = complete_quarter_period(k)?;
        let half_periods = (u / (2.0 * quarter)).round();
        let reduced = u - half_periods * 2.0 * quarter;
        landen_amplitude(reduced, k) + half_periods * PI
    };
    Ok(Amplitude { phi })
}

/// `(sn, cn, dn)` at `(u, k)`.
pub fn jacobi(u: f64, k: f64) -> Result<JacobiTriple> {
    if !u.is_finite() {
        return Err(Error::Domain(format!("non-finite argument u = {u}")));
    }
    check_modulus(k)?;
    if k == 0.0 {
        return Ok(JacobiTriple {
            u,
            sn: u.sin(),
            cn: u.cos(),
            dn: 1.0,
        });
    }
    if k == 1.0 {
        let sech = 1.0 / u.cosh();
        return Ok(JacobiTriple {
            u,
            sn: u.tanh(),
            cn: sech,
            dn: sech,
        });
    }
    let phi = amplitude(u, k)?.phi;
    let (sn, cn) = phi.sin_cos();
    // Near sn = ±1 the form k'^2 + k^2 cn^2 avoids cancellation.
    let dn = if sn * sn <= 0.5 {
        ((1.0 - k * sn) * (1.0 + k * sn)).sqrt()
    } else {
        ((1.0 - k) * (1.0 + k) + k * k * cn * cn).sqrt()
    };
    Ok(JacobiTriple { u, sn, cn, dn })
}

/// Carlson's symmetric integral `R_F(x, y, z)` by duplication.
pub fn carlson_rf(x: f64, y: f64, z: f64) -> f64 {
    const R: f64 = 1e-16;
    let (x0, y0) = (x, y);
    let (mut x, mut y, mut z) = (x, y, z);
    let a0 = (x + y + z) / 3.0;
    let q = (3.0 * R).powf(-1.0 / 6.0)
        * (a0 - x).abs().max((a0 - y).abs()).max((a0 - z).abs());
    let mut a = a0;
    let mut scale = 1.0;
    while scale * q >= a.abs() {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * sy + sy * sz + sz * sx;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
        a = 0.25 * (a + lambda);
        scale *= 0.25;
    }
    let xs = (a0 - x0) * scale / a;
    let ys = (a0 - y0) * scale / a;
    let zs = -xs - ys;
    let e2 = xs * ys - zs * zs;
    let e3 = xs * ys * zs;
    (1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0) / a.sqrt()
}

/// Incomplete integral of the first kind `F(φ, k)`, the inverse of
/// [`amplitude`] on the continuous branch.
pub fn incomplete_integral(phi: f64, k: f64) -> Result<f64> {
    if !phi.is_finite() {
        return Err(Error::Domain(format!("non-finite amplitude phi = {phi}")));
    }
    check_modulus(k)?;
    if k == 1.0 {
        if phi.abs() >= FRAC_PI_2 {
            return Err(Error::Domain(format!(
                "F(phi, 1) diverges for |phi| >= pi/2, got phi = {phi}"
            )));
        }
        return Ok(phi.sin().atanh());
    }
    let half_turns = (phi / PI).round();
    let reduced = phi - half_turns * PI;
    let (s, c) = reduced.sin_cos();
    let partial = s * carlson_rf(c * c, (1.0 - k * s) * (1.0 + k * s), 1.0);
    if half_turns == 0.0 {
        Ok(partial)
    } else {
        Ok(partial + 2.0 * half_turns * complete_quarter_period(k)?)
    }
}

/// Triple at `u1 + u3` assembled only from the triples at `u1` and `u3`
/// through the addition formulas for `cn`, `dn` and `sn`.
pub fn addition_eval(u1: f64, u3: f64, k: f64) -> Result<JacobiTriple> {
    let a = jacobi(u1, k)?;
    let b = jacobi(u3, k)?;
    let k2 = k * k;
    let den = 1.0 - k2 * a.sn * a.sn * b.sn * b.sn;
    if den < POLE_THRESHOLD {
        return Err(Error::NearPole(format!(
            "addition denominator 1 - k^2 sn^2(u1) sn^2(u3) = {den:e}"
        )));
    }
    Ok(JacobiTriple {
        u: u1 + u3,
        sn: (a.sn * b.cn * b.dn + a.cn * a.dn * b.sn) / den,
        cn: (a.cn * b.cn - a.sn * a.dn * b.sn * b.dn) / den,
        dn: (a.dn * b.dn - k2 * a.sn * a.cn * b.sn * b.cn) / den,
    })
}

/// Real data of `(sn, cn, dn)(iu, k')` expressed through functions of modulus `k`.
pub fn imaginary_transform(u: f64, k: f64) -> Result<ImaginaryTransform> {
    let t = jacobi(u, k)?;
    if t.cn.abs() < POLE_THRESHOLD {
        return Err(Error::NearPole(format!("cn({u}, {k}) = {:e}", t.cn)));
    }
    Ok(ImaginaryTransform {
        sc: t.sn / t.cn,
        nc: 1.0 / t.cn,
        dc: t.dn / t.cn,
    })
}

fn check_reciprocal_modulus(k: f64) -> Result<()> {
    if !(k > 0.0 && k <= 1.0) {
        return Err(Error::Domain(format!(
            "reciprocal modulus 1/k requires 0 < k <= 1, got {k}"
        )));
    }
    Ok(())
}

/// `(sn, cn, dn)(U, 1/k) = (k·sn(U/k, k), dn(U/k, k), cn(U/k, k))`.
pub fn reciprocal_modulus(big_u: f64, k: f64) -> Result<JacobiTriple> {
    check_reciprocal_modulus(k)?;
    let t = jacobi(big_u / k, k)?;
    Ok(JacobiTriple {
        u: big_u,
        sn: k * t.sn,
        cn: t.dn,
        dn: t.cn,
    })
}

/// Inverse of [`reciprocal_modulus`]: recover the modulus-`k` triple at
/// `U/k` from the modulus-`1/k` triple at `U`.
pub fn from_reciprocal_modulus(t: &JacobiTriple, k: f64) -> Result<JacobiTriple> {
    check_reciprocal_modulus(k)?;
    Ok(JacobiTriple {
        u: t.u / k,
        sn: t.sn / k,
        cn: t.dn,
        dn: t.cn,
    })
}

/// `am(U, 1/k)`. For a modulus above one `cn(U, 1/k) = dn(U/k, k) > 0`, so
/// the amplitude oscillates inside `(-asin k, asin k)`.
pub fn reciprocal_amplitude(big_u: f64, k: f64) -> Result<Amplitude> {
    let t = reciprocal_modulus(big_u, k)?;
    Ok(Amplitude {
        phi: t.sn.atan2(t.cn),
    })
}
