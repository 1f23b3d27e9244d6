//! Spherical Bessel and Hankel functions of complex argument, Legendre
//! polynomials, and the multipole truncation rule used by the analytic
//! core-shell solution.
//!
//! `j_n` is computed by Miller's downward recurrence normalized against the
//! closed forms of `j_0`/`j_1`; `y_n` by upward recurrence from `y_0`, `y_1`,
//! which is the stable direction for the second kind.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Highest order accepted by the Bessel routines.
pub const MAX_ORDER: usize = 1000;

/// Rescaling threshold for the downward recurrence.
const BIG: f64 = 1e200;

/// Which spherical Bessel function a derivative is requested for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphKind {
    J,
    Y,
    H,
}

/// Number of retained multipole terms `N` (the sums run over `0..=N`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TruncationOrder(usize);

impl TruncationOrder {
    pub fn new(n: usize) -> Self {
        Self(n.max(1))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

fn check_order(n: usize) -> Result<()> {
    if n > MAX_ORDER {
        return Err(Error::UnsupportedOrder {
            order: n,
            max: MAX_ORDER,
        });
    }
    Ok(())
}

/// `j_0 ..= j_nmax` at `z`.
pub fn sph_bessel_j_array(nmax: usize, z: Complex64) -> Result<Vec<Complex64>> {
    check_order(nmax)?;
    let mut out = vec![Complex64::new(0.0, 0.0); nmax + 1];
    if z == Complex64::new(0.0, 0.0) {
        out[0] = Complex64::new(1.0, 0.0);
        return Ok(out);
    }

    let az = z.norm();
    let top = (nmax as f64).max(az);
    let start = top.ceil() as usize + 30 + (8.0 * top.cbrt()).ceil() as usize;

    // f_{n-1} = (2n+1)/z f_n - f_{n+1}, seeded with f_{start+1} = 0, f_start = 1.
    let inv_z = z.inv();
    let mut f_next = Complex64::new(0.0, 0.0);
    let mut f = Complex64::new(1.0, 0.0);
    let mut f0_f1 = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for n in (1..=start).rev() {
        let f_prev = (2 * n + 1) as f64 * inv_z * f - f_next;
        f_next = f;
        f = f_prev;
        // f now holds f_{n-1}, f_next holds f_n
        if n - 1 <= nmax {
            out[n - 1] = f;
        }
        if n <= nmax {
            out[n] = f_next;
        }
        if f.norm() > BIG {
            let s = 1.0 / BIG;
            f *= s;
            f_next *= s;
            for v in out.iter_mut().skip(n.saturating_sub(1)) {
                *v *= s;
            }
        }
        if n == 1 {
            f0_f1 = (f, f_next);
        }
    }

    let (sin, cos) = (z.sin(), z.cos());
    let j0 = sin * inv_z;
    let j1 = sin * inv_z * inv_z - cos * inv_z;
    let (exact, unnormalized) = if j0.norm() >= j1.norm() {
        (j0, f0_f1.0)
    } else {
        (j1, f0_f1.1)
    };
    // complex division squares the divisor's magnitude; pre-scale to keep it in range
    let m = unnormalized.norm();
    let scale = (exact / m) / (unnormalized / m);
    for v in out.iter_mut() {
        *v *= scale;
    }
    Ok(out)
}

/// `y_0 ..= y_nmax` at `z` by upward recurrence.
pub fn sph_bessel_y_array(nmax: usize, z: Complex64) -> Result<Vec<Complex64>> {
    check_order(nmax)?;
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::SingularArgument {
            function: "spherical Bessel y_n",
        });
    }
    let inv_z = z.inv();
    let (sin, cos) = (z.sin(), z.cos());
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(-cos * inv_z);
    if nmax >= 1 {
        out.push(-cos * inv_z * inv_z - sin * inv_z);
    }
    for n in 1..nmax {
        let next = (2 * n + 1) as f64 * inv_z * out[n] - out[n - 1];
        out.push(next);
    }
    if let Some(order) = out
        .iter()
        .position(|v| !(v.re.is_finite() && v.im.is_finite()))
    {
        return Err(Error::Overflow {
            function: "spherical Bessel y_n",
            order,
            z,
        });
    }
    Ok(out)
}

/// `h_0 ..= h_nmax` (first kind, outgoing for `e^{-iωt}`).
pub fn sph_hankel1_array(nmax: usize, z: Complex64) -> Result<Vec<Complex64>> {
    let j = sph_bessel_j_array(nmax, z)?;
    let y = sph_bessel_y_array(nmax, z)?;
    Ok(j.iter()
        .zip(&y)
        .map(|(j, y)| j + Complex64::i() * y)
        .collect())
}

pub fn sph_bessel_j(n: usize, z: Complex64) -> Result<Complex64> {
    Ok(sph_bessel_j_array(n, z)?[n])
}

pub fn sph_bessel_y(n: usize, z: Complex64) -> Result<Complex64> {
    Ok(sph_bessel_y_array(n, z)?[n])
}

pub fn sph_hankel1(n: usize, z: Complex64) -> Result<Complex64> {
    Ok(sph_hankel1_array(n, z)?[n])
}

/// Values and derivatives `(z_n, z_n')` for `n = 0..=nmax`, using
/// `z_n' = -z_{n+1} + (n/z) z_n`.
pub fn sph_with_derivatives(
    kind: SphKind,
    nmax: usize,
    z: Complex64,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    check_order(nmax)?;
    if z == Complex64::new(0.0, 0.0) {
        if kind != SphKind::J {
            return Err(Error::SingularArgument {
                function: "spherical Bessel derivative",
            });
        }
        let mut v = vec![Complex64::new(0.0, 0.0); nmax + 1];
        let mut d = v.clone();
        v[0] = Complex64::new(1.0, 0.0);
        if nmax >= 1 {
            d[1] = Complex64::new(1.0 / 3.0, 0.0);
        }
        return Ok((v, d));
    }
    let ext = match kind {
        SphKind::J => sph_bessel_j_array(nmax + 1, z)?,
        SphKind::Y => sph_bessel_y_array(nmax + 1, z)?,
        SphKind::H => sph_hankel1_array(nmax + 1, z)?,
    };
    let inv_z = z.inv();
    let deriv = (0..=nmax)
        .map(|n| -ext[n + 1] + n as f64 * inv_z * ext[n])
        .collect();
    let mut values = ext;
    values.truncate(nmax + 1);
    Ok((values, deriv))
}

pub fn sph_bessel_derivative(kind: SphKind, n: usize, z: Complex64) -> Result<Complex64> {
    Ok(sph_with_derivatives(kind, n, z)?.1[n])
}

/// `P_0(x) ..= P_nmax(x)` by the three-term recurrence.
pub fn legendre_p_array(nmax: usize, x: f64) -> Result<Vec<f64>> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::LegendreDomain(x));
    }
    let mut p = Vec::with_capacity(nmax + 1);
    p.push(1.0);
    if nmax >= 1 {
        p.push(x);
    }
    for n in 0..nmax.saturating_sub(1) {
        let nf = n as f64;
        let next = ((2.0 * nf + 3.0) * x * p[n + 1] - (nf + 1.0) * p[n]) / (nf + 2.0);
        p.push(next);
    }
    Ok(p)
}

pub fn legendre_p(n: usize, x: f64) -> Result<f64> {
    Ok(legendre_p_array(n, x)?[n])
}

/// Number of multipole terms for a source at radius `source_radius` in a
/// medium of wavenumber `k`. Lengths are scaled so that the scatterer's
/// characteristic radius is one.
pub fn truncation_terms(k: Complex64, source_radius: f64) -> TruncationOrder {
    let t = if source_radius >= 0.5 {
        k.norm()
    } else {
        (k * source_radius).norm()
    };
    let n = (t + 4.0 * t.cbrt() + 1.0).round();
    TruncationOrder::new(n as usize)
}
