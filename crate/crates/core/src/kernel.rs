//! Free-space Green's functions of the Helmholtz and Laplace operators and
//! their regularized differences.
//!
//! Normal derivatives are taken with respect to the integration point `x`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::Point3;

/// Below this `|k r|` the difference kernels are summed as power series.
pub const SERIES_THRESHOLD: f64 = 1e-2;

/// Terms kept in the small-argument series. At `|kr| < 1e-2` the first
/// omitted term is below `1e-2^12 / 12!`.
const SERIES_TERMS: usize = 12;

/// Single-layer value `g` and normal-derivative value `h` of a kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPair {
    pub g: Complex64,
    pub h: Complex64,
}

fn separation(x: &Point3, x0: &Point3, n: &Point3) -> (f64, f64) {
    let d = x - x0;
    (d.norm(), n.dot(&d))
}

pub fn helmholtz_kernels(x: &Point3, x0: &Point3, n: &Point3, k: Complex64) -> Result<KernelPair> {
    let (r, nd) = separation(x, x0, n);
    if r == 0.0 {
        return Err(Error::CoincidentPoints(*x));
    }
    let u = Complex64::i() * k * r;
    let e = u.exp();
    Ok(KernelPair {
        g: e / r,
        h: nd * e * (u - 1.0) / (r * r * r),
    })
}

pub fn laplace_kernels(x: &Point3, x0: &Point3, n: &Point3) -> Result<KernelPair> {
    let (r, nd) = separation(x, x0, n);
    if r == 0.0 {
        return Err(Error::CoincidentPoints(*x));
    }
    Ok(KernelPair {
        g: Complex64::new(1.0 / r, 0.0),
        h: Complex64::new(-nd / (r * r * r), 0.0),
    })
}

/// `(e^{ikr} - 1) / r`, finite at `r = 0` where it equals `ik`.
pub fn delta_g(k: Complex64, r: f64) -> Complex64 {
    let ik = Complex64::i() * k;
    let u = ik * r;
    if u.norm() < SERIES_THRESHOLD {
        // ik * sum_{m>=1} u^{m-1} / m!
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for m in 2..=SERIES_TERMS {
            term *= u / m as f64;
            sum += term;
        }
        ik * sum
    } else {
        (u.exp() - 1.0) / r
    }
}

/// `e^{u}(u - 1) + 1` divided by `u^2`, with `u = ikr`. Tends to `1/2`.
fn dh_core(u: Complex64) -> Complex64 {
    if u.norm() < SERIES_THRESHOLD {
        // sum_{m>=2} (m-1) u^{m-2} / m!
        let mut pow = Complex64::new(1.0, 0.0);
        let mut fact = 2.0;
        let mut sum = Complex64::new(0.5, 0.0);
        for m in 3..=SERIES_TERMS + 1 {
            pow *= u;
            fact *= m as f64;
            sum += pow * ((m - 1) as f64 / fact);
        }
        sum
    } else {
        (u.exp() * (u - 1.0) + 1.0) / (u * u)
    }
}

/// `H_k - H_0` from the separation `r` and `n . (x - x0)`. Zero at `r = 0`.
pub fn delta_h(k: Complex64, r: f64, n_dot_d: f64) -> Complex64 {
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let ik = Complex64::i() * k;
    // n.d / r^3 * u^2 * core = n.d * (ik)^2 / r * core
    ik * ik * (n_dot_d / r) * dh_core(ik * r)
}

/// Helmholtz minus Laplace kernels, defined everywhere including `x = x0`.
pub fn regularized_kernels(x: &Point3, x0: &Point3, n: &Point3, k: Complex64) -> KernelPair {
    let (r, nd) = separation(x, x0, n);
    KernelPair {
        g: delta_g(k, r),
        h: delta_h(k, r, nd),
    }
}
