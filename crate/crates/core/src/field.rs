//! Post-processing of a solved scenario: potential and pressure at points in
//! the fluid from the representation formula, grid slices, far-field
//! patterns, focal metrics and time snapshots.
//!
//! For `x` inside domain `D`, with the same sign and density conventions as
//! the assembly,
//!
//! ```text
//! 4 pi phi(x) = sum_D Q G_k(x, x_s) - sum_surfaces s int (alpha phi H_k - q G_k) dS
//! ```
//!
//! and `p = i omega rho_D phi`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{delta_g, delta_h};
use crate::mesh::{build_sphere_mesh, interpolate, quadrature_rule, QuadratureRule};
use crate::scenario::{Scenario, Side};
use crate::solver::{surface_caches, NearIntegrator, QuadPoint, SolutionField, SurfaceCache};
use crate::{fmt_f64, Point3};

const FOUR_PI: f64 = 4.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub position: Point3,
    pub domain: usize,
    pub phi: Complex64,
    /// `i omega rho phi` with the density of `domain`.
    pub pressure: Complex64,
}

/// Evaluates the field of one solved scenario at arbitrary points. Building
/// it samples every element once; evaluations are independent and may run
/// concurrently.
pub struct FieldEvaluator<'a> {
    scenario: &'a Scenario,
    solution: &'a SolutionField,
    caches: Vec<SurfaceCache>,
    near_rule: QuadratureRule,
}

impl<'a> FieldEvaluator<'a> {
    pub fn new(scenario: &'a Scenario, solution: &'a SolutionField) -> Result<Self> {
        if solution.surfaces.len() != scenario.surfaces.len()
            || solution
                .surfaces
                .iter()
                .zip(&scenario.surfaces)
                .any(|(a, b)| {
                    a.phi.len() != b.mesh.nodes.len() || a.dphi_dn.len() != b.mesh.nodes.len()
                })
        {
            return Err(Error::Validation(
                "solution does not match the scenario's surfaces".into(),
            ));
        }
        Ok(FieldEvaluator {
            scenario,
            solution,
            caches: surface_caches(scenario)?,
            near_rule: quadrature_rule(scenario.numerics.near_degree)?,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        self.scenario
    }

    /// Approximate distance from `x` to the nearest surface, with the
    /// diameter of the element attaining it.
    pub fn surface_distance(&self, x: &Point3) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for (si, s) in self.scenario.surfaces.iter().enumerate() {
            let cache = &self.caches[si];
            for e in 0..s.mesh.elements.len() {
                let h = cache.diameters[e];
                let dc = (cache.centroids[e] - x).norm();
                if best.is_some_and(|(d, _)| dc - h > d) {
                    continue;
                }
                let d = element_distance(&s.mesh.element_nodes(e), x);
                if best.is_none_or(|(b, _)| d < b) {
                    best = Some((d, h));
                }
            }
        }
        best
    }

    /// Potential and pressure at `x`.
    pub fn evaluate(&self, x: &Point3) -> Result<FieldSample> {
        let sc = self.scenario;
        if let Some((d, h)) = self.surface_distance(x) {
            let threshold = sc.numerics.near_surface_threshold * h;
            if d < threshold {
                return Err(Error::NearBoundary {
                    point: *x,
                    distance: d,
                    threshold,
                });
            }
        }
        let domain = sc.locate(x)?;
        let phi = self.potential_in(domain, x)?;
        Ok(FieldSample {
            position: *x,
            domain,
            phi,
            pressure: Complex64::i() * sc.omega * sc.density(domain) * phi,
        })
    }

    /// Potential from the representation formula of `domain`, without
    /// location or proximity checks.
    pub fn potential_in(&self, domain: usize, x: &Point3) -> Result<Complex64> {
        let sc = self.scenario;
        let k = sc.wavenumber(domain);
        let mut total = Complex64::new(0.0, 0.0);
        for s in sc.sources.iter().filter(|s| s.domain == domain) {
            let r = (s.position - x).norm();
            if r == 0.0 {
                return Err(Error::CoincidentSource(*x));
            }
            total += s.strength * (Complex64::i() * k * r).exp() / r;
        }
        let num = &sc.numerics;
        let near = NearIntegrator {
            base: &self.near_rule,
            near_ratio: num.near_ratio,
            max_phase: num.max_phase_per_subtriangle,
            k_abs: k.norm(),
        };
        let mut scratch = Vec::new();
        for (si, side) in sc.bounding_surfaces(domain) {
            let surf = &sc.surfaces[si];
            let cache = &self.caches[si];
            let sol = &self.solution.surfaces[si];
            let sign = if side == Side::Inner { 1.0 } else { -1.0 };
            let alpha = sc.side_factor(si, side);
            for (e, el) in surf.mesh.elements.iter().enumerate() {
                let pts: &[QuadPoint] =
                    if (cache.centroids[e] - x).norm() < num.near_ratio * cache.diameters[e] {
                        scratch.clear();
                        near.points(
                            &surf.mesh.element_nodes(e),
                            x,
                            num.near_max_depth,
                            &mut scratch,
                        );
                        &scratch
                    } else {
                        &cache.far[e]
                    };
                let phi_e = el.map(|n| sol.phi[n]);
                let q_e = el.map(|n| sol.dphi_dn[n]);
                for p in pts {
                    let dv = p.x - x;
                    let r = dv.norm();
                    let nd = p.n.dot(&dv);
                    let hk = -nd / (r * r * r) + delta_h(k, r, nd);
                    let gk = 1.0 / r + delta_g(k, r);
                    let (mut phi, mut q) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
                    for j in 0..6 {
                        phi += phi_e[j] * p.shape[j];
                        q += q_e[j] * p.shape[j];
                    }
                    total -= sign * p.w * (alpha * phi * hk - q * gk);
                }
            }
        }
        Ok(total / FOUR_PI)
    }

    /// Potential of the sources alone (no scatterers), in `domain`.
    pub fn incident_potential(&self, domain: usize, x: &Point3) -> Complex64 {
        let k = self.scenario.wavenumber(domain);
        self.scenario
            .sources
            .iter()
            .filter(|s| s.domain == domain)
            .map(|s| {
                let r = (s.position - x).norm();
                s.strength * (Complex64::i() * k * r).exp() / (FOUR_PI * r)
            })
            .sum()
    }

    /// Gradient of the potential by central differences of step `h`.
    pub fn gradient(&self, domain: usize, x: &Point3, h: f64) -> Result<[Complex64; 3]> {
        let mut g = [Complex64::new(0.0, 0.0); 3];
        for (i, gi) in g.iter_mut().enumerate() {
            let mut e = Point3::zeros();
            e[i] = h;
            *gi = (self.potential_in(domain, &(x + e))? - self.potential_in(domain, &(x - e))?)
                / (2.0 * h);
        }
        Ok(g)
    }
}

/// Distance from `x` to a curved element, from a dense sample of points.
fn element_distance(nodes: &[Point3; 6], x: &Point3) -> f64 {
    const N: usize = 8;
    let mut best = f64::INFINITY;
    for i in 0..=N {
        for j in 0..=(N - i) {
            let p = interpolate(nodes, i as f64 / N as f64, j as f64 / N as f64).position;
            best = best.min((p - x).norm());
        }
    }
    best
}

/// Single-point convenience wrapper around [`FieldEvaluator`].
pub fn evaluate_domain_point(
    scenario: &Scenario,
    solution: &SolutionField,
    x: &Point3,
) -> Result<FieldSample> {
    FieldEvaluator::new(scenario, solution)?.evaluate(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Divide `|p|` by `rho_0 omega |Q| / (4 pi)`, the free-space monopole
    /// pressure at unit distance.
    MonopoleReference,
    None,
}

/// Pressure scale used by [`Normalization::MonopoleReference`]: density of
/// the unbounded medium (reference density if there is none) and the largest
/// source strength. Zero when there are no sources.
pub fn monopole_reference_pressure(scenario: &Scenario) -> f64 {
    let rho = scenario
        .unbounded_domain()
        .map_or(scenario.rho_ref, |d| scenario.density(d));
    let q = scenario
        .sources
        .iter()
        .map(|s| s.strength.norm())
        .fold(0.0, f64::max);
    rho * scenario.omega * q / FOUR_PI
}

pub fn normalized_magnitude(p: Complex64, scale: f64) -> f64 {
    if scale > 0.0 {
        p.norm() / scale
    } else {
        p.norm()
    }
}

/// Planar grid `origin + i/(nu-1) u + j/(nv-1) v`, `i < nu`, `j < nv`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPlane {
    pub origin: Point3,
    pub u: Point3,
    pub v: Point3,
    pub nu: usize,
    pub nv: usize,
}

impl GridPlane {
    pub fn validate(&self) -> Result<()> {
        if self.nu < 1 || self.nv < 1 {
            return Err(Error::Validation(
                "grid resolution must be at least 1 x 1".into(),
            ));
        }
        if self.u.norm() == 0.0 || self.v.norm() == 0.0 || self.u.cross(&self.v).norm() == 0.0 {
            return Err(Error::Validation(
                "grid edge vectors must be non-zero and not parallel".into(),
            ));
        }
        Ok(())
    }

    pub fn point(&self, i: usize, j: usize) -> Point3 {
        let f = |n: usize, k: usize| {
            if n > 1 {
                k as f64 / (n - 1) as f64
            } else {
                0.0
            }
        };
        self.origin + self.u * f(self.nu, i) + self.v * f(self.nv, j)
    }

    /// Points in row-major order, `i` fastest.
    pub fn points(&self) -> Vec<Point3> {
        (0..self.nv)
            .flat_map(|j| (0..self.nu).map(move |i| (i, j)))
            .map(|(i, j)| self.point(i, j))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskReason {
    NearSurface,
    /// Not in any fluid, e.g. inside a rigid or pressure-release body.
    OutsideFluid,
    AtSource,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub position: Point3,
    pub sample: std::result::Result<FieldSample, MaskReason>,
    /// Normalized (or raw) `|p|`; NaN when masked.
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSlice {
    pub plane: GridPlane,
    pub normalization: Normalization,
    pub points: Vec<GridPoint>,
}

impl GridSlice {
    pub fn evaluated(&self) -> usize {
        self.points.iter().filter(|p| p.sample.is_ok()).count()
    }
}

pub fn pressure_grid_slice(
    evaluator: &FieldEvaluator<'_>,
    plane: &GridPlane,
    normalization: Normalization,
) -> Result<GridSlice> {
    plane.validate()?;
    let scale = match normalization {
        Normalization::MonopoleReference => monopole_reference_pressure(evaluator.scenario()),
        Normalization::None => 0.0,
    };
    let points = plane
        .points()
        .into_par_iter()
        .map(|x| {
            let sample = match evaluator.evaluate(&x) {
                Ok(s) => Ok(s),
                Err(Error::NearBoundary { .. }) => Err(MaskReason::NearSurface),
                Err(Error::Location(_)) => Err(MaskReason::OutsideFluid),
                Err(Error::CoincidentSource(_)) => Err(MaskReason::AtSource),
                Err(e) => return Err(e),
            };
            let magnitude = sample.map_or(f64::NAN, |s| normalized_magnitude(s.pressure, scale));
            Ok(GridPoint {
                position: x,
                sample,
                magnitude,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridSlice {
        plane: plane.clone(),
        normalization,
        points,
    })
}

/// CSV with one row per grid point; masked points carry `masked = 1` and NaN
/// values.
pub fn write_grid_csv<W: Write>(mut w: W, grid: &GridSlice) -> std::io::Result<()> {
    writeln!(w, "x,y,z,re_p,im_p,abs_p_normalized,masked")?;
    for p in &grid.points {
        let (re, im, masked) = match p.sample {
            Ok(s) => (s.pressure.re, s.pressure.im, 0),
            Err(_) => (f64::NAN, f64::NAN, 1),
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt_f64(p.position.x),
            fmt_f64(p.position.y),
            fmt_f64(p.position.z),
            fmt_f64(re),
            fmt_f64(im),
            fmt_f64(p.magnitude),
            masked
        )?;
    }
    Ok(())
}

/// Legacy VTK structured points of the grid magnitude. The grid edges must be
/// aligned with coordinate axes.
pub fn write_grid_vtk<W: Write>(mut w: W, grid: &GridSlice) -> Result<()> {
    let g = &grid.plane;
    let axis = |v: &Point3| (0..3).find(|&i| v[i] != 0.0 && (0..3).all(|j| j == i || v[j] == 0.0));
    let (Some(au), Some(av)) = (axis(&g.u), axis(&g.v)) else {
        return Err(Error::Validation(
            "VTK export needs axis-aligned grid edges".into(),
        ));
    };
    let mut dims = [1usize; 3];
    let mut spacing = [1.0f64; 3];
    dims[au] = g.nu;
    dims[av] = g.nv;
    spacing[au] = g.u[au] / (g.nu.max(2) - 1) as f64;
    spacing[av] = g.v[av] / (g.nv.max(2) - 1) as f64;
    if spacing[au] < 0.0 || spacing[av] < 0.0 || au > av {
        return Err(Error::Validation(
            "VTK export needs grid edges along increasing x, y, z order".into(),
        ));
    }
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "pressure magnitude")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} {}", dims[0], dims[1], dims[2])?;
    writeln!(
        w,
        "ORIGIN {} {} {}",
        fmt_f64(g.origin.x),
        fmt_f64(g.origin.y),
        fmt_f64(g.origin.z)
    )?;
    writeln!(
        w,
        "SPACING {} {} {}",
        fmt_f64(spacing[0]),
        fmt_f64(spacing[1]),
        fmt_f64(spacing[2])
    )?;
    writeln!(w, "POINT_DATA {}", grid.points.len())?;
    writeln!(w, "SCALARS abs_p double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for p in &grid.points {
        writeln!(w, "{}", fmt_f64(p.magnitude))?;
    }
    Ok(())
}

/// Scattered pressure magnitude on a circle `radius (cos t a + sin t b)`
/// about the origin, `t` uniformly spaced in `[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarPattern {
    pub radius: f64,
    pub angles: Vec<f64>,
    pub magnitudes: Vec<f64>,
}

pub fn far_field_pattern(
    evaluator: &FieldEvaluator<'_>,
    radius: f64,
    axes: (Point3, Point3),
    n_angles: usize,
    subtract_incident: bool,
) -> Result<RadarPattern> {
    let sc = evaluator.scenario();
    let (a, b) = (axes.0.normalize(), axes.1.normalize());
    if n_angles == 0 || !(a.dot(&b).abs() < 1e-12) {
        return Err(Error::Validation(
            "radar circle needs orthogonal axes and at least one angle".into(),
        ));
    }
    let extent = sc
        .surfaces
        .iter()
        .flat_map(|s| s.mesh.nodes.iter())
        .chain(sc.sources.iter().map(|s| &s.position))
        .map(|p| p.norm())
        .fold(0.0, f64::max);
    if !(radius > extent) {
        return Err(Error::Validation(format!(
            "radar radius {radius} does not enclose the geometry and sources (extent {extent})"
        )));
    }
    let angles: Vec<f64> = (0..n_angles)
        .map(|i| 2.0 * PI * i as f64 / n_angles as f64)
        .collect();
    let magnitudes = angles
        .par_iter()
        .map(|&t| {
            let x = (a * t.cos() + b * t.sin()) * radius;
            let s = evaluator.evaluate(&x)?;
            let mut p = s.pressure;
            if subtract_incident {
                let rho = sc.density(s.domain);
                p -= Complex64::i() * sc.omega * rho * evaluator.incident_potential(s.domain, &x);
            }
            Ok(p.norm())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RadarPattern {
        radius,
        angles,
        magnitudes,
    })
}

pub fn write_radar_csv<W: Write>(mut w: W, pattern: &RadarPattern) -> std::io::Result<()> {
    writeln!(w, "theta_rad,abs_p_sc")?;
    for (t, m) in pattern.angles.iter().zip(&pattern.magnitudes) {
        writeln!(w, "{},{}", fmt_f64(*t), fmt_f64(*m))?;
    }
    Ok(())
}

/// Angle of the pattern maximum, refined by a parabola through the
/// neighbouring samples (periodic).
pub fn beam_angle(pattern: &RadarPattern) -> f64 {
    let n = pattern.magnitudes.len();
    let m = &pattern.magnitudes;
    let i = (0..n).max_by(|&i, &j| m[i].total_cmp(&m[j])).unwrap_or(0);
    if n < 3 {
        return pattern.angles[i];
    }
    let (a, b, c) = (m[(i + n - 1) % n], m[i], m[(i + 1) % n]);
    let den = a - 2.0 * b + c;
    let off = if den < 0.0 { 0.5 * (a - c) / den } else { 0.0 };
    let t = pattern.angles[i] + off * 2.0 * PI / n as f64;
    (t + PI).rem_euclid(2.0 * PI) - PI
}

/// Best correlation of `|p(t)|` with `|cos(t - t0)|` over `t0`.
pub fn dipole_correlation(pattern: &RadarPattern) -> f64 {
    let m = &pattern.magnitudes;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let corr = |t0: f64| {
        let d: Vec<f64> = pattern
            .angles
            .iter()
            .map(|t| (t - t0).cos().abs())
            .collect();
        let (mm, md) = (mean(m), mean(&d));
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (x, y) in m.iter().zip(&d) {
            sxy += (x - mm) * (y - md);
            sxx += (x - mm) * (x - mm);
            syy += (y - md) * (y - md);
        }
        sxy / (sxx * syy).sqrt()
    };
    // coarse scan then golden-section refinement
    let steps = 360;
    let h = PI / steps as f64;
    let best = (0..steps)
        .map(|i| i as f64 * h)
        .max_by(|&a, &b| corr(a).total_cmp(&corr(b)))
        .unwrap();
    let (mut lo, mut hi) = (best - h, best + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let (x1, x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if corr(x1) > corr(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    corr(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocalMetrics {
    pub max_value: f64,
    pub position: f64,
}

/// Maximum of `value` over `(coordinate, value)` samples sorted by
/// coordinate, refined by a parabola through the discrete maximum and its
/// neighbours. NaN samples are ignored.
pub fn focal_metrics(samples: &[(f64, f64)]) -> Option<FocalMetrics> {
    let i = (0..samples.len())
        .filter(|&i| !samples[i].1.is_nan())
        .max_by(|&i, &j| samples[i].1.total_cmp(&samples[j].1))?;
    let (x1, y1) = samples[i];
    let neighbours = (i > 0 && i + 1 < samples.len())
        .then(|| (samples[i - 1], samples[i + 1]))
        .filter(|((_, a), (_, b))| !a.is_nan() && !b.is_nan());
    let Some(((x0, y0), (x2, y2))) = neighbours else {
        return Some(FocalMetrics {
            max_value: y1,
            position: x1,
        });
    };
    // Lagrange parabola through three points
    let d0 = (x0 - x1) * (x0 - x2);
    let d1 = (x1 - x0) * (x1 - x2);
    let d2 = (x2 - x0) * (x2 - x1);
    let a = y0 / d0 + y1 / d1 + y2 / d2;
    let b = -(y0 * (x1 + x2) / d0 + y1 * (x0 + x2) / d1 + y2 * (x0 + x1) / d2);
    let c = y0 * x1 * x2 / d0 + y1 * x0 * x2 / d1 + y2 * x0 * x1 / d2;
    if !(a < 0.0) {
        return Some(FocalMetrics {
            max_value: y1,
            position: x1,
        });
    }
    let x = (-b / (2.0 * a)).clamp(x0, x2);
    Some(FocalMetrics {
        max_value: a * x * x + b * x + c,
        position: x,
    })
}

/// Instantaneous pressure `Re(p e^{-i phase})`.
pub fn time_snapshot(pressures: &[Complex64], phase: f64) -> Vec<f64> {
    let rot = Complex64::from_polar(1.0, -phase);
    pressures.iter().map(|p| (p * rot).re).collect()
}

/// Net time-averaged power `1/2 Re int p conj(v_n) dS` leaving a sphere, with
/// `v = grad phi` from central differences. The sphere must lie in one fluid
/// domain.
pub fn net_power_through_sphere(
    evaluator: &FieldEvaluator<'_>,
    center: Point3,
    radius: f64,
    level: u32,
) -> Result<f64> {
    let sc = evaluator.scenario();
    let mesh = build_sphere_mesh(radius, center, level)?;
    let rule = quadrature_rule(6)?;
    let mut pts = Vec::new();
    for e in 0..mesh.elements.len() {
        for (&(s, t), &w) in rule.points.iter().zip(&rule.weights) {
            let p = mesh.shape_eval(e, s, t);
            pts.push((p.position, p.normal, w * p.jacobian));
        }
    }
    let domain = sc.locate(&pts[0].0)?;
    let rho = sc.density(domain);
    let h = 1e-5 * radius;
    let total: f64 = pts
        .par_iter()
        .map(|(x, n, w)| {
            let phi = evaluator.potential_in(domain, x)?;
            let g = evaluator.gradient(domain, x, h)?;
            let vn = g[0] * n.x + g[1] * n.y + g[2] * n.z;
            let p = Complex64::i() * sc.omega * rho * phi;
            Ok(0.5 * (p * vn.conj()).re * w)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .sum();
    Ok(total)
}
