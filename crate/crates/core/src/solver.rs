//! Collocation assembly of the desingularized boundary integral equations,
//! interface coupling, boundary-condition elimination and the dense solve.
//!
//! For a domain `D` and a collocation node `x0` on one of its surfaces, with
//! `phi`, `q = d phi / d n` taken on the `D` side and `n` pointing out of `D`:
//!
//! ```text
//! [4 pi phi(x0) if D is unbounded]
//!   + int (phi H_k - psi H_0) dS - int (q G_k - dpsi/dn G_0) dS = sum_D Q e^{ikr}/r
//! psi(x) = phi(x0) + n(x0).(x - x0) q(x0),   dpsi/dn = n(x).n(x0) q(x0)
//! ```
//!
//! Every integrand is bounded at `x = x0`, so all elements, including those
//! carrying `x0`, use ordinary Gauss rules.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{delta_g, delta_h};
use crate::mesh::quadrature::{split4, SubTriangle};
use crate::mesh::{interpolate, quadrature_rule, shape_functions, QuadratureRule};
use crate::scenario::{Scenario, Side};
use crate::Point3;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Column offsets of one surface's unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SurfaceColumns {
    pub nodes: usize,
    /// First column of the nodal potentials, if unknown.
    pub phi: Option<usize>,
    /// First column of the nodal normal derivatives, if unknown.
    pub dphi: Option<usize>,
}

/// One collocation equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowKey {
    pub domain: usize,
    pub surface: usize,
    pub side: Side,
    pub node: usize,
}

/// Unknown numbering after interface coupling and boundary-condition
/// elimination. Interfaces keep the inner-side potential and the normal
/// derivative; rigid surfaces keep the potential, pressure-release surfaces
/// the normal derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct UnknownLayout {
    pub dim: usize,
    pub surfaces: Vec<SurfaceColumns>,
    pub rows: Vec<RowKey>,
}

impl UnknownLayout {
    pub fn new(scenario: &Scenario) -> Self {
        let mut next = 0;
        let mut surfaces = Vec::with_capacity(scenario.surfaces.len());
        let mut rows = Vec::new();
        for (si, s) in scenario.surfaces.iter().enumerate() {
            let n = s.mesh.nodes.len();
            let phi = s.has_phi().then(|| {
                next += n;
                next - n
            });
            let dphi = s.has_dphi().then(|| {
                next += n;
                next - n
            });
            surfaces.push(SurfaceColumns {
                nodes: n,
                phi,
                dphi,
            });
            for (side, domain) in s.fluid_sides() {
                rows.extend((0..n).map(|node| RowKey {
                    domain,
                    surface: si,
                    side,
                    node,
                }));
            }
        }
        debug_assert_eq!(rows.len(), next);
        UnknownLayout {
            dim: next,
            surfaces,
            rows,
        }
    }
}

/// Square system with its right-hand side; `matrix` is row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseComplexSystem {
    pub dim: usize,
    pub matrix: Vec<Complex64>,
    pub rhs: Vec<Complex64>,
}

impl DenseComplexSystem {
    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.matrix
            .par_chunks(self.dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `|A x - b|_inf / |b|_inf` (absolute when `b = 0`).
    pub fn relative_residual(&self, x: &[Complex64]) -> f64 {
        let ax = self.apply(x);
        let r = ax
            .iter()
            .zip(&self.rhs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let bn = self.rhs.iter().map(|b| b.norm()).fold(0.0, f64::max);
        if bn > 0.0 {
            r / bn
        } else {
            r
        }
    }
}

/// Rows emitted for one domain, in layout order.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainRows {
    pub domain: usize,
    pub keys: Vec<RowKey>,
    pub matrix: Vec<Complex64>,
    pub rhs: Vec<Complex64>,
}

/// Geometry sampled at one quadrature point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct QuadPoint {
    pub x: Point3,
    pub n: Point3,
    /// Weight times surface Jacobian.
    pub w: f64,
    pub shape: [f64; 6],
}

pub(crate) struct SurfaceCache {
    /// Nodal normals (stored orientation).
    pub normals: Vec<Point3>,
    pub centroids: Vec<Point3>,
    pub diameters: Vec<f64>,
    /// Elements touching each node.
    pub node_elements: Vec<Vec<usize>>,
    /// Far-field quadrature points per element.
    pub far: Vec<Vec<QuadPoint>>,
}

fn sample(nodes: &[Point3; 6], rule: &QuadratureRule, out: &mut Vec<QuadPoint>) {
    for (&(s, t), &w) in rule.points.iter().zip(&rule.weights) {
        let p = interpolate(nodes, s, t);
        out.push(QuadPoint {
            x: p.position,
            n: p.normal,
            w: w * p.jacobian,
            shape: shape_functions(s, t),
        });
    }
}

fn phase_levels(kh: f64, max_phase: f64) -> u32 {
    let mut levels = 0;
    let mut h = kh;
    while h > max_phase && levels < 6 {
        h *= 0.5;
        levels += 1;
    }
    levels
}

/// Element integration points for elements that are close to, or carry,
/// the point `x0`. Sub-triangles are split while they are closer to `x0`
/// than `near_ratio` times their size, or too coarse for the wavenumber.
pub(crate) struct NearIntegrator<'a> {
    pub base: &'a QuadratureRule,
    pub near_ratio: f64,
    pub max_phase: f64,
    pub k_abs: f64,
}

impl NearIntegrator<'_> {
    pub fn points(
        &self,
        nodes: &[Point3; 6],
        x0: &Point3,
        max_depth: u32,
        out: &mut Vec<QuadPoint>,
    ) {
        let root: SubTriangle = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)];
        let mut stack = vec![(root, 0u32)];
        while let Some((t, depth)) = stack.pop() {
            let c: Vec<Point3> = t
                .iter()
                .map(|&(s, u)| interpolate(nodes, s, u).position)
                .collect();
            let h = (c[0] - c[1])
                .norm()
                .max((c[1] - c[2]).norm())
                .max((c[2] - c[0]).norm());
            let centroid = (t[0].0 + t[1].0 + t[2].0) / 3.0;
            let centroid_eta = (t[0].1 + t[1].1 + t[2].1) / 3.0;
            let pc = interpolate(nodes, centroid, centroid_eta).position;
            let close = (pc - x0).norm() < self.near_ratio * h && depth < max_depth;
            let coarse = self.k_abs * h > self.max_phase && depth < 8;
            if close || coarse {
                for child in split4(&t) {
                    stack.push((child, depth + 1));
                }
            } else {
                sample(nodes, &self.base.mapped(&t), out);
            }
        }
    }
}

/// Per-surface geometry and far-field quadrature points. Far elements are
/// subdivided for the largest wavenumber on either side of the surface.
pub(crate) fn surface_caches(scenario: &Scenario) -> Result<Vec<SurfaceCache>> {
    let num = &scenario.numerics;
    let far_rule = quadrature_rule(num.far_degree)?;
    Ok(scenario
        .surfaces
        .iter()
        .map(|s| {
            let m = &s.mesh;
            let k_abs = s
                .fluid_sides()
                .iter()
                .map(|&(_, d)| scenario.wavenumber(d).norm())
                .fold(0.0, f64::max);
            let mut node_elements = vec![Vec::new(); m.nodes.len()];
            let mut centroids = Vec::with_capacity(m.elements.len());
            let mut diameters = Vec::with_capacity(m.elements.len());
            let mut far = Vec::with_capacity(m.elements.len());
            for (e, el) in m.elements.iter().enumerate() {
                for &n in el {
                    node_elements[n].push(e);
                }
                let nodes = m.element_nodes(e);
                centroids.push(interpolate(&nodes, 1.0 / 3.0, 1.0 / 3.0).position);
                let h = m.element_diameter(e);
                diameters.push(h);
                let rule =
                    far_rule.subdivided(phase_levels(k_abs * h, num.max_phase_per_subtriangle));
                let mut pts = Vec::with_capacity(rule.len());
                sample(&nodes, &rule, &mut pts);
                far.push(pts);
            }
            SurfaceCache {
                normals: m.nodal_normals(),
                centroids,
                diameters,
                node_elements,
                far,
            }
        })
        .collect())
}

struct Assembler<'a> {
    scenario: &'a Scenario,
    layout: &'a UnknownLayout,
    caches: Vec<SurfaceCache>,
    near_rule: QuadratureRule,
}

impl<'a> Assembler<'a> {
    fn new(scenario: &'a Scenario, layout: &'a UnknownLayout) -> Result<Self> {
        Ok(Assembler {
            scenario,
            layout,
            caches: surface_caches(scenario)?,
            near_rule: quadrature_rule(scenario.numerics.near_degree)?,
        })
    }

    /// Fills one matrix row and returns its right-hand side.
    fn fill_row(&self, row_index: usize, key: &RowKey, row: &mut [Complex64]) -> Result<Complex64> {
        let sc = self.scenario;
        let num = &sc.numerics;
        let d = key.domain;
        let k = sc.wavenumber(d);
        let s0 = &sc.surfaces[key.surface];
        let cols0 = self.layout.surfaces[key.surface];
        let x0 = s0.mesh.nodes[key.node];
        let n0 = self.caches[key.surface].normals[key.node];
        let alpha0 = sc.side_factor(key.surface, key.side);

        let near = NearIntegrator {
            base: &self.near_rule,
            near_ratio: num.near_ratio,
            max_phase: num.max_phase_per_subtriangle,
            k_abs: k.norm(),
        };

        let mut c_phi0 = Complex64::new(0.0, 0.0);
        let mut c_q0 = Complex64::new(0.0, 0.0);
        let mut scratch = Vec::new();

        for (si, side) in sc.bounding_surfaces(d) {
            let surf = &sc.surfaces[si];
            let cache = &self.caches[si];
            let cols = self.layout.surfaces[si];
            let sign = if side == Side::Inner { 1.0 } else { -1.0 };
            let alpha = sc.side_factor(si, side);
            let own = if si == key.surface {
                cache.node_elements[key.node].as_slice()
            } else {
                &[]
            };
            for (e, el) in surf.mesh.elements.iter().enumerate() {
                let pts: &[QuadPoint] = if own.contains(&e) {
                    scratch.clear();
                    near.points(
                        &surf.mesh.element_nodes(e),
                        &x0,
                        num.self_subdivision,
                        &mut scratch,
                    );
                    &scratch
                } else if (cache.centroids[e] - x0).norm() < num.near_ratio * cache.diameters[e] {
                    scratch.clear();
                    near.points(
                        &surf.mesh.element_nodes(e),
                        &x0,
                        num.near_max_depth,
                        &mut scratch,
                    );
                    &scratch
                } else {
                    &cache.far[e]
                };

                let mut acc_phi = [Complex64::new(0.0, 0.0); 6];
                let mut acc_q = [Complex64::new(0.0, 0.0); 6];
                let mut acc_phi0 = 0.0;
                let mut acc_q0 = 0.0;
                for p in pts {
                    let dv = p.x - x0;
                    let r = dv.norm();
                    let nd = p.n.dot(&dv);
                    let r3 = r * r * r;
                    let h0 = -nd / r3;
                    let g0 = 1.0 / r;
                    let hk = h0 + delta_h(k, r, nd);
                    let gk = g0 + delta_g(k, r);
                    let w = sign * p.w;
                    let wh = w * alpha * hk;
                    let wg = w * gk;
                    for j in 0..6 {
                        acc_phi[j] += wh * p.shape[j];
                        acc_q[j] -= wg * p.shape[j];
                    }
                    acc_phi0 -= w * h0 * alpha0;
                    acc_q0 += w * (p.n.dot(&n0) * g0 - h0 * n0.dot(&dv));
                }
                let finite = acc_phi
                    .iter()
                    .chain(&acc_q)
                    .all(|v| v.re.is_finite() && v.im.is_finite())
                    && acc_phi0.is_finite()
                    && acc_q0.is_finite();
                if !finite {
                    return Err(Error::AssemblyFailure {
                        surface: if surf.mesh.surface_id.is_empty() {
                            format!("#{si}")
                        } else {
                            surf.mesh.surface_id.clone()
                        },
                        element: e,
                        row: row_index,
                    });
                }
                if let Some(c) = cols.phi {
                    for j in 0..6 {
                        row[c + el[j]] += acc_phi[j];
                    }
                }
                if let Some(c) = cols.dphi {
                    for j in 0..6 {
                        row[c + el[j]] += acc_q[j];
                    }
                }
                c_phi0 += acc_phi0;
                c_q0 += acc_q0;
            }
        }

        if sc.media[d].unbounded {
            c_phi0 += FOUR_PI * alpha0;
        }
        if let Some(c) = cols0.phi {
            row[c + key.node] += c_phi0;
        }
        if let Some(c) = cols0.dphi {
            row[c + key.node] += c_q0;
        }
        Ok(monopole_rhs(sc, d, &x0))
    }
}

/// Source term of a collocation equation: `sum Q e^{ikr}/r` over the
/// monopoles in `domain`.
pub fn monopole_rhs(scenario: &Scenario, domain: usize, x0: &Point3) -> Complex64 {
    let k = scenario.wavenumber(domain);
    scenario
        .sources
        .iter()
        .filter(|s| s.domain == domain)
        .map(|s| {
            let r = (s.position - x0).norm();
            s.strength * (Complex64::i() * k * r).exp() / r
        })
        .sum()
}

fn fill_rows(
    asm: &Assembler<'_>,
    keys: &[(usize, RowKey)],
    matrix: &mut [Complex64],
    rhs: &mut [Complex64],
    dim: usize,
) -> Result<()> {
    if dim == 0 {
        return Ok(());
    }
    matrix
        .par_chunks_mut(dim)
        .zip(rhs.par_iter_mut())
        .zip(keys.par_iter())
        .try_for_each(|((row, b), (i, key))| {
            *b = asm.fill_row(*i, key, row)?;
            Ok(())
        })
}

/// Rows of the collocation equations of one domain.
pub fn assemble_domain_equations(scenario: &Scenario, domain: usize) -> Result<DomainRows> {
    let layout = UnknownLayout::new(scenario);
    let asm = Assembler::new(scenario, &layout)?;
    let keys: Vec<(usize, RowKey)> = layout
        .rows
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, k)| k.domain == domain)
        .collect();
    let mut matrix = vec![Complex64::new(0.0, 0.0); keys.len() * layout.dim];
    let mut rhs = vec![Complex64::new(0.0, 0.0); keys.len()];
    fill_rows(&asm, &keys, &mut matrix, &mut rhs, layout.dim)?;
    Ok(DomainRows {
        domain,
        keys: keys.into_iter().map(|(_, k)| k).collect(),
        matrix,
        rhs,
    })
}

/// Stacks per-domain rows into the coupled system in layout order.
pub fn couple_interfaces(
    scenario: &Scenario,
    parts: Vec<DomainRows>,
) -> Result<DenseComplexSystem> {
    let layout = UnknownLayout::new(scenario);
    let n = layout.dim;
    let mut matrix = vec![Complex64::new(0.0, 0.0); n * n];
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    let mut filled = vec![false; n];
    for part in &parts {
        for (r, key) in part.keys.iter().enumerate() {
            let i = layout.rows.iter().position(|k| k == key).ok_or_else(|| {
                Error::Validation(format!("row {key:?} is not part of this scenario"))
            })?;
            matrix[i * n..(i + 1) * n].copy_from_slice(&part.matrix[r * n..(r + 1) * n]);
            rhs[i] = part.rhs[r];
            filled[i] = true;
        }
    }
    if let Some(i) = filled.iter().position(|f| !f) {
        return Err(Error::Validation(format!(
            "no equation assembled for row {:?}",
            layout.rows[i]
        )));
    }
    Ok(DenseComplexSystem {
        dim: n,
        matrix,
        rhs,
    })
}

/// Assembles the coupled system for all domains in one row-parallel pass.
pub fn assemble_system(scenario: &Scenario) -> Result<(UnknownLayout, DenseComplexSystem)> {
    let layout = UnknownLayout::new(scenario);
    let asm = Assembler::new(scenario, &layout)?;
    let n = layout.dim;
    let keys: Vec<(usize, RowKey)> = layout.rows.iter().copied().enumerate().collect();
    let mut matrix = vec![Complex64::new(0.0, 0.0); n * n];
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    fill_rows(&asm, &keys, &mut matrix, &mut rhs, n)?;
    drop(asm);
    Ok((
        layout,
        DenseComplexSystem {
            dim: n,
            matrix,
            rhs,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub dimension: usize,
    pub assembly_seconds: f64,
    pub solve_seconds: f64,
    pub residual: f64,
    /// Smallest over largest modulus of the diagonal of the LU factor.
    pub pivot_ratio: f64,
    pub warnings: Vec<String>,
}

impl std::fmt::Display for SolveReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "[solve]")?;
        writeln!(f, "dimension = {}", self.dimension)?;
        writeln!(f, "assembly_seconds = {:.3}", self.assembly_seconds)?;
        writeln!(f, "solve_seconds = {:.3}", self.solve_seconds)?;
        writeln!(f, "relative_residual = {:e}", self.residual)?;
        writeln!(f, "pivot_ratio = {:e}", self.pivot_ratio)?;
        for w in &self.warnings {
            writeln!(f, "warning = {w:?}")?;
        }
        Ok(())
    }
}

/// LU factorization with partial pivoting. Returns the solution, the
/// relative residual and the pivot ratio.
pub fn solve_dense(
    system: &DenseComplexSystem,
    tolerance: f64,
) -> Result<(Vec<Complex64>, f64, f64)> {
    use faer::dyn_stack::{MemBuffer, MemStack};
    use faer::linalg::lu::partial_pivoting::{factor, solve};
    use faer::Mat;

    let n = system.dim;
    if n == 0 {
        return Ok((Vec::new(), 0.0, 1.0));
    }
    let par = faer::get_global_parallelism();
    let mut lu = Mat::<Complex64>::from_fn(n, n, |i, j| system.matrix[i * n + j]);
    let mut perm = vec![0usize; n];
    let mut perm_inv = vec![0usize; n];
    let mut buf = MemBuffer::new(
        factor::lu_in_place_scratch::<usize, Complex64>(n, n, par, Default::default())
            .or(solve::solve_in_place_scratch::<usize, Complex64>(n, 1, par)),
    );
    let (_, p) = factor::lu_in_place(
        lu.as_mut(),
        &mut perm,
        &mut perm_inv,
        par,
        MemStack::new(&mut buf),
        Default::default(),
    );
    let mut x = Mat::<Complex64>::from_fn(n, 1, |i, _| system.rhs[i]);
    solve::solve_in_place(
        lu.as_ref(),
        lu.as_ref(),
        p,
        x.as_mut(),
        par,
        MemStack::new(&mut buf),
    );

    let diag: Vec<f64> = (0..n).map(|i| lu[(i, i)].norm()).collect();
    drop(lu);
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let pivot_ratio = if dmax > 0.0 { dmin / dmax } else { 0.0 };

    let x: Vec<Complex64> = (0..n).map(|i| x[(i, 0)]).collect();
    let finite = x.iter().all(|v| v.re.is_finite() && v.im.is_finite());
    let residual = if finite {
        system.relative_residual(&x)
    } else {
        f64::INFINITY
    };
    if !finite || !(residual <= tolerance) || pivot_ratio < 1e-15 {
        return Err(Error::SingularSystem { residual });
    }
    Ok((x, residual, pivot_ratio))
}

/// Nodal potential and normal derivative of one surface, on its stored side
/// (the inner side of an interface, the fluid side of a rigid or
/// pressure-release surface). Normal derivatives use the stored normal.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSolution {
    pub phi: Vec<Complex64>,
    pub dphi_dn: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub surfaces: Vec<SurfaceSolution>,
}

impl SolutionField {
    pub fn from_unknowns(layout: &UnknownLayout, x: &[Complex64]) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        let surfaces = layout
            .surfaces
            .iter()
            .map(|c| SurfaceSolution {
                phi: c
                    .phi
                    .map_or_else(|| vec![zero; c.nodes], |o| x[o..o + c.nodes].to_vec()),
                dphi_dn: c
                    .dphi
                    .map_or_else(|| vec![zero; c.nodes], |o| x[o..o + c.nodes].to_vec()),
            })
            .collect();
        SolutionField { surfaces }
    }

    /// Potential on the given side of a surface.
    pub fn phi_on_side(&self, scenario: &Scenario, surface: usize, side: Side) -> Vec<Complex64> {
        let f = scenario.side_factor(surface, side);
        self.surfaces[surface].phi.iter().map(|p| p * f).collect()
    }
}

fn resolution_warnings(scenario: &Scenario) -> Vec<String> {
    let mut w = Vec::new();
    for (i, s) in scenario.surfaces.iter().enumerate() {
        let h = (0..s.mesh.elements.len())
            .map(|e| s.mesh.element_diameter(e))
            .fold(0.0, f64::max);
        for (_, d) in s.fluid_sides() {
            let kh = scenario.wavenumber(d).norm() * h;
            if kh > std::f64::consts::PI {
                w.push(format!(
                    "surface {i}: |k| h = {kh:.2} in medium '{}' (fewer than two elements per wavelength)",
                    scenario.media[d].id
                ));
            }
            if scenario.numerics.far_degree < 6 && kh > 1.0 {
                w.push(format!(
                    "surface {i}: far-field quadrature degree {} is low for |k| h = {kh:.2}",
                    scenario.numerics.far_degree
                ));
            }
        }
    }
    w
}

/// Validates, assembles and solves a scenario.
pub fn solve_scenario(scenario: &Scenario) -> Result<(SolutionField, SolveReport)> {
    scenario.validate()?;
    let t0 = Instant::now();
    let (layout, system) = assemble_system(scenario)?;
    let assembly_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let (x, residual, pivot_ratio) = solve_dense(&system, scenario.numerics.residual_tolerance)?;
    let solve_seconds = t1.elapsed().as_secs_f64();
    drop(system);
    Ok((
        SolutionField::from_unknowns(&layout, &x),
        SolveReport {
            dimension: layout.dim,
            assembly_seconds,
            solve_seconds,
            residual,
            pivot_ratio,
            warnings: resolution_warnings(scenario),
        },
    ))
}

#[cfg(test)]
mod tests;
