//! Closed surfaces discretized with 6-node curved triangles.
//!
//! Element node order: corners 0, 1, 2 counterclockwise seen from the outer
//! medium, then the mid-edge nodes of edges (0,1), (1,2) and (2,0). Normals
//! therefore point from the inner medium to the outer medium.

mod geodesic;
mod io;
pub mod quadrature;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::Point3;

pub use io::{read_mesh, write_mesh};
pub use quadrature::{quadrature_rule, QuadratureRule, SUPPORTED_DEGREES};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticTriangleMesh {
    pub nodes: Vec<Point3>,
    pub elements: Vec<[usize; 6]>,
    pub surface_id: String,
}

/// Shape of an axisymmetric surface of sphere topology, parametrized by the
/// polar angle `theta` and azimuth `phi` as
/// `(a sin(theta) cos(phi), a sin(theta) sin(phi), z(cos theta))`.
#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceShape {
    Sphere {
        radius: f64,
    },
    /// `z = 0.1 a (cos(theta) - 1) + 0.3 a sin^2(theta)`: a thin curved shell
    /// whose two sheets meet at the rim.
    Bowl {
        radius: f64,
    },
    /// `z = sum_i z_coeffs[i] cos^i(theta)`, coefficients in length units.
    Axisymmetric {
        radius: f64,
        z_coeffs: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParametricSurfaceSpec {
    pub shape: SurfaceShape,
    pub center: Point3,
}

impl SurfaceShape {
    pub fn radius(&self) -> f64 {
        match *self {
            SurfaceShape::Sphere { radius }
            | SurfaceShape::Bowl { radius }
            | SurfaceShape::Axisymmetric { radius, .. } => radius,
        }
    }

    /// Polynomial coefficients of `z` in `cos(theta)`.
    pub fn z_coeffs(&self) -> Vec<f64> {
        match self {
            SurfaceShape::Sphere { radius } => vec![0.0, *radius],
            SurfaceShape::Bowl { radius } => vec![0.2 * radius, 0.1 * radius, -0.3 * radius],
            SurfaceShape::Axisymmetric { z_coeffs, .. } => z_coeffs.clone(),
        }
    }
}

impl ParametricSurfaceSpec {
    pub fn sphere(radius: f64, center: Point3) -> Self {
        ParametricSurfaceSpec {
            shape: SurfaceShape::Sphere { radius },
            center,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.shape.radius();
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::MeshQuality(format!(
                "radius must be positive, got {a}"
            )));
        }
        let z = self.shape.z_coeffs();
        if z.is_empty()
            || z.iter().any(|c| !c.is_finite())
            || !self.center.iter().all(|c| c.is_finite())
        {
            return Err(Error::MeshQuality("non-finite shape parameters".into()));
        }
        Ok(())
    }

    /// Smallest surface Jacobian of the `(theta, phi)` map divided by
    /// `sin(theta)`, sampled over the polar angle. Vanishes where the polar
    /// and azimuthal tangents become parallel.
    pub fn min_reduced_jacobian(&self) -> f64 {
        let a = self.shape.radius();
        let z = self.shape.z_coeffs();
        let dz = |c: f64| {
            z.iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, coef)| acc * c + i as f64 * coef)
        };
        (0..=4000)
            .map(|i| -1.0 + i as f64 / 2000.0)
            .map(|c: f64| a * (a * a * c * c + (1.0 - c * c) * dz(c).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    /// Image of a point `u` of the unit sphere (`u_z = cos(theta)`).
    pub fn map(&self, u: &Point3) -> Point3 {
        let a = self.shape.radius();
        if let SurfaceShape::Sphere { .. } = self.shape {
            return self.center + u * a;
        }
        let z = self
            .shape
            .z_coeffs()
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * u.z + c);
        self.center + Point3::new(a * u.x, a * u.y, z)
    }

    /// Point at polar angle `theta` and azimuth `phi`.
    pub fn point(&self, theta: f64, phi: f64) -> Point3 {
        let u = Point3::new(
            theta.sin() * phi.cos(),
            theta.sin() * phi.sin(),
            theta.cos(),
        );
        self.map(&u)
    }
}

/// `subdivision_level` L gives geodesic frequency `2^L`: `20 * 4^L` elements.
pub fn build_sphere_mesh(
    radius: f64,
    center: Point3,
    subdivision_level: u32,
) -> Result<QuadraticTriangleMesh> {
    build_parametric_mesh(
        &ParametricSurfaceSpec::sphere(radius, center),
        subdivision_level,
    )
}

pub fn build_parametric_mesh(
    spec: &ParametricSurfaceSpec,
    subdivision_level: u32,
) -> Result<QuadraticTriangleMesh> {
    if subdivision_level > 12 {
        return Err(Error::MeshQuality(format!(
            "subdivision level {subdivision_level} is too large"
        )));
    }
    build_parametric_mesh_frequency(spec, 1 << subdivision_level)
}

/// Mesh with every icosahedron edge split into `frequency` segments:
/// `20 f^2` elements and `40 f^2 + 2` nodes. Frequencies that are not powers
/// of two give intermediate resolutions (e.g. 12 gives 2880 elements).
pub fn build_parametric_mesh_frequency(
    spec: &ParametricSurfaceSpec,
    frequency: usize,
) -> Result<QuadraticTriangleMesh> {
    spec.validate()?;
    if frequency == 0 {
        return Err(Error::MeshQuality(
            "geodesic frequency must be at least 1".into(),
        ));
    }
    let a = spec.shape.radius();
    let jmin = spec.min_reduced_jacobian();
    if !(jmin > 1e-8 * a * a) {
        return Err(Error::MeshQuality(format!(
            "degenerate parametrization: surface Jacobian {jmin:e} away from the poles"
        )));
    }
    let (units, elements) = geodesic::geodesic_sphere(frequency);
    let nodes = units.iter().map(|u| spec.map(u)).collect();
    let mesh = QuadraticTriangleMesh {
        nodes,
        elements,
        surface_id: String::new(),
    };
    check_jacobians(&mesh)?;
    Ok(mesh)
}

fn check_jacobians(mesh: &QuadraticTriangleMesh) -> Result<()> {
    let samples = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0 / 3.0, 1.0 / 3.0)];
    let mut jac = Vec::with_capacity(mesh.elements.len() * samples.len());
    for e in 0..mesh.elements.len() {
        for &(s, t) in &samples {
            jac.push((e, mesh.shape_eval(e, s, t).jacobian));
        }
    }
    let mean = jac.iter().map(|j| j.1).sum::<f64>() / jac.len() as f64;
    if let Some(&(e, j)) = jac.iter().find(|j| !(j.1 > 1e-8 * mean)) {
        return Err(Error::MeshQuality(format!(
            "degenerate parametrization: element {e} has surface Jacobian {j:e}"
        )));
    }
    Ok(())
}

/// Quadratic shape functions at `(xi, eta)`.
pub fn shape_functions(xi: f64, eta: f64) -> [f64; 6] {
    let l0 = 1.0 - xi - eta;
    let (l1, l2) = (xi, eta);
    [
        l0 * (2.0 * l0 - 1.0),
        l1 * (2.0 * l1 - 1.0),
        l2 * (2.0 * l2 - 1.0),
        4.0 * l0 * l1,
        4.0 * l1 * l2,
        4.0 * l2 * l0,
    ]
}

/// Derivatives of the shape functions with respect to `xi` and `eta`.
pub fn shape_derivatives(xi: f64, eta: f64) -> ([f64; 6], [f64; 6]) {
    let l0 = 1.0 - xi - eta;
    let (l1, l2) = (xi, eta);
    let dxi = [
        1.0 - 4.0 * l0,
        4.0 * l1 - 1.0,
        0.0,
        4.0 * (l0 - l1),
        4.0 * l2,
        -4.0 * l2,
    ];
    let deta = [
        1.0 - 4.0 * l0,
        0.0,
        4.0 * l2 - 1.0,
        -4.0 * l1,
        4.0 * l1,
        4.0 * (l0 - l2),
    ];
    (dxi, deta)
}

/// Geometry of a surface point inside an element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub position: Point3,
    /// Unit normal, pointing to the outer medium.
    pub normal: Point3,
    /// Area scale `|dx/dxi x dx/deta|`.
    pub jacobian: f64,
}

/// Interpolation of six element nodes at `(xi, eta)`.
pub fn interpolate(nodes: &[Point3; 6], xi: f64, eta: f64) -> SurfacePoint {
    let n = shape_functions(xi, eta);
    let (dxi, deta) = shape_derivatives(xi, eta);
    let mut position = Point3::zeros();
    let mut t1 = Point3::zeros();
    let mut t2 = Point3::zeros();
    for i in 0..6 {
        position += nodes[i] * n[i];
        t1 += nodes[i] * dxi[i];
        t2 += nodes[i] * deta[i];
    }
    let c = t1.cross(&t2);
    let jacobian = c.norm();
    SurfacePoint {
        position,
        normal: c / jacobian,
        jacobian,
    }
}

impl QuadraticTriangleMesh {
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.surface_id = id.into();
        self
    }

    pub fn element_nodes(&self, element: usize) -> [Point3; 6] {
        self.elements[element].map(|i| self.nodes[i])
    }

    pub fn shape_eval(&self, element: usize, xi: f64, eta: f64) -> SurfacePoint {
        interpolate(&self.element_nodes(element), xi, eta)
    }

    /// Corner-node indices in ascending order.
    pub fn corner_nodes(&self) -> Vec<usize> {
        let mut c: Vec<usize> = self
            .elements
            .iter()
            .flat_map(|e| e[..3].iter().copied())
            .collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    /// Normal at each node: normalized average of the normals of the adjacent
    /// elements evaluated at that node.
    pub fn nodal_normals(&self) -> Vec<Point3> {
        const LOCAL: [(f64, f64); 6] = [
            (0.0, 0.0),
            (1.0, 0.0),
            (0.0, 1.0),
            (0.5, 0.0),
            (0.5, 0.5),
            (0.0, 0.5),
        ];
        let mut acc = vec![Point3::zeros(); self.nodes.len()];
        for (e, el) in self.elements.iter().enumerate() {
            let nodes = self.element_nodes(e);
            for (i, &(s, t)) in LOCAL.iter().enumerate() {
                acc[el[i]] += interpolate(&nodes, s, t).normal;
            }
        }
        acc.into_iter().map(|v| v.normalize()).collect()
    }

    /// Largest corner-to-corner distance in an element.
    pub fn element_diameter(&self, element: usize) -> f64 {
        let el = &self.elements[element];
        let p = |i: usize| self.nodes[el[i]];
        (p(0) - p(1))
            .norm()
            .max((p(1) - p(2)).norm())
            .max((p(2) - p(0)).norm())
    }

    /// Reverses the orientation of one element (for constructing bad meshes).
    pub fn flip_element(&mut self, element: usize) {
        let [a, b, c, ab, bc, ca] = self.elements[element];
        self.elements[element] = [a, c, b, ca, bc, ab];
    }

    pub fn area(&self, rule: &QuadratureRule) -> f64 {
        (0..self.elements.len())
            .map(|e| {
                let nodes = self.element_nodes(e);
                rule.points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&(s, t), w)| w * interpolate(&nodes, s, t).jacobian)
                    .sum::<f64>()
            })
            .sum()
    }

    /// Enclosed volume from the divergence theorem, `(1/3) int x.n dS`.
    pub fn volume(&self, rule: &QuadratureRule) -> f64 {
        (0..self.elements.len())
            .map(|e| {
                let nodes = self.element_nodes(e);
                rule.points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&(s, t), w)| {
                        let p = interpolate(&nodes, s, t);
                        w * p.jacobian * p.position.dot(&p.normal) / 3.0
                    })
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Outcome of [`mesh_integrity_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrityReport {
    pub nodes: usize,
    pub elements: usize,
    /// Every corner edge is shared by exactly two elements.
    pub closed: bool,
    /// Neighbouring elements traverse their shared edge in opposite directions.
    pub orientation_consistent: bool,
    /// Enclosed volume is positive, so normals point outward.
    pub outward: bool,
    /// Each edge has a single mid-edge node, used by no other edge or corner.
    pub midedge_topology: bool,
    /// Elements touching an edge traversed twice in the same direction.
    pub misoriented_elements: Vec<usize>,
    pub area: f64,
    pub volume: f64,
    /// `|sum n J w|` over all quadrature points.
    pub normal_sum: f64,
    pub issues: Vec<String>,
}

impl IntegrityReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }
}

impl std::fmt::Display for IntegrityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "nodes            {}", self.nodes)?;
        writeln!(f, "elements         {}", self.elements)?;
        writeln!(f, "closed           {}", self.closed)?;
        writeln!(f, "orientation      {}", self.orientation_consistent)?;
        writeln!(f, "outward          {}", self.outward)?;
        writeln!(f, "mid-edge nodes   {}", self.midedge_topology)?;
        writeln!(f, "area             {}", crate::fmt_f64(self.area))?;
        writeln!(f, "volume           {}", crate::fmt_f64(self.volume))?;
        writeln!(f, "|sum n dS|       {}", crate::fmt_f64(self.normal_sum))?;
        for i in &self.issues {
            writeln!(f, "issue: {i}")?;
        }
        Ok(())
    }
}

pub fn mesh_integrity_check(mesh: &QuadraticTriangleMesh) -> IntegrityReport {
    let mut issues = Vec::new();
    let n_nodes = mesh.nodes.len();

    for (e, el) in mesh.elements.iter().enumerate() {
        if el.iter().any(|&i| i >= n_nodes) {
            issues.push(format!("element {e} references a missing node"));
        }
    }
    if !issues.is_empty() || mesh.elements.is_empty() {
        if mesh.elements.is_empty() {
            issues.push("mesh has no elements".into());
        }
        return IntegrityReport {
            nodes: n_nodes,
            elements: mesh.elements.len(),
            closed: false,
            orientation_consistent: false,
            outward: false,
            midedge_topology: false,
            misoriented_elements: Vec::new(),
            area: 0.0,
            volume: 0.0,
            normal_sum: f64::NAN,
            issues,
        };
    }

    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    let mut undirected: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for (e, el) in mesh.elements.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (el[k], el[(k + 1) % 3]);
            *directed.entry((a, b)).or_default() += 1;
            undirected
                .entry((a.min(b), a.max(b)))
                .or_default()
                .push((e, el[3 + k]));
        }
    }

    let closed = undirected.values().all(|v| v.len() == 2);
    if !closed {
        let bad = undirected.values().filter(|v| v.len() != 2).count();
        issues.push(format!(
            "{bad} edges are not shared by exactly two elements"
        ));
    }
    let orientation_consistent = directed.values().all(|&c| c == 1);
    let mut misoriented_elements = Vec::new();
    if !orientation_consistent {
        let mut bad: Vec<usize> = undirected
            .iter()
            .filter(|(&(a, b), _)| {
                directed.get(&(a, b)).copied().unwrap_or(0) != 1
                    || directed.get(&(b, a)).copied().unwrap_or(0) != 1
            })
            .flat_map(|(_, v)| v.iter().map(|x| x.0))
            .collect();
        bad.sort_unstable();
        bad.dedup();
        issues.push(format!("inconsistent orientation around elements {bad:?}"));
        misoriented_elements = bad;
    }

    let corners: std::collections::HashSet<usize> = mesh
        .elements
        .iter()
        .flat_map(|e| e[..3].iter().copied())
        .collect();
    let mut mid_owner: HashMap<usize, (usize, usize)> = HashMap::new();
    let mut midedge_topology = true;
    for (edge, users) in &undirected {
        let mid = users[0].1;
        if users.iter().any(|u| u.1 != mid) || corners.contains(&mid) {
            midedge_topology = false;
        }
        if let Some(prev) = mid_owner.insert(mid, *edge) {
            if prev != *edge {
                midedge_topology = false;
            }
        }
    }
    if !midedge_topology {
        issues.push("mid-edge nodes do not match edge topology".into());
    }

    let rule = quadrature_rule(8).expect("degree 8 is supported");
    let mut area = 0.0;
    let mut volume = 0.0;
    let mut nsum = Point3::zeros();
    for e in 0..mesh.elements.len() {
        let nodes = mesh.element_nodes(e);
        for (&(s, t), w) in rule.points.iter().zip(&rule.weights) {
            let p = interpolate(&nodes, s, t);
            if !(p.jacobian > 0.0 && p.jacobian.is_finite()) {
                issues.push(format!("element {e} has a degenerate Jacobian"));
                break;
            }
            area += w * p.jacobian;
            volume += w * p.jacobian * p.position.dot(&p.normal) / 3.0;
            nsum += p.normal * (w * p.jacobian);
        }
    }
    let outward = volume > 0.0;
    if !outward {
        issues.push(format!(
            "enclosed volume {volume:e} is not positive; normals point inward"
        ));
    }
    let normal_sum = nsum.norm();
    if !(normal_sum <= 1e-10 * area) {
        issues.push(format!(
            "surface normals do not close: |sum n dS| = {normal_sum:e}"
        ));
    }

    IntegrityReport {
        nodes: n_nodes,
        elements: mesh.elements.len(),
        closed,
        orientation_consistent,
        outward,
        midedge_topology,
        misoriented_elements,
        area,
        volume,
        normal_sum,
        issues,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn origin() -> Point3 {
        Point3::zeros()
    }

    #[test]
    fn sphere_counts() {
        for (level, e, n) in [(0, 20, 42), (2, 320, 642), (3, 1280, 2562)] {
            let m = build_sphere_mesh(1.0, origin(), level).unwrap();
            assert_eq!((m.elements.len(), m.nodes.len()), (e, n), "level {level}");
            assert_eq!(m.corner_nodes().len(), e / 2 + 2);
        }
    }

    #[test]
    fn bowl_at_reference_resolution() {
        let spec = ParametricSurfaceSpec {
            shape: SurfaceShape::Bowl { radius: 1.0 },
            center: origin(),
        };
        let m = build_parametric_mesh_frequency(&spec, 12).unwrap();
        assert_eq!((m.elements.len(), m.nodes.len()), (2880, 5762));
        let r = mesh_integrity_check(&m);
        assert!(r.is_ok(), "{r}");
    }

    #[test]
    fn bowl_pole_images() {
        let spec = ParametricSurfaceSpec {
            shape: SurfaceShape::Bowl { radius: 2.0 },
            center: origin(),
        };
        assert!((spec.point(0.0, 0.3) - origin()).norm() < 1e-15);
        assert!((spec.point(PI, 1.1) - Point3::new(0.0, 0.0, -0.4)).norm() < 1e-15);
        // icosahedral meshes have no pole nodes; the parametric map is still used at the poles
        let m = build_parametric_mesh(&spec, 1).unwrap();
        assert!(m
            .nodes
            .iter()
            .all(|p| p.z <= 0.4 * 2.0 && p.z >= -0.4 - 1e-12));
    }

    #[test]
    fn corner_interpolation_is_exact() {
        let m = build_sphere_mesh(1.3, Point3::new(0.1, 0.2, 0.3), 1).unwrap();
        for e in [0, 17, 41] {
            let el = m.elements[e];
            assert_eq!(m.shape_eval(e, 0.0, 0.0).position, m.nodes[el[0]]);
            assert_eq!(m.shape_eval(e, 1.0, 0.0).position, m.nodes[el[1]]);
            assert_eq!(m.shape_eval(e, 0.0, 1.0).position, m.nodes[el[2]]);
            assert_eq!(m.shape_eval(e, 0.5, 0.5).position, m.nodes[el[4]]);
        }
    }

    #[test]
    fn sphere_geometry_error_at_level_two() {
        let c = Point3::new(0.5, -1.0, 2.0);
        let a = 2.0;
        let m = build_sphere_mesh(a, c, 2).unwrap();
        let rule = quadrature_rule(8).unwrap();
        let mut worst_r: f64 = 0.0;
        let mut worst_angle: f64 = 0.0;
        for e in 0..m.elements.len() {
            for &(s, t) in &rule.points {
                let p = m.shape_eval(e, s, t);
                let d = p.position - c;
                worst_r = worst_r.max((d.norm() - a).abs());
                worst_angle = worst_angle.max(p.normal.dot(&d.normalize()).clamp(-1.0, 1.0).acos());
            }
        }
        assert!(worst_r < 2e-3 * a, "{worst_r}");
        assert!(worst_angle < 1e-2, "{worst_angle}");
    }

    #[test]
    fn sphere_area_and_volume() {
        let a = 1.7;
        let m = build_sphere_mesh(a, Point3::new(0.3, 0.0, -0.2), 2).unwrap();
        let r = mesh_integrity_check(&m);
        assert!(r.is_ok(), "{r}");
        assert!((r.area / (4.0 * PI * a * a) - 1.0).abs() < 1e-3);
        assert!((r.volume / (4.0 / 3.0 * PI * a.powi(3)) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn area_error_drops_eightfold_per_level() {
        let rule = quadrature_rule(8).unwrap();
        let err: Vec<f64> = (0..5)
            .map(|l| (build_sphere_mesh(1.0, origin(), l).unwrap().area(&rule) - 4.0 * PI).abs())
            .collect();
        for w in err.windows(2) {
            assert!(w[0] / w[1] >= 8.0, "{err:?}");
        }
    }

    #[test]
    fn flipped_element_is_flagged() {
        let mut m = build_sphere_mesh(1.0, origin(), 1).unwrap();
        m.flip_element(5);
        let r = mesh_integrity_check(&m);
        assert!(r.closed);
        assert!(!r.orientation_consistent);
        assert!(r.misoriented_elements.contains(&5), "{r}");
        assert!(!r.is_ok());
    }

    #[test]
    fn inward_mesh_is_flagged() {
        let mut m = build_sphere_mesh(1.0, origin(), 1).unwrap();
        for e in 0..m.elements.len() {
            m.flip_element(e);
        }
        let r = mesh_integrity_check(&m);
        assert!(r.orientation_consistent && !r.outward);
    }

    #[test]
    fn open_mesh_is_flagged() {
        let mut m = build_sphere_mesh(1.0, origin(), 1).unwrap();
        m.elements.pop();
        let r = mesh_integrity_check(&m);
        assert!(!r.closed && !r.is_ok());
    }

    #[test]
    fn mid_edge_nodes_are_parametric_midpoints() {
        let spec = ParametricSurfaceSpec {
            shape: SurfaceShape::Bowl { radius: 1.5 },
            center: Point3::new(0.0, 1.0, 0.0),
        };
        let (units, elements) = geodesic::geodesic_sphere(3);
        let m = build_parametric_mesh_frequency(&spec, 3).unwrap();
        for el in &elements {
            for k in 0..3 {
                let (a, b) = (el[k], el[(k + 1) % 3]);
                let mid = (units[a] + units[b]).normalize();
                assert_eq!(m.nodes[el[3 + k]], spec.map(&mid));
                let chord = (m.nodes[a] + m.nodes[b]) * 0.5;
                assert_ne!(m.nodes[el[3 + k]], chord);
            }
        }
    }

    #[test]
    fn degenerate_parametrization_is_rejected() {
        // z = cos^2(theta) has zero dz/dtheta at the equator, where the
        // azimuthal and polar tangents collapse onto one direction
        let spec = ParametricSurfaceSpec {
            shape: SurfaceShape::Axisymmetric {
                radius: 1.0,
                z_coeffs: vec![0.0, 0.0, 1.0],
            },
            center: origin(),
        };
        let r = build_parametric_mesh_frequency(&spec, 5);
        assert!(matches!(r, Err(Error::MeshQuality(_))), "{r:?}");
        assert!(build_sphere_mesh(-1.0, origin(), 0).is_err());
    }

    #[test]
    fn shape_functions_partition_unity() {
        for &(s, t) in &[(0.1, 0.2), (0.7, 0.05), (0.3, 0.3)] {
            let n = shape_functions(s, t);
            assert!((n.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            let (a, b) = shape_derivatives(s, t);
            assert!(a.iter().sum::<f64>().abs() < 1e-14);
            assert!(b.iter().sum::<f64>().abs() < 1e-14);
            // derivative check by central differences
            let h = 1e-6;
            let (np, nm) = (shape_functions(s + h, t), shape_functions(s - h, t));
            for i in 0..6 {
                assert!(((np[i] - nm[i]) / (2.0 * h) - a[i]).abs() < 1e-8);
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn counts_and_closure_hold(m in 1usize..7, a in 0.2f64..5.0, bowl in proptest::bool::ANY) {
            let shape = if bowl { SurfaceShape::Bowl { radius: a } } else { SurfaceShape::Sphere { radius: a } };
            let spec = ParametricSurfaceSpec { shape, center: Point3::new(0.3, -0.1, 0.2) };
            let mesh = build_parametric_mesh_frequency(&spec, m).unwrap();
            proptest::prop_assert_eq!(mesh.elements.len(), 20 * m * m);
            proptest::prop_assert_eq!(mesh.nodes.len(), 2 * mesh.elements.len() + 2);
            let r = mesh_integrity_check(&mesh);
            proptest::prop_assert!(r.normal_sum <= 1e-10 * r.area);
            proptest::prop_assert!(r.is_ok());
        }
    }
}
