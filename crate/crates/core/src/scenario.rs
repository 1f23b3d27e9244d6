//! Problem description: fluid media, closed surfaces separating them, point
//! monopoles and numerical settings.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::{
    build_sphere_mesh, mesh_integrity_check, quadrature_rule, QuadraticTriangleMesh,
};
use crate::oracle::{AxisSource, CoreShellConfig, Region};
use crate::Point3;

/// A fluid region. Wavenumber and density are relative to the scenario's
/// reference values.
#[derive(Debug, Clone, PartialEq)]
pub struct Medium {
    pub id: String,
    pub k_rel: Complex64,
    pub rho_rel: f64,
    pub unbounded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    /// Fluid on both sides; `rho phi` and the normal derivative are continuous.
    Interface,
    /// Zero normal velocity.
    Rigid,
    /// Zero pressure.
    PressureRelease,
}

/// Which side of a surface a domain lies on. Stored normals point from the
/// inner side to the outer side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Inner,
    Outer,
}

#[derive(Debug, Clone)]
pub struct Surface {
    pub mesh: QuadraticTriangleMesh,
    pub inner: Option<usize>,
    pub outer: Option<usize>,
    pub kind: BoundaryKind,
    volume: f64,
}

impl Surface {
    pub fn new(
        mesh: QuadraticTriangleMesh,
        inner: Option<usize>,
        outer: Option<usize>,
        kind: BoundaryKind,
    ) -> Self {
        let rule = quadrature_rule(4).expect("degree 4 is supported");
        let volume = mesh.volume(&rule);
        Surface {
            mesh,
            inner,
            outer,
            kind,
            volume,
        }
    }

    /// Enclosed volume (positive for outward normals).
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn has_phi(&self) -> bool {
        self.kind != BoundaryKind::PressureRelease
    }

    pub fn has_dphi(&self) -> bool {
        self.kind != BoundaryKind::Rigid
    }

    pub fn side_of(&self, domain: usize) -> Option<Side> {
        if self.inner == Some(domain) {
            Some(Side::Inner)
        } else if self.outer == Some(domain) {
            Some(Side::Outer)
        } else {
            None
        }
    }

    /// Fluid sides in the fixed order inner, outer.
    pub fn fluid_sides(&self) -> Vec<(Side, usize)> {
        let mut v = Vec::with_capacity(2);
        if let Some(d) = self.inner {
            v.push((Side::Inner, d));
        }
        if let Some(d) = self.outer {
            v.push((Side::Outer, d));
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Source {
    pub domain: usize,
    pub position: Point3,
    pub strength: Complex64,
}

/// Quadrature and evaluation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Numerics {
    /// Gauss degree on elements well separated from the collocation point.
    pub far_degree: usize,
    /// Gauss degree on the collocation point's own elements and close ones.
    pub near_degree: usize,
    /// Subdivision depth applied to elements containing the collocation node.
    pub self_subdivision: u32,
    /// A (sub)element closer than this many diameters is subdivided.
    pub near_ratio: f64,
    /// Cap on adaptive subdivision depth for close elements.
    pub near_max_depth: u32,
    /// Far elements are split until `|k| h` per sub-triangle is at most this.
    pub max_phase_per_subtriangle: f64,
    /// Evaluation points closer to a surface than this many local element
    /// diameters are masked.
    pub near_surface_threshold: f64,
    /// Largest accepted relative residual of the dense solve.
    pub residual_tolerance: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            far_degree: 6,
            near_degree: 8,
            self_subdivision: 2,
            near_ratio: 1.5,
            near_max_depth: 5,
            max_phase_per_subtriangle: 2.0,
            near_surface_threshold: 0.2,
            residual_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    /// Reference wavenumber; medium wavenumbers are `k_ref * k_rel`.
    pub k_ref: f64,
    pub omega: f64,
    pub rho_ref: f64,
    pub media: Vec<Medium>,
    pub surfaces: Vec<Surface>,
    pub sources: Vec<Source>,
    pub numerics: Numerics,
}

/// Solid angle subtended by a flat triangle at the origin.
fn triangle_solid_angle(a: Point3, b: Point3, c: Point3) -> f64 {
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let num = a.dot(&b.cross(&c));
    let den = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
    2.0 * num.atan2(den)
}

impl Scenario {
    pub fn wavenumber(&self, domain: usize) -> Complex64 {
        self.media[domain].k_rel * self.k_ref
    }

    pub fn density(&self, domain: usize) -> f64 {
        self.media[domain].rho_rel * self.rho_ref
    }

    pub fn unbounded_domain(&self) -> Option<usize> {
        self.media.iter().position(|m| m.unbounded)
    }

    pub fn domain_index(&self, id: &str) -> Option<usize> {
        self.media.iter().position(|m| m.id == id)
    }

    /// Ratio `phi_side / phi_stored` on a surface: 1 on the stored side,
    /// `rho_inner / rho_outer` on the outer side of an interface.
    pub fn side_factor(&self, surface: usize, side: Side) -> f64 {
        let s = &self.surfaces[surface];
        match (s.kind, side) {
            (BoundaryKind::Interface, Side::Outer) => {
                self.density(s.inner.expect("interface has an inner domain"))
                    / self.density(s.outer.expect("interface has an outer domain"))
            }
            _ => 1.0,
        }
    }

    /// Surfaces with a fluid side in `domain`, with that side.
    pub fn bounding_surfaces(&self, domain: usize) -> Vec<(usize, Side)> {
        self.surfaces
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.side_of(domain).map(|side| (i, side)))
            .collect()
    }

    /// Winding number of a surface about `x`, from exact solid angles of the
    /// flat sub-triangles of each element.
    pub fn winding_number(&self, surface: usize, x: &Point3) -> f64 {
        let m = &self.surfaces[surface].mesh;
        let mut omega = 0.0;
        for el in &m.elements {
            let p = |i: usize| m.nodes[el[i]] - x;
            let (c0, c1, c2, m01, m12, m20) = (p(0), p(1), p(2), p(3), p(4), p(5));
            omega += triangle_solid_angle(c0, m01, m20)
                + triangle_solid_angle(m01, c1, m12)
                + triangle_solid_angle(m20, m12, c2)
                + triangle_solid_angle(m01, m12, m20);
        }
        omega / (4.0 * std::f64::consts::PI)
    }

    /// Domain containing `x`: the inner domain of the smallest enclosing
    /// surface, or the unbounded domain if no surface encloses it.
    pub fn locate(&self, x: &Point3) -> Result<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (i, s) in self.surfaces.iter().enumerate() {
            if self.winding_number(i, x) > 0.5 && best.is_none_or(|(v, _)| s.volume() < v) {
                best = Some((s.volume(), i));
            }
        }
        match best {
            Some((_, i)) => self.surfaces[i].inner.ok_or(Error::Location(*x)),
            None => self.unbounded_domain().ok_or(Error::Location(*x)),
        }
    }

    /// Distance from `x` to the nearest node of any surface, with the diameter
    /// of the largest element touching that node.
    pub fn nearest_surface_node(&self, x: &Point3) -> Option<(f64, f64)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for (si, s) in self.surfaces.iter().enumerate() {
            for (ni, p) in s.mesh.nodes.iter().enumerate() {
                let d = (p - x).norm();
                if best.is_none_or(|b| d < b.0) {
                    best = Some((d, si, ni));
                }
            }
        }
        best.map(|(d, si, ni)| {
            let m = &self.surfaces[si].mesh;
            let h = m
                .elements
                .iter()
                .enumerate()
                .filter(|(_, el)| el.contains(&ni))
                .map(|(e, _)| m.element_diameter(e))
                .fold(0.0, f64::max);
            (d, h)
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if !(self.k_ref >= 0.0 && self.k_ref.is_finite()) {
            return bad(format!(
                "reference wavenumber must be finite and non-negative, got {}",
                self.k_ref
            ));
        }
        if !(self.omega > 0.0 && self.rho_ref > 0.0) {
            return bad("omega and the reference density must be positive".into());
        }
        if self.media.iter().filter(|m| m.unbounded).count() > 1 {
            return bad("at most one medium may be unbounded".into());
        }
        for (i, m) in self.media.iter().enumerate() {
            if !(m.rho_rel > 0.0 && m.rho_rel.is_finite()) {
                return bad(format!("media.{}: density must be positive", m.id));
            }
            if !(m.k_rel.re.is_finite() && m.k_rel.im.is_finite()) {
                return bad(format!("media.{}: wavenumber must be finite", m.id));
            }
            if self.media[..i].iter().any(|o| o.id == m.id) {
                return bad(format!("media.{}: duplicate medium id", m.id));
            }
        }
        let n = self.media.len();
        for (i, s) in self.surfaces.iter().enumerate() {
            let name = if s.mesh.surface_id.is_empty() {
                format!("surfaces[{i}]")
            } else {
                format!("surfaces[{i}] ({})", s.mesh.surface_id)
            };
            if s.inner.is_some_and(|d| d >= n) || s.outer.is_some_and(|d| d >= n) {
                return bad(format!("{name}: unknown domain"));
            }
            match s.kind {
                BoundaryKind::Interface => match (s.inner, s.outer) {
                    (Some(a), Some(b)) if a != b => {}
                    (Some(_), Some(_)) => {
                        return bad(format!("{name}: interface joins a domain to itself"))
                    }
                    _ => {
                        return bad(format!(
                            "{name}: an interface needs both an inner and an outer domain"
                        ))
                    }
                },
                _ => {
                    if s.inner.is_some() == s.outer.is_some() {
                        return bad(format!(
                            "{name}: a {:?} surface must have fluid on exactly one side",
                            s.kind
                        ));
                    }
                }
            }
            if s.inner.is_some_and(|d| self.media[d].unbounded) {
                return bad(format!(
                    "{name}: the unbounded medium cannot be enclosed by a surface"
                ));
            }
            let report = mesh_integrity_check(&s.mesh);
            if !report.is_ok() {
                return bad(format!(
                    "{name}: mesh integrity: {}",
                    report.issues.join("; ")
                ));
            }
        }
        for (i, src) in self.sources.iter().enumerate() {
            if src.domain >= n {
                return bad(format!("sources[{i}]: unknown domain"));
            }
            if let Some((d, h)) = self.nearest_surface_node(&src.position) {
                if d <= 1e-9 * h.max(1e-300) {
                    return bad(format!("sources[{i}]: coincides with a surface node"));
                }
            }
            let found = self.locate(&src.position)?;
            if found != src.domain {
                return bad(format!(
                    "sources[{i}]: position lies in medium '{}', declared '{}'",
                    self.media[found].id, self.media[src.domain].id
                ));
            }
        }
        Ok(())
    }
}

/// Concentric core-shell problem as a scenario: media external (unbounded),
/// shell, core; surfaces shell then core, both spheres at subdivision `level`.
pub fn core_shell_scenario(cfg: &CoreShellConfig, level: u32) -> Result<Scenario> {
    cfg.validate()?;
    let o = Point3::zeros();
    let media = [
        ("external", Region::External),
        ("shell", Region::Shell),
        ("core", Region::Core),
    ]
    .iter()
    .map(|&(id, r)| Medium {
        id: id.into(),
        k_rel: cfg.wavenumber(r),
        rho_rel: cfg.density(r),
        unbounded: r == Region::External,
    })
    .collect();
    let shell = build_sphere_mesh(cfg.a_shell, o, level)?.with_id("shell");
    let core = build_sphere_mesh(cfg.a_core, o, level)?.with_id("core");
    let sources = cfg
        .sources
        .iter()
        .map(|s| Source {
            domain: match s.region {
                Region::External => 0,
                Region::Shell => 1,
                Region::Core => 2,
            },
            position: Point3::new(0.0, 0.0, s.z),
            strength: s.strength,
        })
        .collect();
    Ok(Scenario {
        k_ref: 1.0,
        omega: 1.0,
        rho_ref: 1.0,
        media,
        surfaces: vec![
            Surface::new(shell, Some(1), Some(0), BoundaryKind::Interface),
            Surface::new(core, Some(2), Some(1), BoundaryKind::Interface),
        ],
        sources,
        numerics: Numerics::default(),
    })
}

/// Inverse of [`core_shell_scenario`]: recognizes two concentric spherical
/// interfaces about the origin with sources on the z-axis. Returns the
/// analytic configuration and the domain index of each region.
pub fn as_core_shell(s: &Scenario) -> Result<(CoreShellConfig, [usize; 3])> {
    let fail = |m: &str| {
        Err(Error::Validation(format!(
            "not a concentric core-shell scenario: {m}"
        )))
    };
    if s.surfaces.len() != 2 || s.surfaces.iter().any(|x| x.kind != BoundaryKind::Interface) {
        return fail("expected exactly two interface surfaces");
    }
    let mut radii = [0.0; 2];
    for (i, surf) in s.surfaces.iter().enumerate() {
        let r0 = surf.mesh.nodes[0].norm();
        if surf
            .mesh
            .nodes
            .iter()
            .any(|p| (p.norm() - r0).abs() > 1e-9 * r0)
        {
            return fail("surfaces must be spheres centred at the origin");
        }
        radii[i] = r0;
    }
    let (outer, inner) = if radii[0] > radii[1] { (0, 1) } else { (1, 0) };
    let (so, si) = (&s.surfaces[outer], &s.surfaces[inner]);
    let (Some(ext), Some(shell), Some(core)) = (so.outer, so.inner, si.inner) else {
        return fail("missing domain");
    };
    if si.outer != Some(shell) || !s.media[ext].unbounded {
        return fail("domains are not nested external/shell/core");
    }
    let ids = [ext, shell, core];
    let k = ids.map(|d| s.wavenumber(d));
    let rho = ids.map(|d| s.density(d));
    let mut sources = Vec::with_capacity(s.sources.len());
    for src in &s.sources {
        let p = src.position;
        if p.x.abs() + p.y.abs() > 1e-12 * p.norm().max(1.0) {
            return fail("sources must lie on the z-axis");
        }
        let region = match ids.iter().position(|&d| d == src.domain) {
            Some(0) => Region::External,
            Some(1) => Region::Shell,
            Some(2) => Region::Core,
            _ => return fail("source in an unknown domain"),
        };
        sources.push(AxisSource {
            region,
            z: p.z,
            strength: src.strength,
        });
    }
    let cfg = CoreShellConfig {
        a_core: radii[inner],
        a_shell: radii[outer],
        k,
        rho,
        sources,
    };
    cfg.validate()?;
    Ok((cfg, ids))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_sphere_mesh;

    pub(crate) fn medium(id: &str, k: f64, rho: f64, unbounded: bool) -> Medium {
        Medium {
            id: id.into(),
            k_rel: Complex64::new(k, 0.0),
            rho_rel: rho,
            unbounded,
        }
    }

    fn two_spheres() -> Scenario {
        let o = Point3::zeros();
        Scenario {
            k_ref: 1.0,
            omega: 1.0,
            rho_ref: 1.0,
            media: vec![
                medium("ex", 1.0, 1.0, true),
                medium("shell", 1.5, 5.0, false),
                medium("core", 0.8, 2.0, false),
            ],
            surfaces: vec![
                Surface::new(
                    build_sphere_mesh(2.0, o, 1).unwrap(),
                    Some(1),
                    Some(0),
                    BoundaryKind::Interface,
                ),
                Surface::new(
                    build_sphere_mesh(1.0, o, 1).unwrap(),
                    Some(2),
                    Some(1),
                    BoundaryKind::Interface,
                ),
            ],
            sources: vec![Source {
                domain: 0,
                position: Point3::new(0.0, 0.0, 3.0),
                strength: Complex64::new(1.0, 0.0),
            }],
            numerics: Numerics::default(),
        }
    }

    #[test]
    fn locates_nested_domains() {
        let s = two_spheres();
        assert_eq!(s.locate(&Point3::new(0.0, 0.0, 3.0)).unwrap(), 0);
        assert_eq!(s.locate(&Point3::new(1.5, 0.2, 0.0)).unwrap(), 1);
        assert_eq!(s.locate(&Point3::new(0.1, 0.2, -0.3)).unwrap(), 2);
        assert!((s.winding_number(0, &Point3::new(0.0, 0.3, 0.0)) - 1.0).abs() < 1e-12);
        assert!(s.winding_number(0, &Point3::new(5.0, 0.3, 0.0)).abs() < 1e-12);
    }

    #[test]
    fn side_factor_carries_density_ratio() {
        let s = two_spheres();
        assert_eq!(s.side_factor(0, Side::Inner), 1.0);
        assert!((s.side_factor(0, Side::Outer) - 5.0).abs() < 1e-15);
        assert!((s.side_factor(1, Side::Outer) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn core_shell_round_trip() {
        let cfg = CoreShellConfig::validation_case();
        let s = core_shell_scenario(&cfg, 1).unwrap();
        s.validate().unwrap();
        let (back, ids) = as_core_shell(&s).unwrap();
        assert_eq!(ids, [0, 1, 2]);
        assert!((back.a_shell - 2.0).abs() < 1e-12 && (back.a_core - 1.0).abs() < 1e-12);
        assert_eq!(back.k, cfg.k);
        assert_eq!(back.sources, cfg.sources);

        let mut t = s.clone();
        t.sources[0].position.x = 0.1;
        assert!(as_core_shell(&t).is_err());
        let mut t = s.clone();
        t.surfaces.pop();
        assert!(as_core_shell(&t).is_err());
    }

    #[test]
    fn validation_catches_bad_topology() {
        let s = two_spheres();
        s.validate().unwrap();

        let mut t = s.clone();
        t.sources[0].domain = 2;
        assert!(matches!(t.validate(), Err(Error::Validation(m)) if m.contains("declared")));

        let mut t = s.clone();
        t.surfaces[1].kind = BoundaryKind::Rigid;
        assert!(t.validate().is_err());

        let mut t = s.clone();
        t.surfaces[0].outer = Some(1);
        assert!(t.validate().is_err());

        let mut t = s.clone();
        t.media[1].unbounded = true;
        assert!(t.validate().is_err());

        let mut t = s.clone();
        t.sources[0].position = t.surfaces[0].mesh.nodes[7];
        assert!(t.validate().is_err());
    }
}
