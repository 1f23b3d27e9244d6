//! Scenario files (TOML).
//!
//! Lengths are in units of the reference length named in `[scenario]`;
//! `k_ref` is the reference wavenumber in the same units, so `k_ref = 10`
//! with unit drop radius reads as `k a = 10`. Complex numbers are `[re, im]`.
//!
//! ```toml
//! [scenario]
//! name = "example"
//! reference_length = "a"
//! k_ref = 1.0
//! omega = 1.0
//! rho_ref = 1.0
//!
//! [[media]]
//! id = "air"
//! k = [1.0, 0.0]
//! rho = 1.0
//! unbounded = true
//!
//! [[surfaces]]
//! id = "ball"
//! shape = "sphere"          # sphere | bowl | axisymmetric | mesh_file
//! radius = 1.0
//! level = 2                 # or frequency = 12
//! outer = "air"
//! bc = "rigid"              # rigid | pressure_release; omit for an interface
//!
//! [[sources]]
//! medium = "air"
//! position = [0.0, 0.0, 3.0]
//! q = [1.0, 0.0]
//! ```
//!
//! Outputs are listed under `[[outputs.tracks]]`, `[[outputs.grids]]`,
//! `[[outputs.radar]]` and `[[outputs.focal]]`; see the bundled scenarios.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use nsbem::field::{GridPlane, Normalization};
use nsbem::mesh::{
    build_parametric_mesh, build_parametric_mesh_frequency, read_mesh, ParametricSurfaceSpec,
    QuadraticTriangleMesh, SurfaceShape,
};
use nsbem::scenario::{BoundaryKind, Medium, Numerics, Scenario, Source, Surface};
use nsbem::{Complex64, Point3};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scenario: Header,
    #[serde(default)]
    pub media: Vec<MediumSpec>,
    #[serde(default)]
    pub surfaces: Vec<SurfaceSpec>,
    #[serde(default)]
    pub sources: Vec<SourceSpec>,
    #[serde(default)]
    pub numerics: NumericsSpec,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub validation: ValidationSpec,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Label of the length unit, e.g. "a_core".
    pub reference_length: String,
    pub k_ref: f64,
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(default = "one")]
    pub rho_ref: f64,
    /// Size class: "small", "medium" or "large".
    #[serde(default = "small")]
    pub size: String,
}

fn one() -> f64 {
    1.0
}

fn small() -> String {
    "small".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    pub id: String,
    /// Wavenumber relative to `k_ref`.
    #[serde(deserialize_with = "exact")]
    pub k: [f64; 2],
    /// Density relative to `rho_ref`.
    pub rho: f64,
    #[serde(default)]
    pub unbounded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Sphere,
    Bowl,
    Axisymmetric,
    MeshFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcTag {
    Rigid,
    PressureRelease,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    #[serde(default)]
    pub id: String,
    pub shape: ShapeKind,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default, deserialize_with = "exact")]
    pub center: [f64; 3],
    /// Coefficients of `z = sum c_i cos^i(theta)` for axisymmetric shapes.
    #[serde(default)]
    pub z_coeffs: Vec<f64>,
    /// Mesh file, relative to the scenario file.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub level: Option<u32>,
    #[serde(default)]
    pub frequency: Option<usize>,
    #[serde(default)]
    pub inner: Option<String>,
    #[serde(default)]
    pub outer: Option<String>,
    #[serde(default)]
    pub bc: Option<BcTag>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub medium: String,
    #[serde(deserialize_with = "exact")]
    pub position: [f64; 3],
    #[serde(deserialize_with = "exact")]
    pub q: [f64; 2],
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSpec {
    pub far_degree: Option<usize>,
    pub near_degree: Option<usize>,
    pub self_subdivision: Option<u32>,
    pub near_ratio: Option<f64>,
    pub near_max_depth: Option<u32>,
    pub max_phase_per_subtriangle: Option<f64>,
    pub near_surface_threshold: Option<f64>,
    pub residual_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub tracks: Vec<TrackSpec>,
    #[serde(default)]
    pub grids: Vec<GridSpec>,
    #[serde(default)]
    pub radar: Vec<RadarSpec>,
    #[serde(default)]
    pub focal: Vec<FocalSpec>,
}

/// Circle about the origin in a coordinate plane. Angles are measured from
/// the first axis of the plane toward the second.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSpec {
    pub name: String,
    pub radius: f64,
    pub samples: usize,
    #[serde(default = "plane_zx")]
    pub plane: String,
}

fn plane_zx() -> String {
    "zx".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationSpec {
    #[default]
    MonopoleReference,
    None,
}

impl From<NormalizationSpec> for Normalization {
    fn from(n: NormalizationSpec) -> Self {
        match n {
            NormalizationSpec::MonopoleReference => Normalization::MonopoleReference,
            NormalizationSpec::None => Normalization::None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub name: String,
    #[serde(deserialize_with = "exact")]
    pub origin: [f64; 3],
    #[serde(deserialize_with = "exact")]
    pub u: [f64; 3],
    #[serde(deserialize_with = "exact")]
    pub v: [f64; 3],
    #[serde(deserialize_with = "exact")]
    pub resolution: [usize; 2],
    #[serde(default)]
    pub normalization: NormalizationSpec,
    #[serde(default)]
    pub vtk: bool,
    /// Phases `omega t` (radians) of instantaneous-pressure frames.
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarSpec {
    pub name: String,
    pub radius: f64,
    #[serde(default = "plane_zx")]
    pub plane: String,
    pub angles: usize,
    #[serde(default = "yes")]
    pub subtract_incident: bool,
}

fn yes() -> bool {
    true
}

/// Focal search: maximum of the normalized pressure magnitude over a grid
/// output, located along `axis`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FocalSpec {
    pub name: String,
    pub grid: String,
    pub axis: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSpec {
    /// Extra comparison points for the analytic check.
    #[serde(default)]
    pub probes: Vec<Probe>,
    /// Truncation order of the reference series (default 40).
    #[serde(default)]
    pub order: Option<usize>,
}

/// Point given as `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct Probe(#[serde(deserialize_with = "exact")] pub [f64; 3]);

/// Fixed-length array that rejects extra or missing elements.
fn exact<'de, D, T, const N: usize>(d: D) -> std::result::Result<[T; N], D::Error>
where
    D: serde::Deserializer<'de>,
    T: Deserialize<'de>,
{
    let v: Vec<T> = Vec::deserialize(d)?;
    let n = v.len();
    v.try_into().map_err(|_| {
        let what = if N == 2 {
            "a two-element array ([re, im] for complex numbers)".to_string()
        } else {
            format!("a {N}-element array")
        };
        serde::de::Error::custom(format!("expected {what}, got {n} elements"))
    })
}

fn complex(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

fn point(v: [f64; 3]) -> Point3 {
    Point3::new(v[0], v[1], v[2])
}

/// Unit vectors of a coordinate plane named by two axis letters, e.g. "zx".
pub fn plane_axes(name: &str) -> Result<(Point3, Point3)> {
    let axis = |c: char| match c {
        'x' => Ok(Point3::x()),
        'y' => Ok(Point3::y()),
        'z' => Ok(Point3::z()),
        _ => Err(anyhow!("plane '{name}': axes must be x, y or z")),
    };
    let cs: Vec<char> = name.chars().collect();
    if cs.len() != 2 || cs[0] == cs[1] {
        bail!("plane '{name}' must name two distinct axes, e.g. \"zx\"");
    }
    Ok((axis(cs[0])?, axis(cs[1])?))
}

pub fn load(path: &Path) -> Result<ScenarioFile> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut f = parse(&text).with_context(|| format!("in {}", path.display()))?;
    f.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(f)
}

pub fn parse(text: &str) -> Result<ScenarioFile> {
    let f: ScenarioFile = toml::from_str(text).map_err(|e| anyhow!("{e}"))?;
    f.check_outputs()?;
    Ok(f)
}

impl ScenarioFile {
    fn check_outputs(&self) -> Result<()> {
        let o = &self.outputs;
        let mut names: Vec<&str> = o
            .tracks
            .iter()
            .map(|t| t.name.as_str())
            .chain(o.grids.iter().map(|g| g.name.as_str()))
            .chain(o.radar.iter().map(|r| r.name.as_str()))
            .chain(o.focal.iter().map(|f| f.name.as_str()))
            .collect();
        for (i, n) in names.iter().enumerate() {
            if n.is_empty()
                || !n
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                bail!("outputs: name '{n}' must be non-empty and use only letters, digits, '_' or '-'");
            }
            if names[..i].contains(n) {
                bail!("outputs: duplicate output name '{n}'");
            }
        }
        names.clear();
        for (i, t) in o.tracks.iter().enumerate() {
            plane_axes(&t.plane).with_context(|| format!("outputs.tracks[{i}].plane"))?;
            if !(t.radius > 0.0) || t.samples == 0 {
                bail!("outputs.tracks[{i}]: radius must be positive and samples at least 1");
            }
        }
        for (i, r) in o.radar.iter().enumerate() {
            plane_axes(&r.plane).with_context(|| format!("outputs.radar[{i}].plane"))?;
        }
        for (i, f) in o.focal.iter().enumerate() {
            if !o.grids.iter().any(|g| g.name == f.grid) {
                bail!("outputs.focal[{i}].grid: no grid output named '{}'", f.grid);
            }
            if !matches!(f.axis.as_str(), "x" | "y" | "z") {
                bail!("outputs.focal[{i}].axis: expected \"x\", \"y\" or \"z\"");
            }
        }
        for (i, g) in o.grids.iter().enumerate() {
            grid_plane(g).with_context(|| format!("outputs.grids[{i}]"))?;
        }
        Ok(())
    }

    fn domain(&self, id: &str, field: &str) -> Result<usize> {
        self.media
            .iter()
            .position(|m| m.id == id)
            .ok_or_else(|| anyhow!("{field}: unknown medium '{id}'"))
    }

    fn surface_mesh(
        &self,
        i: usize,
        s: &SurfaceSpec,
        level: Option<u32>,
    ) -> Result<QuadraticTriangleMesh> {
        let field = format!("surfaces[{i}]");
        if let ShapeKind::MeshFile = s.shape {
            let p = s
                .path
                .as_ref()
                .ok_or_else(|| anyhow!("{field}.path: required for shape = \"mesh_file\""))?;
            let full = self.base_dir.join(p);
            let file = std::fs::File::open(&full)
                .with_context(|| format!("{field}.path: opening {}", full.display()))?;
            return read_mesh(std::io::BufReader::new(file))
                .with_context(|| format!("{field}.path: {}", full.display()));
        }
        let radius = s
            .radius
            .ok_or_else(|| anyhow!("{field}.radius: required for this shape"))?;
        let shape = match s.shape {
            ShapeKind::Sphere => SurfaceShape::Sphere { radius },
            ShapeKind::Bowl => SurfaceShape::Bowl { radius },
            ShapeKind::Axisymmetric => SurfaceShape::Axisymmetric {
                radius,
                z_coeffs: s.z_coeffs.clone(),
            },
            ShapeKind::MeshFile => unreachable!(),
        };
        let spec = ParametricSurfaceSpec {
            shape,
            center: point(s.center),
        };
        let mesh = match (level.or(s.level), s.frequency) {
            (Some(l), None) => build_parametric_mesh(&spec, l),
            (None, Some(m)) => build_parametric_mesh_frequency(&spec, m),
            (Some(l), Some(_)) if level.is_some() => build_parametric_mesh(&spec, l),
            _ => bail!("{field}: give exactly one of level or frequency"),
        };
        mesh.with_context(|| field.clone())
    }

    /// Builds the scenario; `level` overrides the subdivision of every
    /// parametric surface.
    pub fn build(&self, level: Option<u32>) -> Result<Scenario> {
        if self.media.is_empty() {
            bail!("media: at least one medium is required");
        }
        let media = self
            .media
            .iter()
            .map(|m| Medium {
                id: m.id.clone(),
                k_rel: complex(m.k),
                rho_rel: m.rho,
                unbounded: m.unbounded,
            })
            .collect();
        let mut surfaces = Vec::with_capacity(self.surfaces.len());
        for (i, s) in self.surfaces.iter().enumerate() {
            let field = format!("surfaces[{i}]");
            let inner = s
                .inner
                .as_deref()
                .map(|d| self.domain(d, &format!("{field}.inner")))
                .transpose()?;
            let outer = s
                .outer
                .as_deref()
                .map(|d| self.domain(d, &format!("{field}.outer")))
                .transpose()?;
            let kind = match s.bc {
                None => BoundaryKind::Interface,
                Some(BcTag::Rigid) => BoundaryKind::Rigid,
                Some(BcTag::PressureRelease) => BoundaryKind::PressureRelease,
            };
            if s.bc.is_some() && inner.is_some() && outer.is_some() {
                bail!("{field}: a surface with bc = \"{:?}\" cannot also be an interface (give only inner or outer)", kind);
            }
            let id = if s.id.is_empty() {
                format!("surface{i}")
            } else {
                s.id.clone()
            };
            let mesh = self.surface_mesh(i, s, level)?.with_id(id);
            surfaces.push(Surface::new(mesh, inner, outer, kind));
        }
        let mut sources = Vec::with_capacity(self.sources.len());
        for (i, s) in self.sources.iter().enumerate() {
            sources.push(Source {
                domain: self.domain(&s.medium, &format!("sources[{i}].medium"))?,
                position: point(s.position),
                strength: complex(s.q),
            });
        }
        let d = Numerics::default();
        let n = &self.numerics;
        let numerics = Numerics {
            far_degree: n.far_degree.unwrap_or(d.far_degree),
            near_degree: n.near_degree.unwrap_or(d.near_degree),
            self_subdivision: n.self_subdivision.unwrap_or(d.self_subdivision),
            near_ratio: n.near_ratio.unwrap_or(d.near_ratio),
            near_max_depth: n.near_max_depth.unwrap_or(d.near_max_depth),
            max_phase_per_subtriangle: n
                .max_phase_per_subtriangle
                .unwrap_or(d.max_phase_per_subtriangle),
            near_surface_threshold: n.near_surface_threshold.unwrap_or(d.near_surface_threshold),
            residual_tolerance: n.residual_tolerance.unwrap_or(d.residual_tolerance),
        };
        let h = &self.scenario;
        let scenario = Scenario {
            k_ref: h.k_ref,
            omega: h.omega,
            rho_ref: h.rho_ref,
            media,
            surfaces,
            sources,
            numerics,
        };
        for (i, s) in scenario.sources.iter().enumerate() {
            let declared = &scenario.media[s.domain].id;
            match scenario.locate(&s.position) {
                Ok(d) if d == s.domain => {}
                Ok(d) => bail!(
                    "sources[{i}].position: point lies in medium '{}', not in declared medium '{declared}'",
                    scenario.media[d].id
                ),
                Err(_) => bail!("sources[{i}].position: point is not inside any fluid (declared medium '{declared}')"),
            }
        }
        scenario.validate()?;
        Ok(scenario)
    }
}

pub fn grid_plane(g: &GridSpec) -> Result<GridPlane> {
    let plane = GridPlane {
        origin: point(g.origin),
        u: point(g.u),
        v: point(g.v),
        nu: g.resolution[0],
        nv: g.resolution[1],
    };
    plane.validate()?;
    Ok(plane)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[scenario]
name = "t"
reference_length = "a"
k_ref = 1.0

[[media]]
id = "air"
k = [1.0, 0.0]
rho = 1.0
unbounded = true

[[surfaces]]
shape = "sphere"
radius = 1.0
level = 1
outer = "air"
bc = "rigid"

[[sources]]
medium = "air"
position = [0.0, 0.0, 3.0]
q = [1.0, 0.0]
"#;

    #[test]
    fn minimal_file_builds() {
        let f = parse(MINIMAL).unwrap();
        let s = f.build(None).unwrap();
        assert_eq!(s.surfaces[0].mesh.nodes.len(), 162);
        assert_eq!(s.surfaces[0].kind, BoundaryKind::Rigid);
        assert_eq!(f.build(Some(2)).unwrap().surfaces[0].mesh.nodes.len(), 642);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let bad = MINIMAL.replace("q = [1.0, 0.0]", "q = 1.0");
        let e = format!("{:#}", parse(&bad).unwrap_err());
        assert!(e.contains("line"), "{e}");

        let bad = MINIMAL.replace("q = [1.0, 0.0]", "q = [1.0, 0.0, 2.0]");
        let e = format!("{:#}", parse(&bad).unwrap_err());
        assert!(e.contains("line") && e.contains("[re, im]"), "{e}");

        let bad = MINIMAL.replace("medium = \"air\"", "medium = \"water\"");
        let e = format!("{:#}", parse(&bad).unwrap().build(None).unwrap_err());
        assert!(
            e.contains("sources[0].medium") && e.contains("water"),
            "{e}"
        );

        let bad = MINIMAL.replace("radius = 1.0\nlevel", "radius = 1.0\nlevle");
        assert!(parse(&bad).is_err());

        let bad = MINIMAL.replace("outer = \"air\"", "outer = \"air\"\ninner = \"air\"");
        let e = format!("{:#}", parse(&bad).unwrap().build(None).unwrap_err());
        assert!(e.contains("surfaces[0]"), "{e}");

        let bad = MINIMAL.replace("position = [0.0, 0.0, 3.0]", "position = [0.0, 0.0, 0.5]");
        let e = format!("{:#}", parse(&bad).unwrap().build(None).unwrap_err());
        assert!(e.contains("sources[0]"), "{e}");
    }

    #[test]
    fn plane_names() {
        let (a, b) = plane_axes("zx").unwrap();
        assert_eq!((a, b), (Point3::z(), Point3::x()));
        assert!(plane_axes("xx").is_err());
        assert!(plane_axes("xq").is_err());
    }
}
