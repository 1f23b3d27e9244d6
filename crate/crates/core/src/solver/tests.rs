use std::f64::consts::PI;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::*;
use crate::mesh::{
    build_parametric_mesh_frequency, build_sphere_mesh, ParametricSurfaceSpec, SurfaceShape,
};
use crate::oracle::{
    potential_in_region, solve_modal_coefficients, AxisSource, CoreShellConfig, Region,
};
use crate::scenario::{core_shell_scenario, BoundaryKind, Medium, Numerics, Source, Surface};
use crate::special::TruncationOrder;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn medium(id: &str, k: Complex64, rho: f64, unbounded: bool) -> Medium {
    Medium {
        id: id.into(),
        k_rel: k,
        rho_rel: rho,
        unbounded,
    }
}

fn scenario(media: Vec<Medium>, surfaces: Vec<Surface>, sources: Vec<Source>) -> Scenario {
    Scenario {
        k_ref: 1.0,
        omega: 1.0,
        rho_ref: 1.0,
        media,
        surfaces,
        sources,
        numerics: Numerics::default(),
    }
}

fn unit_sphere(level: u32) -> crate::mesh::QuadraticTriangleMesh {
    build_sphere_mesh(1.0, Point3::zeros(), level).unwrap()
}

#[test]
fn identity_system() {
    let n = 4;
    let mut matrix = vec![c(0.0, 0.0); n * n];
    for i in 0..n {
        matrix[i * n + i] = c(1.0, 0.0);
    }
    let mut rhs = vec![c(0.0, 0.0); n];
    rhs[0] = c(1.0, 0.0);
    let sys = DenseComplexSystem {
        dim: n,
        matrix,
        rhs: rhs.clone(),
    };
    let (x, res, piv) = solve_dense(&sys, 1e-12).unwrap();
    assert_eq!(x, rhs);
    assert_eq!(res, 0.0);
    assert_eq!(piv, 1.0);
}

/// Gaussian elimination with partial pivoting, written out longhand.
fn naive_elimination(n: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut m: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            let mut r = a[i * n..(i + 1) * n].to_vec();
            r.push(b[i]);
            r
        })
        .collect();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))
            .unwrap();
        m.swap(col, p);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for j in col..=n {
                let v = m[col][j];
                m[row][j] -= f * v;
            }
        }
    }
    let mut x = vec![c(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut s = m[i][n];
        for j in i + 1..n {
            s -= m[i][j] * x[j];
        }
        x[i] = s / m[i][i];
    }
    x
}

#[test]
fn random_system_matches_elimination() {
    let n = 100;
    let mut rng = StdRng::seed_from_u64(7);
    let mut z = || c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    let mut matrix: Vec<Complex64> = (0..n * n).map(|_| z()).collect();
    for i in 0..n {
        matrix[i * n + i] += c(10.0, 0.0);
    }
    let rhs: Vec<Complex64> = (0..n).map(|_| z()).collect();
    let reference = naive_elimination(n, &matrix, &rhs);
    let sys = DenseComplexSystem {
        dim: n,
        matrix,
        rhs,
    };
    let (x, res, _) = solve_dense(&sys, 1e-12).unwrap();
    assert!(res < 1e-13, "{res}");
    let scale = reference.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (a, b) in x.iter().zip(&reference) {
        assert!((a - b).norm() < 1e-10 * scale);
    }
}

#[test]
fn singular_system_is_reported() {
    let n = 3;
    let matrix = vec![
        c(1.0, 0.0),
        c(2.0, 0.0),
        c(3.0, 0.0),
        c(1.0, 0.0),
        c(2.0, 0.0),
        c(3.0, 0.0),
        c(0.0, 1.0),
        c(1.0, 0.0),
        c(0.0, 0.0),
    ];
    let sys = DenseComplexSystem {
        dim: n,
        matrix,
        rhs: vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
    };
    let err = solve_dense(&sys, 1e-8).unwrap_err();
    assert!(matches!(err, Error::SingularSystem { .. }));
    assert!(err.to_string().contains("fictitious frequency"));
}

#[test]
fn unknown_counts_follow_boundary_conditions() {
    let cs = core_shell_scenario(&CoreShellConfig::validation_case(), 2).unwrap();
    let layout = UnknownLayout::new(&cs);
    assert_eq!(layout.dim, 2568);
    assert_eq!(layout.rows.len(), 2568);

    let bowl = build_parametric_mesh_frequency(
        &ParametricSurfaceSpec {
            shape: SurfaceShape::Bowl { radius: 1.0 },
            center: Point3::zeros(),
        },
        12,
    )
    .unwrap();
    let rigid = scenario(
        vec![medium("air", c(1.0, 0.0), 1.0, true)],
        vec![Surface::new(bowl, None, Some(0), BoundaryKind::Rigid)],
        vec![],
    );
    let layout = UnknownLayout::new(&rigid);
    assert_eq!(layout.dim, 5762);
    assert_eq!(layout.surfaces[0].dphi, None);

    let bubble = scenario(
        vec![medium("water", c(1.0, 0.0), 1.0, true)],
        vec![Surface::new(
            unit_sphere(1),
            None,
            Some(0),
            BoundaryKind::PressureRelease,
        )],
        vec![],
    );
    let layout = UnknownLayout::new(&bubble);
    assert_eq!(layout.dim, 162);
    assert_eq!(layout.surfaces[0].phi, None);
}

#[test]
fn source_term_closed_forms() {
    let mut s = scenario(
        vec![
            medium("a", c(1.0, 0.0), 1.0, true),
            medium("b", c(2.0, 0.0), 1.0, false),
        ],
        vec![],
        vec![Source {
            domain: 1,
            position: Point3::new(0.0, 0.0, 1.0),
            strength: c(1.0, 0.0),
        }],
    );
    assert_eq!(monopole_rhs(&s, 0, &Point3::zeros()), c(0.0, 0.0));

    s.k_ref = PI / 2.0;
    let v = monopole_rhs(&s, 1, &Point3::zeros());
    assert!((v - c(-1.0, 0.0)).norm() < 1e-15);
}

#[test]
fn close_source_pair_is_a_dipole() {
    let k = c(3.0, 0.2);
    let delta = 1e-5;
    let dir = Point3::new(0.0, 0.6, 0.8);
    let xs = Point3::new(0.1, -0.2, 1.35);
    let q = c(0.8, 0.6);
    let s = scenario(
        vec![medium("a", k, 1.0, true)],
        vec![],
        vec![
            Source {
                domain: 0,
                position: xs + dir * (delta / 2.0),
                strength: q,
            },
            Source {
                domain: 0,
                position: xs - dir * (delta / 2.0),
                strength: -q,
            },
        ],
    );
    for x0 in [
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(-0.3, 0.4, -2.0),
        Point3::new(0.1, -0.2, 3.0),
    ] {
        let d = x0 - xs;
        let r = d.norm();
        let iu = Complex64::i();
        // source-gradient of e^{ikr}/r along dir
        let dg = (iu * k * r).exp() * (iu * k * r - 1.0) / (r * r);
        let dipole = -q * delta * dg * dir.dot(&d) / r;
        let v = monopole_rhs(&s, 0, &x0);
        assert!((v - dipole).norm() < 1e-4 * dipole.norm(), "{v} {dipole}");
    }
}

fn cavity(level: u32, k: Complex64) -> Scenario {
    scenario(
        vec![medium("cavity", k, 1.0, false)],
        vec![Surface::new(
            unit_sphere(level),
            Some(0),
            None,
            BoundaryKind::Rigid,
        )],
        vec![],
    )
}

#[test]
fn constant_potential_is_annihilated_for_laplace() {
    for level in [1, 2] {
        let s = cavity(level, c(0.0, 0.0));
        let (layout, sys) = assemble_system(&s).unwrap();
        let ones = vec![c(1.0, 0.0); layout.dim];
        let ax = sys.apply(&ones);
        for (i, v) in ax.iter().enumerate() {
            let row_norm = sys.row(i).iter().map(|a| a.norm()).sum::<f64>();
            assert!(v.norm() < 1e-12 * row_norm, "level {level} row {i}: {v}");
        }
    }
}

/// `int dH` over a sphere of radius `a` for a collocation point on it, by
/// symmetry a one-dimensional integral in the polar angle from `x0`.
fn sphere_delta_h_integral(k: Complex64, a: f64) -> Complex64 {
    let n = 20000;
    let h = PI / n as f64;
    let f = |t: f64| {
        let r = 2.0 * a * (t / 2.0).sin();
        crate::kernel::delta_h(k, r, r * r / (2.0 * a)) * (2.0 * PI * a * a * t.sin())
    };
    let mut sum = f(0.0) + f(PI);
    for i in 1..n {
        sum += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

#[test]
fn constant_potential_residual_converges_for_complex_k() {
    let k = c(0.8, 0.6);
    let exact = sphere_delta_h_integral(k, 1.0);
    let mut errs = Vec::new();
    for level in [1, 2] {
        let s = cavity(level, k);
        let (layout, sys) = assemble_system(&s).unwrap();
        let ax = sys.apply(&vec![c(1.0, 0.0); layout.dim]);
        errs.push(ax.iter().map(|v| (v - exact).norm()).fold(0.0, f64::max) / exact.norm());
    }
    assert!(errs[1] < errs[0] / 8.0, "{errs:?}");
}

#[test]
fn rigid_sphere_matches_heavy_shell_limit() {
    let k = c(1.0, 0.0);
    let q = c(1.0, 0.0);
    let s = scenario(
        vec![medium("air", k, 1.0, true)],
        vec![Surface::new(
            unit_sphere(2),
            None,
            Some(0),
            BoundaryKind::Rigid,
        )],
        vec![Source {
            domain: 0,
            position: Point3::new(0.0, 0.0, 3.0),
            strength: q,
        }],
    );
    let (sol, report) = solve_scenario(&s).unwrap();
    assert!(report.residual < 1e-10);
    assert!(sol.surfaces[0].dphi_dn.iter().all(|v| v.norm() == 0.0));

    let cfg = CoreShellConfig {
        a_core: 0.5,
        a_shell: 1.0,
        k: [k; 3],
        rho: [1.0, 1e6, 1e6],
        sources: vec![AxisSource {
            region: Region::External,
            z: 3.0,
            strength: q,
        }],
    };
    let co = solve_modal_coefficients(&cfg, TruncationOrder::new(40)).unwrap();
    let mut max_err: f64 = 0.0;
    let mut max_ref: f64 = 0.0;
    for (p, phi) in s.surfaces[0].mesh.nodes.iter().zip(&sol.surfaces[0].phi) {
        let r = p.norm();
        let theta = (p.z / r).clamp(-1.0, 1.0).acos();
        let (reference, _) = potential_in_region(&cfg, &co, Region::External, r, theta).unwrap();
        max_err = max_err.max((phi - reference).norm());
        max_ref = max_ref.max(reference.norm());
    }
    assert!(max_err < 1e-3 * max_ref, "{}", max_err / max_ref);
}

#[test]
fn non_finite_integrand_names_the_element() {
    let s = cavity(1, c(f64::NAN, 0.0));
    match assemble_system(&s) {
        Err(Error::AssemblyFailure { surface, row, .. }) => {
            assert_eq!(surface, "#0");
            assert!(row < 162);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn per_domain_rows_stack_into_the_full_system() {
    let s = core_shell_scenario(&CoreShellConfig::validation_case(), 1).unwrap();
    let parts: Vec<DomainRows> = (0..3)
        .map(|d| assemble_domain_equations(&s, d).unwrap())
        .collect();
    assert_eq!(parts[0].keys.len(), 162);
    assert_eq!(parts[1].keys.len(), 324);
    assert_eq!(parts[2].keys.len(), 162);
    let coupled = couple_interfaces(&s, parts).unwrap();
    let (_, full) = assemble_system(&s).unwrap();
    assert_eq!(coupled, full);

    let (x, res, _) = solve_dense(&full, 1e-8).unwrap();
    assert!(res < 1e-10, "{res}");
    assert_eq!(x.len(), 648);
}

#[test]
fn missing_rows_are_rejected() {
    let s = core_shell_scenario(&CoreShellConfig::validation_case(), 1).unwrap();
    let parts = vec![assemble_domain_equations(&s, 0).unwrap()];
    assert!(matches!(
        couple_interfaces(&s, parts),
        Err(Error::Validation(_))
    ));
}

#[test]
fn scenario_without_surfaces_has_no_rows() {
    let s = scenario(
        vec![medium("air", c(1.0, 0.0), 1.0, true)],
        vec![],
        vec![Source {
            domain: 0,
            position: Point3::zeros(),
            strength: c(1.0, 0.0),
        }],
    );
    let rows = assemble_domain_equations(&s, 0).unwrap();
    assert!(rows.keys.is_empty() && rows.matrix.is_empty());
    let (sol, report) = solve_scenario(&s).unwrap();
    assert_eq!(report.dimension, 0);
    assert!(sol.surfaces.is_empty());
}

#[test]
fn interface_values_on_the_outer_side_scale_with_density() {
    let s = core_shell_scenario(&CoreShellConfig::validation_case(), 1).unwrap();
    let (sol, _) = solve_scenario(&s).unwrap();
    let inner = sol.phi_on_side(&s, 0, Side::Inner);
    let outer = sol.phi_on_side(&s, 0, Side::Outer);
    for (a, b) in inner.iter().zip(&outer) {
        // rho_shell phi_shell = rho_ext phi_ext
        assert!((a * 5.0 - b).norm() < 1e-12 * b.norm().max(1e-300));
    }
}
