//! Commands: run, validate, converge, mesh-check.

use std::f64::consts::PI;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use nsbem::field::{
    beam_angle, dipole_correlation, far_field_pattern, focal_metrics, pressure_grid_slice,
    time_snapshot, write_grid_csv, write_grid_vtk, write_radar_csv, FieldEvaluator, GridSlice,
};
use nsbem::mesh::mesh_integrity_check;
use nsbem::oracle::{
    eval_potential_exact_source, solve_modal_coefficients, CoreShellConfig, ModalCoefficients,
};
use nsbem::scenario::{as_core_shell, Scenario};
use nsbem::solver::{solve_scenario, SolutionField, SolveReport};
use nsbem::special::TruncationOrder;
use nsbem::{fmt_f64, Complex64, Point3};

use crate::config::{grid_plane, plane_axes, FocalSpec, ScenarioFile, TrackSpec};

/// Summary of one invocation. `files` lists every file written, in order.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub scenario: String,
    pub command: String,
    pub level: Option<u32>,
    pub unknowns: usize,
    pub nodes: usize,
    pub assembly_seconds: f64,
    pub solve_seconds: f64,
    pub residual: f64,
    pub pivot_ratio: f64,
    pub warnings: Vec<String>,
    pub errors: Vec<String>,
    pub metrics: Vec<Metric>,
    pub oracle: Vec<OracleError>,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub output: String,
    pub name: String,
    pub value: f64,
}

/// BEM vs analytic solution on one track or probe. Relative errors are
/// `max |phi - phi_ref| / max |phi_ref|` and the same ratio of RMS values;
/// `0/0` counts as an exact match.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleError {
    pub output: String,
    pub points: usize,
    pub max_relative: f64,
    pub rms_relative: f64,
}

impl RunReport {
    pub fn ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn metric(&self, output: &str, name: &str) -> Option<f64> {
        self.metrics
            .iter()
            .find(|m| m.output == output && m.name == name)
            .map(|m| m.value)
    }

    /// Largest relative error over all tracks and probes.
    pub fn max_oracle_error(&self) -> Option<f64> {
        self.oracle.iter().map(|o| o.max_relative).reduce(f64::max)
    }

    fn absorb(&mut self, s: &SolveReport) {
        self.unknowns = s.dimension;
        self.assembly_seconds = s.assembly_seconds;
        self.solve_seconds = s.solve_seconds;
        self.residual = s.residual;
        self.pivot_ratio = s.pivot_ratio;
        self.warnings.extend(s.warnings.iter().cloned());
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario          {}", self.scenario)?;
        writeln!(f, "command           {}", self.command)?;
        if let Some(l) = self.level {
            writeln!(f, "level override    {l}")?;
        }
        writeln!(f, "surface nodes     {}", self.nodes)?;
        writeln!(f, "unknowns          {}", self.unknowns)?;
        writeln!(f, "assembly seconds  {:.3}", self.assembly_seconds)?;
        writeln!(f, "solve seconds     {:.3}", self.solve_seconds)?;
        writeln!(f, "residual          {:e}", self.residual)?;
        writeln!(f, "pivot ratio       {:e}", self.pivot_ratio)?;
        for o in &self.oracle {
            writeln!(
                f,
                "oracle {:<12} max {:.4e}  rms {:.4e}  ({} points)",
                o.output, o.max_relative, o.rms_relative, o.points
            )?;
        }
        for m in &self.metrics {
            writeln!(f, "metric {} {} = {}", m.output, m.name, m.value)?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        writeln!(f, "files:")?;
        for p in &self.files {
            writeln!(f, "  {}", p.display())?;
        }
        Ok(())
    }
}

/// Output directory that records every file it creates.
struct Sink<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl<'a> Sink<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Sink {
            dir,
            files: Vec::new(),
        })
    }

    fn write(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> Result<()>,
    ) -> Result<()> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        body(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush()
            .with_context(|| format!("writing {}", path.display()))?;
        self.files.push(PathBuf::from(name));
        Ok(())
    }
}

struct Oracle {
    cfg: CoreShellConfig,
    coeffs: ModalCoefficients,
}

impl Oracle {
    fn new(scenario: &Scenario, order: usize) -> Result<Self> {
        let (cfg, _) = as_core_shell(scenario)?;
        let coeffs = solve_modal_coefficients(&cfg, TruncationOrder::new(order))?;
        Ok(Oracle { cfg, coeffs })
    }

    fn potential(&self, x: &Point3) -> Result<Complex64> {
        let r = x.norm();
        let theta = if r > 0.0 {
            (x.z / r).clamp(-1.0, 1.0).acos()
        } else {
            0.0
        };
        Ok(eval_potential_exact_source(
            &self.cfg,
            &self.coeffs,
            r,
            theta,
        )?)
    }
}

fn relative(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn oracle_error(output: &str, pairs: &[(Complex64, Complex64)]) -> OracleError {
    let n = pairs.len().max(1) as f64;
    let dmax = pairs
        .iter()
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let rmax = pairs.iter().map(|(_, b)| b.norm()).fold(0.0, f64::max);
    let drms = (pairs.iter().map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / n).sqrt();
    let rrms = (pairs.iter().map(|(_, b)| b.norm_sqr()).sum::<f64>() / n).sqrt();
    OracleError {
        output: output.to_string(),
        points: pairs.len(),
        max_relative: relative(dmax, rmax),
        rms_relative: relative(drms, rrms),
    }
}

/// Points of a track: `radius (cos t a + sin t b)`, `t = 2 pi i / samples`.
pub fn track_points(t: &TrackSpec) -> Result<Vec<(f64, Point3)>> {
    let (a, b) = plane_axes(&t.plane)?;
    Ok((0..t.samples)
        .map(|i| {
            let th = 2.0 * PI * i as f64 / t.samples as f64;
            (th, (a * th.cos() + b * th.sin()) * t.radius)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Run,
    /// Requires an oracle-compatible scenario and skips grids and radar.
    Validate,
}

struct Solved {
    scenario: Scenario,
    solution: SolutionField,
    report: RunReport,
}

fn solve(file: &ScenarioFile, level: Option<u32>, command: &str) -> Result<Solved> {
    let scenario = file.build(level)?;
    let mut report = RunReport {
        scenario: file.scenario.name.clone(),
        command: command.to_string(),
        level,
        nodes: scenario.surfaces.iter().map(|s| s.mesh.nodes.len()).sum(),
        ..Default::default()
    };
    let (solution, sr) =
        solve_scenario(&scenario).context("solving the boundary integral system")?;
    report.absorb(&sr);
    Ok(Solved {
        scenario,
        solution,
        report,
    })
}

/// Runs one scenario and writes all requested outputs plus `report.txt` into
/// `out`. Failures after the solve are recorded in the report; the report is
/// still written.
pub fn run(file: &ScenarioFile, out: &Path, mode: Mode, level: Option<u32>) -> Result<RunReport> {
    let command = match mode {
        Mode::Run => "run",
        Mode::Validate => "validate",
    };
    if mode == Mode::Validate {
        let s = file.build(level)?;
        as_core_shell(&s).context("validate needs an oracle-compatible scenario")?;
    }
    let mut sink = Sink::new(out)?;
    let Solved {
        scenario,
        solution,
        mut report,
    } = solve(file, level, command)?;
    if let Err(e) = emit(file, &scenario, &solution, mode, &mut sink, &mut report) {
        report.errors.push(format!("{e:#}"));
    }
    finish(&mut sink, &mut report)?;
    Ok(report)
}

fn finish(sink: &mut Sink<'_>, report: &mut RunReport) -> Result<()> {
    report.files = sink.files.clone();
    report.files.push(PathBuf::from("report.txt"));
    let text = report.to_string();
    sink.write("report.txt", |w| Ok(w.write_all(text.as_bytes())?))?;
    Ok(())
}

fn emit(
    file: &ScenarioFile,
    scenario: &Scenario,
    solution: &SolutionField,
    mode: Mode,
    sink: &mut Sink<'_>,
    report: &mut RunReport,
) -> Result<()> {
    let ev = FieldEvaluator::new(scenario, solution)?;
    let oracle = match Oracle::new(scenario, file.validation.order.unwrap_or(40)) {
        Ok(o) => Some(o),
        Err(e) if mode == Mode::Validate => return Err(e),
        Err(_) => None,
    };

    let mut oracle_rows = Vec::new();
    for t in &file.outputs.tracks {
        let pts = track_points(t)?;
        let mut pairs = Vec::new();
        let mut rows = Vec::with_capacity(pts.len());
        for (th, x) in &pts {
            let bem = match ev.evaluate(x) {
                Ok(s) => Some(s.phi),
                Err(
                    nsbem::Error::NearBoundary { .. }
                    | nsbem::Error::Location(_)
                    | nsbem::Error::CoincidentSource(_),
                ) => None,
                Err(e) => return Err(e).with_context(|| format!("track '{}'", t.name)),
            };
            let reference = oracle.as_ref().map(|o| o.potential(x)).transpose()?;
            if let (Some(a), Some(b)) = (bem, reference) {
                pairs.push((a, b));
            }
            rows.push((*th, *x, bem, reference));
        }
        sink.write(&format!("track_{}.csv", t.name), |w| {
            write!(w, "theta_rad,x,y,z,re_phi,im_phi,abs_phi,masked")?;
            if oracle.is_some() {
                write!(w, ",re_phi_ref,im_phi_ref,abs_phi_ref")?;
            }
            writeln!(w)?;
            let nan = Complex64::new(f64::NAN, f64::NAN);
            for (th, x, bem, reference) in &rows {
                let p = bem.unwrap_or(nan);
                write!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    fmt_f64(*th),
                    fmt_f64(x.x),
                    fmt_f64(x.y),
                    fmt_f64(x.z),
                    fmt_f64(p.re),
                    fmt_f64(p.im),
                    fmt_f64(p.norm()),
                    u8::from(bem.is_none())
                )?;
                if let Some(r) = reference {
                    write!(
                        w,
                        ",{},{},{}",
                        fmt_f64(r.re),
                        fmt_f64(r.im),
                        fmt_f64(r.norm())
                    )?;
                }
                writeln!(w)?;
            }
            Ok(())
        })?;
        if oracle.is_some() {
            oracle_rows.push(oracle_error(&t.name, &pairs));
        }
    }

    if let Some(o) = &oracle {
        for (i, p) in file.validation.probes.iter().enumerate() {
            let x = Point3::new(p.0[0], p.0[1], p.0[2]);
            let bem = ev
                .evaluate(&x)
                .with_context(|| format!("validation.probes[{i}]"))?
                .phi;
            oracle_rows.push(oracle_error(
                &format!("probe{i}"),
                &[(bem, o.potential(&x)?)],
            ));
        }
        sink.write("oracle_errors.csv", |w| {
            writeln!(w, "output,points,max_relative_error,rms_relative_error")?;
            for r in &oracle_rows {
                writeln!(
                    w,
                    "{},{},{},{}",
                    r.output,
                    r.points,
                    fmt_f64(r.max_relative),
                    fmt_f64(r.rms_relative)
                )?;
            }
            Ok(())
        })?;
        report.oracle = oracle_rows;
    }
    if mode == Mode::Validate {
        return Ok(());
    }

    let mut slices: Vec<(String, GridSlice)> = Vec::new();
    for g in &file.outputs.grids {
        let plane = grid_plane(g)?;
        let slice = pressure_grid_slice(&ev, &plane, g.normalization.into())
            .with_context(|| format!("grid '{}'", g.name))?;
        sink.write(&format!("grid_{}.csv", g.name), |w| {
            Ok(write_grid_csv(w, &slice)?)
        })?;
        if g.vtk {
            sink.write(&format!("grid_{}.vtk", g.name), |w| {
                Ok(write_grid_vtk(w, &slice)?)
            })?;
        }
        let pressures: Vec<Complex64> = slice
            .points
            .iter()
            .map(|p| {
                p.sample
                    .map_or(Complex64::new(f64::NAN, f64::NAN), |s| s.pressure)
            })
            .collect();
        for (k, &phase) in g.snapshots.iter().enumerate() {
            let values = time_snapshot(&pressures, phase);
            sink.write(&format!("grid_{}_snapshot{k}.csv", g.name), |w| {
                writeln!(w, "x,y,z,phase_rad,p_t,masked")?;
                for (p, v) in slice.points.iter().zip(&values) {
                    writeln!(
                        w,
                        "{},{},{},{},{},{}",
                        fmt_f64(p.position.x),
                        fmt_f64(p.position.y),
                        fmt_f64(p.position.z),
                        fmt_f64(phase),
                        fmt_f64(*v),
                        u8::from(p.sample.is_err())
                    )?;
                }
                Ok(())
            })?;
        }
        let max = slice
            .points
            .iter()
            .map(|p| p.magnitude)
            .filter(|m| !m.is_nan())
            .fold(f64::NAN, f64::max);
        report.metrics.push(metric(&g.name, "max_abs_p", max));
        report.metrics.push(metric(
            &g.name,
            "masked_points",
            (slice.points.len() - slice.evaluated()) as f64,
        ));
        slices.push((g.name.clone(), slice));
    }

    for r in &file.outputs.radar {
        let axes = plane_axes(&r.plane)?;
        let pattern = far_field_pattern(&ev, r.radius, axes, r.angles, r.subtract_incident)
            .with_context(|| format!("radar '{}'", r.name))?;
        sink.write(&format!("radar_{}.csv", r.name), |w| {
            Ok(write_radar_csv(w, &pattern)?)
        })?;
        report.metrics.push(metric(
            &r.name,
            "beam_angle_deg",
            beam_angle(&pattern).to_degrees(),
        ));
        report.metrics.push(metric(
            &r.name,
            "dipole_correlation",
            dipole_correlation(&pattern),
        ));
        let peak = pattern.magnitudes.iter().cloned().fold(0.0, f64::max);
        report.metrics.push(metric(&r.name, "max_abs_p", peak));
    }

    for f in &file.outputs.focal {
        let (_, slice) = slices
            .iter()
            .find(|(n, _)| *n == f.grid)
            .ok_or_else(|| anyhow!("focal '{}': grid '{}' not evaluated", f.name, f.grid))?;
        let (value, along, across) = focal_on_grid(slice, f)?;
        report.metrics.push(metric(&f.name, "max_abs_p", value));
        report
            .metrics
            .push(metric(&f.name, &format!("position_{}", f.axis), along));
        report
            .metrics
            .push(metric(&f.name, "transverse_offset", across));
    }

    sink.write("metrics.csv", |w| {
        writeln!(w, "output,metric,value")?;
        for m in &report.metrics {
            writeln!(w, "{},{},{}", m.output, m.name, fmt_f64(m.value))?;
        }
        Ok(())
    })?;
    Ok(())
}

fn metric(output: &str, name: &str, value: f64) -> Metric {
    Metric {
        output: output.to_string(),
        name: name.to_string(),
        value,
    }
}

/// Maximum of the grid magnitude, refined along `axis` on the grid line
/// through the discrete maximum. Returns the value, its coordinate along the
/// axis and the position of that line along the other grid edge.
fn focal_on_grid(slice: &GridSlice, f: &FocalSpec) -> Result<(f64, f64, f64)> {
    let ax = match f.axis.as_str() {
        "x" => 0,
        "y" => 1,
        _ => 2,
    };
    let g = &slice.plane;
    let along_u = g.u[ax] != 0.0 && (0..3).all(|j| j == ax || g.u[j] == 0.0);
    let along_v = g.v[ax] != 0.0 && (0..3).all(|j| j == ax || g.v[j] == 0.0);
    if !along_u && !along_v {
        bail!(
            "focal '{}': grid '{}' has no edge along {}",
            f.name,
            f.grid,
            f.axis
        );
    }
    let best = (0..slice.points.len())
        .filter(|&i| !slice.points[i].magnitude.is_nan())
        .max_by(|&a, &b| {
            slice.points[a]
                .magnitude
                .total_cmp(&slice.points[b].magnitude)
        })
        .ok_or_else(|| {
            anyhow!(
                "focal '{}': every point of grid '{}' is masked",
                f.name,
                f.grid
            )
        })?;
    let (bi, bj) = (best % g.nu, best / g.nu);
    let line: Vec<usize> = if along_u {
        (0..g.nu).map(|i| bj * g.nu + i).collect()
    } else {
        (0..g.nv).map(|j| j * g.nu + bi).collect()
    };
    let mut samples: Vec<(f64, f64)> = line
        .iter()
        .map(|&i| (slice.points[i].position[ax], slice.points[i].magnitude))
        .collect();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = focal_metrics(&samples).ok_or_else(|| anyhow!("focal '{}': no samples", f.name))?;
    let p = slice.points[best].position;
    let across = if along_u {
        (p - g.origin).dot(&g.v.normalize())
    } else {
        (p - g.origin).dot(&g.u.normalize())
    };
    let offset = if along_u {
        g.origin + g.v.normalize() * across
    } else {
        g.origin + g.u.normalize() * across
    };
    let transverse = (0..3)
        .filter(|&j| j != ax)
        .map(|j| offset[j].abs())
        .fold(0.0, f64::max);
    Ok((m.max_value, m.position, transverse))
}

/// One row of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: u32,
    pub nodes: usize,
    pub max_relative_error: f64,
    pub probe_relative_error: f64,
    pub wall_seconds: f64,
}

/// Solves the scenario at each level and compares with the analytic
/// solution. Writes `convergence.csv` and `report.txt`; errors if the
/// maximum error does not decrease strictly from level to level.
pub fn converge(
    file: &ScenarioFile,
    levels: &[u32],
    out: &Path,
) -> Result<(Vec<ConvergenceRow>, RunReport)> {
    let mut sink = Sink::new(out)?;
    let mut rows = Vec::new();
    let mut report = RunReport {
        scenario: file.scenario.name.clone(),
        command: "converge".into(),
        ..Default::default()
    };
    for &level in levels {
        let t0 = Instant::now();
        let s = file.build(Some(level))?;
        as_core_shell(&s).context("converge needs an oracle-compatible scenario")?;
        let mut solved = solve(file, Some(level), "converge")?;
        oracle_errors(file, &solved.scenario, &solved.solution, &mut solved.report)?;
        let probe = solved
            .report
            .oracle
            .iter()
            .find(|o| o.output.starts_with("probe"))
            .map_or(f64::NAN, |o| o.max_relative);
        let row = ConvergenceRow {
            level,
            nodes: solved.report.nodes,
            max_relative_error: solved.report.max_oracle_error().unwrap_or(f64::NAN),
            probe_relative_error: probe,
            wall_seconds: t0.elapsed().as_secs_f64(),
        };
        report.warnings.extend(
            solved
                .report
                .warnings
                .iter()
                .map(|w| format!("level {level}: {w}")),
        );
        report.unknowns = solved.report.unknowns;
        report.nodes = solved.report.nodes;
        rows.push(row);
    }
    sink.write("convergence.csv", |w| {
        writeln!(
            w,
            "level,nodes,max_relative_error,probe_relative_error,wall_seconds"
        )?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{:.3}",
                r.level,
                r.nodes,
                fmt_f64(r.max_relative_error),
                fmt_f64(r.probe_relative_error),
                r.wall_seconds
            )?;
        }
        Ok(())
    })?;
    for pair in rows.windows(2) {
        if !(pair[1].max_relative_error < pair[0].max_relative_error) {
            report.errors.push(format!(
                "error does not decrease from level {} ({:e}) to level {} ({:e})",
                pair[0].level,
                pair[0].max_relative_error,
                pair[1].level,
                pair[1].max_relative_error
            ));
        }
    }
    for r in &rows {
        report.metrics.push(metric(
            &format!("level{}", r.level),
            "max_relative_error",
            r.max_relative_error,
        ));
        report.metrics.push(metric(
            &format!("level{}", r.level),
            "probe_relative_error",
            r.probe_relative_error,
        ));
    }
    finish(&mut sink, &mut report)?;
    Ok((rows, report))
}

/// Oracle comparison without writing track files.
fn oracle_errors(
    file: &ScenarioFile,
    scenario: &Scenario,
    solution: &SolutionField,
    report: &mut RunReport,
) -> Result<()> {
    let ev = FieldEvaluator::new(scenario, solution)?;
    let oracle = Oracle::new(scenario, file.validation.order.unwrap_or(40))?;
    for t in &file.outputs.tracks {
        let mut pairs = Vec::new();
        for (_, x) in track_points(t)? {
            match ev.evaluate(&x) {
                Ok(s) => pairs.push((s.phi, oracle.potential(&x)?)),
                Err(nsbem::Error::NearBoundary { .. }) => {}
                Err(e) => return Err(e).with_context(|| format!("track '{}'", t.name)),
            }
        }
        report.oracle.push(oracle_error(&t.name, &pairs));
    }
    for (i, p) in file.validation.probes.iter().enumerate() {
        let x = Point3::new(p.0[0], p.0[1], p.0[2]);
        let bem = ev
            .evaluate(&x)
            .with_context(|| format!("validation.probes[{i}]"))?
            .phi;
        report.oracle.push(oracle_error(
            &format!("probe{i}"),
            &[(bem, oracle.potential(&x)?)],
        ));
    }
    Ok(())
}

/// Builds every surface and checks its integrity. Returns the printed report
/// and whether all surfaces passed.
pub fn mesh_check(file: &ScenarioFile, level: Option<u32>) -> Result<(String, bool)> {
    let scenario = file.build(level)?;
    let mut text = String::new();
    let mut ok = true;
    for s in &scenario.surfaces {
        let r = mesh_integrity_check(&s.mesh);
        ok &= r.is_ok();
        text.push_str(&format!("[surface {}]\n{r}\n", s.mesh.surface_id));
    }
    if scenario.surfaces.is_empty() {
        text.push_str("no surfaces\n");
    }
    Ok((text, ok))
}
