//! Plain-text mesh format.
//!
//! ```text
//! quadratic_triangle_mesh <node count> <element count>
//! surface_id <id, rest of line>
//! <index> <x> <y> <z>                      one line per node
//! <index> <n0> <n1> <n2> <n3> <n4> <n5>    one line per element
//! ```
//!
//! Element nodes follow the crate convention: corners counterclockwise seen
//! from the outer medium, then mid-edge nodes of edges (0,1), (1,2), (2,0).
//! Coordinates are written with 17 significant digits so a write/read cycle
//! reproduces every bit.

use std::io::{BufRead, Write};

use super::QuadraticTriangleMesh;
use crate::error::{Error, Result};
use crate::{fmt_f64, Point3};

const MAGIC: &str = "quadratic_triangle_mesh";

pub fn write_mesh(mesh: &QuadraticTriangleMesh, mut out: impl Write) -> Result<()> {
    writeln!(out, "{MAGIC} {} {}", mesh.nodes.len(), mesh.elements.len())?;
    writeln!(out, "surface_id {}", mesh.surface_id)?;
    for (i, p) in mesh.nodes.iter().enumerate() {
        writeln!(
            out,
            "{i} {} {} {}",
            fmt_f64(p.x),
            fmt_f64(p.y),
            fmt_f64(p.z)
        )?;
    }
    for (i, e) in mesh.elements.iter().enumerate() {
        writeln!(
            out,
            "{i} {} {} {} {} {} {}",
            e[0], e[1], e[2], e[3], e[4], e[5]
        )?;
    }
    Ok(())
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::MeshFormat {
        line,
        message: message.into(),
    }
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| format_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| format_err(line, format!("cannot parse {what} from '{tok}'")))
}

pub fn read_mesh(input: impl BufRead) -> Result<QuadraticTriangleMesh> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, l)) => Ok((n, l?)),
            None => Err(format_err(
                0,
                format!("unexpected end of file, expected {what}"),
            )),
        }
    };

    let (ln, header) = next("header")?;
    let mut tok = header.split_whitespace();
    if tok.next() != Some(MAGIC) {
        return Err(format_err(ln, format!("header must start with '{MAGIC}'")));
    }
    let n_nodes: usize = parse(tok.next(), ln, "node count")?;
    let n_elems: usize = parse(tok.next(), ln, "element count")?;

    let (ln, id_line) = next("surface_id line")?;
    let surface_id = id_line
        .strip_prefix("surface_id")
        .ok_or_else(|| format_err(ln, "expected 'surface_id'"))?
        .trim()
        .to_string();

    let mut nodes = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        let (ln, l) = next("node line")?;
        let mut tok = l.split_whitespace();
        let idx: usize = parse(tok.next(), ln, "node index")?;
        if idx != i {
            return Err(format_err(ln, format!("node index {idx}, expected {i}")));
        }
        let x = parse(tok.next(), ln, "x")?;
        let y = parse(tok.next(), ln, "y")?;
        let z = parse(tok.next(), ln, "z")?;
        nodes.push(Point3::new(x, y, z));
    }

    let mut elements = Vec::with_capacity(n_elems);
    for i in 0..n_elems {
        let (ln, l) = next("element line")?;
        let mut tok = l.split_whitespace();
        let idx: usize = parse(tok.next(), ln, "element index")?;
        if idx != i {
            return Err(format_err(ln, format!("element index {idx}, expected {i}")));
        }
        let mut el = [0usize; 6];
        for v in &mut el {
            *v = parse(tok.next(), ln, "node reference")?;
            if *v >= n_nodes {
                return Err(format_err(ln, format!("node reference {v} out of range")));
            }
        }
        elements.push(el);
    }

    Ok(QuadraticTriangleMesh {
        nodes,
        elements,
        surface_id,
    })
}
