//! Plain-text node/element files.
//!
//! ```text
//! <n_vertices> 2          <n_triangles> 3
//! <index> <x> <y>         <index> <v0> <v1> <v2>
//! ```
//!
//! Indices are 0-based and must appear in order. Extra trailing columns
//! (attributes, boundary markers) are ignored; boundary flags are always
//! recomputed from edge adjacency. Blank lines and `#` comments are skipped.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{cross, Point, TriMesh};
use crate::error::{Error, Result};
use crate::output::fmt_f64;

pub fn load_mesh(node_file: impl AsRef<Path>, element_file: impl AsRef<Path>) -> Result<TriMesh> {
    let (np, ep) = (node_file.as_ref(), element_file.as_ref());
    let nodes = fs::read_to_string(np).map_err(|e| Error::io(np, e))?;
    let elements = fs::read_to_string(ep).map_err(|e| Error::io(ep, e))?;
    read_mesh(
        &nodes,
        &np.display().to_string(),
        &elements,
        &ep.display().to_string(),
    )
}

pub fn save_mesh(
    mesh: &TriMesh,
    node_file: impl AsRef<Path>,
    element_file: impl AsRef<Path>,
) -> Result<()> {
    let (nodes, elements) = write_mesh(mesh);
    let (np, ep) = (node_file.as_ref(), element_file.as_ref());
    fs::write(np, nodes).map_err(|e| Error::io(np, e))?;
    fs::write(ep, elements).map_err(|e| Error::io(ep, e))?;
    Ok(())
}

/// Serializes a mesh to `(node_text, element_text)`.
pub fn write_mesh(mesh: &TriMesh) -> (String, String) {
    let mut nodes = format!("{} 2\n", mesh.n_vertices());
    for (i, p) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(nodes, "{i} {} {}", fmt_f64(p[0]), fmt_f64(p[1]));
    }
    let mut elements = format!("{} 3\n", mesh.n_elements());
    for (i, t) in mesh.triangles().iter().enumerate() {
        let _ = writeln!(elements, "{i} {} {} {}", t[0], t[1], t[2]);
    }
    (nodes, elements)
}

struct Lines<'a> {
    file: &'a str,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, file: &'a str) -> Self {
        Lines {
            file,
            inner: text.lines().enumerate(),
        }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::MeshFormat {
            file: self.file.to_string(),
            line,
            message: message.into(),
        }
    }

    /// Next non-empty, non-comment line as (1-based line number, tokens).
    fn next_record(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            let body = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = body.split_whitespace().collect();
            if !toks.is_empty() {
                return Some((i + 1, toks));
            }
        }
        None
    }

    fn header(&mut self, dim: usize) -> Result<usize> {
        let (line, toks) = self
            .next_record()
            .ok_or_else(|| self.err(1, "missing header"))?;
        if toks.len() < 2 {
            return Err(self.err(line, format!("header needs '<count> {dim}'")));
        }
        let count: usize = parse(toks[0]).map_err(|m| self.err(line, m))?;
        let d: usize = parse(toks[1]).map_err(|m| self.err(line, m))?;
        if d != dim {
            return Err(self.err(line, format!("expected {dim} in header, got {d}")));
        }
        Ok(count)
    }

    fn row(&mut self, k: usize, width: usize) -> Result<(usize, Vec<&'a str>)> {
        let (line, toks) = self
            .next_record()
            .ok_or_else(|| self.err(0, format!("unexpected end of file, expected record {k}")))?;
        if toks.len() < width {
            return Err(self.err(
                line,
                format!("expected {width} columns, found {}", toks.len()),
            ));
        }
        let idx: usize = parse(toks[0]).map_err(|m| self.err(line, m))?;
        if idx != k {
            return Err(self.err(line, format!("expected index {k}, found {idx}")));
        }
        Ok((line, toks))
    }
}

fn parse<T: std::str::FromStr>(tok: &str) -> std::result::Result<T, String> {
    tok.parse::<T>()
        .map_err(|_| format!("cannot parse '{tok}' as {}", std::any::type_name::<T>()))
}

/// Parses node and element text. `node_name`/`element_name` label errors.
pub fn read_mesh(
    node_text: &str,
    node_name: &str,
    element_text: &str,
    element_name: &str,
) -> Result<TriMesh> {
    let mut lines = Lines::new(node_text, node_name);
    let n = lines.header(2)?;
    let mut vertices: Vec<Point> = Vec::with_capacity(n);
    for k in 0..n {
        let (line, toks) = lines.row(k, 3)?;
        let x: f64 = parse(toks[1]).map_err(|m| lines.err(line, m))?;
        let y: f64 = parse(toks[2]).map_err(|m| lines.err(line, m))?;
        if !x.is_finite() || !y.is_finite() {
            return Err(lines.err(line, "non-finite coordinate"));
        }
        vertices.push([x, y]);
    }

    let mut lines = Lines::new(element_text, element_name);
    let m = lines.header(3)?;
    let mut triangles = Vec::with_capacity(m);
    for k in 0..m {
        let (line, toks) = lines.row(k, 4)?;
        let mut tri = [0usize; 3];
        for j in 0..3 {
            tri[j] = parse(toks[j + 1]).map_err(|msg| lines.err(line, msg))?;
            if tri[j] >= n {
                return Err(lines.err(
                    line,
                    format!("vertex index {} out of range (n_vertices = {n})", tri[j]),
                ));
            }
        }
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            return Err(lines.err(line, "degenerate triangle: repeated vertex index"));
        }
        let [a, b, c] = tri.map(|v| vertices[v]);
        if cross(a, b, c) == 0.0 {
            return Err(lines.err(line, "degenerate triangle: zero area"));
        }
        triangles.push(tri);
    }
    TriMesh::new(vertices, triangles)
}
