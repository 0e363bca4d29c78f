//! Conforming P1 triangulations of the computational domain.
//!
//! A [`TriMesh`] is validated once at construction and immutable afterwards:
//! every triangle is counter-clockwise with positive area, boundary flags are
//! derived from edge adjacency, and per-element areas and centroids are cached.

mod generate;
mod io;
mod shape;

use std::collections::HashMap;

pub use generate::generate_domain;
pub use io::{load_mesh, read_mesh, save_mesh, write_mesh};
pub use shape::ShapeSpec;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Twice the signed area of the triangle (a, b, c).
#[inline]
pub fn cross(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Signed shoelace area of a closed polygon.
pub fn shoelace(polygon: &[Point]) -> f64 {
    let n = polygon.len();
    let mut acc = 0.0;
    for i in 0..n {
        let p = polygon[i];
        let q = polygon[(i + 1) % n];
        acc += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_vertex: Vec<bool>,
    element_area: Vec<f64>,
    element_centroid: Vec<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshMetrics {
    pub total_area: f64,
    pub diameter: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl TriMesh {
    /// Validates and builds a mesh. Clockwise triangles are reoriented;
    /// zero-area triangles, out-of-range indices, duplicate vertices and
    /// non-manifold edges are rejected.
    pub fn new(vertices: Vec<Point>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 || triangles.is_empty() {
            return Err(Error::InvalidMesh(
                "need at least 3 vertices and 1 triangle".into(),
            ));
        }
        if let Some(i) = vertices
            .iter()
            .position(|p| !p[0].is_finite() || !p[1].is_finite())
        {
            return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
        }
        check_duplicates(&vertices)?;

        let scale = bbox_extent(&vertices);
        let mut element_area = Vec::with_capacity(triangles.len());
        let mut element_centroid = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= n {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {t} references vertex {v} but there are only {n}"
                    )));
                }
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let mut twice = cross(a, b, c);
            if twice.abs() <= 1e-14 * scale * scale {
                return Err(Error::InvalidMesh(format!("triangle {t} is degenerate")));
            }
            if twice < 0.0 {
                tri.swap(1, 2);
                twice = -twice;
            }
            element_area.push(0.5 * twice);
            element_centroid.push([(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]);
        }

        let mut used = vec![false; n];
        triangles.iter().flatten().for_each(|&v| used[v] = true);
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!(
                "vertex {v} is not used by any triangle"
            )));
        }

        let mut boundary_vertex = vec![false; n];
        for ((a, b), count) in edge_counts(&triangles) {
            match count {
                1 => {
                    boundary_vertex[a] = true;
                    boundary_vertex[b] = true;
                }
                2 => {}
                _ => {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({a}, {b}) is shared by {count} triangles"
                    )))
                }
            }
        }

        Ok(TriMesh {
            vertices,
            triangles,
            boundary_vertex,
            element_area,
            element_centroid,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_vertex(&self) -> &[bool] {
        &self.boundary_vertex
    }

    pub fn element_area(&self) -> &[f64] {
        &self.element_area
    }

    pub fn element_centroid(&self) -> &[Point] {
        &self.element_centroid
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_interior(&self) -> usize {
        self.boundary_vertex.iter().filter(|b| !**b).count()
    }

    pub fn total_area(&self) -> f64 {
        self.element_area.iter().sum()
    }

    pub fn min_element_area(&self) -> f64 {
        self.element_area.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_element_area(&self) -> f64 {
        self.element_area.iter().copied().fold(0.0, f64::max)
    }

    /// Longest edge of element `e`.
    pub fn element_diameter(&self, e: usize) -> f64 {
        let [a, b, c] = self.triangles[e].map(|v| self.vertices[v]);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    /// Undirected edges with the number of triangles sharing each one,
    /// keyed with the smaller vertex index first.
    pub fn edges(&self) -> Vec<((usize, usize), usize)> {
        let mut edges: Vec<_> = edge_counts(&self.triangles).into_iter().collect();
        edges.sort_unstable();
        edges
    }

    /// Boundary edges directed as they appear in their (counter-clockwise) triangle.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let counts = edge_counts(&self.triangles);
        let mut out = Vec::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if counts[&(a.min(b), a.max(b))] == 1 {
                    out.push((a, b));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Closed boundary loops as vertex-index cycles. The outer loop is
    /// counter-clockwise, holes clockwise.
    pub fn boundary_loops(&self) -> Vec<Vec<usize>> {
        let edges = self.boundary_edges();
        let mut next: HashMap<usize, Vec<usize>> = HashMap::new();
        for &(a, b) in &edges {
            next.entry(a).or_default().push(b);
        }
        let mut visited: HashMap<(usize, usize), bool> = HashMap::new();
        let mut loops = Vec::new();
        for &(a0, b0) in &edges {
            if visited.contains_key(&(a0, b0)) {
                continue;
            }
            let mut cycle = vec![a0];
            let (mut a, mut b) = (a0, b0);
            loop {
                visited.insert((a, b), true);
                if b == a0 {
                    break;
                }
                cycle.push(b);
                let succ = next[&b]
                    .iter()
                    .copied()
                    .find(|&c| !visited.contains_key(&(b, c)));
                match succ {
                    Some(c) => {
                        a = b;
                        b = c;
                    }
                    None => break,
                }
            }
            loops.push(cycle);
        }
        loops
    }

    /// Signed area enclosed by the boundary loops (outer minus holes).
    pub fn boundary_polygon_area(&self) -> f64 {
        self.boundary_loops()
            .iter()
            .map(|lp| {
                let poly: Vec<Point> = lp.iter().map(|&v| self.vertices[v]).collect();
                shoelace(&poly)
            })
            .sum()
    }

    pub fn metrics(&self) -> MeshMetrics {
        mesh_metrics(self)
    }
}

pub fn mesh_metrics(mesh: &TriMesh) -> MeshMetrics {
    let (mut h_min, mut h_max) = (f64::INFINITY, 0.0f64);
    for e in 0..mesh.n_elements() {
        let h = mesh.element_diameter(e);
        h_min = h_min.min(h);
        h_max = h_max.max(h);
    }
    MeshMetrics {
        total_area: mesh.total_area(),
        diameter: point_set_diameter(mesh.vertices()),
        h_min,
        h_max,
    }
}

/// Largest pairwise distance of a point set, attained on its convex hull.
pub fn point_set_diameter(points: &[Point]) -> f64 {
    let hull = convex_hull(points);
    let mut best = 0.0f64;
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            best = best.max(dist(hull[i], hull[j]));
        }
    }
    best
}

/// Andrew's monotone chain.
fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn edge_counts(triangles: &[[usize; 3]]) -> HashMap<(usize, usize), usize> {
    let mut counts = HashMap::with_capacity(triangles.len() * 2);
    for tri in triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    counts
}

fn bbox_extent(points: &[Point]) -> f64 {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE)
}

fn check_duplicates(vertices: &[Point]) -> Result<()> {
    const EPS: f64 = 1e-12;
    let mut order: Vec<usize> = (0..vertices.len()).collect();
    order.sort_by(|&a, &b| vertices[a][0].total_cmp(&vertices[b][0]));
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if vertices[j][0] - vertices[i][0] > EPS {
                break;
            }
            if (vertices[j][1] - vertices[i][1]).abs() <= EPS {
                return Err(Error::InvalidMesh(format!(
                    "vertices {} and {} coincide",
                    i.min(j),
                    i.max(j)
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) fn unit_square() -> TriMesh {
    TriMesh::new(
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        vec![[0, 1, 2], [0, 2, 3]],
    )
    .unwrap()
}

/// Structured `n x n` right-triangle mesh of `[0, side]^2`, diagonals alternating
/// so that the mesh is symmetric about the square's center.
pub fn structured_square(side: f64, n: usize) -> TriMesh {
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let h = side / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * h, j as f64 * h]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            // union-jack pattern: diagonal direction flips by quadrant parity
            if (i < n / 2) == (j < n / 2) {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    TriMesh::new(vertices, triangles).expect("structured square is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_metrics() {
        let m = unit_square().metrics();
        assert!((m.total_area - 1.0).abs() < 1e-15);
        assert!((m.diameter - 2f64.sqrt()).abs() < 1e-15);
        assert!(m.h_min <= m.h_max && m.h_max <= m.diameter);
    }

    #[test]
    fn clockwise_triangles_are_reoriented() {
        let mesh = TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 2, 1], [0, 3, 2]],
        )
        .unwrap();
        for tri in mesh.triangles() {
            let [a, b, c] = tri.map(|v| mesh.vertices()[v]);
            assert!(cross(a, b, c) > 0.0);
        }
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let err = TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]],
            vec![[0, 1, 1]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(ref m) if m.contains("degenerate")), "{err}");
        let err = TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap_err();
        assert!(err.to_string().contains("degenerate"));
    }

    #[test]
    fn out_of_range_and_duplicates_rejected() {
        let err = TriMesh::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]], vec![[0, 1, 3]]);
        assert!(err.unwrap_err().to_string().contains("references vertex 3"));
        let err = TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [1.0, 1.0 + 1e-13]],
            vec![[0, 1, 2], [0, 1, 3]],
        );
        assert!(err.unwrap_err().to_string().contains("coincide"));
    }

    #[test]
    fn structured_square_boundary_and_edges() {
        let mesh = structured_square(1.0, 6);
        assert_eq!(mesh.n_interior(), 25);
        assert!((mesh.boundary_polygon_area() - 1.0).abs() < 1e-12);
        for ((a, b), count) in mesh.edges() {
            let on_boundary = count == 1;
            if on_boundary {
                assert!(mesh.boundary_vertex()[a] && mesh.boundary_vertex()[b]);
            } else {
                assert_eq!(count, 2);
            }
        }
        assert_eq!(mesh.boundary_loops().len(), 1);
    }

    #[test]
    fn cross_product_area_matches_shoelace() {
        let mesh = structured_square(2.0, 5);
        for (e, tri) in mesh.triangles().iter().enumerate() {
            let poly = tri.map(|v| mesh.vertices()[v]);
            assert!((shoelace(&poly) - mesh.element_area()[e]).abs() < 1e-14);
        }
    }
}
