use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::{dist, Point, ShapeSpec, TriMesh};
use crate::error::{Error, Result};

/// Interior lattice points closer than this fraction of `h` to the boundary
/// polygon are dropped to avoid slivers.
const BOUNDARY_CLEARANCE: f64 = 0.55;

/// Boundary-fitted triangulation: the boundary polygon sampled at spacing
/// `target_h`, a hexagonal lattice of interior points, and a constrained
/// Delaunay triangulation restricted to the polygon. Deterministic.
pub fn generate_domain(spec: &ShapeSpec, target_h: f64) -> Result<TriMesh> {
    spec.validate()?;
    if !(target_h > 0.0) || !target_h.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "target_h must be positive, got {target_h}"
        )));
    }
    if let ShapeSpec::Dumbbell {
        neck_half_width, ..
    } = *spec
    {
        let across = 2.0 * neck_half_width / target_h;
        if across < 4.0 {
            return Err(Error::InvalidShape(format!(
                "target_h {target_h} resolves the dumbbell neck with only {across:.2} elements across (need 4)"
            )));
        }
    }
    if target_h >= spec.min_feature() {
        return Err(Error::InvalidParameter(format!(
            "target_h {target_h} is not smaller than the {} feature length {}",
            spec.name(),
            spec.min_feature()
        )));
    }

    let boundary = spec.boundary_polygon(target_h);
    let interior = lattice_points(&boundary, target_h);

    let nb = boundary.len();
    let mut points: Vec<Point2<f64>> = boundary
        .iter()
        .chain(interior.iter())
        .map(|p| Point2::new(p[0], p[1]))
        .collect();
    let edges: Vec<[usize; 2]> = (0..nb).map(|i| [i, (i + 1) % nb]).collect();
    let n_input = points.len();
    let cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
        ConstrainedDelaunayTriangulation::bulk_load_cdt(std::mem::take(&mut points), edges)
            .map_err(|e| Error::InvalidMesh(format!("triangulation failed: {e:?}")))?;
    if cdt.num_vertices() != n_input {
        return Err(Error::InvalidMesh(
            "triangulation merged coincident input points".into(),
        ));
    }

    let vertices: Vec<Point> = cdt
        .vertices()
        .map(|v| {
            let p = v.position();
            [p.x, p.y]
        })
        .collect();
    let mut triangles: Vec<[usize; 3]> = cdt
        .inner_faces()
        .filter_map(|face| {
            let tri = face.vertices().map(|v| v.fix().index());
            let [a, b, c] = tri.map(|i| vertices[i]);
            let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
            point_in_polygon(centroid, &boundary).then_some(tri)
        })
        .collect();
    // canonical ordering for reproducible files
    for tri in triangles.iter_mut() {
        let k = (0..3).min_by_key(|&k| tri[k]).unwrap();
        tri.rotate_left(k);
    }
    triangles.sort_unstable();

    TriMesh::new(vertices, triangles)
}

fn lattice_points(boundary: &[Point], h: f64) -> Vec<Point> {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in boundary {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let dy = h * 3f64.sqrt() / 2.0;
    let jmax = (lo[1].abs().max(hi[1].abs()) / dy).ceil() as i64 + 1;
    let imax = (lo[0].abs().max(hi[0].abs()) / h).ceil() as i64 + 1;
    let mut out = Vec::new();
    for j in -jmax..=jmax {
        let y = j as f64 * dy;
        let shift = if j.rem_euclid(2) == 1 { 0.5 * h } else { 0.0 };
        for i in -imax..=imax {
            let x = i as f64 * h + shift;
            let p = [x, y];
            if point_in_polygon(p, boundary)
                && distance_to_polygon(p, boundary) >= BOUNDARY_CLEARANCE * h
            {
                out.push(p);
            }
        }
    }
    out
}

/// Even-odd ray casting.
pub(crate) fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn distance_to_polygon(p: Point, poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| distance_to_segment(p, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

fn distance_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + t * dx, a[1] + t * dy])
}
