//! Discrete bathtub principle: admissible sets of prescribed measure built
//! from super- or sub-level sets of a per-element value.
//!
//! Two routes produce the threshold level. [`bathtub_set`] sorts element
//! representatives and takes a prefix; it is authoritative for the selected
//! set. [`bisection_level`] is the bisection on the distribution function and
//! is used to cross-check it.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fem::VorticityField;
use crate::mesh::TriMesh;
use crate::output::fmt_f64;
use crate::set::ElementSet;

/// Fraction of |Ω| used as the default measure tolerance.
pub const DEFAULT_TOL_FRACTION: f64 = 5e-3;

const MAX_HALVINGS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `{u ≥ t}`, used for maximization.
    Super,
    /// `{u ≤ t}`, used for minimization.
    Sub,
}

impl Direction {
    fn admits(self, value: f64, s: f64) -> bool {
        match self {
            Direction::Super => value >= s,
            Direction::Sub => value <= s,
        }
    }

    /// Priority order: best candidates first, ties by ascending index.
    fn compare(self, values: &[f64], a: usize, b: usize) -> Ordering {
        let by_value = match self {
            Direction::Super => values[b].total_cmp(&values[a]),
            Direction::Sub => values[a].total_cmp(&values[b]),
        };
        by_value.then(a.cmp(&b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelQuery {
    pub direction: Direction,
    pub target_measure: f64,
    pub tolerance: f64,
}

impl LevelQuery {
    pub fn new(direction: Direction, target_measure: f64, tolerance: f64) -> Self {
        LevelQuery {
            direction,
            target_measure,
            tolerance,
        }
    }

    /// Query with the default tolerance `5e-3 · |Ω|`.
    pub fn with_default_tol(direction: Direction, target_measure: f64, mesh: &TriMesh) -> Self {
        Self::new(
            direction,
            target_measure,
            DEFAULT_TOL_FRACTION * mesh.total_area(),
        )
    }

    fn validate(&self, mesh: &TriMesh) -> Result<()> {
        let total = mesh.total_area();
        if !(self.target_measure > 0.0 && self.target_measure < total) {
            return Err(Error::MeasureOutOfRange {
                target: self.target_measure,
                total,
            });
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "measure tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathtubResult {
    pub level: f64,
    pub set_d: ElementSet,
    pub achieved_measure: f64,
}

impl BathtubResult {
    /// `# achieved_measure=<value> t=<value>` followed by one index per line.
    pub fn to_set_list(&self) -> String {
        set_list(&self.set_d, self.achieved_measure, self.level)
    }
}

pub fn set_list(set: &ElementSet, achieved_measure: f64, level: f64) -> String {
    let mut out = format!(
        "# achieved_measure={} t={}\n",
        fmt_f64(achieved_measure),
        fmt_f64(level)
    );
    for e in set.iter() {
        let _ = writeln!(out, "{e}");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionOutcome {
    pub level: f64,
    /// Distribution value at `level`.
    pub measure: f64,
    /// Set when no level brings the distribution within tolerance of the
    /// target; `level` is then the value where the distribution jumps across it.
    pub plateau: bool,
    pub halvings: usize,
}

/// Mean of the three vertex values: the P1 interpolant at the centroid.
pub fn element_representative(mesh: &TriMesh, nodal_u: &[f64]) -> Vec<f64> {
    mesh.triangles()
        .iter()
        .map(|t| (nodal_u[t[0]] + nodal_u[t[1]] + nodal_u[t[2]]) / 3.0)
        .collect()
}

/// Area of the elements whose value lies on the `direction` side of `s`.
pub fn distribution(mesh: &TriMesh, values: &[f64], s: f64, direction: Direction) -> f64 {
    values
        .iter()
        .zip(mesh.element_area())
        .filter(|(&v, _)| direction.admits(v, s))
        .map(|(_, &a)| a)
        .sum()
}

/// Bisection for the threshold level: stop as soon as the distribution is
/// within tolerance of the target measure.
pub fn bisection_level(mesh: &TriMesh, values: &[f64], query: &LevelQuery) -> Result<BisectionOutcome> {
    query.validate(mesh)?;
    check_len(mesh, values)?;
    let a = query.target_measure;
    let (mut lo, mut hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let mut halvings = 0;
    while halvings < MAX_HALVINGS {
        let theta = 0.5 * (lo + hi);
        let f = distribution(mesh, values, theta, query.direction);
        halvings += 1;
        if (f - a).abs() < query.tolerance {
            return Ok(BisectionOutcome {
                level: theta,
                measure: f,
                plateau: false,
                halvings,
            });
        }
        let raise = match query.direction {
            Direction::Sub => f < a,
            Direction::Super => f > a,
        };
        if raise {
            lo = theta;
        } else {
            hi = theta;
        }
        if hi - lo <= 1e-15 * scale {
            break;
        }
    }
    let level = jump_level(mesh, values, query);
    Ok(BisectionOutcome {
        level,
        measure: distribution(mesh, values, level, query.direction),
        plateau: true,
        halvings,
    })
}

/// `inf{s : F(s) ≥ A}` for sub-level sets, `sup{s : G(s) ≥ A}` for super-level sets.
fn jump_level(mesh: &TriMesh, values: &[f64], query: &LevelQuery) -> f64 {
    let order = priority_order(values, query.direction);
    let area = mesh.element_area();
    let mut cum = 0.0;
    for &e in &order {
        cum += area[e];
        if cum >= query.target_measure {
            return values[e];
        }
    }
    values[*order.last().expect("non-empty mesh")]
}

fn priority_order(values: &[f64], direction: Direction) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| direction.compare(values, a, b));
    order
}

/// Takes the maximal prefix of `ordered` whose cumulative area stays within
/// `target`, then one more element if that lands closer to `target`.
/// With `at_least_one`, a non-empty candidate list never yields an empty set.
pub fn select_prefix(areas: &[f64], ordered: &[usize], target: f64, at_least_one: bool) -> Vec<usize> {
    let slack = 1e-12 * target.abs();
    let mut cum = 0.0;
    let mut taken = Vec::new();
    for &e in ordered {
        let next = cum + areas[e];
        if next <= target + slack {
            taken.push(e);
            cum = next;
            continue;
        }
        if (next - target).abs() < (cum - target).abs() || (at_least_one && taken.is_empty()) {
            taken.push(e);
        }
        break;
    }
    taken
}

/// Admissible set of measure ≈ A from the level sets of `values`.
pub fn bathtub_set(mesh: &TriMesh, values: &[f64], query: &LevelQuery) -> Result<BathtubResult> {
    query.validate(mesh)?;
    check_len(mesh, values)?;
    let order = priority_order(values, query.direction);
    let taken = select_prefix(mesh.element_area(), &order, query.target_measure, false);
    let level = taken
        .last()
        .or(order.first())
        .map(|&e| values[e])
        .expect("non-empty mesh");
    let set_d = ElementSet::new(taken);
    let achieved_measure = set_d.measure(mesh);
    Ok(BathtubResult {
        level,
        set_d,
        achieved_measure,
    })
}

pub fn vorticity_from_set(mesh: &TriMesh, set_d: ElementSet, alpha: f64, beta: f64) -> Result<VorticityField> {
    VorticityField::new(mesh, set_d, alpha, beta)
}

fn check_len(mesh: &TriMesh, values: &[f64]) -> Result<()> {
    if values.len() != mesh.n_elements() {
        return Err(Error::DimensionMismatch {
            what: "element values",
            expected: mesh.n_elements(),
            got: values.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{structured_square, unit_square, TriMesh};

    /// `n` equal-area triangles in a strip of unit squares.
    fn strip(n_squares: usize) -> TriMesh {
        let mut vertices = Vec::new();
        for i in 0..=n_squares {
            vertices.push([i as f64, 0.0]);
            vertices.push([i as f64, 1.0]);
        }
        let mut triangles = Vec::new();
        for i in 0..n_squares {
            let (a, b, c, d) = (2 * i, 2 * i + 2, 2 * i + 3, 2 * i + 1);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
        TriMesh::new(vertices, triangles).unwrap()
    }

    #[test]
    fn representatives() {
        let mesh = structured_square(1.0, 4);
        let c = vec![2.5; mesh.n_vertices()];
        assert!(element_representative(&mesh, &c).iter().all(|&v| v == 2.5));
        let lin: Vec<f64> = mesh.vertices().iter().map(|p| 3.0 * p[0] - p[1]).collect();
        let reps = element_representative(&mesh, &lin);
        for (e, c) in mesh.element_centroid().iter().enumerate() {
            assert!((reps[e] - (3.0 * c[0] - c[1])).abs() < 1e-14);
        }
    }

    #[test]
    fn distribution_counts() {
        let mesh = unit_square();
        let v = [1.0, 3.0];
        assert_eq!(distribution(&mesh, &v, 0.0, Direction::Sub), 0.0);
        assert_eq!(distribution(&mesh, &v, 5.0, Direction::Sub), 1.0);
        assert_eq!(distribution(&mesh, &v, 2.0, Direction::Sub), 0.5);
        assert_eq!(distribution(&mesh, &v, 2.0, Direction::Super), 0.5);
    }

    #[test]
    fn bisection_finds_median() {
        let mesh = strip(50);
        let n = mesh.n_elements();
        // values uniformly spread on [0, 1], shuffled deterministically
        let values: Vec<f64> = (0..n).map(|e| ((e * 37) % n) as f64 / (n - 1) as f64).collect();
        let total = mesh.total_area();
        let q = LevelQuery::with_default_tol(Direction::Sub, total / 2.0, &mesh);
        let out = bisection_level(&mesh, &values, &q).unwrap();
        // sort-based quantile oracle
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let median = 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        assert!(!out.plateau);
        assert!((out.measure - total / 2.0).abs() < q.tolerance);
        assert!((out.level - median).abs() <= 1.0 / (n - 1) as f64);
    }

    #[test]
    fn bisection_flags_constant_values() {
        let mesh = strip(5);
        let values = vec![0.7; mesh.n_elements()];
        let q = LevelQuery::with_default_tol(Direction::Super, 2.0, &mesh);
        let out = bisection_level(&mesh, &values, &q).unwrap();
        assert!(out.plateau);
        assert_eq!(out.level, 0.7);
    }

    #[test]
    fn out_of_range_measure_is_rejected() {
        let mesh = strip(2);
        let values = vec![1.0; mesh.n_elements()];
        for a in [0.0, -1.0, 2.0, 3.0] {
            let q = LevelQuery::with_default_tol(Direction::Sub, a, &mesh);
            assert!(bisection_level(&mesh, &values, &q).is_err());
            assert!(bathtub_set(&mesh, &values, &q).is_err());
        }
    }

    #[test]
    fn ten_elements_three_largest() {
        let mesh = strip(5);
        let values = [0.3, 0.9, 0.1, 0.5, 0.8, 0.2, 0.7, 0.4, 0.6, 0.05];
        let q = LevelQuery::with_default_tol(Direction::Super, 0.3 * mesh.total_area(), &mesh);
        let res = bathtub_set(&mesh, &values, &q).unwrap();
        assert_eq!(res.set_d.as_slice(), &[1, 4, 6]);
        // exhaustive oracle over all 3-subsets
        let mut best = f64::NEG_INFINITY;
        for i in 0..10 {
            for j in i + 1..10 {
                for k in j + 1..10 {
                    best = best.max(0.5 * (values[i] + values[j] + values[k]));
                }
            }
        }
        let got: f64 = res.set_d.iter().map(|e| 0.5 * values[e]).sum();
        assert!((got - best).abs() < 1e-15);
        assert_eq!(res.level, 0.7);
    }

    #[test]
    fn nearly_everything_and_ties() {
        let mesh = strip(5);
        let values: Vec<f64> = (0..10).map(|e| e as f64).collect();
        let q = LevelQuery::with_default_tol(Direction::Sub, 4.9, &mesh);
        assert_eq!(bathtub_set(&mesh, &values, &q).unwrap().set_d.len(), 10);

        let constant = vec![1.0; 10];
        let q = LevelQuery::with_default_tol(Direction::Super, 1.6, &mesh);
        let res = bathtub_set(&mesh, &constant, &q).unwrap();
        assert_eq!(res.set_d.as_slice(), &[0, 1, 2]);
        assert!((res.achieved_measure - 1.5).abs() < 1e-15);
    }

    #[test]
    fn agrees_with_bisection_up_to_ties() {
        let mesh = structured_square(1.0, 10);
        let u: Vec<f64> = mesh
            .vertices()
            .iter()
            .map(|p| p[0] * (1.0 - p[0]) * p[1] * (1.0 - p[1]) + 0.01 * p[0])
            .collect();
        let values = element_representative(&mesh, &u);
        for dir in [Direction::Super, Direction::Sub] {
            let q = LevelQuery::with_default_tol(dir, 0.3, &mesh);
            let set = bathtub_set(&mesh, &values, &q).unwrap();
            let bis = bisection_level(&mesh, &values, &q).unwrap();
            assert!(!bis.plateau);
            let threshold: ElementSet = (0..mesh.n_elements())
                .filter(|&e| dir.admits(values[e], bis.level))
                .collect();
            // elements where the two routes disagree lie between the two levels
            let (lo, hi) = (bis.level.min(set.level), bis.level.max(set.level));
            for e in set.set_d.difference(&threshold).iter().chain(threshold.difference(&set.set_d).iter()) {
                assert!(values[e] >= lo && values[e] <= hi);
            }
            let dm = (set.achieved_measure - 0.3).abs();
            assert!(dm <= q.tolerance.max(mesh.max_element_area()));
        }
    }

    #[test]
    fn vorticity_from_set_norms() {
        let mesh = structured_square(1.0, 2);
        let n = mesh.n_elements();
        let empty = vorticity_from_set(&mesh, ElementSet::empty(), 2.0, 1.0).unwrap();
        assert!(empty.element_value().iter().all(|&v| v == 1.0));
        let full = vorticity_from_set(&mesh, ElementSet::all(n), 2.0, 1.0).unwrap();
        assert!(full.element_value().iter().all(|&v| v == 2.0));
        let half: ElementSet = (0..n)
            .filter(|&e| mesh.element_centroid()[e][0] < 0.5)
            .collect();
        let f = vorticity_from_set(&mesh, half, 2.0, 1.0).unwrap();
        assert!((f.measure_d() - 0.5).abs() < 1e-15);
        assert!((f.l2_norm_squared(&mesh) - 2.5).abs() < 1e-14);
        assert!(vorticity_from_set(&mesh, ElementSet::empty(), 1.0, 2.0).is_err());
    }

    #[test]
    fn set_list_format() {
        let res = BathtubResult {
            level: 0.5,
            set_d: ElementSet::new(vec![4, 2]),
            achieved_measure: 0.25,
        };
        let text = res.to_set_list();
        assert_eq!(
            text,
            format!("# achieved_measure={} t={}\n2\n4\n", fmt_f64(0.25), fmt_f64(0.5))
        );
    }
}
