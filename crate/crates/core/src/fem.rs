//! P1 finite elements for `-Δu = f` in Ω with `u = 0` on ∂Ω, where `f` is
//! piecewise constant per element.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::output::fmt_f64;
use crate::set::ElementSet;
use crate::sparse::{conjugate_gradient, CsrMatrix};

pub const SOLVER_TOL: f64 = 1e-10;

/// Two-valued vorticity: `alpha` on the elements of `set_d`, `beta` elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct VorticityField {
    element_value: Vec<f64>,
    alpha: f64,
    beta: f64,
    set_d: ElementSet,
    measure_d: f64,
}

impl VorticityField {
    pub fn new(mesh: &TriMesh, set_d: ElementSet, alpha: f64, beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !(alpha > beta) || !alpha.is_finite() {
            return Err(Error::NonPositiveContrast { alpha, beta });
        }
        let n = mesh.n_elements();
        if let Some(max) = set_d.max_index() {
            if max >= n {
                return Err(Error::DimensionMismatch {
                    what: "elements (set index out of range)",
                    expected: n,
                    got: max + 1,
                });
            }
        }
        let mut element_value = vec![beta; n];
        for e in set_d.iter() {
            element_value[e] = alpha;
        }
        let measure_d = set_d.measure(mesh);
        Ok(VorticityField {
            element_value,
            alpha,
            beta,
            set_d,
            measure_d,
        })
    }

    pub fn element_value(&self) -> &[f64] {
        &self.element_value
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn set_d(&self) -> &ElementSet {
        &self.set_d
    }

    pub fn measure_d(&self) -> f64 {
        self.measure_d
    }

    pub fn l1_norm(&self, mesh: &TriMesh) -> f64 {
        integrate(mesh, &self.element_value, |v| v.abs())
    }

    pub fn l2_norm_squared(&self, mesh: &TriMesh) -> f64 {
        integrate(mesh, &self.element_value, |v| v * v)
    }
}

fn integrate(mesh: &TriMesh, values: &[f64], g: impl Fn(f64) -> f64) -> f64 {
    values
        .iter()
        .zip(mesh.element_area())
        .map(|(&v, &a)| g(v) * a)
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamSolution {
    pub nodal_u: Vec<f64>,
    /// `∫ f u`
    pub psi: f64,
    /// `∫ |∇u|^2`
    pub dirichlet: f64,
    pub iterations: usize,
    pub relative_residual: f64,
}

impl StreamSolution {
    pub fn max_u(&self) -> f64 {
        self.nodal_u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Assembled P1 operator on a fixed mesh: full stiffness matrix, the
/// interior (Dirichlet-reduced) block, and the interior index map.
#[derive(Debug, Clone)]
pub struct PoissonOperator<'m> {
    mesh: &'m TriMesh,
    stiffness: CsrMatrix,
    interior_stiffness: CsrMatrix,
    interior_vertices: Vec<usize>,
    interior_index: Vec<Option<usize>>,
}

/// Gradients of the three P1 hat functions on a triangle, times `2·area`.
fn hat_gradients(p: [[f64; 2]; 3]) -> [[f64; 2]; 3] {
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        g[i] = [p[j][1] - p[k][1], p[k][0] - p[j][0]];
    }
    g
}

pub fn assemble(mesh: &TriMesh) -> Result<PoissonOperator<'_>> {
    PoissonOperator::new(mesh)
}

impl<'m> PoissonOperator<'m> {
    pub fn new(mesh: &'m TriMesh) -> Result<Self> {
        let n = mesh.n_vertices();
        let mut interior_index = vec![None; n];
        let mut interior_vertices = Vec::new();
        for v in 0..n {
            if !mesh.boundary_vertex()[v] {
                interior_index[v] = Some(interior_vertices.len());
                interior_vertices.push(v);
            }
        }
        if interior_vertices.is_empty() {
            return Err(Error::NoInteriorVertices);
        }

        let mut full = Vec::with_capacity(9 * mesh.n_elements());
        let mut inner = Vec::with_capacity(9 * mesh.n_elements());
        for (e, tri) in mesh.triangles().iter().enumerate() {
            let g = hat_gradients(tri.map(|v| mesh.vertices()[v]));
            let scale = 1.0 / (4.0 * mesh.element_area()[e]);
            for i in 0..3 {
                for j in 0..3 {
                    let k = scale * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                    full.push((tri[i], tri[j], k));
                    if let (Some(a), Some(b)) = (interior_index[tri[i]], interior_index[tri[j]]) {
                        inner.push((a, b, k));
                    }
                }
            }
        }
        Ok(PoissonOperator {
            mesh,
            stiffness: CsrMatrix::from_triplets(n, full),
            interior_stiffness: CsrMatrix::from_triplets(interior_vertices.len(), inner),
            interior_vertices,
            interior_index,
        })
    }

    pub fn mesh(&self) -> &'m TriMesh {
        self.mesh
    }

    /// Stiffness over all vertices (boundary rows and columns included).
    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn interior_stiffness(&self) -> &CsrMatrix {
        &self.interior_stiffness
    }

    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior_vertices
    }

    pub fn interior_index(&self, v: usize) -> Option<usize> {
        self.interior_index[v]
    }

    /// Nodal load vector: every vertex of element `e` receives `f_e · area_e / 3`.
    pub fn load(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_elements(f)?;
        let mut b = vec![0.0; self.mesh.n_vertices()];
        for (e, tri) in self.mesh.triangles().iter().enumerate() {
            let share = f[e] * self.mesh.element_area()[e] / 3.0;
            for &v in tri {
                b[v] += share;
            }
        }
        Ok(b)
    }

    pub fn solve(&self, f: &[f64]) -> Result<StreamSolution> {
        let b = self.load(f)?;
        if let Some(e) = f.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "right-hand side is not finite on element {e}"
            )));
        }
        let rhs: Vec<f64> = self.interior_vertices.iter().map(|&v| b[v]).collect();
        let max_iter = 20 * self.interior_vertices.len() + 100;
        let out = conjugate_gradient(&self.interior_stiffness, &rhs, SOLVER_TOL, max_iter)?;
        let mut nodal_u = vec![0.0; self.mesh.n_vertices()];
        for (k, &v) in self.interior_vertices.iter().enumerate() {
            nodal_u[v] = out.x[k];
        }
        let psi = b.iter().zip(&nodal_u).map(|(x, y)| x * y).sum();
        let dirichlet = self.stiffness.quadratic_form(&nodal_u);
        Ok(StreamSolution {
            nodal_u,
            psi,
            dirichlet,
            iterations: out.iterations,
            relative_residual: out.relative_residual,
        })
    }

    pub fn solve_field(&self, field: &VorticityField) -> Result<StreamSolution> {
        self.solve(field.element_value())
    }

    /// `∫ f u` with the exact vertex-average rule for P1 `u`.
    pub fn energy_psi(&self, f: &[f64], u: &[f64]) -> Result<f64> {
        energy_psi(self.mesh, f, u)
    }

    pub fn dirichlet_energy(&self, u: &[f64]) -> Result<f64> {
        self.check_vertices(u)?;
        Ok(self.stiffness.quadratic_form(u))
    }

    fn check_elements(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.mesh.n_elements() {
            return Err(Error::DimensionMismatch {
                what: "element values",
                expected: self.mesh.n_elements(),
                got: f.len(),
            });
        }
        Ok(())
    }

    fn check_vertices(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.mesh.n_vertices() {
            return Err(Error::DimensionMismatch {
                what: "nodal values",
                expected: self.mesh.n_vertices(),
                got: u.len(),
            });
        }
        Ok(())
    }
}

pub fn energy_psi(mesh: &TriMesh, f: &[f64], u: &[f64]) -> Result<f64> {
    if f.len() != mesh.n_elements() {
        return Err(Error::DimensionMismatch {
            what: "element values",
            expected: mesh.n_elements(),
            got: f.len(),
        });
    }
    if u.len() != mesh.n_vertices() {
        return Err(Error::DimensionMismatch {
            what: "nodal values",
            expected: mesh.n_vertices(),
            got: u.len(),
        });
    }
    Ok(mesh
        .triangles()
        .iter()
        .enumerate()
        .map(|(e, t)| f[e] * mesh.element_area()[e] * (u[t[0]] + u[t[1]] + u[t[2]]) / 3.0)
        .sum())
}

/// `∫_e u` for every element.
pub fn element_integrals(mesh: &TriMesh, u: &[f64]) -> Vec<f64> {
    mesh.triangles()
        .iter()
        .zip(mesh.element_area())
        .map(|(t, a)| a * (u[t[0]] + u[t[1]] + u[t[2]]) / 3.0)
        .collect()
}

/// `vertex_index,x,y,u`
pub fn nodal_csv(mesh: &TriMesh, u: &[f64]) -> String {
    let mut out = String::from("vertex_index,x,y,u\n");
    for (v, p) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(
            out,
            "{v},{},{},{}",
            fmt_f64(p[0]),
            fmt_f64(p[1]),
            fmt_f64(u[v])
        );
    }
    out
}

/// `element_index,f,indicator`
pub fn element_csv(field: &VorticityField) -> String {
    let mask = field.set_d().mask(field.element_value().len());
    let mut out = String::from("element_index,f,indicator\n");
    for (e, f) in field.element_value().iter().enumerate() {
        let _ = writeln!(out, "{e},{},{}", fmt_f64(*f), u8::from(mask[e]));
    }
    out
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::mesh::{generate_domain, structured_square, ShapeSpec, TriMesh};

    fn disk(r: f64, h: f64) -> TriMesh {
        generate_domain(&ShapeSpec::Disk { radius: r }, h).unwrap()
    }

    /// Dirichlet energy of `u` by summing per-element |∇u|² area directly.
    fn energy_by_gradients(mesh: &TriMesh, u: &[f64]) -> f64 {
        mesh.triangles()
            .iter()
            .enumerate()
            .map(|(e, t)| {
                let p = t.map(|v| mesh.vertices()[v]);
                let a = mesh.element_area()[e];
                // solve the 2x2 system for the constant gradient
                let (dx1, dy1) = (p[1][0] - p[0][0], p[1][1] - p[0][1]);
                let (dx2, dy2) = (p[2][0] - p[0][0], p[2][1] - p[0][1]);
                let (du1, du2) = (u[t[1]] - u[t[0]], u[t[2]] - u[t[0]]);
                let det = dx1 * dy2 - dx2 * dy1;
                let gx = (du1 * dy2 - du2 * dy1) / det;
                let gy = (dx1 * du2 - dx2 * du1) / det;
                a * (gx * gx + gy * gy)
            })
            .sum()
    }

    #[test]
    fn stiffness_entry_matches_energy_finite_difference() {
        // regular hexagon around a single interior vertex
        let mut vertices = vec![[0.0, 0.0]];
        for k in 0..6 {
            let t = PI / 3.0 * k as f64;
            vertices.push([t.cos(), t.sin()]);
        }
        let triangles = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
        let mesh = TriMesh::new(vertices, triangles).unwrap();
        let op = assemble(&mesh).unwrap();
        assert_eq!(op.interior_vertices(), &[0]);

        // second difference of E(s) = ∫|∇(s φ_0)|² in s gives 2 K_00
        let h = 1e-3;
        let e = |s: f64| {
            let mut u = vec![0.0; 7];
            u[0] = s;
            energy_by_gradients(&mesh, &u)
        };
        let fd = (e(1.0 + h) - 2.0 * e(1.0) + e(1.0 - h)) / (h * h) / 2.0;
        let k00 = op.interior_stiffness().get(0, 0);
        assert!((k00 - fd).abs() < 1e-6, "{k00} vs {fd}");
        // cotangent weights: each of 6 edges has two 60 degree opposite angles
        let cot60 = 1.0 / 3f64.sqrt();
        assert!((k00 - 6.0 * cot60).abs() < 1e-12);
    }

    #[test]
    fn stiffness_is_symmetric_with_zero_row_sums() {
        let mesh = structured_square(1.0, 8);
        let op = assemble(&mesh).unwrap();
        assert!(op.stiffness().is_symmetric(1e-14));
        for &v in op.interior_vertices() {
            let s: f64 = op.stiffness().row(v).map(|(_, k)| k).sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn constant_load_sums_to_area() {
        let mesh = disk(1.0, 0.1);
        let op = assemble(&mesh).unwrap();
        let b = op.load(&vec![1.0; mesh.n_elements()]).unwrap();
        assert!((b.iter().sum::<f64>() - mesh.total_area()).abs() < 1e-12);
    }

    #[test]
    fn all_boundary_mesh_is_unsolvable() {
        let mesh = crate::mesh::unit_square();
        assert!(matches!(assemble(&mesh), Err(Error::NoInteriorVertices)));
    }

    #[test]
    fn torsion_on_disk() {
        let mesh = disk(2.0, 0.05);
        let op = assemble(&mesh).unwrap();
        let sol = op.solve(&vec![1.0; mesh.n_elements()]).unwrap();
        assert!(sol.relative_residual <= SOLVER_TOL);
        assert!((sol.max_u() - 1.0).abs() < 0.01);
        assert!((sol.psi - 2.0 * PI).abs() / (2.0 * PI) < 0.01);
        for (v, &b) in mesh.boundary_vertex().iter().enumerate() {
            if b {
                assert_eq!(sol.nodal_u[v], 0.0);
            }
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let mesh = disk(1.0, 0.1);
        let op = assemble(&mesh).unwrap();
        let sol = op.solve(&vec![0.0; mesh.n_elements()]).unwrap();
        assert!(sol.nodal_u.iter().all(|&u| u == 0.0));
        assert_eq!(sol.psi, 0.0);
    }

    #[test]
    fn central_patch_energy() {
        let mesh = disk(2.0, 0.05);
        let op = assemble(&mesh).unwrap();
        let set: ElementSet = mesh
            .element_centroid()
            .iter()
            .enumerate()
            .filter_map(|(e, c)| (c[0].hypot(c[1]) < 1.0).then_some(e))
            .collect();
        let field = VorticityField::new(&mesh, set, 2.0, 1.0).unwrap();
        let sol = op.solve_field(&field).unwrap();
        assert!((sol.psi - 13.2623).abs() / 13.2623 < 0.01, "{}", sol.psi);
    }

    #[test]
    fn energy_identities() {
        let mesh = disk(1.0, 0.1);
        let op = assemble(&mesh).unwrap();
        let f: Vec<f64> = (0..mesh.n_elements()).map(|e| 1.0 + (e % 3) as f64).collect();
        let sol = op.solve(&f).unwrap();
        let psi = op.energy_psi(&f, &sol.nodal_u).unwrap();
        let b = op.load(&f).unwrap();
        let load_dot: f64 = b.iter().zip(&sol.nodal_u).map(|(x, y)| x * y).sum();
        assert!((psi - load_dot).abs() <= 1e-14 * psi);
        let f2: Vec<f64> = f.iter().map(|v| 2.0 * v).collect();
        assert!((op.energy_psi(&f2, &sol.nodal_u).unwrap() - 2.0 * psi).abs() <= 1e-14 * psi);
        let d = op.dirichlet_energy(&sol.nodal_u).unwrap();
        assert!((2.0 * psi - d - sol.psi).abs() <= 1e-8 * sol.psi);
        let u3: Vec<f64> = sol.nodal_u.iter().map(|v| 3.0 * v).collect();
        assert!((op.dirichlet_energy(&u3).unwrap() - 9.0 * d).abs() <= 1e-12 * d);
        assert!((energy_by_gradients(&mesh, &sol.nodal_u) - d).abs() <= 1e-10 * d);
        assert_eq!(op.dirichlet_energy(&vec![0.0; mesh.n_vertices()]).unwrap(), 0.0);
        assert!(op.energy_psi(&f[1..], &sol.nodal_u).is_err());
    }

    #[test]
    fn vorticity_field_rejects_bad_contrast() {
        let mesh = structured_square(1.0, 2);
        assert!(VorticityField::new(&mesh, ElementSet::empty(), 1.0, 1.0).is_err());
        assert!(VorticityField::new(&mesh, ElementSet::empty(), 2.0, 0.0).is_err());
        assert!(VorticityField::new(&mesh, ElementSet::new(vec![99]), 2.0, 1.0).is_err());
    }

    #[test]
    fn csv_exports() {
        let mesh = structured_square(1.0, 2);
        let field = VorticityField::new(&mesh, ElementSet::new(vec![1]), 2.0, 1.0).unwrap();
        let csv = element_csv(&field);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "element_index,f,indicator");
        assert_eq!(lines[2], format!("1,{},1", fmt_f64(2.0)));
        assert!(lines[1].ends_with(",0"));
        let csv = nodal_csv(&mesh, &vec![0.5; mesh.n_vertices()]);
        assert_eq!(csv.lines().count(), mesh.n_vertices() + 1);
        assert!(csv.starts_with("vertex_index,x,y,u\n0,"));
    }
}
