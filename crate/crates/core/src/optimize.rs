//! Rearrangement iterations for the extremal energies.
//!
//! [`maximize`] replaces `D` by the super-level set of its own stream
//! function at every step. [`minimize`] moves mass from the highest part of
//! `D` to the lowest part of the sub-level candidate, shrinking the swap
//! until a sufficient decrease condition holds.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{element_integrals, PoissonOperator, StreamSolution, VorticityField};
use crate::output::fmt_f64;
use crate::rearrange::{
    bathtub_set, element_representative, select_prefix, Direction, LevelQuery,
    DEFAULT_TOL_FRACTION,
};
use crate::set::ElementSet;

/// Relative slack on Ψ used by the monotonicity guard.
pub const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Prescribed measure `A` of `D`.
    pub target_measure: f64,
    /// Measure tolerance for level queries.
    pub tol: f64,
    /// Stop once `|ΔΨ| < psi_tol · Ψ`.
    pub psi_tol: f64,
    pub max_iter: usize,
    /// Smallest swap measure tried by [`minimize`]; `None` means the smallest
    /// element area.
    pub swap_floor: Option<f64>,
    /// When the sufficient decrease test rejects a swap, accept it anyway if
    /// a solve shows that Ψ strictly decreases.
    pub verified_fallback: bool,
}

impl OptimizeConfig {
    pub fn new(alpha: f64, beta: f64, target_measure: f64, total_area: f64) -> Self {
        OptimizeConfig {
            alpha,
            beta,
            target_measure,
            tol: DEFAULT_TOL_FRACTION * total_area,
            psi_tol: 1e-9,
            max_iter: 100,
            swap_floor: None,
            verified_fallback: true,
        }
    }

    pub fn validate(&self, total_area: f64) -> Result<()> {
        if !(self.beta > 0.0) || !(self.alpha > self.beta) {
            return Err(Error::NonPositiveContrast {
                alpha: self.alpha,
                beta: self.beta,
            });
        }
        if !(self.target_measure > 0.0 && self.target_measure < total_area) {
            return Err(Error::MeasureOutOfRange {
                target: self.target_measure,
                total: total_area,
            });
        }
        if !(self.tol > 0.0) || !(self.psi_tol >= 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "tol must be positive, psi_tol non-negative and max_iter at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopReason {
    DeltaPsiBelowTol,
    SetUnchanged,
    MaxIter,
    SwapFloor,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::DeltaPsiBelowTol => "delta_psi_below_tol",
            StopReason::SetUnchanged => "set_unchanged",
            StopReason::MaxIter => "max_iter",
            StopReason::SwapFloor => "swap_floor",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub psi: f64,
    pub measure: f64,
    /// `|D_n Δ D_{n-1}|`, zero for the initial set.
    pub set_change_area: f64,
    /// Swap halvings spent on this step (always zero when maximizing).
    pub halvings: usize,
}

#[derive(Debug, Clone)]
pub struct OptimizationTrace {
    pub records: Vec<IterationRecord>,
    pub final_field: VorticityField,
    pub final_solution: StreamSolution,
    pub stop_reason: StopReason,
}

impl OptimizationTrace {
    pub fn psi(&self) -> f64 {
        self.final_solution.psi
    }

    pub fn final_set(&self) -> &ElementSet {
        self.final_field.set_d()
    }

    /// Number of accepted updates.
    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    /// `iter,psi,measure_D,set_change_area,halvings` plus a `# stop_reason=` footer.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,psi,measure_D,set_change_area,halvings\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.iter,
                fmt_f64(r.psi),
                fmt_f64(r.measure),
                fmt_f64(r.set_change_area),
                r.halvings
            );
        }
        let _ = writeln!(out, "# stop_reason={}", self.stop_reason.as_str());
        out
    }
}

/// `d / (2√π)` with `d` the diameter of the domain.
pub fn theta(diameter: f64) -> f64 {
    diameter / (2.0 * PI.sqrt())
}

struct Step {
    field: VorticityField,
    solution: StreamSolution,
}

fn solve_set(op: &PoissonOperator<'_>, set: ElementSet, cfg: &OptimizeConfig) -> Result<Step> {
    let field = VorticityField::new(op.mesh(), set, cfg.alpha, cfg.beta)?;
    let solution = op.solve_field(&field)?;
    Ok(Step { field, solution })
}

fn record(iter: usize, step: &Step, change: f64, halvings: usize) -> IterationRecord {
    IterationRecord {
        iter,
        psi: step.solution.psi,
        measure: step.field.measure_d(),
        set_change_area: change,
        halvings,
    }
}

fn finish(records: Vec<IterationRecord>, step: Step, stop_reason: StopReason) -> OptimizationTrace {
    OptimizationTrace {
        records,
        final_field: step.field,
        final_solution: step.solution,
        stop_reason,
    }
}

pub fn maximize(
    op: &PoissonOperator<'_>,
    initial: ElementSet,
    cfg: &OptimizeConfig,
) -> Result<OptimizationTrace> {
    let mesh = op.mesh();
    cfg.validate(mesh.total_area())?;
    let mut current = solve_set(op, initial, cfg)?;
    let mut records = vec![record(0, &current, 0.0, 0)];
    let mut seen = HashSet::from([current.field.set_d().clone()]);
    let query = LevelQuery::new(Direction::Super, cfg.target_measure, cfg.tol);
    for iter in 1..=cfg.max_iter {
        let reps = element_representative(mesh, &current.solution.nodal_u);
        let next_set = bathtub_set(mesh, &reps, &query)?.set_d;
        // a repeated set (two-cycle from tie-breaking) counts as unchanged
        if seen.contains(&next_set) {
            return Ok(finish(records, current, StopReason::SetUnchanged));
        }
        let change = next_set.symmetric_difference_area(current.field.set_d(), mesh);
        let next = solve_set(op, next_set.clone(), cfg)?;
        let old = current.solution.psi;
        let delta = next.solution.psi - old;
        if delta < -MONOTONE_SLACK * old.abs() {
            return Ok(finish(records, current, StopReason::SetUnchanged));
        }
        seen.insert(next_set);
        records.push(record(iter, &next, change, 0));
        current = next;
        if delta.abs() < cfg.psi_tol * old.abs() {
            return Ok(finish(records, current, StopReason::DeltaPsiBelowTol));
        }
    }
    Ok(finish(records, current, StopReason::MaxIter))
}

/// Sufficient decrease test for moving `B1 ⊂ D` out of `D` and `B2` in:
/// `∫_{B2} u − ∫_{B1} u + θ (α − β) |B1|^{3/2} < 0`. Returns the verdict and
/// the left-hand side.
pub fn swap_feasible(
    mesh: &crate::mesh::TriMesh,
    u_integrals: &[f64],
    b1: &ElementSet,
    b2: &ElementSet,
    alpha: f64,
    beta: f64,
    theta: f64,
) -> Result<(bool, f64)> {
    let overlap = b1.intersection(b2).len();
    if overlap > 0 {
        return Err(Error::OverlappingSwap(overlap));
    }
    if u_integrals.len() != mesh.n_elements() {
        return Err(Error::DimensionMismatch {
            what: "element integrals",
            expected: mesh.n_elements(),
            got: u_integrals.len(),
        });
    }
    let int = |s: &ElementSet| s.iter().map(|e| u_integrals[e]).sum::<f64>();
    let margin = int(b2) - int(b1) + theta * (alpha - beta) * b1.measure(mesh).powf(1.5);
    Ok((margin < 0.0, margin))
}

fn ordered_by(values: &[f64], set: &ElementSet, direction: Direction) -> Vec<usize> {
    let mut order: Vec<usize> = set.iter().collect();
    order.sort_by(|&a, &b| {
        let v = match direction {
            Direction::Super => values[b].total_cmp(&values[a]),
            Direction::Sub => values[a].total_cmp(&values[b]),
        };
        v.then(a.cmp(&b))
    });
    order
}

pub fn minimize(
    op: &PoissonOperator<'_>,
    initial: ElementSet,
    cfg: &OptimizeConfig,
) -> Result<OptimizationTrace> {
    let mesh = op.mesh();
    cfg.validate(mesh.total_area())?;
    let theta = theta(mesh.metrics().diameter);
    let floor = cfg.swap_floor.unwrap_or_else(|| mesh.min_element_area());
    let areas = mesh.element_area();
    let mut current = solve_set(op, initial, cfg)?;
    let mut records = vec![record(0, &current, 0.0, 0)];
    let mut seen = HashSet::from([current.field.set_d().clone()]);
    let query = LevelQuery::new(Direction::Sub, cfg.target_measure, cfg.tol);
    for iter in 1..=cfg.max_iter {
        let u = &current.solution.nodal_u;
        let reps = element_representative(mesh, u);
        let integrals = element_integrals(mesh, u);
        let d = current.field.set_d();
        let candidate = bathtub_set(mesh, &reps, &query)?.set_d;
        let b = candidate.difference(d);
        let b_prime = d.difference(&candidate);
        if b.is_empty() && b_prime.is_empty() {
            return Ok(finish(records, current, StopReason::SetUnchanged));
        }
        let deficit = cfg.target_measure - current.field.measure_d();
        let high_first = ordered_by(&reps, &b_prime, Direction::Super);
        let low_first = ordered_by(&reps, &b, Direction::Sub);
        let phases: &[bool] = if cfg.verified_fallback { &[false, true] } else { &[false] };
        let mut halvings = 0;
        let mut accepted = None;
        'phases: for &verified in phases {
            let mut swap = b.measure(mesh).max(floor);
            while swap >= floor {
                let b1 = ElementSet::new(select_prefix(areas, &high_first, swap, true));
                let b2_target = b1.measure(mesh) + deficit;
                let b2 = if b2_target > 0.0 {
                    ElementSet::new(select_prefix(areas, &low_first, b2_target, true))
                } else {
                    ElementSet::empty()
                };
                let (ok, _) =
                    swap_feasible(mesh, &integrals, &b1, &b2, cfg.alpha, cfg.beta, theta)?;
                let next_set = d.difference(&b1).union(&b2);
                if (ok || verified) && &next_set != d && !seen.contains(&next_set) {
                    let next = solve_set(op, next_set, cfg)?;
                    let old = current.solution.psi;
                    if next.solution.psi < old {
                        accepted = Some(next);
                        break 'phases;
                    }
                }
                swap /= 2.0;
                halvings += 1;
            }
        }
        let Some(next) = accepted else {
            return Ok(finish(records, current, StopReason::SwapFloor));
        };
        let old = current.solution.psi;
        let delta = next.solution.psi - old;
        let change = next.field.set_d().symmetric_difference_area(d, mesh);
        seen.insert(next.field.set_d().clone());
        records.push(record(iter, &next, change, halvings));
        current = next;
        if delta.abs() < cfg.psi_tol * old.abs() {
            return Ok(finish(records, current, StopReason::DeltaPsiBelowTol));
        }
    }
    Ok(finish(records, current, StopReason::MaxIter))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Goal {
    Maximize,
    Minimize,
}

impl Goal {
    pub fn run(
        self,
        op: &PoissonOperator<'_>,
        initial: ElementSet,
        cfg: &OptimizeConfig,
    ) -> Result<OptimizationTrace> {
        match self {
            Goal::Maximize => maximize(op, initial, cfg),
            Goal::Minimize => minimize(op, initial, cfg),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Index into the run list of the best member.
    pub representative: usize,
    pub members: Vec<usize>,
    pub psi: f64,
}

/// Greedy clustering: runs sorted by Ψ (best first for the goal), each joins
/// the first cluster whose representative is within `radius` in measure of
/// symmetric difference.
pub fn cluster_runs(
    mesh: &crate::mesh::TriMesh,
    runs: &[OptimizationTrace],
    goal: Goal,
    radius: f64,
) -> Vec<Cluster> {
    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by(|&a, &b| {
        let c = runs[b].psi().total_cmp(&runs[a].psi());
        match goal {
            Goal::Maximize => c,
            Goal::Minimize => c.reverse(),
        }
        .then(a.cmp(&b))
    });
    let mut clusters: Vec<Cluster> = Vec::new();
    for k in order {
        let set = runs[k].final_set();
        let home = clusters.iter_mut().find(|c| {
            runs[c.representative]
                .final_set()
                .symmetric_difference_area(set, mesh)
                <= radius
        });
        match home {
            Some(c) => c.members.push(k),
            None => clusters.push(Cluster {
                representative: k,
                members: vec![k],
                psi: runs[k].psi(),
            }),
        }
    }
    clusters
}

#[derive(Debug, Clone)]
pub struct MultistartResult {
    pub runs: Vec<OptimizationTrace>,
    pub clusters: Vec<Cluster>,
}

/// Runs every initial set in parallel and clusters the final sets at
/// `2% · |Ω|`.
pub fn multistart(
    op: &PoissonOperator<'_>,
    initials: Vec<ElementSet>,
    cfg: &OptimizeConfig,
    goal: Goal,
) -> Result<MultistartResult> {
    let runs = initials
        .into_par_iter()
        .map(|init| goal.run(op, init, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mesh = op.mesh();
    let clusters = cluster_runs(mesh, &runs, goal, 0.02 * mesh.total_area());
    Ok(MultistartResult { runs, clusters })
}

/// `∫ f f̂` and the rearrangement of `f` minimizing it: `α` on the
/// smallest-`f̂` elements.
pub fn rearrangement_correlation(
    mesh: &crate::mesh::TriMesh,
    f: &VorticityField,
    f_hat: &VorticityField,
) -> Result<(f64, VorticityField)> {
    let n = mesh.n_elements();
    for v in [f.element_value(), f_hat.element_value()] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                what: "element values",
                expected: n,
                got: v.len(),
            });
        }
    }
    let tol = DEFAULT_TOL_FRACTION * mesh.total_area();
    if f.alpha() != f_hat.alpha()
        || f.beta() != f_hat.beta()
        || (f.measure_d() - f_hat.measure_d()).abs() > tol
    {
        return Err(Error::InvalidParameter(format!(
            "fields are not rearrangements of each other: (α, β, |D|) = ({}, {}, {}) vs ({}, {}, {})",
            f.alpha(),
            f.beta(),
            f.measure_d(),
            f_hat.alpha(),
            f_hat.beta(),
            f_hat.measure_d()
        )));
    }
    let corr = correlation(mesh, f.element_value(), f_hat.element_value());
    let query = LevelQuery::new(Direction::Sub, f.measure_d(), tol);
    let set = bathtub_set(mesh, f_hat.element_value(), &query)?.set_d;
    Ok((corr, VorticityField::new(mesh, set, f.alpha(), f.beta())?))
}

/// `Σ_e f_e g_e |e|`
pub fn correlation(mesh: &crate::mesh::TriMesh, f: &[f64], g: &[f64]) -> f64 {
    f.iter()
        .zip(g)
        .zip(mesh.element_area())
        .map(|((a, b), w)| a * b * w)
        .sum()
}
