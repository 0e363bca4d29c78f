//! Low-contrast regime `f = β + ε χ_D`.
//!
//! For small `ε` the extremal sets are level sets of the torsion-like solution
//! `φ₀` (right-hand side `β`): the super-level set `D_M` maximizes and the
//! sub-level set `D_m` minimizes. By linearity `u = φ₀ + ε φ₁(D)` where
//! `φ₁(D)` solves with right-hand side `χ_D`, so
//! `Ψ = ∫ β φ₀ + 2ε ∫_D φ₀ + ε² ∫_D φ₁(D)` holds exactly at the discrete level.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{PoissonOperator, StreamSolution};
use crate::init::random_set;
use crate::output::fmt_f64;
use crate::rearrange::{bathtub_set, element_representative, BathtubResult, Direction, LevelQuery};
use crate::set::ElementSet;

#[derive(Debug, Clone)]
pub struct LowContrastResult {
    pub phi0: StreamSolution,
    pub d_max: BathtubResult,
    pub d_min: BathtubResult,
    pub epsilon: f64,
}

impl LowContrastResult {
    pub fn t_max(&self) -> f64 {
        self.d_max.level
    }

    pub fn t_min(&self) -> f64 {
        self.d_min.level
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiExpansion {
    pub total: f64,
    /// `∫ β φ₀`
    pub term0: f64,
    /// `2ε ∫_D φ₀`
    pub term1: f64,
    /// `ε² ∫_D φ₁(D)`
    pub term2: f64,
}

pub fn torsion_phi0(op: &PoissonOperator<'_>, beta: f64) -> Result<StreamSolution> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    op.solve(&vec![beta; op.mesh().n_elements()])
}

pub fn low_contrast_sets(
    op: &PoissonOperator<'_>,
    beta: f64,
    epsilon: f64,
    target: f64,
    tol: f64,
) -> Result<LowContrastResult> {
    let phi0 = torsion_phi0(op, beta)?;
    let mesh = op.mesh();
    let reps = element_representative(mesh, &phi0.nodal_u);
    let d_max = bathtub_set(mesh, &reps, &LevelQuery::new(Direction::Super, target, tol))?;
    let d_min = bathtub_set(mesh, &reps, &LevelQuery::new(Direction::Sub, target, tol))?;
    Ok(LowContrastResult {
        phi0,
        d_max,
        d_min,
        epsilon,
    })
}

fn indicator(n: usize, set: &ElementSet) -> Vec<f64> {
    let mut chi = vec![0.0; n];
    for e in set.iter() {
        chi[e] = 1.0;
    }
    chi
}

/// Expansion with a precomputed `φ₀` for the same `β`.
pub fn psi_expansion_with(
    op: &PoissonOperator<'_>,
    phi0: &StreamSolution,
    epsilon: f64,
    set_d: &ElementSet,
) -> Result<PsiExpansion> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be non-negative, got {epsilon}"
        )));
    }
    let chi = indicator(op.mesh().n_elements(), set_d);
    let phi1 = op.solve(&chi)?;
    let term0 = phi0.psi;
    let term1 = 2.0 * epsilon * op.energy_psi(&chi, &phi0.nodal_u)?;
    let term2 = epsilon * epsilon * phi1.psi;
    Ok(PsiExpansion {
        total: term0 + term1 + term2,
        term0,
        term1,
        term2,
    })
}

pub fn psi_expansion(
    op: &PoissonOperator<'_>,
    beta: f64,
    epsilon: f64,
    set_d: &ElementSet,
) -> Result<PsiExpansion> {
    let phi0 = torsion_phi0(op, beta)?;
    psi_expansion_with(op, &phi0, epsilon, set_d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    /// Ψ of the low-contrast optimal set.
    pub psi_opt: f64,
    /// Ψ of the random comparison set.
    pub psi_d: f64,
    /// Non-negative when the optimal set wins.
    pub margin: f64,
}

/// Compares the optimal set against `trials` random sets of the same
/// measure; trial `k` uses seed `seed + k`.
pub fn random_trials(
    op: &PoissonOperator<'_>,
    result: &LowContrastResult,
    direction: Direction,
    trials: usize,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    let mesh = op.mesh();
    let opt = match direction {
        Direction::Super => &result.d_max,
        Direction::Sub => &result.d_min,
    };
    debug_assert!(result.phi0.nodal_u.len() == mesh.n_vertices());
    let psi_opt = psi_expansion_with(op, &result.phi0, result.epsilon, &opt.set_d)?.total;
    (0..trials)
        .into_par_iter()
        .map(|k| {
            let d = random_set(mesh, opt.achieved_measure, seed.wrapping_add(k as u64));
            let psi_d = psi_expansion_with(op, &result.phi0, result.epsilon, &d)?.total;
            let margin = match direction {
                Direction::Super => psi_opt - psi_d,
                Direction::Sub => psi_d - psi_opt,
            };
            Ok(TrialRecord {
                trial: k,
                psi_opt,
                psi_d,
                margin,
            })
        })
        .collect()
}

/// `trial,psi_DM,psi_D,margin` (header uses `psi_Dm` for the minimizing set).
pub fn trials_csv(records: &[TrialRecord], direction: Direction) -> String {
    let opt = match direction {
        Direction::Super => "psi_DM",
        Direction::Sub => "psi_Dm",
    };
    let mut out = format!("trial,{opt},psi_D,margin\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.trial,
            fmt_f64(r.psi_opt),
            fmt_f64(r.psi_d),
            fmt_f64(r.margin)
        );
    }
    out
}
