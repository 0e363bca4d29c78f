//! Built-in experiment modes.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::experiment::registry::{Initializer, Mode, Named, Registry};
use crate::experiment::{ClusterSummary, ExperimentConfig, Output, RunSummary, Workspace};
use crate::fem::{element_csv, nodal_csv};
use crate::init::random_set;
use crate::low_contrast::{low_contrast_sets, psi_expansion_with, random_trials, trials_csv};
use crate::optimize::{
    correlation, multistart, rearrangement_correlation, Goal, OptimizationTrace,
};
use crate::output::fmt_f64;
use crate::radial::{radial_solve, RadialConfig};
use crate::rearrange::{element_representative, set_list, Direction};
use crate::set::ElementSet;

fn workspace<'w, 'a>(ws: Option<&'w Workspace<'a>>) -> Result<&'w Workspace<'a>> {
    ws.ok_or_else(|| Error::Config("this mode needs a mesh (set 'shape' and 'target_h')".into()))
}

/// Threshold separating `set` from its complement under the final solution.
fn final_level(trace: &OptimizationTrace, ws: &Workspace<'_>, goal: Goal) -> f64 {
    let reps = element_representative(ws.mesh, &trace.final_solution.nodal_u);
    let inside = trace.final_set().iter().map(|e| reps[e]);
    match goal {
        Goal::Maximize => inside.fold(f64::INFINITY, f64::min),
        Goal::Minimize => inside.fold(f64::NEG_INFINITY, f64::max),
    }
}

fn write_run(out: &mut Output, ws: &Workspace<'_>, goal: Goal, tag: &str, trace: &OptimizationTrace) -> Result<()> {
    out.write(&format!("trace_{tag}.csv"), &trace.to_csv())?;
    out.write(&format!("field_{tag}.csv"), &element_csv(&trace.final_field))?;
    out.write(
        &format!("u_{tag}.csv"),
        &nodal_csv(ws.mesh, &trace.final_solution.nodal_u),
    )?;
    let level = final_level(trace, ws, goal);
    out.write(
        &format!("set_{tag}.txt"),
        &set_list(trace.final_set(), trace.final_field.measure_d(), level),
    )
}

fn initial_sets(
    config: &ExperimentConfig,
    ws: &Workspace<'_>,
    initializers: &Registry<dyn Initializer>,
    goal: Goal,
) -> Result<Vec<ElementSet>> {
    let init = initializers.get(&config.initializer.name)?;
    config
        .seeds
        .iter()
        .map(|&seed| init.initial_set(ws, goal, seed, &config.initializer.args))
        .collect()
}

pub struct OptimizeMode(pub Goal);

impl Named for OptimizeMode {
    fn name(&self) -> &'static str {
        match self.0 {
            Goal::Maximize => "maximize",
            Goal::Minimize => "minimize",
        }
    }
}

impl Mode for OptimizeMode {
    fn run(
        &self,
        config: &ExperimentConfig,
        ws: Option<&Workspace<'_>>,
        initializers: &Registry<dyn Initializer>,
        out: &mut Output,
    ) -> Result<()> {
        let ws = workspace(ws)?;
        let goal = self.0;
        let inits = initial_sets(config, ws, initializers, goal)?;
        let result = multistart(ws.op, inits, &ws.opt, goal)?;
        for (k, (trace, &seed)) in result.runs.iter().zip(&config.seeds).enumerate() {
            write_run(out, ws, goal, &format!("seed{seed}"), trace)?;
            out.runs.push(RunSummary {
                index: k,
                seed,
                psi: trace.psi(),
                iterations: trace.iterations(),
                measure: trace.final_field.measure_d(),
                stop_reason: trace.stop_reason,
            });
        }
        let mut csv = String::from("cluster,representative_seed,psi,members\n");
        for (c, cluster) in result.clusters.iter().enumerate() {
            let seeds: Vec<u64> = cluster.members.iter().map(|&m| config.seeds[m]).collect();
            let members: Vec<String> = seeds.iter().map(u64::to_string).collect();
            let _ = writeln!(
                csv,
                "{c},{},{},{}",
                config.seeds[cluster.representative],
                fmt_f64(cluster.psi),
                members.join(" ")
            );
            out.clusters.push(ClusterSummary {
                representative_seed: config.seeds[cluster.representative],
                psi: cluster.psi,
                member_seeds: seeds,
            });
        }
        out.write("clusters.csv", &csv)?;
        let best = &result.runs[result.clusters[0].representative];
        out.psi = Some(best.psi());
        out.entry("psi", fmt_f64(best.psi()));
        out.entry("clusters", result.clusters.len().to_string());
        Ok(())
    }
}

pub struct LowContrastMode;

impl Named for LowContrastMode {
    fn name(&self) -> &'static str {
        "low_contrast"
    }
}

impl Mode for LowContrastMode {
    fn run(
        &self,
        config: &ExperimentConfig,
        ws: Option<&Workspace<'_>>,
        _initializers: &Registry<dyn Initializer>,
        out: &mut Output,
    ) -> Result<()> {
        let ws = workspace(ws)?;
        let opt = &ws.opt;
        let epsilon = config.epsilon.unwrap_or(0.01 * opt.beta);
        let res = low_contrast_sets(ws.op, opt.beta, epsilon, opt.target_measure, opt.tol)?;
        out.write("phi0.csv", &nodal_csv(ws.mesh, &res.phi0.nodal_u))?;
        out.write("set_DM.txt", &res.d_max.to_set_list())?;
        out.write("set_Dm.txt", &res.d_min.to_set_list())?;
        out.entry("epsilon", fmt_f64(epsilon));
        out.entry("t_M", fmt_f64(res.t_max()));
        out.entry("t_m", fmt_f64(res.t_min()));
        let seed = config.seeds[0];
        for (direction, tag, set) in [
            (Direction::Super, "DM", &res.d_max),
            (Direction::Sub, "Dm", &res.d_min),
        ] {
            let e = psi_expansion_with(ws.op, &res.phi0, epsilon, &set.set_d)?;
            out.entry(&format!("measure_{tag}"), fmt_f64(set.achieved_measure));
            out.entry(&format!("psi_{tag}"), fmt_f64(e.total));
            out.entry(&format!("psi_{tag}.term0"), fmt_f64(e.term0));
            out.entry(&format!("psi_{tag}.term1"), fmt_f64(e.term1));
            out.entry(&format!("psi_{tag}.term2"), fmt_f64(e.term2));
            let trials = random_trials(ws.op, &res, direction, config.trials, seed)?;
            let worst = trials.iter().map(|t| t.margin).fold(f64::INFINITY, f64::min);
            out.entry(&format!("trials_{tag}.min_margin"), fmt_f64(worst));
            out.entry(
                &format!("trials_{tag}.wins"),
                format!("{}/{}", trials.iter().filter(|t| t.margin >= 0.0).count(), trials.len()),
            );
            out.write(&format!("trials_{tag}.csv"), &trials_csv(&trials, direction))?;
        }
        Ok(())
    }
}

pub struct OracleMode;

impl Named for OracleMode {
    fn name(&self) -> &'static str {
        "oracle"
    }
}

impl Mode for OracleMode {
    fn needs_mesh(&self) -> bool {
        false
    }

    fn run(
        &self,
        config: &ExperimentConfig,
        _ws: Option<&Workspace<'_>>,
        _initializers: &Registry<dyn Initializer>,
        out: &mut Output,
    ) -> Result<()> {
        if config.rings.is_empty() {
            return Err(Error::Config("mode = oracle requires 'rings'".into()));
        }
        let sol = radial_solve(&RadialConfig::new(config.rings.clone())?);
        out.write("radial_profile.csv", &sol.samples_csv(400))?;
        out.psi = Some(sol.psi);
        out.entry("psi", fmt_f64(sol.psi));
        out.entry("u_center", fmt_f64(sol.eval(0.0)?));
        Ok(())
    }
}

/// Correlation between the maximizer and the minimizer against random
/// rearrangements of the maximizer.
pub struct ConjectureMode;

impl Named for ConjectureMode {
    fn name(&self) -> &'static str {
        "conjecture"
    }
}

impl Mode for ConjectureMode {
    fn run(
        &self,
        config: &ExperimentConfig,
        ws: Option<&Workspace<'_>>,
        initializers: &Registry<dyn Initializer>,
        out: &mut Output,
    ) -> Result<()> {
        let ws = workspace(ws)?;
        let init = initializers.get(&config.initializer.name)?;
        let seed = config.seeds[0];
        let args = &config.initializer.args;
        let start_max = init.initial_set(ws, Goal::Maximize, seed, args)?;
        let start_min = init.initial_set(ws, Goal::Minimize, seed, args)?;
        let f_max = Goal::Maximize.run(ws.op, start_max, &ws.opt)?;
        let f_min = Goal::Minimize.run(ws.op, start_min, &ws.opt)?;
        write_run(out, ws, Goal::Maximize, "max", &f_max)?;
        write_run(out, ws, Goal::Minimize, "min", &f_min)?;

        let (corr, farthest) =
            rearrangement_correlation(ws.mesh, &f_max.final_field, &f_min.final_field)?;
        let bathtub_min = correlation(
            ws.mesh,
            farthest.element_value(),
            f_min.final_field.element_value(),
        );
        let mut csv = String::from("sample,correlation\n");
        let mut random_min = f64::INFINITY;
        let measure = f_max.final_field.measure_d();
        for k in 0..config.samples {
            let set = random_set(ws.mesh, measure, seed.wrapping_add(k as u64));
            let g = crate::fem::VorticityField::new(ws.mesh, set, ws.opt.alpha, ws.opt.beta)?;
            let c = correlation(ws.mesh, g.element_value(), f_min.final_field.element_value());
            random_min = random_min.min(c);
            let _ = writeln!(csv, "{k},{}", fmt_f64(c));
        }
        out.write("correlation_samples.csv", &csv)?;
        out.psi = Some(f_max.psi());
        out.entry("psi_max", fmt_f64(f_max.psi()));
        out.entry("psi_min", fmt_f64(f_min.psi()));
        out.entry("correlation", fmt_f64(corr));
        out.entry("correlation.bathtub_min", fmt_f64(bathtub_min));
        out.entry("correlation.random_min", fmt_f64(random_min));
        Ok(())
    }
}

pub fn builtin_modes() -> Registry<dyn Mode> {
    let mut r: Registry<dyn Mode> = Registry::new("mode");
    r.register(Box::new(OptimizeMode(Goal::Maximize)));
    r.register(Box::new(OptimizeMode(Goal::Minimize)));
    r.register(Box::new(LowContrastMode));
    r.register(Box::new(OracleMode));
    r.register(Box::new(ConjectureMode));
    r
}
