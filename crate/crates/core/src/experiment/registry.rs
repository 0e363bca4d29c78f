//! Name-keyed registries of experiment modes and initializers.

use crate::error::{Error, Result};
use crate::experiment::{ExperimentConfig, Output, Workspace};
use crate::init::{ball_set, balls_set, random_set};
use crate::low_contrast::low_contrast_sets;
use crate::mesh::Point;
use crate::optimize::{rearrangement_correlation, Goal};
use crate::set::ElementSet;

pub trait Named {
    fn name(&self) -> &'static str;
}

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: Vec<Box<T>>,
}

impl<T: ?Sized + Named> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: Vec::new(),
        }
    }

    /// Adds `entry`, replacing any entry registered under the same name.
    pub fn register(&mut self, entry: Box<T>) {
        self.entries.retain(|e| e.name() != entry.name());
        self.entries.push(entry);
    }

    pub fn get(&self, name: &str) -> Result<&T> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .map(|e| &**e)
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut names: Vec<_> = self.entries.iter().map(|e| e.name()).collect();
        names.sort_unstable();
        names
    }
}

/// One experiment kind: reads the config, runs, and records into `out`.
pub trait Mode: Named + Send + Sync {
    fn needs_mesh(&self) -> bool {
        true
    }

    fn run(
        &self,
        config: &ExperimentConfig,
        ws: Option<&Workspace<'_>>,
        initializers: &Registry<dyn Initializer>,
        out: &mut Output,
    ) -> Result<()>;
}

/// Produces the starting set of one optimization run.
pub trait Initializer: Named + Send + Sync {
    fn initial_set(&self, ws: &Workspace<'_>, goal: Goal, seed: u64, args: &[f64]) -> Result<ElementSet>;
}

fn no_args(name: &str, args: &[f64]) -> Result<()> {
    if args.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(format!("initializer {name} takes no arguments")))
    }
}

/// Level set of the torsion function: `D_M` when maximizing, `D_m` when
/// minimizing.
pub struct LowContrastInit;

impl Named for LowContrastInit {
    fn name(&self) -> &'static str {
        "low_contrast"
    }
}

impl Initializer for LowContrastInit {
    fn initial_set(&self, ws: &Workspace<'_>, goal: Goal, _seed: u64, args: &[f64]) -> Result<ElementSet> {
        no_args(self.name(), args)?;
        let cfg = &ws.opt;
        let res = low_contrast_sets(ws.op, cfg.beta, 0.0, cfg.target_measure, cfg.tol)?;
        Ok(match goal {
            Goal::Maximize => res.d_max.set_d,
            Goal::Minimize => res.d_min.set_d,
        })
    }
}

pub struct RandomInit;

impl Named for RandomInit {
    fn name(&self) -> &'static str {
        "random"
    }
}

impl Initializer for RandomInit {
    fn initial_set(&self, ws: &Workspace<'_>, _goal: Goal, seed: u64, args: &[f64]) -> Result<ElementSet> {
        no_args(self.name(), args)?;
        Ok(random_set(ws.mesh, ws.opt.target_measure, seed))
    }
}

/// Balls around the given points (`lobe(x1, y1, x2, y2, ...)`), split evenly.
/// Without points, a ball around the first dumbbell lobe.
pub struct LobeInit;

impl Named for LobeInit {
    fn name(&self) -> &'static str {
        "lobe"
    }
}

impl Initializer for LobeInit {
    fn initial_set(&self, ws: &Workspace<'_>, _goal: Goal, _seed: u64, args: &[f64]) -> Result<ElementSet> {
        let target = ws.opt.target_measure;
        if args.is_empty() {
            let centers = ws.shape.lobe_centers().ok_or_else(|| {
                Error::Config(format!(
                    "initializer lobe without points needs a dumbbell, got {}",
                    ws.shape.name()
                ))
            })?;
            return Ok(ball_set(ws.mesh, centers[0], target));
        }
        if !args.len().is_multiple_of(2) {
            return Err(Error::Config(format!(
                "initializer lobe expects x, y pairs, got {} numbers",
                args.len()
            )));
        }
        let points: Vec<Point> = args.chunks(2).map(|p| [p[0], p[1]]).collect();
        Ok(balls_set(ws.mesh, &points, target))
    }
}

/// Runs the opposite optimization first and starts from the rearrangement
/// least correlated with its result.
pub struct ConjectureInit;

impl Named for ConjectureInit {
    fn name(&self) -> &'static str {
        "conjecture_seed"
    }
}

impl Initializer for ConjectureInit {
    fn initial_set(&self, ws: &Workspace<'_>, goal: Goal, seed: u64, args: &[f64]) -> Result<ElementSet> {
        no_args(self.name(), args)?;
        let opposite = match goal {
            Goal::Maximize => Goal::Minimize,
            Goal::Minimize => Goal::Maximize,
        };
        let start = LowContrastInit.initial_set(ws, opposite, seed, &[])?;
        let other = opposite.run(ws.op, start, &ws.opt)?;
        let (_, farthest) = rearrangement_correlation(ws.mesh, &other.final_field, &other.final_field)?;
        Ok(farthest.set_d().clone())
    }
}

pub fn builtin_initializers() -> Registry<dyn Initializer> {
    let mut r: Registry<dyn Initializer> = Registry::new("initializer");
    r.register(Box::new(LowContrastInit));
    r.register(Box::new(RandomInit));
    r.register(Box::new(LobeInit));
    r.register(Box::new(ConjectureInit));
    r
}
