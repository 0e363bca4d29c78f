//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # disk maximization
//! shape = disk
//! shape.radius = 2
//! target_h = 0.05
//! alpha = 2
//! beta = 1
//! area_A = fraction:0.25
//! mode = maximize
//! seeds = 0, 1, 2
//! initializer = random
//! output_dir = out/disk_max
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mesh::ShapeSpec;
use crate::rearrange::DEFAULT_TOL_FRACTION;

/// A measure given either absolutely or as a fraction of |Ω|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measure {
    Absolute(f64),
    Fraction(f64),
}

impl Measure {
    pub fn resolve(self, total_area: f64) -> f64 {
        match self {
            Measure::Absolute(a) => a,
            Measure::Fraction(q) => q * total_area,
        }
    }

    fn parse(key: &str, raw: &str) -> Result<Self> {
        match raw.strip_prefix("fraction:") {
            Some(q) => Ok(Measure::Fraction(parse_f64(key, q.trim())?)),
            None => Ok(Measure::Absolute(parse_f64(key, raw)?)),
        }
    }
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Measure::Absolute(a) => write!(f, "{a}"),
            Measure::Fraction(q) => write!(f, "fraction:{q}"),
        }
    }
}

/// Initializer name with optional numeric arguments, e.g. `lobe(-1.9, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitializerSpec {
    pub name: String,
    pub args: Vec<f64>,
}

impl InitializerSpec {
    pub fn parse(raw: &str) -> Result<Self> {
        let raw = raw.trim();
        let Some(open) = raw.find('(') else {
            return Ok(InitializerSpec {
                name: raw.to_string(),
                args: Vec::new(),
            });
        };
        let inner = raw[open + 1..]
            .strip_suffix(')')
            .ok_or_else(|| Error::Config(format!("initializer: missing ')' in '{raw}'")))?;
        let args = inner
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_f64("initializer", s))
            .collect::<Result<Vec<_>>>()?;
        Ok(InitializerSpec {
            name: raw[..open].trim().to_string(),
            args,
        })
    }
}

impl std::fmt::Display for InitializerSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.args.is_empty() {
            return write!(f, "{}", self.name);
        }
        let args: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
        write!(f, "{}({})", self.name, args.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Required by every mode except `oracle`.
    pub shape: Option<ShapeSpec>,
    pub target_h: f64,
    pub alpha: f64,
    pub beta: f64,
    pub area_a: Measure,
    pub mode: String,
    pub tol: Measure,
    pub psi_tol: f64,
    pub max_iter: usize,
    pub seeds: Vec<u64>,
    pub initializer: InitializerSpec,
    pub output_dir: PathBuf,
    /// `(outer_radius, value)` rings for the radial oracle.
    pub rings: Vec<(f64, f64)>,
    /// Perturbation size for `low_contrast`; defaults to `0.01 · beta`.
    pub epsilon: Option<f64>,
    /// Random comparison sets in `low_contrast`.
    pub trials: usize,
    /// Random rearrangements sampled in `conjecture`.
    pub samples: usize,
    pub swap_floor: Option<f64>,
    pub verified_fallback: bool,
}

const KEYS: &[&str] = &[
    "shape",
    "shape.radius",
    "shape.width",
    "shape.height",
    "shape.lobe_radius",
    "shape.neck_half_width",
    "shape.neck_length",
    "shape.scale",
    "shape.area",
    "target_h",
    "alpha",
    "beta",
    "area_A",
    "mode",
    "TOL",
    "psi_tol",
    "max_iter",
    "seeds",
    "initializer",
    "output_dir",
    "rings",
    "epsilon",
    "trials",
    "samples",
    "swap_floor",
    "verified_fallback",
];

fn parse_f64(key: &str, raw: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Config(format!("{key}: expected a number, got '{raw}'")))
}

fn parse_usize(key: &str, raw: &str) -> Result<usize> {
    raw.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected a non-negative integer, got '{raw}'")))
}

/// `0, 1, 5` or `0..10`.
fn parse_seeds(raw: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("seeds: expected '0, 1, 2' or 'a..b', got '{raw}'"));
    if let Some((a, b)) = raw.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if b <= a {
            return Err(bad());
        }
        return Ok((a..b).collect());
    }
    raw.split(',')
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}

/// `(1, 2), (2, 1)`
fn parse_rings(raw: &str) -> Result<Vec<(f64, f64)>> {
    let bad = || Error::Config(format!("rings: expected '(r1, f1), (r2, f2), ...', got '{raw}'"));
    let mut rings = Vec::new();
    let mut rest = raw.trim();
    while !rest.is_empty() {
        let body = rest.strip_prefix('(').ok_or_else(bad)?;
        let close = body.find(')').ok_or_else(bad)?;
        let (r, f) = body[..close].split_once(',').ok_or_else(bad)?;
        rings.push((parse_f64("rings", r)?, parse_f64("rings", f)?));
        rest = body[close + 1..].trim_start();
        rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
    }
    if rings.is_empty() {
        return Err(bad());
    }
    Ok(rings)
}

fn parse_bool(key: &str, raw: &str) -> Result<bool> {
    match raw.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got '{raw}'"))),
    }
}

fn read_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut pairs = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", i + 1)))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("line {}: unknown key '{key}'", i + 1)));
        }
        if pairs.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key '{key}'", i + 1)));
        }
    }
    Ok(pairs)
}

struct Pairs(BTreeMap<String, String>);

impl Pairs {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.raw(key)
            .ok_or_else(|| Error::Config(format!("missing key '{key}'")))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.raw(key).map_or(Ok(default), |v| parse_f64(key, v))
    }

    fn shape_param(&self, shape: &str, key: &str) -> Result<f64> {
        let full = format!("shape.{key}");
        let raw = self
            .raw(&full)
            .ok_or_else(|| Error::Config(format!("shape = {shape} requires '{full}'")))?;
        parse_f64(&full, raw)
    }
}

fn parse_shape(p: &Pairs) -> Result<Option<ShapeSpec>> {
    let Some(kind) = p.raw("shape") else {
        return Ok(None);
    };
    let shape = match kind {
        "disk" => ShapeSpec::Disk {
            radius: p.shape_param(kind, "radius")?,
        },
        "rectangle" => ShapeSpec::Rectangle {
            width: p.shape_param(kind, "width")?,
            height: p.shape_param(kind, "height")?,
        },
        "dumbbell" => ShapeSpec::Dumbbell {
            lobe_radius: p.shape_param(kind, "lobe_radius")?,
            neck_half_width: p.shape_param(kind, "neck_half_width")?,
            neck_length: p.shape_param(kind, "neck_length")?,
        },
        "heart" => match (p.raw("shape.scale"), p.raw("shape.area")) {
            (Some(s), None) => ShapeSpec::Heart {
                scale: parse_f64("shape.scale", s)?,
            },
            (None, Some(a)) => ShapeSpec::heart_with_area(parse_f64("shape.area", a)?)?,
            _ => {
                return Err(Error::Config(
                    "shape = heart requires exactly one of 'shape.scale' or 'shape.area'".into(),
                ))
            }
        },
        other => {
            return Err(Error::Config(format!(
                "shape: unknown shape '{other}' (expected disk, rectangle, dumbbell or heart)"
            )))
        }
    };
    shape.validate()?;
    Ok(Some(shape))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let p = Pairs(read_pairs(text)?);
        let mode = p.required("mode")?.to_string();
        let shape = parse_shape(&p)?;
        let oracle = mode == "oracle";
        if shape.is_none() && !oracle {
            return Err(Error::Config(format!("missing key 'shape' (required by mode = {mode})")));
        }
        let target_h = match (p.raw("target_h"), oracle) {
            (Some(v), _) => parse_f64("target_h", v)?,
            (None, true) => 0.0,
            (None, false) => return Err(Error::Config("missing key 'target_h'".into())),
        };
        let area_a = match (p.raw("area_A"), oracle) {
            (Some(v), _) => Measure::parse("area_A", v)?,
            (None, true) => Measure::Fraction(0.5),
            (None, false) => return Err(Error::Config("missing key 'area_A'".into())),
        };
        let (alpha, beta) = if oracle {
            (p.f64_or("alpha", 2.0)?, p.f64_or("beta", 1.0)?)
        } else {
            (
                parse_f64("alpha", p.required("alpha")?)?,
                parse_f64("beta", p.required("beta")?)?,
            )
        };
        let cfg = ExperimentConfig {
            shape,
            target_h,
            alpha,
            beta,
            area_a,
            mode,
            tol: p
                .raw("TOL")
                .map_or(Ok(Measure::Fraction(DEFAULT_TOL_FRACTION)), |v| Measure::parse("TOL", v))?,
            psi_tol: p.f64_or("psi_tol", 1e-9)?,
            max_iter: p.raw("max_iter").map_or(Ok(100), |v| parse_usize("max_iter", v))?,
            seeds: p.raw("seeds").map_or(Ok(vec![0]), parse_seeds)?,
            initializer: p
                .raw("initializer")
                .map_or(Ok(InitializerSpec::parse("low_contrast")?), InitializerSpec::parse)?,
            output_dir: PathBuf::from(p.raw("output_dir").unwrap_or("out")),
            rings: p.raw("rings").map_or(Ok(Vec::new()), parse_rings)?,
            epsilon: p.raw("epsilon").map(|v| parse_f64("epsilon", v)).transpose()?,
            trials: p.raw("trials").map_or(Ok(50), |v| parse_usize("trials", v))?,
            samples: p.raw("samples").map_or(Ok(200), |v| parse_usize("samples", v))?,
            swap_floor: p.raw("swap_floor").map(|v| parse_f64("swap_floor", v)).transpose()?,
            verified_fallback: p
                .raw("verified_fallback")
                .map_or(Ok(true), |v| parse_bool("verified_fallback", v))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| e.with_context(path.display().to_string()))
    }

    /// Checks everything that does not need the mesh.
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !(self.alpha > self.beta) {
            return Err(Error::NonPositiveContrast {
                alpha: self.alpha,
                beta: self.beta,
            });
        }
        if self.mode != "oracle" && !(self.target_h > 0.0) {
            return Err(Error::Config(format!(
                "target_h must be positive, got {}",
                self.target_h
            )));
        }
        match self.area_a {
            Measure::Fraction(q) if !(q > 0.0 && q < 1.0) => {
                return Err(Error::Config(format!(
                    "area_A: fraction must lie strictly between 0 and 1, got {q}"
                )))
            }
            Measure::Absolute(a) if !(a > 0.0) => {
                return Err(Error::Config(format!("area_A must be positive, got {a}")))
            }
            _ => {}
        }
        let tol = match self.tol {
            Measure::Absolute(t) | Measure::Fraction(t) => t,
        };
        if !(tol > 0.0) {
            return Err(Error::Config(format!("TOL must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds: at least one seed is required".into()));
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0) {
                return Err(Error::Config(format!("epsilon must be non-negative, got {e}")));
            }
        }
        Ok(())
    }

    /// `key = value` lines that parse back to an equal config.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        if let Some(shape) = &self.shape {
            push("shape", shape.name().to_string());
            match *shape {
                ShapeSpec::Disk { radius } => push("shape.radius", radius.to_string()),
                ShapeSpec::Rectangle { width, height } => {
                    push("shape.width", width.to_string());
                    push("shape.height", height.to_string());
                }
                ShapeSpec::Dumbbell {
                    lobe_radius,
                    neck_half_width,
                    neck_length,
                } => {
                    push("shape.lobe_radius", lobe_radius.to_string());
                    push("shape.neck_half_width", neck_half_width.to_string());
                    push("shape.neck_length", neck_length.to_string());
                }
                ShapeSpec::Heart { scale } => push("shape.scale", scale.to_string()),
            }
        }
        push("target_h", self.target_h.to_string());
        push("alpha", self.alpha.to_string());
        push("beta", self.beta.to_string());
        push("area_A", self.area_a.to_string());
        push("mode", self.mode.clone());
        push("TOL", self.tol.to_string());
        push("psi_tol", self.psi_tol.to_string());
        push("max_iter", self.max_iter.to_string());
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        push("seeds", seeds.join(", "));
        push("initializer", self.initializer.to_string());
        push("output_dir", self.output_dir.display().to_string());
        if !self.rings.is_empty() {
            let rings: Vec<String> = self.rings.iter().map(|(r, f)| format!("({r}, {f})")).collect();
            push("rings", rings.join(", "));
        }
        if let Some(e) = self.epsilon {
            push("epsilon", e.to_string());
        }
        push("trials", self.trials.to_string());
        push("samples", self.samples.to_string());
        if let Some(s) = self.swap_floor {
            push("swap_floor", s.to_string());
        }
        push("verified_fallback", self.verified_fallback.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DISK: &str = "\
# comment line
shape = disk
shape.radius = 2
target_h = 0.1   # trailing comment
alpha = 2
beta = 1
area_A = fraction:0.25
mode = maximize
seeds = 0..3
initializer = lobe(0.5, -0.25)
";

    #[test]
    fn parses_and_echoes() {
        let cfg = ExperimentConfig::parse(DISK).unwrap();
        assert_eq!(cfg.shape, Some(ShapeSpec::Disk { radius: 2.0 }));
        assert_eq!(cfg.area_a, Measure::Fraction(0.25));
        assert_eq!(cfg.seeds, vec![0, 1, 2]);
        assert_eq!(cfg.initializer.name, "lobe");
        assert_eq!(cfg.initializer.args, vec![0.5, -0.25]);
        assert_eq!(cfg.max_iter, 100);
        assert_eq!(cfg.tol, Measure::Fraction(DEFAULT_TOL_FRACTION));
        let text: String = cfg
            .echo()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        assert_eq!(ExperimentConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn oracle_needs_no_mesh_keys() {
        let cfg = ExperimentConfig::parse("mode = oracle\nrings = (1, 2), (2, 1)\n").unwrap();
        assert_eq!(cfg.rings, vec![(1.0, 2.0), (2.0, 1.0)]);
        assert!(cfg.shape.is_none());
    }

    #[test]
    fn errors_name_the_key() {
        let err = |text: &str| ExperimentConfig::parse(text).unwrap_err().to_string();
        assert!(err(&DISK.replace("alpha = 2", "alpha = 1")).contains("alpha = 1 must exceed beta = 1"));
        assert!(err(&DISK.replace("alpha = 2", "alpha = two")).contains("alpha"));
        assert!(err(&DISK.replace("mode = maximize\n", "")).contains("'mode'"));
        assert!(err(&format!("{DISK}colour = red\n")).contains("unknown key 'colour'"));
        assert!(err(&format!("{DISK}alpha = 3\n")).contains("duplicate key 'alpha'"));
        assert!(err(&DISK.replace("shape.radius = 2\n", "")).contains("shape.radius"));
        assert!(err(&DISK.replace("fraction:0.25", "fraction:1.5")).contains("area_A"));
        assert!(err(&DISK.replace("0..3", "3..1")).contains("seeds"));
        assert!(err(&format!("{DISK}TOL = -1\n")).contains("TOL"));
        assert!(err("mode = oracle\nrings = (1, 2\n").contains("rings"));
    }

    #[test]
    fn heart_by_area() {
        let text = DISK
            .replace("shape = disk", "shape = heart")
            .replace("shape.radius = 2", "shape.area = 18.85");
        let cfg = ExperimentConfig::parse(&text).unwrap();
        let shape = cfg.shape.unwrap();
        assert!((shape.analytic_area() - 18.85).abs() < 1e-6);
    }
}
