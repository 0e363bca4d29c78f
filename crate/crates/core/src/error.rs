use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("{file}:{line}: {message}")]
    MeshFormat {
        file: String,
        line: usize,
        message: String,
    },

    #[error("mesh has no interior vertices; the Dirichlet problem has no unknowns")]
    NoInteriorVertices,

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("dimension mismatch: expected {expected} {what}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("target measure {target} must lie strictly between 0 and |Ω| = {total}")]
    MeasureOutOfRange { target: f64, total: f64 },

    #[error("contrast must be positive: alpha = {alpha} must exceed beta = {beta} > 0")]
    NonPositiveContrast { alpha: f64, beta: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("swap sets B1 and B2 overlap in {0} element(s)")]
    OverlappingSwap(usize),

    #[error("radial rings must have strictly increasing outer radii ending at R")]
    InvalidRings,

    #[error("radius {r} outside [0, {radius}]")]
    RadiusOutOfRange { r: f64, radius: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("unknown {kind} '{name}' (registered: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("{context}: {source}")]
    Run {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn with_context(self, context: impl Into<String>) -> Self {
        Error::Run {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
