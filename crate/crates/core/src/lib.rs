//! Finite-element Poisson solver and rearrangement optimizers for the
//! kinetic energy `Ψ(f) = ∫ f u_f` of two-valued vorticity fields.

pub mod error;
pub mod experiment;
pub mod fem;
pub mod init;
pub mod low_contrast;
pub mod mesh;
pub mod optimize;
pub mod output;
pub mod radial;
pub mod rearrange;
pub mod set;
pub mod sparse;

pub use error::{Error, Result};
pub use fem::{PoissonOperator, StreamSolution, VorticityField};
pub use mesh::{generate_domain, MeshMetrics, ShapeSpec, TriMesh};
pub use set::ElementSet;
