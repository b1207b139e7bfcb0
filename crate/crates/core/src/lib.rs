//! Spectral-element solver for the Helmholtz equation `lambda u - div(grad u) = f`
//! on Cartesian meshes of cuboidal elements.
//!
//! The element interiors are eliminated by static condensation and the
//! remaining boundary-coupled system is solved with a preconditioned
//! conjugate gradient method. Three evaluation strategies for the condensed
//! element operator are provided:
//!
//! * `MMC` — one dense boundary-to-boundary matrix per distinct geometry,
//! * `TPC` — tensor-product sum-factorization through the interior
//!   eigenspace,
//! * `TPT` — tensor-product factorization in a transformed nodal basis in
//!   which the interior blocks and the face self-couplings are diagonal.
//!
//! All kernels carry optional multiplication counters so that the operation
//! counts of the three variants can be verified directly.

pub mod basis;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod operators;
pub mod problem;
pub mod solver;
pub mod tensor;

pub use basis::{Basis1D, InteriorEigen, TransformedBasis1D};
pub use error::Error;
pub use mesh::{CartesianMesh, DofClasses, DofMap, MetricCoefficients};
pub use operators::{ApplyCounters, DegreeData, Variant};
pub use problem::ManufacturedProblem;
pub use solver::{
    CondensedSystem, Preconditioner, Solution, SolveReport, SolverConfig,
    SolverKind,
};
pub use tensor::{Field3, MulCounter};

pub type Result<T> = std::result::Result<T, Error>;
