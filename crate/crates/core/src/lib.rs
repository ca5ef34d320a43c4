//! Algebraic multigrid with momentum-accelerated coarse solvers.
//!
//! The crate assembles linear finite-element model problems, builds an
//! unsmoothed-aggregation hierarchy, and runs V/W-, AMLI-, K-, H- and
//! N-cycles as stand-alone stationary solvers. The polynomial module
//! evaluates the error polynomials and convergence thresholds behind the
//! inner solvers.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accel;
pub mod bench;
pub mod cycle;
pub mod direct;
pub mod error;
pub mod hierarchy;
pub mod io;
pub mod poly;
pub mod problems;
pub mod smoothing;
pub mod sparse;
pub mod spectral;

pub use accel::{InitialStep, MomentumOptions, NesterovForm, Preconditioner, SpectralBounds};
pub use cycle::{
    stationary_solve, BoundPolicy, CycleKind, CycleSpec, Multigrid, SolveOptions, SolveReport,
    SolveStatus,
};
pub use error::{Error, Result};
pub use hierarchy::{Hierarchy, HierarchyConfig};
pub use problems::{Example, ProblemSpec};
pub use sparse::SparseMatrix;
