//! Sparse approximate inverse (SPAI) preconditioners whose columns are found
//! by minimizing a sequence of small QUBO problems, plus the finite-difference
//! Poisson systems and Krylov solvers used to evaluate them.
//!
//! The pipeline:
//!
//! 1. [`poisson::assemble`] builds the five-point stiffness matrix `K`.
//! 2. [`spai::compute_spai`] reduces each column of `K` to a tiny SPD system
//!    and solves it with the box algorithm ([`spai::sparse_box_solve`]). Every
//!    iteration of that algorithm is one QUBO ([`qubo::build_box_qubo`]),
//!    minimized exhaustively or by simulated annealing.
//! 3. [`krylov::pcg`] uses the resulting `M ≈ K⁻¹` as its preconditioner.
//!
//! ```
//! use qspai::{cg, compute_spai, pcg, BoxConfig, CgConfig, ExactSolver, GridSpec, MaterialField, PoissonProblem};
//!
//! let grid = GridSpec::unit(30, 20)?;
//! let problem = PoissonProblem::new(grid, &MaterialField::vertical_split(&grid, 1.0, 100.0)?, 1.0)?;
//! let spai = compute_spai(&problem.k, &BoxConfig::default(), &ExactSolver, true)?;
//! let (_, plain) = cg(&problem.k, &problem.b, &CgConfig::default())?;
//! let (_, precond) = pcg(&problem.k, &spai.m, &problem.b, &CgConfig::default())?;
//! assert!(precond.iterations < plain.iterations);
//! # Ok::<(), qspai::Error>(())
//! ```

pub mod anneal;
pub mod error;
pub mod experiment;
pub mod krylov;
pub mod mm;
pub mod poisson;
pub mod qubo;
pub mod spai;
pub mod sparse;

pub use anneal::{solve_sa, SaConfig};
pub use error::{Error, Result};
pub use krylov::{cg, pcg, CgConfig, ConvergenceTrace};
pub use poisson::{assemble, assemble_rhs, GridSpec, MaterialField, PoissonProblem};
pub use qubo::{build_box_qubo, energy, solve_exact, Backend, ExactSolver, QuboProblem, QuboSolution, QuboSolver};
pub use spai::{
    column_signature, compute_spai, direct_column_oracle, sparse_box_solve, BoxConfig, BoxState, ColumnFamilySignature,
    SpaiPreconditioner, SpaiStats,
};
pub use sparse::{CsrMatrix, DenseSmallMatrix, SymSparseMatrix};

// Compiles every snippet of the guide as a doctest.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/sparse.md")]
    mod sparse {}
    #[doc = include_str!("../../../book/src/poisson.md")]
    mod poisson {}
    #[doc = include_str!("../../../book/src/qubo.md")]
    mod qubo {}
    #[doc = include_str!("../../../book/src/box.md")]
    mod box_algorithm {}
    #[doc = include_str!("../../../book/src/families.md")]
    mod families {}
    #[doc = include_str!("../../../book/src/pcg.md")]
    mod pcg {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
