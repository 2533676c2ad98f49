//! PCA with outliers: choose `k` rows of an `n × d` matrix to discard so that
//! the remaining rows are best fit by an `r`-dimensional linear subspace.
//!
//! * [`linalg`]: small dense kernel (Jacobi eigensolver, best-fit subspace).
//! * [`model`]: instances, subspace representations, objective evaluation.
//! * [`oracle`]: exhaustive reference solver and solution checker.
//! * [`arrangement`]: reduction to classical PCA through sign-condition cells.
//! * [`hardness`]: gap instances from Multicolored Clique.
//! * [`io`]: file formats shared with the command-line front-end.

pub mod arrangement;
pub mod fixtures;
pub mod hardness;
pub mod io;
pub mod linalg;
pub mod model;
pub mod oracle;

pub use arrangement::{solve, CellMode, RepChoice, SolverConfig};
pub use linalg::{Frame, Matrix};
pub use model::{Instance, RepMode, Solution, SubspaceRep};
pub use oracle::{brute_force, verify, BruteForce};
