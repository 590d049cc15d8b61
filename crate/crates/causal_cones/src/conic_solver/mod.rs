//! First-order solver for semidefinite programs whose PSD blocks are given
//! in orthonormal Hilbert-Schmidt coordinates.

mod admm;
mod affine;
mod problem;

pub use admm::{solve, Residuals, SDPSolution, SolveStatus, SolverConfig, WarmStart};
pub use problem::{PsdBlock, SDPProblem};
