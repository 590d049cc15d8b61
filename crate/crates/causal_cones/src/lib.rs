//! Causal (non)separability of multipartite process matrices: subspaces,
//! separability cones, a first-order conic solver, random robustness and
//! witnesses.

pub mod error;
pub mod causal_subspaces;
pub mod cli_io;
pub mod conic_solver;
pub mod model_zoo;
pub mod operator_core;
pub mod robustness;
pub mod sep_cones;

pub use error::{Error, Result};
