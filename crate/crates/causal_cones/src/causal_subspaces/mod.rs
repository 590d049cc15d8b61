//! Linear subspaces of valid and causally ordered process matrices.
//!
//! Every trace-and-replace map is diagonal in the product Hilbert-Schmidt
//! basis, so each subspace is spanned by a subset of basis strings; the
//! projector just zeroes the excluded coordinates.

pub mod allowed;
pub mod scenario;
pub mod subspace;

pub use allowed::{allowed_terms, AllowedTerms, SubspaceKind};
pub use scenario::{subsets, Party, Scenario};
pub use subspace::{
    k_first_constraints, k_first_subspace, order_constraints, order_subspace, tr_expr,
    two_block_constraints, validity_family, validity_subspace, CausalOrderSpec, SubspaceSpec,
    DEFAULT_MEMBERSHIP_TOL,
};
