//! Separability cones as algebraic expressions over PSD cones and linear
//! subspaces, their duals, and their expansion into a solver problem.

mod builders;
mod cone;
mod decomposition;
mod membership;
mod normal_form;

pub use builders::{
    bipartite_sep_cone, build_cone, detect_restricted, fixed_order_cone, fixed_orders_sum,
    necessary_cone, necessary_cone_with, restricted_cone, restricted_cone_of, sufficient_cone,
    sufficient_cone_with, tripartite_sep_cone, Branches, ConeChoice, Restricted, DEFAULT_PARTY_CAP,
};
pub use cone::{dual_cone, ConeNode, ConeSpec};
pub use decomposition::{Component, DecompositionReport, Requirement, SepDecomposition};
pub use membership::{membership, Membership};
pub use normal_form::{NormalForm, Relation, VarKind, Variable};
