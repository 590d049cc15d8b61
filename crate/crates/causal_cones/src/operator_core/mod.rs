//! Labeled tensor-product Hermitian operators and the maps acting on them.

pub mod basis;
pub mod instrument;
pub mod linalg;
pub mod operator;
pub mod system;
pub mod teleport;
pub mod trace_replace;

pub use basis::{hs_decompose, hs_resynthesize, HsTransform};
pub use instrument::{born_rule, conditional_matrix, Instrument, ProbabilityTable};
pub use operator::{ProcessOperator, C64};
pub use system::{LabeledSpace, Role, SystemLabel};
pub use teleport::{relabel_back, relabel_teleport};
pub use trace_replace::{Mode, TraceReplaceExpr};
