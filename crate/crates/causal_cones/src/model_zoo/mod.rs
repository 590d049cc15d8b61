//! Named operators, the random process sampler and the gap search.

pub mod gap_search;
pub mod named;
pub mod sampler;

pub use gap_search::{derive_seeds, gap_search, gap_search_on, GapReport, GapSample, GapSearchConfig, SampleStatus};
pub use named::*;
pub use sampler::{permutations, sample_random_process, symmetrize_parties};
