//! Command-line verbs and JSON/CSV artifacts.

pub mod command;
pub mod json;

pub use command::{configure_threads, parse_scenario, run, write_gap_report, Cli, Command, Outcome};
pub use json::{load_operator, load_result, save_operator, save_result, DecompositionJson, OperatorJson, ResultJson};
