//! Command-line driver: potential catalog, run manifests and deterministic
//! CSV/JSON output for the `ddgr` library.

// negated comparisons are used deliberately so NaN fails every check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cli;
pub mod commands;
pub mod error;
pub mod manifest;
pub mod table;

pub use error::CliError;
