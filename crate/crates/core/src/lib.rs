//! Exact simulator and numerical verifier for a keyed strong pseudorandom
//! unitary built from two calls to a Haar random oracle.

pub mod cli;
pub mod decoder;
pub mod error;
pub mod experiments;
pub mod good_tuples;
pub mod isometry;
pub mod merge_checks;
pub mod oracles;
pub mod relations;
pub mod report;
pub mod state;

pub use error::{Error, Result};
