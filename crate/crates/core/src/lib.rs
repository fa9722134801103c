//! Hierarchical combinatorial complexes as a common representation for
//! arrays, generalized tensors, tensor operations and network blocks.

pub mod cli;
pub mod error;
pub mod hcc;
pub mod json;
pub mod mda;
pub mod pwohg;

pub use error::{Error, Result};
pub mod modemap;
pub mod network;
pub mod ops;
pub mod oracle;
pub mod sampler;
