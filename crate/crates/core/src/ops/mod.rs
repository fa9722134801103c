//! Tensor operations as tensor operation matrices (TOMs): validation,
//! evaluation, hyper-tensor construction, arity decomposition and merging.

mod decompose;
mod eval;
pub mod random;
mod tom;

pub use decompose::{decompose_arity, decompose_to_binary, evaluate_chain, merge_ops};
pub use eval::{build_hyper, collapse_hyper, evaluate};
pub use tom::{tom_complexity, validate_tom, BaseOps, Op, Tom, TomReport};
