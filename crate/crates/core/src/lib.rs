//! Hidden Markov models with tree-structured emissions for multi-site
//! categorical sequences.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod hmm;
pub mod model;
pub mod treemodels;
mod util;

pub use error::{Error, Result};
