//! Tree-structured distributions: Chow-Liu trees, conditional Chow-Liu
//! forests, exact KL by enumeration and Graphviz export.

pub(crate) mod conditional;
pub mod dot;
pub(crate) mod kl;
pub(crate) mod mi;
pub(crate) mod mwst;
pub(crate) mod rooted;
pub(crate) mod tree;

pub use conditional::{
    conditional_from_structure, fit_conditional_chow_liu, fit_conditional_chow_liu_with,
    ConditionalForestDistribution,
};
pub use kl::{conditional_kl_exact, decode_state, joint_state_count, kl_divergence_exact, ENUMERATION_LIMIT};
pub use mi::{entropy, mutual_information};
pub use mwst::maximum_spanning_tree;
pub use tree::{fit_chow_liu, fit_chow_liu_with, tree_from_structure, TreeDistribution};

use serde::{Deserialize, Serialize};

/// Options for structure learning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureOptions {
    /// Additive pseudo-count per table cell.
    pub smoothing: f64,
    /// Drop learned edges whose mutual information is below this value.
    pub prune_threshold: Option<f64>,
}

impl StructureOptions {
    pub fn smoothed(smoothing: f64) -> Self {
        StructureOptions {
            smoothing,
            prune_threshold: None,
        }
    }
}

impl Default for StructureOptions {
    fn default() -> Self {
        StructureOptions::smoothed(0.1)
    }
}

/// Posterior marginals of every variable plus `log P(observed cells)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreePosterior {
    pub log_evidence: f64,
    pub marginals: Vec<Vec<f64>>,
}

impl TreePosterior {
    pub(crate) fn from_flat(log_evidence: f64, flat: Vec<f64>, b: usize) -> Self {
        TreePosterior {
            log_evidence,
            marginals: flat.chunks_exact(b).map(<[f64]>::to_vec).collect(),
        }
    }
}
