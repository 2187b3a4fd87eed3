//! Kernel graph-regularized semi-NMF and its ablations.
//!
//! The kernel solver factorizes `φ(X) ≈ φ(X)WH` through the Gram matrix only, so the basis
//! `φ(X)W` is never materialized.

mod ablation;
mod graph;
mod kernel;
mod solver;

pub use ablation::{run_variant, semi_nmf, Variant};
pub use graph::{knn_graph, NeighborhoodGraph};
pub use kernel::{auto_width, gram, KernelKind, KernelSpec, KernelWidth};
pub use solver::{
    kgsnmf, objective, split_pos_neg, update_h, update_w, FactorizationState, HUpdateRule, SolverConfig,
};
