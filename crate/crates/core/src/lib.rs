//! Multiple non-redundant clusterings of one dataset.
//!
//! The data are split into statistically independent subspaces and each subspace is clustered
//! on its own, so every subspace yields a different, complementary grouping of the samples.
//!
//! 1. [`data::standardize`] and [`ica::whiten`], then [`ica::FastIca`] recovers independent sources.
//! 2. [`subspace::merge_subspaces`] greedily groups dependent sources using kernel density
//!    code lengths ([`density`]), and [`subspace::select_partition`] keeps the partition with the
//!    shortest description.
//! 3. Per subspace, [`model_selection::select_k`] picks the number of clusters and
//!    [`factorization::kgsnmf`] factorizes a Gaussian kernel with a nearest-neighbor graph
//!    regularizer. K-means on the coefficient matrix gives the labels.
//! 4. [`metrics`] scores the clusterings against known views.
//!
//! [`pipeline::run_misc`] runs all of it; [`cli`] backs the `misc` binary.
//!
//! ```no_run
//! use misc_clustering::data::{load_csv, Orientation};
//! use misc_clustering::pipeline::{run_misc, PipelineConfig};
//!
//! let data = load_csv("data.csv", Orientation::SamplesAsRows)?;
//! let report = run_misc(&data, &PipelineConfig::default().with_seed(7))?;
//! for (i, labels) in report.labels().iter().enumerate() {
//!     println!("clustering {}: {} samples", i + 1, labels.len());
//! }
//! # Ok::<(), misc_clustering::MiscError>(())
//! ```

pub mod cli;
pub mod data;
pub mod density;
pub mod error;
pub mod factorization;
pub mod ica;
pub mod linalg;
pub mod metrics;
pub mod model_selection;
pub mod pipeline;
pub mod subspace;

pub use error::{MiscError, Result};
