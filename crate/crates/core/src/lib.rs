//! Convex subspace clustering by adaptive block diagonal representation.
//!
//! Each sample is expressed as a combination of the others, `X ≈ XZ`. The
//! coefficient matrix `Z` is regularized by fusing its columns and its rows
//! along a KNN graph of the samples; with enough fusion the matrix becomes
//! block diagonal and the number of blocks is read off directly. The
//! pipeline is:
//!
//! 1. [`graph::WeightedGraph::build`]: KNN edges with Gaussian weights.
//! 2. [`solver::solve_abdr`]: generalized ADMM on the convex objective.
//! 3. [`spectral::affinity`], [`spectral::estimate_block_count`] and
//!    [`spectral::spectral_cluster`]: turn `Z` into labels.
//! 4. [`metrics`]: clustering error and off-block mass against the truth.
//!
//! ```
//! use abdr::{dataset, graph::{Phi, WeightedGraph}, spectral, solver::SolverConfig};
//!
//! let ds = dataset::gen_example2(0);
//! let g = WeightedGraph::build(&ds.data, 5, Phi::Auto).unwrap();
//! let out = spectral::cluster_pipeline(
//!     &ds.data,
//!     &g,
//!     &SolverConfig::default().with_gamma(1.0),
//!     &spectral::ClusterConfig::default(),
//! )
//! .unwrap();
//! assert_eq!(out.labels.len(), 30);
//! ```

pub mod dataset;
pub mod error;
pub mod graph;
pub mod io;
pub mod kmeans;
pub mod metrics;
pub mod solver;
pub mod spectral;

pub use dataset::{DataMatrix, LabeledDataset};
pub use error::{Error, Result};
pub use graph::{Edge, Phi, WeightedGraph};
pub use metrics::{clustering_error, off_block_mass};
pub use solver::{solve_abdr, Alpha, FusionMode, SolveTrace, SolverConfig};
pub use spectral::{AffinityMatrix, ClusterConfig, ClusterCount, LabelVector, PipelineOutput};
