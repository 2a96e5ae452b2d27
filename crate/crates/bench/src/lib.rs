//! Fixtures shared by the benchmarks.

use abdr::dataset::{self, SubspaceSpec};
use abdr::graph::{Phi, WeightedGraph};
use abdr::LabeledDataset;

/// Three orthogonal 2-dimensional subspaces in R^10 with `per` samples each.
pub fn subspaces(per: usize) -> LabeledDataset {
    let spec = SubspaceSpec {
        ambient_dim: 10,
        sub_dims: vec![2, 2, 2],
        counts: vec![per; 3],
        noise_std: 0.05,
    };
    dataset::gen_subspaces(&spec, 0).expect("valid spec")
}

pub fn default_graph(ds: &LabeledDataset) -> WeightedGraph {
    WeightedGraph::build(&ds.data, 10, Phi::Auto).expect("graph")
}
