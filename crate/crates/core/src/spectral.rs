//! From coefficients to clusters: affinity, adaptive block count and
//! normalized spectral clustering.

use std::cmp::Ordering;

use nalgebra::{DMatrix, SymmetricEigen};
use petgraph::unionfind::UnionFind;

use crate::dataset::DataMatrix;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::kmeans::{kmeans, KMeansConfig};
use crate::solver::{PreparedProblem, SolveTrace, SolverConfig};

/// Cluster assignment per sample, labels in `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    k: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l == 0 || l > k) {
            return Err(Error::InvalidArgument {
                name: "labels",
                reason: format!("label {bad} outside 1..={k}"),
            });
        }
        Ok(Self { labels, k })
    }

    /// Uses the largest label as `k`.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().copied().max().unwrap_or(0);
        Self::new(labels, k)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Occurrences of each label `1..=k`.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.k];
        for &l in &self.labels {
            c[l - 1] += 1;
        }
        c
    }
}

/// Symmetric nonnegative affinity between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix(DMatrix<f64>);

impl AffinityMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    /// Multiplies every entry by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self(&self.0 * c)
    }
}

/// `W = (|Z| + |Zᵀ|) / 2`
pub fn affinity(z: &DMatrix<f64>) -> Result<AffinityMatrix> {
    if !z.is_square() {
        return Err(Error::DimensionMismatch {
            context: "affinity",
            expected: "square matrix".into(),
            actual: format!("{}×{}", z.nrows(), z.ncols()),
        });
    }
    let n = z.nrows();
    Ok(AffinityMatrix(DMatrix::from_fn(n, n, |i, j| {
        0.5 * (z[(i, j)].abs() + z[(j, i)].abs())
    })))
}

fn check_threshold(rel_threshold: f64) -> Result<()> {
    if rel_threshold > 0.0 && rel_threshold < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument {
            name: "rel_threshold",
            reason: format!("{rel_threshold} is not in (0, 1)"),
        })
    }
}

/// Connected components of the graph with an edge wherever
/// `W_ij > rel_threshold · max(W)`, as 1-based labels numbered by first
/// appearance.
pub fn block_components(w: &AffinityMatrix, rel_threshold: f64) -> Result<LabelVector> {
    check_threshold(rel_threshold)?;
    let m = w.matrix();
    let n = m.nrows();
    let cut = rel_threshold * m.max();
    let mut uf = UnionFind::<usize>::new(n);
    if m.max() > 0.0 {
        for j in 0..n {
            for i in (j + 1)..n {
                if m[(i, j)] > cut || m[(j, i)] > cut {
                    uf.union(i, j);
                }
            }
        }
    }
    let roots = uf.into_labeling();
    let mut ids: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    let labels = roots
        .into_iter()
        .map(|r| {
            *ids[r].get_or_insert_with(|| {
                next += 1;
                next
            })
        })
        .collect();
    LabelVector::new(labels, next)
}

/// Number of diagonal blocks, read off the thresholded affinity graph.
pub fn estimate_block_count(w: &AffinityMatrix, rel_threshold: f64) -> Result<usize> {
    Ok(block_components(w, rel_threshold)?.k())
}

/// Floor applied to degrees before taking `D^{-1/2}`.
const DEGREE_FLOOR: f64 = 1e-12;

/// Row-normalized eigenvectors of the `k` smallest eigenvalues of
/// `I − D^{-1/2} W D^{-1/2}`.
pub fn spectral_embedding(w: &AffinityMatrix, k: usize) -> Result<DMatrix<f64>> {
    let m = w.matrix();
    let n = m.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument {
            name: "k",
            reason: format!("must satisfy 1 <= k <= n = {n}, got {k}"),
        });
    }
    let inv_sqrt: Vec<f64> = m
        .row_iter()
        .map(|r| 1.0 / r.sum().max(DEGREE_FLOOR).sqrt())
        .collect();
    let lap = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - inv_sqrt[i] * m[(i, j)] * inv_sqrt[j]
    });
    let eig = SymmetricEigen::new(lap);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut emb = DMatrix::from_fn(n, k, |i, c| eig.eigenvectors[(i, order[c])]);
    for mut row in emb.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    Ok(emb)
}

/// Normalized spectral clustering of `w` into `k` groups.
pub fn spectral_cluster(w: &AffinityMatrix, k: usize, seed: u64) -> Result<LabelVector> {
    let emb = spectral_embedding(w, k)?;
    let result = kmeans(&emb, k, &KMeansConfig::default(), seed);
    LabelVector::new(result.labels.iter().map(|&c| c + 1).collect(), k)
}

/// Fixed number of clusters, or the adaptive block count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterCount {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterConfig {
    pub k: ClusterCount,
    pub rel_threshold: f64,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k: ClusterCount::Auto,
            rel_threshold: 1e-3,
            seed: 0,
        }
    }
}

/// Everything the pipeline produced.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub z: DMatrix<f64>,
    pub affinity: AffinityMatrix,
    pub labels: LabelVector,
    pub estimated_k: usize,
    pub trace: SolveTrace,
}

/// Solve, build the affinity, count blocks (when asked) and cluster.
pub fn cluster_pipeline(
    x: &DataMatrix,
    graph: &WeightedGraph,
    config: &SolverConfig,
    cluster: &ClusterConfig,
) -> Result<PipelineOutput> {
    let problem = PreparedProblem::new(x, graph, config)?;
    cluster_prepared(&problem, config, cluster)
}

/// [`cluster_pipeline`] on an already factorized problem.
pub fn cluster_prepared(
    problem: &PreparedProblem<'_>,
    config: &SolverConfig,
    cluster: &ClusterConfig,
) -> Result<PipelineOutput> {
    check_threshold(cluster.rel_threshold)?;
    let (z, trace) = problem.solve(config)?;
    let w = affinity(&z)?;
    let estimated_k = match cluster.k {
        ClusterCount::Fixed(k) => k,
        ClusterCount::Auto => estimate_block_count(&w, cluster.rel_threshold)?,
    };
    let labels = spectral_cluster(&w, estimated_k, cluster.seed)?;
    Ok(PipelineOutput {
        z,
        affinity: w,
        labels,
        estimated_k,
        trace,
    })
}
