//! KNN fusion graph, Gaussian-kernel edge weights and the node-arc
//! incidence operators.
//!
//! Nodes are 0-based here; the edge-list dump uses 1-based indices.
//!
//! The incidence matrix `Q` (n × |E|) has, in the column of edge `(i, j)`,
//! a `+1` at row `i` and a `−1` at row `j`. It is never materialized in the
//! solver: `Z·Q` and `Qᵀ·Z` are computed by gathering column or row
//! differences, and their adjoints by scattering, all in `O(n·|E|)`.

use std::cmp::Ordering;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dataset::DataMatrix;
use crate::error::{Error, Result};

/// Undirected weighted edge with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Kernel bandwidth for the edge weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phi {
    Fixed(f64),
    /// `1 / (2 · median squared edge length)`.
    Auto,
}

/// Sparse node-arc incidence matrix `Q = J − J̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct Incidence {
    n: usize,
    arcs: Vec<(usize, usize)>,
}

impl Incidence {
    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.arcs.len()
    }

    /// `(i, j)` pairs in column order.
    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut q = DMatrix::zeros(self.n, self.arcs.len());
        for (l, &(i, j)) in self.arcs.iter().enumerate() {
            q[(i, l)] = 1.0;
            q[(j, l)] = -1.0;
        }
        q
    }

    /// `Q·Qᵀ`, the (unweighted) graph Laplacian.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.arcs {
            l[(i, i)] += 1.0;
            l[(j, j)] += 1.0;
            l[(i, j)] -= 1.0;
            l[(j, i)] -= 1.0;
        }
        l
    }
}

/// Builds `Q` for `edges` over `n` nodes. Column `l` belongs to `edges[l]`.
pub fn build_incidence(edges: &[(usize, usize)], n: usize) -> Result<Incidence> {
    for &(i, j) in edges {
        for index in [i, j] {
            if index >= n {
                return Err(Error::EndpointOutOfRange { index, n });
            }
        }
        if i == j {
            return Err(Error::InvalidArgument {
                name: "edges",
                reason: format!("self loop at node {i}"),
            });
        }
    }
    Ok(Incidence {
        n,
        arcs: edges.to_vec(),
    })
}

/// Weighted KNN graph over the samples of a data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    edges: Vec<Edge>,
    incidence: Incidence,
    knn_k: usize,
    phi: f64,
}

impl WeightedGraph {
    /// KNN edges (symmetrized), Gaussian weights and incidence in one pass.
    pub fn build(x: &DataMatrix, knn_k: usize, phi: Phi) -> Result<Self> {
        let pairs = build_knn_edges(x, knn_k)?;
        let (edges, phi) = compute_weights(x, &pairs, phi);
        Self::from_edges(x.len(), edges, knn_k, phi)
    }

    /// Assembles a graph from explicit weighted edges. Zero-weight edges
    /// are dropped.
    pub fn from_edges(n: usize, edges: Vec<Edge>, knn_k: usize, phi: f64) -> Result<Self> {
        let edges: Vec<Edge> = edges
            .into_iter()
            .filter(|e| e.weight > 0.0)
            .map(|e| Edge {
                i: e.i.min(e.j),
                j: e.i.max(e.j),
                weight: e.weight,
            })
            .collect();
        let arcs: Vec<(usize, usize)> = edges.iter().map(|e| (e.i, e.j)).collect();
        let incidence = build_incidence(&arcs, n)?;
        Ok(Self {
            edges,
            incidence,
            knn_k,
            phi,
        })
    }

    /// Graph without edges; the fusion penalty vanishes.
    pub fn empty(n: usize) -> Self {
        Self {
            edges: Vec::new(),
            incidence: Incidence {
                n,
                arcs: Vec::new(),
            },
            knn_k: 0,
            phi: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.incidence.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weights(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.edges.iter().map(|e| e.weight)
    }

    pub fn incidence(&self) -> &Incidence {
        &self.incidence
    }

    pub fn knn_k(&self) -> usize {
        self.knn_k
    }

    /// The resolved kernel bandwidth.
    pub fn phi(&self) -> f64 {
        self.phi
    }
}

fn squared_distances(x: &DataMatrix) -> DMatrix<f64> {
    let v = x.values();
    let n = v.ncols();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = (v.column(i) - v.column(j)).norm_squared();
            d[(i, j)] = dist;
            d[(j, i)] = dist;
        }
    }
    d
}

/// Pairs `(i, j)`, `i < j`, such that either endpoint is among the `k`
/// nearest neighbours of the other. Ties go to the lower index. Sorted
/// lexicographically.
pub fn build_knn_edges(x: &DataMatrix, k: usize) -> Result<Vec<(usize, usize)>> {
    let n = x.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument {
            name: "knn_k",
            reason: format!("must satisfy 1 <= K < n = {n}, got {k}"),
        });
    }
    let dist = squared_distances(x);
    let mut pairs = Vec::with_capacity(n * k);
    let mut order: Vec<usize> = Vec::with_capacity(n - 1);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| {
            dist[(i, a)]
                .partial_cmp(&dist[(i, b)])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        pairs.extend(order[..k].iter().map(|&j| (i.min(j), i.max(j))));
    }
    pairs.sort_unstable();
    pairs.dedup();
    Ok(pairs)
}

/// Gaussian-kernel weights `exp(−φ‖xᵢ − xⱼ‖²)` for the given pairs.
///
/// Returns the edges and the bandwidth actually used. With [`Phi::Auto`] the
/// median is taken over the positive squared distances when some pairs are
/// duplicates; with no positive distance at all the bandwidth is 0.
pub fn compute_weights(x: &DataMatrix, pairs: &[(usize, usize)], phi: Phi) -> (Vec<Edge>, f64) {
    let v = x.values();
    let sq: Vec<f64> = pairs
        .iter()
        .map(|&(i, j)| (v.column(i) - v.column(j)).norm_squared())
        .collect();
    let phi = match phi {
        Phi::Fixed(p) => p,
        Phi::Auto => auto_phi(&sq),
    };
    let edges = pairs
        .iter()
        .zip(&sq)
        .map(|(&(i, j), &d)| Edge {
            i,
            j,
            weight: if d == 0.0 { 1.0 } else { (-phi * d).exp() },
        })
        .collect();
    (edges, phi)
}

fn auto_phi(squared: &[f64]) -> f64 {
    let median = |values: &mut Vec<f64>| -> Option<f64> {
        if values.is_empty() {
            return None;
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        let m = values.len() / 2;
        Some(if values.len() % 2 == 1 {
            values[m]
        } else {
            0.5 * (values[m - 1] + values[m])
        })
    };
    let mut all = squared.to_vec();
    let med = match median(&mut all) {
        Some(m) if m > 0.0 => m,
        _ => {
            let mut positive: Vec<f64> = squared.iter().copied().filter(|&d| d > 0.0).collect();
            match median(&mut positive) {
                Some(m) => m,
                None => return 0.0,
            }
        }
    };
    1.0 / (2.0 * med)
}

fn check_square(z: &DMatrix<f64>, n: usize, context: &'static str) -> Result<()> {
    if z.nrows() != n || z.ncols() != n {
        return Err(Error::DimensionMismatch {
            context,
            expected: format!("{n}×{n}"),
            actual: format!("{}×{}", z.nrows(), z.ncols()),
        });
    }
    Ok(())
}

/// `Z·Q`: column `l` of the result is `Z[:, i] − Z[:, j]` for edge `l = (i, j)`.
pub fn col_diffs(z: &DMatrix<f64>, q: &Incidence) -> Result<DMatrix<f64>> {
    check_square(z, q.n, "col_diffs")?;
    Ok(col_diffs_unchecked(z, q))
}

/// `Qᵀ·Z`: row `l` of the result is `Z[i, :] − Z[j, :]` for edge `l = (i, j)`.
pub fn row_diffs(z: &DMatrix<f64>, q: &Incidence) -> Result<DMatrix<f64>> {
    check_square(z, q.n, "row_diffs")?;
    Ok(row_diffs_unchecked(z, q))
}

pub(crate) fn col_diffs_unchecked(z: &DMatrix<f64>, q: &Incidence) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(z.nrows(), q.arcs.len());
    for (l, &(i, j)) in q.arcs.iter().enumerate() {
        let mut dst = out.column_mut(l);
        dst.copy_from(&z.column(i));
        dst -= z.column(j);
    }
    out
}

pub(crate) fn row_diffs_unchecked(z: &DMatrix<f64>, q: &Incidence) -> DMatrix<f64> {
    let m = q.arcs.len();
    let mut out = DMatrix::zeros(m, z.ncols());
    for c in 0..z.ncols() {
        let src = z.column(c);
        let mut dst = out.column_mut(c);
        for (l, &(i, j)) in q.arcs.iter().enumerate() {
            dst[l] = src[i] - src[j];
        }
    }
    out
}

/// `M·Qᵀ` for an `r × |E|` matrix `M`.
pub(crate) fn scatter_cols(m: &DMatrix<f64>, q: &Incidence) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), q.n);
    for (l, &(i, j)) in q.arcs.iter().enumerate() {
        let src = m.column(l);
        out.column_mut(i).axpy(1.0, &src, 1.0);
        out.column_mut(j).axpy(-1.0, &src, 1.0);
    }
    out
}

/// `Q·M` for an `|E| × c` matrix `M`.
pub(crate) fn scatter_rows(m: &DMatrix<f64>, q: &Incidence) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(q.n, m.ncols());
    for c in 0..m.ncols() {
        let src = m.column(c);
        let mut dst = out.column_mut(c);
        for (l, &(i, j)) in q.arcs.iter().enumerate() {
            dst[i] += src[l];
            dst[j] -= src[l];
        }
    }
    out
}

/// Largest singular value of `Q`, the square root of the top eigenvalue of
/// the graph Laplacian `Q·Qᵀ`. Zero for an edgeless graph.
pub fn largest_singular_value(q: &Incidence) -> f64 {
    if q.arcs.is_empty() {
        return 0.0;
    }
    let eig = SymmetricEigen::new(q.laplacian());
    eig.eigenvalues.max().max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn data(cols: &[&[f64]]) -> DataMatrix {
        let d = cols[0].len();
        DataMatrix::new(DMatrix::from_fn(d, cols.len(), |r, c| cols[c][r])).unwrap()
    }

    fn random_matrix(n: usize, seed: u64) -> DMatrix<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn knn_collinear() {
        let x = data(&[&[0.0], &[1.0], &[10.0]]);
        assert_eq!(build_knn_edges(&x, 1).unwrap(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn knn_complete_when_k_is_n_minus_one() {
        let x = data(&[&[0.0, 1.0], &[2.0, 0.5], &[3.0, 3.0], &[-1.0, 0.0], &[0.3, 0.3]]);
        assert_eq!(build_knn_edges(&x, 4).unwrap().len(), 10);
    }

    #[test]
    fn knn_duplicates_are_neighbours() {
        let x = data(&[&[0.0, 0.0], &[5.0, 5.0], &[5.0, 5.0], &[9.0, 0.0]]);
        let pairs = build_knn_edges(&x, 1).unwrap();
        assert!(pairs.contains(&(1, 2)));
        let (edges, _) = compute_weights(&x, &pairs, Phi::Fixed(3.0));
        let dup = edges.iter().find(|e| (e.i, e.j) == (1, 2)).unwrap();
        assert_eq!(dup.weight, 1.0);
    }

    #[test]
    fn knn_rejects_bad_k() {
        let x = data(&[&[0.0], &[1.0]]);
        assert!(build_knn_edges(&x, 0).is_err());
        assert!(build_knn_edges(&x, 2).is_err());
    }

    #[test]
    fn weights() {
        let x = data(&[&[0.0, 0.0], &[1.0, 2.0], &[(2f64.ln()).sqrt(), 0.0]]);
        let pairs = vec![(0, 1), (0, 2)];
        let (uniform, _) = compute_weights(&x, &pairs, Phi::Fixed(0.0));
        assert!(uniform.iter().all(|e| e.weight == 1.0));
        let (edges, _) = compute_weights(&x, &pairs, Phi::Fixed(1.0));
        assert!((edges[1].weight - 0.5).abs() <= 1e-15);
        assert!((edges[0].weight - (-5.0f64).exp()).abs() <= 1e-15);

        let (_, phi) = compute_weights(&x, &pairs, Phi::Auto);
        // squared lengths 5 and ln 2; median of two values is their mean
        assert!((phi - 1.0 / (5.0 + 2f64.ln())).abs() <= 1e-15);
    }

    #[test]
    fn auto_phi_skips_zero_median() {
        assert_eq!(auto_phi(&[0.0, 0.0, 0.0, 4.0]), 1.0 / 8.0);
        assert_eq!(auto_phi(&[0.0, 0.0]), 0.0);
        assert_eq!(auto_phi(&[]), 0.0);
    }

    #[test]
    fn incidence_examples() {
        let q = build_incidence(&[(0, 1), (0, 2)], 3).unwrap();
        assert_eq!(
            q.to_dense(),
            DMatrix::from_row_slice(3, 2, &[1., 1., -1., 0., 0., -1.])
        );
        let q = build_incidence(&[], 3).unwrap();
        assert_eq!(q.to_dense().shape(), (3, 0));
        let q = build_incidence(&[(1, 2)], 3).unwrap();
        assert_eq!(q.to_dense(), DMatrix::from_column_slice(3, 1, &[0., 1., -1.]));
        assert!(matches!(
            build_incidence(&[(0, 3)], 3),
            Err(Error::EndpointOutOfRange { index: 3, n: 3 })
        ));
    }

    #[test]
    fn diffs_of_identity() {
        let q = build_incidence(&[(0, 1)], 2).unwrap();
        let z = DMatrix::identity(2, 2);
        assert_eq!(col_diffs(&z, &q).unwrap(), DMatrix::from_column_slice(2, 1, &[1., -1.]));
        assert_eq!(row_diffs(&z, &q).unwrap(), DMatrix::from_row_slice(1, 2, &[1., -1.]));
    }

    #[test]
    fn diffs_vanish_on_equal_columns_and_rows() {
        let q = build_incidence(&[(0, 2)], 3).unwrap();
        let z = DMatrix::from_row_slice(3, 3, &[1., 7., 1., 2., 8., 2., 1., 7., 1.]);
        assert_eq!(col_diffs(&z, &q).unwrap().amax(), 0.0);
        assert_eq!(row_diffs(&z, &q).unwrap().amax(), 0.0);
    }

    #[test]
    fn diffs_match_elementwise_subtraction() {
        let q = build_incidence(&[(0, 1), (0, 2)], 3).unwrap();
        let z = random_matrix(3, 9);
        let c = col_diffs(&z, &q).unwrap();
        let r = row_diffs(&z, &q).unwrap();
        for (l, &(i, j)) in q.arcs().iter().enumerate() {
            for t in 0..3 {
                assert_eq!(c[(t, l)], z[(t, i)] - z[(t, j)]);
                assert_eq!(r[(l, t)], z[(i, t)] - z[(j, t)]);
            }
        }
        let dense = q.to_dense();
        assert!((c - &z * &dense).amax() <= 1e-15);
        assert!((r - dense.transpose() * &z).amax() <= 1e-15);
    }

    #[test]
    fn diffs_reject_wrong_shape() {
        let q = build_incidence(&[(0, 1)], 3).unwrap();
        assert!(matches!(
            col_diffs(&DMatrix::zeros(2, 2), &q),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(row_diffs(&DMatrix::zeros(3, 2), &q).is_err());
    }

    #[test]
    fn singular_values() {
        let one = build_incidence(&[(0, 1)], 2).unwrap();
        assert!((largest_singular_value(&one) - 2f64.sqrt()).abs() <= 1e-10 * 2f64.sqrt());
        let path = build_incidence(&[(0, 1), (1, 2)], 3).unwrap();
        assert!((largest_singular_value(&path) - 3f64.sqrt()).abs() <= 1e-10 * 3f64.sqrt());
        assert_eq!(largest_singular_value(&build_incidence(&[], 4).unwrap()), 0.0);
    }

    #[test]
    fn graph_drops_zero_weights_and_is_deterministic() {
        let g = WeightedGraph::from_edges(
            3,
            vec![
                Edge { i: 1, j: 0, weight: 0.5 },
                Edge { i: 1, j: 2, weight: 0.0 },
            ],
            1,
            0.0,
        )
        .unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!((g.edges()[0].i, g.edges()[0].j), (0, 1));

        let x = data(&[&[0.0, 1.0], &[2.0, 0.5], &[3.0, 3.0], &[-1.0, 0.0]]);
        assert_eq!(
            WeightedGraph::build(&x, 2, Phi::Auto).unwrap(),
            WeightedGraph::build(&x, 2, Phi::Auto).unwrap()
        );
    }

    fn arb_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (2usize..7).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .collect();
            (Just(n), proptest::sample::subsequence(pairs.clone(), 0..=pairs.len()))
        })
    }

    proptest! {
        #[test]
        fn transpose_duality((n, arcs) in arb_graph(), seed in any::<u64>()) {
            let q = build_incidence(&arcs, n).unwrap();
            let z = random_matrix(n, seed);
            let lhs = col_diffs(&z, &q).unwrap();
            let rhs = row_diffs(&z.transpose(), &q).unwrap().transpose();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn incidence_columns_sum_to_zero((n, arcs) in arb_graph()) {
            let q = build_incidence(&arcs, n).unwrap().to_dense();
            for col in q.column_iter() {
                prop_assert_eq!(col.sum(), 0.0);
                prop_assert_eq!(col.iter().filter(|&&v| v == 1.0).count(), 1);
                prop_assert_eq!(col.iter().filter(|&&v| v == -1.0).count(), 1);
            }
        }

        #[test]
        fn constant_rows_have_no_row_diffs((n, arcs) in arb_graph(), c in -5.0f64..5.0) {
            let q = build_incidence(&arcs, n).unwrap();
            let mut z = random_matrix(n, 3);
            for r in 0..n {
                z.set_row(r, &z.row(0).clone_owned());
            }
            z.add_scalar_mut(c);
            prop_assert_eq!(row_diffs(&z, &q).unwrap().amax(), 0.0);
        }

        #[test]
        fn scatters_are_adjoints((n, arcs) in arb_graph(), seed in any::<u64>()) {
            let q = build_incidence(&arcs, n).unwrap();
            let dense = q.to_dense();
            let m = random_matrix(n.max(arcs.len()), seed);
            let a = m.view((0, 0), (n, arcs.len())).into_owned();
            let b = m.view((0, 0), (arcs.len(), n)).into_owned();
            prop_assert!((scatter_cols(&a, &q) - &a * dense.transpose()).amax() <= 1e-12);
            prop_assert!((scatter_rows(&b, &q) - &dense * &b).amax() <= 1e-12);
        }
    }
}
