//! Clustering error under the best label matching, and a graded measure of
//! how far a coefficient matrix is from block diagonal.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spectral::LabelVector;

/// Co-occurrence counts of predicted (rows) and true (columns) labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<usize>>,
    n: usize,
}

impl ContingencyTable {
    pub fn new(pred: &LabelVector, truth: &LabelVector) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::LengthMismatch {
                left: pred.len(),
                right: truth.len(),
            });
        }
        if pred.is_empty() {
            return Err(Error::Empty("label vectors"));
        }
        let mut counts = vec![vec![0; truth.k()]; pred.k()];
        for (&p, &t) in pred.labels().iter().zip(truth.labels()) {
            counts[p - 1][t - 1] += 1;
        }
        Ok(Self {
            counts,
            n: pred.len(),
        })
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.n
    }

    /// Largest number of points that agree under an injective matching of
    /// predicted to true labels.
    pub fn best_matching(&self) -> usize {
        let rows = self.counts.len();
        let cols = self.counts.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return 0;
        }
        let (cost, transposed): (Vec<Vec<i64>>, bool) = if rows <= cols {
            (
                self.counts
                    .iter()
                    .map(|r| r.iter().map(|&c| -(c as i64)).collect())
                    .collect(),
                false,
            )
        } else {
            (
                (0..cols)
                    .map(|j| (0..rows).map(|i| -(self.counts[i][j] as i64)).collect())
                    .collect(),
                true,
            )
        };
        let assignment = hungarian(&cost);
        assignment
            .iter()
            .enumerate()
            .map(|(r, &c)| {
                if transposed {
                    self.counts[c][r]
                } else {
                    self.counts[r][c]
                }
            })
            .sum()
    }
}

/// Minimum-cost assignment of every row to a distinct column
/// (`rows ≤ cols`), by shortest augmenting paths with potentials.
fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost[0].len();
    debug_assert!(n <= m);
    const INF: i64 = i64::MAX / 4;
    // 1-based with a virtual column 0
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![INF; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=m {
        if owner[j] != 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Fraction of points misassigned under the best injective relabeling.
/// Labels left unmatched when the cluster counts differ count as errors.
pub fn clustering_error(pred: &LabelVector, truth: &LabelVector) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    Ok(1.0 - table.best_matching() as f64 / table.total() as f64)
}

/// Share of `Σ|Z_ij|` that falls on pairs with different true labels.
pub fn off_block_mass(z: &DMatrix<f64>, truth: &LabelVector) -> Result<f64> {
    let n = truth.len();
    if z.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            context: "off_block_mass",
            expected: format!("{n}×{n}"),
            actual: format!("{}×{}", z.nrows(), z.ncols()),
        });
    }
    let l = truth.labels();
    let mut total = 0.0;
    let mut off = 0.0;
    for j in 0..n {
        for i in 0..n {
            let a = z[(i, j)].abs();
            total += a;
            if l[i] != l[j] {
                off += a;
            }
        }
    }
    Ok(if total == 0.0 { 0.0 } else { off / total })
}
