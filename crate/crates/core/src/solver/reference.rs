//! Slow subgradient-descent minimizer of the same objective, kept as an
//! independent cross-check of the splitting method. Works on the dense
//! incidence matrix and never touches the ADMM code path.

use nalgebra::DMatrix;

use super::FusionMode;
use crate::dataset::DataMatrix;
use crate::graph::WeightedGraph;

struct Dense {
    gram: DMatrix<f64>,
    x: DMatrix<f64>,
    q: DMatrix<f64>,
    w: Vec<f64>,
    gamma: f64,
    mode: FusionMode,
}

impl Dense {
    fn objective(&self, z: &DMatrix<f64>) -> f64 {
        let fit = 0.5 * (&self.x - &self.x * z).norm_squared();
        let mut pen = 0.0;
        if self.mode.fuses_columns() {
            let c = z * &self.q;
            pen += c.column_iter().zip(&self.w).map(|(col, w)| w * col.norm()).sum::<f64>();
        }
        if self.mode.fuses_rows() {
            let r = self.q.transpose() * z;
            pen += r.row_iter().zip(&self.w).map(|(row, w)| w * row.norm()).sum::<f64>();
        }
        fit + self.gamma * pen
    }

    fn subgradient(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let mut g = &self.gram * z - &self.gram;
        if self.gamma == 0.0 || self.q.ncols() == 0 {
            return g;
        }
        if self.mode.fuses_columns() {
            let mut u = z * &self.q;
            for (mut col, w) in u.column_iter_mut().zip(&self.w) {
                let norm = col.norm();
                let s = if norm > 0.0 { w / norm } else { 0.0 };
                col *= s;
            }
            g += (u * self.q.transpose()) * self.gamma;
        }
        if self.mode.fuses_rows() {
            let mut u = self.q.transpose() * z;
            for (l, w) in self.w.iter().enumerate() {
                let norm = u.row(l).norm();
                let s = if norm > 0.0 { w / norm } else { 0.0 };
                u.row_mut(l).scale_mut(s);
            }
            g += (&self.q * u) * self.gamma;
        }
        g
    }
}

/// Subgradient descent from `Z = I` with steps `c/√t`, returning the best
/// iterate seen. `c` is set so the first step moves `Z` by 0.1 in
/// Frobenius norm.
pub fn reference_solve(
    x: &DataMatrix,
    graph: &WeightedGraph,
    gamma: f64,
    mode: FusionMode,
    iterations: usize,
) -> DMatrix<f64> {
    let xv = x.values().clone();
    let problem = Dense {
        gram: xv.transpose() * &xv,
        x: xv,
        q: graph.incidence().to_dense(),
        w: graph.weights().collect(),
        gamma,
        mode,
    };
    let n = x.len();
    let mut z = DMatrix::identity(n, n);
    let mut best = z.clone();
    let mut best_obj = problem.objective(&z);

    let g0 = problem.subgradient(&z).norm();
    if g0 == 0.0 {
        return best;
    }
    let c = 0.1 / g0;
    for t in 1..=iterations {
        let g = problem.subgradient(&z);
        let step = c / (t as f64).sqrt();
        z.zip_apply(&g, |a, b| *a -= step * b);
        let f = problem.objective(&z);
        if f < best_obj {
            best_obj = f;
            best.copy_from(&z);
        }
    }
    best
}
