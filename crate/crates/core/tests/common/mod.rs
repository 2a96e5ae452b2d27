#![allow(dead_code)]

use std::io::Write;

use abdr::solver::{SolverConfig, SolverState};
use abdr::{DataMatrix, WeightedGraph};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Writes straight to stderr so the line shows up even when the harness
/// captures test output.
pub fn report(id: u32, passed: bool, summary: &str) {
    let tag = if passed { "PASS" } else { "FAIL" };
    let line = format!("[{tag}] criterion {id}: {summary}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Gaussian columns scaled to unit length.
pub fn random_unit_data(d: usize, n: usize, seed: u64) -> DataMatrix {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m: DMatrix<f64> = DMatrix::from_fn(d, n, |_, _| StandardNormal.sample(&mut rng));
    for mut c in m.column_iter_mut() {
        let norm = c.norm();
        c /= norm;
    }
    DataMatrix::new(m).unwrap()
}

/// `f(Z) + Ξ(Z − Zᵏ)` with the incidence matrix written out densely.
pub fn z_surrogate(
    x: &DataMatrix,
    graph: &WeightedGraph,
    state: &SolverState,
    cfg: &SolverConfig,
    alpha: f64,
    z: &DMatrix<f64>,
) -> f64 {
    let q = graph.incidence().to_dense();
    let xv = x.values();
    let v1t = &state.v1 - &state.lambda / cfg.mu1;
    let v2t = &state.v2 - &state.psi / cfg.mu2;
    let d = z - &state.z;
    0.5 * (xv - xv * z).norm_squared()
        + 0.5 * cfg.mu1 * (z * &q - v1t).norm_squared()
        + 0.5 * cfg.mu2 * (q.transpose() * z - v2t).norm_squared()
        + 0.5
            * (alpha * d.norm_squared()
                - cfg.mu1 * (&d * &q).norm_squared()
                - cfg.mu2 * (q.transpose() * &d).norm_squared())
}

/// Central differences, step 1e-6, over every entry.
pub fn fd_gradient(f: impl Fn(&DMatrix<f64>) -> f64, at: &DMatrix<f64>) -> DMatrix<f64> {
    let h = 1e-6;
    let mut g = DMatrix::zeros(at.nrows(), at.ncols());
    for idx in 0..at.len() {
        let mut p = at.clone();
        let mut m = at.clone();
        p[idx] += h;
        m[idx] -= h;
        g[idx] = (f(&p) - f(&m)) / (2.0 * h);
    }
    g
}

/// Number of edges joining samples with different labels.
pub fn cross_edges(graph: &WeightedGraph, labels: &[usize]) -> usize {
    graph
        .edges()
        .iter()
        .filter(|e| labels[e.i] != labels[e.j])
        .count()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
