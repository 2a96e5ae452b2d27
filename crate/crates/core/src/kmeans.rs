//! Lloyd's k-means with k-means++ seeding over the rows of a matrix.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// 0-based cluster per row.
    pub labels: Vec<usize>,
    pub centroids: DMatrix<f64>,
    pub inertia: f64,
}

fn sq_dist(points: &DMatrix<f64>, i: usize, centroids: &DMatrix<f64>, c: usize) -> f64 {
    points
        .row(i)
        .iter()
        .zip(centroids.row(c).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn nearest(points: &DMatrix<f64>, i: usize, centroids: &DMatrix<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.nrows() {
        let d = sq_dist(points, i, centroids, c);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus<R: Rng>(points: &DMatrix<f64>, k: usize, rng: &mut R) -> DMatrix<f64> {
    let n = points.nrows();
    let mut centroids = DMatrix::zeros(k, points.ncols());
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    centroids.set_row(0, &points.row(first));
    let mut dist: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centroids, 0)).collect();
    for c in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &d) in dist.iter().enumerate() {
                if d > 0.0 {
                    pick = Some(i);
                    if target < d {
                        break;
                    }
                    target -= d;
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            // every remaining point coincides with a centre; take any unused one
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centroids.set_row(c, &points.row(pick));
        for (i, d) in dist.iter_mut().enumerate() {
            *d = d.min(sq_dist(points, i, &centroids, c));
        }
    }
    centroids
}

fn lloyd<R: Rng>(points: &DMatrix<f64>, k: usize, max_iter: usize, rng: &mut R) -> KMeansResult {
    let n = points.nrows();
    let mut centroids = plus_plus(points, k, rng);
    let mut labels = vec![usize::MAX; n];
    for _ in 0..max_iter {
        let mut changed = false;
        for (i, label) in labels.iter_mut().enumerate() {
            let (c, _) = nearest(points, i, &centroids);
            if *label != c {
                *label = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = DMatrix::zeros(k, points.ncols());
        let mut counts = vec![0usize; k];
        for (i, &c) in labels.iter().enumerate() {
            let mut row = sums.row_mut(c);
            row += points.row(i);
            counts[c] += 1;
        }
        for c in 0..k {
            // an empty cluster keeps its previous centre
            if counts[c] > 0 {
                centroids.set_row(c, &(sums.row(c) / counts[c] as f64));
            }
        }
    }
    let inertia = labels
        .iter()
        .enumerate()
        .map(|(i, &c)| sq_dist(points, i, &centroids, c))
        .sum();
    KMeansResult {
        labels,
        centroids,
        inertia,
    }
}

/// Best-inertia run over `config.restarts` seeded restarts. Restart `r`
/// draws from ChaCha stream `r` of `seed`, so the result does not depend on
/// scheduling.
pub fn kmeans(points: &DMatrix<f64>, k: usize, config: &KMeansConfig, seed: u64) -> KMeansResult {
    assert!(k >= 1 && k <= points.nrows(), "k must be in 1..=n");
    let runs: Vec<KMeansResult> = (0..config.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            lloyd(points, k, config.max_iter, &mut rng)
        })
        .collect();
    runs.into_iter()
        .reduce(|best, run| if run.inertia < best.inertia { run } else { best })
        .expect("at least one restart")
}
