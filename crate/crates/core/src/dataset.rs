//! Synthetic subspace data and external matrix ingestion.
//!
//! Samples are stored as the columns of a `d × n` matrix. The generators
//! emit samples grouped by subspace, so a ground-truth coefficient matrix
//! is block diagonal without any permutation.

use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::spectral::LabelVector;

/// Observed samples, one per column.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    /// Wraps `values` after checking that it is non-empty and finite.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::Empty("data matrix has no rows or no columns"));
        }
        for column in 0..values.ncols() {
            for row in 0..values.nrows() {
                if !values[(row, column)].is_finite() {
                    return Err(Error::NonFinite { row, column });
                }
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }

    /// Feature dimension `d`.
    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    /// Sample count `n`.
    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }

    /// Index of the first all-zero column, if any.
    pub fn first_zero_column(&self) -> Option<usize> {
        (0..self.len()).find(|&j| self.values.column(j).iter().all(|&v| v == 0.0))
    }
}

/// Data together with its generating subspace labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub data: DataMatrix,
    pub truth: LabelVector,
    pub subspace_count: usize,
}

impl LabeledDataset {
    fn from_groups(values: DMatrix<f64>, counts: &[usize]) -> Result<Self> {
        let labels = counts
            .iter()
            .enumerate()
            .flat_map(|(g, &c)| std::iter::repeat_n(g + 1, c))
            .collect();
        Ok(Self {
            data: DataMatrix::new(values)?,
            truth: LabelVector::new(labels, counts.len())?,
            subspace_count: counts.len(),
        })
    }

    /// Number of samples carrying each label `1..=k`.
    pub fn counts(&self) -> Vec<usize> {
        self.truth.counts()
    }
}

/// Half-width of the sampling interval along each line.
const LINE_HALF_RANGE: f64 = 2.0;
/// Positions closer than this to the origin are resampled.
const LINE_ORIGIN_GAP: f64 = 0.1;

fn line_position<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let t = rng.random_range(-LINE_HALF_RANGE..=LINE_HALF_RANGE);
        if t.abs() >= LINE_ORIGIN_GAP {
            return t;
        }
    }
}

/// Samples `count` points on the line `y = slope · x` in the plane.
fn line_points<R: Rng>(rng: &mut R, slope: f64, count: usize) -> Vec<[f64; 2]> {
    (0..count)
        .map(|_| {
            let t = line_position(rng);
            [t, slope * t]
        })
        .collect()
}

fn plane_matrix(points: &[[f64; 2]]) -> DMatrix<f64> {
    DMatrix::from_fn(2, points.len(), |r, c| points[c][r])
}

fn two_lines(seed: u64, slopes: [f64; 2], counts: [usize; 2]) -> (ChaCha8Rng, Vec<[f64; 2]>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = line_points(&mut rng, slopes[0], counts[0]);
    points.extend(line_points(&mut rng, slopes[1], counts[1]));
    (rng, points)
}

/// 20 points on `y = x` followed by 10 points on `y = −x`.
pub fn gen_example1(seed: u64) -> LabeledDataset {
    let counts = [20, 10];
    let (_, points) = two_lines(seed, [1.0, -1.0], counts);
    LabeledDataset::from_groups(plane_matrix(&points), &counts)
        .expect("line samples are finite and non-empty")
}

/// 20 points on `y = 0` followed by 10 points on `y = x / 2`, noise free.
pub fn gen_example2(seed: u64) -> LabeledDataset {
    let counts = [20, 10];
    let (_, points) = two_lines(seed, [0.0, 0.5], counts);
    LabeledDataset::from_groups(plane_matrix(&points), &counts)
        .expect("line samples are finite and non-empty")
}

/// Knobs for the noisy two-line example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example3Params {
    pub points_per_line: usize,
    /// Fraction of samples that receive noise.
    pub noise_rate: f64,
    /// Per-coordinate standard deviation of the additive noise.
    pub noise_std: f64,
}

impl Default for Example3Params {
    fn default() -> Self {
        Self {
            points_per_line: 40,
            noise_rate: 0.2,
            noise_std: 0.1,
        }
    }
}

/// Noisy samples from `y = 0` and `y = x / 2`, see [`Example3Params`].
pub fn gen_example3(seed: u64) -> LabeledDataset {
    gen_example3_with(seed, Example3Params::default())
}

/// Indices of the noisy columns produced by [`gen_example3_with`].
pub fn example3_noisy_columns(seed: u64, params: Example3Params) -> Vec<usize> {
    example3_parts(seed, params).1
}

pub fn gen_example3_with(seed: u64, params: Example3Params) -> LabeledDataset {
    let (values, _) = example3_parts(seed, params);
    let m = params.points_per_line;
    LabeledDataset::from_groups(values, &[m, m]).expect("line samples are finite and non-empty")
}

fn example3_parts(seed: u64, params: Example3Params) -> (DMatrix<f64>, Vec<usize>) {
    let m = params.points_per_line;
    let (mut rng, points) = two_lines(seed, [0.0, 0.5], [m, m]);
    let mut values = plane_matrix(&points);
    let n = values.ncols();
    let noisy = ((params.noise_rate * n as f64).floor() as usize).min(n);
    let mut chosen = index::sample(&mut rng, n, noisy).into_vec();
    chosen.sort_unstable();
    if params.noise_std > 0.0 {
        let normal = Normal::new(0.0, params.noise_std).expect("positive standard deviation");
        for &j in &chosen {
            for r in 0..2 {
                values[(r, j)] += normal.sample(&mut rng);
            }
        }
    }
    (values, chosen)
}

/// Parameters for [`gen_subspaces`].
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSpec {
    pub ambient_dim: usize,
    pub sub_dims: Vec<usize>,
    pub counts: Vec<usize>,
    pub noise_std: f64,
}

impl SubspaceSpec {
    pub fn k(&self) -> usize {
        self.sub_dims.len()
    }
}

/// Samples from `k` independent linear subspaces.
///
/// The bases are carved out of one orthonormal frame, so their spans are
/// mutually orthogonal. Each sample uses standard-normal coordinates in its
/// basis, receives isotropic noise and is scaled to unit length.
pub fn gen_subspaces(spec: &SubspaceSpec, seed: u64) -> Result<LabeledDataset> {
    let k = spec.k();
    if k == 0 {
        return Err(Error::InvalidArgument {
            name: "sub_dims",
            reason: "at least one subspace is required".into(),
        });
    }
    if spec.counts.len() != k {
        return Err(Error::InvalidArgument {
            name: "counts",
            reason: format!("expected {k} entries, found {}", spec.counts.len()),
        });
    }
    if let Some(i) = spec.sub_dims.iter().position(|&d| d == 0) {
        return Err(Error::InvalidArgument {
            name: "sub_dims",
            reason: format!("subspace {} has dimension 0", i + 1),
        });
    }
    let total_dim: usize = spec.sub_dims.iter().sum();
    if total_dim > spec.ambient_dim {
        return Err(Error::InvalidArgument {
            name: "sub_dims",
            reason: format!(
                "dimensions sum to {total_dim} > ambient dimension {}; independence cannot be guaranteed",
                spec.ambient_dim
            ),
        });
    }
    for (i, (&c, &d)) in spec.counts.iter().zip(&spec.sub_dims).enumerate() {
        if c < d {
            return Err(Error::InvalidArgument {
                name: "counts",
                reason: format!("subspace {} has {c} samples but dimension {d}", i + 1),
            });
        }
    }
    if !(spec.noise_std >= 0.0 && spec.noise_std.is_finite()) {
        return Err(Error::InvalidArgument {
            name: "noise_std",
            reason: format!("{} is not a finite nonnegative number", spec.noise_std),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaussian: DMatrix<f64> =
        DMatrix::from_fn(spec.ambient_dim, total_dim, |_, _| StandardNormal.sample(&mut rng));
    let frame = gaussian.qr().q();

    let n: usize = spec.counts.iter().sum();
    let mut values = DMatrix::zeros(spec.ambient_dim, n);
    let mut col = 0;
    let mut basis_start = 0;
    for (&dim, &count) in spec.sub_dims.iter().zip(&spec.counts) {
        let basis = frame.columns(basis_start, dim);
        for _ in 0..count {
            let coords: nalgebra::DVector<f64> =
                nalgebra::DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
            values.set_column(col, &(basis * coords));
            col += 1;
        }
        basis_start += dim;
    }
    if spec.noise_std > 0.0 {
        let normal = Normal::new(0.0, spec.noise_std).expect("checked above");
        values.iter_mut().for_each(|v| *v += normal.sample(&mut rng));
    }
    for mut column in values.column_iter_mut() {
        let norm = column.norm();
        if norm > 0.0 {
            column /= norm;
        }
    }
    LabeledDataset::from_groups(values, &spec.counts)
}

/// Reads a numeric CSV with features as rows and samples as columns.
pub fn load_csv(path: impl AsRef<Path>, header: bool) -> Result<DataMatrix> {
    let path = path.as_ref();
    let rows = read_numeric_rows(path, header)?;
    let width = rows[0].len();
    let values = DMatrix::from_fn(rows.len(), width, |r, c| rows[r][c]);
    DataMatrix::new(values).map_err(|e| match e {
        Error::NonFinite { row, column } => Error::Csv {
            path: path.to_path_buf(),
            message: format!(
                "non-finite value at line {}, field {}",
                row + 1 + header as usize,
                column + 1
            ),
        },
        other => other,
    })
}

/// Reads a single-column CSV of 1-based labels.
pub fn load_labels(path: impl AsRef<Path>, header: bool) -> Result<LabelVector> {
    let path = path.as_ref();
    let rows = read_numeric_rows(path, header)?;
    let mut labels = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let line = i + 1 + header as usize;
        if row.len() != 1 {
            return Err(Error::Ragged {
                path: path.to_path_buf(),
                line,
                expected: 1,
                found: row.len(),
            });
        }
        let v = row[0];
        if v.fract() != 0.0 || v < 1.0 {
            return Err(Error::Csv {
                path: path.to_path_buf(),
                message: format!("line {line}: label {v} is not a positive integer"),
            });
        }
        labels.push(v as usize);
    }
    LabelVector::from_labels(labels)
}

fn read_numeric_rows(path: &Path, header: bool) -> Result<Vec<Vec<f64>>> {
    let csv_err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    if !path.exists() {
        return Err(csv_err("file does not exist".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(e.to_string()))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(e.to_string()))?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(rows.len() + 1);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(record.len());
        for (field, token) in record.iter().enumerate() {
            let value: f64 = token.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                field: field + 1,
                token: token.to_string(),
            })?;
            if !value.is_finite() {
                return Err(csv_err(format!(
                    "non-finite value {token:?} at line {line}, field {}",
                    field + 1
                )));
            }
            row.push(value);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Ragged {
                    path: path.to_path_buf(),
                    line,
                    expected: first.len(),
                    found: row.len(),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Empty("csv file contains no data rows"));
    }
    Ok(rows)
}

/// Scales every column to unit Euclidean norm.
pub fn normalize_columns(x: &DataMatrix) -> Result<DataMatrix> {
    let mut values = x.values().clone();
    for (j, mut column) in values.column_iter_mut().enumerate() {
        let norm = column.norm();
        if norm == 0.0 {
            return Err(Error::ZeroColumn { column: j });
        }
        column /= norm;
    }
    DataMatrix::new(values)
}
