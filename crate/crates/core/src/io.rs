//! Plain-text artifact writers: dense CSV, label and edge lists, the
//! solver trace and an 8-bit PGM heatmap.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a
//! matrix back with [`crate::dataset::load_csv`] reproduces it bit for bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::graph::WeightedGraph;
use crate::solver::SolveTrace;
use crate::spectral::LabelVector;

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Row-major dense CSV, no header.
pub fn write_matrix<W: Write>(mut out: W, m: &DMatrix<f64>) -> Result<()> {
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn write_matrix_csv(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let mut f = create(path.as_ref())?;
    write_matrix(&mut f, m)?;
    f.flush()?;
    Ok(())
}

/// One 1-based label per line.
pub fn write_labels_csv(path: impl AsRef<Path>, labels: &LabelVector) -> Result<()> {
    let mut f = create(path.as_ref())?;
    for l in labels.labels() {
        writeln!(f, "{l}")?;
    }
    f.flush()?;
    Ok(())
}

/// `i,j,weight` with 1-based node indices.
pub fn write_edges_csv(path: impl AsRef<Path>, graph: &WeightedGraph) -> Result<()> {
    let mut f = create(path.as_ref())?;
    writeln!(f, "i,j,weight")?;
    for e in graph.edges() {
        writeln!(f, "{},{},{}", e.i + 1, e.j + 1, e.weight)?;
    }
    f.flush()?;
    Ok(())
}

pub fn write_trace<W: Write>(mut out: W, trace: &SolveTrace) -> Result<()> {
    writeln!(out, "iter,objective,res_col,res_row,z_change")?;
    for r in &trace.records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.iter, r.objective, r.res_col, r.res_row, r.z_change
        )?;
    }
    Ok(())
}

pub fn write_trace_csv(path: impl AsRef<Path>, trace: &SolveTrace) -> Result<()> {
    let mut f = create(path.as_ref())?;
    write_trace(&mut f, trace)?;
    f.flush()?;
    Ok(())
}

/// Binary PGM (P5) of `|m| / max|m|`, white = largest magnitude.
pub fn write_pgm<W: Write>(mut out: W, m: &DMatrix<f64>) -> Result<()> {
    let peak = m.amax();
    write!(out, "P5\n{} {}\n255\n", m.ncols(), m.nrows())?;
    let mut bytes = Vec::with_capacity(m.len());
    for row in m.row_iter() {
        for v in row.iter() {
            let level = if peak > 0.0 { v.abs() / peak } else { 0.0 };
            bytes.push((level * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    out.write_all(&bytes)?;
    Ok(())
}

pub fn write_pgm_file(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let mut f = create(path.as_ref())?;
    write_pgm(&mut f, m)?;
    f.flush()?;
    Ok(())
}
