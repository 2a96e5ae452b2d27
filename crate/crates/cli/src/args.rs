//! Command-line flags. Every flag is optional so that values from
//! `--config` survive unless overridden.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::{AutoOr, DatasetConfig, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "abdr", version, about = "Subspace clustering by adaptive block diagonal representation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve, cluster and write every artifact for one configuration.
    #[command(allow_negative_numbers = true)]
    Run(RunArgs),
    /// Repeat the pipeline over a list of γ values (and optionally modes).
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Write a generated dataset and its labels as CSV.
    Gen(RunArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated γ values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub gammas: Vec<f64>,
    /// Comma-separated fusion modes for an ablation; adds a `mode` column.
    #[arg(long, value_delimiter = ',')]
    pub modes: Vec<String>,
    /// Also write the full artifact set of every entry to its own
    /// subdirectory.
    #[arg(long)]
    pub keep_runs: bool,
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// example1 | example2 | example3 | subspaces | csv
    #[arg(long)]
    pub dataset: Option<String>,
    /// Data matrix for the csv dataset, one sample per column.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Ground-truth labels for the csv dataset, one per line.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// The csv files start with a header row.
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub ambient_dim: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub sub_dims: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub counts: Option<Vec<usize>>,
    #[arg(long)]
    pub noise_std: Option<f64>,
    /// Scale every sample to unit length.
    #[arg(long)]
    pub normalize: bool,

    /// Neighbours per sample in the KNN graph.
    #[arg(long)]
    pub knn: Option<usize>,
    /// Gaussian kernel width, or `auto`.
    #[arg(long)]
    pub phi: Option<AutoOr<f64>>,

    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub mu2: Option<f64>,
    /// Proximal weight, or `auto`.
    #[arg(long)]
    pub alpha: Option<AutoOr<f64>>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol_primal: Option<f64>,
    #[arg(long)]
    pub tol_change: Option<f64>,
    /// both | column_only | row_only
    #[arg(long)]
    pub mode: Option<String>,

    /// Number of clusters, or `auto` for the block count.
    #[arg(long)]
    pub k: Option<AutoOr<usize>>,
    #[arg(long)]
    pub rel_threshold: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl RunArgs {
    /// The file configuration (or defaults) with every given flag applied.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        self.apply_dataset(&mut cfg.dataset)?;
        cfg.normalize |= self.normalize;
        set(&mut cfg.graph.k, self.knn);
        set(&mut cfg.graph.phi, self.phi);
        let s = &mut cfg.solver;
        set(&mut s.gamma, self.gamma);
        set(&mut s.mu1, self.mu1);
        set(&mut s.mu2, self.mu2);
        set(&mut s.alpha, self.alpha);
        set(&mut s.max_iter, self.max_iter);
        set(&mut s.tol_primal, self.tol_primal);
        set(&mut s.tol_change, self.tol_change);
        set(&mut s.mode, self.mode.clone());
        set(&mut cfg.cluster.k, self.k);
        set(&mut cfg.cluster.rel_threshold, self.rel_threshold);
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.out, self.out.clone());
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_dataset(&self, ds: &mut DatasetConfig) -> Result<()> {
        if let Some(kind) = &self.dataset {
            if kind != ds.kind() {
                *ds = DatasetConfig::default_for(kind)?;
            }
        }
        match ds {
            DatasetConfig::Subspaces {
                ambient_dim,
                sub_dims,
                counts,
                noise_std,
            } => {
                set(ambient_dim, self.ambient_dim);
                set(sub_dims, self.sub_dims.clone());
                set(counts, self.counts.clone());
                set(noise_std, self.noise_std);
            }
            DatasetConfig::Csv {
                data_path,
                labels_path,
                header,
            } => {
                set(data_path, self.data.clone());
                if self.labels.is_some() {
                    *labels_path = self.labels.clone();
                }
                *header |= self.header;
            }
            _ => {}
        }
        let kind = ds.kind();
        let misplaced = [
            ("--data", self.data.is_some(), "csv"),
            ("--labels", self.labels.is_some(), "csv"),
            ("--header", self.header, "csv"),
            ("--ambient-dim", self.ambient_dim.is_some(), "subspaces"),
            ("--sub-dims", self.sub_dims.is_some(), "subspaces"),
            ("--counts", self.counts.is_some(), "subspaces"),
            ("--noise-std", self.noise_std.is_some(), "subspaces"),
        ];
        for (flag, given, wants) in misplaced {
            if given && kind != wants {
                bail!("{flag} applies only to the {wants} dataset (current dataset is {kind})");
            }
        }
        Ok(())
    }
}
