//! The serializable run configuration and its translation into core types.

use std::path::PathBuf;

use abdr::dataset::SubspaceSpec;
use abdr::graph::Phi;
use abdr::solver::{Alpha, FusionMode, SolverConfig};
use abdr::spectral::{ClusterConfig, ClusterCount};
use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

/// A value that is either given or resolved at run time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoOr<T> {
    Value(T),
    Auto(AutoKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

impl<T> AutoOr<T> {
    pub const AUTO: Self = AutoOr::Auto(AutoKeyword::Auto);
}

impl<T: std::str::FromStr> std::str::FromStr for AutoOr<T> {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Self::AUTO);
        }
        s.parse()
            .map(AutoOr::Value)
            .map_err(|_| format!("expected `auto` or a number, got {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    Example1,
    Example2,
    Example3,
    Subspaces {
        ambient_dim: usize,
        sub_dims: Vec<usize>,
        counts: Vec<usize>,
        noise_std: f64,
    },
    Csv {
        data_path: PathBuf,
        #[serde(default)]
        labels_path: Option<PathBuf>,
        #[serde(default)]
        header: bool,
    },
}

impl DatasetConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            DatasetConfig::Example1 => "example1",
            DatasetConfig::Example2 => "example2",
            DatasetConfig::Example3 => "example3",
            DatasetConfig::Subspaces { .. } => "subspaces",
            DatasetConfig::Csv { .. } => "csv",
        }
    }

    /// Default settings for a dataset kind given by name.
    pub fn default_for(kind: &str) -> Result<Self> {
        Ok(match kind {
            "example1" => DatasetConfig::Example1,
            "example2" => DatasetConfig::Example2,
            "example3" => DatasetConfig::Example3,
            "subspaces" => DatasetConfig::Subspaces {
                ambient_dim: 6,
                sub_dims: vec![1, 1, 1],
                counts: vec![15, 15, 15],
                noise_std: 0.05,
            },
            "csv" => DatasetConfig::Csv {
                data_path: PathBuf::new(),
                labels_path: None,
                header: false,
            },
            other => bail!(
                "dataset: unknown kind {other:?} (expected example1, example2, example3, subspaces or csv)"
            ),
        })
    }

    pub fn subspace_spec(&self) -> Option<SubspaceSpec> {
        match self {
            DatasetConfig::Subspaces {
                ambient_dim,
                sub_dims,
                counts,
                noise_std,
            } => Some(SubspaceSpec {
                ambient_dim: *ambient_dim,
                sub_dims: sub_dims.clone(),
                counts: counts.clone(),
                noise_std: *noise_std,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    /// Neighbours per sample.
    pub k: usize,
    pub phi: AutoOr<f64>,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            k: 10,
            phi: AutoOr::AUTO,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub gamma: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub alpha: AutoOr<f64>,
    pub max_iter: usize,
    pub tol_primal: f64,
    pub tol_change: f64,
    pub mode: String,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            gamma: d.gamma,
            mu1: d.mu1,
            mu2: d.mu2,
            alpha: AutoOr::AUTO,
            max_iter: d.max_iter,
            tol_primal: d.tol_primal,
            tol_change: d.tol_change,
            mode: d.mode.as_str().to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSection {
    pub k: AutoOr<usize>,
    pub rel_threshold: f64,
}

impl Default for ClusterSection {
    fn default() -> Self {
        Self {
            k: AutoOr::AUTO,
            rel_threshold: ClusterConfig::default().rel_threshold,
        }
    }
}

/// Everything a run depends on. Serialized verbatim (with auto values
/// resolved) as `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub graph: GraphConfig,
    pub solver: SolverSection,
    pub cluster: ClusterSection,
    /// Root seed; the dataset and the k-means restarts get their own
    /// streams derived from it.
    pub seed: u64,
    /// Scale every sample to unit length before building the graph.
    pub normalize: bool,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetConfig::Example1,
            graph: GraphConfig::default(),
            solver: SolverSection::default(),
            cluster: ClusterSection::default(),
            seed: 0,
            normalize: false,
            out: PathBuf::from("abdr-out"),
        }
    }
}

/// Component tags for [`derive_seed`].
pub const DATASET_STREAM: u64 = 1;
pub const KMEANS_STREAM: u64 = 2;

/// SplitMix64 of the root seed offset by a component tag.
pub fn derive_seed(root: u64, component: u64) -> u64 {
    let mut z = root.wrapping_add(component.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("invalid config {}: {e}", path.display()))
    }

    pub fn phi(&self) -> Phi {
        match self.graph.phi {
            AutoOr::Value(v) => Phi::Fixed(v),
            AutoOr::Auto(_) => Phi::Auto,
        }
    }

    pub fn mode(&self) -> Result<FusionMode> {
        Ok(self.solver.mode.parse()?)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.solver;
        let cfg = SolverConfig {
            gamma: s.gamma,
            mu1: s.mu1,
            mu2: s.mu2,
            alpha: match s.alpha {
                AutoOr::Value(a) => Alpha::Fixed(a),
                AutoOr::Auto(_) => Alpha::Auto,
            },
            max_iter: s.max_iter,
            tol_primal: s.tol_primal,
            tol_change: s.tol_change,
            mode: self.mode()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn cluster_config(&self) -> ClusterConfig {
        ClusterConfig {
            k: match self.cluster.k {
                AutoOr::Value(k) => ClusterCount::Fixed(k),
                AutoOr::Auto(_) => ClusterCount::Auto,
            },
            rel_threshold: self.cluster.rel_threshold,
            seed: derive_seed(self.seed, KMEANS_STREAM),
        }
    }

    pub fn dataset_seed(&self) -> u64 {
        derive_seed(self.seed, DATASET_STREAM)
    }

    /// Checks that do not need the data.
    pub fn validate(&self) -> Result<()> {
        if self.graph.k == 0 {
            bail!("graph.k: must be at least 1");
        }
        if let AutoOr::Value(phi) = self.graph.phi {
            if !(phi.is_finite() && phi > 0.0) {
                bail!("graph.phi: must be a positive finite number or \"auto\", got {phi}");
            }
        }
        if let AutoOr::Value(0) = self.cluster.k {
            bail!("cluster.k: must be at least 1 or \"auto\"");
        }
        let r = self.cluster.rel_threshold;
        if !(r > 0.0 && r < 1.0) {
            bail!("cluster.rel_threshold: must lie in (0, 1), got {r}");
        }
        if let DatasetConfig::Csv { data_path, .. } = &self.dataset {
            if data_path.as_os_str().is_empty() {
                bail!("dataset.data_path: required for the csv dataset (pass --data)");
            }
        }
        self.solver_config()?;
        Ok(())
    }
}
