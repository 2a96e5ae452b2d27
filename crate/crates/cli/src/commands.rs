use std::fs;
use std::io::Write;
use std::path::Path;

use abdr::dataset::{self, normalize_columns};
use abdr::io;
use abdr::metrics::{clustering_error, off_block_mass};
use abdr::solver::{PreparedProblem, SolverConfig};
use abdr::spectral::{cluster_prepared, ClusterConfig, PipelineOutput};
use abdr::{DataMatrix, LabelVector, WeightedGraph};
use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::SweepArgs;
use crate::config::{AutoOr, DatasetConfig, RunConfig};

/// Data plus ground truth when there is any.
pub struct Loaded {
    pub data: DataMatrix,
    pub truth: Option<LabelVector>,
}

pub fn load_dataset(cfg: &RunConfig) -> Result<Loaded> {
    let seed = cfg.dataset_seed();
    let (data, truth) = match &cfg.dataset {
        DatasetConfig::Example1 => split(dataset::gen_example1(seed)),
        DatasetConfig::Example2 => split(dataset::gen_example2(seed)),
        DatasetConfig::Example3 => split(dataset::gen_example3(seed)),
        d @ DatasetConfig::Subspaces { .. } => {
            let spec = d.subspace_spec().expect("subspace dataset");
            split(dataset::gen_subspaces(&spec, seed).context("dataset")?)
        }
        DatasetConfig::Csv {
            data_path,
            labels_path,
            header,
        } => {
            let data = dataset::load_csv(data_path, *header)?;
            let truth = match labels_path {
                Some(p) => {
                    let labels = dataset::load_labels(p, *header)?;
                    if labels.len() != data.len() {
                        bail!(
                            "{}: {} labels for {} samples in {}",
                            p.display(),
                            labels.len(),
                            data.len(),
                            data_path.display()
                        );
                    }
                    Some(labels)
                }
                None => None,
            };
            (data, truth)
        }
    };
    let data = if cfg.normalize {
        normalize_columns(&data)?
    } else {
        data
    };
    Ok(Loaded { data, truth })
}

fn split(ds: abdr::LabeledDataset) -> (DataMatrix, Option<LabelVector>) {
    (ds.data, Some(ds.truth))
}

/// Contents of `metrics.json`. Truth-dependent fields are `null` when the
/// dataset has no labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub clustering_error: Option<f64>,
    pub off_block_mass: Option<f64>,
    pub estimated_k: usize,
    pub true_k: Option<usize>,
    pub iterations: usize,
    pub final_objective: f64,
}

fn evaluate(out: &PipelineOutput, truth: Option<&LabelVector>) -> Result<Metrics> {
    let (err, obm) = match truth {
        Some(t) => (
            Some(clustering_error(&out.labels, t)?),
            Some(off_block_mass(&out.z, t)?),
        ),
        None => (None, None),
    };
    Ok(Metrics {
        clustering_error: err,
        off_block_mass: obm,
        estimated_k: out.estimated_k,
        true_k: truth.map(LabelVector::k),
        iterations: out.trace.iterations(),
        final_objective: out.trace.final_objective().unwrap_or(f64::NAN),
    })
}

/// One solve-and-cluster on an already prepared problem.
fn execute(
    problem: &PreparedProblem<'_>,
    solver: &SolverConfig,
    cluster: &ClusterConfig,
    truth: Option<&LabelVector>,
) -> Result<(PipelineOutput, Metrics)> {
    let out = cluster_prepared(problem, solver, cluster)?;
    let metrics = evaluate(&out, truth)?;
    Ok((out, metrics))
}

/// `cfg` with the auto choices replaced by what the run actually used, so
/// feeding it back reproduces the run.
fn resolved(cfg: &RunConfig, graph: &WeightedGraph, alpha: f64, k: usize) -> RunConfig {
    let mut r = cfg.clone();
    if graph.phi() > 0.0 {
        r.graph.phi = AutoOr::Value(graph.phi());
    }
    r.solver.alpha = AutoOr::Value(alpha);
    r.cluster.k = AutoOr::Value(k);
    r
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn write_artifacts(
    dir: &Path,
    run: &RunConfig,
    graph: &WeightedGraph,
    out: &PipelineOutput,
    metrics: &Metrics,
) -> Result<()> {
    create_dir(dir)?;
    io::write_matrix_csv(dir.join("Z.csv"), &out.z)?;
    io::write_matrix_csv(dir.join("W.csv"), out.affinity.matrix())?;
    io::write_pgm_file(dir.join("W.pgm"), out.affinity.matrix())?;
    io::write_trace_csv(dir.join("trace.csv"), &out.trace)?;
    io::write_labels_csv(dir.join("labels.csv"), &out.labels)?;
    io::write_edges_csv(dir.join("edges.csv"), graph)?;
    write_json(&dir.join("metrics.json"), metrics)?;
    write_json(&dir.join("run.json"), run)?;
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<Metrics> {
    let loaded = load_dataset(cfg)?;
    let graph = WeightedGraph::build(&loaded.data, cfg.graph.k, cfg.phi()).context("graph")?;
    let solver = cfg.solver_config()?;
    let problem = PreparedProblem::new(&loaded.data, &graph, &solver)?;
    let (out, metrics) = execute(&problem, &solver, &cfg.cluster_config(), loaded.truth.as_ref())?;
    let run = resolved(cfg, &graph, problem.alpha(), out.estimated_k);
    write_artifacts(&cfg.out, &run, &graph, &out, &metrics)?;
    Ok(metrics)
}

fn csv_field(v: Option<impl ToString>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Runs every (mode, γ) pair against one graph and one factorization.
pub fn sweep(args: &SweepArgs) -> Result<()> {
    let cfg = args.run.resolve()?;
    if args.gammas.is_empty() {
        bail!("--gammas: at least one value is required");
    }
    let ablation = !args.modes.is_empty();
    let modes = if ablation {
        args.modes.clone()
    } else {
        vec![cfg.solver.mode.clone()]
    };

    let mut entries = Vec::new();
    for mode in &modes {
        for &gamma in &args.gammas {
            let mut c = cfg.clone();
            c.solver.gamma = gamma;
            c.solver.mode = mode.clone();
            c.validate()?;
            entries.push(c);
        }
    }

    let loaded = load_dataset(&cfg)?;
    let graph = WeightedGraph::build(&loaded.data, cfg.graph.k, cfg.phi()).context("graph")?;
    // α depends only on μ and the graph, so one factorization serves every entry.
    let problem = PreparedProblem::new(&loaded.data, &graph, &cfg.solver_config()?)?;
    create_dir(&cfg.out)?;

    let results: Vec<Metrics> = entries
        .par_iter()
        .enumerate()
        .map(|(idx, c)| {
            let (out, metrics) = execute(
                &problem,
                &c.solver_config()?,
                &c.cluster_config(),
                loaded.truth.as_ref(),
            )
            .with_context(|| format!("gamma {} mode {}", c.solver.gamma, c.solver.mode))?;
            if args.keep_runs {
                let dir = cfg.out.join(format!("run_{idx:03}"));
                let run = resolved(c, &graph, problem.alpha(), out.estimated_k);
                write_artifacts(&dir, &run, &graph, &out, &metrics)?;
            }
            Ok(metrics)
        })
        .collect::<Result<_>>()?;

    let path = cfg.out.join("sweep.csv");
    let mut f = std::io::BufWriter::new(
        fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?,
    );
    let head = "gamma,estimated_k,clustering_error,off_block_mass,iterations,final_objective";
    if ablation {
        writeln!(f, "mode,{head}")?;
    } else {
        writeln!(f, "{head}")?;
    }
    for (c, m) in entries.iter().zip(&results) {
        if ablation {
            write!(f, "{},", c.solver.mode)?;
        }
        writeln!(
            f,
            "{},{},{},{},{},{}",
            c.solver.gamma,
            m.estimated_k,
            csv_field(m.clustering_error),
            csv_field(m.off_block_mass),
            m.iterations,
            m.final_objective
        )?;
    }
    f.flush()?;
    Ok(())
}

/// Writes `X.csv` and, when the dataset has labels, `labels.csv`.
pub fn gen(cfg: &RunConfig) -> Result<()> {
    let loaded = load_dataset(cfg)?;
    create_dir(&cfg.out)?;
    io::write_matrix_csv(cfg.out.join("X.csv"), loaded.data.values())?;
    if let Some(t) = &loaded.truth {
        io::write_labels_csv(cfg.out.join("labels.csv"), t)?;
    }
    Ok(())
}
