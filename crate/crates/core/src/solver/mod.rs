//! Generalized ADMM for the row/column fusion model
//!
//! ```text
//! minimize  ½‖X − XZ‖²_F + γ Σ_{(i,j)∈E} w_ij (‖Z[:,i] − Z[:,j]‖₂ + ‖Z[i,:] − Z[j,:]‖₂)
//! ```
//!
//! The differences are split off as `V1 = Z·Q` and `V2 = Qᵀ·Z` with scaled
//! duals. The Z-step is linearized by the quadratic
//! `Ξ(D) = ½(α‖D‖² − μ₁‖DQ‖² − μ₂‖QᵀD‖²)`, which turns it into one solve
//! against the fixed SPD matrix `XᵀX + αI`, factorized once per problem.
//! The V-steps are column- and row-wise block soft thresholding.
//!
//! Cost per iteration is `O(n²·min(n, d) + n·|E|)`: when `d < n` the system
//! is solved through the `d × d` capacitance matrix `αI + XXᵀ` (unless α is
//! tiny next to `‖X‖²`).

mod reference;

pub use reference::reference_solve;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::dataset::DataMatrix;
use crate::error::{Error, Result};
use crate::graph::{self, largest_singular_value, Incidence, WeightedGraph};

/// Which fusion terms enter the penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FusionMode {
    #[default]
    Both,
    ColumnOnly,
    RowOnly,
}

impl FusionMode {
    pub fn fuses_columns(self) -> bool {
        self != FusionMode::RowOnly
    }

    pub fn fuses_rows(self) -> bool {
        self != FusionMode::ColumnOnly
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FusionMode::Both => "both",
            FusionMode::ColumnOnly => "column_only",
            FusionMode::RowOnly => "row_only",
        }
    }
}

impl std::str::FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(FusionMode::Both),
            "column_only" | "col" | "column" => Ok(FusionMode::ColumnOnly),
            "row_only" | "row" => Ok(FusionMode::RowOnly),
            other => Err(Error::InvalidArgument {
                name: "mode",
                reason: format!("unknown fusion mode {other:?} (expected both, column_only or row_only)"),
            }),
        }
    }
}

impl std::fmt::Display for FusionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Fusion strength γ.
    pub gamma: f64,
    /// Penalty on the column-difference constraint.
    pub mu1: f64,
    /// Penalty on the row-difference constraint.
    pub mu2: f64,
    pub alpha: Alpha,
    pub max_iter: usize,
    pub tol_primal: f64,
    pub tol_change: f64,
    pub mode: FusionMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            mu1: 1.0,
            mu2: 1.0,
            alpha: Alpha::Auto,
            max_iter: 200,
            tol_primal: 1e-5,
            tol_change: 1e-6,
            mode: FusionMode::Both,
        }
    }
}

impl SolverConfig {
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_mode(mut self, mode: FusionMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, ok: bool, value: f64, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidArgument {
                    name,
                    reason: format!("{value} is not {what}"),
                })
            }
        };
        check("gamma", self.gamma >= 0.0 && self.gamma.is_finite(), self.gamma, "a finite nonnegative number")?;
        check("mu1", self.mu1 > 0.0 && self.mu1.is_finite(), self.mu1, "a finite positive number")?;
        check("mu2", self.mu2 > 0.0 && self.mu2.is_finite(), self.mu2, "a finite positive number")?;
        check("tol_primal", self.tol_primal > 0.0, self.tol_primal, "positive")?;
        check("tol_change", self.tol_change > 0.0, self.tol_change, "positive")?;
        if let Alpha::Fixed(a) = self.alpha {
            check("alpha", a > 0.0 && a.is_finite(), a, "a finite positive number")?;
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument {
                name: "max_iter",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Iterates of the splitting.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    /// Representation coefficients, n × n.
    pub z: DMatrix<f64>,
    /// Split of `Z·Q`, n × |E|.
    pub v1: DMatrix<f64>,
    /// Split of `Qᵀ·Z`, |E| × n.
    pub v2: DMatrix<f64>,
    /// Dual of `Z·Q = V1`.
    pub lambda: DMatrix<f64>,
    /// Dual of `Qᵀ·Z = V2`.
    pub psi: DMatrix<f64>,
    pub iter: usize,
}

impl SolverState {
    /// `Z = I`, splits consistent with `Z`, zero duals.
    pub fn initial(graph: &WeightedGraph) -> Self {
        let n = graph.n();
        let m = graph.edge_count();
        let z = DMatrix::identity(n, n);
        let q = graph.incidence();
        Self {
            v1: graph::col_diffs_unchecked(&z, q),
            v2: graph::row_diffs_unchecked(&z, q),
            z,
            lambda: DMatrix::zeros(n, m),
            psi: DMatrix::zeros(m, n),
            iter: 0,
        }
    }
}

/// One row of the convergence trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub objective: f64,
    /// `‖V1 − Z·Q‖_F`
    pub res_col: f64,
    /// `‖V2 − Qᵀ·Z‖_F`
    pub res_row: f64,
    /// `‖Z − Z_prev‖_F / max(1, ‖Z_prev‖_F)`
    pub z_change: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
    /// Whether the stopping test fired before `max_iter`.
    pub converged: bool,
}

impl SolveTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.records.last().map(|r| r.objective)
    }

    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.objective)
    }
}

/// `Ω(Z)`: weighted Euclidean norms of the column and row differences.
pub fn fusion_penalty(z: &DMatrix<f64>, graph: &WeightedGraph, mode: FusionMode) -> Result<f64> {
    let q = graph.incidence();
    let mut total = 0.0;
    if mode.fuses_columns() {
        let cols = graph::col_diffs(z, q)?;
        total += graph
            .weights()
            .zip(cols.column_iter())
            .map(|(w, c)| w * c.norm())
            .sum::<f64>();
    }
    if mode.fuses_rows() {
        let rows = graph::row_diffs(z, q)?;
        total += graph
            .weights()
            .zip(row_norms(&rows))
            .map(|(w, r)| w * r)
            .sum::<f64>();
    }
    Ok(total)
}

/// `½‖X − XZ‖²_F`
pub fn fidelity(x: &DataMatrix, z: &DMatrix<f64>) -> Result<f64> {
    let n = x.len();
    if z.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            context: "fidelity",
            expected: format!("{n}×{n}"),
            actual: format!("{}×{}", z.nrows(), z.ncols()),
        });
    }
    let xv = x.values();
    Ok(0.5 * (xv - xv * z).norm_squared())
}

/// `½‖X − XZ‖²_F + γ·Ω(Z)`
pub fn objective(
    x: &DataMatrix,
    z: &DMatrix<f64>,
    graph: &WeightedGraph,
    gamma: f64,
    mode: FusionMode,
) -> Result<f64> {
    if graph.n() != x.len() {
        return Err(Error::DimensionMismatch {
            context: "objective",
            expected: format!("graph over {} nodes", x.len()),
            actual: format!("{} nodes", graph.n()),
        });
    }
    let fit = fidelity(x, z)?;
    if gamma == 0.0 {
        return Ok(fit);
    }
    Ok(fit + gamma * fusion_penalty(z, graph, mode)?)
}

fn row_norms(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sq = vec![0.0; m.nrows()];
    for col in m.column_iter() {
        for (acc, v) in sq.iter_mut().zip(col.iter()) {
            *acc += v * v;
        }
    }
    sq.into_iter().map(f64::sqrt).collect()
}

/// `dst += s · src`
fn add_scaled(dst: &mut DMatrix<f64>, s: f64, src: &DMatrix<f64>) {
    dst.zip_apply(src, |a, b| *a += s * b);
}

fn shrink_factor(norm: f64, tau: f64) -> f64 {
    if norm <= tau || norm == 0.0 {
        0.0
    } else {
        1.0 - tau / norm
    }
}

/// Proximal map of `τ‖·‖₂`: `max(0, 1 − τ/‖u‖)·u`.
pub fn block_soft_threshold(u: &DVector<f64>, tau: f64) -> DVector<f64> {
    u * shrink_factor(u.norm(), tau)
}

/// Shrinks column `l` of `m` with threshold `taus[l]`.
fn shrink_columns(m: &mut DMatrix<f64>, taus: impl Iterator<Item = f64>) {
    for (mut col, tau) in m.column_iter_mut().zip(taus) {
        let s = shrink_factor(col.norm(), tau);
        col *= s;
    }
}

/// Shrinks row `l` of `m` with threshold `taus[l]`.
fn shrink_rows(m: &mut DMatrix<f64>, taus: impl Iterator<Item = f64>) {
    let factors: Vec<f64> = row_norms(m)
        .into_iter()
        .zip(taus)
        .map(|(norm, tau)| shrink_factor(norm, tau))
        .collect();
    for mut col in m.column_iter_mut() {
        for (v, s) in col.iter_mut().zip(&factors) {
            *v *= s;
        }
    }
}

/// Smallest floor used when the graph has no edges.
pub const ALPHA_FLOOR: f64 = 1e-8;

/// `1.01·(μ₁ + μ₂)·σ_max(Q)²`, which keeps `Ξ` positive definite.
pub fn choose_alpha(graph: &WeightedGraph, mu1: f64, mu2: f64) -> f64 {
    let sigma = largest_singular_value(graph.incidence());
    let alpha = 1.01 * (mu1 + mu2) * sigma * sigma;
    alpha.max(ALPHA_FLOOR)
}

/// Factorization of `XᵀX + αI`, reused by every Z-step.
#[derive(Debug, Clone)]
pub struct ZSystem {
    gram: DMatrix<f64>,
    alpha: f64,
    kind: SystemKind,
}

#[derive(Debug, Clone)]
enum SystemKind {
    /// Cholesky of the n × n matrix.
    Direct(Cholesky<f64, Dyn>),
    /// Cholesky of `αI_d + XXᵀ`; `(XᵀX + αI)⁻¹ = (I − Xᵀ C⁻¹ X)/α`.
    Capacitance {
        x: DMatrix<f64>,
        chol: Cholesky<f64, Dyn>,
    },
}

impl ZSystem {
    pub fn new(x: &DataMatrix, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument {
                name: "alpha",
                reason: format!("{alpha} is not a finite positive number"),
            });
        }
        let xv = x.values();
        let gram = xv.transpose() * xv;
        // The capacitance form divides by α; keep it for well-scaled α only.
        let kind = if x.dim() < x.len() && alpha >= 1e-6 * xv.norm_squared() {
            let mut c = xv * xv.transpose();
            for i in 0..c.nrows() {
                c[(i, i)] += alpha;
            }
            SystemKind::Capacitance {
                x: xv.clone(),
                chol: Cholesky::new(c).ok_or(Error::NotPositiveDefinite)?,
            }
        } else {
            let mut m = gram.clone();
            for i in 0..m.nrows() {
                m[(i, i)] += alpha;
            }
            SystemKind::Direct(Cholesky::new(m).ok_or(Error::NotPositiveDefinite)?)
        };
        Ok(Self { gram, alpha, kind })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `XᵀX`
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Solves `(XᵀX + αI)·Z = rhs`.
    pub fn solve(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.kind {
            SystemKind::Direct(chol) => chol.solve(rhs),
            SystemKind::Capacitance { x, chol } => {
                let inner = chol.solve(&(x * rhs));
                (rhs - x.transpose() * inner) / self.alpha
            }
        }
    }
}

fn ensure_finite(m: &DMatrix<f64>, iteration: usize, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Diverged { iteration, what })
    }
}

/// Z-step: minimizer of the linearized augmented Lagrangian,
/// `Z = (XᵀX + αI)⁻¹(αZᵏ + XᵀX + μ₁A + μ₂B)` with
/// `A = (V1 − Λ/μ₁ − ZᵏQ)Qᵀ` and `B = Q(V2 − Ψ/μ₂ − QᵀZᵏ)`.
pub fn update_z(
    state: &SolverState,
    graph: &WeightedGraph,
    config: &SolverConfig,
    system: &ZSystem,
) -> Result<DMatrix<f64>> {
    let q = graph.incidence();
    let zk = &state.z;
    let mut rhs = zk * system.alpha() + system.gram();
    if graph.edge_count() > 0 {
        let mut r1 = &state.v1 - graph::col_diffs_unchecked(zk, q);
        add_scaled(&mut r1, -1.0 / config.mu1, &state.lambda);
        rhs += graph::scatter_cols(&r1, q) * config.mu1;

        let mut r2 = &state.v2 - graph::row_diffs_unchecked(zk, q);
        add_scaled(&mut r2, -1.0 / config.mu2, &state.psi);
        rhs += graph::scatter_rows(&r2, q) * config.mu2;
    }
    let z = system.solve(&rhs);
    ensure_finite(&z, state.iter + 1, "Z")?;
    Ok(z)
}

/// V1-step: column-wise prox of `(γw_l/μ₁)‖·‖` at `Z·Q + Λ/μ₁`.
/// Without column fusion V1 tracks `Z·Q` exactly.
pub fn update_v1(state: &SolverState, graph: &WeightedGraph, config: &SolverConfig) -> DMatrix<f64> {
    let mut v = graph::col_diffs_unchecked(&state.z, graph.incidence());
    if !config.mode.fuses_columns() {
        return v;
    }
    add_scaled(&mut v, 1.0 / config.mu1, &state.lambda);
    let scale = config.gamma / config.mu1;
    shrink_columns(&mut v, graph.weights().map(|w| scale * w));
    v
}

/// V2-step: row-wise prox of `(γw_l/μ₂)‖·‖` at `Qᵀ·Z + Ψ/μ₂`.
pub fn update_v2(state: &SolverState, graph: &WeightedGraph, config: &SolverConfig) -> DMatrix<f64> {
    let mut v = graph::row_diffs_unchecked(&state.z, graph.incidence());
    if !config.mode.fuses_rows() {
        return v;
    }
    add_scaled(&mut v, 1.0 / config.mu2, &state.psi);
    let scale = config.gamma / config.mu2;
    shrink_rows(&mut v, graph.weights().map(|w| scale * w));
    v
}

/// Dual ascent: `Λ += μ₁(Z·Q − V1)`, `Ψ += μ₂(Qᵀ·Z − V2)`.
pub fn update_duals(
    state: &SolverState,
    graph: &WeightedGraph,
    config: &SolverConfig,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let (r1, r2) = residuals(state, graph.incidence());
    let mut lambda = state.lambda.clone();
    let mut psi = state.psi.clone();
    if config.mode.fuses_columns() {
        add_scaled(&mut lambda, config.mu1, &r1);
    }
    if config.mode.fuses_rows() {
        add_scaled(&mut psi, config.mu2, &r2);
    }
    (lambda, psi)
}

/// `(Z·Q − V1, Qᵀ·Z − V2)`
fn residuals(state: &SolverState, q: &Incidence) -> (DMatrix<f64>, DMatrix<f64>) {
    (
        graph::col_diffs_unchecked(&state.z, q) - &state.v1,
        graph::row_diffs_unchecked(&state.z, q) - &state.v2,
    )
}

/// Data, graph and factorized Z-system shared by solves that differ only
/// in `γ` or the fusion mode.
#[derive(Debug, Clone)]
pub struct PreparedProblem<'a> {
    x: &'a DataMatrix,
    graph: &'a WeightedGraph,
    system: ZSystem,
    mu: (f64, f64),
}

impl<'a> PreparedProblem<'a> {
    pub fn new(x: &'a DataMatrix, graph: &'a WeightedGraph, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        if graph.n() != x.len() {
            return Err(Error::DimensionMismatch {
                context: "solve",
                expected: format!("graph over {} nodes", x.len()),
                actual: format!("{} nodes", graph.n()),
            });
        }
        let alpha = match config.alpha {
            Alpha::Fixed(a) => a,
            Alpha::Auto => choose_alpha(graph, config.mu1, config.mu2),
        };
        Ok(Self {
            x,
            graph,
            system: ZSystem::new(x, alpha)?,
            mu: (config.mu1, config.mu2),
        })
    }

    /// The resolved `α`.
    pub fn alpha(&self) -> f64 {
        self.system.alpha()
    }

    /// Runs the iteration from `Z = I`. `config` must carry the same `μ₁`,
    /// `μ₂` the problem was prepared with.
    pub fn solve(&self, config: &SolverConfig) -> Result<(DMatrix<f64>, SolveTrace)> {
        config.validate()?;
        if (config.mu1, config.mu2) != self.mu {
            return Err(Error::InvalidArgument {
                name: "mu1/mu2",
                reason: format!(
                    "problem was factorized for ({}, {}), config has ({}, {})",
                    self.mu.0, self.mu.1, config.mu1, config.mu2
                ),
            });
        }
        let graph = self.graph;
        let q = graph.incidence();
        let mut state = SolverState::initial(graph);
        let mut trace = SolveTrace::default();

        for iter in 1..=config.max_iter {
            let z_prev_norm = state.z.norm();
            let z = update_z(&state, graph, config, &self.system)?;
            let z_change = (&z - &state.z).norm() / z_prev_norm.max(1.0);
            state.z = z;
            state.v1 = update_v1(&state, graph, config);
            state.v2 = update_v2(&state, graph, config);
            let (lambda, psi) = update_duals(&state, graph, config);
            state.lambda = lambda;
            state.psi = psi;
            state.iter = iter;
            for (m, what) in [
                (&state.v1, "V1"),
                (&state.v2, "V2"),
                (&state.lambda, "Lambda"),
                (&state.psi, "Psi"),
            ] {
                ensure_finite(m, iter, what)?;
            }

            let (r1, r2) = residuals(&state, q);
            let record = TraceRecord {
                iter,
                objective: objective(self.x, &state.z, graph, config.gamma, config.mode)?,
                res_col: r1.norm(),
                res_row: r2.norm(),
                z_change,
            };
            if !record.objective.is_finite() {
                return Err(Error::Diverged {
                    iteration: iter,
                    what: "objective",
                });
            }
            trace.records.push(record);

            let primal_tol = config.tol_primal * state.z.norm().max(1.0);
            if record.res_col <= primal_tol
                && record.res_row <= primal_tol
                && record.z_change <= config.tol_change
            {
                trace.converged = true;
                break;
            }
        }
        Ok((state.z, trace))
    }
}

/// Solves the fusion model on `x` over `graph`.
pub fn solve_abdr(
    x: &DataMatrix,
    graph: &WeightedGraph,
    config: &SolverConfig,
) -> Result<(DMatrix<f64>, SolveTrace)> {
    PreparedProblem::new(x, graph, config)?.solve(config)
}
