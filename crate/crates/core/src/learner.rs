//! Multi-view graph learning by alternating minimization.
//!
//! The objective over per-view graphs `Sᵛ`, consensus `S` and simplex weights `γ` is
//!
//! ```text
//! Σᵥ γᵛ (‖Hᵛᵀ − Bᵛᵀ Sᵛ‖² + α‖Sᵛ − Fᵛ‖²) + β‖S − Σᵥ γᵛ Sᵛ‖² + μ‖S‖²
//! ```
//!
//! where `Bᵛ` is the dictionary (all filtered samples for the full model, the
//! anchor rows for the anchor model) and `Fᵛ` the mixed high-order graph
//! restricted to the dictionary rows. Graphs are stored dictionary × sample.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::MultiViewDataset;
use crate::error::{HmvcError, Result};
use crate::graph_filter::{
    filter_features, laplacian, normalize_adjacency, FilteredFeatures, NormalizationMode,
    NormalizedGraph,
};
use crate::highorder::{first_order_graph, mixed_graph, GraphOrder, MixedHighOrderGraph, SimilarityGraph};
use crate::linalg::{frob2, frob_inner, solve_spd_shifted, Mat};
use crate::qp::{qp_objective, solve_simplex_qp, DEFAULT_KKT_TOL};

/// Lower bound applied to `γᵛ` inside the per-view solve.
pub const GAMMA_FLOOR: f64 = 1e-8;

/// Slack allowed when checking that the objective did not increase, relative to its magnitude.
pub const MONOTONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmvcConfig {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub filter_order: usize,
    pub similarity_order: GraphOrder,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub normalization: NormalizationMode,
}

impl Default for HmvcConfig {
    fn default() -> Self {
        HmvcConfig {
            alpha: 1.0,
            beta: 1.0,
            mu: 1.0,
            filter_order: 2,
            similarity_order: GraphOrder::Finite(2),
            max_iters: 50,
            rel_tol: 1e-6,
            seed: 42,
            normalization: NormalizationMode::Symmetric,
        }
    }
}

impl HmvcConfig {
    /// Defaults for attributed-graph data use third-order similarity.
    pub fn for_graph_data() -> Self {
        HmvcConfig {
            similarity_order: GraphOrder::Finite(3),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("mu", self.mu)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(HmvcError::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.max_iters == 0 {
            return Err(HmvcError::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(HmvcError::InvalidParameter("rel_tol must be >= 0".into()));
        }
        if self.similarity_order == GraphOrder::Finite(0) {
            return Err(HmvcError::InvalidParameter("similarity order must be >= 1".into()));
        }
        Ok(())
    }
}

/// One view of the learning problem.
#[derive(Debug, Clone)]
pub struct ViewProblem {
    /// Dictionary rows `B` (m×d).
    basis: Mat,
    /// Samples to reconstruct `H` (N×d).
    target: Mat,
    /// Anchoring graph `F` (m×N).
    prior: Mat,
    gram: Mat,
    cross: Mat,
}

impl ViewProblem {
    pub fn new(basis: Mat, target: Mat, prior: Mat) -> Result<Self> {
        if basis.ncols() != target.ncols() || prior.shape() != (basis.nrows(), target.nrows()) {
            return Err(HmvcError::DimensionMismatch(format!(
                "basis {:?}, target {:?}, prior {:?}",
                basis.shape(),
                target.shape(),
                prior.shape()
            )));
        }
        let gram = &basis * basis.transpose();
        let cross = &basis * target.transpose();
        Ok(ViewProblem {
            basis,
            target,
            prior,
            gram,
            cross,
        })
    }

    /// Self-expression over all samples: the dictionary is `H` itself.
    pub fn self_expressive(filtered: &Mat, prior: Mat) -> Result<Self> {
        Self::new(filtered.clone(), filtered.clone(), prior)
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn target(&self) -> &Mat {
        &self.target
    }

    pub fn prior(&self) -> &Mat {
        &self.prior
    }

    pub fn gram(&self) -> &Mat {
        &self.gram
    }

    pub fn dictionary_size(&self) -> usize {
        self.basis.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.target.nrows()
    }

    /// `‖Hᵀ − Bᵀ S‖²`
    pub fn reconstruction_error(&self, graph: &Mat) -> f64 {
        frob2(&(self.target.transpose() - self.basis.transpose() * graph))
    }

    /// `‖S − F‖²`
    pub fn prior_gap(&self, graph: &Mat) -> f64 {
        frob2(&(graph - &self.prior))
    }

    /// `Mᵛ = ‖Hᵀ − BᵀS‖² + α‖S − F‖²`
    pub fn view_loss(&self, graph: &Mat, alpha: f64) -> f64 {
        self.reconstruction_error(graph) + alpha * self.prior_gap(graph)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTerms {
    pub total: f64,
    /// `Σ γᵛ ‖Hᵀ − BᵀSᵛ‖²`
    pub reconstruction: f64,
    /// `Σ γᵛ α‖Sᵛ − Fᵛ‖²`
    pub prior: f64,
    /// `β‖S − Σ γᵛSᵛ‖²`
    pub fusion: f64,
    /// `μ‖S‖²`
    pub regularization: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub view_graphs: Vec<Mat>,
    pub consensus: Mat,
    pub gamma: Vec<f64>,
    pub objective_trace: Vec<ObjectiveTerms>,
    pub iterations: usize,
    pub converged: bool,
}

impl LearnerState {
    pub fn n_views(&self) -> usize {
        self.view_graphs.len()
    }

    pub fn fused(&self) -> Mat {
        weighted_sum(&self.view_graphs, &self.gamma, None)
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.objective_trace.last().map(|t| t.total)
    }
}

fn weighted_sum(graphs: &[Mat], gamma: &[f64], skip: Option<usize>) -> Mat {
    let mut out = Mat::zeros(graphs[0].nrows(), graphs[0].ncols());
    for (i, (g, &w)) in graphs.iter().zip(gamma).enumerate() {
        if Some(i) != skip {
            out += g * w;
        }
    }
    out
}

fn check_problems(problems: &[ViewProblem]) -> Result<()> {
    let first = problems
        .first()
        .ok_or_else(|| HmvcError::InvalidParameter("at least one view is required".into()))?;
    for p in problems {
        if p.n_samples() != first.n_samples() || p.dictionary_size() != first.dictionary_size() {
            return Err(HmvcError::DimensionMismatch(
                "views disagree on sample or dictionary count".into(),
            ));
        }
    }
    Ok(())
}

/// Ridge self-expression per view, `(BBᵀ + αI)⁻¹ BHᵀ`, averaged into the consensus; `γ = 1/V`.
pub fn init_consensus(problems: &[ViewProblem], alpha: f64) -> Result<LearnerState> {
    check_problems(problems)?;
    let view_graphs = problems
        .iter()
        .map(|p| solve_spd_shifted(&p.gram, alpha, &p.cross))
        .collect::<Result<Vec<_>>>()?;
    let v = problems.len();
    let gamma = vec![1.0 / v as f64; v];
    let consensus = weighted_sum(&view_graphs, &gamma, None);
    Ok(LearnerState {
        view_graphs,
        consensus,
        gamma,
        objective_trace: Vec::new(),
        iterations: 0,
        converged: false,
    })
}

/// Exact minimizer of the objective over `Sᵛ` with everything else fixed:
/// `(BBᵀ + (α + βγᵛ)I) Sᵛ = BHᵀ + αF + β(S − Σ_{i≠v} γⁱSⁱ)`.
pub fn update_view_graph(v: usize, state: &LearnerState, problem: &ViewProblem, config: &HmvcConfig) -> Result<Mat> {
    let gamma_v = state.gamma[v].max(GAMMA_FLOOR);
    let others = weighted_sum(&state.view_graphs, &state.gamma, Some(v));
    let rhs = &problem.cross + &problem.prior * config.alpha + (&state.consensus - others) * config.beta;
    solve_spd_shifted(&problem.gram, config.alpha + config.beta * gamma_v, &rhs)
}

/// `S = β Σ γᵛ Sᵛ / (β + μ)`.
pub fn update_consensus(state: &LearnerState, config: &HmvcConfig) -> Mat {
    state.fused() * (config.beta / (config.beta + config.mu))
}

/// The restriction of the objective to `γ` as `½γᵀPγ + qᵀγ` (constant `β‖S‖² + μ‖S‖²` dropped).
pub fn view_weight_qp(state: &LearnerState, problems: &[ViewProblem], config: &HmvcConfig) -> (Mat, Vec<f64>) {
    let v = state.n_views();
    let mut p = Mat::zeros(v, v);
    for i in 0..v {
        for j in i..v {
            let value = 2.0 * config.beta * frob_inner(&state.view_graphs[i], &state.view_graphs[j]);
            p[(i, j)] = value;
            p[(j, i)] = value;
        }
    }
    let q = (0..v)
        .map(|i| {
            problems[i].view_loss(&state.view_graphs[i], config.alpha)
                - 2.0 * config.beta * frob_inner(&state.consensus, &state.view_graphs[i])
        })
        .collect();
    (p, q)
}

/// Optimal simplex weights for fixed graphs. Never returns weights worse than the current ones.
///
/// The solver starts from uniform weights, so when the optimum is not unique
/// (e.g. identical views) the symmetric solution is returned.
pub fn update_view_weights(state: &LearnerState, problems: &[ViewProblem], config: &HmvcConfig) -> Result<Vec<f64>> {
    let v = state.n_views();
    if v == 1 {
        return Ok(vec![1.0]);
    }
    let (p, q) = view_weight_qp(state, problems, config);
    let solution = solve_simplex_qp(&p, &q, &vec![1.0 / v as f64; v], DEFAULT_KKT_TOL)?;
    if solution.objective <= qp_objective(&p, &q, &state.gamma) {
        Ok(solution.x)
    } else {
        Ok(state.gamma.clone())
    }
}

pub fn objective(state: &LearnerState, problems: &[ViewProblem], config: &HmvcConfig) -> ObjectiveTerms {
    let mut reconstruction = 0.0;
    let mut prior = 0.0;
    for ((p, g), &w) in problems.iter().zip(&state.view_graphs).zip(&state.gamma) {
        reconstruction += w * p.reconstruction_error(g);
        prior += w * config.alpha * p.prior_gap(g);
    }
    let fusion = config.beta * frob2(&(&state.consensus - state.fused()));
    let regularization = config.mu * frob2(&state.consensus);
    ObjectiveTerms {
        total: reconstruction + prior + fusion + regularization,
        reconstruction,
        prior,
        fusion,
        regularization,
    }
}

/// Runs the alternating updates from the ridge initialization until the
/// relative objective change drops below `rel_tol` or `max_iters` is hit.
pub fn solve(problems: &[ViewProblem], config: &HmvcConfig) -> Result<LearnerState> {
    let mut state = init_consensus(problems, config.alpha)?;
    state.objective_trace.push(objective(&state, problems, config));
    for iter in 1..=config.max_iters {
        for v in 0..problems.len() {
            let updated = update_view_graph(v, &state, &problems[v], config)?;
            state.view_graphs[v] = updated;
        }
        state.consensus = update_consensus(&state, config);
        state.gamma = update_view_weights(&state, problems, config)?;
        let terms = objective(&state, problems, config);
        let prev = state.objective_trace.last().expect("trace seeded").total;
        state.objective_trace.push(terms);
        state.iterations = iter;
        if terms.total > prev + MONOTONE_TOL * prev.abs().max(1.0) {
            log::warn!("objective increased at iteration {iter}: {prev} -> {}", terms.total);
        }
        let change = (prev - terms.total).abs() / prev.abs().max(f64::MIN_POSITIVE);
        log::debug!("iteration {iter}: objective {:.6e}, relative change {change:.3e}", terms.total);
        if change < config.rel_tol {
            state.converged = true;
            break;
        }
    }
    Ok(state)
}

/// Per-view inputs derived from the data before optimization.
#[derive(Debug, Clone)]
pub struct PreparedView {
    pub filtered: FilteredFeatures,
    pub first_order: SimilarityGraph,
    pub mixed: MixedHighOrderGraph,
}

/// The graph used for filtering: `Ã + I` normalized for graph data, the
/// symmetric-normalized first-order similarity otherwise.
pub fn filtering_graph(dataset: &MultiViewDataset, v: usize, first_order_sym: &SimilarityGraph) -> Result<NormalizedGraph> {
    match dataset.adjacency_for(v) {
        Some(adj) => normalize_adjacency(adj, true),
        None => Ok(NormalizedGraph::from_dense(
            first_order_sym.matrix().clone(),
            NormalizationMode::Symmetric,
            false,
        )),
    }
}

/// Filters every view and builds its mixed high-order graph.
pub fn prepare_views(dataset: &MultiViewDataset, config: &HmvcConfig) -> Result<Vec<PreparedView>> {
    (0..dataset.n_views())
        .into_par_iter()
        .map(|v| {
            let x = dataset.view(v);
            let sym = first_order_graph(x, NormalizationMode::Symmetric)?;
            let graph = filtering_graph(dataset, v, &sym)?;
            let filtered = filter_features(x, &laplacian(&graph)?, config.filter_order)?;
            let first_order = match config.normalization {
                NormalizationMode::Symmetric => sym,
                mode => first_order_graph(x, mode)?,
            };
            let mixed = mixed_graph(&first_order, config.similarity_order)?;
            Ok(PreparedView {
                filtered,
                first_order,
                mixed,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct HmvcFit {
    pub state: LearnerState,
    pub fit_seconds: f64,
}

/// Filtering, mixed graphs, then the alternating solver.
pub fn fit(dataset: &MultiViewDataset, config: &HmvcConfig) -> Result<HmvcFit> {
    config.validate()?;
    let start = Instant::now();
    let prepared = prepare_views(dataset, config)?;
    let problems = prepared
        .into_iter()
        .map(|p| ViewProblem::self_expressive(p.filtered.matrix(), p.mixed.into_matrix()))
        .collect::<Result<Vec<_>>>()?;
    let state = solve(&problems, config)?;
    Ok(HmvcFit {
        state,
        fit_seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn small_problem(n: usize, d: usize, seed: u64) -> ViewProblem {
        let h = Mat::from_fn(n, d, |i, j| ((i * 7 + j * 3 + seed as usize) % 11) as f64 / 5.0 - 1.0);
        let f = Mat::from_fn(n, n, |i, j| 1.0 / (1.0 + (i as f64 - j as f64).abs()));
        ViewProblem::self_expressive(&h, f).unwrap()
    }

    #[test]
    fn zero_features_give_zero_consensus() {
        let p = ViewProblem::self_expressive(&Mat::zeros(4, 2), Mat::zeros(4, 4)).unwrap();
        let state = init_consensus(&[p], 1.0).unwrap();
        assert_eq!(state.consensus, Mat::zeros(4, 4));
        assert_eq!(state.gamma, vec![1.0]);
    }

    #[test]
    fn ridge_limit() {
        let state = init_consensus(&[small_problem(6, 3, 1), small_problem(6, 3, 2)], 1e12).unwrap();
        assert!(state.consensus.amax() < 1e-6);
        assert_eq!(state.gamma, vec![0.5, 0.5]);
    }

    #[test]
    fn consensus_boundaries() {
        let p = small_problem(5, 2, 0);
        let mut state = init_consensus(&[p], 1.0).unwrap();
        let cfg = HmvcConfig {
            beta: 2.0,
            mu: 2.0,
            ..HmvcConfig::default()
        };
        let half = update_consensus(&state, &cfg);
        assert!(max_abs_diff(&half, &(&state.view_graphs[0] * 0.5)) < 1e-15);
        state.gamma = vec![1.0];
        let no_mu = HmvcConfig { mu: 0.0, ..cfg };
        assert!(max_abs_diff(&update_consensus(&state, &no_mu), &state.view_graphs[0]) < 1e-15);
    }

    #[test]
    fn fusion_term_vanishes_on_exact_combination() {
        let problems = vec![small_problem(5, 2, 0), small_problem(5, 2, 3)];
        let mut state = init_consensus(&problems, 1.0).unwrap();
        state.consensus = state.fused();
        let terms = objective(&state, &problems, &HmvcConfig::default());
        assert!(terms.fusion.abs() < 1e-20);
    }

    #[test]
    fn config_validation() {
        assert!(HmvcConfig::default().validate().is_ok());
        assert!(HmvcConfig { alpha: 0.0, ..HmvcConfig::default() }.validate().is_err());
        assert!(HmvcConfig { mu: -1.0, ..HmvcConfig::default() }.validate().is_err());
        assert!(HmvcConfig { max_iters: 0, ..HmvcConfig::default() }.validate().is_err());
        assert_eq!(HmvcConfig::for_graph_data().similarity_order, GraphOrder::Finite(3));
    }

    #[test]
    fn mismatched_views_rejected() {
        assert!(init_consensus(&[small_problem(5, 2, 0), small_problem(6, 2, 0)], 1.0).is_err());
        assert!(init_consensus(&[], 1.0).is_err());
    }
}
