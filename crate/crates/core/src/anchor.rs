//! Anchor-based variant: degree-importance anchor selection, anchor-row
//! high-order graphs, and the sample × anchor graph learner.

use std::time::Instant;

use rayon::prelude::*;

use crate::dataset::{knn_graph, FeatureMatrix, MultiViewDataset, SparseAdjacency};
use crate::error::{HmvcError, Result};
use crate::graph_filter::{filter_matrix, laplacian, normalize_adjacency};
use crate::highorder::{GraphOrder, ImplicitCosineGraph};
use crate::learner::{solve, HmvcConfig, LearnerState, ObjectiveTerms, ViewProblem};
use crate::linalg::Mat;

pub const DEFAULT_ETA: f64 = 2.0;
/// Neighbours used to build a degree graph for data without adjacency.
pub const DEFAULT_FEATURE_KNN: usize = 10;

/// Anchor node ids in selection order.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    indices: Vec<usize>,
    eta: f64,
}

impl AnchorSet {
    /// Validates distinct ids below `n`. Allows `m == n` (every node an anchor).
    pub fn new(indices: Vec<usize>, n: usize, eta: f64) -> Result<Self> {
        if indices.is_empty() {
            return Err(HmvcError::InvalidParameter("anchor set is empty".into()));
        }
        if indices.len() > n {
            return Err(HmvcError::MTooLarge { m: indices.len(), n });
        }
        let mut seen = vec![false; n];
        for &i in &indices {
            if i >= n {
                return Err(HmvcError::NodeIdOutOfRange { id: i, n });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(HmvcError::InvalidParameter(format!("anchor {i} repeated")));
            }
        }
        Ok(AnchorSet { indices, eta })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Diagonal of `Σᵥ D̂ᵛ`, the degrees of `Ãᵛ + (Ãᵛ)²` summed over views.
pub fn mixed_degrees(adjacencies: &[SparseAdjacency]) -> Result<Vec<f64>> {
    let n = adjacencies
        .first()
        .ok_or_else(|| HmvcError::InvalidParameter("anchor selection needs at least one graph".into()))?
        .n_nodes();
    let mut total = vec![0.0; n];
    for adj in adjacencies {
        if adj.n_nodes() != n {
            return Err(HmvcError::DimensionMismatch("graphs disagree on node count".into()));
        }
        let d = adj.degrees();
        // row sums of Ã² are Ã·(Ã·1)
        let d2 = adj.csr().mul_vec(&d);
        for i in 0..n {
            total[i] += d[i] + d2[i];
        }
    }
    Ok(total)
}

/// Greedy selection by relative importance `pᵢ = gᵢ / Σ_{j∉Y} gⱼ` with
/// `gᵢ = D̂ᵢᵢ^η / Σ_{j∉Y} D̂ⱼⱼ^η`; ties go to the lower node id.
pub fn select_anchors(adjacencies: &[SparseAdjacency], m: usize, eta: f64) -> Result<AnchorSet> {
    if !(eta > 1.0) || !eta.is_finite() {
        return Err(HmvcError::InvalidParameter(format!("eta must be > 1, got {eta}")));
    }
    if m == 0 {
        return Err(HmvcError::InvalidParameter("m must be >= 1".into()));
    }
    let degrees = mixed_degrees(adjacencies)?;
    let n = degrees.len();
    if m >= n {
        return Err(HmvcError::MTooLarge { m, n });
    }
    let top = degrees.iter().fold(0.0f64, |a, &b| a.max(b));
    let scale = if top > 0.0 { top } else { 1.0 };
    let sharpened: Vec<f64> = degrees.iter().map(|d| (d / scale).powf(eta)).collect();

    let mut remaining = vec![true; n];
    let mut indices = Vec::with_capacity(m);
    for _ in 0..m {
        let mass: f64 = (0..n).filter(|&j| remaining[j]).map(|j| sharpened[j]).sum();
        let g = |i: usize| if mass > 0.0 { sharpened[i] / mass } else { 1.0 };
        let g_mass: f64 = (0..n).filter(|&j| remaining[j]).map(g).sum();
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| remaining[i]) {
            let p = g(i) / g_mass;
            if best.is_none_or(|(_, bp)| p > bp) {
                best = Some((i, p));
            }
        }
        let (pick, _) = best.expect("m < n leaves candidates");
        remaining[pick] = false;
        indices.push(pick);
    }
    AnchorSet::new(indices, n, eta)
}

/// Degree graph for pure feature data: KNN over the row-normalized, concatenated views.
pub fn feature_degree_graph(dataset: &MultiViewDataset, k: usize) -> Result<SparseAdjacency> {
    let n = dataset.n_samples();
    let width: usize = dataset.views().iter().map(|v| v.n_cols()).sum();
    let mut joined = Mat::zeros(n, width);
    let mut offset = 0;
    for view in dataset.views() {
        let x = view.data();
        for i in 0..n {
            let norm = x.row(i).norm();
            if norm > 0.0 {
                for j in 0..x.ncols() {
                    joined[(i, offset + j)] = x[(i, j)] / norm;
                }
            }
        }
        offset += x.ncols();
    }
    knn_graph(&FeatureMatrix::new(joined, 0)?, k)
}

/// Something that can form `P · W1` for an N×N graph `W1`.
pub trait GraphProduct {
    fn n(&self) -> usize;
    fn right_multiply(&self, p: &Mat) -> Mat;
}

impl GraphProduct for Mat {
    fn n(&self) -> usize {
        self.nrows()
    }

    fn right_multiply(&self, p: &Mat) -> Mat {
        p * self
    }
}

impl GraphProduct for ImplicitCosineGraph {
    fn n(&self) -> usize {
        ImplicitCosineGraph::n(self)
    }

    fn right_multiply(&self, p: &Mat) -> Mat {
        ImplicitCosineGraph::right_multiply(self, p)
    }
}

fn check_slice(rows: &Mat, graph: &impl GraphProduct, n: usize) -> Result<()> {
    if rows.ncols() != graph.n() {
        return Err(HmvcError::DimensionMismatch(format!(
            "anchor rows have {} columns, graph has {} nodes",
            rows.ncols(),
            graph.n()
        )));
    }
    if n == 0 {
        return Err(HmvcError::InvalidParameter("graph order must be >= 1".into()));
    }
    Ok(())
}

/// Anchor rows of `W1^n` via `(Wⁿ)¹ = (Wⁿ⁻¹)¹ W1`, never forming `W1^n`.
pub fn anchor_power_rows(w1_anchor_rows: &Mat, graph: &impl GraphProduct, n: usize) -> Result<Mat> {
    check_slice(w1_anchor_rows, graph, n)?;
    let mut rows = w1_anchor_rows.clone();
    for _ in 1..n {
        rows = graph.right_multiply(&rows);
    }
    Ok(rows)
}

/// Anchor rows of `W1 + W1² + … + W1^n`.
pub fn anchor_highorder(w1_anchor_rows: &Mat, graph: &impl GraphProduct, n: usize) -> Result<Mat> {
    check_slice(w1_anchor_rows, graph, n)?;
    let mut rows = w1_anchor_rows.clone();
    let mut sum = rows.clone();
    for _ in 1..n {
        rows = graph.right_multiply(&rows);
        sum += &rows;
    }
    Ok(sum)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorParams {
    pub m: usize,
    pub eta: f64,
    /// KNN size for degree graphs of pure feature data.
    pub knn: usize,
}

impl Default for AnchorParams {
    fn default() -> Self {
        AnchorParams {
            m: 100,
            eta: DEFAULT_ETA,
            knn: DEFAULT_FEATURE_KNN,
        }
    }
}

/// Learned sample × anchor graphs.
#[derive(Debug, Clone)]
pub struct AnchorGraph {
    pub anchors: AnchorSet,
    /// Per-view `Zᵛ`, N×m, columns in anchor order.
    pub view_graphs: Vec<Mat>,
    /// Consensus `Z`, N×m.
    pub consensus: Mat,
    pub gamma: Vec<f64>,
    pub objective_trace: Vec<ObjectiveTerms>,
    pub iterations: usize,
    pub converged: bool,
    pub fit_seconds: f64,
}

impl AnchorGraph {
    fn from_state(anchors: AnchorSet, state: LearnerState, fit_seconds: f64) -> Self {
        AnchorGraph {
            anchors,
            view_graphs: state.view_graphs.iter().map(|z| z.transpose()).collect(),
            consensus: state.consensus.transpose(),
            gamma: state.gamma,
            objective_trace: state.objective_trace,
            iterations: state.iterations,
            converged: state.converged,
            fit_seconds,
        }
    }
}

/// Builds the per-view anchor problems: filtered features, anchor rows of
/// the features, and anchor rows of the mixed graph.
pub fn anchor_problems(dataset: &MultiViewDataset, config: &HmvcConfig, anchors: &AnchorSet) -> Result<Vec<ViewProblem>> {
    let n_order = match config.similarity_order {
        GraphOrder::Finite(n) => n,
        GraphOrder::Infinite => {
            return Err(HmvcError::InvalidParameter(
                "the anchor model supports finite similarity orders only".into(),
            ))
        }
    };
    let inds = anchors.indices();
    (0..dataset.n_views())
        .into_par_iter()
        .map(|v| {
            let x = dataset.view(v);
            let w1 = ImplicitCosineGraph::new(x)?;
            let filtered = match dataset.adjacency_for(v) {
                Some(adj) => {
                    let lap = laplacian(&normalize_adjacency(adj, true)?)?;
                    filter_matrix(x.data(), &lap, config.filter_order)?
                }
                None => {
                    let mut h = x.data().clone();
                    for _ in 0..config.filter_order {
                        let wh = w1.right_multiply(&h.transpose()).transpose();
                        h += wh;
                        h *= 0.5;
                    }
                    h
                }
            };
            let basis = filtered.select_rows(inds);
            let prior = anchor_highorder(&w1.rows(inds), &w1, n_order)?;
            ViewProblem::new(basis, filtered, prior)
        })
        .collect()
}

/// Anchors chosen from the dataset's graphs, or from a feature KNN graph when it has none.
pub fn choose_anchors(dataset: &MultiViewDataset, params: &AnchorParams) -> Result<AnchorSet> {
    if dataset.adjacencies().is_empty() {
        let knn = feature_degree_graph(dataset, params.knn)?;
        select_anchors(&[knn], params.m, params.eta)
    } else {
        select_anchors(dataset.adjacencies(), params.m, params.eta)
    }
}

pub fn fit_anchor(dataset: &MultiViewDataset, config: &HmvcConfig, params: &AnchorParams) -> Result<AnchorGraph> {
    config.validate()?;
    let start = Instant::now();
    let anchors = choose_anchors(dataset, params)?;
    fit_with_anchors(dataset, config, anchors, start)
}

/// Runs the learner for a given anchor set (which may contain every node).
pub fn fit_anchor_with(dataset: &MultiViewDataset, config: &HmvcConfig, anchors: AnchorSet) -> Result<AnchorGraph> {
    config.validate()?;
    fit_with_anchors(dataset, config, anchors, Instant::now())
}

fn fit_with_anchors(dataset: &MultiViewDataset, config: &HmvcConfig, anchors: AnchorSet, start: Instant) -> Result<AnchorGraph> {
    let problems = anchor_problems(dataset, config, &anchors)?;
    let state = solve(&problems, config)?;
    Ok(AnchorGraph::from_state(anchors, state, start.elapsed().as_secs_f64()))
}
