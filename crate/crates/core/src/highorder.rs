//! First-order cosine similarity graphs, their powers, the infinity-order
//! limit and the mixed graph `f(W)` built from them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::error::{HmvcError, Result};
use crate::graph_filter::NormalizationMode;
use crate::linalg::{sym_eigen_desc, Mat};

/// Default threshold for treating an eigenvalue as 1.
pub const UNIT_EIGENVALUE_TOL: f64 = 1e-8;

/// Entries smaller than this in the previous order are skipped by [`order_change_rate`].
pub const CHANGE_RATE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GraphOrder {
    Finite(usize),
    Infinite,
}

impl fmt::Display for GraphOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphOrder::Finite(n) => write!(f, "{n}"),
            GraphOrder::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for GraphOrder {
    type Err = HmvcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "infinite" => Ok(GraphOrder::Infinite),
            other => match other.parse::<usize>() {
                Ok(n) if n >= 1 => Ok(GraphOrder::Finite(n)),
                _ => Err(HmvcError::InvalidParameter(format!(
                    "graph order must be a positive integer or 'inf', got {s:?}"
                ))),
            },
        }
    }
}

/// A similarity graph of some order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    matrix: Mat,
    order: GraphOrder,
    normalization: Option<NormalizationMode>,
    unit_rank: Option<usize>,
    zero_rows: Vec<usize>,
}

impl SimilarityGraph {
    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat {
        self.matrix
    }

    pub fn order(&self) -> GraphOrder {
        self.order
    }

    /// `None` for the raw cosine graph.
    pub fn normalization(&self) -> Option<NormalizationMode> {
        self.normalization
    }

    /// Number of unit eigenvalues, set on infinity-order graphs.
    pub fn unit_rank(&self) -> Option<usize> {
        self.unit_rank
    }

    pub fn zero_rows(&self) -> &[usize] {
        &self.zero_rows
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// Wraps an arbitrary normalized first-order matrix (for graphs built elsewhere, e.g. KNN).
    pub fn from_normalized(matrix: Mat, mode: NormalizationMode) -> Self {
        SimilarityGraph {
            matrix,
            order: GraphOrder::Finite(1),
            normalization: Some(mode),
            unit_rank: None,
            zero_rows: Vec::new(),
        }
    }

    /// Wraps a raw (unnormalized) nonnegative first-order matrix.
    pub fn from_raw(matrix: Mat) -> Self {
        SimilarityGraph {
            matrix,
            order: GraphOrder::Finite(1),
            normalization: None,
            unit_rank: None,
            zero_rows: Vec::new(),
        }
    }
}

fn unit_rows(x: &Mat) -> (Mat, Vec<usize>) {
    let mut out = x.clone();
    let mut zero = Vec::new();
    for r in 0..x.nrows() {
        let norm = x.row(r).norm();
        if norm > 0.0 {
            out.row_mut(r).scale_mut(1.0 / norm);
        } else {
            zero.push(r);
        }
    }
    (out, zero)
}

/// `(cos⟨x_i, x_j⟩ + 1) / 2` off the diagonal, 0 on it.
///
/// Zero rows have cosine 0 with everything, giving entries of 1/2.
pub fn cosine_similarity_graph(x: &FeatureMatrix) -> Result<SimilarityGraph> {
    let n = x.n_rows();
    if n < 2 {
        return Err(HmvcError::InvalidParameter(
            "similarity graph needs at least two samples".into(),
        ));
    }
    let (unit, zero_rows) = unit_rows(x.data());
    if !zero_rows.is_empty() {
        log::warn!(
            "view {}: {} zero rows treated as orthogonal to all samples",
            x.view_id(),
            zero_rows.len()
        );
    }
    let gram = &unit * unit.transpose();
    let matrix = Mat::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            (gram[(i, j)].clamp(-1.0, 1.0) + 1.0) * 0.5
        }
    });
    Ok(SimilarityGraph {
        matrix,
        order: GraphOrder::Finite(1),
        normalization: None,
        unit_rank: None,
        zero_rows,
    })
}

/// Normalizes a raw first-order graph.
pub fn normalize_similarity(raw: &SimilarityGraph, mode: NormalizationMode) -> Result<SimilarityGraph> {
    if raw.order != GraphOrder::Finite(1) || raw.normalization.is_some() {
        return Err(HmvcError::InvalidParameter(
            "normalization expects a raw first-order graph".into(),
        ));
    }
    let w = &raw.matrix;
    let n = w.nrows();
    let degrees: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    if let Some(i) = degrees.iter().position(|&d| d <= 0.0) {
        return Err(HmvcError::IsolatedNode(i));
    }
    let matrix = match mode {
        NormalizationMode::Symmetric => {
            let s: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
            Mat::from_fn(n, n, |i, j| w[(i, j)] * s[i] * s[j])
        }
        NormalizationMode::RowStochastic => Mat::from_fn(n, n, |i, j| w[(i, j)] / degrees[i]),
    };
    Ok(SimilarityGraph {
        matrix,
        order: GraphOrder::Finite(1),
        normalization: Some(mode),
        unit_rank: None,
        zero_rows: raw.zero_rows.clone(),
    })
}

/// Cosine graph followed by normalization.
pub fn first_order_graph(x: &FeatureMatrix, mode: NormalizationMode) -> Result<SimilarityGraph> {
    normalize_similarity(&cosine_similarity_graph(x)?, mode)
}

fn require_first_order(w1: &SimilarityGraph) -> Result<()> {
    if w1.order != GraphOrder::Finite(1) {
        return Err(HmvcError::InvalidParameter(format!(
            "expected a first-order graph, got order {}",
            w1.order
        )));
    }
    Ok(())
}

/// `W1^n` by repeated right multiplication.
pub fn power_graph(w1: &SimilarityGraph, n: usize) -> Result<SimilarityGraph> {
    require_first_order(w1)?;
    if n == 0 {
        return Err(HmvcError::InvalidParameter("graph order must be >= 1".into()));
    }
    let mut power = w1.matrix.clone();
    for _ in 1..n {
        power = &power * &w1.matrix;
    }
    Ok(SimilarityGraph {
        matrix: power,
        order: GraphOrder::Finite(n),
        ..w1.clone()
    })
}

/// Limit of `W1^n`: the projector `Σ u_j u_jᵀ` onto eigenvectors with eigenvalue ≈ 1.
pub fn infinity_graph(w1: &SimilarityGraph, unit_eigenvalue_tol: f64) -> Result<SimilarityGraph> {
    require_first_order(w1)?;
    if w1.normalization != Some(NormalizationMode::Symmetric) {
        return Err(HmvcError::InvalidParameter(
            "infinity-order graph needs a symmetric-normalized first-order graph".into(),
        ));
    }
    let (values, vectors) = sym_eigen_desc(&w1.matrix);
    let r = values.iter().take_while(|&&l| l > 1.0 - unit_eigenvalue_tol).count();
    if r == 0 {
        return Err(HmvcError::NoUnitEigenvalue);
    }
    let basis = vectors.columns(0, r);
    let projector = basis * basis.transpose();
    Ok(SimilarityGraph {
        matrix: projector,
        order: GraphOrder::Infinite,
        normalization: w1.normalization,
        unit_rank: Some(r),
        zero_rows: w1.zero_rows.clone(),
    })
}

/// Sum of similarity graphs over several orders.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedHighOrderGraph {
    matrix: Mat,
    terms: Vec<GraphOrder>,
    rank_r: Option<usize>,
}

impl MixedHighOrderGraph {
    pub fn new(matrix: Mat, terms: Vec<GraphOrder>, rank_r: Option<usize>) -> Self {
        MixedHighOrderGraph {
            matrix,
            terms,
            rank_r,
        }
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat {
        self.matrix
    }

    pub fn terms(&self) -> &[GraphOrder] {
        &self.terms
    }

    pub fn rank_r(&self) -> Option<usize> {
        self.rank_r
    }
}

/// `W1 + … + W1^n` for finite `n`, or `W1 + W∞` for the infinite order.
pub fn mixed_graph(w1: &SimilarityGraph, order: GraphOrder) -> Result<MixedHighOrderGraph> {
    mixed_graph_with_tol(w1, order, UNIT_EIGENVALUE_TOL)
}

pub fn mixed_graph_with_tol(
    w1: &SimilarityGraph,
    order: GraphOrder,
    unit_eigenvalue_tol: f64,
) -> Result<MixedHighOrderGraph> {
    require_first_order(w1)?;
    match order {
        GraphOrder::Finite(0) => Err(HmvcError::InvalidParameter("graph order must be >= 1".into())),
        GraphOrder::Finite(n) => {
            let mut power = w1.matrix.clone();
            let mut sum = power.clone();
            for _ in 1..n {
                power = &power * &w1.matrix;
                sum += &power;
            }
            Ok(MixedHighOrderGraph {
                matrix: sum,
                terms: (1..=n).map(GraphOrder::Finite).collect(),
                rank_r: None,
            })
        }
        GraphOrder::Infinite => {
            let limit = infinity_graph(w1, unit_eigenvalue_tol)?;
            Ok(MixedHighOrderGraph {
                matrix: &w1.matrix + limit.matrix(),
                terms: vec![GraphOrder::Finite(1), GraphOrder::Infinite],
                rank_r: limit.unit_rank,
            })
        }
    }
}

/// Mean relative entrywise change between consecutive orders.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangeRate {
    pub order: GraphOrder,
    pub rate: f64,
    pub skipped: usize,
}

fn change_rate(prev: &Mat, next: &Mat, order: GraphOrder) -> ChangeRate {
    let mut total = 0.0;
    let mut count = 0usize;
    let mut skipped = 0usize;
    for (p, q) in prev.iter().zip(next.iter()) {
        if p.abs() < CHANGE_RATE_FLOOR {
            skipped += 1;
            continue;
        }
        total += (q - p).abs() / p.abs();
        count += 1;
    }
    ChangeRate {
        order,
        rate: if count == 0 { 0.0 } else { total / count as f64 },
        skipped,
    }
}

/// Rates for orders `2..=n_max` and the final jump from `W^{n_max}` to `W∞`.
pub fn order_change_rate(w1: &SimilarityGraph, n_max: usize) -> Result<Vec<ChangeRate>> {
    require_first_order(w1)?;
    if n_max < 2 {
        return Err(HmvcError::InvalidParameter("n_max must be >= 2".into()));
    }
    let mut rates = Vec::with_capacity(n_max);
    let mut prev = w1.matrix.clone();
    for n in 2..=n_max {
        let next = &prev * &w1.matrix;
        rates.push(change_rate(&prev, &next, GraphOrder::Finite(n)));
        prev = next;
    }
    let limit = infinity_graph(w1, UNIT_EIGENVALUE_TOL)?;
    rates.push(change_rate(&prev, limit.matrix(), GraphOrder::Infinite));
    Ok(rates)
}

/// Symmetric-normalized cosine graph applied implicitly.
///
/// `W̃ = ½(X̂X̂ᵀ + 11ᵀ) − diag(δ)` with unit rows `X̂`, so products with
/// `W1 = D^{-1/2} W̃ D^{-1/2}` cost `O(m·N·d)` and need `O(N·d)` memory.
#[derive(Debug, Clone)]
pub struct ImplicitCosineGraph {
    unit: Mat,
    diag: Vec<f64>,
    inv_sqrt_degree: Vec<f64>,
}

impl ImplicitCosineGraph {
    pub fn new(x: &FeatureMatrix) -> Result<Self> {
        let n = x.n_rows();
        if n < 2 {
            return Err(HmvcError::InvalidParameter(
                "similarity graph needs at least two samples".into(),
            ));
        }
        let (unit, zero_rows) = unit_rows(x.data());
        let mut diag = vec![1.0; n];
        for &r in &zero_rows {
            diag[r] = 0.5;
        }
        let col_sums = unit.row_sum();
        let projected = &unit * col_sums.transpose();
        let mut inv_sqrt_degree = Vec::with_capacity(n);
        for i in 0..n {
            let d = 0.5 * (projected[i] + n as f64) - diag[i];
            if d <= 0.0 {
                return Err(HmvcError::IsolatedNode(i));
            }
            inv_sqrt_degree.push(1.0 / d.sqrt());
        }
        Ok(ImplicitCosineGraph {
            unit,
            diag,
            inv_sqrt_degree,
        })
    }

    pub fn n(&self) -> usize {
        self.unit.nrows()
    }

    /// Rows `rows` of `W1`.
    pub fn rows(&self, rows: &[usize]) -> Mat {
        let n = self.n();
        Mat::from_fn(rows.len(), n, |a, j| {
            let i = rows[a];
            if i == j {
                return 0.0;
            }
            let cos = self.unit.row(i).dot(&self.unit.row(j)).clamp(-1.0, 1.0);
            (cos + 1.0) * 0.5 * self.inv_sqrt_degree[i] * self.inv_sqrt_degree[j]
        })
    }

    /// `p · W1` (equivalently `p · W1ᵀ`, the graph is symmetric).
    pub fn right_multiply(&self, p: &Mat) -> Mat {
        assert_eq!(p.ncols(), self.n(), "implicit graph product shape mismatch");
        let mut q = p.clone();
        for (j, mut col) in q.column_iter_mut().enumerate() {
            col *= self.inv_sqrt_degree[j];
        }
        let row_totals = q.column_sum();
        let mut out = (&q * &self.unit) * self.unit.transpose();
        out *= 0.5;
        for (j, mut col) in out.column_iter_mut().enumerate() {
            for (a, v) in col.iter_mut().enumerate() {
                *v += 0.5 * row_totals[a] - q[(a, j)] * self.diag[j];
            }
            col *= self.inv_sqrt_degree[j];
        }
        out
    }

    pub fn to_dense(&self) -> Mat {
        let all: Vec<usize> = (0..self.n()).collect();
        self.rows(&all)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn fm(rows: usize, cols: usize, data: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(Mat::from_row_slice(rows, cols, data), 0).unwrap()
    }

    #[test]
    fn cosine_extremes() {
        let x = fm(3, 2, &[1.0, 2.0, 1.0, 2.0, -1.0, -2.0]);
        let w = cosine_similarity_graph(&x).unwrap();
        assert!((w.matrix()[(0, 1)] - 1.0).abs() < 1e-15);
        assert!(w.matrix()[(0, 2)].abs() < 1e-15);
        assert_eq!(w.matrix()[(1, 1)], 0.0);
        assert!(cosine_similarity_graph(&fm(1, 2, &[1.0, 1.0])).is_err());
    }

    #[test]
    fn zero_row_gets_half() {
        let x = fm(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let w = cosine_similarity_graph(&x).unwrap();
        assert_eq!(w.zero_rows(), &[1]);
        assert_eq!(w.matrix()[(0, 1)], 0.5);
        assert_eq!(w.matrix()[(1, 2)], 0.5);
    }

    #[test]
    fn two_node_symmetric_normalization() {
        let raw = SimilarityGraph::from_raw(Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let w = normalize_similarity(&raw, NormalizationMode::Symmetric).unwrap();
        assert_eq!(w.matrix(), raw.matrix());
    }

    #[test]
    fn antipodal_pair_is_isolated() {
        let x = fm(2, 1, &[1.0, -1.0]);
        let raw = cosine_similarity_graph(&x).unwrap();
        assert!(matches!(
            normalize_similarity(&raw, NormalizationMode::Symmetric),
            Err(HmvcError::IsolatedNode(0))
        ));
    }

    #[test]
    fn power_one_unchanged() {
        let x = fm(3, 2, &[1.0, 0.2, 0.3, 1.0, 0.5, 0.5]);
        let w1 = first_order_graph(&x, NormalizationMode::Symmetric).unwrap();
        let p = power_graph(&w1, 1).unwrap();
        assert_eq!(p.matrix(), w1.matrix());
        assert!(power_graph(&w1, 0).is_err());
        assert!(power_graph(&p, 1).is_ok());
        let p2 = power_graph(&w1, 2).unwrap();
        assert!(power_graph(&p2, 2).is_err());
    }

    #[test]
    fn block_projector() {
        let mut m = Mat::zeros(4, 4);
        for (i, j) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
            m[(i, j)] = 1.0;
        }
        let w1 = SimilarityGraph::from_normalized(m, NormalizationMode::Symmetric);
        let inf = infinity_graph(&w1, UNIT_EIGENVALUE_TOL).unwrap();
        assert_eq!(inf.unit_rank(), Some(2));
        let mut expected = Mat::zeros(4, 4);
        for b in [0, 2] {
            for i in b..b + 2 {
                for j in b..b + 2 {
                    expected[(i, j)] = 0.5;
                }
            }
        }
        assert!(max_abs_diff(inf.matrix(), &expected) < 1e-12);
    }

    #[test]
    fn no_unit_eigenvalue() {
        let w1 = SimilarityGraph::from_normalized(Mat::identity(3, 3) * 0.5, NormalizationMode::Symmetric);
        assert!(matches!(
            infinity_graph(&w1, UNIT_EIGENVALUE_TOL),
            Err(HmvcError::NoUnitEigenvalue)
        ));
        let rs = SimilarityGraph::from_normalized(Mat::identity(3, 3), NormalizationMode::RowStochastic);
        assert!(infinity_graph(&rs, UNIT_EIGENVALUE_TOL).is_err());
    }

    #[test]
    fn mixed_order_one_and_terms() {
        let x = fm(4, 2, &[1.0, 0.1, 0.2, 1.0, 0.7, 0.7, 1.0, 1.0]);
        let w1 = first_order_graph(&x, NormalizationMode::Symmetric).unwrap();
        let f1 = mixed_graph(&w1, GraphOrder::Finite(1)).unwrap();
        assert_eq!(f1.matrix(), w1.matrix());
        let f3 = mixed_graph(&w1, GraphOrder::Finite(3)).unwrap();
        assert_eq!(f3.terms().len(), 3);
        let finf = mixed_graph(&w1, GraphOrder::Infinite).unwrap();
        assert_eq!(finf.rank_r(), Some(1));
        assert_eq!(finf.terms(), &[GraphOrder::Finite(1), GraphOrder::Infinite]);
    }

    #[test]
    fn projector_has_zero_change_rate() {
        let mut m = Mat::zeros(4, 4);
        for b in [0, 2] {
            for i in b..b + 2 {
                for j in b..b + 2 {
                    m[(i, j)] = 0.5;
                }
            }
        }
        let w1 = SimilarityGraph::from_normalized(m, NormalizationMode::Symmetric);
        let rates = order_change_rate(&w1, 4).unwrap();
        assert_eq!(rates.len(), 4);
        assert_eq!(rates.last().unwrap().order, GraphOrder::Infinite);
        for r in rates {
            assert!(r.rate.abs() < 1e-12, "{r:?}");
            assert_eq!(r.skipped, 8);
        }
    }

    #[test]
    fn order_parsing() {
        assert_eq!("INF".parse::<GraphOrder>().unwrap(), GraphOrder::Infinite);
        assert_eq!("3".parse::<GraphOrder>().unwrap(), GraphOrder::Finite(3));
        assert!("0".parse::<GraphOrder>().is_err());
        assert!("x".parse::<GraphOrder>().is_err());
        assert_eq!(GraphOrder::Infinite.to_string(), "inf");
    }

    #[test]
    fn implicit_graph_matches_dense() {
        let x = fm(
            5,
            3,
            &[1.0, 0.2, -0.3, 0.0, 0.0, 0.0, 0.5, -1.0, 2.0, -0.7, 0.1, 0.4, 1.0, 1.0, 1.0],
        );
        let dense = first_order_graph(&x, NormalizationMode::Symmetric).unwrap();
        let implicit = ImplicitCosineGraph::new(&x).unwrap();
        assert!(max_abs_diff(&implicit.to_dense(), dense.matrix()) < 1e-14);
        let p = Mat::from_fn(2, 5, |i, j| (i as f64 + 1.0) * (j as f64 - 2.0));
        let expected = &p * dense.matrix();
        assert!(max_abs_diff(&implicit.right_multiply(&p), &expected) < 1e-12);
    }
}
