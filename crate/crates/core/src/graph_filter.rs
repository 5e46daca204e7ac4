//! Normalized adjacency, Laplacian and the low-pass filter `(I - L/2)^k`.

use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureMatrix, SparseAdjacency};
use crate::error::{HmvcError, Result};
use crate::linalg::{CsrMatrix, Mat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum NormalizationMode {
    /// `D^{-1/2} W D^{-1/2}`
    #[default]
    Symmetric,
    /// `D^{-1} W`
    RowStochastic,
}

impl std::str::FromStr for NormalizationMode {
    type Err = HmvcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" | "sym" => Ok(NormalizationMode::Symmetric),
            "row_stochastic" | "row-stochastic" | "row" => Ok(NormalizationMode::RowStochastic),
            other => Err(HmvcError::InvalidParameter(format!(
                "unknown normalization {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphMatrix {
    Dense(Mat),
    Sparse(CsrMatrix),
}

impl GraphMatrix {
    pub fn n(&self) -> usize {
        match self {
            GraphMatrix::Dense(m) => m.nrows(),
            GraphMatrix::Sparse(m) => m.n_rows(),
        }
    }

    pub fn mul_dense(&self, rhs: &Mat) -> Mat {
        match self {
            GraphMatrix::Dense(m) => m * rhs,
            GraphMatrix::Sparse(m) => m.mul_dense(rhs),
        }
    }

    pub fn to_dense(&self) -> Mat {
        match self {
            GraphMatrix::Dense(m) => m.clone(),
            GraphMatrix::Sparse(m) => m.to_dense(),
        }
    }
}

/// A nonnegative N×N graph with a recorded normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedGraph {
    matrix: GraphMatrix,
    mode: NormalizationMode,
    self_loops: bool,
}

impl NormalizedGraph {
    /// Wraps an already normalized dense matrix, e.g. a first-order similarity graph.
    pub fn from_dense(matrix: Mat, mode: NormalizationMode, self_loops: bool) -> Self {
        NormalizedGraph {
            matrix: GraphMatrix::Dense(matrix),
            mode,
            self_loops,
        }
    }

    pub fn matrix(&self) -> &GraphMatrix {
        &self.matrix
    }

    pub fn mode(&self) -> NormalizationMode {
        self.mode
    }

    pub fn self_loops(&self) -> bool {
        self.self_loops
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }
}

/// Symmetric normalization `D^{-1/2}(Ã [+ I])D^{-1/2}`, degrees taken after loop addition.
pub fn normalize_adjacency(adj: &SparseAdjacency, add_self_loops: bool) -> Result<NormalizedGraph> {
    let looped;
    let base = if add_self_loops && !adj.self_loops_added() {
        looped = adj.with_self_loops();
        &looped
    } else {
        adj
    };
    let degrees = base.degrees();
    if let Some(i) = degrees.iter().position(|&d| d <= 0.0) {
        return Err(HmvcError::IsolatedNode(i));
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    Ok(NormalizedGraph {
        matrix: GraphMatrix::Sparse(base.csr().scale(&inv_sqrt, &inv_sqrt)),
        mode: NormalizationMode::Symmetric,
        self_loops: add_self_loops || adj.self_loops_added(),
    })
}

/// `L = I - A` for a symmetric-normalized `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    graph: NormalizedGraph,
}

impl Laplacian {
    pub fn graph(&self) -> &NormalizedGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// `L x` without materializing `L`.
    pub fn apply(&self, x: &Mat) -> Mat {
        x - self.graph.matrix.mul_dense(x)
    }

    pub fn to_dense(&self) -> Mat {
        let n = self.n();
        Mat::identity(n, n) - self.graph.matrix.to_dense()
    }
}

pub fn laplacian(graph: &NormalizedGraph) -> Result<Laplacian> {
    if graph.mode != NormalizationMode::Symmetric {
        return Err(HmvcError::InvalidParameter(
            "laplacian requires a symmetric-normalized graph".into(),
        ));
    }
    Ok(Laplacian {
        graph: graph.clone(),
    })
}

/// Filtered representation `H = (I - L/2)^k X`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredFeatures {
    matrix: Mat,
    filter_order: usize,
}

impl FilteredFeatures {
    pub fn new(matrix: Mat, filter_order: usize) -> Self {
        FilteredFeatures {
            matrix,
            filter_order,
        }
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat {
        self.matrix
    }

    pub fn filter_order(&self) -> usize {
        self.filter_order
    }
}

/// Applies `(I - L/2)` `k` times; since `I - L/2 = (I + A)/2` each step is one graph product.
pub fn filter_matrix(x: &Mat, laplacian: &Laplacian, k: usize) -> Result<Mat> {
    if x.nrows() != laplacian.n() {
        return Err(HmvcError::DimensionMismatch(format!(
            "features have {} rows, graph has {} nodes",
            x.nrows(),
            laplacian.n()
        )));
    }
    let mut h = x.clone();
    for _ in 0..k {
        let ah = laplacian.graph.matrix.mul_dense(&h);
        h += ah;
        h *= 0.5;
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(HmvcError::NonFinite { row: 0, column: 0 });
    }
    Ok(h)
}

pub fn filter_features(x: &FeatureMatrix, laplacian: &Laplacian, k: usize) -> Result<FilteredFeatures> {
    Ok(FilteredFeatures {
        matrix: filter_matrix(x.data(), laplacian, k)?,
        filter_order: k,
    })
}

/// Rayleigh quotient `sᵀ L s / sᵀ s`.
pub fn smoothness(signal: &[f64], laplacian: &Laplacian) -> Result<f64> {
    if signal.len() != laplacian.n() {
        return Err(HmvcError::DimensionMismatch(format!(
            "signal length {} for {} nodes",
            signal.len(),
            laplacian.n()
        )));
    }
    let norm2: f64 = signal.iter().map(|v| v * v).sum();
    if norm2 == 0.0 {
        return Err(HmvcError::ZeroSignal);
    }
    let s = Mat::from_column_slice(signal.len(), 1, signal);
    let ls = laplacian.apply(&s);
    let quad: f64 = signal.iter().zip(ls.iter()).map(|(a, b)| a * b).sum();
    Ok(quad / norm2)
}

/// Average column smoothness, skipping all-zero columns.
pub fn mean_column_smoothness(x: &Mat, laplacian: &Laplacian) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for c in 0..x.ncols() {
        let col: Vec<f64> = x.column(c).iter().copied().collect();
        match smoothness(&col, laplacian) {
            Ok(v) => {
                total += v;
                count += 1;
            }
            Err(HmvcError::ZeroSignal) => {}
            Err(e) => return Err(e),
        }
    }
    if count == 0 {
        return Err(HmvcError::ZeroSignal);
    }
    Ok(total / count as f64)
}
