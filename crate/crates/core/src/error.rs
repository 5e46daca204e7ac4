use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the clustering pipeline.
#[derive(Debug, Error)]
pub enum HmvcError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("view {view} has {found} rows, expected {expected}")]
    RowCountMismatch {
        view: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-numeric entry {entry:?} at line {line}, column {column}")]
    NonNumericEntry {
        entry: String,
        line: usize,
        column: usize,
    },
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("view {0} is empty")]
    EmptyView(usize),
    #[error("ragged matrix: line {line} has {found} columns, expected {expected}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("node id {id} out of range for {n} nodes")]
    NodeIdOutOfRange { id: usize, n: usize },
    #[error("asymmetric weights at ({i}, {j}): {wij} vs {wji}")]
    AsymmetricWeightsBeyondTolerance { i: usize, j: usize, wij: f64, wji: f64 },
    #[error("negative edge weight {weight} at ({i}, {j})")]
    NegativeWeight { i: usize, j: usize, weight: f64 },
    #[error("node {0} is isolated (zero degree)")]
    IsolatedNode(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("signal has zero norm")]
    ZeroSignal,
    #[error("no eigenvalue within tolerance of 1; the graph is not properly normalized")]
    NoUnitEigenvalue,
    #[error("linear solve failed: {0}")]
    SolveFailure(String),
    #[error("qp solver did not reach KKT residual {tol:e} in {iters} iterations (residual {residual:e})")]
    QpIterationLimit { iters: usize, tol: f64, residual: f64 },
    #[error("requested {m} anchors but only {n} nodes")]
    MTooLarge { m: usize, n: usize },
    #[error("fewer than {wanted} usable eigenvectors")]
    DegenerateEigenbasis { wanted: usize },
    #[error("label vectors differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid labels: {0}")]
    InvalidLabels(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bad matrix container: {0}")]
    BadContainer(String),
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, HmvcError>;

impl HmvcError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HmvcError::Io {
            path: path.into(),
            source,
        }
    }
}
