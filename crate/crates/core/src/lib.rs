//! High-order multi-view clustering on graph-filtered features.
//!
//! The pipeline: smooth every view with a low-pass graph filter, build a
//! mixed high-order similarity graph per view, learn per-view and consensus
//! graphs with adaptive view weights, then cluster the consensus graph.
//! An anchor variant keeps memory linear in the number of samples.

pub mod anchor;
pub mod assignment;
pub mod clustering;
pub mod dataset;
pub mod error;
pub mod graph_filter;
pub mod harness;
pub mod highorder;
pub mod learner;
pub mod linalg;
pub mod qp;

pub use anchor::{fit_anchor, select_anchors, AnchorGraph, AnchorParams, AnchorSet};
pub use clustering::{evaluate, kmeans, spectral_cluster, Metrics};
pub use dataset::{FeatureMatrix, MultiViewDataset, SparseAdjacency};
pub use error::{HmvcError, Result};
pub use graph_filter::{filter_features, laplacian, normalize_adjacency, smoothness, NormalizationMode};
pub use highorder::{first_order_graph, infinity_graph, mixed_graph, power_graph, GraphOrder, SimilarityGraph};
pub use learner::{fit, HmvcConfig, LearnerState};
pub use linalg::Mat;
