//! End-to-end pipeline: ingestion → learner → clustering → reports, plus
//! parameter sweeps and the edge-quality diagnostics.
//!
//! Run configurations can be read from a plain-text file of `key = value`
//! lines (`#` starts a comment). List-valued keys take comma separated values.
//! The recognised keys are listed in [`RunConfig::set`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anchor::{fit_anchor, AnchorParams};
use crate::clustering::{anchor_cluster, evaluate, kmeans, spectral_cluster, Metrics};
use crate::dataset::{
    generate_gaussian_views, generate_two_moons, knn_graph, load_attributed_graph, load_feature_views,
    read_labels, write_labels, write_matrix_binary, MatrixFormat, MultiViewDataset, SparseAdjacency,
};
use crate::error::{HmvcError, Result};
use crate::graph_filter::normalize_adjacency;
use crate::highorder::{mixed_graph, GraphOrder, SimilarityGraph};
use crate::learner::{fit, HmvcConfig, ObjectiveTerms};
use crate::linalg::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Hmvc,
    Ahmvc,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Hmvc => "hmvc",
            Method::Ahmvc => "ahmvc",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = HmvcError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hmvc" => Ok(Method::Hmvc),
            "ahmvc" | "anchor" => Ok(Method::Ahmvc),
            _ => Err(HmvcError::InvalidParameter(format!("unknown method {s:?}"))),
        }
    }
}

/// How the learned graph becomes labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ClusterMethod {
    #[default]
    Spectral,
    /// k-means on the rows of the learned graph.
    Kmeans,
}

impl std::str::FromStr for ClusterMethod {
    type Err = HmvcError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(ClusterMethod::Spectral),
            "kmeans" | "k-means" => Ok(ClusterMethod::Kmeans),
            _ => Err(HmvcError::InvalidParameter(format!("unknown clustering {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Files {
        features: Vec<PathBuf>,
        graphs: Vec<PathBuf>,
        labels: Option<PathBuf>,
        header: bool,
        symmetrize: bool,
    },
    Blobs {
        per_cluster: usize,
        clusters: usize,
        dims: Vec<usize>,
        separation: f64,
        seed: u64,
    },
    TwoMoons {
        points: usize,
        noise: f64,
        seed: u64,
    },
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Blobs {
            per_cluster: 50,
            clusters: 3,
            dims: vec![10, 15],
            separation: 4.0,
            seed: 42,
        }
    }
}

impl DatasetSource {
    pub fn load(&self, n_clusters: Option<usize>) -> Result<MultiViewDataset> {
        let ds = match self {
            DatasetSource::Files {
                features,
                graphs,
                labels,
                header,
                symmetrize,
            } => {
                let format = features
                    .first()
                    .map(|p| MatrixFormat::from_path(p, *header))
                    .unwrap_or(MatrixFormat::Csv { header: *header });
                let ds = if graphs.is_empty() {
                    load_feature_views(features, format)?
                } else {
                    load_attributed_graph(features, graphs, format, *symmetrize)?
                };
                match labels {
                    Some(p) => ds.with_labels(read_labels(p)?)?,
                    None => ds,
                }
            }
            DatasetSource::Blobs {
                per_cluster,
                clusters,
                dims,
                separation,
                seed,
            } => generate_gaussian_views(*per_cluster, *clusters, dims, *separation, *seed)?,
            DatasetSource::TwoMoons { points, noise, seed } => generate_two_moons(*points, *noise, *seed)?,
        };
        match n_clusters {
            Some(c) => ds.with_n_clusters(c),
            None => Ok(ds),
        }
    }
}

/// Parameter grid; every combination is one run. An empty `order` list
/// selects the data-dependent default (3 for attributed graphs, 2 otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub mu: Vec<f64>,
    pub filter_order: Vec<usize>,
    pub order: Vec<GraphOrder>,
}

impl Grid {
    pub fn single(config: &HmvcConfig) -> Self {
        Grid {
            alpha: vec![config.alpha],
            beta: vec![config.beta],
            mu: vec![config.mu],
            filter_order: vec![config.filter_order],
            order: vec![config.similarity_order],
        }
    }

    /// Log-spaced grid over alpha, beta and mu from 1e-3 to 1e4.
    pub fn log_range(config: &HmvcConfig) -> Self {
        let range = vec![1e-3, 1.0, 1e2, 1e3, 1e4];
        Grid {
            alpha: range.clone(),
            beta: range.clone(),
            mu: range,
            ..Self::single(config)
        }
    }

    /// Every combination of the grid values; an empty order list uses `base`'s order.
    pub fn points(&self, base: &HmvcConfig) -> Vec<HmvcConfig> {
        let orders = if self.order.is_empty() {
            vec![base.similarity_order]
        } else {
            self.order.clone()
        };
        let mut out = Vec::new();
        for &alpha in &self.alpha {
            for &beta in &self.beta {
                for &mu in &self.mu {
                    for &filter_order in &self.filter_order {
                        for &similarity_order in &orders {
                            out.push(HmvcConfig {
                                alpha,
                                beta,
                                mu,
                                filter_order,
                                similarity_order,
                                ..base.clone()
                            });
                        }
                    }
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.alpha.is_empty()
            || self.beta.is_empty()
            || self.mu.is_empty()
            || self.filter_order.is_empty()
        {
            return Err(HmvcError::InvalidParameter("sweep grids must be nonempty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub dataset: DatasetSource,
    pub n_clusters: Option<usize>,
    pub method: Method,
    pub base: HmvcConfig,
    pub anchor: AnchorParams,
    pub grid: Grid,
    pub cluster_method: ClusterMethod,
    pub output_dir: Option<PathBuf>,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let base = HmvcConfig::default();
        RunConfig {
            name: String::new(),
            dataset: DatasetSource::default(),
            n_clusters: None,
            method: Method::Hmvc,
            grid: Grid {
                order: Vec::new(),
                ..Grid::single(&base)
            },
            base,
            anchor: AnchorParams::default(),
            cluster_method: ClusterMethod::Spectral,
            output_dir: None,
            jobs: 1,
        }
    }
}

fn parse_list<T: std::str::FromStr>(value: &str, key: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| HmvcError::InvalidParameter(format!("bad value {s:?} for {key}")))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(value: &str, key: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| HmvcError::InvalidParameter(format!("bad value {value:?} for {key}")))
}

fn parse_bool(value: &str, key: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(HmvcError::InvalidParameter(format!("bad boolean {value:?} for {key}"))),
    }
}

impl RunConfig {
    /// Parses a key-value config file body on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| HmvcError::Config {
                line: idx + 1,
                message: format!("expected key = value, got {content:?}"),
            })?;
            cfg.set(key.trim(), value.trim()).map_err(|e| HmvcError::Config {
                line: idx + 1,
                message: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    /// The `name` setting, or a label derived from the data source when it is empty.
    pub fn dataset_name(&self) -> String {
        if !self.name.is_empty() {
            return self.name.clone();
        }
        match &self.dataset {
            DatasetSource::Blobs { .. } => "blobs".into(),
            DatasetSource::TwoMoons { .. } => "moons".into(),
            DatasetSource::Files { features, .. } => features
                .first()
                .and_then(|p| p.file_stem())
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "data".into()),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HmvcError::io(path, e))?;
        Self::parse(&text)
    }

    fn files_mut(&mut self) -> (&mut Vec<PathBuf>, &mut Vec<PathBuf>, &mut Option<PathBuf>, &mut bool, &mut bool) {
        if !matches!(self.dataset, DatasetSource::Files { .. }) {
            self.dataset = DatasetSource::Files {
                features: Vec::new(),
                graphs: Vec::new(),
                labels: None,
                header: false,
                symmetrize: true,
            };
        }
        match &mut self.dataset {
            DatasetSource::Files {
                features,
                graphs,
                labels,
                header,
                symmetrize,
            } => (features, graphs, labels, header, symmetrize),
            _ => unreachable!(),
        }
    }

    /// Applies one setting. Keys: `name`, `features`, `graphs`, `labels`,
    /// `header`, `symmetrize`, `synthetic` (`blobs` | `moons`), `blob_size`,
    /// `blob_clusters`, `blob_dims`, `separation`, `moons_points`, `moons_noise`,
    /// `data_seed`, `clusters`, `method`, `alpha`, `beta`, `mu`,
    /// `filter_order`, `order`, `max_iters`, `tol`, `seed`, `normalization`,
    /// `anchors`, `eta`, `knn`, `cluster`, `output`, `jobs`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "name" => self.name = value.to_string(),
            "features" => *self.files_mut().0 = parse_list::<PathBuf>(value, key)?,
            "graphs" => *self.files_mut().1 = parse_list::<PathBuf>(value, key)?,
            "labels" => *self.files_mut().2 = Some(PathBuf::from(value)),
            "header" => *self.files_mut().3 = parse_bool(value, key)?,
            "symmetrize" => *self.files_mut().4 = parse_bool(value, key)?,
            "synthetic" => {
                self.dataset = match value {
                    "blobs" => DatasetSource::default(),
                    "moons" | "two-moons" => DatasetSource::TwoMoons {
                        points: 200,
                        noise: 0.05,
                        seed: 42,
                    },
                    _ => return Err(HmvcError::InvalidParameter(format!("unknown synthetic set {value:?}"))),
                }
            }
            "blob_size" | "blob_clusters" | "blob_dims" | "separation" => {
                if !matches!(self.dataset, DatasetSource::Blobs { .. }) {
                    self.dataset = DatasetSource::default();
                }
                if let DatasetSource::Blobs {
                    per_cluster,
                    clusters,
                    dims,
                    separation,
                    ..
                } = &mut self.dataset
                {
                    match key {
                        "blob_size" => *per_cluster = parse_one(value, key)?,
                        "blob_clusters" => *clusters = parse_one(value, key)?,
                        "blob_dims" => *dims = parse_list(value, key)?,
                        _ => *separation = parse_one(value, key)?,
                    }
                }
            }
            "moons_points" | "moons_noise" => {
                if !matches!(self.dataset, DatasetSource::TwoMoons { .. }) {
                    self.set("synthetic", "moons")?;
                }
                if let DatasetSource::TwoMoons { points, noise, .. } = &mut self.dataset {
                    match key {
                        "moons_points" => *points = parse_one(value, key)?,
                        _ => *noise = parse_one(value, key)?,
                    }
                }
            }
            "data_seed" => match &mut self.dataset {
                DatasetSource::Blobs { seed, .. } | DatasetSource::TwoMoons { seed, .. } => {
                    *seed = parse_one(value, key)?
                }
                DatasetSource::Files { .. } => {
                    return Err(HmvcError::InvalidParameter("data_seed applies to synthetic data only".into()))
                }
            },
            "clusters" => self.n_clusters = Some(parse_one(value, key)?),
            "method" => self.method = parse_one(value, key)?,
            "alpha" => self.grid.alpha = parse_list(value, key)?,
            "beta" => self.grid.beta = parse_list(value, key)?,
            "mu" => self.grid.mu = parse_list(value, key)?,
            "filter_order" => self.grid.filter_order = parse_list(value, key)?,
            "order" => self.grid.order = parse_list(value, key)?,
            "max_iters" => self.base.max_iters = parse_one(value, key)?,
            "tol" => self.base.rel_tol = parse_one(value, key)?,
            "seed" => self.base.seed = parse_one(value, key)?,
            "normalization" => self.base.normalization = parse_one(value, key)?,
            "anchors" => self.anchor.m = parse_one(value, key)?,
            "eta" => self.anchor.eta = parse_one(value, key)?,
            "knn" => self.anchor.knn = parse_one(value, key)?,
            "cluster" => self.cluster_method = parse_one(value, key)?,
            "output" => self.output_dir = Some(PathBuf::from(value)),
            "jobs" => self.jobs = parse_one::<usize>(value, key)?.max(1),
            _ => return Err(HmvcError::InvalidParameter(format!("unknown key {key:?}"))),
        }
        Ok(())
    }
}

/// One line of `report.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub method: Method,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub k: usize,
    pub n: String,
    pub m: Option<usize>,
    pub seed: u64,
    pub metrics: Option<Metrics>,
    pub iterations: usize,
    pub final_objective: Option<f64>,
    pub seconds: f64,
    pub status: String,
}

pub const REPORT_HEADER: &str =
    "dataset,method,alpha,beta,mu,k,n,m,seed,acc,nmi,ari,f1,pur,iterations,objective,seconds,status";

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ReportRow {
    pub fn to_csv(&self) -> String {
        let metric = |f: fn(&Metrics) -> f64| opt(self.metrics.as_ref().map(f));
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.dataset,
            self.method,
            self.alpha,
            self.beta,
            self.mu,
            self.k,
            self.n,
            opt(self.m),
            self.seed,
            metric(|m| m.acc),
            metric(|m| m.nmi),
            metric(|m| m.ari),
            metric(|m| m.f1),
            metric(|m| m.pur),
            self.iterations,
            opt(self.final_objective),
            self.seconds,
            self.status.replace(',', ";")
        )
    }
}

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

pub fn trace_csv(trace: &[ObjectiveTerms]) -> String {
    let mut out = String::from("iteration,objective,reconstruction,prior,fusion,regularization\n");
    for (i, t) in trace.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{}",
            t.total, t.reconstruction, t.prior, t.fusion, t.regularization
        );
    }
    out
}

/// Everything produced by one grid point.
#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub row: ReportRow,
    pub labels: Vec<usize>,
    pub trace: Vec<ObjectiveTerms>,
    /// Consensus graph (N×N for hmvc, N×m for ahmvc).
    pub graph: Mat,
    pub anchors: Option<Vec<usize>>,
    pub gamma: Vec<f64>,
}

fn n_clusters_for(dataset: &MultiViewDataset) -> Result<usize> {
    dataset.n_clusters().ok_or_else(|| {
        HmvcError::InvalidParameter("number of clusters unknown: pass labels or set clusters".into())
    })
}

/// Fits one configuration and clusters the result.
pub fn run_point(
    dataset: &MultiViewDataset,
    name: &str,
    method: Method,
    config: &HmvcConfig,
    anchor: &AnchorParams,
    cluster_method: ClusterMethod,
) -> Result<PointOutcome> {
    let c = n_clusters_for(dataset)?;
    let (graph, trace, iterations, seconds, anchors, gamma) = match method {
        Method::Hmvc => {
            let fitted = fit(dataset, config)?;
            let st = fitted.state;
            (st.consensus, st.objective_trace, st.iterations, fitted.fit_seconds, None, st.gamma)
        }
        Method::Ahmvc => {
            let fitted = fit_anchor(dataset, config, anchor)?;
            let inds = fitted.anchors.indices().to_vec();
            (
                fitted.consensus,
                fitted.objective_trace,
                fitted.iterations,
                fitted.fit_seconds,
                Some(inds),
                fitted.gamma,
            )
        }
    };
    let labels = match (method, cluster_method) {
        (Method::Hmvc, ClusterMethod::Spectral) => spectral_cluster(&graph, c, config.seed)?,
        (Method::Ahmvc, ClusterMethod::Spectral) => anchor_cluster(&graph, c, config.seed)?,
        (_, ClusterMethod::Kmeans) => kmeans(&graph, c, config.seed)?.labels,
    };
    let metrics = match dataset.labels() {
        Some(truth) => Some(evaluate(&labels, truth)?),
        None => None,
    };
    let row = ReportRow {
        dataset: name.to_string(),
        method,
        alpha: config.alpha,
        beta: config.beta,
        mu: config.mu,
        k: config.filter_order,
        n: config.similarity_order.to_string(),
        m: anchors.as_ref().map(Vec::len),
        seed: config.seed,
        metrics,
        iterations,
        final_objective: trace.last().map(|t| t.total),
        seconds,
        status: "ok".into(),
    };
    Ok(PointOutcome {
        row,
        labels,
        trace,
        graph,
        anchors,
        gamma,
    })
}

fn failed_row(name: &str, method: Method, cfg: &HmvcConfig, m: Option<usize>, err: &HmvcError) -> ReportRow {
    ReportRow {
        dataset: name.to_string(),
        method,
        alpha: cfg.alpha,
        beta: cfg.beta,
        mu: cfg.mu,
        k: cfg.filter_order,
        n: cfg.similarity_order.to_string(),
        m,
        seed: cfg.seed,
        metrics: None,
        iterations: 0,
        final_objective: None,
        seconds: 0.0,
        status: format!("error: {err}"),
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub rows: Vec<ReportRow>,
}

impl RunOutcome {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.status == "ok")
    }

    /// Highest-accuracy successful row.
    pub fn best(&self) -> Option<&ReportRow> {
        self.rows
            .iter()
            .filter(|r| r.metrics.is_some())
            .max_by(|a, b| {
                let (x, y) = (a.metrics.unwrap().acc, b.metrics.unwrap().acc);
                x.total_cmp(&y)
            })
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| HmvcError::io(path, e))
}

fn write_point(dir: &Path, tag: &str, point: &PointOutcome) -> Result<()> {
    write_text(&dir.join(format!("trace{tag}.csv")), &trace_csv(&point.trace))?;
    write_matrix_binary(&dir.join(format!("graph{tag}.bin")), &point.graph)?;
    write_labels(&dir.join(format!("labels{tag}.txt")), &point.labels)?;
    if let Some(anchors) = &point.anchors {
        write_labels(&dir.join(format!("anchors{tag}.txt")), anchors)?;
    }
    Ok(())
}

/// Runs every grid point. A failing point is recorded with its error and the sweep continues.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.grid.validate()?;
    let dataset = config.dataset.load(config.n_clusters)?;
    run_on(&dataset, config)
}

pub fn run_on(dataset: &MultiViewDataset, config: &RunConfig) -> Result<RunOutcome> {
    config.grid.validate()?;
    if let Some(dir) = &config.output_dir {
        fs::create_dir_all(dir).map_err(|e| HmvcError::io(dir, e))?;
    }
    let mut grid = config.grid.clone();
    if grid.order.is_empty() {
        grid.order = vec![if dataset.adjacencies().is_empty() {
            config.base.similarity_order
        } else {
            HmvcConfig::for_graph_data().similarity_order
        }];
    }
    let points = grid.points(&config.base);
    let n_points = points.len();
    let name = config.dataset_name();
    let m = (config.method == Method::Ahmvc).then_some(config.anchor.m);
    let eval = |(idx, cfg): (usize, &HmvcConfig)| -> Result<ReportRow> {
        match run_point(dataset, &name, config.method, cfg, &config.anchor, config.cluster_method) {
            Ok(point) => {
                if let Some(dir) = &config.output_dir {
                    // a single fit writes trace.csv, graph.bin, ...; sweeps number the files
                    let tag = if n_points == 1 { String::new() } else { format!("_{idx:03}") };
                    write_point(dir, &tag, &point)?;
                }
                Ok(point.row)
            }
            Err(err) => {
                log::warn!("grid point {idx} failed: {err}");
                Ok(failed_row(&name, config.method, cfg, m, &err))
            }
        }
    };
    let rows: Vec<ReportRow> = if config.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| HmvcError::InvalidParameter(e.to_string()))?;
        pool.install(|| points.par_iter().enumerate().map(eval).collect::<Result<Vec<_>>>())?
    } else {
        points.iter().enumerate().map(eval).collect::<Result<Vec<_>>>()?
    };
    if let Some(dir) = &config.output_dir {
        write_text(&dir.join("report.csv"), &report_csv(&rows))?;
        let json = serde_json::to_string_pretty(&rows).map_err(|e| HmvcError::InvalidParameter(e.to_string()))?;
        write_text(&dir.join("report.json"), &json)?;
    }
    Ok(RunOutcome { rows })
}

/// Sweeps the filter order with every other parameter at its first grid value.
pub fn ablation_filter_order(config: &RunConfig, k_values: &[usize]) -> Result<RunOutcome> {
    config.grid.validate()?;
    let mut cfg = config.clone();
    cfg.grid = Grid {
        alpha: vec![config.grid.alpha[0]],
        beta: vec![config.grid.beta[0]],
        mu: vec![config.grid.mu[0]],
        filter_order: k_values.to_vec(),
        order: config.grid.order.first().copied().into_iter().collect(),
    };
    run(&cfg)
}

/// Sweeps the similarity order with every other parameter at its first grid value.
pub fn ablation_similarity_order(config: &RunConfig, n_values: &[GraphOrder]) -> Result<RunOutcome> {
    config.grid.validate()?;
    let mut cfg = config.clone();
    cfg.grid = Grid {
        alpha: vec![config.grid.alpha[0]],
        beta: vec![config.grid.beta[0]],
        mu: vec![config.grid.mu[0]],
        filter_order: vec![config.grid.filter_order[0]],
        order: n_values.to_vec(),
    };
    run(&cfg)
}

/// Which entries of a dense graph count as edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeSelection {
    /// The `k` largest off-diagonal entries per row, symmetrized by union.
    TopK(usize),
    /// Every off-diagonal entry above the threshold.
    Threshold(f64),
}

impl Default for EdgeSelection {
    fn default() -> Self {
        EdgeSelection::TopK(5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeQuality {
    /// Retained edges joining different classes.
    pub nwe: usize,
    /// Fraction of retained edges inside a class.
    pub acce: f64,
    pub edges: usize,
}

fn quality_of(pairs: impl Iterator<Item = (usize, usize)>, labels: &[usize]) -> EdgeQuality {
    let mut edges = 0;
    let mut nwe = 0;
    for (i, j) in pairs {
        edges += 1;
        if labels[i] != labels[j] {
            nwe += 1;
        }
    }
    EdgeQuality {
        nwe,
        acce: if edges == 0 { 0.0 } else { (edges - nwe) as f64 / edges as f64 },
        edges,
    }
}

pub fn edge_quality_sparse(adj: &SparseAdjacency, labels: &[usize]) -> Result<EdgeQuality> {
    if labels.len() != adj.n_nodes() {
        return Err(HmvcError::LengthMismatch(labels.len(), adj.n_nodes()));
    }
    Ok(quality_of(adj.undirected_edges().map(|(i, j, _)| (i, j)), labels))
}

/// Row-relative resolution below which top-K candidates are considered tied.
const TIE_RESOLUTION: f64 = 1e12;

/// Undirected edge set `(i, j)`, `i < j`, selected from a dense graph.
pub fn retained_edges(graph: &Mat, selection: EdgeSelection) -> Vec<(usize, usize)> {
    let n = graph.nrows();
    let mut keep = std::collections::BTreeSet::new();
    match selection {
        EdgeSelection::TopK(k) => {
            for i in 0..n {
                // entries equal up to rounding count as ties, which go to the lower index
                let scale = (0..n).filter(|&j| j != i).fold(0.0f64, |m, j| m.max(graph[(i, j)].abs()));
                let key = |j: usize| {
                    if scale > 0.0 {
                        (graph[(i, j)] / scale * TIE_RESOLUTION).round() as i64
                    } else {
                        0
                    }
                };
                let mut cand: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                cand.sort_by(|&a, &b| key(b).cmp(&key(a)).then(a.cmp(&b)));
                for &j in cand.iter().take(k) {
                    keep.insert((i.min(j), i.max(j)));
                }
            }
        }
        EdgeSelection::Threshold(t) => {
            for i in 0..n {
                for j in 0..n {
                    if i != j && graph[(i, j)] > t {
                        keep.insert((i.min(j), i.max(j)));
                    }
                }
            }
        }
    }
    keep.into_iter().collect()
}

pub fn edge_quality_dense(graph: &Mat, labels: &[usize], selection: EdgeSelection) -> Result<EdgeQuality> {
    if labels.len() != graph.nrows() || graph.nrows() != graph.ncols() {
        return Err(HmvcError::LengthMismatch(labels.len(), graph.nrows()));
    }
    Ok(quality_of(retained_edges(graph, selection).into_iter(), labels))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoRow {
    pub order: GraphOrder,
    pub quality: EdgeQuality,
    pub unit_rank: Option<usize>,
}

/// Edge quality of mixed similarity graphs of several orders built on the
/// symmetric-normalized KNN graph of a point cloud, with top-K edge retention.
pub fn knn_order_diagnostics(
    dataset: &MultiViewDataset,
    k: usize,
    orders: &[GraphOrder],
) -> Result<Vec<DemoRow>> {
    let labels = dataset
        .labels()
        .ok_or_else(|| HmvcError::InvalidLabels("edge diagnostics need ground truth".into()))?;
    let knn = knn_graph(dataset.view(0), k)?;
    let normalized = normalize_adjacency(&knn, false)?.matrix().to_dense();
    let w1 = SimilarityGraph::from_normalized(normalized, crate::graph_filter::NormalizationMode::Symmetric);
    orders
        .iter()
        .map(|&order| {
            let mixed = mixed_graph(&w1, order)?;
            Ok(DemoRow {
                order,
                quality: edge_quality_dense(mixed.matrix(), labels, EdgeSelection::TopK(k))?,
                unit_rank: mixed.rank_r(),
            })
        })
        .collect()
}

/// The two-moons KNN demonstration across orders.
pub fn two_moons_demo(points: usize, noise: f64, seed: u64, k: usize, orders: &[GraphOrder]) -> Result<Vec<DemoRow>> {
    let ds = generate_two_moons(points, noise, seed)?;
    knn_order_diagnostics(&ds, k, orders)
}
