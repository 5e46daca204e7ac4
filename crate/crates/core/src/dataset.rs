//! Multi-view data model, file ingestion and synthetic generators.
//!
//! Dense views are read from CSV (no header unless requested) or from the
//! little-endian binary container described in [`write_matrix_binary`].
//! Graphs are whitespace edge lists with lines `i j [w]`; `#` starts a comment.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{HmvcError, Result};
use crate::linalg::{CsrMatrix, Mat};

/// Absolute tolerance used when checking adjacency symmetry.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// One dense N×d feature view.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Mat,
    view_id: usize,
    zero_rows: Vec<usize>,
}

impl FeatureMatrix {
    /// Validates that every entry is finite and records all-zero rows.
    pub fn new(data: Mat, view_id: usize) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(HmvcError::EmptyView(view_id));
        }
        for r in 0..data.nrows() {
            for c in 0..data.ncols() {
                if !data[(r, c)].is_finite() {
                    return Err(HmvcError::NonFinite { row: r, column: c });
                }
            }
        }
        let zero_rows = (0..data.nrows())
            .filter(|&r| data.row(r).iter().all(|&v| v == 0.0))
            .collect();
        Ok(FeatureMatrix {
            data,
            view_id,
            zero_rows,
        })
    }

    pub fn data(&self) -> &Mat {
        &self.data
    }

    pub fn view_id(&self) -> usize {
        self.view_id
    }

    pub fn n_rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.data.ncols()
    }

    /// Rows that are identically zero; cosine similarity treats them as orthogonal to everything.
    pub fn zero_rows(&self) -> &[usize] {
        &self.zero_rows
    }
}

/// Symmetric nonnegative sparse adjacency over `n` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAdjacency {
    edges: CsrMatrix,
    self_loops_added: bool,
}

impl SparseAdjacency {
    /// Builds an adjacency from `(i, j, w)` triplets.
    ///
    /// With `symmetrize` the weight of `{i, j}` is the max over both directions
    /// and duplicates. Without it, `(i, j)` and `(j, i)` must agree within
    /// [`SYMMETRY_TOL`]; a missing direction counts as weight 0.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        symmetrize: bool,
    ) -> Result<Self> {
        let mut triplets = Vec::new();
        for (i, j, w) in edges {
            for id in [i, j] {
                if id >= n {
                    return Err(HmvcError::NodeIdOutOfRange { id, n });
                }
            }
            if !w.is_finite() {
                return Err(HmvcError::NonFinite { row: i, column: j });
            }
            if w < 0.0 {
                return Err(HmvcError::NegativeWeight { i, j, weight: w });
            }
            triplets.push((i, j, w));
        }
        let edges = if symmetrize {
            let mut both = Vec::with_capacity(triplets.len() * 2);
            for &(i, j, w) in &triplets {
                both.push((i, j, w));
                if i != j {
                    both.push((j, i, w));
                }
            }
            CsrMatrix::from_triplets(n, n, both, f64::max)
        } else {
            let directed = CsrMatrix::from_triplets(n, n, triplets, f64::max);
            for (i, j, w) in directed.triplets() {
                let back = directed.get(j, i);
                if (w - back).abs() > SYMMETRY_TOL {
                    return Err(HmvcError::AsymmetricWeightsBeyondTolerance {
                        i,
                        j,
                        wij: w,
                        wji: back,
                    });
                }
            }
            directed
        };
        Ok(SparseAdjacency {
            edges,
            self_loops_added: false,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.edges.n_rows()
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.edges
    }

    pub fn self_loops_added(&self) -> bool {
        self.self_loops_added
    }

    pub fn degrees(&self) -> Vec<f64> {
        self.edges.row_sums()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.edges.get(i, j)
    }

    /// Undirected edges `(i, j, w)` with `i < j`.
    pub fn undirected_edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges
            .triplets()
            .filter(|&(i, j, w)| i < j && w > 0.0)
    }

    /// Returns `Ã + I`.
    pub fn with_self_loops(&self) -> SparseAdjacency {
        let n = self.n_nodes();
        let triplets = self
            .edges
            .triplets()
            .chain((0..n).map(|i| (i, i, 1.0)))
            .collect();
        SparseAdjacency {
            edges: CsrMatrix::from_triplets(n, n, triplets, |a, b| a + b),
            self_loops_added: true,
        }
    }

    pub fn to_dense(&self) -> Mat {
        self.edges.to_dense()
    }
}

/// How graphs pair up with feature views.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum AdjacencyLayout {
    /// Pure feature data.
    None,
    /// One graph per view.
    PerView,
    /// A single graph shared by every feature view.
    Shared,
}

/// Per-view features with optional graphs and ground truth.
#[derive(Debug, Clone)]
pub struct MultiViewDataset {
    views: Vec<FeatureMatrix>,
    adjacencies: Vec<SparseAdjacency>,
    layout: AdjacencyLayout,
    labels: Option<Vec<usize>>,
    n_clusters: Option<usize>,
}

impl MultiViewDataset {
    /// Validates shapes. `adjacencies` may be empty, have one entry (shared), or one per view.
    pub fn new(views: Vec<FeatureMatrix>, adjacencies: Vec<SparseAdjacency>) -> Result<Self> {
        let first = views.first().ok_or(HmvcError::EmptyView(0))?;
        let n = first.n_rows();
        for (v, view) in views.iter().enumerate() {
            if view.n_rows() != n {
                return Err(HmvcError::RowCountMismatch {
                    view: v,
                    expected: n,
                    found: view.n_rows(),
                });
            }
        }
        for (v, adj) in adjacencies.iter().enumerate() {
            if adj.n_nodes() != n {
                return Err(HmvcError::DimensionMismatch(format!(
                    "graph {v} has {} nodes, features have {n} rows",
                    adj.n_nodes()
                )));
            }
        }
        let layout = match adjacencies.len() {
            0 => AdjacencyLayout::None,
            k if k == views.len() => AdjacencyLayout::PerView,
            1 => AdjacencyLayout::Shared,
            k => {
                return Err(HmvcError::DimensionMismatch(format!(
                    "{k} graphs for {} views",
                    views.len()
                )))
            }
        };
        Ok(MultiViewDataset {
            views,
            adjacencies,
            layout,
            labels: None,
            n_clusters: None,
        })
    }

    /// Attaches ground truth; labels must cover `0..c` with every value present.
    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n_samples() {
            return Err(HmvcError::LengthMismatch(labels.len(), self.n_samples()));
        }
        let c = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; c];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(HmvcError::InvalidLabels(format!(
                "label {missing} is unused; labels must occupy 0..{c}"
            )));
        }
        if let Some(k) = self.n_clusters {
            if k != c {
                return Err(HmvcError::InvalidLabels(format!(
                    "labels have {c} classes but n_clusters is {k}"
                )));
            }
        }
        self.labels = Some(labels);
        self.n_clusters = Some(c);
        Ok(self)
    }

    pub fn with_n_clusters(mut self, c: usize) -> Result<Self> {
        if c == 0 {
            return Err(HmvcError::InvalidParameter("n_clusters must be positive".into()));
        }
        if let Some(labels) = &self.labels {
            let k = labels.iter().copied().max().map_or(0, |m| m + 1);
            if k != c {
                return Err(HmvcError::InvalidLabels(format!(
                    "labels have {k} classes but n_clusters is {c}"
                )));
            }
        }
        self.n_clusters = Some(c);
        Ok(self)
    }

    pub fn n_samples(&self) -> usize {
        self.views[0].n_rows()
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn views(&self) -> &[FeatureMatrix] {
        &self.views
    }

    pub fn view(&self, v: usize) -> &FeatureMatrix {
        &self.views[v]
    }

    pub fn adjacencies(&self) -> &[SparseAdjacency] {
        &self.adjacencies
    }

    /// The graph associated with view `v`, if any.
    pub fn adjacency_for(&self, v: usize) -> Option<&SparseAdjacency> {
        match self.layout {
            AdjacencyLayout::None => None,
            AdjacencyLayout::PerView => Some(&self.adjacencies[v]),
            AdjacencyLayout::Shared => Some(&self.adjacencies[0]),
        }
    }

    pub fn layout(&self) -> AdjacencyLayout {
        self.layout
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn n_clusters(&self) -> Option<usize> {
        self.n_clusters
    }
}

/// On-disk encoding of a dense matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv { header: bool },
    Binary,
}

impl MatrixFormat {
    /// Picks binary for `.bin`/`.hmat` extensions, headerless CSV otherwise.
    pub fn from_path(path: &Path, header: bool) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("hmat") => MatrixFormat::Binary,
            _ => MatrixFormat::Csv { header },
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| HmvcError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HmvcError::io(path, e))
}

fn parse_number(field: &str, line: usize, column: usize) -> Result<f64> {
    let field = field.trim().trim_matches('"');
    let value: f64 = field.parse().map_err(|_| HmvcError::NonNumericEntry {
        entry: field.to_string(),
        line,
        column,
    })?;
    if !value.is_finite() {
        return Err(HmvcError::NonFinite {
            row: line,
            column,
        });
    }
    Ok(value)
}

/// Parses comma separated numeric text. Blank lines are skipped.
pub fn parse_csv_matrix(reader: impl BufRead, header: bool) -> Result<Mat> {
    let mut rows: Vec<f64> = Vec::new();
    let mut width: Option<usize> = None;
    let mut n_rows = 0;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| HmvcError::io("<csv>", e))?;
        if (header && idx == 0) || line.trim().is_empty() {
            continue;
        }
        let start = rows.len();
        for (col, field) in line.split(',').enumerate() {
            rows.push(parse_number(field, idx + 1, col + 1)?);
        }
        let found = rows.len() - start;
        match width {
            None => width = Some(found),
            Some(expected) if expected != found => {
                return Err(HmvcError::RaggedRow {
                    line: idx + 1,
                    expected,
                    found,
                })
            }
            _ => {}
        }
        n_rows += 1;
    }
    Ok(Mat::from_row_slice(n_rows, width.unwrap_or(0), &rows))
}

pub fn write_csv_matrix(path: &Path, m: &Mat) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| HmvcError::io(path, e);
    for r in 0..m.nrows() {
        let line: Vec<String> = m.row(r).iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Magic prefix of the binary matrix container.
pub const MATRIX_MAGIC: &[u8; 8] = b"HMVCMAT1";

/// Writes the binary container: 8-byte magic `HMVCMAT1`, `u64` rows, `u64`
/// cols, then `rows * cols` `f64` values in row-major order. All little-endian.
pub fn write_matrix_binary(path: &Path, m: &Mat) -> Result<()> {
    let mut w = create(path)?;
    encode_matrix_binary(&mut w, m).map_err(|e| HmvcError::io(path, e))?;
    w.flush().map_err(|e| HmvcError::io(path, e))
}

pub fn encode_matrix_binary(w: &mut impl Write, m: &Mat) -> std::io::Result<()> {
    w.write_all(MATRIX_MAGIC)?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            w.write_all(&m[(r, c)].to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn decode_matrix_binary(r: &mut impl Read) -> Result<Mat> {
    let io = |e| HmvcError::io("<binary matrix>", e);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MATRIX_MAGIC {
        return Err(HmvcError::BadContainer("wrong magic".into()));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word).map_err(io)?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word).map_err(io)?;
    let cols = u64::from_le_bytes(word) as usize;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| HmvcError::BadContainer("shape overflows".into()))?;
    let mut values = Vec::with_capacity(count);
    for i in 0..count {
        r.read_exact(&mut word)
            .map_err(|_| HmvcError::BadContainer(format!("truncated after {i} values")))?;
        let v = f64::from_le_bytes(word);
        if !v.is_finite() {
            return Err(HmvcError::NonFinite {
                row: i / cols.max(1),
                column: i % cols.max(1),
            });
        }
        values.push(v);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(io)? != 0 {
        return Err(HmvcError::BadContainer("trailing bytes".into()));
    }
    Ok(Mat::from_row_slice(rows, cols, &values))
}

pub fn read_matrix(path: &Path, format: MatrixFormat) -> Result<Mat> {
    let mut reader = open(path)?;
    match format {
        MatrixFormat::Csv { header } => parse_csv_matrix(reader, header),
        MatrixFormat::Binary => decode_matrix_binary(&mut reader),
    }
}

pub fn write_matrix(path: &Path, m: &Mat, format: MatrixFormat) -> Result<()> {
    match format {
        MatrixFormat::Csv { .. } => write_csv_matrix(path, m),
        MatrixFormat::Binary => write_matrix_binary(path, m),
    }
}

/// Parses an edge list of `i j [w]` lines into triplets (weight defaults to 1).
pub fn parse_edge_list(reader: impl BufRead) -> Result<Vec<(usize, usize, f64)>> {
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| HmvcError::io("<edge list>", e))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(HmvcError::NonNumericEntry {
                entry: content.to_string(),
                line: idx + 1,
                column: 1,
            });
        }
        let id = |col: usize| -> Result<usize> {
            fields[col].parse().map_err(|_| HmvcError::NonNumericEntry {
                entry: fields[col].to_string(),
                line: idx + 1,
                column: col + 1,
            })
        };
        let w = match fields.get(2) {
            Some(f) => parse_number(f, idx + 1, 3)?,
            None => 1.0,
        };
        edges.push((id(0)?, id(1)?, w));
    }
    Ok(edges)
}

pub fn read_edge_list(path: &Path, n: usize, symmetrize: bool) -> Result<SparseAdjacency> {
    let edges = parse_edge_list(open(path)?)?;
    SparseAdjacency::from_edges(n, edges, symmetrize)
}

/// Writes each undirected edge once as `i j w`.
pub fn write_edge_list(path: &Path, adj: &SparseAdjacency) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| HmvcError::io(path, e);
    for (i, j, wt) in adj.csr().triplets().filter(|&(i, j, _)| i <= j) {
        writeln!(w, "{i} {j} {wt:?}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// One non-negative integer per line.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let reader = open(path)?;
    let mut labels = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| HmvcError::io(path, e))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        labels.push(t.parse().map_err(|_| HmvcError::NonNumericEntry {
            entry: t.to_string(),
            line: idx + 1,
            column: 1,
        })?);
    }
    Ok(labels)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| HmvcError::io(path, e);
    for l in labels {
        writeln!(w, "{l}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Loads one feature matrix per path; no graphs are attached.
pub fn load_feature_views<P: AsRef<Path>>(
    paths: &[P],
    format: MatrixFormat,
) -> Result<MultiViewDataset> {
    let mut views = Vec::with_capacity(paths.len());
    for (v, p) in paths.iter().enumerate() {
        let m = read_matrix(p.as_ref(), format)?;
        views.push(FeatureMatrix::new(m, v)?);
    }
    MultiViewDataset::new(views, Vec::new())
}

/// Loads an attributed multi-graph.
///
/// With a single feature file and several graphs the features are paired with
/// every graph (one view per graph). With several feature files and a single
/// graph the graph is shared.
pub fn load_attributed_graph<P: AsRef<Path>, Q: AsRef<Path>>(
    feature_paths: &[P],
    adjacency_paths: &[Q],
    format: MatrixFormat,
    symmetrize: bool,
) -> Result<MultiViewDataset> {
    let base = load_feature_views(feature_paths, format)?;
    let n = base.n_samples();
    let adjacencies = adjacency_paths
        .iter()
        .map(|p| read_edge_list(p.as_ref(), n, symmetrize))
        .collect::<Result<Vec<_>>>()?;
    let mut views = base.views;
    if views.len() == 1 && adjacencies.len() > 1 {
        let shared = views.pop().expect("one view");
        views = (0..adjacencies.len())
            .map(|v| FeatureMatrix {
                view_id: v,
                ..shared.clone()
            })
            .collect();
    }
    MultiViewDataset::new(views, adjacencies)
}

/// Two interleaving half circles of radius 1, labels 0 and 1.
///
/// The upper moon is `(cos t, sin t)` and the lower one `(1 - cos t, 0.5 - sin t)`
/// for `t` evenly spaced on `[0, π]`; isotropic Gaussian noise is added.
pub fn generate_two_moons(n_points: usize, noise_sigma: f64, seed: u64) -> Result<MultiViewDataset> {
    if n_points == 0 || !n_points.is_multiple_of(2) {
        return Err(HmvcError::InvalidParameter(
            "two moons needs a positive even number of points".into(),
        ));
    }
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(HmvcError::InvalidParameter("noise sigma must be >= 0".into()));
    }
    let half = n_points / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut data = Mat::zeros(n_points, 2);
    let mut labels = vec![0usize; n_points];
    for i in 0..half {
        let t = if half == 1 {
            0.0
        } else {
            std::f64::consts::PI * i as f64 / (half - 1) as f64
        };
        data[(i, 0)] = t.cos();
        data[(i, 1)] = t.sin();
        data[(half + i, 0)] = 1.0 - t.cos();
        data[(half + i, 1)] = 0.5 - t.sin();
        labels[half + i] = 1;
    }
    if noise_sigma > 0.0 {
        for v in data.iter_mut() {
            *v += noise_sigma * normal.sample(&mut rng);
        }
    }
    MultiViewDataset::new(vec![FeatureMatrix::new(data, 0)?], Vec::new())?.with_labels(labels)
}

/// Gaussian blobs observed through several views.
///
/// In every view cluster `k` is centred at `separation / √2 · e_k`, so all
/// centre pairs are `separation` apart; noise is standard normal in every
/// coordinate. Each view dimension must be at least the number of clusters.
pub fn generate_gaussian_views(
    n_per_cluster: usize,
    n_clusters: usize,
    view_dims: &[usize],
    separation: f64,
    seed: u64,
) -> Result<MultiViewDataset> {
    if n_per_cluster == 0 || n_clusters == 0 || view_dims.is_empty() {
        return Err(HmvcError::InvalidParameter(
            "blobs need clusters, points and at least one view".into(),
        ));
    }
    if let Some(&d) = view_dims.iter().find(|&&d| d < n_clusters) {
        return Err(HmvcError::InvalidParameter(format!(
            "view dimension {d} is smaller than the cluster count {n_clusters}"
        )));
    }
    let n = n_per_cluster * n_clusters;
    let labels: Vec<usize> = (0..n).map(|i| i / n_per_cluster).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let scale = separation / std::f64::consts::SQRT_2;
    let mut views = Vec::with_capacity(view_dims.len());
    for (v, &d) in view_dims.iter().enumerate() {
        let mut m = Mat::zeros(n, d);
        for i in 0..n {
            for j in 0..d {
                m[(i, j)] = normal.sample(&mut rng);
            }
            m[(i, labels[i])] += scale;
        }
        views.push(FeatureMatrix::new(m, v)?);
    }
    MultiViewDataset::new(views, Vec::new())?.with_labels(labels)
}

fn sq_dist(x: &Mat, i: usize, j: usize) -> f64 {
    x.row(i)
        .iter()
        .zip(x.row(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Binary K-nearest-neighbour graph (Euclidean), symmetrized by union.
///
/// Exact distance ties are broken toward the lower index; ties at the K-th
/// neighbour boundary are logged.
pub fn knn_graph(x: &FeatureMatrix, k: usize) -> Result<SparseAdjacency> {
    let data = x.data();
    let n = data.nrows();
    if k == 0 || k >= n {
        return Err(HmvcError::InvalidParameter(format!(
            "knn needs 1 <= K < N, got K={k}, N={n}"
        )));
    }
    let mut triplets = Vec::with_capacity(2 * n * k);
    let mut boundary_ties = 0usize;
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i).map(|j| (sq_dist(data, i, j), j)));
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if order.len() > k && order[k].0 == order[k - 1].0 {
            boundary_ties += 1;
        }
        for &(_, j) in &order[..k] {
            triplets.push((i, j, 1.0));
        }
    }
    if boundary_ties > 0 {
        log::warn!("knn graph: {boundary_ties} rows had distance ties at the K-th neighbour");
    }
    SparseAdjacency::from_edges(n, triplets, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn csv_shapes_and_errors() {
        let m = parse_csv_matrix(Cursor::new("1,2\n3,4\n\n5,6\n"), false).unwrap();
        assert_eq!(m.shape(), (3, 2));
        assert_eq!(m[(2, 1)], 6.0);
        let h = parse_csv_matrix(Cursor::new("a,b\n1,2\n"), true).unwrap();
        assert_eq!(h.shape(), (1, 2));
        assert!(matches!(
            parse_csv_matrix(Cursor::new("1,x\n"), false),
            Err(HmvcError::NonNumericEntry { .. })
        ));
        assert!(matches!(
            parse_csv_matrix(Cursor::new("1,NaN\n"), false),
            Err(HmvcError::NonFinite { .. })
        ));
        assert!(matches!(
            parse_csv_matrix(Cursor::new("1,inf\n"), false),
            Err(HmvcError::NonFinite { .. })
        ));
        assert!(matches!(
            parse_csv_matrix(Cursor::new("1,2\n3\n"), false),
            Err(HmvcError::RaggedRow { .. })
        ));
    }

    #[test]
    fn row_count_mismatch() {
        let a = FeatureMatrix::new(Mat::zeros(100, 3), 0).unwrap();
        let b = FeatureMatrix::new(Mat::zeros(99, 3), 1).unwrap();
        assert!(matches!(
            MultiViewDataset::new(vec![a, b], vec![]),
            Err(HmvcError::RowCountMismatch {
                view: 1,
                expected: 100,
                found: 99
            })
        ));
    }

    #[test]
    fn empty_view_rejected() {
        assert!(matches!(
            FeatureMatrix::new(Mat::zeros(0, 3), 2),
            Err(HmvcError::EmptyView(2))
        ));
    }

    #[test]
    fn zero_rows_flagged() {
        let m = Mat::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 2.0]);
        assert_eq!(FeatureMatrix::new(m, 0).unwrap().zero_rows(), &[1]);
    }

    #[test]
    fn edge_list_validation() {
        let edges = parse_edge_list(Cursor::new("0 1\n1 2 0.5 # comment\n\n")).unwrap();
        assert_eq!(edges, vec![(0, 1, 1.0), (1, 2, 0.5)]);
        assert!(matches!(
            SparseAdjacency::from_edges(3, vec![(0, 3, 1.0)], true),
            Err(HmvcError::NodeIdOutOfRange { id: 3, n: 3 })
        ));
        assert!(matches!(
            SparseAdjacency::from_edges(3, vec![(0, 1, 1.0)], false),
            Err(HmvcError::AsymmetricWeightsBeyondTolerance { .. })
        ));
        assert!(matches!(
            SparseAdjacency::from_edges(3, vec![(0, 1, -1.0)], true),
            Err(HmvcError::NegativeWeight { .. })
        ));
        let sym = SparseAdjacency::from_edges(3, vec![(0, 1, 1.0), (1, 0, 2.0)], true).unwrap();
        assert_eq!(sym.weight(0, 1), 2.0);
        assert_eq!(sym.weight(1, 0), 2.0);
    }

    #[test]
    fn labels_must_cover_classes() {
        let ds = MultiViewDataset::new(
            vec![FeatureMatrix::new(Mat::zeros(3, 1), 0).unwrap()],
            vec![],
        )
        .unwrap();
        assert!(ds.clone().with_labels(vec![0, 2, 2]).is_err());
        assert!(ds.clone().with_labels(vec![0, 1]).is_err());
        let ok = ds.with_labels(vec![1, 0, 1]).unwrap();
        assert_eq!(ok.n_clusters(), Some(2));
    }

    #[test]
    fn shared_and_per_view_layouts() {
        let f = |v| FeatureMatrix::new(Mat::from_element(4, 2, 1.0), v).unwrap();
        let g = SparseAdjacency::from_edges(4, vec![(0, 1, 1.0)], true).unwrap();
        let shared = MultiViewDataset::new(vec![f(0), f(1)], vec![g.clone()]).unwrap();
        assert_eq!(shared.layout(), AdjacencyLayout::Shared);
        assert_eq!(shared.adjacency_for(1), Some(&g));
        let per = MultiViewDataset::new(vec![f(0), f(1)], vec![g.clone(), g.clone()]).unwrap();
        assert_eq!(per.layout(), AdjacencyLayout::PerView);
        assert!(MultiViewDataset::new(vec![f(0), f(1), f(2)], vec![g.clone(), g]).is_err());
    }

    #[test]
    fn two_moons_contract() {
        let ds = generate_two_moons(200, 0.05, 7).unwrap();
        assert_eq!(ds.view(0).data().shape(), (200, 2));
        let labels = ds.labels().unwrap();
        assert_eq!(labels.iter().filter(|&&l| l == 0).count(), 100);
        let again = generate_two_moons(200, 0.05, 7).unwrap();
        assert_eq!(ds.view(0).data(), again.view(0).data());
        assert!(generate_two_moons(201, 0.05, 7).is_err());
        assert!(generate_two_moons(10, -1.0, 7).is_err());
    }

    #[test]
    fn two_moons_noiseless_on_circles() {
        for seed in [0, 99] {
            let ds = generate_two_moons(50, 0.0, seed).unwrap();
            let x = ds.view(0).data();
            for i in 0..50 {
                let (cx, cy) = if i < 25 { (0.0, 0.0) } else { (1.0, 0.5) };
                let r = ((x[(i, 0)] - cx).powi(2) + (x[(i, 1)] - cy).powi(2)).sqrt();
                assert!((r - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn knn_collinear_path() {
        let x = FeatureMatrix::new(Mat::from_row_slice(3, 1, &[0.0, 1.0, 2.0]), 0).unwrap();
        let g = knn_graph(&x, 1).unwrap();
        let edges: Vec<_> = g.undirected_edges().map(|(i, j, _)| (i, j)).collect();
        assert_eq!(edges, vec![(0, 1), (1, 2)]);
        assert!(knn_graph(&x, 3).is_err());
        assert!(knn_graph(&x, 0).is_err());
    }

    #[test]
    fn gaussian_views_shapes() {
        let ds = generate_gaussian_views(10, 3, &[5, 4], 4.0, 1).unwrap();
        assert_eq!(ds.n_views(), 2);
        assert_eq!(ds.n_samples(), 30);
        assert_eq!(ds.view(1).n_cols(), 4);
        assert_eq!(ds.n_clusters(), Some(3));
        assert!(generate_gaussian_views(10, 3, &[2], 4.0, 1).is_err());
    }
}
