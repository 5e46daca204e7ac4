//! Turning learned graphs into labels, and the five evaluation metrics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::max_weight_assignment;
use crate::error::{HmvcError, Result};
use crate::linalg::{sym_eigen_desc, Mat};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
    /// Convergence threshold on the summed squared centroid shift.
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            restarts: 50,
            max_iter: 300,
            tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Mat,
    pub inertia: f64,
    pub iterations: usize,
    pub empty_cluster_repairs: usize,
    /// Restart that produced this result.
    pub restart: usize,
}

fn sq_dist_to(points: &Mat, i: usize, centers: &Mat, k: usize) -> f64 {
    points
        .row(i)
        .iter()
        .zip(centers.row(k).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn plus_plus_init(points: &Mat, c: usize, rng: &mut ChaCha8Rng) -> Mat {
    let n = points.nrows();
    let mut centers = Mat::zeros(c, points.ncols());
    let first = rng.random_range(0..n);
    centers.set_row(0, &points.row(first));
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist_to(points, i, &centers, 0)).collect();
    for k in 1..c {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.set_row(k, &points.row(pick));
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist_to(points, i, &centers, k));
        }
    }
    centers
}

/// Nearest centre; ties keep the current label when it is among the minimizers, else the lowest index.
fn assign(points: &Mat, centers: &Mat, current: Option<&[usize]>) -> Vec<usize> {
    (0..points.nrows())
        .map(|i| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for k in 0..centers.nrows() {
                let d = sq_dist_to(points, i, centers, k);
                if d < best_d {
                    best_d = d;
                    best = k;
                }
            }
            if let Some(cur) = current {
                if sq_dist_to(points, i, centers, cur[i]) <= best_d {
                    return cur[i];
                }
            }
            best
        })
        .collect()
}

/// Moves the worst-fit point of a multi-member cluster into each empty cluster.
fn repair_empty(points: &Mat, centers: &Mat, labels: &mut [usize], c: usize) -> usize {
    let mut repairs = 0;
    loop {
        let mut sizes = vec![0usize; c];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return repairs;
        };
        let mut far = None;
        let mut far_d = f64::NEG_INFINITY;
        for i in 0..points.nrows() {
            if sizes[labels[i]] > 1 {
                let d = sq_dist_to(points, i, centers, labels[i]);
                if d > far_d {
                    far_d = d;
                    far = Some(i);
                }
            }
        }
        let Some(i) = far else {
            return repairs;
        };
        log::debug!("k-means: reseeding empty cluster {empty} with point {i}");
        labels[i] = empty;
        repairs += 1;
    }
}

fn centroids(points: &Mat, labels: &[usize], c: usize) -> Mat {
    let mut sums = Mat::zeros(c, points.ncols());
    let mut counts = vec![0usize; c];
    for (i, &l) in labels.iter().enumerate() {
        let mut row = sums.row_mut(l);
        row += points.row(i);
        counts[l] += 1;
    }
    for (k, &cnt) in counts.iter().enumerate() {
        if cnt > 0 {
            sums.row_mut(k).scale_mut(1.0 / cnt as f64);
        }
    }
    sums
}

fn lloyd(points: &Mat, c: usize, config: &KMeansConfig, seed: u64, restart: usize) -> KMeansResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    let mut centers = plus_plus_init(points, c, &mut rng);
    let mut labels = assign(points, &centers, None);
    let mut repairs = 0;
    let mut iterations = 0;
    for it in 1..=config.max_iter {
        iterations = it;
        repairs += repair_empty(points, &centers, &mut labels, c);
        let next = centroids(points, &labels, c);
        let shift: f64 = next.iter().zip(centers.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        centers = next;
        let relabeled = assign(points, &centers, Some(&labels));
        let changed = relabeled != labels;
        labels = relabeled;
        if !changed && shift <= config.tol {
            break;
        }
    }
    let inertia = (0..points.nrows())
        .map(|i| sq_dist_to(points, i, &centers, labels[i]))
        .sum();
    KMeansResult {
        labels,
        centroids: centers,
        inertia,
        iterations,
        empty_cluster_repairs: repairs,
        restart,
    }
}

/// Lloyd's algorithm with k-means++ seeding; the best-inertia restart wins, lowest index on ties.
pub fn kmeans(points: &Mat, c: usize, seed: u64) -> Result<KMeansResult> {
    kmeans_with(points, c, seed, &KMeansConfig::default())
}

pub fn kmeans_with(points: &Mat, c: usize, seed: u64, config: &KMeansConfig) -> Result<KMeansResult> {
    if c == 0 || c > points.nrows() {
        return Err(HmvcError::InvalidParameter(format!(
            "k-means needs 1 <= c <= N, got c={c}, N={}",
            points.nrows()
        )));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(HmvcError::NonFinite { row: 0, column: 0 });
    }
    let runs: Vec<KMeansResult> = (0..config.restarts.max(1))
        .into_par_iter()
        .map(|r| lloyd(points, c, config, seed, r))
        .collect();
    Ok(runs
        .into_iter()
        .reduce(|best, run| if run.inertia < best.inertia { run } else { best })
        .expect("at least one restart"))
}

fn row_normalize(m: &mut Mat) {
    for mut row in m.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
}

/// Normalized spectral clustering on an affinity matrix.
pub fn spectral_embedding(s: &Mat, c: usize) -> Result<Mat> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(HmvcError::DimensionMismatch("affinity must be square".into()));
    }
    if c < 2 || c > n {
        return Err(HmvcError::InvalidParameter(format!(
            "spectral clustering needs 2 <= c <= N, got c={c}, N={n}"
        )));
    }
    let sym = Mat::from_fn(n, n, |i, j| (0.5 * (s[(i, j)] + s[(j, i)])).max(0.0));
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = sym.row(i).sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let normalized = Mat::from_fn(n, n, |i, j| sym[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
    let (values, vectors) = sym_eigen_desc(&normalized);
    if !(values[0] > 1e-12) {
        return Err(HmvcError::DegenerateEigenbasis { wanted: c });
    }
    let mut embedding = vectors.columns(0, c).into_owned();
    row_normalize(&mut embedding);
    Ok(embedding)
}

pub fn spectral_cluster(s: &Mat, c: usize, seed: u64) -> Result<Vec<usize>> {
    let embedding = spectral_embedding(s, c)?;
    Ok(kmeans(&embedding, c, seed)?.labels)
}

/// Top `c` left singular vectors of a tall sample × anchor matrix.
pub fn left_singular_vectors(z: &Mat, c: usize) -> Result<Mat> {
    let gram = z.transpose() * z;
    let (values, vectors) = sym_eigen_desc(&gram);
    let tol = values[0].max(0.0) * 1e-12;
    if values.len() < c || values[c - 1] <= tol {
        return Err(HmvcError::DegenerateEigenbasis { wanted: c });
    }
    let mut u = z * vectors.columns(0, c);
    for k in 0..c {
        u.column_mut(k).scale_mut(1.0 / values[k].sqrt());
    }
    Ok(u)
}

/// Truncated SVD of the anchor graph followed by k-means on the singular vectors.
pub fn anchor_cluster(z: &Mat, c: usize, seed: u64) -> Result<Vec<usize>> {
    if c == 0 || c > z.ncols() {
        return Err(HmvcError::InvalidParameter(format!(
            "anchor clustering needs 1 <= c <= m, got c={c}, m={}",
            z.ncols()
        )));
    }
    let u = left_singular_vectors(z, c)?;
    Ok(kmeans(&u, c, seed)?.labels)
}

/// Cluster × class counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Contingency {
    counts: Vec<Vec<usize>>,
    cluster_sizes: Vec<usize>,
    class_sizes: Vec<usize>,
    n: usize,
}

fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::BTreeMap::new();
    for &l in labels {
        let next = map.len();
        map.entry(l).or_insert(next);
    }
    (labels.iter().map(|l| map[l]).collect(), map.len())
}

impl Contingency {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(HmvcError::LengthMismatch(pred.len(), truth.len()));
        }
        let (p, kp) = compact(pred);
        let (t, kt) = compact(truth);
        let mut counts = vec![vec![0usize; kt]; kp];
        for (&a, &b) in p.iter().zip(&t) {
            counts[a][b] += 1;
        }
        let cluster_sizes = counts.iter().map(|r| r.iter().sum()).collect();
        let class_sizes = (0..kt).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        Ok(Contingency {
            counts,
            cluster_sizes,
            class_sizes,
            n: pred.len(),
        })
    }

    fn as_matrix(&self, f: impl Fn(usize, usize) -> f64) -> Mat {
        Mat::from_fn(self.cluster_sizes.len(), self.class_sizes.len(), f)
    }
}

fn comb2(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

fn entropy(sizes: &[usize], n: usize) -> f64 {
    sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n as f64;
            -p * p.ln()
        })
        .sum()
}

/// Fraction of samples matched under the best one-to-one cluster → class mapping.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let ct = Contingency::new(pred, truth)?;
    if ct.n == 0 {
        return Ok(1.0);
    }
    let w = ct.as_matrix(|i, j| ct.counts[i][j] as f64);
    let matched: f64 = max_weight_assignment(&w)
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| w[(i, j)]))
        .sum();
    Ok(matched / ct.n as f64)
}

/// Mutual information normalized by the arithmetic mean of the two entropies.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let ct = Contingency::new(pred, truth)?;
    let n = ct.n as f64;
    let hu = entropy(&ct.cluster_sizes, ct.n);
    let hv = entropy(&ct.class_sizes, ct.n);
    if hu + hv == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (i, row) in ct.counts.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (n * nij / (ct.cluster_sizes[i] as f64 * ct.class_sizes[j] as f64)).ln();
            }
        }
    }
    Ok((2.0 * mi / (hu + hv)).clamp(0.0, 1.0))
}

/// Adjusted Rand index (pair counting, hypergeometric expectation).
pub fn ari(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let ct = Contingency::new(pred, truth)?;
    let index: f64 = ct.counts.iter().flatten().map(|&x| comb2(x)).sum();
    let a: f64 = ct.cluster_sizes.iter().map(|&x| comb2(x)).sum();
    let b: f64 = ct.class_sizes.iter().map(|&x| comb2(x)).sum();
    let total = comb2(ct.n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = a * b / total;
    let max_index = 0.5 * (a + b);
    if max_index == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max_index - expected))
}

/// Macro-F1 over classes under the one-to-one cluster ↔ class matching that maximizes it.
/// Classes left unmatched score 0.
pub fn f1(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let ct = Contingency::new(pred, truth)?;
    if ct.n == 0 {
        return Ok(1.0);
    }
    let scores = ct.as_matrix(|i, j| {
        let tp = ct.counts[i][j] as f64;
        if tp == 0.0 {
            0.0
        } else {
            2.0 * tp / (ct.cluster_sizes[i] as f64 + ct.class_sizes[j] as f64)
        }
    });
    let total: f64 = max_weight_assignment(&scores)
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| scores[(i, j)]))
        .sum();
    Ok(total / ct.class_sizes.len() as f64)
}

/// `Σ_k max_j |cluster_k ∩ class_j| / N`.
pub fn purity(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let ct = Contingency::new(pred, truth)?;
    if ct.n == 0 {
        return Ok(1.0);
    }
    let hits: usize = ct
        .counts
        .iter()
        .map(|row| row.iter().copied().max().unwrap_or(0))
        .sum();
    Ok(hits as f64 / ct.n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
    pub f1: f64,
    pub pur: f64,
}

pub fn evaluate(pred: &[usize], truth: &[usize]) -> Result<Metrics> {
    Ok(Metrics {
        acc: accuracy(pred, truth)?,
        nmi: nmi(pred, truth)?,
        ari: ari(pred, truth)?,
        f1: f1(pred, truth)?,
        pur: purity(pred, truth)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringReport {
    pub labels: Vec<usize>,
    pub metrics: Option<Metrics>,
    pub elapsed_seconds: f64,
}
