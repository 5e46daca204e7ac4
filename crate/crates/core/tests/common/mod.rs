#![allow(dead_code)]

use hmvc_core::dataset::{FeatureMatrix, SparseAdjacency};
use hmvc_core::linalg::Mat;
use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn features(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureMatrix {
    FeatureMatrix::new(gaussian(rng, n, d), 0).unwrap()
}

/// Connected random weighted graph: a ring plus random chords.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, density: f64) -> SparseAdjacency {
    let mut edges = Vec::new();
    for i in 0..n {
        edges.push((i, (i + 1) % n, rng.random_range(0.5..2.0)));
    }
    for i in 0..n {
        for j in i + 2..n {
            if rng.random::<f64>() < density {
                edges.push((i, j, rng.random_range(0.1..3.0)));
            }
        }
    }
    SparseAdjacency::from_edges(n, edges, true).unwrap()
}

/// Dense adjacency with explicit loops.
pub fn dense(adj: &SparseAdjacency) -> Mat {
    let n = adj.n_nodes();
    let mut a = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = adj.weight(i, j);
        }
    }
    a
}

/// `D^{-1/2}(A + I)D^{-1/2}` by scalar loops.
pub fn oracle_normalized_with_loops(adj: &SparseAdjacency) -> Mat {
    let n = adj.n_nodes();
    let mut a = dense(adj);
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    let mut deg = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            deg[i] += a[(i, j)];
        }
    }
    Mat::from_fn(n, n, |i, j| a[(i, j)] / (deg[i].sqrt() * deg[j].sqrt()))
}

/// `(cos + 1)/2` off the diagonal, computed entry by entry.
pub fn oracle_cosine(x: &Mat) -> Mat {
    let n = x.nrows();
    let d = x.ncols();
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            return 0.0;
        }
        let mut dot = 0.0;
        let mut ni = 0.0;
        let mut nj = 0.0;
        for k in 0..d {
            dot += x[(i, k)] * x[(j, k)];
            ni += x[(i, k)] * x[(i, k)];
            nj += x[(j, k)] * x[(j, k)];
        }
        (dot / (ni.sqrt() * nj.sqrt()) + 1.0) / 2.0
    })
}

pub fn oracle_sym_normalize(w: &Mat) -> Mat {
    let n = w.nrows();
    let deg: Vec<f64> = (0..n).map(|i| (0..n).map(|j| w[(i, j)]).sum()).collect();
    Mat::from_fn(n, n, |i, j| w[(i, j)] / (deg[i] * deg[j]).sqrt())
}

pub fn oracle_row_normalize(w: &Mat) -> Mat {
    let n = w.nrows();
    let deg: Vec<f64> = (0..n).map(|i| (0..n).map(|j| w[(i, j)]).sum()).collect();
    Mat::from_fn(n, n, |i, j| w[(i, j)] / deg[i])
}

pub fn matmul_loops(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.ncols(), b.nrows());
    Mat::from_fn(a.nrows(), b.ncols(), |i, j| (0..a.ncols()).map(|k| a[(i, k)] * b[(k, j)]).sum())
}

/// `U f(Λ) Uᵀ` for symmetric `m`.
pub fn spectral_apply(m: &Mat, f: impl Fn(f64) -> f64) -> Mat {
    let eig = SymmetricEigen::new(m.clone());
    let mut out = Mat::zeros(m.nrows(), m.ncols());
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        let u = eig.eigenvectors.column(k);
        out += u * u.transpose() * f(l);
    }
    out
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
}

pub fn max_diff(a: &Mat, b: &Mat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Frobenius² by loops.
pub fn sq(m: &Mat) -> f64 {
    let mut s = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            s += m[(i, j)] * m[(i, j)];
        }
    }
    s
}

/// Raw per-view data of the learning problem: dictionary `B` (m×d), samples `H` (N×d), prior `F` (m×N).
#[derive(Clone)]
pub struct RawView {
    pub basis: Mat,
    pub target: Mat,
    pub prior: Mat,
}

/// The full objective, summed entry by entry:
/// `Σ γᵛ(‖Hᵀ − BᵀSᵛ‖² + α‖Sᵛ − F‖²) + β‖S − ΣγᵛSᵛ‖² + μ‖S‖²`.
pub fn oracle_objective(
    views: &[RawView],
    graphs: &[Mat],
    consensus: &Mat,
    gamma: &[f64],
    alpha: f64,
    beta: f64,
    mu: f64,
) -> f64 {
    let (m, n) = consensus.shape();
    let mut total = 0.0;
    for (v, view) in views.iter().enumerate() {
        let d = view.basis.ncols();
        let mut rec = 0.0;
        for f in 0..d {
            for j in 0..n {
                let mut bs = 0.0;
                for a in 0..m {
                    bs += view.basis[(a, f)] * graphs[v][(a, j)];
                }
                let r = view.target[(j, f)] - bs;
                rec += r * r;
            }
        }
        let mut gap = 0.0;
        for a in 0..m {
            for j in 0..n {
                let r = graphs[v][(a, j)] - view.prior[(a, j)];
                gap += r * r;
            }
        }
        total += gamma[v] * (rec + alpha * gap);
    }
    let mut fusion = 0.0;
    let mut reg = 0.0;
    for a in 0..m {
        for j in 0..n {
            let mix: f64 = (0..views.len()).map(|v| gamma[v] * graphs[v][(a, j)]).sum();
            fusion += (consensus[(a, j)] - mix).powi(2);
            reg += consensus[(a, j)].powi(2);
        }
    }
    total + beta * fusion + mu * reg
}

/// Central-difference gradient of `f` at `x`.
pub fn fd_gradient(x: &Mat, h: f64, mut f: impl FnMut(&Mat) -> f64) -> Mat {
    let mut grad = Mat::zeros(x.nrows(), x.ncols());
    let mut probe = x.clone();
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            let orig = probe[(i, j)];
            probe[(i, j)] = orig + h;
            let up = f(&probe);
            probe[(i, j)] = orig - h;
            let down = f(&probe);
            probe[(i, j)] = orig;
            grad[(i, j)] = (up - down) / (2.0 * h);
        }
    }
    grad
}

pub fn random_simplex(rng: &mut ChaCha8Rng, v: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..v).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..k)).collect()
}

/// Every permutation of `0..k`.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Same partition up to renaming of the labels.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len()
        && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

pub mod metrics {
    //! Brute-force metric oracles.
    use super::permutations;

    fn distinct(x: &[usize]) -> Vec<usize> {
        let mut v = x.to_vec();
        v.sort();
        v.dedup();
        v
    }

    /// Best matching fraction over every injective relabeling of the smaller label set.
    pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
        let p = distinct(pred);
        let t = distinct(truth);
        let k = p.len().max(t.len());
        let mut best = 0usize;
        for perm in permutations(k) {
            // cluster p[i] ↦ class slot perm[i]
            let hits = pred
                .iter()
                .zip(truth)
                .filter(|(a, b)| {
                    let i = p.iter().position(|x| x == *a).unwrap();
                    let slot = perm[i];
                    slot < t.len() && t[slot] == **b
                })
                .count();
            best = best.max(hits);
        }
        best as f64 / pred.len() as f64
    }

    /// Rand-index style counts over all `i < j` pairs.
    pub fn ari(pred: &[usize], truth: &[usize]) -> f64 {
        let n = pred.len();
        let (mut both, mut only_p, mut only_t, mut none) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                match (pred[i] == pred[j], truth[i] == truth[j]) {
                    (true, true) => both += 1.0,
                    (true, false) => only_p += 1.0,
                    (false, true) => only_t += 1.0,
                    (false, false) => none += 1.0,
                }
            }
        }
        let pairs = both + only_p + only_t + none;
        let same_p = both + only_p;
        let same_t = both + only_t;
        let expected = same_p * same_t / pairs;
        let max = (same_p + same_t) / 2.0;
        if max == expected {
            return 1.0;
        }
        (both - expected) / (max - expected)
    }

    pub fn nmi(pred: &[usize], truth: &[usize]) -> f64 {
        let n = pred.len() as f64;
        let p = distinct(pred);
        let t = distinct(truth);
        let count = |f: &dyn Fn(usize) -> bool| (0..pred.len()).filter(|&i| f(i)).count() as f64;
        let mut mi = 0.0;
        let mut hp = 0.0;
        let mut ht = 0.0;
        for &a in &p {
            let na = count(&|i| pred[i] == a);
            hp -= na / n * (na / n).ln();
            for &b in &t {
                let nab = count(&|i| pred[i] == a && truth[i] == b);
                let nb = count(&|i| truth[i] == b);
                if nab > 0.0 {
                    mi += nab / n * ((nab / n) / ((na / n) * (nb / n))).ln();
                }
            }
        }
        for &b in &t {
            let nb = count(&|i| truth[i] == b);
            ht -= nb / n * (nb / n).ln();
        }
        if hp + ht == 0.0 {
            return 1.0;
        }
        2.0 * mi / (hp + ht)
    }

    /// Macro-F1 over classes, maximized over injective cluster ↔ class matchings.
    pub fn f1(pred: &[usize], truth: &[usize]) -> f64 {
        let p = distinct(pred);
        let t = distinct(truth);
        let k = p.len().max(t.len());
        let mut best = 0.0f64;
        for perm in permutations(k) {
            let mut total = 0.0;
            for (ti, &class) in t.iter().enumerate() {
                // which cluster slot maps to class slot ti
                let Some(ci) = perm.iter().position(|&s| s == ti) else { continue };
                if ci >= p.len() {
                    continue;
                }
                let cluster = p[ci];
                let tp = (0..pred.len()).filter(|&i| pred[i] == cluster && truth[i] == class).count() as f64;
                let np = pred.iter().filter(|&&x| x == cluster).count() as f64;
                let nt = truth.iter().filter(|&&x| x == class).count() as f64;
                if tp > 0.0 {
                    let precision = tp / np;
                    let recall = tp / nt;
                    total += 2.0 * precision * recall / (precision + recall);
                }
            }
            best = best.max(total / t.len() as f64);
        }
        best
    }

    pub fn purity(pred: &[usize], truth: &[usize]) -> f64 {
        let mut hits = 0usize;
        for &a in &distinct(pred) {
            let best = distinct(truth)
                .iter()
                .map(|&b| (0..pred.len()).filter(|&i| pred[i] == a && truth[i] == b).count())
                .max()
                .unwrap_or(0);
            hits += best;
        }
        hits as f64 / pred.len() as f64
    }
}
