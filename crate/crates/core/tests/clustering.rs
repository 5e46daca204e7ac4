mod common;

use common::*;
use hmvc_core::clustering::{
    accuracy, anchor_cluster, ari, evaluate, f1, kmeans, left_singular_vectors, nmi, purity, spectral_cluster,
    Contingency,
};
use hmvc_core::error::HmvcError;
use hmvc_core::linalg::Mat;
use rand::seq::SliceRandom;
use rand::Rng;

#[test]
fn metrics_match_brute_force_oracles() {
    let mut r = rng(100);
    for _ in 0..60 {
        let n = r.random_range(2..14);
        let kp = r.random_range(1..5);
        let kt = r.random_range(1..5);
        let pred = random_labels(&mut r, n, kp);
        let truth = random_labels(&mut r, n, kt);
        let m = evaluate(&pred, &truth).unwrap();
        assert!((m.acc - metrics::accuracy(&pred, &truth)).abs() < 1e-12, "acc {pred:?} {truth:?}");
        assert!((m.nmi - metrics::nmi(&pred, &truth).clamp(0.0, 1.0)).abs() < 1e-12, "nmi {pred:?} {truth:?}");
        assert!((m.ari - metrics::ari(&pred, &truth)).abs() < 1e-12, "ari {pred:?} {truth:?}");
        assert!((m.f1 - metrics::f1(&pred, &truth)).abs() < 1e-12, "f1 {pred:?} {truth:?}");
        assert!((m.pur - metrics::purity(&pred, &truth)).abs() < 1e-12, "pur {pred:?} {truth:?}");
    }
}

#[test]
fn hand_examples() {
    assert_eq!(accuracy(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap(), 0.75);
    let pred = [0; 6];
    let truth = [0, 0, 0, 1, 1, 1];
    assert_eq!(ari(&pred, &truth).unwrap(), 0.0);
    assert_eq!(purity(&pred, &truth).unwrap(), 0.5);
    let l = [3, 3, 1, 0, 0, 1, 2];
    let m = evaluate(&l, &l).unwrap();
    for v in [m.acc, m.nmi, m.ari, m.f1, m.pur] {
        assert!((v - 1.0).abs() < 1e-12);
    }
}

#[test]
fn metrics_ignore_label_names() {
    let mut r = rng(101);
    for _ in 0..20 {
        let n = r.random_range(5..30);
        let pred = random_labels(&mut r, n, 4);
        let truth = random_labels(&mut r, n, 3);
        let mut perm: Vec<usize> = (0..4).collect();
        perm.shuffle(&mut r);
        let renamed: Vec<usize> = pred.iter().map(|&l| perm[l] + 10).collect();
        let a = evaluate(&pred, &truth).unwrap();
        let b = evaluate(&renamed, &truth).unwrap();
        for (x, y) in [(a.acc, b.acc), (a.nmi, b.nmi), (a.ari, b.ari), (a.f1, b.f1), (a.pur, b.pur)] {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn correcting_a_label_never_lowers_accuracy() {
    let mut r = rng(102);
    let truth: Vec<usize> = (0..24).map(|i| i / 8).collect();
    assert_eq!(accuracy(&truth, &truth).unwrap(), 1.0);
    for _ in 0..30 {
        let mut pred = truth.clone();
        for _ in 0..6 {
            let i = r.random_range(0..24);
            pred[i] = r.random_range(0..3);
        }
        let before = accuracy(&pred, &truth).unwrap();
        if let Some(i) = (0..24).find(|&i| pred[i] != truth[i]) {
            pred[i] = truth[i];
            assert!(accuracy(&pred, &truth).unwrap() >= before - 1e-12);
        }
    }
}

#[test]
fn length_mismatch_is_reported() {
    assert!(matches!(evaluate(&[0, 1], &[0]), Err(HmvcError::LengthMismatch(2, 1))));
    assert!(Contingency::new(&[0], &[]).is_err());
    assert!(f1(&[0, 1, 2], &[0, 1]).is_err());
    assert!(nmi(&[], &[0]).is_err());
}

fn block_affinity(labels: &[usize], inside: f64, outside: f64) -> Mat {
    let n = labels.len();
    Mat::from_fn(n, n, |i, j| if labels[i] == labels[j] { inside } else { outside })
}

#[test]
fn block_diagonal_graph_gives_exact_labels() {
    let truth: Vec<usize> = [5, 7, 9].iter().enumerate().flat_map(|(k, &s)| vec![k; s]).collect();
    let s = block_affinity(&truth, 1.0, 0.0);
    let pred = spectral_cluster(&s, 3, 0).unwrap();
    assert!(same_partition(&pred, &truth));
}

#[test]
fn spectral_clustering_is_permutation_equivariant() {
    let mut r = rng(103);
    let truth: Vec<usize> = (0..18).map(|i| i / 6).collect();
    let mut s = block_affinity(&truth, 0.8, 0.1);
    for v in s.iter_mut() {
        *v += 0.05 * r.random::<f64>();
    }
    let s = &s + s.transpose();
    let mut perm: Vec<usize> = (0..18).collect();
    perm.shuffle(&mut r);
    let permuted = Mat::from_fn(18, 18, |i, j| s[(perm[i], perm[j])]);
    let a = spectral_cluster(&s, 3, 1).unwrap();
    let b = spectral_cluster(&permuted, 3, 1).unwrap();
    let a_permuted: Vec<usize> = perm.iter().map(|&p| a[p]).collect();
    assert!(same_partition(&a_permuted, &b));
}

#[test]
fn noisy_blocks_are_recovered() {
    let mut r = rng(104);
    let truth: Vec<usize> = (0..60).map(|i| i / 20).collect();
    let base = block_affinity(&truth, 0.9, 0.05);
    let noise = Mat::from_fn(60, 60, |_, _| 0.1 * r.random::<f64>());
    let s = &base + (&noise + noise.transpose()) * 0.5;
    let pred = spectral_cluster(&s, 3, 7).unwrap();
    assert!(ari(&pred, &truth).unwrap() > 0.95);
}

#[test]
fn kmeans_beats_random_assignments() {
    let mut r = rng(105);
    let mut pts = gaussian(&mut r, 45, 3);
    for i in 0..45 {
        pts[(i, i % 3)] += 3.0;
    }
    let res = kmeans(&pts, 3, 11).unwrap();
    for _ in 0..1000 {
        let labels = random_labels(&mut r, 45, 3);
        let mut inertia = 0.0;
        for k in 0..3 {
            let members: Vec<usize> = (0..45).filter(|&i| labels[i] == k).collect();
            if members.is_empty() {
                continue;
            }
            let centre = pts.select_rows(&members).row_mean();
            for &i in &members {
                inertia += (pts.row(i) - &centre).norm_squared();
            }
        }
        assert!(res.inertia <= inertia + 1e-9);
    }
    // reported inertia agrees with the reported centroids
    let recomputed: f64 = (0..45).map(|i| (pts.row(i) - res.centroids.row(res.labels[i])).norm_squared()).sum();
    assert!((recomputed - res.inertia).abs() < 1e-9);
}

#[test]
fn kmeans_is_deterministic_per_seed() {
    let mut r = rng(106);
    let pts = gaussian(&mut r, 40, 2);
    assert_eq!(kmeans(&pts, 4, 3).unwrap(), kmeans(&pts, 4, 3).unwrap());
}

#[test]
fn identical_points_trigger_one_repair() {
    let pts = Mat::from_element(5, 3, -2.0);
    let res = kmeans(&pts, 2, 9).unwrap();
    assert_eq!(res.empty_cluster_repairs, 1);
    assert_eq!(res.inertia, 0.0);
}

#[test]
fn singleton_groups_are_separated() {
    let pts = Mat::from_row_slice(4, 1, &[0.0, 100.0, 200.0, 300.0]);
    let res = kmeans(&pts, 4, 0).unwrap();
    assert!(same_partition(&res.labels, &[0, 1, 2, 3]));
}

#[test]
fn left_singular_vectors_match_svd() {
    let mut r = rng(107);
    let z = gaussian(&mut r, 12, 5).abs();
    let u = left_singular_vectors(&z, 3).unwrap();
    let svd = z.clone().svd(true, false);
    let mut order: Vec<usize> = (0..5).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let reference = svd.u.unwrap();
    for (k, &idx) in order.iter().take(3).enumerate() {
        let dot = u.column(k).dot(&reference.column(idx));
        assert!((dot.abs() - 1.0).abs() < 1e-8, "column {k}: {dot}");
    }
}

#[test]
fn anchor_clustering_recovers_blocks() {
    let truth: Vec<usize> = (0..30).map(|i| i / 10).collect();
    let mut r = rng(108);
    let z = Mat::from_fn(30, 6, |i, j| if j / 2 == truth[i] { 1.0 } else { 0.02 * r.random::<f64>() });
    let pred = anchor_cluster(&z, 3, 0).unwrap();
    assert_eq!(accuracy(&pred, &truth).unwrap(), 1.0);
}
