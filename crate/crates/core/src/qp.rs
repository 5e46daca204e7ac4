//! Convex quadratic programs over the probability simplex.
//!
//! Minimizes `½ xᵀPx + qᵀx` subject to `x ≥ 0, Σx = 1` with accelerated
//! projected gradient, then polishes on the detected support with an exact
//! equality-constrained solve when that system is nonsingular.

use nalgebra::SymmetricEigen;

use crate::error::{HmvcError, Result};
use crate::linalg::{Mat, Vector};

pub const DEFAULT_KKT_TOL: f64 = 1e-8;
const MAX_ITERS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexQpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Euclidean projection onto `{x ≥ 0, Σx = 1}`.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        out.iter_mut().for_each(|x| *x /= total);
    }
    out
}

pub fn qp_objective(p: &Mat, q: &[f64], x: &[f64]) -> f64 {
    let xv = Vector::from_column_slice(x);
    let qv = Vector::from_column_slice(q);
    0.5 * xv.dot(&(p * &xv)) + qv.dot(&xv)
}

fn gradient(p: &Mat, q: &[f64], x: &[f64]) -> Vec<f64> {
    let xv = Vector::from_column_slice(x);
    let g = p * xv;
    g.iter().zip(q).map(|(a, b)| a + b).collect()
}

/// Projected-gradient mapping norm `‖x − Π(x − ∇f(x)/L)‖∞`; zero exactly at the optimum.
pub fn kkt_residual(p: &Mat, q: &[f64], x: &[f64], lipschitz: f64) -> f64 {
    let g = gradient(p, q, x);
    let step: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - gi / lipschitz).collect();
    let proj = project_to_simplex(&step);
    x.iter()
        .zip(&proj)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn lipschitz_constant(p: &Mat, q: &[f64]) -> f64 {
    let sym = (p + p.transpose()) * 0.5;
    let top = SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l));
    // a (near) linear objective still needs a step whose size keeps the projection accurate
    let scale = p.amax() + q.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    top.max(1e-6 * scale).max(f64::MIN_POSITIVE)
}

/// Exact minimizer on the affine hull of `support`, if the KKT system is nonsingular.
fn solve_on_support(p: &Mat, q: &[f64], support: &[usize]) -> Option<Vec<f64>> {
    let k = support.len();
    let mut kkt = Mat::zeros(k + 1, k + 1);
    let mut rhs = Vector::zeros(k + 1);
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            kkt[(a, b)] = p[(i, j)];
        }
        kkt[(a, k)] = 1.0;
        kkt[(k, a)] = 1.0;
        rhs[a] = -q[i];
    }
    rhs[k] = 1.0;
    let sol = kkt.lu().solve(&rhs)?;
    let mut x = vec![0.0; p.nrows()];
    for (a, &i) in support.iter().enumerate() {
        if !sol[a].is_finite() || sol[a] < 0.0 {
            return None;
        }
        x[i] = sol[a];
    }
    let total: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= total);
    Some(x)
}

/// Solves the simplex QP starting from `start` (projected onto the simplex first).
pub fn solve_simplex_qp(p: &Mat, q: &[f64], start: &[f64], tol: f64) -> Result<SimplexQpSolution> {
    let n = q.len();
    if n == 0 || p.shape() != (n, n) || start.len() != n {
        return Err(HmvcError::DimensionMismatch(format!(
            "qp with P {:?}, q {}, start {}",
            p.shape(),
            n,
            start.len()
        )));
    }
    let lipschitz = lipschitz_constant(p, q);
    let mut x = project_to_simplex(start);
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut fx = qp_objective(p, q, &x);
    let mut iterations = 0;
    let mut residual = kkt_residual(p, q, &x, lipschitz);
    while residual > tol && iterations < MAX_ITERS {
        iterations += 1;
        let g = gradient(p, q, &y);
        let step: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| yi - gi / lipschitz).collect();
        let next = project_to_simplex(&step);
        let f_next = qp_objective(p, q, &next);
        if f_next > fx {
            // adaptive restart
            t = 1.0;
            y = x.clone();
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        y = next
            .iter()
            .zip(&x)
            .map(|(a, b)| a + momentum * (a - b))
            .collect();
        x = next;
        fx = f_next;
        t = t_next;
        residual = kkt_residual(p, q, &x, lipschitz);
    }

    // Polish: exact solve on the active face, kept only if it is feasible and no worse.
    let support: Vec<usize> = (0..n).filter(|&i| x[i] > 1e-10).collect();
    if !support.is_empty() {
        if let Some(polished) = solve_on_support(p, q, &support) {
            let fp = qp_objective(p, q, &polished);
            let rp = kkt_residual(p, q, &polished, lipschitz);
            if fp <= fx && rp <= residual.max(tol) {
                x = polished;
                fx = fp;
                residual = rp;
            }
        }
    }

    if residual > tol {
        return Err(HmvcError::QpIterationLimit {
            iters: iterations,
            tol,
            residual,
        });
    }
    Ok(SimplexQpSolution {
        x,
        objective: fx,
        kkt_residual: residual,
        iterations,
    })
}
