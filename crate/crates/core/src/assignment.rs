//! Hungarian algorithm (shortest augmenting path with potentials), `O(n³)`.

use crate::linalg::Mat;

/// Minimum-cost perfect matching on a square cost matrix.
/// Returns `row_to_col` with `row_to_col[i]` the column assigned to row `i`.
pub fn min_cost_assignment(cost: &Mat) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "assignment needs a square matrix");
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; column 0 is a virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        if col_owner[j] > 0 {
            row_to_col[col_owner[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Maximum-weight matching on a rectangular matrix (padded with zeros).
/// Entry `i` is the matched column of row `i`, or `None` if it matched padding.
pub fn max_weight_assignment(weights: &Mat) -> Vec<Option<usize>> {
    let (r, c) = weights.shape();
    let n = r.max(c);
    let top = weights.iter().fold(0.0f64, |a, &b| a.max(b));
    let cost = Mat::from_fn(n, n, |i, j| {
        if i < r && j < c {
            top - weights[(i, j)]
        } else {
            top
        }
    });
    min_cost_assignment(&cost)
        .into_iter()
        .take(r)
        .map(|j| (j < c).then_some(j))
        .collect()
}
