//! Minimum-cost perfect matching on a square cost matrix.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::matrix::Matrix;

/// Hungarian algorithm (shortest augmenting paths with potentials).
///
/// Returns `assign` with row `i` matched to column `assign[i]`, minimizing
/// the total cost.
pub fn hungarian(cost: &Matrix) -> Result<Vec<usize>> {
    let n = cost.rows();
    if cost.cols() != n {
        bail!(Shape, "assignment needs a square cost matrix, got {}x{}", n, cost.cols());
    }
    if !cost.is_finite() {
        bail!(InvalidInput, "assignment costs must be finite");
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    // 1-based arrays, column 0 is a virtual source
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost.get(i0 - 1, j - 1) - u[i0] - v[j];
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
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    Ok(assign)
}

/// Maximum-weight matching, via the Hungarian algorithm on negated weights.
pub fn hungarian_max(weight: &Matrix) -> Result<Vec<usize>> {
    let mut neg = weight.clone();
    for v in neg.as_mut_slice() {
        *v = -*v;
    }
    hungarian(&neg)
}

pub fn assignment_cost(cost: &Matrix, assign: &[usize]) -> f64 {
    assign.iter().enumerate().map(|(i, &j)| cost.get(i, j)).sum()
}

#[cfg(test)]
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}
