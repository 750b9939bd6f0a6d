//! The alternating update rules and the objective they minimize.
//!
//! Everything here works on a precomputed distance tensor: one `n × c`
//! matrix per view holding `d_ik^h`.

use alloc::vec::Vec;

use super::{DistanceKind, MembershipMatrix, ViewWeights};
use crate::error::{bail, Result};
use crate::kernel::{weighted_sq, HeatKernelCoeffs};
use crate::math;
use crate::matrix::Matrix;
use crate::Centers;

fn check_centers(views: &[Matrix], centers: &[Matrix]) -> Result<()> {
    if views.len() != centers.len() {
        bail!(Shape, "{} views but {} center sets", views.len(), centers.len());
    }
    let c = centers.first().map_or(0, Matrix::rows);
    for (h, (x, a)) in views.iter().zip(centers).enumerate() {
        if a.cols() != x.cols() || a.rows() != c {
            bail!(
                Shape,
                "view {}: centers are {}x{}, expected {}x{}",
                h,
                a.rows(),
                a.cols(),
                c,
                x.cols()
            );
        }
    }
    Ok(())
}

/// Per-view `n × c` distances between samples and centers.
pub fn distance_tensor(
    views: &[Matrix],
    centers: &[Matrix],
    coeffs: &[HeatKernelCoeffs],
    kind: DistanceKind,
) -> Result<Vec<Matrix>> {
    check_centers(views, centers)?;
    if kind == DistanceKind::HeatKernel {
        if coeffs.len() != views.len() {
            bail!(Shape, "{} coefficient sets for {} views", coeffs.len(), views.len());
        }
        for (h, (x, d)) in views.iter().zip(coeffs).enumerate() {
            if d.values().shape() != x.shape() {
                bail!(Shape, "view {}: coefficient shape differs from data", h);
            }
        }
    }
    Ok(distances_unchecked(views, centers, coeffs, kind))
}

pub(crate) fn distances_unchecked(
    views: &[Matrix],
    centers: &[Matrix],
    coeffs: &[HeatKernelCoeffs],
    kind: DistanceKind,
) -> Vec<Matrix> {
    views
        .iter()
        .enumerate()
        .map(|(h, x)| {
            let a = &centers[h];
            let (n, c) = (x.rows(), a.rows());
            let mut out = Matrix::zeros(n, c);
            for i in 0..n {
                let xi = x.row(i);
                let row = out.row_mut(i);
                match kind {
                    DistanceKind::HeatKernel => {
                        let di = coeffs[h].row(i);
                        for k in 0..c {
                            row[k] = 1.0 - math::exp(-weighted_sq(xi, a.row(k), di));
                        }
                    }
                    DistanceKind::SquaredEuclidean => {
                        for k in 0..c {
                            row[k] = xi
                                .iter()
                                .zip(a.row(k))
                                .map(|(p, q)| (p - q) * (p - q))
                                .sum();
                        }
                    }
                }
            }
            out
        })
        .collect()
}

/// `Σ_h v_h^α d_ik^h`.
fn aggregated(distances: &[Matrix], weights: &[f64], alpha: f64) -> Matrix {
    let (n, c) = distances[0].shape();
    let mut agg = Matrix::zeros(n, c);
    for (d, &v) in distances.iter().zip(weights) {
        let va = math::pow_fast(v, alpha);
        for (o, x) in agg.as_mut_slice().iter_mut().zip(d.as_slice()) {
            *o += va * x;
        }
    }
    agg
}

/// Normalized negative-power weights `p_k ∝ costs_k^(-1/(q-1))`; entries with
/// zero cost share all the mass equally.
fn inverse_power_simplex(costs: &[f64], q: f64, out: &mut [f64]) {
    let zeros = costs.iter().filter(|&&x| x <= 0.0).count();
    if zeros > 0 {
        let share = 1.0 / zeros as f64;
        for (o, &x) in out.iter_mut().zip(costs) {
            *o = if x <= 0.0 { share } else { 0.0 };
        }
        return;
    }
    let e = 1.0 / (q - 1.0);
    for (k, o) in out.iter_mut().enumerate() {
        let s: f64 = costs
            .iter()
            .map(|&other| math::pow_fast(costs[k] / other, e))
            .sum();
        *o = 1.0 / s;
    }
}

/// Exact minimizer of the objective over memberships with centers and view
/// weights held fixed.
pub fn update_memberships(
    distances: &[Matrix],
    weights: &ViewWeights,
    m: f64,
    alpha: f64,
) -> MembershipMatrix {
    let agg = aggregated(distances, weights.as_slice(), alpha);
    let (n, c) = agg.shape();
    let mut u = Matrix::zeros(n, c);
    for i in 0..n {
        inverse_power_simplex(agg.row(i), m, u.row_mut(i));
    }
    MembershipMatrix::from_matrix_unchecked(u)
}

/// One fixed-point step of the center equation. Returns the new centers and
/// the `(view, cluster)` pairs whose weights all vanished; those keep their
/// previous center.
pub fn update_centers(
    views: &[Matrix],
    memberships: &MembershipMatrix,
    coeffs: &[HeatKernelCoeffs],
    current: &[Matrix],
    m: f64,
    kind: DistanceKind,
) -> (Centers, Vec<(usize, usize)>) {
    let u = memberships.as_matrix();
    let (n, c) = u.shape();
    let mut degenerate = Vec::new();
    let mut out = Vec::with_capacity(views.len());
    // The view-weight factor v_h^α is shared by every term of view h and
    // cancels in the ratio, so it is left out.
    for (h, x) in views.iter().enumerate() {
        let a = &current[h];
        let d = x.cols();
        let mut num = Matrix::zeros(c, d);
        let mut den = alloc::vec![0.0; c];
        for i in 0..n {
            let xi = x.row(i);
            for k in 0..c {
                let mut w = math::pow_fast(u.get(i, k), m);
                if kind == DistanceKind::HeatKernel {
                    w *= math::exp(-weighted_sq(xi, a.row(k), coeffs[h].row(i)));
                }
                if w == 0.0 {
                    continue;
                }
                den[k] += w;
                for (acc, &v) in num.row_mut(k).iter_mut().zip(xi) {
                    *acc += w * v;
                }
            }
        }
        for k in 0..c {
            if den[k] > 0.0 && den[k].is_finite() {
                for v in num.row_mut(k) {
                    *v /= den[k];
                }
            } else {
                num.row_mut(k).copy_from_slice(a.row(k));
                degenerate.push((h, k));
            }
        }
        out.push(num);
    }
    (out, degenerate)
}

/// Per-view cost `C_h = Σ_i Σ_k μ_ik^m d_ik^h`.
pub fn view_costs(distances: &[Matrix], memberships: &MembershipMatrix, m: f64) -> Vec<f64> {
    let u = memberships.as_matrix();
    distances
        .iter()
        .map(|d| {
            d.as_slice()
                .iter()
                .zip(u.as_slice())
                .map(|(x, mu)| math::pow_fast(*mu, m) * x)
                .sum()
        })
        .collect()
}

/// Exact minimizer of the objective over view weights with memberships and
/// centers held fixed.
pub fn update_view_weights(
    distances: &[Matrix],
    memberships: &MembershipMatrix,
    m: f64,
    alpha: f64,
) -> ViewWeights {
    let costs = view_costs(distances, memberships, m);
    let mut v = alloc::vec![0.0; costs.len()];
    inverse_power_simplex(&costs, alpha, &mut v);
    ViewWeights::from_vec_unchecked(v)
}

/// `J = Σ_h v_h^α Σ_i Σ_k μ_ik^m d_ik^h`.
pub fn objective_from_distances(
    distances: &[Matrix],
    memberships: &MembershipMatrix,
    weights: &ViewWeights,
    m: f64,
    alpha: f64,
) -> f64 {
    view_costs(distances, memberships, m)
        .iter()
        .zip(weights.as_slice())
        .map(|(cost, &v)| math::pow_fast(v, alpha) * cost)
        .sum()
}

/// Hard labels of each view on its own: nearest center under that view's
/// distance.
pub fn per_view_labels(distances: &[Matrix]) -> Vec<Vec<usize>> {
    distances
        .iter()
        .map(|d| {
            d.iter_rows()
                .map(|row| {
                    let mut best = 0;
                    for k in 1..row.len() {
                        if row[k] < row[best] {
                            best = k;
                        }
                    }
                    best
                })
                .collect()
        })
        .collect()
}
