use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng as _;

use super::InitMethod;
use crate::error::{bail, Result};
use crate::matrix::Matrix;
use crate::rng::{self, Rng};
use crate::Centers;

/// Picks `c` sample rows and uses them as the initial centers of every view.
///
/// Seeding is joint across views: k-means++ scores a candidate row by its
/// squared distance summed over all views, so a row's centers stay
/// together and cluster `k` means the same thing in every view.
pub fn init_centers(views: &[Matrix], c: usize, method: InitMethod, seed: u64) -> Result<Centers> {
    let n = views.first().map_or(0, Matrix::rows);
    if c == 0 {
        bail!(InvalidConfig, "cluster count must be at least 1");
    }
    if c > n {
        bail!(InvalidConfig, "cluster count {} exceeds sample count {}", c, n);
    }
    let mut rng = rng::seeded(seed);
    let rows = match method {
        InitMethod::Random => index::sample(&mut rng, n, c).into_vec(),
        InitMethod::KMeansPP => kmeanspp_rows(views, c, &mut rng),
    };
    Ok(views.iter().map(|v| v.select_rows(&rows)).collect())
}

fn joint_sq(views: &[Matrix], i: usize, j: usize) -> f64 {
    views
        .iter()
        .map(|v| {
            v.row(i)
                .iter()
                .zip(v.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum()
}

fn kmeanspp_rows(views: &[Matrix], c: usize, rng: &mut Rng) -> Vec<usize> {
    let n = views[0].rows();
    let mut chosen = Vec::with_capacity(c);
    chosen.push(rng.random_range(0..n));
    let mut best: Vec<f64> = (0..n).map(|i| joint_sq(views, i, chosen[0])).collect();
    while chosen.len() < c {
        let total: f64 = best.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in best.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave target just above the final sum
            pick.unwrap_or_else(|| best.iter().rposition(|&d| d > 0.0).unwrap_or(0))
        } else {
            // fewer distinct rows than clusters: take any row not used yet
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, b) in best.iter_mut().enumerate() {
            *b = b.min(joint_sq(views, i, next));
        }
    }
    chosen
}
