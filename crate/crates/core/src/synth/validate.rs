use alloc::vec::Vec;

use super::shapes::{recoverable_residuals, Template};
use super::BenchmarkSpec;
use crate::dataset::MultiViewDataset;
use crate::error::{bail, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::stats::{ks_test, normal_cdf, pearson, KsResult};

/// Shape tolerance for noiseless points.
pub const EPS_SHAPE: f64 = 0.1;
/// Significance level of the residual normality test.
pub const KS_ALPHA: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct ShapeCheck {
    pub view: usize,
    pub cluster: usize,
    pub shape: &'static str,
    pub count: usize,
    pub expected_count: usize,
    /// Largest distance from a generated point to the template.
    pub hausdorff: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<ShapeCheck>,
    pub counts_ok: bool,
    /// Pooled residual test; `None` when no shape has a recoverable residual.
    pub ks: Option<KsResult>,
    pub ks_passed: Option<bool>,
    /// Mean absolute Pearson correlation between view-1 and view-2 features.
    /// Reported only.
    pub cross_view_correlation: Option<f64>,
    pub passed: bool,
    pub regeneration_recommended: bool,
}

/// Upper Gaussian quantile `z` with two-sided tail mass `p`.
fn two_sided_z(p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if math::erfc(mid / core::f64::consts::SQRT_2) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Noise allowance in deviations for the worst of `n` points: three
/// deviations, widened so that `n` clean Gaussian draws exceed it with
/// probability below 0.001.
pub fn noise_multiplier(n: usize) -> f64 {
    two_sided_z(0.001 / n.max(1) as f64).max(3.0)
}

/// Checks a generated benchmark against the spec that produced it: exact
/// per-cluster counts, point-to-template Hausdorff distances, and a KS test
/// of the recoverable noise residuals against the standard normal.
///
/// Rows must be in generation order (cluster blocks, sub-populations in
/// order), which is how [`super::assemble_benchmark`] lays them out.
pub fn validate_generated(dataset: &MultiViewDataset, spec: &BenchmarkSpec) -> Result<ValidationReport> {
    let Some(labels) = dataset.labels() else {
        bail!(InvalidInput, "validation needs a labelled dataset");
    };
    if dataset.n_views() != spec.views.len() {
        bail!(Shape, "dataset has {} views, spec has {}", dataset.n_views(), spec.views.len());
    }
    let c = spec.n_clusters();
    let mut rows: Vec<Vec<usize>> = alloc::vec![Vec::new(); c];
    for (i, &l) in labels.iter().enumerate() {
        if l >= c {
            bail!(InvalidInput, "label {} out of range for {} clusters", l, c);
        }
        rows[l].push(i);
    }
    let counts_ok = rows.iter().all(|r| r.len() == spec.n_per_cluster);

    let mut checks = Vec::new();
    let mut residuals = Vec::new();
    for (h, shapes) in spec.views.iter().enumerate() {
        let view = dataset.view(h);
        if view.cols() != 2 {
            bail!(Shape, "view {} has {} columns, shapes are 2-d", h, view.cols());
        }
        for (k, shape) in shapes.iter().enumerate() {
            let pts: Matrix = view.select_rows(&rows[k]);
            let template = Template::of(shape);
            let hausdorff = pts
                .iter_rows()
                .map(|p| template.distance([p[0], p[1]]))
                .fold(0.0, f64::max);
            let bound = EPS_SHAPE + noise_multiplier(pts.rows()) * shape.noise_sigma;
            checks.push(ShapeCheck {
                view: h,
                cluster: k,
                shape: shape.kind.name(),
                count: pts.rows(),
                expected_count: spec.n_per_cluster,
                hausdorff,
                bound,
                passed: hausdorff <= bound && pts.rows() == spec.n_per_cluster,
            });
            residuals.extend(recoverable_residuals(shape, &pts));
        }
    }
    let ks = if residuals.is_empty() {
        None
    } else {
        Some(ks_test(&residuals, normal_cdf)?)
    };
    let ks_passed = ks.map(|r| r.p_value >= KS_ALPHA);
    let cross_view_correlation = (dataset.n_views() >= 2).then(|| {
        let (a, b) = (dataset.view(0), dataset.view(1));
        let mut total = 0.0;
        for p in 0..a.cols() {
            for q in 0..b.cols() {
                total += pearson(&a.column(p), &b.column(q)).abs();
            }
        }
        total / (a.cols() * b.cols()) as f64
    });
    let passed = counts_ok && checks.iter().all(|c| c.passed) && ks_passed != Some(false);
    Ok(ValidationReport {
        checks,
        counts_ok,
        ks,
        ks_passed,
        cross_view_correlation,
        passed,
        regeneration_recommended: !passed,
    })
}
