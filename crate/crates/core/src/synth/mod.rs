//! The two-view, four-cluster geometric benchmark, stratified federated
//! splits, and the two-view Iris scenario.

mod shapes;
mod validate;

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

pub use shapes::{generate_shape, heart, ShapeKind, ShapeSpec};
pub use validate::{noise_multiplier, validate_generated, ShapeCheck, ValidationReport, EPS_SHAPE, KS_ALPHA};

use crate::dataset::MultiViewDataset;
use crate::error::{bail, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::rng::{self, SYNTH_STREAM};

/// Bumped whenever generation output for a given seed changes.
pub const GENERATOR_VERSION: u32 = 1;

/// One shape per (view, cluster), all clusters of equal size.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkSpec {
    pub n_per_cluster: usize,
    pub views: Vec<Vec<ShapeSpec>>,
}

impl BenchmarkSpec {
    /// Circle, ellipse, crescent and S-curve in view 1; diamond, ring,
    /// cross and heart in view 2.
    pub fn paper(n_per_cluster: usize) -> Self {
        Self {
            n_per_cluster,
            views: vec![
                vec![ShapeSpec::circle(), ShapeSpec::ellipse(), ShapeSpec::crescent(), ShapeSpec::scurve()],
                vec![ShapeSpec::diamond(), ShapeSpec::ring(), ShapeSpec::cross(), ShapeSpec::heart()],
            ],
        }
    }

    /// Same shapes with every noise level set to zero. The cross keeps its
    /// bar thickness, which is part of the shape.
    pub fn noiseless(mut self) -> Self {
        for s in self.views.iter_mut().flatten() {
            s.noise_sigma = 0.0;
        }
        self
    }

    pub fn n_clusters(&self) -> usize {
        self.views.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_per_cluster < 1 {
            bail!(InvalidConfig, "n_per_cluster must be at least 1");
        }
        let c = self.n_clusters();
        if c < 1 {
            bail!(InvalidConfig, "benchmark needs at least one view with one shape");
        }
        for (h, v) in self.views.iter().enumerate() {
            if v.len() != c {
                bail!(InvalidConfig, "view {} has {} shapes, view 0 has {}", h, v.len(), c);
            }
            for s in v {
                s.validate()?;
            }
        }
        Ok(())
    }
}

/// Generates the benchmark. Rows come in cluster blocks (`n_per_cluster`
/// rows of cluster 0, then cluster 1, ...), identically in every view;
/// within a two-part shape the first part comes first.
pub fn assemble_benchmark(spec: &BenchmarkSpec, seed: u64) -> Result<MultiViewDataset> {
    spec.validate()?;
    let n = spec.n_per_cluster;
    let c = spec.n_clusters();
    let mut views = Vec::with_capacity(spec.views.len());
    for (h, shapes) in spec.views.iter().enumerate() {
        let mut data = Vec::with_capacity(n * c * 2);
        for (k, shape) in shapes.iter().enumerate() {
            let mut r = rng::seeded(rng::derive(seed, SYNTH_STREAM, h as u64, k as u64));
            data.extend_from_slice(generate_shape(shape, n, &mut r)?.as_slice());
        }
        views.push(Matrix::from_vec(n * c, 2, data)?);
    }
    let labels = (0..c).flat_map(|k| core::iter::repeat_n(k, n)).collect();
    MultiViewDataset::new(views, Some(labels))
}

/// Disjoint row-index sets, one per client, each sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct FederatedSplit {
    pub clients: Vec<Vec<usize>>,
    pub fractions: Vec<f64>,
}

impl FederatedSplit {
    pub fn sizes(&self) -> Vec<usize> {
        self.clients.iter().map(Vec::len).collect()
    }

    pub fn apply(&self, dataset: &MultiViewDataset) -> Result<Vec<MultiViewDataset>> {
        self.clients.iter().map(|rows| dataset.subset(rows)).collect()
    }
}

/// Stratified split: within every label, rows are shuffled and cut at the
/// rounded cumulative fractions, so each client's share of each label is
/// within one row of its fraction.
pub fn partition_federated(labels: &[usize], fractions: &[f64], seed: u64) -> Result<FederatedSplit> {
    if fractions.is_empty() {
        bail!(InvalidConfig, "at least one client fraction is required");
    }
    if fractions.iter().any(|&f| !(f >= 0.0 && f.is_finite())) {
        bail!(InvalidConfig, "client fractions must be non-negative");
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        bail!(InvalidConfig, "client fractions sum to {}, expected 1", total);
    }
    let c = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_label: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, &l) in labels.iter().enumerate() {
        by_label[l].push(i);
    }
    let mut rng = rng::seeded(seed);
    let mut clients: Vec<Vec<usize>> = vec![Vec::new(); fractions.len()];
    for mut rows in by_label {
        rows.shuffle(&mut rng);
        let n = rows.len() as f64;
        let mut cum = 0.0;
        let mut start = 0;
        for (j, f) in fractions.iter().enumerate() {
            cum += f;
            let end = if j + 1 == fractions.len() {
                rows.len()
            } else {
                (math::round(n * cum) as usize).min(rows.len())
            };
            clients[j].extend_from_slice(&rows[start..end.max(start)]);
            start = end.max(start);
        }
    }
    for c in clients.iter_mut() {
        c.sort_unstable();
    }
    Ok(FederatedSplit {
        clients,
        fractions: fractions.to_vec(),
    })
}

/// Two-view Iris: view 1 is sepal length with petal length, view 2 is
/// sepal width with petal width. Split 60/40 per species, which gives
/// 90 and 60 rows on the canonical table.
pub fn iris_two_view(
    features: &Matrix,
    species: &[usize],
    seed: u64,
) -> Result<(MultiViewDataset, FederatedSplit)> {
    if features.cols() != 4 {
        bail!(Shape, "Iris table needs 4 feature columns, got {}", features.cols());
    }
    let ds = MultiViewDataset::new(
        vec![features.select_cols(&[0, 2]), features.select_cols(&[1, 3])],
        Some(species.to_vec()),
    )?;
    let split = partition_federated(species, &[0.6, 0.4], seed)?;
    Ok((ds, split))
}
