//! Centralized heat-kernel multi-view fuzzy c-means.
//!
//! [`fit`] alternates three updates until the objective stops moving:
//! memberships (exact minimizer), centers (one fixed-point step of the
//! weighted-mean equation) and view weights (exact minimizer).

mod init;
mod update;

use alloc::vec::Vec;

pub use init::init_centers;
pub use update::{
    distance_tensor, objective_from_distances, per_view_labels, update_centers,
    update_memberships, update_view_weights, view_costs,
};

use crate::dataset::{ColumnScaling, MultiViewDataset};
use crate::error::{bail, Result};
use crate::kernel::{compute_hkc, HeatKernelCoeffs, HkcEstimator, DEFAULT_HKC_EPS};
use crate::matrix::Matrix;
use crate::Centers;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitMethod {
    KMeansPP,
    Random,
}

/// Per-view sample-to-center dissimilarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceKind {
    /// `1 - exp(-Σ_j δ_ij (x_ij - a_kj)²)`.
    HeatKernel,
    /// Plain squared Euclidean distance; the multi-view FCM baseline.
    SquaredEuclidean,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterConfig {
    pub c: usize,
    pub m: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub t_max: usize,
    pub seed: u64,
    pub init: InitMethod,
    pub hkc: HkcEstimator,
    pub hkc_eps: f64,
    pub distance: DistanceKind,
    /// Recompute coefficients at the top of every iteration. They only
    /// depend on the data, so this changes run time, not results.
    pub recompute_hkc_per_iter: bool,
    /// Min-max scale every feature to `[0, 1]` before fitting.
    pub normalize: bool,
}

impl ClusterConfig {
    pub fn new(c: usize) -> Self {
        Self {
            c,
            m: 2.0,
            alpha: 5.0,
            epsilon: 1e-6,
            t_max: 100,
            seed: 0,
            init: InitMethod::KMeansPP,
            hkc: HkcEstimator::MinMax,
            hkc_eps: DEFAULT_HKC_EPS,
            distance: DistanceKind::HeatKernel,
            recompute_hkc_per_iter: false,
            normalize: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c < 1 {
            bail!(InvalidConfig, "c must be at least 1");
        }
        if !(self.m > 1.0 && self.m.is_finite()) {
            bail!(InvalidConfig, "fuzzifier m must be a finite value > 1, got {}", self.m);
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            bail!(InvalidConfig, "view exponent alpha must be a finite value > 1, got {}", self.alpha);
        }
        if !(self.epsilon > 0.0) {
            bail!(InvalidConfig, "epsilon must be > 0, got {}", self.epsilon);
        }
        if self.t_max < 1 {
            bail!(InvalidConfig, "t_max must be at least 1");
        }
        if !(self.hkc_eps > 0.0) {
            bail!(InvalidConfig, "hkc_eps must be > 0, got {}", self.hkc_eps);
        }
        Ok(())
    }
}

const SIMPLEX_TOL: f64 = 1e-9;

/// Row-stochastic `n × c` matrix of soft assignments.
#[derive(Clone, Debug, PartialEq)]
pub struct MembershipMatrix(Matrix);

impl MembershipMatrix {
    pub fn new(u: Matrix) -> Result<Self> {
        for (i, row) in u.iter_rows().enumerate() {
            if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                bail!(InvalidInput, "membership row {} has entries outside [0, 1]", i);
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > SIMPLEX_TOL {
                bail!(InvalidInput, "membership row {} sums to {}", i, s);
            }
        }
        Ok(Self(u))
    }

    pub(crate) fn from_matrix_unchecked(u: Matrix) -> Self {
        Self(u)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn n_samples(&self) -> usize {
        self.0.rows()
    }

    pub fn n_clusters(&self) -> usize {
        self.0.cols()
    }

    /// Argmax per row; ties go to the lowest cluster index.
    pub fn hard_labels(&self) -> Vec<usize> {
        self.0
            .iter_rows()
            .map(|row| {
                let mut best = 0;
                for k in 1..row.len() {
                    if row[k] > row[best] {
                        best = k;
                    }
                }
                best
            })
            .collect()
    }

    /// Relabels clusters: new column `k` is old column `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self(self.0.select_cols(perm))
    }

    /// Column means: the average membership mass of each cluster.
    pub fn column_means(&self) -> Vec<f64> {
        let n = self.0.rows() as f64;
        (0..self.0.cols())
            .map(|k| self.0.column(k).iter().sum::<f64>() / n)
            .collect()
    }
}

/// Probability vector over views.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewWeights(Vec<f64>);

impl ViewWeights {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        if v.is_empty() {
            bail!(InvalidInput, "view weights need at least one view");
        }
        if v.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            bail!(InvalidInput, "view weights must lie in [0, 1]");
        }
        let s: f64 = v.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            bail!(InvalidInput, "view weights sum to {}", s);
        }
        Ok(Self(v))
    }

    pub fn uniform(s: usize) -> Self {
        Self(alloc::vec![1.0 / s as f64; s])
    }

    pub(crate) fn from_vec_unchecked(v: Vec<f64>) -> Self {
        Self(v)
    }

    /// Clips negatives and rescales onto the simplex. Vectors already on it
    /// (to 1e-12) pass through untouched so exact inputs stay exact; an
    /// all-zero vector becomes uniform.
    pub fn onto_simplex(mut v: Vec<f64>) -> Self {
        for x in v.iter_mut() {
            if !(*x > 0.0) {
                *x = 0.0;
            }
        }
        let s: f64 = v.iter().sum();
        if s <= 0.0 || !s.is_finite() {
            return Self::uniform(v.len());
        }
        if (s - 1.0).abs() > 1e-12 {
            for x in v.iter_mut() {
                *x /= s;
            }
        }
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Non-fatal events noticed during a fit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    /// Every center weight of this cluster vanished in this view; the
    /// previous center was kept.
    DegenerateCluster { iteration: usize, view: usize, cluster: usize },
}

/// State after one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub memberships: MembershipMatrix,
    pub centers: Centers,
    pub weights: ViewWeights,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterModel {
    pub memberships: MembershipMatrix,
    /// Centers in the space the solver worked in (scaled when
    /// `normalize` was on; see [`ClusterModel::centers_in_input_space`]).
    pub centers: Centers,
    pub weights: ViewWeights,
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostics: Vec<Diagnostic>,
    pub scalings: Option<Vec<ColumnScaling>>,
}

impl ClusterModel {
    pub fn hard_labels(&self) -> Vec<usize> {
        self.memberships.hard_labels()
    }

    pub fn final_objective(&self) -> f64 {
        self.objective_history.last().copied().unwrap_or(f64::NAN)
    }

    pub fn centers_in_input_space(&self) -> Centers {
        match &self.scalings {
            Some(s) => self
                .centers
                .iter()
                .zip(s)
                .map(|(a, sc)| sc.invert(a))
                .collect(),
            None => self.centers.clone(),
        }
    }
}

/// Working data, coefficients and hyperparameters for the update loop.
/// Shared by the centralized fit and by each federated client.
#[derive(Clone, Debug)]
pub(crate) struct Engine {
    pub views: Vec<Matrix>,
    pub coeffs: Vec<HeatKernelCoeffs>,
    pub m: f64,
    pub alpha: f64,
    pub kind: DistanceKind,
    hkc: HkcEstimator,
    hkc_eps: f64,
    recompute: bool,
}

pub(crate) struct Step {
    pub memberships: MembershipMatrix,
    pub objective: f64,
    pub degenerate: Vec<(usize, usize)>,
}

impl Engine {
    pub fn new(views: Vec<Matrix>, cfg: &ClusterConfig) -> Result<Self> {
        let mut e = Self {
            views,
            coeffs: Vec::new(),
            m: cfg.m,
            alpha: cfg.alpha,
            kind: cfg.distance,
            hkc: cfg.hkc,
            hkc_eps: cfg.hkc_eps,
            recompute: cfg.recompute_hkc_per_iter,
        };
        e.refresh_coeffs()?;
        Ok(e)
    }

    fn refresh_coeffs(&mut self) -> Result<()> {
        self.coeffs = self
            .views
            .iter()
            .map(|v| match self.kind {
                DistanceKind::HeatKernel => compute_hkc(v, self.hkc, self.hkc_eps),
                DistanceKind::SquaredEuclidean => Ok(HeatKernelCoeffs::zeros(v.rows(), v.cols())),
            })
            .collect::<Result<_>>()?;
        Ok(())
    }

    pub fn distances(&self, centers: &[Matrix]) -> Vec<Matrix> {
        update::distances_unchecked(&self.views, centers, &self.coeffs, self.kind)
    }

    /// One U → A → V sweep, then the objective at the new state.
    pub fn step(&mut self, centers: &mut Centers, weights: &mut ViewWeights) -> Result<Step> {
        if self.recompute {
            self.refresh_coeffs()?;
        }
        let d = self.distances(centers);
        let u = update_memberships(&d, weights, self.m, self.alpha);
        let (a, degenerate) = update_centers(&self.views, &u, &self.coeffs, centers, self.m, self.kind);
        *centers = a;
        let d = self.distances(centers);
        *weights = update_view_weights(&d, &u, self.m, self.alpha);
        let objective = objective_from_distances(&d, &u, weights, self.m, self.alpha);
        if !objective.is_finite() || centers.iter().any(|a| !a.is_finite()) {
            bail!(Numerical, "objective or centers became non-finite");
        }
        Ok(Step {
            memberships: u,
            objective,
            degenerate,
        })
    }
}

/// Applies the configured preprocessing and returns the working views.
pub(crate) fn working_views(
    dataset: &MultiViewDataset,
    cfg: &ClusterConfig,
) -> (Vec<Matrix>, Option<Vec<ColumnScaling>>) {
    if cfg.normalize {
        let s = dataset.scalings();
        (dataset.scaled(&s).into_parts().0, Some(s))
    } else {
        (dataset.views().to_vec(), None)
    }
}

pub fn fit(dataset: &MultiViewDataset, cfg: &ClusterConfig) -> Result<ClusterModel> {
    fit_inner(dataset, cfg, None)
}

/// Like [`fit`], also returning the full state after every iteration.
pub fn fit_traced(
    dataset: &MultiViewDataset,
    cfg: &ClusterConfig,
) -> Result<(ClusterModel, Vec<IterationRecord>)> {
    let mut trace = Vec::new();
    let model = fit_inner(dataset, cfg, Some(&mut trace))?;
    Ok((model, trace))
}

fn fit_inner(
    dataset: &MultiViewDataset,
    cfg: &ClusterConfig,
    mut trace: Option<&mut Vec<IterationRecord>>,
) -> Result<ClusterModel> {
    cfg.validate()?;
    let (views, scalings) = working_views(dataset, cfg);
    let mut centers = init_centers(&views, cfg.c, cfg.init, cfg.seed)?;
    let mut weights = ViewWeights::uniform(views.len());
    let mut engine = Engine::new(views, cfg)?;

    let mut history = Vec::new();
    let mut diagnostics = Vec::new();
    let mut converged = false;
    let mut memberships = None;
    for t in 0..cfg.t_max {
        let step = engine.step(&mut centers, &mut weights)?;
        for (view, cluster) in step.degenerate {
            diagnostics.push(Diagnostic::DegenerateCluster { iteration: t, view, cluster });
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(IterationRecord {
                memberships: step.memberships.clone(),
                centers: centers.clone(),
                weights: weights.clone(),
                objective: step.objective,
            });
        }
        let prev = history.last().copied();
        history.push(step.objective);
        memberships = Some(step.memberships);
        if prev.is_some_and(|p: f64| (step.objective - p).abs() < cfg.epsilon) {
            converged = true;
            break;
        }
    }
    Ok(ClusterModel {
        memberships: memberships.expect("t_max >= 1"),
        centers,
        weights,
        iterations: history.len(),
        objective_history: history,
        converged,
        diagnostics,
        scalings,
    })
}

/// Objective of `model` on `dataset` (prepared with the same config).
pub fn objective(dataset: &MultiViewDataset, model: &ClusterModel, cfg: &ClusterConfig) -> Result<f64> {
    let views = match &model.scalings {
        Some(s) => dataset.scaled(s).into_parts().0,
        None => dataset.views().to_vec(),
    };
    let engine = Engine::new(views, cfg)?;
    let d = distance_tensor(&engine.views, &model.centers, &engine.coeffs, engine.kind)?;
    Ok(objective_from_distances(&d, &model.memberships, &model.weights, cfg.m, cfg.alpha))
}

/// Nearest-center labels of each view taken alone, for `dataset` prepared
/// the way `model` was fitted.
pub fn view_labels(dataset: &MultiViewDataset, model: &ClusterModel, cfg: &ClusterConfig) -> Result<Vec<Vec<usize>>> {
    let views = match &model.scalings {
        Some(s) => dataset.scaled(s).into_parts().0,
        None => dataset.views().to_vec(),
    };
    let engine = Engine::new(views, cfg)?;
    let d = distance_tensor(&engine.views, &model.centers, &engine.coeffs, engine.kind)?;
    Ok(per_view_labels(&d))
}
