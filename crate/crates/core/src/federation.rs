//! Deterministic in-process simulation of federated heat-kernel multi-view
//! clustering: data certification, client rounds, server aggregation,
//! personalization, convergence and communication accounting.
//!
//! Clients run one after another in id order. Every server-side reduction
//! walks the clients in that fixed order, so a run is a pure function of its
//! inputs and seed.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::assignment::hungarian;
use crate::cluster::{
    init_centers, objective_from_distances, update_memberships, ClusterConfig, Diagnostic, Engine, IterationRecord,
    MembershipMatrix, ViewWeights,
};
use crate::dataset::{ColumnScaling, MultiViewDataset};
use crate::error::{bail, Error, Result};
use crate::matrix::Matrix;
use crate::privacy::{self, budget_schedule, PrivacyConfig};
use crate::rng::{self, DP_STREAM, SECAGG_STREAM};
use crate::stats::{chi2_quantile, lower_median, mahalanobis_sq, mean, pearson, variance};
use crate::{math, Centers};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregation {
    Weighted,
    Median,
    FedAvg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClientWeighting {
    BySamples,
    /// Proportional to the mean per-sample maximum membership.
    ByQuality,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Personalization {
    /// After each round, a client whose objective went down leans 0.05 more
    /// on its own model, otherwise 0.05 more on the global one; kept in
    /// `[0.1, 0.9]`.
    Adaptive,
    Static,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FedConfig {
    /// Shared clustering hyperparameters. `t_max` and `epsilon` are unused;
    /// clients run exactly `local_iters` updates per round.
    pub cluster: ClusterConfig,
    /// Per-client cluster counts. Empty means every client uses `cluster.c`.
    pub client_clusters: Vec<usize>,
    pub rounds: usize,
    pub local_iters: usize,
    pub aggregation: Aggregation,
    pub client_weighting: ClientWeighting,
    /// Strict threshold on both the center and view-weight change.
    pub epsilon_conv: f64,
    pub gamma: f64,
    pub rho: f64,
    pub personalization: Personalization,
    /// Whether clients upload their quality vector alongside the model.
    pub share_stats: bool,
    pub privacy: PrivacyConfig,
}

impl FedConfig {
    pub fn new(c: usize) -> Self {
        Self {
            cluster: ClusterConfig::new(c),
            client_clusters: Vec::new(),
            rounds: 10,
            local_iters: 50,
            aggregation: Aggregation::Weighted,
            client_weighting: ClientWeighting::BySamples,
            epsilon_conv: 1e-6,
            gamma: 0.5,
            rho: 0.5,
            personalization: Personalization::Adaptive,
            share_stats: true,
            privacy: PrivacyConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cluster.validate()?;
        if self.rounds < 1 {
            bail!(InvalidConfig, "rounds must be at least 1");
        }
        if self.local_iters < 1 {
            bail!(InvalidConfig, "local_iters must be at least 1");
        }
        if !(self.epsilon_conv >= 0.0) {
            bail!(InvalidConfig, "epsilon_conv must be non-negative");
        }
        for (name, v) in [("gamma", self.gamma), ("rho", self.rho)] {
            if !(0.0..=1.0).contains(&v) {
                bail!(InvalidConfig, "{} must lie in [0, 1], got {}", name, v);
            }
        }
        if self.client_clusters.contains(&0) {
            bail!(InvalidConfig, "client cluster counts must be positive");
        }
        if self.privacy.enabled || self.privacy.secure_aggregation {
            self.privacy.validate()?;
        }
        if self.privacy.secure_aggregation && self.aggregation == Aggregation::Median {
            bail!(InvalidConfig, "secure aggregation only reveals sums and cannot compute a median");
        }
        Ok(())
    }

    fn clusters_of(&self, client: usize) -> usize {
        self.client_clusters.get(client).copied().unwrap_or(self.cluster.c)
    }
}

// ---------------------------------------------------------------------------
// Certification

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificationThresholds {
    pub eta_min: f64,
    pub xi_min: f64,
    /// Chi-square quantile above which a squared Mahalanobis distance is
    /// flagged.
    pub outlier_quantile: f64,
    /// Missing-row fraction below which a view is mean-imputed; above it,
    /// incomplete rows are dropped.
    pub impute_below: f64,
}

impl Default for CertificationThresholds {
    fn default() -> Self {
        Self {
            eta_min: 0.95,
            xi_min: 0.90,
            outlier_quantile: 0.999,
            impute_below: 0.05,
        }
    }
}

/// Client data as held locally, with `NaN` marking missing entries.
#[derive(Clone, Debug, PartialEq)]
pub struct RawClient {
    pub views: Vec<Matrix>,
    pub labels: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClientQuality {
    pub client_id: usize,
    pub n_samples: usize,
    /// Fraction of rows fully observed in each view, before imputation.
    pub completeness: Vec<f64>,
    pub imputed_entries: usize,
    pub dropped_rows: usize,
    /// Flagged row indices per view, in the cleaned data.
    pub outliers: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certification {
    pub datasets: Vec<MultiViewDataset>,
    pub clients: Vec<ClientQuality>,
    pub eta_global: f64,
    pub xi_global: f64,
    pub n_clusters: Vec<usize>,
}

/// Checks, cleans and certifies client datasets for federation.
///
/// `xi_global` is the minimum over views of the mean pairwise Pearson
/// correlation between clients' per-feature mean vectors. Pairs where the
/// correlation is undefined (a single feature, or a constant mean vector)
/// are skipped; a view with no defined pair scores 1.
pub fn prepare_and_validate(
    raw: Vec<RawClient>,
    n_clusters: &[usize],
    thresholds: &CertificationThresholds,
) -> Result<Certification> {
    let m = raw.len();
    if m < 2 {
        bail!(InvalidInput, "certification needs at least two clients, got {}", m);
    }
    if n_clusters.len() != m {
        bail!(Shape, "{} cluster counts for {} clients", n_clusters.len(), m);
    }
    for (l, r) in raw.iter().enumerate() {
        let n = r.views.first().map_or(0, Matrix::rows);
        if r.views.is_empty() || r.views.iter().any(|v| v.rows() != n) {
            return Err(cert_error(vec![l], "views missing or with unequal row counts"));
        }
        if r.labels.as_ref().is_some_and(|lab| lab.len() != n) {
            return Err(cert_error(vec![l], "label count does not match rows"));
        }
    }
    let short: Vec<usize> = (0..m).filter(|&l| raw[l].views[0].rows() < 10 * n_clusters[l]).collect();
    if !short.is_empty() {
        return Err(cert_error(short, "fewer than 10 samples per cluster"));
    }
    let dims0: Vec<usize> = raw[0].views.iter().map(Matrix::cols).collect();
    let mismatched: Vec<usize> = (1..m)
        .filter(|&l| raw[l].views.iter().map(Matrix::cols).collect::<Vec<_>>() != dims0)
        .collect();
    if !mismatched.is_empty() {
        return Err(cert_error(mismatched, "view dimensions differ from client 0"));
    }

    let mut datasets = Vec::with_capacity(m);
    let mut clients = Vec::with_capacity(m);
    for (l, r) in raw.into_iter().enumerate() {
        let (ds, q) = clean_client(l, r, thresholds)?;
        if ds.n_samples() < 10 * n_clusters[l] {
            return Err(cert_error(vec![l], "fewer than 10 samples per cluster after dropping incomplete rows"));
        }
        datasets.push(ds);
        clients.push(q);
    }

    let eta_global = clients.iter().map(|q| mean(&q.completeness)).sum::<f64>() / m as f64;
    let xi_global = consistency_score(&datasets);
    if eta_global < thresholds.eta_min {
        let low = clients
            .iter()
            .filter(|q| mean(&q.completeness) < thresholds.eta_min)
            .map(|q| q.client_id)
            .collect();
        return Err(cert_error(low, &format!("global completeness {:.4} below {}", eta_global, thresholds.eta_min)));
    }
    if xi_global < thresholds.xi_min {
        return Err(cert_error(
            (0..m).collect(),
            &format!("consistency score {:.4} below {}", xi_global, thresholds.xi_min),
        ));
    }
    Ok(Certification {
        datasets,
        clients,
        eta_global,
        xi_global,
        n_clusters: n_clusters.to_vec(),
    })
}

fn cert_error(clients: Vec<usize>, reason: &str) -> Error {
    Error::Certification {
        clients,
        reason: String::from(reason),
    }
}

fn clean_client(id: usize, raw: RawClient, th: &CertificationThresholds) -> Result<(MultiViewDataset, ClientQuality)> {
    let n = raw.views[0].rows();
    let mut views = raw.views;
    let complete_rows = |v: &Matrix| v.iter_rows().filter(|r| r.iter().all(|x| x.is_finite())).count();
    let completeness: Vec<f64> = views.iter().map(|v| complete_rows(v) as f64 / n as f64).collect();

    let mut imputed_entries = 0;
    for (v, &eta) in views.iter_mut().zip(&completeness) {
        if eta < 1.0 && 1.0 - eta < th.impute_below {
            for j in 0..v.cols() {
                let observed: Vec<f64> = v.column(j).into_iter().filter(|x| x.is_finite()).collect();
                if observed.is_empty() {
                    continue;
                }
                let mu = mean(&observed);
                for i in 0..n {
                    if !v.get(i, j).is_finite() {
                        v.set(i, j, mu);
                        imputed_entries += 1;
                    }
                }
            }
        }
    }
    let keep: Vec<usize> = (0..n)
        .filter(|&i| views.iter().all(|v| v.row(i).iter().all(|x| x.is_finite())))
        .collect();
    let dropped_rows = n - keep.len();
    if dropped_rows > 0 {
        views = views.iter().map(|v| v.select_rows(&keep)).collect();
    }
    let labels = raw.labels.map(|l| keep.iter().map(|&i| l[i]).collect());
    let ds = MultiViewDataset::new(views, labels)?;

    let mut outliers = Vec::with_capacity(ds.n_views());
    for v in ds.views() {
        let cut = chi2_quantile(th.outlier_quantile, v.cols());
        let d2 = if v.rows() > v.cols() { mahalanobis_sq(v)? } else { vec![0.0; v.rows()] };
        outliers.push((0..v.rows()).filter(|&i| d2[i] > cut).collect());
    }
    let q = ClientQuality {
        client_id: id,
        n_samples: ds.n_samples(),
        completeness,
        imputed_entries,
        dropped_rows,
        outliers,
    };
    Ok((ds, q))
}

fn consistency_score(datasets: &[MultiViewDataset]) -> f64 {
    let s = datasets[0].n_views();
    let mut worst = 1.0f64;
    for h in 0..s {
        let means: Vec<Vec<f64>> = datasets
            .iter()
            .map(|d| (0..d.view(h).cols()).map(|j| mean(&d.view(h).column(j))).collect())
            .collect();
        let (mut total, mut pairs) = (0.0, 0usize);
        for a in 0..means.len() {
            for b in a + 1..means.len() {
                let defined = means[a].len() >= 2 && variance(&means[a]) > 0.0 && variance(&means[b]) > 0.0;
                if defined {
                    total += pearson(&means[a], &means[b]);
                    pairs += 1;
                }
            }
        }
        if pairs > 0 {
            worst = worst.min(total / pairs as f64);
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// Models and client rounds

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalModel {
    pub centers: Centers,
    pub weights: ViewWeights,
    pub round: usize,
    pub feature_mean: Vec<Vec<f64>>,
    pub feature_variance: Vec<Vec<f64>>,
    /// Column scaling shared by every client, the union of the clients'
    /// observed ranges. `None` when normalization is off.
    pub scalings: Option<Vec<ColumnScaling>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClientStats {
    pub client_id: usize,
    /// Mean membership per cluster.
    pub quality: Vec<f64>,
    /// Mean over samples of the largest membership.
    pub confidence: f64,
    pub centers: Centers,
    pub weights: ViewWeights,
    pub feature_mean: Vec<Vec<f64>>,
    pub feature_variance: Vec<Vec<f64>>,
    pub sample_count: usize,
    /// Local objective after the round.
    pub objective: f64,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Clone, Debug)]
pub struct ClientState {
    pub client_id: usize,
    pub centers: Centers,
    pub weights: ViewWeights,
    pub memberships: MembershipMatrix,
    pub gamma: f64,
    pub rho: f64,
    /// Objective at the end of the previous round.
    pub last_objective: Option<f64>,
    engine: Engine,
    feature_mean: Vec<Vec<f64>>,
    feature_variance: Vec<Vec<f64>>,
}

impl ClientState {
    pub fn n_samples(&self) -> usize {
        self.memberships.n_samples()
    }

    pub fn n_clusters(&self) -> usize {
        self.memberships.n_clusters()
    }

    pub fn n_views(&self) -> usize {
        self.weights.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.engine.views.iter().map(Matrix::cols).collect()
    }

    /// The client's data after the shared scaling.
    pub fn views(&self) -> &[Matrix] {
        &self.engine.views
    }

    fn current_objective(&self) -> f64 {
        let d = self.engine.distances(&self.centers);
        objective_from_distances(&d, &self.memberships, &self.weights, self.engine.m, self.engine.alpha)
    }

    fn permute(&mut self, perm: &[usize]) {
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return;
        }
        for a in self.centers.iter_mut() {
            *a = a.select_rows(perm);
        }
        self.memberships = self.memberships.permuted(perm);
    }

    fn stats(&self, objective: f64, diagnostics: Vec<Diagnostic>) -> ClientStats {
        let u = self.memberships.as_matrix();
        let confidence = u.iter_rows().map(|r| r.iter().copied().fold(0.0, f64::max)).sum::<f64>() / u.rows() as f64;
        ClientStats {
            client_id: self.client_id,
            quality: self.memberships.column_means(),
            confidence,
            centers: self.centers.clone(),
            weights: self.weights.clone(),
            feature_mean: self.feature_mean.clone(),
            feature_variance: self.feature_variance.clone(),
            sample_count: self.n_samples(),
            objective,
            diagnostics,
        }
    }

    fn adapt(&mut self, objective: f64) {
        if let Some(prev) = self.last_objective {
            let step = if objective < prev { -0.05 } else { 0.05 };
            self.gamma = (self.gamma + step).clamp(0.1, 0.9);
            self.rho = (self.rho + step).clamp(0.1, 0.9);
        }
    }
}

fn feature_stats(views: &[Matrix]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mu = views.iter().map(|v| (0..v.cols()).map(|j| mean(&v.column(j))).collect()).collect();
    let var = views.iter().map(|v| (0..v.cols()).map(|j| variance(&v.column(j))).collect()).collect();
    (mu, var)
}

/// Seed used by client `l` (zero-based) for its local initialization.
pub fn client_seed(seed: u64, client: usize) -> u64 {
    seed.wrapping_add(client as u64 + 1)
}

/// Sets up the global model and one state per client.
///
/// Global centers are seeded on client 0's data, standing in for a
/// server-held initialization sample, with the base seed. Client `l` seeds
/// its own centers with [`client_seed`].
pub fn init_federation(datasets: &[MultiViewDataset], cfg: &FedConfig) -> Result<(GlobalModel, Vec<ClientState>)> {
    cfg.validate()?;
    if datasets.is_empty() {
        bail!(InvalidInput, "federation needs at least one client");
    }
    let s = datasets[0].n_views();
    if datasets.iter().any(|d| d.n_views() != s) {
        bail!(Shape, "clients hold different numbers of views");
    }
    let scalings = cfg.cluster.normalize.then(|| {
        let per: Vec<Vec<ColumnScaling>> = datasets.iter().map(MultiViewDataset::scalings).collect();
        (0..s)
            .map(|h| ColumnScaling::union(&per.iter().map(|p| &p[h]).collect::<Vec<_>>()))
            .collect::<Vec<_>>()
    });
    let prepared: Vec<Vec<Matrix>> = datasets
        .iter()
        .map(|d| match &scalings {
            Some(sc) => {
                if d.dims() != sc.iter().map(|c| c.lo.len()).collect::<Vec<_>>() {
                    bail!(Shape, "clients disagree on view dimensions");
                }
                Ok(d.scaled(sc).into_parts().0)
            }
            None => Ok(d.views().to_vec()),
        })
        .collect::<Result<_>>()?;

    let global_centers = init_centers(&prepared[0], cfg.cluster.c, cfg.cluster.init, cfg.cluster.seed)?;
    let mut clients = Vec::with_capacity(datasets.len());
    for (l, views) in prepared.into_iter().enumerate() {
        let c = cfg.clusters_of(l);
        let centers = init_centers(&views, c, cfg.cluster.init, client_seed(cfg.cluster.seed, l))?;
        let (feature_mean, feature_variance) = feature_stats(&views);
        let engine = Engine::new(views, &cfg.cluster)?;
        let weights = ViewWeights::uniform(s);
        let memberships = update_memberships(&engine.distances(&centers), &weights, engine.m, engine.alpha);
        clients.push(ClientState {
            client_id: l,
            centers,
            weights,
            memberships,
            gamma: cfg.gamma,
            rho: cfg.rho,
            last_objective: None,
            engine,
            feature_mean,
            feature_variance,
        });
    }
    let (feature_mean, feature_variance) =
        aggregate_feature_stats(&clients.iter().map(|c| (c.feature_mean.clone(), c.feature_variance.clone())).collect::<Vec<_>>());
    let global = GlobalModel {
        centers: global_centers,
        weights: ViewWeights::uniform(s),
        round: 0,
        feature_mean,
        feature_variance,
        scalings,
    };
    Ok((global, clients))
}

fn blend(g: f64, global: &[f64], local: &mut [f64]) {
    if g == 1.0 {
        local.copy_from_slice(global);
    } else if g > 0.0 {
        for (l, &x) in local.iter_mut().zip(global) {
            *l = g * x + (1.0 - g) * *l;
        }
    }
}

/// One client round: align the local clusters to the global ones, blend
/// towards the global model by `gamma`/`rho`, then run `local_iters`
/// alternating updates. Degenerate clusters are reported in the stats.
pub fn client_round(
    state: &mut ClientState,
    global: &GlobalModel,
    local_iters: usize,
    mut trace: Option<&mut Vec<IterationRecord>>,
) -> Result<ClientStats> {
    let perm = align_clusters(&state.centers, &global.centers)?;
    state.permute(&perm);
    for (a, g) in state.centers.iter_mut().zip(&global.centers) {
        blend(state.gamma, g.as_slice(), a.as_mut_slice());
    }
    let mut v = state.weights.as_slice().to_vec();
    if global.weights.len() != v.len() {
        bail!(Shape, "global model has {} views, client has {}", global.weights.len(), v.len());
    }
    blend(state.rho, global.weights.as_slice(), &mut v);
    state.weights = if state.rho == 1.0 { global.weights.clone() } else { ViewWeights::onto_simplex(v) };

    let mut diagnostics = Vec::new();
    let mut objective = None;
    for it in 0..local_iters {
        let step = state.engine.step(&mut state.centers, &mut state.weights)?;
        for (view, cluster) in step.degenerate {
            diagnostics.push(Diagnostic::DegenerateCluster { iteration: it, view, cluster });
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(IterationRecord {
                memberships: step.memberships.clone(),
                centers: state.centers.clone(),
                weights: state.weights.clone(),
                objective: step.objective,
            });
        }
        state.memberships = step.memberships;
        objective = Some(step.objective);
    }
    let objective = objective.unwrap_or_else(|| state.current_objective());
    Ok(state.stats(objective, diagnostics))
}

// ---------------------------------------------------------------------------
// Server side

/// Permutation `p` of local cluster indices such that local cluster `p[j]`
/// is matched to reference cluster `j`, minimizing the total squared
/// distance over all views concatenated.
pub fn align_clusters(local: &[Matrix], reference: &[Matrix]) -> Result<Vec<usize>> {
    if local.len() != reference.len() {
        bail!(Shape, "{} local views against {} reference views", local.len(), reference.len());
    }
    let c = reference.first().map_or(0, Matrix::rows);
    for (a, r) in local.iter().zip(reference) {
        if a.rows() != r.rows() {
            return Err(Error::AlignmentUnsupported(format!(
                "local model has {} clusters, reference has {}",
                a.rows(),
                r.rows()
            )));
        }
        if a.cols() != r.cols() {
            bail!(Shape, "center dimensions differ: {} vs {}", a.cols(), r.cols());
        }
    }
    let mut cost = Matrix::zeros(c, c);
    for j in 0..c {
        for k in 0..c {
            let mut s = 0.0;
            for (a, r) in local.iter().zip(reference) {
                for (x, y) in a.row(k).iter().zip(r.row(j)) {
                    s += (x - y) * (x - y);
                }
            }
            cost.set(j, k, s);
        }
    }
    hungarian(&cost)
}

/// Reorders a client's uploaded clusters by `perm` (see [`align_clusters`]).
pub fn permute_stats(stats: &mut ClientStats, perm: &[usize]) {
    for a in stats.centers.iter_mut() {
        *a = a.select_rows(perm);
    }
    stats.quality = perm.iter().map(|&k| stats.quality[k]).collect();
}

pub fn compute_client_weights(stats: &[ClientStats], mode: ClientWeighting) -> Result<Vec<f64>> {
    if stats.is_empty() {
        bail!(Aggregation, "no client statistics to weight");
    }
    let raw: Vec<f64> = match mode {
        ClientWeighting::BySamples => stats.iter().map(|s| s.sample_count as f64).collect(),
        ClientWeighting::ByQuality => stats.iter().map(|s| s.confidence).collect(),
    };
    let total: f64 = raw.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        bail!(Aggregation, "client weights sum to {}", total);
    }
    Ok(raw.into_iter().map(|w| w / total).collect())
}

fn check_shapes(stats: &[ClientStats]) -> Result<()> {
    let Some(first) = stats.first() else {
        bail!(Aggregation, "no client statistics to aggregate");
    };
    for s in stats {
        let same = s.centers.len() == first.centers.len()
            && s.centers.iter().zip(&first.centers).all(|(a, b)| a.shape() == b.shape())
            && s.weights.len() == first.weights.len();
        if !same {
            bail!(Aggregation, "client {} model shape differs from client {}", s.client_id, first.client_id);
        }
    }
    Ok(())
}

fn model_from(centers: Centers, weights: Vec<f64>, stats: &[ClientStats]) -> GlobalModel {
    let (feature_mean, feature_variance) = aggregate_feature_stats(
        &stats.iter().map(|s| (s.feature_mean.clone(), s.feature_variance.clone())).collect::<Vec<_>>(),
    );
    GlobalModel {
        centers,
        weights: ViewWeights::onto_simplex(weights),
        round: 0,
        feature_mean,
        feature_variance,
        scalings: None,
    }
}

/// `Σ w_l A_l` and `Σ w_l V_l`, the latter put back on the simplex.
/// Clients must already be aligned.
pub fn aggregate_weighted(stats: &[ClientStats], weights: &[f64]) -> Result<GlobalModel> {
    check_shapes(stats)?;
    if weights.len() != stats.len() {
        bail!(Aggregation, "{} weights for {} clients", weights.len(), stats.len());
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|&w| !(w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        bail!(Aggregation, "client weights must be non-negative and sum to 1, got {:?}", weights);
    }
    let mut centers: Centers = stats[0].centers.clone();
    let mut v: Vec<f64> = stats[0].weights.as_slice().to_vec();
    let w0 = weights[0];
    for a in centers.iter_mut() {
        for x in a.as_mut_slice() {
            *x *= w0;
        }
    }
    for x in v.iter_mut() {
        *x *= w0;
    }
    for (s, &w) in stats.iter().zip(weights).skip(1) {
        for (acc, a) in centers.iter_mut().zip(&s.centers) {
            for (x, y) in acc.as_mut_slice().iter_mut().zip(a.as_slice()) {
                *x += w * y;
            }
        }
        for (x, y) in v.iter_mut().zip(s.weights.as_slice()) {
            *x += w * y;
        }
    }
    Ok(model_from(centers, v, stats))
}

/// Elementwise lower median (for an even count, the smaller of the two
/// middle values).
pub fn aggregate_median(stats: &[ClientStats]) -> Result<GlobalModel> {
    check_shapes(stats)?;
    let mut centers = stats[0].centers.clone();
    for (h, a) in centers.iter_mut().enumerate() {
        for (idx, x) in a.as_mut_slice().iter_mut().enumerate() {
            let vals: Vec<f64> = stats.iter().map(|s| s.centers[h].as_slice()[idx]).collect();
            *x = lower_median(&vals);
        }
    }
    let v = (0..stats[0].weights.len())
        .map(|h| lower_median(&stats.iter().map(|s| s.weights.as_slice()[h]).collect::<Vec<_>>()))
        .collect();
    Ok(model_from(centers, v, stats))
}

/// Unweighted mean, computed as [`aggregate_weighted`] with weights `1/M`.
pub fn aggregate_fedavg(stats: &[ClientStats]) -> Result<GlobalModel> {
    let m = stats.len().max(1);
    aggregate_weighted(stats, &vec![1.0 / m as f64; stats.len()])
}

/// Weighted aggregation where the server only sees the masked sum of the
/// clients' pre-weighted contributions.
pub fn aggregate_weighted_secure(
    stats: &[ClientStats],
    weights: &[f64],
    session_seed: u64,
    scale: u64,
) -> Result<GlobalModel> {
    check_shapes(stats)?;
    if weights.len() != stats.len() {
        bail!(Aggregation, "{} weights for {} clients", weights.len(), stats.len());
    }
    let vectors: Vec<Vec<f64>> = stats
        .iter()
        .zip(weights)
        .map(|(s, &w)| {
            s.centers
                .iter()
                .flat_map(|a| a.as_slice().iter())
                .chain(s.weights.as_slice())
                .map(|x| w * x)
                .collect()
        })
        .collect();
    let ids: Vec<usize> = stats.iter().map(|s| s.client_id).collect();
    let sum = privacy::secure_sum(&vectors, &ids, session_seed, scale)?;
    let mut offset = 0;
    let mut centers = stats[0].centers.clone();
    for a in centers.iter_mut() {
        let len = a.as_slice().len();
        a.as_mut_slice().copy_from_slice(&sum[offset..offset + len]);
        offset += len;
    }
    Ok(model_from(centers, sum[offset..].to_vec(), stats))
}

/// Unweighted mean over clients of per-view feature means and variances.
/// This is not the pooled mean when client sizes differ.
pub fn aggregate_feature_stats(per_client: &[(Vec<Vec<f64>>, Vec<Vec<f64>>)]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let Some((mu0, var0)) = per_client.first() else {
        return (Vec::new(), Vec::new());
    };
    let m = per_client.len() as f64;
    let avg = |pick: &dyn Fn(&(Vec<Vec<f64>>, Vec<Vec<f64>>)) -> &Vec<Vec<f64>>, shape: &Vec<Vec<f64>>| {
        shape
            .iter()
            .enumerate()
            .map(|(h, row)| {
                (0..row.len())
                    .map(|j| per_client.iter().map(|p| pick(p)[h][j]).sum::<f64>() / m)
                    .collect()
            })
            .collect()
    };
    (avg(&|p| &p.0, mu0), avg(&|p| &p.1, var0))
}

fn center_shift(a: &[Matrix], b: &[Matrix]) -> f64 {
    math::sqrt(a.iter().zip(b).map(|(x, y)| x.sq_distance(y)).sum())
}

fn weight_shift(a: &ViewWeights, b: &ViewWeights) -> f64 {
    math::sqrt(a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// True iff both the Frobenius change of the centers and the Euclidean
/// change of the view weights are strictly below `eps`.
pub fn check_convergence(prev: &GlobalModel, next: &GlobalModel, eps: f64) -> bool {
    center_shift(&prev.centers, &next.centers) < eps && weight_shift(&prev.weights, &next.weights) < eps
}

/// Bytes one client uploads per round: a 32-byte header, the centers
/// (`8·Σ c·d_h`), the view weights (`8·s`) and, with statistics,
/// `8·(c + Σ c·d_h + s)` more.
pub fn payload_bytes(c: usize, dims: &[usize], with_stats: bool) -> u64 {
    let s = dims.len() as u64;
    let c = c as u64;
    let centers: u64 = dims.iter().map(|&d| c * d as u64).sum();
    let stats = if with_stats { 8 * (c + centers + s) } else { 0 };
    32 + 8 * centers + 8 * s + stats
}

// ---------------------------------------------------------------------------
// Driver

#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub client_objectives: Vec<f64>,
    pub client_weights: Vec<f64>,
    pub gammas: Vec<f64>,
    pub rhos: Vec<f64>,
    /// Total upload over all clients this round.
    pub payload_bytes: u64,
    pub center_shift: f64,
    pub weight_shift: f64,
    pub epsilon: Option<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClientModel {
    pub client_id: usize,
    pub centers: Centers,
    pub weights: ViewWeights,
    /// Final local memberships, columns aligned to the global clusters.
    pub memberships: MembershipMatrix,
    pub gamma: f64,
    pub rho: f64,
    pub diagnostics: Vec<Diagnostic>,
}

impl ClientModel {
    pub fn hard_labels(&self) -> Vec<usize> {
        self.memberships.hard_labels()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FederationResult {
    pub global: GlobalModel,
    pub clients: Vec<ClientModel>,
    pub rounds: Vec<RoundRecord>,
    pub converged_round: Option<usize>,
}

impl FederationResult {
    /// Every client's hard labels in the global cluster numbering,
    /// concatenated in client order.
    pub fn pooled_labels(&self) -> Vec<usize> {
        self.clients.iter().flat_map(ClientModel::hard_labels).collect()
    }
}

pub fn run_federation(datasets: &[MultiViewDataset], cfg: &FedConfig) -> Result<FederationResult> {
    run_inner(datasets, cfg, None)
}

/// Like [`run_federation`], also returning every client's state after each
/// local iteration.
pub fn run_federation_traced(
    datasets: &[MultiViewDataset],
    cfg: &FedConfig,
) -> Result<(FederationResult, Vec<Vec<IterationRecord>>)> {
    let mut traces = vec![Vec::new(); datasets.len()];
    let r = run_inner(datasets, cfg, Some(&mut traces))?;
    Ok((r, traces))
}

fn run_inner(
    datasets: &[MultiViewDataset],
    cfg: &FedConfig,
    mut traces: Option<&mut Vec<Vec<IterationRecord>>>,
) -> Result<FederationResult> {
    let (mut global, mut clients) = init_federation(datasets, cfg)?;
    let schedule = if cfg.privacy.enabled {
        Some(budget_schedule(cfg.privacy.epsilon_total, cfg.rounds, cfg.privacy.schedule)?)
    } else {
        None
    };
    let seed = cfg.cluster.seed;
    let mut rounds = Vec::new();
    let mut converged_round = None;
    let mut diagnostics: Vec<Vec<Diagnostic>> = vec![Vec::new(); clients.len()];

    for t in 0..cfg.rounds {
        let mut uploads = Vec::with_capacity(clients.len());
        for (l, state) in clients.iter_mut().enumerate() {
            let tr = traces.as_deref_mut().map(|all| &mut all[l]);
            let mut stats = client_round(state, &global, cfg.local_iters, tr)?;
            diagnostics[l].extend(stats.diagnostics.iter().cloned());
            if cfg.personalization == Personalization::Adaptive {
                state.adapt(stats.objective);
            }
            state.last_objective = Some(stats.objective);
            if let Some(eps) = &schedule {
                let mut r = rng::seeded(rng::derive(seed, DP_STREAM, l as u64, t as u64));
                let p = &cfg.privacy;
                stats.centers = privacy::dp_noise_centers(&stats.centers, eps[t], p.delta, p.sensitivity, &mut r)?;
                stats.weights = privacy::dp_noise_view_weights(&stats.weights, eps[t], p.delta, stats.sample_count, &mut r)?;
            }
            let perm = align_clusters(&stats.centers, &global.centers)?;
            permute_stats(&mut stats, &perm);
            uploads.push(stats);
        }

        let weights = match cfg.aggregation {
            Aggregation::FedAvg => vec![1.0 / uploads.len() as f64; uploads.len()],
            _ => compute_client_weights(&uploads, cfg.client_weighting)?,
        };
        let mut next = match (cfg.aggregation, cfg.privacy.secure_aggregation) {
            (Aggregation::Median, _) => aggregate_median(&uploads)?,
            (_, true) => {
                let session = rng::derive(seed, SECAGG_STREAM, t as u64, u64::MAX);
                aggregate_weighted_secure(&uploads, &weights, session, cfg.privacy.fixed_point_scale)?
            }
            (Aggregation::Weighted, false) => aggregate_weighted(&uploads, &weights)?,
            (Aggregation::FedAvg, false) => aggregate_fedavg(&uploads)?,
        };
        if next.centers.iter().any(|a| !a.is_finite()) {
            bail!(Numerical, "global centers became non-finite in round {}", t);
        }
        next.round = t + 1;
        next.scalings = global.scalings.take();

        let payload = clients
            .iter()
            .map(|c| payload_bytes(c.n_clusters(), &c.dims(), cfg.share_stats))
            .sum();
        let converged = check_convergence(&global, &next, cfg.epsilon_conv);
        rounds.push(RoundRecord {
            round: t + 1,
            client_objectives: uploads.iter().map(|s| s.objective).collect(),
            client_weights: weights,
            gammas: clients.iter().map(|c| c.gamma).collect(),
            rhos: clients.iter().map(|c| c.rho).collect(),
            payload_bytes: payload,
            center_shift: center_shift(&global.centers, &next.centers),
            weight_shift: weight_shift(&global.weights, &next.weights),
            epsilon: schedule.as_ref().map(|e| e[t]),
            converged,
        });
        global = next;
        if converged {
            converged_round = Some(t + 1);
            break;
        }
    }

    let mut models = Vec::with_capacity(clients.len());
    for (mut state, diag) in clients.into_iter().zip(diagnostics) {
        let perm = align_clusters(&state.centers, &global.centers)?;
        state.permute(&perm);
        models.push(ClientModel {
            client_id: state.client_id,
            centers: state.centers,
            weights: state.weights,
            memberships: state.memberships,
            gamma: state.gamma,
            rho: state.rho,
            diagnostics: diag,
        });
    }
    Ok(FederationResult {
        global,
        clients: models,
        rounds,
        converged_round,
    })
}
