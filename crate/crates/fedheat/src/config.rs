//! Experiment configuration: a TOML file with strict schema.
//!
//! Every section and key is optional; omitted keys take the defaults below.
//! Unknown keys are rejected, and every error names the offending line.
//!
//! ```toml
//! seed = 0
//! repetitions = 5
//!
//! [data]
//! source = "synthetic"      # synthetic | directory | iris
//! n_per_cluster = 250
//! keep_labels = [2, 3]      # optional subset, relabelled 0..
//!
//! [[data.shapes]]           # optional per-(view, cluster) override
//! view = 0
//! cluster = 0
//! radius = 0.7
//!
//! [cluster]
//! c = 4
//! m = 2.0
//! alpha = 5.0
//!
//! [federation]
//! fractions = [0.85, 0.15]
//! rounds = 10
//! local_iters = 50
//!
//! [privacy]
//! enabled = false
//! ```

use std::path::{Path, PathBuf};

use fedheat_core::federation::{Aggregation, ClientWeighting, FedConfig, Personalization};
use fedheat_core::privacy::{BudgetSchedule, PrivacyConfig};
use fedheat_core::synth::{BenchmarkSpec, ShapeKind};
use fedheat_core::{ClusterConfig, DistanceKind, HkcEstimator, InitMethod};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub repetitions: usize,
    pub data: DataSection,
    pub cluster: ClusterSection,
    pub federation: FederationSection,
    pub privacy: PrivacySection,
    pub evaluate: EvaluateSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            repetitions: 1,
            data: DataSection::default(),
            cluster: ClusterSection::default(),
            federation: FederationSection::default(),
            privacy: PrivacySection::default(),
            evaluate: EvaluateSection::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    Synthetic,
    Directory,
    Iris,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub source: DataSource,
    /// Dataset directory for `directory`; optional replacement table for `iris`.
    pub path: Option<PathBuf>,
    pub n_per_cluster: usize,
    pub noiseless: bool,
    pub keep_labels: Option<Vec<usize>>,
    pub shapes: Vec<ShapeOverride>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            source: DataSource::Synthetic,
            path: None,
            n_per_cluster: 250,
            noiseless: false,
            keep_labels: None,
            shapes: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeOverride {
    pub view: usize,
    pub cluster: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub petals: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bar_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitName {
    #[serde(rename = "kmeans++")]
    KMeansPP,
    #[serde(rename = "random")]
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HkcName {
    Minmax,
    MeanDeviation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceName {
    HeatKernel,
    SquaredEuclidean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterSection {
    pub c: usize,
    pub m: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub t_max: usize,
    pub init: InitName,
    pub hkc: HkcName,
    pub hkc_eps: f64,
    pub distance: DistanceName,
    pub normalize: bool,
    pub recompute_hkc_per_iter: bool,
}

impl Default for ClusterSection {
    fn default() -> Self {
        Self {
            c: 4,
            m: 2.0,
            alpha: 5.0,
            epsilon: 1e-6,
            t_max: 100,
            init: InitName::KMeansPP,
            hkc: HkcName::Minmax,
            hkc_eps: fedheat_core::kernel::DEFAULT_HKC_EPS,
            distance: DistanceName::HeatKernel,
            normalize: true,
            recompute_hkc_per_iter: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationName {
    Weighted,
    Median,
    Fedavg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightingName {
    Samples,
    Quality,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PersonalizationName {
    Adaptive,
    Static,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FederationSection {
    pub fractions: Vec<f64>,
    pub rounds: usize,
    pub local_iters: usize,
    pub aggregation: AggregationName,
    pub client_weighting: WeightingName,
    pub epsilon_conv: f64,
    pub gamma: f64,
    pub rho: f64,
    pub personalization: PersonalizationName,
    pub share_stats: bool,
    /// Run data certification before training; a rejection exits with 1.
    pub certify: bool,
}

impl Default for FederationSection {
    fn default() -> Self {
        Self {
            fractions: vec![0.85, 0.15],
            rounds: 10,
            local_iters: 50,
            aggregation: AggregationName::Weighted,
            client_weighting: WeightingName::Samples,
            epsilon_conv: 1e-6,
            gamma: 0.5,
            rho: 0.5,
            personalization: PersonalizationName::Adaptive,
            share_stats: true,
            certify: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleName {
    Paper,
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrivacySection {
    pub enabled: bool,
    pub epsilon_total: f64,
    pub delta: f64,
    pub sensitivity: f64,
    pub schedule: ScheduleName,
    pub secure_aggregation: bool,
    pub fixed_point_scale: u64,
}

impl Default for PrivacySection {
    fn default() -> Self {
        let p = PrivacyConfig::default();
        Self {
            enabled: p.enabled,
            epsilon_total: p.epsilon_total,
            delta: p.delta,
            sensitivity: p.sensitivity,
            schedule: ScheduleName::Paper,
            secure_aggregation: p.secure_aggregation,
            fixed_point_scale: p.fixed_point_scale,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSection {
    pub predictions: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Dataset directory; enables silhouette and Calinski-Harabasz.
    pub dataset: Option<PathBuf>,
}

/// A semantic config problem tied to a key.
#[derive(Debug)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "config error at line {} (`{}`): {}", l, self.key, self.message),
            None => write!(f, "config error (`{}`): {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line of `key` in `[section]` (or the `nth` `[[section]]` entry),
/// or of the section header when the key is absent.
fn key_line(src: &str, section: &str, nth: usize, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut seen = 0usize;
    let mut header = None;
    for (i, line) in src.lines().enumerate() {
        let t = line.split('#').next().unwrap_or("").trim();
        if t.starts_with('[') {
            current = t.trim_matches(|c| c == '[' || c == ']').trim().to_owned();
            if current == section {
                seen += 1;
                if seen == nth + 1 {
                    header = Some(i + 1);
                }
            }
            continue;
        }
        if current == section && seen == nth + 1 {
            if let Some((k, _)) = t.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    if section.is_empty() {
        return src
            .lines()
            .position(|l| l.split_once('=').is_some_and(|(k, _)| k.trim() == key))
            .map(|i| i + 1);
    }
    header
}

struct Checker<'a> {
    src: &'a str,
    errors: Vec<ConfigError>,
}

impl Checker<'_> {
    fn at(&mut self, section: &str, nth: usize, key: &str, ok: bool, message: impl Into<String>) {
        if !ok {
            let full = if section.is_empty() { key.to_owned() } else { format!("{section}.{key}") };
            self.errors.push(ConfigError {
                line: key_line(self.src, section, nth, key),
                key: full,
                message: message.into(),
            });
        }
    }

    fn check(&mut self, section: &str, key: &str, ok: bool, message: impl Into<String>) {
        self.at(section, 0, key, ok, message);
    }
}

impl ExperimentConfig {
    /// Parses TOML, then checks every value. `src` is kept for line numbers.
    pub fn from_toml(src: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(src).map_err(CliError::validation)?;
        cfg.validate(src)?;
        Ok(cfg)
    }

    /// Loads a config file, or the config embedded in a `report.json`.
    /// Relative paths are resolved against the file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(anyhow::Error::new(e).context(format!("reading {}", path.display()))))?;
        let mut cfg = if path.extension().is_some_and(|e| e == "json") {
            #[derive(Deserialize)]
            struct Embedded {
                config: ExperimentConfig,
            }
            let r: Embedded = serde_json::from_str(&src).map_err(|e| {
                CliError::validation(anyhow::Error::new(e).context(format!("{} is not a fedheat report", path.display())))
            })?;
            r.config.validate("")?;
            r.config
        } else {
            Self::from_toml(&src).map_err(|e| e.context(format!("in {}", path.display())))?
        };
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let base = std::fs::canonicalize(&base).unwrap_or(base);
        cfg.resolve_paths(&base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        fix(&mut self.data.path);
        fix(&mut self.evaluate.predictions);
        fix(&mut self.evaluate.labels);
        fix(&mut self.evaluate.dataset);
    }

    pub fn validate(&self, src: &str) -> CliResult<()> {
        let mut c = Checker { src, errors: Vec::new() };
        c.check("", "repetitions", self.repetitions >= 1, "must be at least 1");

        let d = &self.data;
        c.check("data", "n_per_cluster", d.n_per_cluster >= 1, "must be at least 1");
        c.check(
            "data",
            "path",
            d.source != DataSource::Directory || d.path.is_some(),
            "source = \"directory\" needs a path",
        );
        if let Some(k) = &d.keep_labels {
            c.check("data", "keep_labels", !k.is_empty(), "must list at least one label");
        }
        if d.source == DataSource::Synthetic {
            if let Err(e) = self.benchmark_spec() {
                c.at("data.shapes", e.0, e.1, false, e.2);
            }
        }

        let k = &self.cluster;
        c.check("cluster", "c", k.c >= 1, "must be at least 1");
        c.check("cluster", "m", k.m > 1.0 && k.m.is_finite(), format!("fuzzifier must be > 1, got {}", k.m));
        c.check("cluster", "alpha", k.alpha > 1.0 && k.alpha.is_finite(), format!("view exponent must be > 1, got {}", k.alpha));
        c.check("cluster", "epsilon", k.epsilon > 0.0, "must be > 0");
        c.check("cluster", "t_max", k.t_max >= 1, "must be at least 1");
        c.check("cluster", "hkc_eps", k.hkc_eps > 0.0, "must be > 0");

        let f = &self.federation;
        let total: f64 = f.fractions.iter().sum();
        c.check(
            "federation",
            "fractions",
            !f.fractions.is_empty() && f.fractions.iter().all(|&x| x >= 0.0) && (total - 1.0).abs() <= 1e-9,
            format!("must be non-negative and sum to 1, got {:?}", f.fractions),
        );
        c.check("federation", "rounds", f.rounds >= 1, "must be at least 1");
        c.check("federation", "local_iters", f.local_iters >= 1, "must be at least 1");
        c.check("federation", "epsilon_conv", f.epsilon_conv >= 0.0, "must be >= 0");
        c.check("federation", "gamma", (0.0..=1.0).contains(&f.gamma), "must lie in [0, 1]");
        c.check("federation", "rho", (0.0..=1.0).contains(&f.rho), "must lie in [0, 1]");

        let p = &self.privacy;
        c.check("privacy", "epsilon_total", p.epsilon_total > 0.0 && p.epsilon_total.is_finite(), "must be > 0");
        c.check("privacy", "delta", p.delta > 0.0 && p.delta < 1.0, "must lie in (0, 1)");
        c.check("privacy", "sensitivity", p.sensitivity > 0.0 && p.sensitivity.is_finite(), "must be > 0");
        c.check("privacy", "fixed_point_scale", p.fixed_point_scale.is_power_of_two(), "must be a power of two");
        c.check(
            "privacy",
            "secure_aggregation",
            !(p.secure_aggregation && f.aggregation == AggregationName::Median),
            "cannot be combined with median aggregation",
        );

        match c.errors.into_iter().next() {
            None => Ok(()),
            Some(e) => Err(CliError::validation(e)),
        }
    }

    pub fn cluster_config(&self, seed: u64) -> ClusterConfig {
        let k = &self.cluster;
        ClusterConfig {
            c: k.c,
            m: k.m,
            alpha: k.alpha,
            epsilon: k.epsilon,
            t_max: k.t_max,
            seed,
            init: match k.init {
                InitName::KMeansPP => InitMethod::KMeansPP,
                InitName::Random => InitMethod::Random,
            },
            hkc: match k.hkc {
                HkcName::Minmax => HkcEstimator::MinMax,
                HkcName::MeanDeviation => HkcEstimator::MeanDeviation,
            },
            hkc_eps: k.hkc_eps,
            distance: match k.distance {
                DistanceName::HeatKernel => DistanceKind::HeatKernel,
                DistanceName::SquaredEuclidean => DistanceKind::SquaredEuclidean,
            },
            recompute_hkc_per_iter: k.recompute_hkc_per_iter,
            normalize: k.normalize,
        }
    }

    pub fn privacy_config(&self) -> PrivacyConfig {
        let p = &self.privacy;
        PrivacyConfig {
            enabled: p.enabled,
            epsilon_total: p.epsilon_total,
            delta: p.delta,
            sensitivity: p.sensitivity,
            schedule: match p.schedule {
                ScheduleName::Paper => BudgetSchedule::Paper,
                ScheduleName::Uniform => BudgetSchedule::Uniform,
            },
            secure_aggregation: p.secure_aggregation,
            fixed_point_scale: p.fixed_point_scale,
        }
    }

    pub fn fed_config(&self, seed: u64) -> FedConfig {
        let f = &self.federation;
        FedConfig {
            cluster: self.cluster_config(seed),
            client_clusters: Vec::new(),
            rounds: f.rounds,
            local_iters: f.local_iters,
            aggregation: match f.aggregation {
                AggregationName::Weighted => Aggregation::Weighted,
                AggregationName::Median => Aggregation::Median,
                AggregationName::Fedavg => Aggregation::FedAvg,
            },
            client_weighting: match f.client_weighting {
                WeightingName::Samples => ClientWeighting::BySamples,
                WeightingName::Quality => ClientWeighting::ByQuality,
            },
            epsilon_conv: f.epsilon_conv,
            gamma: f.gamma,
            rho: f.rho,
            personalization: match f.personalization {
                PersonalizationName::Adaptive => Personalization::Adaptive,
                PersonalizationName::Static => Personalization::Static,
            },
            share_stats: f.share_stats,
            privacy: self.privacy_config(),
        }
    }

    /// The synthetic benchmark with overrides applied. On failure returns
    /// `(override index, key, message)`.
    pub fn benchmark_spec(&self) -> Result<BenchmarkSpec, (usize, &'static str, String)> {
        let mut spec = BenchmarkSpec::paper(self.data.n_per_cluster);
        if self.data.noiseless {
            spec = spec.noiseless();
        }
        for (i, o) in self.data.shapes.iter().enumerate() {
            let Some(shape) = spec.views.get_mut(o.view).and_then(|v| v.get_mut(o.cluster)) else {
                return Err((i, "view", format!("no shape at view {} cluster {}", o.view, o.cluster)));
            };
            apply_override(&mut shape.kind, o).map_err(|(k, m)| (i, k, m))?;
            if let Some(c) = o.center {
                shape.center = c;
            }
            if let Some(s) = o.noise_sigma {
                shape.noise_sigma = s;
            }
            if let Err(e) = shape.validate() {
                let key = first_set_key(o);
                return Err((i, key, e.to_string()));
            }
        }
        Ok(spec)
    }
}

fn first_set_key(o: &ShapeOverride) -> &'static str {
    let fields = [
        ("radius", o.radius),
        ("a", o.a),
        ("b", o.b),
        ("outer", o.outer),
        ("inner", o.inner),
        ("shift", o.shift),
        ("half_angle", o.half_angle),
        ("base", o.base),
        ("amp", o.amp),
        ("freq", o.freq),
        ("petals", o.petals),
        ("half_length", o.half_length),
        ("bar_sigma", o.bar_sigma),
        ("scale", o.scale),
        ("noise_sigma", o.noise_sigma),
    ];
    fields.iter().find(|(_, v)| v.is_some()).map_or("view", |(k, _)| k)
}

fn apply_override(kind: &mut ShapeKind, o: &ShapeOverride) -> Result<(), (&'static str, String)> {
    let mut used: Vec<&'static str> = Vec::new();
    let mut set = |name: &'static str, slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
            used.push(name);
        }
    };
    match kind {
        ShapeKind::Circle { radius } => set("radius", radius, o.radius),
        ShapeKind::Ellipse { a, b } => {
            set("a", a, o.a);
            set("b", b, o.b);
        }
        ShapeKind::Crescent { outer, inner, shift, half_angle } => {
            set("outer", outer, o.outer);
            set("inner", inner, o.inner);
            set("shift", shift, o.shift);
            set("half_angle", half_angle, o.half_angle);
        }
        ShapeKind::SCurve { base, amp, freq } => {
            set("base", base, o.base);
            set("amp", amp, o.amp);
            set("freq", freq, o.freq);
        }
        ShapeKind::Diamond { base, amp, petals } => {
            set("base", base, o.base);
            set("amp", amp, o.amp);
            set("petals", petals, o.petals);
        }
        ShapeKind::Ring { inner, outer } => {
            set("inner", inner, o.inner);
            set("outer", outer, o.outer);
        }
        ShapeKind::Cross { half_length, bar_sigma } => {
            set("half_length", half_length, o.half_length);
            set("bar_sigma", bar_sigma, o.bar_sigma);
        }
        ShapeKind::Heart { scale } => set("scale", scale, o.scale),
    }
    let given = [
        ("radius", o.radius),
        ("a", o.a),
        ("b", o.b),
        ("outer", o.outer),
        ("inner", o.inner),
        ("shift", o.shift),
        ("half_angle", o.half_angle),
        ("base", o.base),
        ("amp", o.amp),
        ("freq", o.freq),
        ("petals", o.petals),
        ("half_length", o.half_length),
        ("bar_sigma", o.bar_sigma),
        ("scale", o.scale),
    ];
    for (name, v) in given {
        if v.is_some() && !used.contains(&name) {
            return Err((name, format!("`{}` is not a parameter of the {} shape", name, kind.name())));
        }
    }
    Ok(())
}
