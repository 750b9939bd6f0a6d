//! The five subcommands. Each writes its outputs into `out` and returns the
//! report it wrote.

use std::path::Path;
use std::time::Instant;

use fedheat_core::cluster::{fit_traced, view_labels};
use fedheat_core::federation::{
    payload_bytes, prepare_and_validate, run_federation, Certification, CertificationThresholds, FederationResult, RawClient,
};
use fedheat_core::metrics::MetricReport;
use fedheat_core::synth::{assemble_benchmark, partition_federated, validate_generated, ValidationReport, GENERATOR_VERSION};
use fedheat_core::{DistanceKind, HkcEstimator, Matrix, MultiViewDataset};
use log::{info, warn};
use serde_json::{json, Value};

use crate::config::{DataSource, ExperimentConfig};
use crate::dataset_io::{self, read_labels, write_dataset, write_file, write_labels, RawDataset};
use crate::error::{CliError, CliResult, OrKind};
use crate::iris;
use crate::report::{mean_std, metrics_json, summarize, summary_lines, Csv, Records, RunReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Generate,
    Cluster,
    Fedrun,
    Ablate,
    Evaluate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Cluster => "cluster",
            Command::Fedrun => "fedrun",
            Command::Ablate => "ablate",
            Command::Evaluate => "evaluate",
        }
    }
}

pub fn run(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> CliResult<RunReport> {
    std::fs::create_dir_all(out).or_runtime(&format!("creating {}", out.display()))?;
    let t0 = Instant::now();
    let (result, records, summary, failure) = match cmd {
        Command::Generate => generate(cfg, out)?,
        Command::Cluster => cluster(cfg, out)?,
        Command::Fedrun => fedrun(cfg, out)?,
        Command::Ablate => ablate(cfg, out)?,
        Command::Evaluate => evaluate(cfg)?,
    };
    let report = RunReport::new(cmd.name(), cfg, elapsed_ms(t0), result);
    report.write(out)?;
    records.write(out)?;
    write_file(&out.join("summary.txt"), &format!("fedheat {} (seed {})\n\n{}", cmd.name(), cfg.seed, summary))?;
    info!("{} finished in {:.1} ms, outputs in {}", cmd.name(), report.wall_clock_ms, out.display());
    match failure {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

type Outcome = (Value, Records, String, Option<CliError>);

fn elapsed_ms(t0: Instant) -> f64 {
    t0.elapsed().as_secs_f64() * 1e3
}

fn rep_seed(cfg: &ExperimentConfig, r: usize) -> u64 {
    cfg.seed.wrapping_add(r as u64)
}

// ---------------------------------------------------------------------------
// Data

fn raw_from(ds: MultiViewDataset, seed: Option<u64>) -> RawDataset {
    let mut meta = dataset_io::Meta::describe(ds.views(), ds.labels());
    meta.seed = seed;
    let (views, labels) = ds.into_parts();
    RawDataset { views, labels, meta }
}

/// The configured data for one seed, missing values kept as NaN.
fn load_raw(cfg: &ExperimentConfig, seed: u64) -> CliResult<RawDataset> {
    let raw = match cfg.data.source {
        DataSource::Synthetic => {
            let spec = cfg.benchmark_spec().map_err(|(_, k, m)| CliError::validation(anyhow::anyhow!("data.shapes.{k}: {m}")))?;
            raw_from(assemble_benchmark(&spec, seed)?, Some(seed))
        }
        DataSource::Directory => {
            let p = cfg.data.path.as_deref().expect("validated");
            dataset_io::read_raw(p)?
        }
        DataSource::Iris => {
            let (x, species) = iris::load(cfg.data.path.as_deref())?;
            let views = vec![x.select_cols(&[0, 2]), x.select_cols(&[1, 3])];
            raw_from(MultiViewDataset::new(views, Some(species))?, None)
        }
    };
    match &cfg.data.keep_labels {
        None => Ok(raw),
        Some(keep) => keep_labels(raw, keep),
    }
}

fn keep_labels(raw: RawDataset, keep: &[usize]) -> CliResult<RawDataset> {
    let Some(labels) = &raw.labels else {
        return Err(CliError::validation(anyhow::anyhow!("data.keep_labels needs labelled data")));
    };
    let rows: Vec<usize> = (0..labels.len()).filter(|&i| keep.contains(&labels[i])).collect();
    if rows.is_empty() {
        return Err(CliError::validation(anyhow::anyhow!("data.keep_labels {keep:?} selects no rows")));
    }
    let labels: Vec<usize> = rows.iter().map(|&i| keep.iter().position(|k| *k == labels[i]).unwrap_or_default()).collect();
    let views: Vec<Matrix> = raw.views.iter().map(|v| v.select_rows(&rows)).collect();
    let mut meta = dataset_io::Meta::describe(&views, Some(&labels));
    meta.seed = raw.meta.seed;
    Ok(RawDataset { views, labels: Some(labels), meta })
}

fn load_dataset(cfg: &ExperimentConfig, seed: u64) -> CliResult<MultiViewDataset> {
    let raw = load_raw(cfg, seed)?;
    MultiViewDataset::new(raw.views, raw.labels).map_err(|e| CliError::from(e).context("loading data"))
}

fn vstack(parts: &[&Matrix]) -> CliResult<Matrix> {
    let cols = parts[0].cols();
    let rows = parts.iter().map(|m| m.rows()).sum();
    let data = parts.iter().flat_map(|m| m.as_slice().iter().copied()).collect();
    Ok(Matrix::from_vec(rows, cols, data)?)
}

fn write_matrix(path: &Path, m: &Matrix) -> CliResult<()> {
    write_file(path, &dataset_io::render_matrix(m))
}

fn write_centers(dir: &Path, prefix: &str, centers: &[Matrix]) -> CliResult<()> {
    for (h, a) in centers.iter().enumerate() {
        write_matrix(&dir.join(format!("{prefix}_view_{}.csv", h + 1)), a)?;
    }
    Ok(())
}

fn write_weights(path: &Path, w: &[f64]) -> CliResult<()> {
    let mut csv = Csv::new(&["view", "weight"]);
    for (h, v) in w.iter().enumerate() {
        csv.row(&[&(h + 1), v]);
    }
    csv.write(path)
}

fn rep_dir(out: &Path, r: usize) -> CliResult<std::path::PathBuf> {
    let d = out.join(format!("rep_{r}"));
    std::fs::create_dir_all(&d).or_runtime(&format!("creating {}", d.display()))?;
    Ok(d)
}

// ---------------------------------------------------------------------------
// generate

fn validation_json(v: &ValidationReport) -> Value {
    json!({
        "passed": v.passed,
        "counts_ok": v.counts_ok,
        "ks": v.ks.map(|k| json!({ "statistic": k.statistic, "p_value": k.p_value })),
        "ks_passed": v.ks_passed,
        "cross_view_correlation": v.cross_view_correlation,
        "regeneration_recommended": v.regeneration_recommended,
        "shapes": v.checks.iter().map(|c| json!({
            "view": c.view + 1,
            "cluster": c.cluster,
            "shape": c.shape,
            "count": c.count,
            "expected_count": c.expected_count,
            "hausdorff": c.hausdorff,
            "bound": c.bound,
            "passed": c.passed,
        })).collect::<Vec<_>>(),
    })
}

fn generate(cfg: &ExperimentConfig, out: &Path) -> CliResult<Outcome> {
    if cfg.data.source != DataSource::Synthetic {
        return Err(CliError::validation(anyhow::anyhow!("generate needs data.source = \"synthetic\"")));
    }
    let spec = cfg.benchmark_spec().map_err(|(_, k, m)| CliError::validation(anyhow::anyhow!("data.shapes.{k}: {m}")))?;
    let ds = assemble_benchmark(&spec, cfg.seed)?;
    let v = validate_generated(&ds, &spec)?;
    let ds = match &cfg.data.keep_labels {
        Some(k) => ds.filter_labels(k)?,
        None => ds,
    };
    write_dataset(out, &ds, Some(cfg.seed), Some(GENERATOR_VERSION))?;
    let vj = validation_json(&v);
    write_file(&out.join("validation.json"), &(serde_json::to_string_pretty(&vj).or_runtime("serializing")? + "\n"))?;

    let mut records = Records::default();
    for c in &v.checks {
        records.push(json!({ "kind": "shape", "view": c.view + 1, "cluster": c.cluster, "shape": c.shape,
            "hausdorff": c.hausdorff, "bound": c.bound, "passed": c.passed }));
    }
    let mut summary = format!("rows per view {}, views {}, clusters {}\n", ds.n_samples(), ds.n_views(), spec.n_clusters());
    for c in &v.checks {
        summary += &format!(
            "view {} cluster {} {:<9} count {:>5}  hausdorff {:.4} (bound {:.4}) {}\n",
            c.view + 1,
            c.cluster,
            c.shape,
            c.count,
            c.hausdorff,
            c.bound,
            if c.passed { "ok" } else { "FAIL" }
        );
    }
    if let Some(k) = v.ks {
        summary += &format!("residual KS statistic {:.4}, p = {:.4}\n", k.statistic, k.p_value);
    }
    summary += &format!("validation {}\n", if v.passed { "passed" } else { "FAILED" });
    let failure = (!v.passed).then(|| {
        warn!("generated data failed validation; regenerating with another seed is recommended");
        CliError::validation(anyhow::anyhow!("generated data failed validation (see validation.json)"))
    });
    let result = json!({ "rows": ds.n_samples(), "views": ds.n_views(), "dims": ds.dims(), "validation": vj });
    Ok((result, records, summary, failure))
}

// ---------------------------------------------------------------------------
// cluster

fn cluster(cfg: &ExperimentConfig, out: &Path) -> CliResult<Outcome> {
    let mut reps = Vec::new();
    let mut metric_reports = Vec::new();
    let mut runtimes = Vec::new();
    let mut records = Records::default();
    for r in 0..cfg.repetitions {
        let seed = rep_seed(cfg, r);
        let ds = load_dataset(cfg, seed)?;
        let cc = cfg.cluster_config(seed);
        info!("cluster rep {r}: n = {}, seed {seed}", ds.n_samples());
        let t0 = Instant::now();
        let (model, _) = fit_traced(&ds, &cc)?;
        let runtime = elapsed_ms(t0);
        let labels = model.hard_labels();
        let per_view = view_labels(&ds, &model, &cc)?;
        let metrics = MetricReport::compute(ds.views(), &labels, ds.labels(), Some(&per_view), cc.c)?;

        let dir = rep_dir(out, r)?;
        write_labels(&dir.join("predictions.csv"), &labels)?;
        if let Some(t) = ds.labels() {
            write_labels(&dir.join("labels.csv"), t)?;
        }
        let mut obj = Csv::new(&["iteration", "objective"]);
        for (t, j) in model.objective_history.iter().enumerate() {
            obj.row(&[&(t + 1), j]);
            records.push(json!({ "kind": "iteration", "rep": r, "iteration": t + 1, "objective": j }));
        }
        obj.write(&dir.join("objective.csv"))?;
        write_weights(&dir.join("weights.csv"), model.weights.as_slice())?;
        write_centers(&dir, "centers", &model.centers_in_input_space())?;
        write_dataset(&dir.join("dataset"), &ds, Some(seed), None)?;

        let mj = metrics_json(&metrics);
        records.push(json!({ "kind": "repetition", "rep": r, "seed": seed, "metrics": mj, "runtime_ms": runtime }));
        reps.push(json!({
            "rep": r,
            "seed": seed,
            "n": ds.n_samples(),
            "iterations": model.iterations,
            "converged": model.converged,
            "final_objective": model.final_objective(),
            "objective_history": model.objective_history,
            "view_weights": model.weights.as_slice(),
            "diagnostics": model.diagnostics.iter().map(|d| format!("{d:?}")).collect::<Vec<_>>(),
            "metrics": mj,
            "runtime_ms": runtime,
        }));
        metric_reports.push(metrics);
        runtimes.push(runtime);
    }
    let summary = summarize(&metric_reports);
    let (rt, rs) = mean_std(&runtimes);
    let text = summary_lines(&summary);
    let result = json!({ "repetitions": reps, "summary": summary, "runtime_ms": { "mean": rt, "std": rs } });
    Ok((result, records, text, None))
}

// ---------------------------------------------------------------------------
// fedrun

struct Clients {
    datasets: Vec<MultiViewDataset>,
    certification: Option<Certification>,
}

fn split_clients(cfg: &ExperimentConfig, raw: RawDataset, seed: u64) -> CliResult<Clients> {
    let n = raw.meta.n;
    let fractions = &cfg.federation.fractions;
    let rows: Vec<Vec<usize>> = match &raw.labels {
        Some(l) => partition_federated(l, fractions, seed)?.clients,
        None => {
            // Unlabelled data: contiguous blocks.
            let mut out = Vec::new();
            let (mut cum, mut start) = (0.0, 0);
            for (j, f) in fractions.iter().enumerate() {
                cum += f;
                let end = if j + 1 == fractions.len() { n } else { ((n as f64 * cum).round() as usize).min(n) };
                out.push((start..end.max(start)).collect());
                start = end.max(start);
            }
            out
        }
    };
    if let Some(l) = rows.iter().position(Vec::is_empty) {
        return Err(CliError::validation(anyhow::anyhow!("client {l} receives no rows")));
    }
    let raw_clients: Vec<RawClient> = rows
        .iter()
        .map(|r| RawClient {
            views: raw.views.iter().map(|v| v.select_rows(r)).collect(),
            labels: raw.labels.as_ref().map(|l| r.iter().map(|&i| l[i]).collect()),
        })
        .collect();
    if cfg.federation.certify {
        let c = vec![cfg.cluster.c; raw_clients.len()];
        let cert = prepare_and_validate(raw_clients, &c, &CertificationThresholds::default())?;
        return Ok(Clients { datasets: cert.datasets.clone(), certification: Some(cert) });
    }
    let datasets = raw_clients
        .into_iter()
        .enumerate()
        .map(|(l, rc)| MultiViewDataset::new(rc.views, rc.labels).map_err(|e| CliError::from(e).context(format!("client {l}"))))
        .collect::<CliResult<_>>()?;
    Ok(Clients { datasets, certification: None })
}

fn certification_json(c: &Certification) -> Value {
    json!({
        "eta_global": c.eta_global,
        "xi_global": c.xi_global,
        "clients": c.clients.iter().map(|q| json!({
            "client": q.client_id,
            "n_samples": q.n_samples,
            "completeness": q.completeness,
            "imputed_entries": q.imputed_entries,
            "dropped_rows": q.dropped_rows,
            "outliers": q.outliers.iter().map(Vec::len).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

fn fedrun(cfg: &ExperimentConfig, out: &Path) -> CliResult<Outcome> {
    let mut reps = Vec::new();
    let mut metric_reports = Vec::new();
    let mut runtimes = Vec::new();
    let mut records = Records::default();
    for r in 0..cfg.repetitions {
        let seed = rep_seed(cfg, r);
        let clients = split_clients(cfg, load_raw(cfg, seed)?, seed)?;
        let fc = cfg.fed_config(seed);
        let sizes: Vec<usize> = clients.datasets.iter().map(MultiViewDataset::n_samples).collect();
        info!("fedrun rep {r}: clients {sizes:?}, seed {seed}");
        let t0 = Instant::now();
        let res = run_federation(&clients.datasets, &fc)?;
        let runtime = elapsed_ms(t0);

        let dir = rep_dir(out, r)?;
        let (pooled, client_metrics) = federated_metrics(&clients.datasets, &res, cfg.cluster.c)?;
        let dims = clients.datasets[0].dims();
        let formula: u64 = clients.datasets.iter().map(|_| payload_bytes(cfg.cluster.c, &dims, fc.share_stats)).sum();
        let n_total: usize = sizes.iter().sum();
        let naive = 8 * n_total as u64 * cfg.cluster.c as u64;

        write_fed_outputs(&dir, &clients.datasets, &res)?;
        for rr in &res.rounds {
            records.push(json!({
                "kind": "round", "rep": r, "round": rr.round, "payload_bytes": rr.payload_bytes,
                "center_shift": rr.center_shift, "weight_shift": rr.weight_shift, "epsilon": rr.epsilon,
                "converged": rr.converged, "client_objectives": rr.client_objectives,
            }));
        }
        let mj = metrics_json(&pooled);
        records.push(json!({ "kind": "repetition", "rep": r, "seed": seed, "metrics": mj, "runtime_ms": runtime }));
        reps.push(json!({
            "rep": r,
            "seed": seed,
            "client_sizes": sizes,
            "rounds_run": res.rounds.len(),
            "converged_round": res.converged_round,
            "global_view_weights": res.global.weights.as_slice(),
            "payload_bytes_per_round": res.rounds.iter().map(|x| x.payload_bytes).collect::<Vec<_>>(),
            "payload_formula_bytes": formula,
            "membership_share_bytes": naive,
            "epsilon_per_round": res.rounds.iter().map(|x| x.epsilon).collect::<Vec<_>>(),
            "certification": clients.certification.as_ref().map(certification_json),
            "metrics": mj,
            "clients": client_metrics,
            "runtime_ms": runtime,
        }));
        metric_reports.push(pooled);
        runtimes.push(runtime);
    }
    let summary = summarize(&metric_reports);
    let (rt, rs) = mean_std(&runtimes);
    let text = summary_lines(&summary);
    let result = json!({ "repetitions": reps, "summary": summary, "runtime_ms": { "mean": rt, "std": rs } });
    Ok((result, records, text, None))
}

/// Metrics on the pooled client data, then per client.
fn federated_metrics(datasets: &[MultiViewDataset], res: &FederationResult, c: usize) -> CliResult<(MetricReport, Vec<Value>)> {
    let s = datasets[0].n_views();
    let views: Vec<Matrix> = (0..s)
        .map(|h| vstack(&datasets.iter().map(|d| d.view(h)).collect::<Vec<_>>()))
        .collect::<CliResult<_>>()?;
    let truth: Option<Vec<usize>> = datasets.iter().map(|d| d.labels().map(<[usize]>::to_vec)).collect::<Option<Vec<_>>>().map(|v| v.concat());
    let pooled = MetricReport::compute(&views, &res.pooled_labels(), truth.as_deref(), None, c)?;
    let per_client = datasets
        .iter()
        .zip(&res.clients)
        .map(|(d, cm)| {
            let m = MetricReport::compute(d.views(), &cm.hard_labels(), d.labels(), None, c)?;
            Ok(json!({
                "client": cm.client_id,
                "n": d.n_samples(),
                "gamma": cm.gamma,
                "rho": cm.rho,
                "view_weights": cm.weights.as_slice(),
                "metrics": metrics_json(&m),
            }))
        })
        .collect::<CliResult<_>>()?;
    Ok((pooled, per_client))
}

fn write_fed_outputs(dir: &Path, datasets: &[MultiViewDataset], res: &FederationResult) -> CliResult<()> {
    let mut rounds = Csv::new(&["round", "payload_bytes", "center_shift", "weight_shift", "epsilon", "converged"]);
    let mut per_client = Csv::new(&["round", "client", "objective", "weight", "gamma", "rho"]);
    for r in &res.rounds {
        let eps = r.epsilon.map_or(String::new(), |e| e.to_string());
        rounds.row(&[&r.round, &r.payload_bytes, &r.center_shift, &r.weight_shift, &eps, &r.converged]);
        for l in 0..r.client_objectives.len() {
            per_client.row(&[&r.round, &l, &r.client_objectives[l], &r.client_weights[l], &r.gammas[l], &r.rhos[l]]);
        }
    }
    rounds.write(&dir.join("rounds.csv"))?;
    per_client.write(&dir.join("clients.csv"))?;
    write_labels(&dir.join("predictions.csv"), &res.pooled_labels())?;
    let truth: Option<Vec<usize>> = datasets.iter().map(|d| d.labels().map(<[usize]>::to_vec)).collect::<Option<Vec<_>>>().map(|v| v.concat());
    if let Some(t) = truth {
        write_labels(&dir.join("labels.csv"), &t)?;
    }
    write_weights(&dir.join("global_weights.csv"), res.global.weights.as_slice())?;
    let centers: Vec<Matrix> = match &res.global.scalings {
        Some(s) => res.global.centers.iter().zip(s).map(|(a, sc)| sc.invert(a)).collect(),
        None => res.global.centers.clone(),
    };
    write_centers(dir, "global_centers", &centers)?;
    for (d, cm) in datasets.iter().zip(&res.clients) {
        let cd = dir.join(format!("client_{}", cm.client_id));
        std::fs::create_dir_all(&cd).or_runtime("creating client directory")?;
        write_labels(&cd.join("predictions.csv"), &cm.hard_labels())?;
        write_weights(&cd.join("weights.csv"), cm.weights.as_slice())?;
        write_dataset(&cd.join("dataset"), d, None, None)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// ablate

const METHODS: [(&str, DistanceKind, HkcEstimator); 3] = [
    ("baseline", DistanceKind::SquaredEuclidean, HkcEstimator::MinMax),
    ("hkc-minmax", DistanceKind::HeatKernel, HkcEstimator::MinMax),
    ("hkc-meandev", DistanceKind::HeatKernel, HkcEstimator::MeanDeviation),
];

fn ablate(cfg: &ExperimentConfig, out: &Path) -> CliResult<Outcome> {
    let mut runs = Csv::new(&["method", "seed", "accuracy", "nmi", "ari", "iterations", "runtime_ms"]);
    let mut per_method: Vec<(Vec<MetricReport>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); METHODS.len()];
    let mut records = Records::default();
    for r in 0..cfg.repetitions {
        let seed = rep_seed(cfg, r);
        let ds = load_dataset(cfg, seed)?;
        let Some(truth) = ds.labels() else {
            return Err(CliError::validation(anyhow::anyhow!("ablate needs labelled data")));
        };
        for (mi, (name, distance, hkc)) in METHODS.iter().enumerate() {
            let mut cc = cfg.cluster_config(seed);
            cc.distance = *distance;
            cc.hkc = *hkc;
            let t0 = Instant::now();
            let (model, _) = fit_traced(&ds, &cc)?;
            let runtime = elapsed_ms(t0);
            let m = MetricReport::compute(&[], &model.hard_labels(), Some(truth), None, cc.c)?;
            let f = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
            runs.row(&[name, &seed, &f(m.accuracy), &f(m.nmi), &f(m.ari), &model.iterations, &runtime]);
            records.push(json!({ "kind": "run", "method": name, "seed": seed, "metrics": metrics_json(&m),
                "iterations": model.iterations, "runtime_ms": runtime }));
            per_method[mi].0.push(m);
            per_method[mi].1.push(runtime);
        }
    }
    runs.write(&out.join("ablation_runs.csv"))?;

    let mut table = Csv::new(&["method", "accuracy_mean", "accuracy_std", "nmi_mean", "nmi_std", "ari_mean", "ari_std", "runtime_ms"]);
    let mut rows = Vec::new();
    let mut text = String::new();
    for ((name, _, _), (ms, rts)) in METHODS.iter().zip(&per_method) {
        let s = summarize(ms);
        let get = |k: &str, f: &str| s[k][f].as_f64().map_or(String::new(), |v| v.to_string());
        let (rt, _) = mean_std(rts);
        table.row(&[
            name,
            &get("accuracy", "mean"),
            &get("accuracy", "std"),
            &get("nmi", "mean"),
            &get("nmi", "std"),
            &get("ari", "mean"),
            &get("ari", "std"),
            &rt,
        ]);
        text += &format!(
            "{:<12} accuracy {:.4} ± {:.4}  nmi {:.4} ± {:.4}\n",
            name,
            s["accuracy"]["mean"].as_f64().unwrap_or(f64::NAN),
            s["accuracy"]["std"].as_f64().unwrap_or(f64::NAN),
            s["nmi"]["mean"].as_f64().unwrap_or(f64::NAN),
            s["nmi"]["std"].as_f64().unwrap_or(f64::NAN),
        );
        rows.push(json!({ "method": name, "summary": s, "runtime_ms": rt }));
    }
    table.write(&out.join("ablation.csv"))?;
    Ok((json!({ "methods": rows }), records, text, None))
}

// ---------------------------------------------------------------------------
// evaluate

fn evaluate(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let e = &cfg.evaluate;
    let Some(pred_path) = &e.predictions else {
        return Err(CliError::validation(anyhow::anyhow!("evaluate needs evaluate.predictions")));
    };
    let pred = read_labels(pred_path)?;
    if pred.is_empty() {
        return Err(CliError::validation(anyhow::anyhow!("{} holds no labels", pred_path.display())));
    }
    let truth = e.labels.as_deref().map(read_labels).transpose()?;
    if let Some(t) = &truth {
        if t.len() != pred.len() {
            return Err(CliError::validation(anyhow::anyhow!(
                "{} predictions but {} labels",
                pred.len(),
                t.len()
            )));
        }
    }
    let views = match &e.dataset {
        Some(d) => {
            let (ds, _) = dataset_io::read_dataset(d)?;
            if ds.n_samples() != pred.len() {
                return Err(CliError::validation(anyhow::anyhow!("{} predictions for {} rows", pred.len(), ds.n_samples())));
            }
            ds.into_parts().0
        }
        None => Vec::new(),
    };
    let c = pred.iter().copied().max().map_or(0, |m| m + 1);
    let m = MetricReport::compute(&views, &pred, truth.as_deref(), None, c)?;
    let mj = metrics_json(&m);
    let mut records = Records::default();
    records.push(json!({ "kind": "metrics", "metrics": mj }));
    let text = summary_lines(&summarize(std::slice::from_ref(&m)));
    Ok((json!({ "n": pred.len(), "metrics": mj }), records, text, None))
}
