//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fedheat::cli;
use fedheat::commands::{self, Command};
use fedheat::config::ExperimentConfig;
use fedheat::dataset_io::read_labels;
use fedheat_core::cluster::{distance_tensor, fit_traced, objective_from_distances, update_memberships, update_view_weights};
use fedheat_core::federation::{run_federation_traced, FedConfig, Personalization};
use fedheat_core::kernel::compute_hkc;
use fedheat_core::privacy::{budget_schedule, dp_noise_centers, fixed_point_sum, mask_share, secure_sum, BudgetSchedule};
use fedheat_core::rng;
use fedheat_core::synth::{assemble_benchmark, generate_shape, heart, validate_generated, BenchmarkSpec, ShapeKind, ShapeSpec};
use fedheat_core::*;
use rand::Rng as _;
use serde_json::Value;

const SEEDS: u64 = 5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------------------
// Independent metric oracles

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, k - 1);
            out.push(q);
        }
    }
    out
}

/// Best accuracy over every relabelling of the predictions.
fn oracle_accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    let k = pred.iter().chain(truth).max().unwrap() + 1;
    permutations(k)
        .iter()
        .map(|p| pred.iter().zip(truth).filter(|(a, b)| p[**a] == **b).count())
        .max()
        .unwrap() as f64
        / pred.len() as f64
}

fn counts(a: &[usize], b: &[usize]) -> (BTreeMap<usize, f64>, BTreeMap<usize, f64>, BTreeMap<(usize, usize), f64>) {
    let (mut ca, mut cb, mut cab) = (BTreeMap::new(), BTreeMap::new(), BTreeMap::new());
    for (&x, &y) in a.iter().zip(b) {
        *ca.entry(x).or_insert(0.0) += 1.0;
        *cb.entry(y).or_insert(0.0) += 1.0;
        *cab.entry((x, y)).or_insert(0.0) += 1.0;
    }
    (ca, cb, cab)
}

fn oracle_nmi(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let (ca, cb, cab) = counts(a, b);
    let h = |m: &BTreeMap<usize, f64>| -m.values().map(|c| c / n * (c / n).ln()).sum::<f64>();
    let mi: f64 = cab.iter().map(|((x, y), c)| c / n * ((c / n) / ((ca[x] / n) * (cb[y] / n))).ln()).sum();
    let (ha, hb) = (h(&ca), h(&cb));
    if ha + hb == 0.0 {
        1.0
    } else {
        2.0 * mi / (ha + hb)
    }
}

fn oracle_ari(a: &[usize], b: &[usize]) -> f64 {
    let c2 = |x: f64| x * (x - 1.0) / 2.0;
    let (ca, cb, cab) = counts(a, b);
    let sij: f64 = cab.values().map(|&c| c2(c)).sum();
    let sa: f64 = ca.values().map(|&c| c2(c)).sum();
    let sb: f64 = cb.values().map(|&c| c2(c)).sum();
    let expected = sa * sb / c2(a.len() as f64);
    (sij - expected) / (0.5 * (sa + sb) - expected)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn fmt(xs: &[f64]) -> String {
    let v: Vec<String> = xs.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", v.join(", "))
}

// ---------------------------------------------------------------------------
// Running commands through the library

fn load(path: &str) -> ExperimentConfig {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../fedheat/configs").join(path);
    ExperimentConfig::load(&p).unwrap()
}

fn run(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> Value {
    let r = commands::run(cmd, cfg, out).unwrap_or_else(|e| panic!("{} failed: {e}", cmd.name()));
    serde_json::to_value(&r).unwrap()
}

/// Per-repetition (oracle accuracy, oracle nmi, oracle ari) recomputed from
/// the written prediction and label files.
fn scores_from_files(out: &Path, reps: usize) -> Vec<(f64, f64, f64)> {
    (0..reps)
        .map(|r| {
            let d = out.join(format!("rep_{r}"));
            let p = read_labels(&d.join("predictions.csv")).unwrap();
            let t = read_labels(&d.join("labels.csv")).unwrap();
            (oracle_accuracy(&p, &t), oracle_nmi(&p, &t), oracle_ari(&p, &t))
        })
        .collect()
}

/// Oracle and library agree on every repetition.
fn agrees(report: &Value, scores: &[(f64, f64, f64)]) -> bool {
    scores.iter().enumerate().all(|(r, s)| {
        let m = &report["result"]["repetitions"][r]["metrics"];
        let close = |k: &str, v: f64| (m[k].as_f64().unwrap() - v).abs() < 1e-12;
        close("accuracy", s.0) && close("nmi", s.1) && close("ari", s.2)
    })
}

struct Runs {
    federated: Vec<f64>,
    fed_report: Value,
}

fn criterion_1(tmp: &Path) -> (Outcome, Vec<f64>) {
    let cfg = load("desk.toml");
    assert_eq!(cfg.repetitions as u64, SEEDS);
    let out = tmp.join("c1");
    let rep = run(Command::Cluster, &cfg, &out);
    let s = scores_from_files(&out, cfg.repetitions);
    let acc: Vec<f64> = s.iter().map(|x| x.0).collect();
    let nmi: Vec<f64> = s.iter().map(|x| x.1).collect();
    let runtime = rep["result"]["repetitions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["runtime_ms"].as_f64().unwrap())
        .fold(0.0, f64::max);
    let ok = mean(&acc) >= 0.95 && mean(&nmi) >= 0.95 && runtime < 30_000.0 && agrees(&rep, &s);
    let detail = format!(
        "n=1000 c=4 seeds 0-4: accuracy {} mean {:.4}, NMI {} mean {:.4} (>= 0.95); slowest run {:.1} ms (< 30 s)",
        fmt(&acc),
        mean(&acc),
        fmt(&nmi),
        mean(&nmi),
        runtime
    );
    (outcome(ok, detail), acc)
}

fn criterion_2(tmp: &Path, central: &[f64]) -> (Outcome, Runs) {
    let cfg = load("fedrun.toml");
    let out = tmp.join("c2");
    let rep = run(Command::Fedrun, &cfg, &out);
    let s = scores_from_files(&out, cfg.repetitions);
    let fed: Vec<f64> = s.iter().map(|x| x.0).collect();
    let retention = mean(&fed) / mean(central);
    let ok = retention >= 0.98 && mean(&fed) >= 0.95 && agrees(&rep, &s);
    let detail = format!(
        "85/15, T=10, E=50: federated accuracy {} mean {:.4}; centralized mean {:.4}; retention {:.4} (>= 0.98, floor 0.95)",
        fmt(&fed),
        mean(&fed),
        mean(central),
        retention
    );
    (outcome(ok, detail), Runs { federated: fed, fed_report: rep })
}

fn criterion_3(tmp: &Path) -> Outcome {
    let cfg = load("ablate.toml");
    let rep = run(Command::Ablate, &cfg, &tmp.join("c3"));
    let nmi = |i: usize| rep["result"]["methods"][i]["summary"]["nmi"]["mean"].as_f64().unwrap();
    let (base, mm, md) = (nmi(0), nmi(1), nmi(2));
    let ok = mm - base >= 0.05 && md - base >= 0.05;
    outcome(
        ok,
        format!(
            "crescent+heart subset, seeds 0-4: NMI baseline {base:.4}, minmax {mm:.4} (gap {:.4}), mean-deviation {md:.4} (gap {:.4}); need gaps >= 0.05",
            mm - base,
            md - base
        ),
    )
}

// ---------------------------------------------------------------------------
// Solver

fn random_matrix(r: &mut rng::Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| r.random::<f64>() * 4.0 - 2.0).collect()).unwrap()
}

fn random_u(r: &mut rng::Rng, n: usize, c: usize) -> MembershipMatrix {
    let mut u = Matrix::zeros(n, c);
    for i in 0..n {
        let raw: Vec<f64> = (0..c).map(|_| r.random::<f64>() + 1e-3).collect();
        let s: f64 = raw.iter().sum();
        for k in 0..c {
            u.set(i, k, raw[k] / s);
        }
    }
    MembershipMatrix::new(u).unwrap()
}

fn ternary(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..300 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

fn criterion_4() -> Outcome {
    let mut worst_u: f64 = f64::NEG_INFINITY;
    let mut worst_v: f64 = f64::NEG_INFINITY;
    for seed in 0..100 {
        let mut r = rng::seeded(seed);
        let n = r.random_range(3..40);
        let c = r.random_range(2..5);
        let s = r.random_range(1..4);
        let dims: Vec<usize> = (0..s).map(|_| r.random_range(1..4)).collect();
        let views: Vec<Matrix> = dims.iter().map(|&d| random_matrix(&mut r, n, d)).collect();
        let est = if r.random::<bool>() { HkcEstimator::MinMax } else { HkcEstimator::MeanDeviation };
        let coeffs: Vec<_> = views.iter().map(|v| compute_hkc(v, est, 1e-12).unwrap()).collect();
        let centers: Vec<Matrix> = dims.iter().map(|&d| random_matrix(&mut r, c, d)).collect();
        let u0 = random_u(&mut r, n, c);
        let v0 = ViewWeights::onto_simplex((0..s).map(|_| r.random::<f64>() + 1e-3).collect());
        let m = 1.1 + r.random::<f64>() * 2.9;
        let alpha = 1.1 + r.random::<f64>() * 5.9;
        let d = distance_tensor(&views, &centers, &coeffs, DistanceKind::HeatKernel).unwrap();
        let j0 = objective_from_distances(&d, &u0, &v0, m, alpha);
        let u1 = update_memberships(&d, &v0, m, alpha);
        let j1 = objective_from_distances(&d, &u1, &v0, m, alpha);
        let v1 = update_view_weights(&d, &u1, m, alpha);
        let j2 = objective_from_distances(&d, &u1, &v1, m, alpha);
        worst_u = worst_u.max(j1 - j0);
        worst_v = worst_v.max(j2 - j1);
    }
    let descent = worst_u <= 1e-12 && worst_v <= 1e-12;

    let (m, alpha) = (2.0, 2.0);
    let mut max_err: f64 = 0.0;
    for seed in 0..50 {
        let mut r = rng::seeded(10_000 + seed);
        let n = r.random_range(1..=10);
        let views = vec![random_matrix(&mut r, n, 2), random_matrix(&mut r, n, 1)];
        let coeffs: Vec<_> = views.iter().map(|v| compute_hkc(v, HkcEstimator::MinMax, 1e-12).unwrap()).collect();
        let centers = vec![random_matrix(&mut r, 2, 2), random_matrix(&mut r, 2, 1)];
        let v = ViewWeights::onto_simplex(vec![r.random::<f64>() + 1e-3, r.random::<f64>() + 1e-3]);
        let d = distance_tensor(&views, &centers, &coeffs, DistanceKind::HeatKernel).unwrap();
        let u = update_memberships(&d, &v, m, alpha);
        for i in 0..n {
            let cost = |k: usize| (0..2).map(|h| v.as_slice()[h].powf(alpha) * d[h].get(i, k)).sum::<f64>();
            let (c0, c1) = (cost(0), cost(1));
            let f = |p: f64| p.powf(m) * c0 + (1.0 - p).powf(m) * c1;
            let p = ternary(f);
            max_err = max_err.max(if c0 > 0.0 && c1 > 0.0 { (u.row(i)[0] - p).abs() } else { (f(u.row(i)[0]) - f(p)).abs() });
        }
        let w = update_view_weights(&d, &u, m, alpha);
        let costs: Vec<f64> = (0..2)
            .map(|h| (0..n).flat_map(|i| (0..2).map(move |k| (i, k))).map(|(i, k)| u.row(i)[k].powf(m) * d[h].get(i, k)).sum())
            .collect();
        let g = |q: f64| q.powf(alpha) * costs[0] + (1.0 - q).powf(alpha) * costs[1];
        let q = ternary(g);
        max_err = max_err.max(if costs[0] > 0.0 && costs[1] > 0.0 {
            (w.as_slice()[0] - q).abs()
        } else {
            (g(w.as_slice()[0]) - g(q)).abs()
        });
    }
    outcome(
        descent && max_err <= 1e-6,
        format!(
            "100 random states: largest J increase U-step {worst_u:.3e}, V-step {worst_v:.3e} (<= 1e-12); brute-force simplex oracle max deviation {max_err:.3e} (<= 1e-6)"
        ),
    )
}

fn criterion_5() -> Outcome {
    let ds = assemble_benchmark(&BenchmarkSpec::paper(100), 3).unwrap();
    let cc = ClusterConfig { seed: 3, t_max: 20, epsilon: 1e-300, ..ClusterConfig::new(4) };
    let (_, central) = fit_traced(&ds, &cc).unwrap();
    let mut fc = FedConfig::new(4);
    fc.cluster = cc;
    fc.gamma = 1.0;
    fc.rho = 1.0;
    fc.personalization = Personalization::Static;
    fc.rounds = 4;
    fc.local_iters = 5;
    fc.epsilon_conv = 0.0;
    let (_, fed) = run_federation_traced(&[ds], &fc).unwrap();
    let bits = |m: &[Matrix]| m.iter().flat_map(|a| a.as_slice().iter().map(|x| x.to_bits())).collect::<Vec<_>>();
    let mut equal = 0;
    for (a, b) in central.iter().zip(&fed[0]) {
        let same = bits(&a.centers) == bits(&b.centers)
            && a.objective.to_bits() == b.objective.to_bits()
            && bits(std::slice::from_ref(a.memberships.as_matrix())) == bits(std::slice::from_ref(b.memberships.as_matrix()))
            && a.weights.as_slice().iter().map(|x| x.to_bits()).eq(b.weights.as_slice().iter().map(|x| x.to_bits()));
        if !same {
            break;
        }
        equal += 1;
    }
    outcome(
        equal == 20 && central.len() == 20 && fed[0].len() == 20,
        format!("M=1, gamma=rho=1: {equal}/20 iterations bitwise equal (U, A, V, J)"),
    )
}

// ---------------------------------------------------------------------------
// Privacy

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    sxy / (sxx * syy).sqrt()
}

fn criterion_6() -> Outcome {
    let scale = 1u64 << 20;
    let mut r = rng::seeded(6);
    let mut exact = 0;
    let mut max_dev: f64 = 0.0;
    for trial in 0..1000u64 {
        let m = [2usize, 3, 5][(trial % 3) as usize];
        let len = r.random_range(1..16);
        let vs: Vec<Vec<f64>> = (0..m).map(|_| (0..len).map(|_| r.random::<f64>() * 200.0 - 100.0).collect()).collect();
        let ids: Vec<usize> = (0..m).map(|i| i * 3 + r.random_range(0..3)).collect();
        let got = secure_sum(&vs, &ids, r.random(), scale).unwrap();
        // Oracle: integer sum of the rounded fixed-point encodings.
        let oracle: Vec<f64> = (0..len)
            .map(|j| vs.iter().map(|v| (v[j] * scale as f64).round() as i64).sum::<i64>() as f64 / scale as f64)
            .collect();
        if got == oracle && got == fixed_point_sum(&vs, scale).unwrap() {
            exact += 1;
        }
        for j in 0..len {
            max_dev = max_dev.max((got[j] - vs.iter().map(|v| v[j]).sum::<f64>()).abs());
        }
    }
    let (mut plain, mut masked) = (Vec::new(), Vec::new());
    for _ in 0..10_000 {
        let x = r.random::<f64>() * 200.0 - 100.0;
        let share = mask_share(0, &[x], &[0, 1], r.random(), scale).unwrap();
        plain.push(x);
        masked.push(share.values[0] as f64);
    }
    let corr = pearson(&plain, &masked);
    outcome(
        exact == 1000 && corr.abs() < 0.05,
        format!(
            "{exact}/1000 trials (M in 2,3,5) equal the fixed-point oracle exactly, max deviation from float sum {max_dev:.2e}; share/plaintext correlation {corr:.4} over 10^4 (|r| < 0.05)"
        ),
    )
}

fn criterion_7(tmp: &Path, runs: &Runs) -> Outcome {
    let (eps, delta, sens) = (1.0, 1e-5, 1.0);
    let expected = 2.0 * sens * sens * (1.25f64 / delta).ln() / (eps * eps);
    let zeros = vec![Matrix::zeros(1000, 100)];
    let noisy = dp_noise_centers(&zeros, eps, delta, sens, &mut rng::seeded(7)).unwrap();
    let xs = noisy[0].as_slice();
    let mu = mean(xs);
    let var = xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (xs.len() - 1) as f64;
    let var_ok = ((var - expected) / expected).abs() <= 0.05;

    let paper = [0.5, 0.3536, 0.2887, 0.25];
    let sched = budget_schedule(1.0, 4, BudgetSchedule::Paper).unwrap();
    let sched_ok = sched.len() == 4 && sched.iter().zip(paper).all(|(a, b)| (a - b).abs() <= 1e-4);

    let cfg = load("fedrun_dp.toml");
    let out = tmp.join("c7");
    let rep = run(Command::Fedrun, &cfg, &out);
    let s = scores_from_files(&out, cfg.repetitions);
    let dp: Vec<f64> = s.iter().map(|x| x.0).collect();
    let drop = (mean(&runs.federated) - mean(&dp)) / mean(&runs.federated);
    let eps_logged = rep["result"]["repetitions"][0]["epsilon_per_round"].as_array().unwrap().len() == 10;
    outcome(
        var_ok && sched_ok && drop <= 0.05 && eps_logged && agrees(&rep, &s),
        format!(
            "noise variance {var:.4} vs {expected:.4} over 10^5 draws ({:+.2}%, within 5%); schedule {} vs {}; DP accuracy {} mean {:.4}, relative drop {:.4} (<= 0.05)",
            100.0 * (var - expected) / expected,
            fmt(&sched),
            fmt(&paper),
            fmt(&dp),
            mean(&dp),
            drop
        ),
    )
}

fn criterion_8(runs: &Runs) -> Outcome {
    let (c, dims, s, clients) = (4u64, [2u64, 2], 2u64, 2u64);
    let cd: u64 = dims.iter().map(|d| c * d).sum();
    let per_client = 32 + 8 * cd + 8 * s + 8 * (c + cd + s);
    let expected = clients * per_client;
    let reps = runs.fed_report["result"]["repetitions"].as_array().unwrap();
    let all_equal = reps.iter().all(|r| {
        r["payload_bytes_per_round"].as_array().unwrap().iter().all(|b| b.as_u64() == Some(expected))
            && r["payload_formula_bytes"].as_u64() == Some(expected)
    });
    let n = reps[0]["client_sizes"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).sum::<u64>();
    let naive = 8 * n * c;
    let ratio = expected as f64 / naive as f64;
    outcome(
        all_equal && n >= 1000 && ratio <= 0.30,
        format!("every round of every seed reports {expected} B = analytic formula; vs membership share 8*n*c = {naive} B (n = {n}): ratio {ratio:.4} (<= 0.30)"),
    )
}

// ---------------------------------------------------------------------------
// Generator

fn criterion_9() -> Outcome {
    let mut counts_ok = true;
    let mut ks_pass = 0;
    for seed in 0..100 {
        let spec = BenchmarkSpec::paper(250);
        let ds = assemble_benchmark(&spec, seed).unwrap();
        let l = ds.labels().unwrap();
        counts_ok &= (0..4).all(|k| l.iter().filter(|&&x| x == k).count() == 250) && ds.n_samples() == 1000;
        let v = validate_generated(&ds, &spec).unwrap();
        counts_ok &= v.counts_ok;
        if v.ks_passed == Some(true) {
            ks_pass += 1;
        }
    }
    let clean = BenchmarkSpec::paper(250).noiseless();
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let v = validate_generated(&assemble_benchmark(&clean, seed).unwrap(), &clean).unwrap();
        worst = v.checks.iter().map(|c| c.hausdorff).fold(worst, f64::max);
    }

    let h = ShapeSpec::heart();
    let (hx, hy) = heart(std::f64::consts::FRAC_PI_2);
    let ShapeKind::Heart { scale } = h.kind else { unreachable!() };
    let p = [h.center[0] + scale * hx, h.center[1] + scale * hy];
    let curve_err = ((p[0] - 2.8).powi(2) + (p[1] + 0.8).powi(2)).sqrt();
    let pts = generate_shape(&h, 10_000, &mut rng::seeded(9)).unwrap();
    let nearest = pts
        .iter_rows()
        .map(|q| ((q[0] - 2.8).powi(2) + (q[1] + 0.8).powi(2)).sqrt())
        .fold(f64::INFINITY, f64::min);
    let spot_ok = curve_err < 1e-12 && nearest <= 3.0 * h.noise_sigma;

    outcome(
        counts_ok && worst <= 0.1 && ks_pass >= 95 && spot_ok,
        format!(
            "counts exact over seeds 0-99: {counts_ok}; noiseless max Hausdorff {worst:.4} (<= 0.1); KS at alpha 0.05 passed {ks_pass}/100 seeds (need >= 95); heart(pi/2) = ({:.4}, {:.4}), nearest noisy sample {nearest:.4} away (<= 3 sigma)",
            p[0], p[1]
        ),
    )
}

fn criterion_10(tmp: &Path) -> Outcome {
    let cfg = load("iris.toml");
    let out = tmp.join("c10");
    let rep = run(Command::Fedrun, &cfg, &out);
    let s = scores_from_files(&out, cfg.repetitions);
    let ari: Vec<f64> = s.iter().map(|x| x.2).collect();
    let sizes = &rep["result"]["repetitions"][0]["client_sizes"];
    let split_ok = sizes == &serde_json::json!([90, 60]);
    outcome(
        split_ok && mean(&ari) >= 0.55 && agrees(&rep, &s),
        format!("clients {sizes}; ARI per seed {} mean {:.4} (seed mean >= 0.55)", fmt(&ari), mean(&ari)),
    )
}

// ---------------------------------------------------------------------------
// Determinism

fn strip_ms(v: &mut Value) {
    match v {
        Value::Object(o) => {
            o.retain(|k, _| !k.ends_with("_ms"));
            o.values_mut().for_each(strip_ms);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_ms),
        _ => {}
    }
}

fn normalized(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    let name = path.file_name().unwrap().to_string_lossy();
    if name.ends_with(".json") {
        let mut v: Value = serde_json::from_str(&text).unwrap();
        strip_ms(&mut v);
        return v.to_string();
    }
    if name.ends_with(".jsonl") {
        return text
            .lines()
            .map(|l| {
                let mut v: Value = serde_json::from_str(l).unwrap();
                strip_ms(&mut v);
                v.to_string() + "\n"
            })
            .collect();
    }
    let first = text.lines().next().unwrap_or("");
    if name.ends_with(".csv") && first.contains("_ms") {
        let keep: Vec<bool> = first.split(',').map(|h| !h.ends_with("_ms")).collect();
        return text
            .lines()
            .map(|l| l.split(',').zip(&keep).filter(|(_, k)| **k).map(|(c, _)| c).collect::<Vec<_>>().join(",") + "\n")
            .collect();
    }
    text
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

/// Compares two output trees; returns (files compared, first difference).
fn compare(a: &Path, b: &Path) -> (usize, Option<String>) {
    let fa: Vec<PathBuf> = files(a).iter().map(|p| p.strip_prefix(a).unwrap().to_path_buf()).collect();
    let fb: Vec<PathBuf> = files(b).iter().map(|p| p.strip_prefix(b).unwrap().to_path_buf()).collect();
    if fa != fb {
        return (0, Some("different file sets".into()));
    }
    for f in &fa {
        if normalized(&a.join(f)) != normalized(&b.join(f)) {
            return (fa.len(), Some(f.display().to_string()));
        }
    }
    (fa.len(), None)
}

fn criterion_11(tmp: &Path) -> Outcome {
    let dir = tmp.join("c11");
    fs::create_dir_all(&dir).unwrap();
    let cfgs = [
        ("generate", "[data]\nn_per_cluster = 60\nnoiseless = true\n"),
        ("cluster", "repetitions = 2\n[data]\nn_per_cluster = 60\n"),
        ("fedrun", "[data]\nn_per_cluster = 60\n[federation]\nrounds = 3\nlocal_iters = 10\n[privacy]\nenabled = true\nsecure_aggregation = true\n"),
        ("ablate", "repetitions = 2\n[data]\nn_per_cluster = 60\nkeep_labels = [2, 3]\n[cluster]\nc = 2\n"),
    ];
    // Same entry point as the binary, argument parsing included.
    let exec = |cmd: &str, cfg: &Path, out: &Path, seed: Option<&str>| {
        let mut args: Vec<std::ffi::OsString> = vec!["fedheat".into(), cmd.into(), "--config".into(), cfg.into(), "--out".into(), out.into()];
        if let Some(s) = seed {
            args.extend(["--seed".into(), s.into()]);
        }
        cli::run_cli(args) == 0
    };
    let mut notes = Vec::new();
    let mut ok = true;
    for (cmd, body) in cfgs {
        let cfg = dir.join(format!("{cmd}.toml"));
        fs::write(&cfg, body).unwrap();
        let (a, b) = (dir.join(format!("{cmd}_a")), dir.join(format!("{cmd}_b")));
        let first = exec(cmd, &cfg, &a, Some("11"));
        let again = exec(cmd, &a.join("report.json"), &b, None);
        let (n, diff) = compare(&a, &b);
        ok &= first && again && diff.is_none() && n > 0;
        notes.push(match diff {
            None => format!("{cmd} {n} files"),
            Some(f) => format!("{cmd} differs in {f}"),
        });
    }
    let rep = dir.join("cluster_a/rep_0");
    let ecfg = dir.join("evaluate.toml");
    fs::write(
        &ecfg,
        format!(
            "[evaluate]\npredictions = {:?}\nlabels = {:?}\ndataset = {:?}\n",
            rep.join("predictions.csv"),
            rep.join("labels.csv"),
            rep.join("dataset")
        ),
    )
    .unwrap();
    let (a, b) = (dir.join("evaluate_a"), dir.join("evaluate_b"));
    let first = exec("evaluate", &ecfg, &a, None);
    let again = exec("evaluate", &a.join("report.json"), &b, None);
    let (n, diff) = compare(&a, &b);
    ok &= first && again && diff.is_none();
    notes.push(match diff {
        None => format!("evaluate {n} files"),
        Some(f) => format!("evaluate differs in {f}"),
    });
    outcome(ok, format!("re-run from report.json, wall-clock fields excluded: {}", notes.join("; ")))
}

fn main() {
    // The harness runs this binary for `cargo test`, also with filters; the
    // suite takes no arguments other than `--list`.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let (o1, central) = criterion_1(tmp.path());
    results.push((1, "desk-scale accuracy", o1));
    let (o2, runs) = criterion_2(tmp.path(), &central);
    results.push((2, "federated retention", o2));
    results.push((3, "ablation ordering", criterion_3(tmp.path())));
    results.push((4, "exact-minimizer descent", criterion_4()));
    results.push((5, "single-client reduction", criterion_5()));
    results.push((6, "secure sum exactness", criterion_6()));
    results.push((7, "DP accounting", criterion_7(tmp.path(), &runs)));
    results.push((8, "communication accounting", criterion_8(&runs)));
    results.push((9, "generator validation", criterion_9()));
    results.push((10, "Iris scenario", criterion_10(tmp.path())));
    results.push((11, "determinism", criterion_11(tmp.path())));

    let mut failed = Vec::new();
    for (i, name, o) in &results {
        println!("{} criterion {:>2} {}: {}", if o.pass { "PASS" } else { "FAIL" }, i, name, o.detail);
        if !o.pass {
            failed.push(*i);
        }
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1} s",
        results.len() - failed.len(),
        results.len(),
        t0.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
