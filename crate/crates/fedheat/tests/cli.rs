use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fedheat"))
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_succeeds_and_bad_usage_is_a_config_error() {
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(bin().arg("nonsense").output().unwrap().status.code(), Some(1));
    assert_eq!(bin().args(["cluster"]).output().unwrap().status.code(), Some(1));
}

#[test]
fn invalid_fuzzifier_is_rejected_with_line() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "c.toml", "seed = 1\n[cluster]\nm = 1.0\n");
    let o = run("cluster", &cfg, &d.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let o = run("cluster", &d.path().join("absent.toml"), &d.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn generate_is_byte_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "g.toml", "[data]\nn_per_cluster = 40\n");
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    assert!(run("generate", &cfg, &a, &["--seed", "7"]).status.success());
    assert!(run("generate", &cfg, &b, &["--seed", "7"]).status.success());
    for f in ["meta", "view_1.csv", "view_2.csv", "labels.csv", "validation.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let meta = fs::read_to_string(a.join("meta")).unwrap();
    assert!(meta.contains("seed = 7") && meta.contains("n = 160") && meta.contains("generator_version = 1"));
}

#[test]
fn full_scale_generation_has_ten_thousand_rows_per_view() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "g.toml", "[data]\nn_per_cluster = 2500\nnoiseless = true\n");
    let out = d.path().join("out");
    let o = run("generate", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["view_1.csv", "view_2.csv", "labels.csv"] {
        assert_eq!(fs::read_to_string(out.join(f)).unwrap().lines().count(), 10_000);
    }
}

#[test]
fn negative_radius_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "g.toml", "[[data.shapes]]\nview = 0\ncluster = 0\nradius = -0.5\n");
    let o = run("generate", &cfg, &d.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn failed_validation_exits_nonzero_but_keeps_outputs() {
    // Seed 2 is one of the ~5% whose residuals the KS test rejects.
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "g.toml", "[data]\nn_per_cluster = 250\n");
    let out = d.path().join("out");
    let o = run("generate", &cfg, &out, &["--seed", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&fs::read_to_string(out.join("validation.json")).unwrap()).unwrap();
    assert_eq!(v["passed"], false);
    assert_eq!(v["ks_passed"], false);
    assert_eq!(v["regeneration_recommended"], true);
    assert!(out.join("view_1.csv").exists());
}

#[test]
fn numerical_failure_exits_with_two() {
    let d = tempfile::tempdir().unwrap();
    let data = d.path().join("big");
    fs::create_dir(&data).unwrap();
    fs::write(data.join("meta"), "n = 4\ns = 1\nd = 1\n").unwrap();
    fs::write(data.join("view_1.csv"), "1e308\n-1e308\n1.7e308\n-1.7e308\n").unwrap();
    let cfg = write_config(
        d.path(),
        "c.toml",
        "[data]\nsource = \"directory\"\npath = \"big\"\n[cluster]\nc = 2\nnormalize = false\ndistance = \"squared-euclidean\"\n",
    );
    let o = run("cluster", &cfg, &d.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn unlabelled_data_gets_internal_indices_only() {
    let d = tempfile::tempdir().unwrap();
    let g = write_config(d.path(), "g.toml", "[data]\nn_per_cluster = 30\n");
    let data = d.path().join("data");
    assert!(run("generate", &g, &data, &[]).status.success());
    fs::remove_file(data.join("labels.csv")).unwrap();
    let cfg = write_config(d.path(), "c.toml", "[data]\nsource = \"directory\"\npath = \"data\"\n");
    let out = d.path().join("out");
    let o = run("cluster", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = &report(&out)["result"]["repetitions"][0]["metrics"];
    assert!(m["accuracy"].is_null() && m["nmi"].is_null());
    assert!(m["silhouette"].as_f64().is_some() && m["calinski_harabasz"].as_f64().is_some());
    assert_eq!(m["absent"]["accuracy"], "no ground-truth labels");
    let w = fs::read_to_string(out.join("rep_0/weights.csv")).unwrap();
    assert_eq!(w.lines().count(), 3);
}

#[test]
fn evaluate_identical_and_mismatched_files() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("p.csv"), "0\n1\n1\n2\n").unwrap();
    fs::write(d.path().join("q.csv"), "0\n1\n1\n").unwrap();
    let same = write_config(d.path(), "e.toml", "[evaluate]\npredictions = \"p.csv\"\nlabels = \"p.csv\"\n");
    let out = d.path().join("out");
    assert!(run("evaluate", &same, &out, &[]).status.success());
    assert_eq!(report(&out)["result"]["metrics"]["accuracy"], 1.0);
    let bad = write_config(d.path(), "b.toml", "[evaluate]\npredictions = \"p.csv\"\nlabels = \"q.csv\"\n");
    let o = run("evaluate", &bad, &d.path().join("out2"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("4 predictions but 3 labels"));
}

#[test]
fn evaluate_reproduces_cluster_metrics() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "c.toml", "[data]\nn_per_cluster = 40\n");
    let out = d.path().join("out");
    assert!(run("cluster", &cfg, &out, &[]).status.success());
    let rep = out.join("rep_0");
    let e = write_config(
        d.path(),
        "e.toml",
        &format!(
            "[evaluate]\npredictions = {:?}\nlabels = {:?}\ndataset = {:?}\n",
            rep.join("predictions.csv"),
            rep.join("labels.csv"),
            rep.join("dataset")
        ),
    );
    let eout = d.path().join("eval");
    assert!(run("evaluate", &e, &eout, &[]).status.success());
    let a = &report(&out)["result"]["repetitions"][0]["metrics"];
    let b = &report(&eout)["result"]["metrics"];
    for k in ["accuracy", "nmi", "ari", "silhouette", "calinski_harabasz"] {
        assert_eq!(a[k], b[k], "{k}");
    }
}

#[test]
fn fedrun_writes_round_log_with_payload() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "f.toml", "[data]\nn_per_cluster = 40\n[federation]\nrounds = 3\nlocal_iters = 5\nepsilon_conv = 0.0\n");
    let out = d.path().join("out");
    let o = run("fedrun", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rounds = fs::read_to_string(out.join("rep_0/rounds.csv")).unwrap();
    let lines: Vec<&str> = rounds.lines().collect();
    assert_eq!(lines[0], "round,payload_bytes,center_shift,weight_shift,epsilon,converged");
    assert_eq!(lines.len(), 4);
    // Two clients, c = 4, two 2-D views, statistics shared.
    let per_client = 32 + 8 * 16 + 8 * 2 + 8 * (4 + 16 + 2);
    for l in &lines[1..] {
        assert_eq!(l.split(',').nth(1).unwrap(), (2 * per_client).to_string());
    }
    assert!(out.join("rep_0/client_1/predictions.csv").exists());
}

#[test]
fn certification_rejection_is_a_config_error() {
    // Half the rows of view 1 missing: completeness 0.5 < 0.95.
    let d = tempfile::tempdir().unwrap();
    let g = write_config(d.path(), "g.toml", "[data]\nn_per_cluster = 40\n");
    let data = d.path().join("data");
    assert!(run("generate", &g, &data, &[]).status.success());
    let v = fs::read_to_string(data.join("view_1.csv")).unwrap();
    let holed: String = v.lines().enumerate().map(|(i, l)| if i % 2 == 0 { ",\n".to_owned() } else { format!("{l}\n") }).collect();
    fs::write(data.join("view_1.csv"), holed).unwrap();
    let cfg = write_config(
        d.path(),
        "f.toml",
        "[data]\nsource = \"directory\"\npath = \"data\"\n[federation]\nfractions = [0.5, 0.5]\ncertify = true\n",
    );
    let o = run("fedrun", &cfg, &d.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("certification failed"), "{}", stderr(&o));
}

#[test]
fn secure_median_combination_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "f.toml", "[federation]\naggregation = \"median\"\n[privacy]\nsecure_aggregation = true\n");
    let o = run("fedrun", &cfg, &d.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("median"));
}

#[test]
fn ablation_table_has_one_row_per_method_with_runtime() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "a.toml", "repetitions = 2\n[data]\nn_per_cluster = 30\nkeep_labels = [2, 3]\n[cluster]\nc = 2\n");
    let out = d.path().join("out");
    assert!(run("ablate", &cfg, &out, &[]).status.success());
    let t = fs::read_to_string(out.join("ablation.csv")).unwrap();
    let rows: Vec<&str> = t.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for (row, name) in rows.iter().zip(["baseline", "hkc-minmax", "hkc-meandev"]) {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[0], name);
        assert!(f[7].parse::<f64>().unwrap() >= 0.0);
    }
    assert_eq!(fs::read_to_string(out.join("ablation_runs.csv")).unwrap().lines().count(), 7);
}

#[test]
fn log_level_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "g.toml", "[data]\nn_per_cluster = 10\nnoiseless = true\n");
    let o = bin()
        .env("FEDHEAT_LOG", "info")
        .args(["generate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(d.path().join("out"))
        .output()
        .unwrap();
    assert!(stderr(&o).contains("generate finished"), "{}", stderr(&o));
    let quiet = bin().env("FEDHEAT_LOG", "error").args(["generate", "--config"]).arg(&cfg).arg("--out").arg(d.path().join("o2")).output().unwrap();
    assert!(!stderr(&quiet).contains("finished"));
}
