//! Run reports: `report.json` (config echo plus results), `records.jsonl`
//! (one JSON object per line) and a plain-text `summary.txt`.
//!
//! Wall-clock quantities are the only non-reproducible values and every one
//! of them lives in a field whose name ends in `_ms`.

use std::fmt::Write as _;
use std::path::Path;

use fedheat_core::metrics::MetricReport;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;
use crate::dataset_io::write_file;
use crate::error::{CliResult, OrKind};

pub const ARTIFACT: &str = "fedheat";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub artifact: String,
    pub version: String,
    pub generator_version: u32,
    pub command: String,
    pub seed: u64,
    /// Exactly the configuration that produced this report; pass the report
    /// itself as `--config` to re-run.
    pub config: ExperimentConfig,
    pub wall_clock_ms: f64,
    pub result: Value,
}

impl RunReport {
    pub fn new(command: &str, config: &ExperimentConfig, wall_clock_ms: f64, result: Value) -> Self {
        Self {
            artifact: ARTIFACT.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            generator_version: fedheat_core::synth::GENERATOR_VERSION,
            command: command.to_owned(),
            seed: config.seed,
            config: config.clone(),
            wall_clock_ms,
            result,
        }
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let s = serde_json::to_string_pretty(self).or_runtime("serializing report")?;
        write_file(&dir.join("report.json"), &(s + "\n"))
    }
}

/// Metric values keyed by name; absent ones are `null` with their reason
/// under `absent`.
pub fn metrics_json(m: &MetricReport) -> Value {
    let mut o = Map::new();
    for (k, v) in metric_pairs(m) {
        o.insert(k.to_owned(), v.map_or(Value::Null, Value::from));
    }
    let absent: Map<String, Value> = m.absent.iter().map(|(k, r)| (k.clone(), Value::from(r.as_str()))).collect();
    o.insert("absent".to_owned(), Value::Object(absent));
    Value::Object(o)
}

pub fn metric_pairs(m: &MetricReport) -> [(&'static str, Option<f64>); 7] {
    [
        ("accuracy", m.accuracy),
        ("nmi", m.nmi),
        ("ari", m.ari),
        ("silhouette", m.silhouette),
        ("calinski_harabasz", m.calinski_harabasz),
        ("view_consensus", m.view_consensus),
        ("cross_view_stability_artifact", m.cross_view_stability_artifact),
    ]
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// `{metric: {mean, std, n}}` over repetitions, skipping absent values.
pub fn summarize(reports: &[MetricReport]) -> Value {
    let mut o = Map::new();
    for (i, (name, _)) in metric_pairs(&MetricReport::default()).iter().enumerate() {
        let xs: Vec<f64> = reports.iter().filter_map(|r| metric_pairs(r)[i].1).collect();
        if xs.is_empty() {
            o.insert((*name).to_owned(), Value::Null);
        } else {
            let (mean, std) = mean_std(&xs);
            o.insert((*name).to_owned(), json!({ "mean": mean, "std": std, "n": xs.len() }));
        }
    }
    Value::Object(o)
}

pub fn summary_lines(summary: &Value) -> String {
    let mut out = String::new();
    if let Value::Object(o) = summary {
        for (k, v) in o {
            match v {
                Value::Null => {
                    let _ = writeln!(out, "{k:<30} n/a");
                }
                v => {
                    let _ = writeln!(
                        out,
                        "{k:<30} {:.4} ± {:.4}  (n = {})",
                        v["mean"].as_f64().unwrap_or(f64::NAN),
                        v["std"].as_f64().unwrap_or(f64::NAN),
                        v["n"]
                    );
                }
            }
        }
    }
    out
}

/// Line-oriented records.
#[derive(Default)]
pub struct Records(String);

impl Records {
    pub fn push(&mut self, v: Value) {
        self.0.push_str(&v.to_string());
        self.0.push('\n');
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        write_file(&dir.join("records.jsonl"), &self.0)
    }
}

/// Simple CSV builder; cells are formatted with `Display`.
pub struct Csv(String);

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self(header.join(",") + "\n")
    }

    pub fn row(&mut self, cells: &[&dyn std::fmt::Display]) {
        for (j, c) in cells.iter().enumerate() {
            if j > 0 {
                self.0.push(',');
            }
            let _ = write!(self.0, "{c}");
        }
        self.0.push('\n');
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_file(path, &self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - 1.2909944487358056).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn report_round_trips_with_config() {
        let cfg = ExperimentConfig { seed: 17, ..Default::default() };
        let r = RunReport::new("cluster", &cfg, 1.5, json!({ "x": 0.1 + 0.2 }));
        let s = serde_json::to_string(&r).unwrap();
        let back: RunReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back.config, cfg);
        assert_eq!(back.result["x"].as_f64().unwrap().to_bits(), (0.1f64 + 0.2).to_bits());
    }

    #[test]
    fn absent_metrics_carry_reasons() {
        let m = MetricReport::compute(&[], &[0, 1, 0], None, None, 2).unwrap();
        let v = metrics_json(&m);
        assert!(v["accuracy"].is_null());
        assert_eq!(v["absent"]["accuracy"], "no ground-truth labels");
    }
}
