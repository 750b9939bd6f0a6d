//! Dataset directories: `meta`, `view_1.csv` … `view_s.csv`, `labels.csv`.
//!
//! Floats are written with the shortest representation that parses back to
//! the same value, so write → read → write is byte-identical. Missing values
//! may be written as empty fields or `NaN`; they survive [`read_raw`] and are
//! rejected by [`read_dataset`].

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fedheat_core::{Matrix, MultiViewDataset};

use crate::error::{CliError, CliResult, OrKind};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Meta {
    pub n: usize,
    pub s: usize,
    pub c: Option<usize>,
    pub dims: Vec<usize>,
    pub seed: Option<u64>,
    pub generator_version: Option<u32>,
}

impl Meta {
    pub fn describe(views: &[Matrix], labels: Option<&[usize]>) -> Self {
        Self {
            n: views.first().map_or(0, Matrix::rows),
            s: views.len(),
            c: labels.and_then(|l| l.iter().max()).map(|m| m + 1),
            dims: views.iter().map(Matrix::cols).collect(),
            seed: None,
            generator_version: None,
        }
    }

    fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "s = {}", self.s);
        if let Some(c) = self.c {
            let _ = writeln!(out, "c = {c}");
        }
        let dims: Vec<String> = self.dims.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "d = {}", dims.join(","));
        if let Some(s) = self.seed {
            let _ = writeln!(out, "seed = {s}");
        }
        if let Some(g) = self.generator_version {
            let _ = writeln!(out, "generator_version = {g}");
        }
        out
    }

    fn parse(src: &str) -> CliResult<Self> {
        let mut m = Meta::default();
        let (mut has_n, mut has_s, mut has_d) = (false, false, false);
        for (i, line) in src.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let bad = |what: &str| CliError::validation(anyhow::anyhow!("meta line {}: {}", i + 1, what));
            let (k, v) = t.split_once('=').ok_or_else(|| bad("expected `key = value`"))?;
            let v = v.trim();
            let num = |v: &str| v.parse::<u64>().map_err(|_| bad(&format!("`{v}` is not a non-negative integer")));
            match k.trim() {
                "n" => {
                    m.n = num(v)? as usize;
                    has_n = true;
                }
                "s" => {
                    m.s = num(v)? as usize;
                    has_s = true;
                }
                "c" => m.c = Some(num(v)? as usize),
                "d" => {
                    m.dims = v.split(',').map(|x| num(x.trim()).map(|x| x as usize)).collect::<CliResult<_>>()?;
                    has_d = true;
                }
                "seed" => m.seed = Some(num(v)?),
                "generator_version" => m.generator_version = Some(num(v)? as u32),
                other => return Err(bad(&format!("unknown key `{other}`"))),
            }
        }
        if !(has_n && has_s && has_d) {
            return Err(CliError::validation(anyhow::anyhow!("meta must define n, s and d")));
        }
        if m.dims.len() != m.s {
            return Err(CliError::validation(anyhow::anyhow!("meta lists {} dimensions for s = {}", m.dims.len(), m.s)));
        }
        Ok(m)
    }
}

/// Views as read from disk, possibly with missing (NaN) entries.
#[derive(Clone, Debug, PartialEq)]
pub struct RawDataset {
    pub views: Vec<Matrix>,
    pub labels: Option<Vec<usize>>,
    pub meta: Meta,
}

pub fn write_dataset(dir: &Path, ds: &MultiViewDataset, seed: Option<u64>, generator_version: Option<u32>) -> CliResult<()> {
    let mut meta = Meta::describe(ds.views(), ds.labels());
    meta.seed = seed;
    meta.generator_version = generator_version;
    write_raw(dir, ds.views(), ds.labels(), &meta)
}

pub fn write_raw(dir: &Path, views: &[Matrix], labels: Option<&[usize]>, meta: &Meta) -> CliResult<()> {
    fs::create_dir_all(dir).or_runtime(&format!("creating {}", dir.display()))?;
    write_file(&dir.join("meta"), &meta.render())?;
    for (h, v) in views.iter().enumerate() {
        write_file(&dir.join(format!("view_{}.csv", h + 1)), &render_matrix(v))?;
    }
    if let Some(l) = labels {
        write_labels(&dir.join("labels.csv"), l)?;
    }
    Ok(())
}

pub fn read_raw(dir: &Path) -> CliResult<RawDataset> {
    let meta = Meta::parse(&read_file(&dir.join("meta"))?).map_err(|e| e.context(format!("in {}", dir.join("meta").display())))?;
    let mut views = Vec::with_capacity(meta.s);
    for h in 0..meta.s {
        let p = dir.join(format!("view_{}.csv", h + 1));
        let v = parse_matrix(&read_file(&p)?, meta.dims[h]).map_err(|e| e.context(format!("in {}", p.display())))?;
        if v.rows() != meta.n {
            return Err(CliError::validation(anyhow::anyhow!(
                "{} has {} rows, meta says n = {}",
                p.display(),
                v.rows(),
                meta.n
            )));
        }
        views.push(v);
    }
    let lp = dir.join("labels.csv");
    let labels = if lp.exists() {
        let l = read_labels(&lp)?;
        if l.len() != meta.n {
            return Err(CliError::validation(anyhow::anyhow!("{} has {} labels, meta says n = {}", lp.display(), l.len(), meta.n)));
        }
        Some(l)
    } else {
        None
    };
    Ok(RawDataset { views, labels, meta })
}

pub fn read_dataset(dir: &Path) -> CliResult<(MultiViewDataset, Meta)> {
    let raw = read_raw(dir)?;
    let ds = MultiViewDataset::new(raw.views, raw.labels).map_err(|e| CliError::from(e).context(format!("in {}", dir.display())))?;
    Ok((ds, raw.meta))
}

pub fn render_matrix(m: &Matrix) -> String {
    let mut out = String::with_capacity(m.rows() * m.cols() * 20);
    for row in m.iter_rows() {
        for (j, x) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{x}");
        }
        out.push('\n');
    }
    out
}

fn parse_matrix(src: &str, cols: usize) -> CliResult<Matrix> {
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, line) in src.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(CliError::validation(anyhow::anyhow!("line {}: {} fields, expected {}", i + 1, fields.len(), cols)));
        }
        for f in fields {
            let f = f.trim();
            let x = if f.is_empty() {
                f64::NAN
            } else {
                f.parse::<f64>()
                    .map_err(|_| CliError::validation(anyhow::anyhow!("line {}: `{}` is not a number", i + 1, f)))?
            };
            data.push(x);
        }
        rows += 1;
    }
    Matrix::from_vec(rows, cols, data).map_err(CliError::from)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> CliResult<()> {
    let mut out = String::with_capacity(labels.len() * 2);
    for l in labels {
        let _ = writeln!(out, "{l}");
    }
    write_file(path, &out)
}

pub fn read_labels(path: &Path) -> CliResult<Vec<usize>> {
    read_file(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<usize>().map_err(|_| {
                CliError::validation(anyhow::anyhow!("{} line {}: `{}` is not a label", path.display(), i + 1, l.trim()))
            })
        })
        .collect()
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).or_runtime(&format!("writing {}", path.display()))
}

pub fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).or_validation(&format!("reading {}", path.display()))
}
