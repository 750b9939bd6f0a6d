use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::matrix::Matrix;

/// Samples observed through several views, with aligned rows and optional
/// ground-truth labels.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<Matrix>,
    labels: Option<Vec<usize>>,
}

impl MultiViewDataset {
    pub fn new(views: Vec<Matrix>, labels: Option<Vec<usize>>) -> Result<Self> {
        let Some(first) = views.first() else {
            bail!(InvalidInput, "a dataset needs at least one view");
        };
        let n = first.rows();
        if n == 0 {
            bail!(InvalidInput, "a dataset needs at least one sample");
        }
        for (h, v) in views.iter().enumerate() {
            if v.rows() != n {
                bail!(Shape, "view {} has {} rows, view 0 has {}", h, v.rows(), n);
            }
            if v.cols() == 0 {
                bail!(InvalidInput, "view {} has no features", h);
            }
            if !v.is_finite() {
                bail!(InvalidInput, "view {} contains non-finite values", h);
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                bail!(Shape, "{} labels for {} samples", labels.len(), n);
            }
        }
        Ok(Self { views, labels })
    }

    pub fn n_samples(&self) -> usize {
        self.views[0].rows()
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.views.iter().map(Matrix::cols).collect()
    }

    pub fn views(&self) -> &[Matrix] {
        &self.views
    }

    pub fn view(&self, h: usize) -> &Matrix {
        &self.views[h]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Number of distinct label values assumed (`max + 1`), if labelled.
    pub fn n_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().copied().max().map_or(0, |m| m + 1))
    }

    pub fn into_parts(self) -> (Vec<Matrix>, Option<Vec<usize>>) {
        (self.views, self.labels)
    }

    /// Rows `indices` of every view (and label vector), in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            bail!(InvalidInput, "subset must keep at least one row");
        }
        let n = self.n_samples();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            bail!(InvalidInput, "row index {} out of range for {} samples", bad, n);
        }
        Ok(Self {
            views: self.views.iter().map(|v| v.select_rows(indices)).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
        })
    }

    /// Keeps only the rows whose label is in `keep`, relabelling them to
    /// `0..keep.len()` in the order given.
    pub fn filter_labels(&self, keep: &[usize]) -> Result<Self> {
        let Some(labels) = &self.labels else {
            bail!(InvalidInput, "label filter needs a labelled dataset");
        };
        let rows: Vec<usize> = (0..labels.len())
            .filter(|&i| keep.contains(&labels[i]))
            .collect();
        let mut out = self.subset(&rows)?;
        if let Some(l) = out.labels.as_mut() {
            for v in l.iter_mut() {
                *v = keep.iter().position(|k| k == v).unwrap_or_default();
            }
        }
        Ok(out)
    }

    /// Column-wise min-max scaling of every view to `[0, 1]`. Constant
    /// columns map to 0.
    pub fn minmax_normalized(&self) -> Self {
        Self {
            views: self.views.iter().map(minmax_columns).collect(),
            labels: self.labels.clone(),
        }
    }
}

/// Per-column affine map `x -> (x - lo) / range` onto `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnScaling {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ColumnScaling {
    pub fn fit(view: &Matrix) -> Self {
        let d = view.cols();
        let mut lo = alloc::vec![f64::INFINITY; d];
        let mut hi = alloc::vec![f64::NEG_INFINITY; d];
        for row in view.iter_rows() {
            for j in 0..d {
                lo[j] = lo[j].min(row[j]);
                hi[j] = hi[j].max(row[j]);
            }
        }
        Self { lo, hi }
    }

    /// Smallest range covering every input range.
    pub fn union(parts: &[&ColumnScaling]) -> Self {
        let mut out = parts[0].clone();
        for p in &parts[1..] {
            for j in 0..out.lo.len() {
                out.lo[j] = out.lo[j].min(p.lo[j]);
                out.hi[j] = out.hi[j].max(p.hi[j]);
            }
        }
        out
    }

    /// Constant columns map to 0.
    pub fn apply(&self, view: &Matrix) -> Matrix {
        let mut out = view.clone();
        let d = view.cols();
        for i in 0..view.rows() {
            let row = out.row_mut(i);
            for j in 0..d {
                let range = self.hi[j] - self.lo[j];
                row[j] = if range > 0.0 {
                    (row[j] - self.lo[j]) / range
                } else {
                    0.0
                };
            }
        }
        out
    }

    pub fn invert(&self, scaled: &Matrix) -> Matrix {
        let mut out = scaled.clone();
        let d = scaled.cols();
        for i in 0..scaled.rows() {
            let row = out.row_mut(i);
            for j in 0..d {
                row[j] = self.lo[j] + row[j] * (self.hi[j] - self.lo[j]);
            }
        }
        out
    }
}

pub(crate) fn minmax_columns(view: &Matrix) -> Matrix {
    ColumnScaling::fit(view).apply(view)
}

impl MultiViewDataset {
    pub fn scalings(&self) -> Vec<ColumnScaling> {
        self.views.iter().map(ColumnScaling::fit).collect()
    }

    pub fn scaled(&self, scalings: &[ColumnScaling]) -> Self {
        Self {
            views: self
                .views
                .iter()
                .zip(scalings)
                .map(|(v, s)| s.apply(v))
                .collect(),
            labels: self.labels.clone(),
        }
    }
}
