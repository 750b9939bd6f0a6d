//! External and internal clustering quality scores.
//!
//! Entropies use natural logs. Silhouette and Calinski-Harabasz work on the
//! concatenation of all views with plain Euclidean distance.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::assignment::hungarian_max;
use crate::error::{bail, Error, Result};
use crate::math;
use crate::matrix::Matrix;

fn check_pair(a: &[usize], b: &[usize]) -> Result<()> {
    if a.len() != b.len() {
        bail!(Shape, "label vectors have lengths {} and {}", a.len(), b.len());
    }
    if a.is_empty() {
        bail!(InvalidInput, "label vectors are empty");
    }
    Ok(())
}

fn n_labels(x: &[usize]) -> usize {
    x.iter().copied().max().map_or(0, |m| m + 1)
}

/// `counts[(p, q)]` = number of samples with `a = p` and `b = q`.
pub fn contingency(a: &[usize], b: &[usize]) -> Result<Matrix> {
    check_pair(a, b)?;
    let mut m = Matrix::zeros(n_labels(a), n_labels(b));
    for (&p, &q) in a.iter().zip(b) {
        m.set(p, q, m.get(p, q) + 1.0);
    }
    Ok(m)
}

/// Square `k × k` counts with truth on rows and prediction on columns, where
/// `k` covers both label ranges.
pub fn confusion_matrix(pred: &[usize], truth: &[usize]) -> Result<Matrix> {
    check_pair(pred, truth)?;
    let k = n_labels(pred).max(n_labels(truth));
    let mut m = Matrix::zeros(k, k);
    for (&p, &t) in pred.iter().zip(truth) {
        m.set(t, p, m.get(t, p) + 1.0);
    }
    Ok(m)
}

/// Each row divided by its total; empty rows stay zero.
pub fn row_normalized(counts: &Matrix) -> Matrix {
    let mut out = counts.clone();
    for i in 0..out.rows() {
        let s: f64 = out.row(i).iter().sum();
        if s > 0.0 {
            for v in out.row_mut(i) {
                *v /= s;
            }
        }
    }
    out
}

/// Best predicted→true label bijection, as `map[pred] = truth`.
pub fn best_label_map(pred: &[usize], truth: &[usize]) -> Result<Vec<usize>> {
    let cm = confusion_matrix(pred, truth)?;
    // rows of the transposed view: predicted label, columns: true label
    let k = cm.rows();
    let mut w = Matrix::zeros(k, k);
    for t in 0..k {
        for p in 0..k {
            w.set(p, t, cm.get(t, p));
        }
    }
    hungarian_max(&w)
}

/// Fraction of samples whose predicted label maps onto the true one under
/// the best bijection.
pub fn accuracy_matched(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let map = best_label_map(pred, truth)?;
    let hits = pred.iter().zip(truth).filter(|(&p, &t)| map[p] == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

fn entropy(counts: &[f64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| -(c / n) * math::ln(c / n))
        .sum()
}

/// Normalized mutual information with arithmetic-mean normalization,
/// `2 I(a; b) / (H(a) + H(b))`. Two single-cluster partitions score 1.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    let t = contingency(a, b)?;
    let n = a.len() as f64;
    let ra: Vec<f64> = t.iter_rows().map(|r| r.iter().sum()).collect();
    let cb: Vec<f64> = (0..t.cols()).map(|j| t.column(j).iter().sum()).collect();
    let (ha, hb) = (entropy(&ra, n), entropy(&cb, n));
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for p in 0..t.rows() {
        for q in 0..t.cols() {
            let nij = t.get(p, q);
            if nij > 0.0 {
                mi += nij / n * math::ln(n * nij / (ra[p] * cb[q]));
            }
        }
    }
    Ok((2.0 * mi / (ha + hb)).clamp(0.0, 1.0))
}

fn comb2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index. Two identical trivial partitions score 1.
pub fn ari(a: &[usize], b: &[usize]) -> Result<f64> {
    let t = contingency(a, b)?;
    let n = a.len() as f64;
    let index: f64 = t.as_slice().iter().map(|&x| comb2(x)).sum();
    let sa: f64 = t.iter_rows().map(|r| comb2(r.iter().sum())).sum();
    let sb: f64 = (0..t.cols()).map(|j| comb2(t.column(j).iter().sum())).sum();
    let expected = sa * sb / comb2(n);
    let max = 0.5 * (sa + sb);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

fn concatenated(views: &[Matrix]) -> Result<Matrix> {
    let Some(first) = views.first() else {
        bail!(InvalidInput, "no views given");
    };
    let n = first.rows();
    if views.iter().any(|v| v.rows() != n) {
        bail!(Shape, "views have different row counts");
    }
    let d: usize = views.iter().map(Matrix::cols).sum();
    let mut out = Vec::with_capacity(n * d);
    for i in 0..n {
        for v in views {
            out.extend_from_slice(v.row(i));
        }
    }
    Matrix::from_vec(n, d, out)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    math::sqrt(sq_dist(a, b))
}

fn present_clusters(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut sizes = vec![0usize; n_labels(labels)];
    for &l in labels {
        sizes[l] += 1;
    }
    let k = sizes.iter().filter(|&&s| s > 0).count();
    (sizes, k)
}

/// Mean silhouette over all samples. Members of singleton clusters score 0.
pub fn silhouette(views: &[Matrix], labels: &[usize]) -> Result<f64> {
    let x = concatenated(views)?;
    let n = x.rows();
    if labels.len() != n {
        bail!(Shape, "{} labels for {} samples", labels.len(), n);
    }
    let (sizes, k) = present_clusters(labels);
    if k < 2 {
        bail!(Undefined, "silhouette needs at least two clusters");
    }
    let mut sums = vec![0.0; sizes.len()];
    let mut total = 0.0;
    for i in 0..n {
        if sizes[labels[i]] == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if j != i {
                sums[labels[j]] += dist(x.row(i), x.row(j));
            }
        }
        let own = labels[i];
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..sizes.len())
            .filter(|&q| q != own && sizes[q] > 0)
            .map(|q| sums[q] / sizes[q] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}

/// Calinski-Harabasz variance ratio.
pub fn calinski_harabasz(views: &[Matrix], labels: &[usize]) -> Result<f64> {
    let x = concatenated(views)?;
    let (n, d) = x.shape();
    if labels.len() != n {
        bail!(Shape, "{} labels for {} samples", labels.len(), n);
    }
    let (sizes, k) = present_clusters(labels);
    if k < 2 {
        bail!(Undefined, "Calinski-Harabasz needs at least two clusters");
    }
    let mut centroid = vec![0.0; d];
    let mut means = Matrix::zeros(sizes.len(), d);
    for i in 0..n {
        for j in 0..d {
            centroid[j] += x.get(i, j);
            means.set(labels[i], j, means.get(labels[i], j) + x.get(i, j));
        }
    }
    centroid.iter_mut().for_each(|v| *v /= n as f64);
    for q in 0..sizes.len() {
        if sizes[q] > 0 {
            means.row_mut(q).iter_mut().for_each(|v| *v /= sizes[q] as f64);
        }
    }
    let ssb: f64 = (0..sizes.len())
        .map(|q| sizes[q] as f64 * sq_dist(means.row(q), &centroid))
        .sum();
    let ssw: f64 = (0..n).map(|i| sq_dist(x.row(i), means.row(labels[i]))).sum();
    if ssw <= 0.0 {
        bail!(Undefined, "degenerate SSW=0");
    }
    Ok((ssb / (k - 1) as f64) / (ssw / (n - k) as f64))
}

/// Mean NMI between the global partition and each view's own partition.
pub fn view_consensus(global: &[usize], per_view: &[Vec<usize>]) -> Result<f64> {
    if per_view.is_empty() {
        bail!(InvalidInput, "no per-view labels given");
    }
    let mut s = 0.0;
    for v in per_view {
        s += nmi(global, v)?;
    }
    Ok(s / per_view.len() as f64)
}

/// One minus the mean pairwise L2 distance between the views' cluster-size
/// distributions (label frequencies of each view's own hard partition).
/// 1 for a single view.
pub fn cross_view_stability_artifact(per_view: &[Vec<usize>], c: usize) -> Result<f64> {
    if per_view.is_empty() {
        bail!(InvalidInput, "no per-view labels given");
    }
    let freqs: Vec<Vec<f64>> = per_view
        .iter()
        .map(|l| {
            let mut f = vec![0.0; c];
            for &x in l {
                if x < c {
                    f[x] += 1.0;
                }
            }
            let n = l.len().max(1) as f64;
            f.iter_mut().for_each(|v| *v /= n);
            f
        })
        .collect();
    let mut total = 0.0;
    let mut pairs = 0;
    for p in 0..freqs.len() {
        for q in p + 1..freqs.len() {
            total += dist(&freqs[p], &freqs[q]);
            pairs += 1;
        }
    }
    Ok(if pairs == 0 { 1.0 } else { 1.0 - total / pairs as f64 })
}

/// Metric values, each either computed or absent with a reason.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricReport {
    pub accuracy: Option<f64>,
    pub nmi: Option<f64>,
    pub ari: Option<f64>,
    pub silhouette: Option<f64>,
    pub calinski_harabasz: Option<f64>,
    pub view_consensus: Option<f64>,
    pub cross_view_stability_artifact: Option<f64>,
    /// `(metric, reason)` for every absent value.
    pub absent: Vec<(String, String)>,
}

fn record(reasons: &mut Vec<(String, String)>, name: &str, v: Result<f64>) -> Result<Option<f64>> {
    match v {
        Ok(x) => Ok(Some(x)),
        Err(e @ (Error::Shape(_) | Error::InvalidInput(_))) => Err(e),
        Err(e) => {
            reasons.push((name.to_string(), e.to_string()));
            Ok(None)
        }
    }
}

impl MetricReport {
    /// Computes every metric the inputs allow. `views` may be empty to skip
    /// the internal indices; `truth` and `per_view` are optional.
    pub fn compute(
        views: &[Matrix],
        pred: &[usize],
        truth: Option<&[usize]>,
        per_view: Option<&[Vec<usize>]>,
        c: usize,
    ) -> Result<Self> {
        let mut r = Self::default();
        let mut reasons: Vec<(String, String)> = Vec::new();
        match truth {
            Some(t) => {
                r.accuracy = record(&mut reasons, "accuracy", accuracy_matched(pred, t))?;
                r.nmi = record(&mut reasons, "nmi", nmi(pred, t))?;
                r.ari = record(&mut reasons, "ari", ari(pred, t))?;
            }
            None => {
                for name in ["accuracy", "nmi", "ari"] {
                    reasons.push((name.to_string(), "no ground-truth labels".to_string()));
                }
            }
        }
        if views.is_empty() {
            for name in ["silhouette", "calinski_harabasz"] {
                reasons.push((name.to_string(), "no feature data".to_string()));
            }
        } else {
            r.silhouette = record(&mut reasons, "silhouette", silhouette(views, pred))?;
            r.calinski_harabasz = record(&mut reasons, "calinski_harabasz", calinski_harabasz(views, pred))?;
        }
        match per_view {
            Some(pv) => {
                r.view_consensus = record(&mut reasons, "view_consensus", view_consensus(pred, pv))?;
                r.cross_view_stability_artifact = record(
                    &mut reasons,
                    "cross_view_stability_artifact",
                    cross_view_stability_artifact(pv, c),
                )?;
            }
            None => {
                for name in ["view_consensus", "cross_view_stability_artifact"] {
                    reasons.push((name.to_string(), "no per-view labels".to_string()));
                }
            }
        }
        r.absent = reasons;
        Ok(r)
    }
}
