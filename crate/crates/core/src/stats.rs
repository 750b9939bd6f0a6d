//! Small statistics toolbox: moments, medians, correlation, the normal and
//! chi-square distributions, Mahalanobis distances and a one-sample
//! Kolmogorov-Smirnov test.

use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::math;
use crate::matrix::Matrix;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divides by `n`).
pub fn variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mu = mean(xs);
    xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / xs.len() as f64
}

/// Lower median: for an even count, the smaller of the two middle values.
pub fn lower_median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

/// Pearson correlation; 0 when either side is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    sab / math::sqrt(saa * sbb)
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = math::floor(pos) as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * math::erfc(-x / core::f64::consts::SQRT_2)
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let log_prefix = a * math::ln(x) - x - math::lgamma(a);
    if x < a + 1.0 {
        // series
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..1000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        (sum * math::exp(log_prefix)).min(1.0)
    } else {
        // Lentz continued fraction for Q(a, x)
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (1.0 - math::exp(log_prefix) * h).max(0.0)
    }
}

pub fn chi2_cdf(x: f64, dof: usize) -> f64 {
    gamma_p(dof as f64 / 2.0, x / 2.0)
}

/// Inverse chi-square CDF by bisection.
pub fn chi2_quantile(p: f64, dof: usize) -> f64 {
    let mut lo = 0.0;
    let mut hi = dof as f64 + 10.0;
    while chi2_cdf(hi, dof) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf(mid, dof) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Column means and (population) covariance of a sample matrix.
pub fn mean_and_covariance(x: &Matrix) -> (Vec<f64>, Matrix) {
    let (n, d) = x.shape();
    let mu: Vec<f64> = (0..d).map(|j| mean(&x.column(j))).collect();
    let mut cov = Matrix::zeros(d, d);
    for row in x.iter_rows() {
        for a in 0..d {
            for b in 0..d {
                let v = cov.get(a, b) + (row[a] - mu[a]) * (row[b] - mu[b]);
                cov.set(a, b, v);
            }
        }
    }
    for v in cov.as_mut_slice() {
        *v /= n.max(1) as f64;
    }
    (mu, cov)
}

/// Inverse of a small symmetric positive (semi)definite matrix, with a
/// ridge added to the diagonal so constant features do not break it.
pub fn regularized_inverse(m: &Matrix, ridge: f64) -> Result<Matrix> {
    let d = m.rows();
    if m.cols() != d {
        bail!(Shape, "inverse needs a square matrix, got {}x{}", d, m.cols());
    }
    let mut a = m.clone();
    for i in 0..d {
        a.set(i, i, a.get(i, i) + ridge);
    }
    let mut inv = Matrix::zeros(d, d);
    for i in 0..d {
        inv.set(i, i, 1.0);
    }
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&p, &q| a.get(p, col).abs().total_cmp(&a.get(q, col).abs()))
            .unwrap_or(col);
        if a.get(pivot, col).abs() < 1e-300 {
            bail!(InvalidInput, "covariance matrix is singular");
        }
        if pivot != col {
            for j in 0..d {
                let (x, y) = (a.get(col, j), a.get(pivot, j));
                a.set(col, j, y);
                a.set(pivot, j, x);
                let (x, y) = (inv.get(col, j), inv.get(pivot, j));
                inv.set(col, j, y);
                inv.set(pivot, j, x);
            }
        }
        let p = a.get(col, col);
        for j in 0..d {
            a.set(col, j, a.get(col, j) / p);
            inv.set(col, j, inv.get(col, j) / p);
        }
        for r in 0..d {
            if r == col {
                continue;
            }
            let f = a.get(r, col);
            if f == 0.0 {
                continue;
            }
            for j in 0..d {
                a.set(r, j, a.get(r, j) - f * a.get(col, j));
                inv.set(r, j, inv.get(r, j) - f * inv.get(col, j));
            }
        }
    }
    Ok(inv)
}

/// Squared Mahalanobis distance of every row to the sample mean.
pub fn mahalanobis_sq(x: &Matrix) -> Result<Vec<f64>> {
    let (mu, cov) = mean_and_covariance(x);
    let scale = (0..cov.rows()).map(|i| cov.get(i, i)).fold(0.0, f64::max);
    let inv = regularized_inverse(&cov, 1e-9 * scale.max(1e-12))?;
    let d = mu.len();
    let mut diff = alloc::vec![0.0; d];
    Ok(x.iter_rows()
        .map(|row| {
            for j in 0..d {
                diff[j] = row[j] - mu[j];
            }
            let mut s = 0.0;
            for a in 0..d {
                for b in 0..d {
                    s += diff[a] * inv.get(a, b) * diff[b];
                }
            }
            s
        })
        .collect())
}

/// Outcome of a one-sample Kolmogorov-Smirnov test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Tests `sample` against the continuous CDF `cdf`.
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    let n = sample.len();
    if n == 0 {
        bail!(InvalidInput, "KS test needs a non-empty sample");
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    let sq = math::sqrt(nf);
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d),
    })
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = math::exp(-2.0 * kf * kf * lambda * lambda);
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_convention() {
        assert_eq!(lower_median(&[1.0, 2.0, 100.0]), 2.0);
        assert_eq!(lower_median(&[4.0, 1.0, 3.0, 2.0]), 2.0);
    }

    #[test]
    fn chi2_quantile_reference_values() {
        // scipy.stats.chi2.ppf(0.999, 2) = 13.815510557964274
        assert!((chi2_quantile(0.999, 2) - 13.815510557964274).abs() < 1e-8);
        // dof 2 has a closed form: -2 ln(1 - p)
        assert!((chi2_quantile(0.95, 2) + 2.0 * math::ln(0.05)).abs() < 1e-9);
        // scipy.stats.chi2.ppf(0.999, 4) = 18.46682695290317
        assert!((chi2_quantile(0.999, 4) - 18.46682695290317).abs() < 1e-7);
    }

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_reference() {
        // scipy.special.kolmogorov(1.36) = 0.049485876755377876
        assert!((kolmogorov_sf(1.36) - 0.049485876755377876).abs() < 1e-12);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn ks_rejects_shifted_sample() {
        let sample: Vec<f64> = (0..400).map(|i| (i as f64 + 0.5) / 400.0 + 2.0).collect();
        let r = ks_test(&sample, normal_cdf).unwrap();
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn ks_accepts_normal_quantiles() {
        // exact normal quantiles via bisection on the CDF
        let sample: Vec<f64> = (0..200)
            .map(|i| {
                let p = (i as f64 + 0.5) / 200.0;
                let (mut lo, mut hi) = (-10.0, 10.0);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if normal_cdf(mid) < p {
                        lo = mid
                    } else {
                        hi = mid
                    }
                }
                lo
            })
            .collect();
        assert!(ks_test(&sample, normal_cdf).unwrap().p_value > 0.99);
    }

    #[test]
    fn mahalanobis_of_isotropic_points() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]).unwrap();
        for d in mahalanobis_sq(&x).unwrap() {
            assert!((d - 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn pearson_signs() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), 0.0);
    }
}
