//! Heat-kernel coefficients and the kernel distances built on them.
//!
//! A coefficient `δ_ij` is attached to every sample `i` and feature `j` of a
//! view. It scales the squared feature difference inside an exponential
//! kernel:
//!
//! ```text
//! φ(x, a) = Σ_j δ_j (x_j − a_j)²
//! KED₁    = exp(−φ)          similarity in (0, 1]
//! KED₂    = 1 − exp(−φ)      dissimilarity in [0, 1)
//! ```
//!
//! Federated clients use the same formula on coefficients computed from
//! their local data only ([`fked`]).

use alloc::format;

use crate::error::{bail, Result};
use crate::math;
use crate::matrix::Matrix;

/// Default stabiliser added to the min-max denominator.
pub const DEFAULT_HKC_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HkcEstimator {
    /// `(x − min) / (max − min + ε)`, column-wise.
    MinMax,
    /// `|x − mean|`, column-wise.
    MeanDeviation,
}

/// Per-sample, per-feature coefficients for one view.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatKernelCoeffs {
    estimator: HkcEstimator,
    values: Matrix,
}

impl HeatKernelCoeffs {
    pub fn estimator(&self) -> HkcEstimator {
        self.estimator
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    /// All-zero coefficients; useful for tests and degenerate checks.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            estimator: HkcEstimator::MinMax,
            values: Matrix::zeros(rows, cols),
        }
    }

    /// Wraps precomputed values. Values must be finite and non-negative.
    pub fn from_values(estimator: HkcEstimator, values: Matrix) -> Result<Self> {
        if values.as_slice().iter().any(|v| !v.is_finite() || *v < 0.0) {
            bail!(InvalidInput, "heat-kernel coefficients must be finite and >= 0");
        }
        Ok(Self { estimator, values })
    }
}

fn check_view(view: &Matrix) -> Result<()> {
    if view.rows() == 0 || view.cols() == 0 {
        bail!(InvalidInput, "view must have at least one row and one column");
    }
    if !view.is_finite() {
        bail!(InvalidInput, "view contains non-finite values");
    }
    Ok(())
}

pub fn hkc_minmax(view: &Matrix, eps: f64) -> Result<HeatKernelCoeffs> {
    check_view(view)?;
    if !(eps > 0.0) || !eps.is_finite() {
        bail!(InvalidInput, "eps must be a positive finite number, got {}", eps);
    }
    let (n, d) = view.shape();
    let mut values = Matrix::zeros(n, d);
    for j in 0..d {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let x = view.get(i, j);
            lo = lo.min(x);
            hi = hi.max(x);
        }
        let denom = hi - lo + eps;
        for i in 0..n {
            values.set(i, j, (view.get(i, j) - lo) / denom);
        }
    }
    Ok(HeatKernelCoeffs {
        estimator: HkcEstimator::MinMax,
        values,
    })
}

pub fn hkc_meandev(view: &Matrix) -> Result<HeatKernelCoeffs> {
    check_view(view)?;
    let (n, d) = view.shape();
    let mut values = Matrix::zeros(n, d);
    for j in 0..d {
        let mut sum = 0.0;
        for i in 0..n {
            sum += view.get(i, j);
        }
        let mean = sum / n as f64;
        for i in 0..n {
            values.set(i, j, math::fabs(view.get(i, j) - mean));
        }
    }
    Ok(HeatKernelCoeffs {
        estimator: HkcEstimator::MeanDeviation,
        values,
    })
}

pub fn compute_hkc(view: &Matrix, estimator: HkcEstimator, eps: f64) -> Result<HeatKernelCoeffs> {
    match estimator {
        HkcEstimator::MinMax => hkc_minmax(view, eps),
        HkcEstimator::MeanDeviation => hkc_meandev(view),
    }
}

/// `φ = Σ_j δ_j (x_j − a_j)²` without shape checks; the hot path.
#[inline]
pub(crate) fn weighted_sq(x: &[f64], a: &[f64], delta: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..x.len() {
        let diff = x[j] - a[j];
        acc += delta[j] * diff * diff;
    }
    acc
}

fn check_lengths(x: &[f64], a: &[f64], delta: &[f64]) -> Result<()> {
    if x.len() != a.len() || x.len() != delta.len() {
        return Err(crate::Error::Shape(format!(
            "sample ({}), center ({}) and coefficient ({}) lengths differ",
            x.len(),
            a.len(),
            delta.len()
        )));
    }
    Ok(())
}

/// Kernel similarity `exp(−Σ δ_j (x_j − a_j)²)`.
pub fn ked1(x: &[f64], a: &[f64], delta: &[f64]) -> Result<f64> {
    check_lengths(x, a, delta)?;
    Ok(math::exp(-weighted_sq(x, a, delta)))
}

/// Kernel dissimilarity `1 − ked1`.
pub fn ked2(x: &[f64], a: &[f64], delta: &[f64]) -> Result<f64> {
    Ok(1.0 - ked1(x, a, delta)?)
}

/// Client-local kernel distance for one view. Same formula as [`ked2`]; the
/// coefficients come from the client's own data.
pub fn fked(x_view_row: &[f64], a_view_row: &[f64], delta_view_row: &[f64]) -> Result<f64> {
    ked2(x_view_row, a_view_row, delta_view_row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn col(values: &[f64]) -> Matrix {
        let rows: Vec<[f64; 1]> = values.iter().map(|&v| [v]).collect();
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn minmax_constant_column_is_zero() {
        let h = hkc_minmax(&col(&[5.0, 5.0, 5.0]), 1e-9).unwrap();
        assert_eq!(h.values().as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn minmax_endpoints() {
        let h = hkc_minmax(&col(&[0.0, 1.0]), 1e-300).unwrap();
        assert_eq!(h.values().as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn minmax_interior_value() {
        let h = hkc_minmax(&col(&[2.0, 4.0, 8.0]), 1e-15).unwrap();
        let v = h.values().as_slice();
        assert_eq!(v[0], 0.0);
        assert!((v[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((v[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn minmax_rejects_bad_input() {
        assert!(hkc_minmax(&col(&[1.0, f64::NAN]), 1e-12).is_err());
        assert!(hkc_minmax(&col(&[1.0, 2.0]), 0.0).is_err());
        assert!(hkc_meandev(&col(&[f64::INFINITY])).is_err());
    }

    #[test]
    fn meandev_examples() {
        assert_eq!(
            hkc_meandev(&col(&[1.0, 2.0, 3.0])).unwrap().values().as_slice(),
            &[1.0, 0.0, 1.0]
        );
        assert_eq!(
            hkc_meandev(&col(&[4.0, 4.0])).unwrap().values().as_slice(),
            &[0.0, 0.0]
        );
        assert_eq!(
            hkc_meandev(&col(&[0.0, 10.0])).unwrap().values().as_slice(),
            &[5.0, 5.0]
        );
    }

    #[test]
    fn ked_examples() {
        assert_eq!(ked1(&[1.0, 2.0], &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 1.0);
        assert_eq!(ked1(&[9.0, -2.0], &[1.0, 2.0], &[0.0, 0.0]).unwrap(), 1.0);
        let k1 = ked1(&[0.0, 0.0], &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!((k1 - 0.135_335_283_236_612_7).abs() < 1e-12);
        let k2 = ked2(&[0.0, 0.0], &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!((k2 - 0.864_664_716_763_387_3).abs() < 1e-12);
        assert_eq!(ked2(&[3.0], &[3.0], &[1.0]).unwrap(), 0.0);
        assert_eq!(ked2(&[1e6], &[0.0], &[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn fked_examples() {
        assert_eq!(fked(&[0.3, 0.7], &[0.3, 0.7], &[1.0, 1.0]).unwrap(), 0.0);
        let v = fked(&[1.0, 0.0], &[0.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((v - 0.393_469_340_287_366_6).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_is_shape_error() {
        assert!(matches!(
            ked1(&[1.0], &[1.0, 2.0], &[1.0]),
            Err(crate::Error::Shape(_))
        ));
        assert!(ked2(&[1.0], &[1.0], &[]).is_err());
    }

    #[test]
    fn fked_matches_ked2_on_single_client() {
        let view = Matrix::from_rows(&[[0.1, 3.0], [0.4, -1.0], [2.5, 0.5]]).unwrap();
        let central = hkc_minmax(&view, DEFAULT_HKC_EPS).unwrap();
        let local = hkc_minmax(&view.select_rows(&[0, 1, 2]), DEFAULT_HKC_EPS).unwrap();
        let center = [0.7, 0.2];
        for i in 0..3 {
            let a = ked2(view.row(i), &center, central.row(i)).unwrap();
            let b = fked(view.row(i), &center, local.row(i)).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    proptest! {
        #[test]
        fn ked_ranges_and_complement(
            x in prop::collection::vec(-1e3f64..1e3, 1..6),
            shift in prop::collection::vec(-1e3f64..1e3, 6),
            delta in prop::collection::vec(0.0f64..10.0, 6),
        ) {
            let d = x.len();
            let a: Vec<f64> = x.iter().zip(&shift).map(|(x, s)| x + s).collect();
            let k1 = ked1(&x, &a, &delta[..d]).unwrap();
            let k2 = ked2(&x, &a, &delta[..d]).unwrap();
            prop_assert!((0.0..=1.0).contains(&k1));
            prop_assert!((0.0..=1.0).contains(&k2));
            // exp(-φ) underflows near φ = 745; 1 - exp(-φ) rounds to 1 past φ ≈ 36.7
            let phi = weighted_sq(&x, &a, &delta[..d]);
            if phi < 700.0 {
                prop_assert!(k1 > 0.0);
            }
            if phi < 36.0 {
                prop_assert!(k2 < 1.0);
            }
            prop_assert_eq!(k1 + k2, 1.0);
        }

        #[test]
        fn ked2_monotone_in_each_term(
            x in prop::collection::vec(-5f64..5.0, 3),
            a in prop::collection::vec(-5f64..5.0, 3),
            delta in prop::collection::vec(0.0f64..2.0, 3),
            j in 0usize..3,
            extra in 0.0f64..3.0,
        ) {
            let base = ked2(&x, &a, &delta).unwrap();
            let mut bigger = delta.clone();
            bigger[j] += extra;
            prop_assert!(ked2(&x, &a, &bigger).unwrap() >= base);
        }

        #[test]
        fn minmax_in_unit_interval(values in prop::collection::vec(-1e4f64..1e4, 1..40)) {
            let h = hkc_minmax(&col(&values), DEFAULT_HKC_EPS).unwrap();
            for &v in h.values().as_slice() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
