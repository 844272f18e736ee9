//! The sample quantile `X_(ceil(np))` and the r-th absolute centred sample moment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sample quantile and r-th absolute centred sample moment of one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatePair<T> {
    pub q_hat: T,
    pub m_hat: T,
    pub n: usize,
    pub p: f64,
    pub r: u32,
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Parameter(format!("quantile level p = {p} must lie in (0, 1)")));
    }
    Ok(())
}

fn check_r(r: u32) -> Result<()> {
    if r == 0 {
        return Err(Error::Parameter("moment order r must be a positive integer".into()));
    }
    Ok(())
}

fn check_sample<T: Scalar>(xs: &[T]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::Parameter("sample is empty".into()));
    }
    if let Some(i) = xs.iter().position(|x| !x.is_comparable()) {
        return Err(Error::Parameter(format!("sample value at index {i} is NaN")));
    }
    Ok(())
}

/// `ceil(a)` with values within a few ulps of an integer snapped to it, so
/// that e.g. `0.1 * 30` counts as 3.
pub(crate) fn snapped_ceil(a: f64) -> f64 {
    let r = a.round();
    if (a - r).abs() <= 8.0 * f64::EPSILON * a.abs().max(1.0) {
        r
    } else {
        a.ceil()
    }
}

pub(crate) fn snapped_floor(a: f64) -> f64 {
    let r = a.round();
    if (a - r).abs() <= 8.0 * f64::EPSILON * a.abs().max(1.0) {
        r
    } else {
        a.floor()
    }
}

/// 1-based order-statistic index `ceil(np)`, clamped to `1..=n`.
pub fn quantile_rank(n: usize, p: f64) -> usize {
    (snapped_ceil(n as f64 * p) as usize).clamp(1, n)
}

/// `X_(ceil(np))` by partial selection.
pub fn sample_quantile<T: Scalar>(xs: &[T], p: f64) -> Result<T> {
    check_p(p)?;
    check_sample(xs)?;
    let k = quantile_rank(xs.len(), p);
    let mut work = xs.to_vec();
    let (_, v, _) = work.select_nth_unstable_by(k - 1, |a, b| {
        a.partial_cmp(b).expect("NaN excluded above")
    });
    Ok(v.clone())
}

fn mean<T: Scalar>(xs: &[T]) -> T {
    T::sum_of(xs.iter().cloned()) / T::from_count(xs.len())
}

/// `(1/n) sum |X_i - c|^r`.
fn abs_moment_about<T: Scalar>(xs: &[T], r: u32, c: &T) -> T {
    let s = T::sum_of(xs.iter().map(|x| (x.clone() - c.clone()).abs().powu(r)));
    s / T::from_count(xs.len())
}

/// `(1/n) sum |X_i - mean|^r`.
pub fn centred_abs_moment<T: Scalar>(xs: &[T], r: u32) -> Result<T> {
    check_r(r)?;
    check_sample(xs)?;
    Ok(abs_moment_about(xs, r, &mean(xs)))
}

/// `(1/n) sum |X_i - mu|^r`.
pub fn known_mean_abs_moment<T: Scalar>(xs: &[T], r: u32, mu: &T) -> Result<T> {
    check_r(r)?;
    check_sample(xs)?;
    Ok(abs_moment_about(xs, r, mu))
}

pub fn sample_mean<T: Scalar>(xs: &[T]) -> Result<T> {
    check_sample(xs)?;
    Ok(mean(xs))
}

/// `(1/n) #{i : X_i <= x}`.
pub fn empirical_cdf<T: Scalar>(xs: &[T], x: &T) -> Result<T> {
    check_sample(xs)?;
    let count = xs.iter().filter(|v| *v <= x).count();
    Ok(T::from_count(count) / T::from_count(xs.len()))
}

pub fn estimator_vector<T: Scalar>(xs: &[T], p: f64, r: u32) -> Result<EstimatePair<T>> {
    Ok(EstimatePair {
        q_hat: sample_quantile(xs, p)?,
        m_hat: centred_abs_moment(xs, r)?,
        n: xs.len(),
        p,
        r,
    })
}

/// Prefix length `floor(n t)` used for grid point `t`.
pub fn prefix_len(n: usize, t: f64) -> usize {
    snapped_floor(n as f64 * t).max(0.0) as usize
}

/// Estimators recomputed on the prefixes `X_1..X_floor(nt)` for each `t`.
pub fn partial_sum_process<T: Scalar>(
    xs: &[T],
    p: f64,
    r: u32,
    t_grid: &[f64],
) -> Result<Vec<EstimatePair<T>>> {
    validate_grid(t_grid)?;
    t_grid
        .iter()
        .map(|&t| {
            let k = prefix_len(xs.len(), t);
            if k == 0 {
                return Err(Error::Parameter(format!(
                    "prefix for t = {t} is empty (n = {})",
                    xs.len()
                )));
            }
            estimator_vector(&xs[..k], p, r)
        })
        .collect()
}

pub fn validate_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Parameter("t grid is empty".into()));
    }
    if t_grid.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(Error::Parameter("t grid values must lie in (0, 1]".into()));
    }
    if t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("t grid must be strictly increasing".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use proptest::prelude::*;

    #[test]
    fn quantile_examples() {
        assert_eq!(sample_quantile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.0);
        assert_eq!(sample_quantile(&[7.0], 0.01).unwrap(), 7.0);
        assert_eq!(sample_quantile(&[7.0], 0.99).unwrap(), 7.0);
        assert_eq!(sample_quantile(&[3.0, 1.0, 2.0], 0.9).unwrap(), 3.0);
        assert!(sample_quantile(&[1.0], 0.0).is_err());
        assert!(sample_quantile(&[1.0], 1.0).is_err());
        assert!(sample_quantile(&[1.0, f64::NAN], 0.5).is_err());
        assert!(sample_quantile::<f64>(&[], 0.5).is_err());
    }

    #[test]
    fn rank_snaps_representation_error() {
        // 30 * 0.1 = 3.0000000000000004 in floating point
        assert_eq!(quantile_rank(30, 0.1), 3);
        assert_eq!(quantile_rank(10, 0.95), 10);
        assert_eq!(prefix_len(10, 0.3), 3);
    }

    #[test]
    fn moment_examples() {
        let m: f64 = centred_abs_moment(&[1.0, 2.0, 3.0], 2).unwrap();
        assert!((m - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(centred_abs_moment(&[4.2; 5], 3).unwrap(), 0.0);
        assert_eq!(centred_abs_moment(&[1.0, 2.0, 3.0, 6.0], 1).unwrap(), 1.5);
        assert!((known_mean_abs_moment(&[1.0f64, 2.0, 3.0], 2, &2.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(known_mean_abs_moment(&[0.0, 0.0], 1, &1.0).unwrap(), 1.0);
        assert_eq!(known_mean_abs_moment(&[-1.0, 1.0], 3, &0.0).unwrap(), 1.0);
        assert!(centred_abs_moment(&[1.0], 0).is_err());
    }

    #[test]
    fn exact_moment_in_rationals() {
        let xs: Vec<BigRational> = [1.0, 2.0, 3.0].iter().map(|v| BigRational::from_real(*v)).collect();
        let m = centred_abs_moment(&xs, 2).unwrap();
        assert_eq!(m, BigRational::new(2.into(), 3.into()));
    }

    #[test]
    fn ecdf_examples() {
        let xs = [1.0, 2.0, 3.0];
        assert!((empirical_cdf::<f64>(&xs, &2.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(empirical_cdf(&xs, &0.5).unwrap(), 0.0);
        assert_eq!(empirical_cdf(&xs, &3.0).unwrap(), 1.0);
        assert_eq!(empirical_cdf(&xs, &10.0).unwrap(), 1.0);
    }

    #[test]
    fn prefix_examples() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let out = partial_sum_process(&xs, 0.5, 2, &[0.5, 1.0]).unwrap();
        assert_eq!(out[0].q_hat, 1.0);
        assert_eq!(out[0].m_hat, 0.25);
        assert_eq!(out[0].n, 2);
        assert_eq!(out[1], estimator_vector(&xs, 0.5, 2).unwrap());
        let flat = partial_sum_process(&[2.0; 8], 0.3, 3, &[0.25, 0.5, 1.0]).unwrap();
        assert!(flat.iter().all(|e| e.m_hat == 0.0));
        assert!(partial_sum_process(&xs, 0.5, 2, &[0.1, 1.0]).is_err());
        assert!(partial_sum_process(&xs, 0.5, 2, &[1.0, 0.5]).is_err());
    }

    fn sample() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1e3f64..1e3, 1..40)
    }

    proptest! {
        #[test]
        fn selection_equals_sort(xs in prop::collection::vec(-50f64..50.0, 1..=12), p in 0.001f64..0.999) {
            let mut sorted = xs.clone();
            sorted.sort_by(f64::total_cmp);
            let k = quantile_rank(xs.len(), p);
            prop_assert_eq!(sample_quantile(&xs, p).unwrap(), sorted[k - 1]);
        }

        #[test]
        fn permutation_invariance(xs in sample(), p in 0.01f64..0.99, r in 1u32..4, seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut perm = xs.clone();
            perm.shuffle(&mut crate::rng::stream_rng(seed, 0));
            prop_assert_eq!(sample_quantile(&xs, p).unwrap(), sample_quantile(&perm, p).unwrap());
            let a = centred_abs_moment(&xs, r).unwrap();
            let b = centred_abs_moment(&perm, r).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }

        #[test]
        fn translation_equivariance(xs in sample(), c in -100f64..100.0, p in 0.01f64..0.99, r in 1u32..4) {
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let q = sample_quantile(&xs, p).unwrap();
            let qs = sample_quantile(&shifted, p).unwrap();
            prop_assert!((qs - (q + c)).abs() <= 1e-12 * (q.abs() + c.abs()).max(1.0));
            let m = centred_abs_moment(&xs, r).unwrap();
            let ms = centred_abs_moment(&shifted, r).unwrap();
            let scale = centred_abs_moment(&xs, r).unwrap().max(1.0);
            prop_assert!((m - ms).abs() <= 1e-8 * scale);
        }

        #[test]
        fn scaling(xs in sample(), a in 0.01f64..10.0, p in 0.01f64..0.99, r in 1u32..4) {
            let scaled: Vec<f64> = xs.iter().map(|x| a * x).collect();
            prop_assert_eq!(sample_quantile(&scaled, p).unwrap(), a * sample_quantile(&xs, p).unwrap());
            let m = centred_abs_moment(&xs, r).unwrap();
            let ms = centred_abs_moment(&scaled, r).unwrap();
            prop_assert!((ms - a.powi(r as i32) * m).abs() <= 1e-9 * ms.abs().max(1e-300));
            let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
            let mn = centred_abs_moment(&neg, r).unwrap();
            prop_assert!((mn - m).abs() <= 1e-9 * m.abs().max(1e-12));
        }

        #[test]
        fn invariants_of_the_pair(xs in sample(), p in 0.01f64..0.99, r in 1u32..4) {
            let e = estimator_vector(&xs, p, r).unwrap();
            let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(e.m_hat >= 0.0);
            prop_assert!(e.q_hat >= lo && e.q_hat <= hi);
        }
    }
}
