//! Remainder terms of the linear representations of the two estimators.

use crate::error::{Error, Result};
use crate::estimators::{centred_abs_moment, empirical_cdf, known_mean_abs_moment, sample_mean, sample_quantile};
use crate::scalar::Scalar;

/// `q_n(p) - q - (p - F_n(q)) / f`.
pub fn bahadur_remainder<T: Scalar>(xs: &[T], p: f64, q_true: &T, f_at_q: &T) -> Result<T> {
    if !(*f_at_q > T::zero()) {
        return Err(Error::Singular("density at the quantile must be positive".into()));
    }
    let q_hat = sample_quantile(xs, p)?;
    let fn_q = empirical_cdf(xs, q_true)?;
    Ok(q_hat - q_true.clone() - (T::from_real(p) - fn_q) / f_at_q.clone())
}

/// `m_hat - (1/n) sum |X_i - mu|^r + (mean - mu) a_r`, where `a_r` already
/// carries the factor `r`.
pub fn representation_bracket<T: Scalar>(xs: &[T], r: u32, mu: &T, a_r: &T) -> Result<T> {
    let m_hat = centred_abs_moment(xs, r)?;
    let known = known_mean_abs_moment(xs, r, mu)?;
    let xbar = sample_mean(xs)?;
    Ok(m_hat - known + (xbar - mu.clone()) * a_r.clone())
}

/// `sqrt(n)` times [`representation_bracket`].
pub fn representation_gap(xs: &[f64], r: u32, mu: f64, a_r: f64) -> Result<f64> {
    Ok((xs.len() as f64).sqrt() * representation_bracket(xs, r, &mu, &a_r)?)
}
