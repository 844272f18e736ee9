//! Moment summaries with Monte Carlo standard errors.

use serde::{Deserialize, Serialize};

use crate::scalar::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Fail dominates, then inconclusive.
    pub fn all<I: IntoIterator<Item = Verdict>>(items: I) -> Verdict {
        let mut out = Verdict::Pass;
        for v in items {
            match v {
                Verdict::Fail => return Verdict::Fail,
                Verdict::Inconclusive => out = Verdict::Inconclusive,
                Verdict::Pass => {}
            }
        }
        out
    }
}

/// Replication counts below this make every verdict inconclusive.
pub const MIN_REPS_FOR_VERDICT: usize = 30;

pub fn mean(v: &[f64]) -> f64 {
    compensated_sum(v.iter().copied()) / v.len() as f64
}

/// Unbiased sample standard deviation (`inf` for fewer than two values).
pub fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::INFINITY;
    }
    let m = mean(v);
    (compensated_sum(v.iter().map(|x| (x - m).powi(2))) / (v.len() - 1) as f64).sqrt()
}

/// Unbiased 2x2 covariance of the rows of `z` with standard errors of each
/// entry from the spread of the centred cross products.
pub fn cov2(z: &[[f64; 2]]) -> ([f64; 2], [[f64; 2]; 2], [[f64; 2]; 2]) {
    let m = [
        mean(&z.iter().map(|v| v[0]).collect::<Vec<_>>()),
        mean(&z.iter().map(|v| v[1]).collect::<Vec<_>>()),
    ];
    let k = z.len() as f64;
    let mut cov = [[0.0; 2]; 2];
    let mut se = [[f64::INFINITY; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let prod: Vec<f64> = z.iter().map(|v| (v[i] - m[i]) * (v[j] - m[j])).collect();
            cov[i][j] = compensated_sum(prod.iter().copied()) / (k - 1.0);
            se[i][j] = std_dev(&prod) / k.sqrt();
        }
    }
    (m, cov, se)
}

/// Sample skewness and excess kurtosis with their standard errors under
/// normality, `sqrt(6/M)` and `sqrt(24/M)`.
pub fn shape(v: &[f64]) -> (f64, f64, f64, f64) {
    let k = v.len() as f64;
    let m = mean(v);
    let m2 = compensated_sum(v.iter().map(|x| (x - m).powi(2))) / k;
    let m3 = compensated_sum(v.iter().map(|x| (x - m).powi(3))) / k;
    let m4 = compensated_sum(v.iter().map(|x| (x - m).powi(4))) / k;
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0, (6.0 / k).sqrt(), (24.0 / k).sqrt())
}

/// Order statistic `X_(ceil(M p))` of an unsorted sample.
pub fn order_stat(v: &[f64], p: f64) -> f64 {
    crate::estimators::sample_quantile(v, p).unwrap_or(f64::NAN)
}

/// Standard error of the sample median from the distribution-free
/// order-statistic interval `X_(M/2 -+ sqrt(M)/2)`.
pub fn median_se(v: &[f64]) -> f64 {
    let k = v.len();
    if k < 4 {
        return f64::INFINITY;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let half = 0.5 * (k as f64).sqrt();
    let lo = ((k as f64 / 2.0 - half).floor().max(0.0)) as usize;
    let hi = ((k as f64 / 2.0 + half).ceil() as usize).min(k - 1);
    0.5 * (s[hi] - s[lo])
}
