//! Single-path Bartlett kernel estimator of the long-run covariance.

use rayon::prelude::*;

use super::iid::a_r_integrand;
use super::{LrcMethod, TrivariateLRC};
use crate::error::{Error, Result};
use crate::estimators::{sample_mean, sample_quantile};
use crate::scalar::compensated_sum;

/// `floor(n^(1/3))`.
pub fn default_bandwidth(n: usize) -> usize {
    let mut b = (n as f64).cbrt().floor() as usize;
    while (b + 1).pow(3) <= n {
        b += 1;
    }
    while b > 0 && b.pow(3) > n {
        b -= 1;
    }
    b
}

/// Silverman's rule `0.9 min(sd, iqr / 1.34) n^(-1/5)`.
pub fn silverman_bandwidth(xs: &[f64]) -> Result<f64> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::Parameter("kernel density estimate needs at least two points".into()));
    }
    let mean = sample_mean(xs)?;
    let sd = (compensated_sum(xs.iter().map(|x| (x - mean).powi(2))) / (n - 1) as f64).sqrt();
    let iqr = sample_quantile(xs, 0.75)? - sample_quantile(xs, 0.25)?;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        (false, true) => iqr / 1.34,
        (false, false) => 0.0,
    };
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

/// Gaussian kernel density estimate at `x` with Silverman's bandwidth.
pub fn kde_at(xs: &[f64], x: f64) -> Result<f64> {
    let h = silverman_bandwidth(xs)?;
    if !(h > 0.0) {
        return Err(Error::Singular("sample has zero spread; density estimate degenerates".into()));
    }
    let c = 1.0 / (h * xs.len() as f64 * (2.0 * std::f64::consts::PI).sqrt());
    let parts: Vec<f64> = xs
        .par_chunks(1 << 15)
        .map(|ch| compensated_sum(ch.iter().map(|v| (-0.5 * ((x - v) / h).powi(2)).exp())))
        .collect();
    let f = c * compensated_sum(parts);
    if !(f > 0.0) {
        return Err(Error::Singular(format!("density estimate at {x} is {f}")));
    }
    Ok(f)
}

/// Plug-in estimate of `a_r` with the sample mean in place of `mu`.
pub fn estimate_a_r(xs: &[f64], r: u32) -> Result<f64> {
    let m = sample_mean(xs)?;
    Ok(compensated_sum(xs.iter().map(|x| a_r_integrand(x - m, r))) / xs.len() as f64)
}

/// Bartlett-weighted estimate with weights `1 - h / (b + 1)`, using the
/// sample quantile and a kernel density estimate in place of the true
/// quantile and density.
pub fn trivariate_long_run_cov_hac(xs: &[f64], p: f64, r: u32, bandwidth: usize) -> Result<TrivariateLRC> {
    let n = xs.len();
    if n < 2 || n < 10 * bandwidth {
        return Err(Error::Parameter(format!(
            "path of length {n} is too short for bandwidth {bandwidth} (need n >= 10 b)"
        )));
    }
    if r == 0 {
        return Err(Error::Parameter("moment order r must be at least 1".into()));
    }
    let q = sample_quantile(xs, p)?;
    let f = kde_at(xs, q)?;
    let mean = sample_mean(xs)?;
    let ri = r as i32;
    let mut y: Vec<[f64; 3]> = xs
        .iter()
        .map(|&x| {
            [
                x,
                (x - mean).abs().powi(ri),
                (p - if x <= q { 1.0 } else { 0.0 }) / f,
            ]
        })
        .collect();
    let mut m = [0.0; 3];
    for (a, ma) in m.iter_mut().enumerate() {
        *ma = compensated_sum(y.iter().map(|v| v[a])) / n as f64;
    }
    for v in &mut y {
        for a in 0..3 {
            v[a] -= m[a];
        }
    }
    let lag: Vec<[[f64; 3]; 3]> = (0..=bandwidth)
        .into_par_iter()
        .map(|h| {
            let mut c = [[0.0; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    c[a][b] = compensated_sum((h..n).map(|t| y[t][a] * y[t - h][b])) / n as f64;
                }
            }
            c
        })
        .collect();
    let mut s = lag[0];
    for (h, c) in lag.iter().enumerate().skip(1) {
        let w = 1.0 - h as f64 / (bandwidth + 1) as f64;
        for a in 0..3 {
            for b in 0..3 {
                s[a][b] += w * (c[a][b] + c[b][a]);
            }
        }
    }
    let mut lrc = TrivariateLRC::assemble(s, bandwidth, LrcMethod::HacBartlett, f, q, p, r);
    lrc.f_estimated = true;
    Ok(lrc)
}
