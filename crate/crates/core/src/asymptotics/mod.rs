//! Limiting covariances of the (quantile, moment) pair, long-run covariance
//! estimators and finite-sample remainder terms.

pub mod gamma;
pub mod hac;
pub mod iid;
pub mod lrc;
pub mod remainders;
pub mod truth;

use serde::{Deserialize, Serialize};

pub use gamma::{gamma_from_trivariate, sym3_eigenvalues, Gamma2};
pub use hac::{default_bandwidth, estimate_a_r, kde_at, silverman_bandwidth, trivariate_long_run_cov_hac};
pub use iid::{iid_gamma, iid_trivariate, marginal_moments, MarginalMoments};
pub use lrc::{trivariate_long_run_cov_mc, LrcEstimate, LrcOptions};
pub use remainders::{bahadur_remainder, representation_bracket, representation_gap};
pub use truth::{pilot_truth, resolve_truth, Provenance, Truth, PILOT_DRAWS};

/// Eigenvalue floor for the positive semi-definiteness checks.
pub const PSD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrcMethod {
    IidClosedForm,
    ReplicationMc,
    HacBartlett,
}

/// Long-run covariance of `(U, V, W)` with `U = X`, `V = |X - mu|^r` and
/// `W = (p - 1{X <= q}) / f(q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrivariateLRC {
    pub sigma: [[f64; 3]; 3],
    /// Largest lag (replication MC) or Bartlett bandwidth.
    pub truncation_lag: usize,
    pub method: LrcMethod,
    pub f_at_q: f64,
    /// `f_at_q` came from a kernel density estimate.
    pub f_estimated: bool,
    pub q_true: f64,
    pub p: f64,
    pub r: u32,
    pub mc_se: Option<[[f64; 3]; 3]>,
    /// Estimated sum of the absolute autocovariances beyond the truncation lag.
    pub tail_bound: Option<f64>,
    pub min_eigenvalue: f64,
    pub near_singular: bool,
}

impl TrivariateLRC {
    pub(crate) fn assemble(
        sigma: [[f64; 3]; 3],
        truncation_lag: usize,
        method: LrcMethod,
        f_at_q: f64,
        q_true: f64,
        p: f64,
        r: u32,
    ) -> Self {
        let mut s = sigma;
        for i in 0..3 {
            for j in 0..i {
                let m = 0.5 * (s[i][j] + s[j][i]);
                s[i][j] = m;
                s[j][i] = m;
            }
        }
        let ev = sym3_eigenvalues(&s);
        let scale = ev[2].abs().max(1.0);
        TrivariateLRC {
            sigma: s,
            truncation_lag,
            method,
            f_at_q,
            f_estimated: false,
            q_true,
            p,
            r,
            mc_se: None,
            tail_bound: None,
            min_eigenvalue: ev[0],
            near_singular: ev[0] <= PSD_TOL * scale,
        }
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue >= -PSD_TOL * sym3_eigenvalues(&self.sigma)[2].abs().max(1.0)
    }

    pub fn gamma(&self, a_r: f64) -> Gamma2<f64> {
        gamma_from_trivariate(&self.sigma, a_r)
    }
}

/// Serialized summary of a long-run covariance together with its `Gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrcReport {
    pub sigma: [[f64; 3]; 3],
    pub gamma: [[f64; 2]; 2],
    pub a_r: f64,
    pub f_at_q: f64,
    pub f_estimated: bool,
    pub q_true: f64,
    pub method: LrcMethod,
    pub truncation: usize,
    pub mc_se: Option<[[f64; 3]; 3]>,
    pub gamma_se: Option<[[f64; 2]; 2]>,
    pub tail_bound: Option<f64>,
    pub near_singular: bool,
}

impl LrcReport {
    pub fn new(lrc: &TrivariateLRC, a_r: f64, gamma_se: Option<[[f64; 2]; 2]>) -> Self {
        let g = lrc.gamma(a_r);
        LrcReport {
            sigma: lrc.sigma,
            gamma: g.matrix(),
            a_r,
            f_at_q: lrc.f_at_q,
            f_estimated: lrc.f_estimated,
            q_true: lrc.q_true,
            method: lrc.method,
            truncation: lrc.truncation_lag,
            mc_se: lrc.mc_se,
            gamma_se,
            tail_bound: lrc.tail_bound,
            near_singular: lrc.near_singular || g.near_singular(),
        }
    }
}
