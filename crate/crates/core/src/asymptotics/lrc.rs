//! Long-run covariance of `(U, V, W)` by replication Monte Carlo.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{gamma_from_trivariate, Gamma2, LrcMethod, Truth, TrivariateLRC};
use crate::conditions::{all_satisfied, check_process};
use crate::error::{Error, Result};
use crate::process_sim::{ProcessSpec, Workspace};
use crate::rng::{stream_rng, LRC_STREAM_BASE};
use crate::scalar::compensated_sum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrcOptions {
    #[serde(default = "default_max_lag")]
    pub max_lag: usize,
    pub n_per_rep: usize,
    pub reps: usize,
    pub seed: u64,
    #[serde(default)]
    pub burn_in: Option<usize>,
}

fn default_max_lag() -> usize {
    50
}

impl LrcOptions {
    pub fn new(n_per_rep: usize, reps: usize, seed: u64) -> Self {
        LrcOptions {
            max_lag: default_max_lag(),
            n_per_rep,
            reps,
            seed,
            burn_in: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrcEstimate {
    pub lrc: TrivariateLRC,
    pub gamma: Gamma2<f64>,
    pub gamma_se: [[f64; 2]; 2],
    /// Lag-0 covariance of the three series.
    pub lag0: [[f64; 3]; 3],
    pub reps_used: usize,
    pub quarantined: usize,
}

/// Sufficient statistics of one replication, all on series centred at the
/// true means.
struct RepStats {
    sums: [f64; 3],
    head: Vec<[f64; 3]>,
    tail: Vec<[f64; 3]>,
    /// `cross[h][a][b] = sum_t y_a(t + h) y_b(t)`
    cross: Vec<[[f64; 3]; 3]>,
}

fn rep_stats(y: &[[f64; 3]], max_lag: usize) -> RepStats {
    let n = y.len();
    let mut sums = [0.0; 3];
    for v in y {
        for a in 0..3 {
            sums[a] += v[a];
        }
    }
    let mut cross = vec![[[0.0; 3]; 3]; max_lag + 1];
    for (h, c) in cross.iter_mut().enumerate() {
        if h >= n {
            break;
        }
        let mut acc = [[0.0; 3]; 3];
        for t in 0..n - h {
            let (u, v) = (&y[t + h], &y[t]);
            for a in 0..3 {
                for b in 0..3 {
                    acc[a][b] += u[a] * v[b];
                }
            }
        }
        *c = acc;
    }
    RepStats {
        sums,
        head: y[..max_lag.min(n)].to_vec(),
        tail: y[n - max_lag.min(n)..].to_vec(),
        cross,
    }
}

impl RepStats {
    fn finite(&self) -> bool {
        self.sums.iter().all(|v| v.is_finite())
            && self.cross.iter().flatten().flatten().all(|v| v.is_finite())
    }

    /// Lag-`h` cross-covariance around the pooled means `mbar`.
    fn cov(&self, h: usize, n: usize, mbar: &[f64; 3]) -> [[f64; 3]; 3] {
        let k = (n - h) as f64;
        let mut out = [[0.0; 3]; 3];
        for a in 0..3 {
            // sum_{t >= h} y_a(t)
            let lead = self.sums[a] - self.head[..h].iter().map(|v| v[a]).sum::<f64>();
            for b in 0..3 {
                // sum_{t < n - h} y_b(t)
                let lag = self.sums[b]
                    - self.tail[self.tail.len() - h..].iter().map(|v| v[b]).sum::<f64>();
                out[a][b] =
                    (self.cross[h][a][b] - mbar[a] * lag - mbar[b] * lead) / k + mbar[a] * mbar[b];
            }
        }
        out
    }

    /// Lag covariances `0..=max_lag`.
    fn covs(&self, n: usize, max_lag: usize, mbar: &[f64; 3]) -> Vec<[[f64; 3]; 3]> {
        (0..=max_lag).map(|h| self.cov(h, n, mbar)).collect()
    }
}

/// Truncated long-run covariance from lag covariances.
fn long_run(covs: &[[[f64; 3]; 3]]) -> [[f64; 3]; 3] {
    let mut s = covs[0];
    for c in &covs[1..] {
        for a in 0..3 {
            for b in 0..3 {
                s[a][b] += c[a][b] + c[b][a];
            }
        }
    }
    s
}

fn mean_and_se<const N: usize>(items: &[[[f64; N]; N]]) -> ([[f64; N]; N], [[f64; N]; N]) {
    let k = items.len() as f64;
    let mut mean = [[0.0; N]; N];
    let mut se = [[f64::INFINITY; N]; N];
    for i in 0..N {
        for j in 0..N {
            let m = compensated_sum(items.iter().map(|x| x[i][j])) / k;
            mean[i][j] = m;
            if items.len() > 1 {
                let v = compensated_sum(items.iter().map(|x| (x[i][j] - m).powi(2))) / (k - 1.0);
                se[i][j] = (v / k).sqrt();
            }
        }
    }
    (mean, se)
}

/// Sum of `|cov(h)|` beyond the last lag, extrapolated from a geometric fit
/// to the leading lags whose profile exceeds three standard errors. Zero
/// when no lag is distinguishable from noise; `inf` when the fitted profile
/// does not decay.
fn geometric_tail(profile: &[f64], noise: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = (1..profile.len())
        .take_while(|&h| profile[h] > 3.0 * noise[h])
        .map(|h| (h as f64, profile[h].ln()))
        .collect();
    if pts.is_empty() {
        return 0.0;
    }
    if pts.len() == 1 {
        // a single significant lag: assume at least halving per lag
        let l = (profile.len() - 1) as f64;
        return (pts[0].1 + (l - pts[0].0) * 0.5f64.ln()).exp();
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return f64::INFINITY;
    }
    let rho = slope.exp();
    let l = (profile.len() - 1) as f64;
    (my + slope * (l - mx)).exp() * rho / (1.0 - rho)
}

/// Replication Monte Carlo estimate of the long-run covariance, truncated at
/// `opts.max_lag`.
///
/// Each replication is an independent path of length `n_per_rep` on its own
/// stream. Lagged covariances are pooled across replications around the
/// pooled means; standard errors come from the spread of the per-replication
/// truncated sums.
pub fn trivariate_long_run_cov_mc(spec: &ProcessSpec, truth: &Truth, opts: &LrcOptions) -> Result<LrcEstimate> {
    truth.validate()?;
    let reports = check_process(spec, truth.r)?;
    if !all_satisfied(&reports) {
        return Err(Error::Refused(reports));
    }
    let n = opts.n_per_rep;
    if n <= opts.max_lag + 1 {
        return Err(Error::Parameter(format!(
            "n_per_rep = {n} must exceed max_lag + 1 = {}",
            opts.max_lag + 1
        )));
    }
    if opts.reps < 2 {
        return Err(Error::Parameter("at least two replications are required".into()));
    }
    let process = spec.compile()?;
    let burn_in = opts.burn_in.unwrap_or_else(|| process.default_burn_in());
    let (p, r, q, f, mu) = (truth.p, truth.r as i32, truth.q_true, truth.f_at_q, truth.mu);
    let centre = [mu, truth.m_true, 0.0];

    let stats: Vec<Result<Option<RepStats>>> = (0..opts.reps)
        .into_par_iter()
        .map_init(Workspace::default, |work, rep| {
            let mut rng = stream_rng(opts.seed, LRC_STREAM_BASE | rep as u64);
            let mut x = Vec::with_capacity(n);
            process.simulate_with(&mut rng, n, burn_in, work, &mut x)?;
            let y: Vec<[f64; 3]> = x
                .iter()
                .map(|&v| {
                    let w = (p - if v <= q { 1.0 } else { 0.0 }) / f;
                    [v - centre[0], (v - mu).abs().powi(r) - centre[1], w - centre[2]]
                })
                .collect();
            let s = rep_stats(&y, opts.max_lag);
            Ok(s.finite().then_some(s))
        })
        .collect();
    let mut used = Vec::with_capacity(stats.len());
    for s in stats {
        if let Some(s) = s? {
            used.push(s);
        }
    }
    let quarantined = opts.reps - used.len();
    if used.len() < 2 {
        return Err(Error::Parameter(format!(
            "only {} finite replications out of {}",
            used.len(),
            opts.reps
        )));
    }
    let total = (used.len() * n) as f64;
    let mut mbar = [0.0; 3];
    for (a, m) in mbar.iter_mut().enumerate() {
        *m = compensated_sum(used.iter().map(|s| s.sums[a])) / total;
    }

    let per_rep: Vec<Vec<[[f64; 3]; 3]>> = used
        .par_iter()
        .map(|s| s.covs(n, opts.max_lag, &mbar))
        .collect();
    let sig: Vec<[[f64; 3]; 3]> = per_rep.iter().map(|c| long_run(c)).collect();
    let (sigma, sigma_se) = mean_and_se(&sig);
    let mut profile = vec![0.0; opts.max_lag + 1];
    let mut noise = vec![0.0; opts.max_lag + 1];
    let mut lag0 = [[0.0; 3]; 3];
    for h in 0..=opts.max_lag {
        let at: Vec<[[f64; 3]; 3]> = per_rep.iter().map(|c| c[h]).collect();
        let (m, se) = mean_and_se(&at);
        profile[h] = m.iter().flatten().map(|v| v.abs()).sum();
        noise[h] = se.iter().flatten().sum();
        if h == 0 {
            lag0 = m;
        }
    }
    let gam: Vec<[[f64; 2]; 2]> = sig
        .iter()
        .map(|s| gamma_from_trivariate(s, truth.a_r).matrix())
        .collect();
    let (_, gamma_se) = mean_and_se(&gam);

    let mut lrc = TrivariateLRC::assemble(sigma, opts.max_lag, LrcMethod::ReplicationMc, f, q, p, truth.r);
    lrc.mc_se = Some(sigma_se);
    lrc.tail_bound = Some(geometric_tail(&profile, &noise));
    let gamma = lrc.gamma(truth.a_r);
    Ok(LrcEstimate {
        lrc,
        gamma,
        gamma_se,
        lag0,
        reps_used: used.len(),
        quarantined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::{iid_trivariate, resolve_truth};
    use crate::process_sim::{ArmaSpec, InnovationDist};

    fn direct_cov(y: &[[f64; 3]], h: usize) -> [[f64; 3]; 3] {
        let n = y.len();
        let mut m = [0.0; 3];
        for v in y {
            for a in 0..3 {
                m[a] += v[a] / n as f64;
            }
        }
        let mut c = [[0.0; 3]; 3];
        for t in 0..n - h {
            for a in 0..3 {
                for b in 0..3 {
                    c[a][b] += (y[t + h][a] - m[a]) * (y[t][b] - m[b]) / (n - h) as f64;
                }
            }
        }
        c
    }

    #[test]
    fn sufficient_statistics_match_direct_covariance() {
        let y: Vec<[f64; 3]> = (0..40)
            .map(|i| {
                let t = i as f64;
                [t.sin(), (1.3 * t).cos() + 0.2, (0.7 * t).sin() * t / 40.0]
            })
            .collect();
        let s = rep_stats(&y, 5);
        let mut m = [0.0; 3];
        for a in 0..3 {
            m[a] = s.sums[a] / 40.0;
        }
        for h in 0..=5 {
            let a = s.cov(h, 40, &m);
            let b = direct_cov(&y, h);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((a[i][j] - b[i][j]).abs() < 1e-13, "h={h} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn iid_matches_closed_form() {
        let spec = ProcessSpec::Iid(InnovationDist::StandardNormal);
        let truth = resolve_truth(&spec, 0.5, 2, 0, 0).unwrap();
        let mut opts = LrcOptions::new(2000, 400, 11);
        opts.max_lag = 0;
        let est = trivariate_long_run_cov_mc(&spec, &truth, &opts).unwrap();
        let exact = iid_trivariate(&InnovationDist::StandardNormal, 0.5, 2).unwrap();
        let se = est.lrc.mc_se.unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let d = (est.lrc.sigma[i][j] - exact.sigma[i][j]).abs();
                assert!(d <= 3.0 * se[i][j] + 1e-12, "({i},{j}) diff {d} se {}", se[i][j]);
            }
        }
        assert_eq!(est.reps_used + est.quarantined, 400);
    }

    #[test]
    fn ar1_long_run_variance_triples() {
        let spec = ProcessSpec::Arma(ArmaSpec::ar1(-0.5));
        let truth = resolve_truth(&spec, 0.5, 1, 0, 0).unwrap();
        let mut opts = LrcOptions::new(4000, 200, 5);
        opts.max_lag = 40;
        let est = trivariate_long_run_cov_mc(&spec, &truth, &opts).unwrap();
        let exact = 3.0 * 4.0 / 3.0;
        let se = est.lrc.mc_se.unwrap()[0][0];
        assert!((est.lrc.sigma[0][0] - exact).abs() < 4.0 * se + 0.05 * exact);
        assert!(est.lrc.tail_bound.unwrap() < 1e-3);
    }

    #[test]
    fn non_causal_spec_is_refused() {
        let spec = ProcessSpec::Arma(ArmaSpec::ar1(-2.0));
        let truth = Truth {
            q_true: 0.0,
            f_at_q: 0.3,
            mu: 0.0,
            a_r: 0.0,
            m_true: 1.0,
            p: 0.5,
            r: 1,
            provenance: crate::asymptotics::Provenance::Supplied,
            notes: vec![],
        };
        let e = trivariate_long_run_cov_mc(&spec, &truth, &LrcOptions::new(100, 4, 0));
        assert!(matches!(e, Err(Error::Refused(_))));
    }
}
