//! Coupling estimates of near-epoch dependence coefficients
//! `nu(k) = || f(X_0) - E[f(X_0) | eps_{-k}, ..., eps_0] ||_2` and decay fits.

use std::fmt;
use std::str::FromStr;

use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process_sim::{Process, ProcessSpec};
use crate::rng::{stream_rng, NED_STREAM_BASE};
use crate::scalar::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NedFunctional {
    Identity,
    AbsPow(u32),
    IndicatorLeq(f64),
}

impl NedFunctional {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            NedFunctional::Identity => x,
            NedFunctional::AbsPow(r) => x.abs().powi(r as i32),
            NedFunctional::IndicatorLeq(t) => {
                if x <= t {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for NedFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NedFunctional::Identity => write!(f, "identity"),
            NedFunctional::AbsPow(r) => write!(f, "abs_pow:{r}"),
            NedFunctional::IndicatorLeq(x) => write!(f, "indicator_leq:{x}"),
        }
    }
}

impl FromStr for NedFunctional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown functional '{s}' (identity, abs_pow:R, indicator_leq:X)"));
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a.trim(), Some(b.trim())),
            None => (s.trim(), None),
        };
        match (name, arg) {
            ("identity", None) => Ok(NedFunctional::Identity),
            ("abs_pow", Some(a)) => {
                let r: u32 = a.parse().map_err(|_| bad())?;
                if r == 0 {
                    return Err(Error::Parameter("abs_pow order must be at least 1".into()));
                }
                Ok(NedFunctional::AbsPow(r))
            }
            ("indicator_leq", Some(a)) => {
                let x: f64 = a.parse().map_err(|_| bad())?;
                if !x.is_finite() {
                    return Err(bad());
                }
                Ok(NedFunctional::IndicatorLeq(x))
            }
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for NedFunctional {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NedFunctional> for String {
    fn from(f: NedFunctional) -> String {
        f.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NedOptions {
    #[serde(default = "default_redraws")]
    pub redraws: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Innovations simulated before the conditioning window.
    #[serde(default = "default_pre_window")]
    pub pre_window: usize,
    pub seed: u64,
}

fn default_redraws() -> usize {
    64
}
fn default_samples() -> usize {
    4096
}
fn default_pre_window() -> usize {
    200
}

impl NedOptions {
    pub fn new(seed: u64) -> Self {
        NedOptions {
            redraws: default_redraws(),
            samples: default_samples(),
            pre_window: default_pre_window(),
            seed,
        }
    }
}

/// One coupling estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NedEstimate {
    pub k: usize,
    /// Root mean square of `f(X_0)` minus the redraw average.
    pub nu_hat: f64,
    pub se: f64,
    /// Root of the mean within-window unbiased variance, which removes the
    /// `1/R` inflation of `nu_hat^2`.
    pub nu_hat_jk: f64,
    pub se_jk: f64,
}

fn compile_causal(spec: &ProcessSpec) -> Result<Process> {
    spec.compile().map_err(|e| match e {
        Error::NonCausal { modulus } => Error::Unsupported(format!(
            "the one-sided coupling needs a causal specification (smallest AR root modulus {modulus})"
        )),
        other => other,
    })
}

fn root_and_se(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let m = compensated_sum(vals.iter().copied()) / n;
    let sd = if vals.len() > 1 {
        (compensated_sum(vals.iter().map(|v| (v - m).powi(2))) / (n - 1.0)).sqrt()
    } else {
        f64::INFINITY
    };
    let se2 = sd / n.sqrt();
    let root = m.max(0.0).sqrt();
    let se = if root > 0.0 { se2 / (2.0 * root) } else { se2.sqrt() };
    (root, se)
}

/// Coupling estimate of `nu(k)` for functional `func`.
///
/// Outer sample `i` draws `eps_0, eps_{-1}, ..., eps_{-M}` (in that order)
/// on its own stream, with `M = k + pre_window`. The innovations older than
/// `eps_{-k}` are then redrawn `redraws` times from the same stream and
/// `f(X_0)` is compared with the redraw average.
pub fn estimate_ned(spec: &ProcessSpec, func: NedFunctional, k: usize, opts: &NedOptions) -> Result<NedEstimate> {
    let process = compile_causal(spec)?;
    estimate_with(&process, func, k, opts)
}

fn estimate_with(process: &Process, func: NedFunctional, k: usize, opts: &NedOptions) -> Result<NedEstimate> {
    if opts.redraws < 1 || opts.samples < 2 {
        return Err(Error::Parameter("need at least one redraw and two outer samples".into()));
    }
    let len = k + opts.pre_window + 1;
    let sampler = process.sampler();
    let rows: Vec<Result<(f64, f64)>> = (0..opts.samples)
        .into_par_iter()
        .map_init(
            || (vec![0.0; len], Vec::new(), Vec::new(), Vec::new()),
            |(eps, scratch, out, vals), i| {
                let mut rng = stream_rng(opts.seed, NED_STREAM_BASE | i as u64);
                // eps[len - 1] is eps_0
                for j in (0..len).rev() {
                    eps[j] = sampler.sample(&mut rng);
                }
                process.filter_into(eps, scratch, out)?;
                let f0 = func.eval(out[len - 1]);
                vals.clear();
                vals.push(f0);
                let cut = len - 1 - k;
                for _ in 0..opts.redraws {
                    for e in eps[..cut].iter_mut().rev() {
                        *e = sampler.sample(&mut rng);
                    }
                    process.filter_into(eps, scratch, out)?;
                    vals.push(func.eval(out[len - 1]));
                }
                let rr = opts.redraws as f64;
                let avg = compensated_sum(vals[1..].iter().copied()) / rr;
                let raw = (f0 - avg).powi(2);
                let all = compensated_sum(vals.iter().copied()) / (rr + 1.0);
                let pooled = compensated_sum(vals.iter().map(|v| (v - all).powi(2))) / rr;
                Ok((raw, pooled))
            },
        )
        .collect();
    let mut raw = Vec::with_capacity(rows.len());
    let mut pooled = Vec::with_capacity(rows.len());
    for r in rows {
        let (a, b) = r?;
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Divergence { t: len, detail: "non-finite functional value".into() });
        }
        raw.push(a);
        pooled.push(b);
    }
    let (nu_hat, se) = root_and_se(&raw);
    let (nu_hat_jk, se_jk) = root_and_se(&pooled);
    Ok(NedEstimate { k, nu_hat, se, nu_hat_jk, se_jk })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    Geometric,
    Polynomial,
    /// Every estimate is zero.
    FiniteDependence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: DecayModel,
    /// Geometric ratio `rho` in `nu(k) ~ rho^k`, or the size `tau` in
    /// `nu(k) ~ k^(-tau)`.
    pub rate: f64,
    pub r_squared: f64,
    pub degenerate: bool,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NedScan {
    pub functional: NedFunctional,
    pub k_values: Vec<usize>,
    pub nu_hat: Vec<f64>,
    pub se: Vec<f64>,
    pub nu_hat_jk: Vec<f64>,
    pub se_jk: Vec<f64>,
    pub redraws: usize,
    pub samples: usize,
    pub pre_window: usize,
    pub seed: u64,
    pub fit: Option<DecayFit>,
}

impl NedScan {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        wr.write_record(["k", "nu_hat", "se", "nu_hat_jk"]).map_err(csv_err)?;
        for i in 0..self.k_values.len() {
            wr.write_record([
                self.k_values[i].to_string(),
                self.nu_hat[i].to_string(),
                self.se[i].to_string(),
                self.nu_hat_jk[i].to_string(),
            ])
            .map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Rows `(k, nu_hat, se, nu_hat_jk)` from CSV written by [`NedScan::write_csv`].
    pub fn read_csv_rows<R: std::io::Read>(r: R) -> Result<Vec<(usize, f64, f64, f64)>> {
        let mut rd = csv::Reader::from_reader(r);
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(csv_err)?;
            let get = |i: usize| rec.get(i).ok_or_else(|| Error::Parse("short CSV row".into()));
            let num = |i: usize| -> Result<f64> {
                get(i)?.parse::<f64>().map_err(|e| Error::Parse(e.to_string()))
            };
            rows.push((
                get(0)?.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?,
                num(1)?,
                num(2)?,
                num(3)?,
            ));
        }
        Ok(rows)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Estimates `nu(k)` for each `k` and fits the decay when possible.
pub fn ned_scan(spec: &ProcessSpec, func: NedFunctional, k_values: &[usize], opts: &NedOptions) -> Result<NedScan> {
    let process = compile_causal(spec)?;
    let mut est = Vec::with_capacity(k_values.len());
    for &k in k_values {
        est.push(estimate_with(&process, func, k, opts)?);
    }
    let mut scan = NedScan {
        functional: func,
        k_values: k_values.to_vec(),
        nu_hat: est.iter().map(|e| e.nu_hat).collect(),
        se: est.iter().map(|e| e.se).collect(),
        nu_hat_jk: est.iter().map(|e| e.nu_hat_jk).collect(),
        se_jk: est.iter().map(|e| e.se_jk).collect(),
        redraws: opts.redraws,
        samples: opts.samples,
        pre_window: opts.pre_window,
        seed: opts.seed,
        fit: None,
    };
    scan.fit = fit_decay(&scan.k_values, &scan.nu_hat).ok();
    Ok(scan)
}

fn line_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).min(1.0) };
    (slope, r2)
}

/// Least-squares fit of `log nu` against `k`.
pub fn geometric_fit(k_values: &[usize], nu: &[f64]) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = k_values
        .iter()
        .zip(nu)
        .filter(|(_, v)| **v > 0.0)
        .map(|(k, v)| (*k as f64, v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Parameter("geometric fit needs two positive values".into()));
    }
    let (slope, r2) = line_fit(&pts);
    Ok(DecayFit {
        model: DecayModel::Geometric,
        rate: slope.exp(),
        r_squared: r2,
        degenerate: false,
        points: pts.len(),
    })
}

/// Geometric and polynomial fits of `nu` against `k`; returns the one with
/// the larger R².
pub fn fit_decay(k_values: &[usize], nu: &[f64]) -> Result<DecayFit> {
    if k_values.len() != nu.len() {
        return Err(Error::Parameter("k and nu lengths differ".into()));
    }
    if nu.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Parameter("nu values must be finite and non-negative".into()));
    }
    if !nu.is_empty() && nu.iter().all(|v| *v == 0.0) {
        return Ok(DecayFit {
            model: DecayModel::FiniteDependence,
            rate: 0.0,
            r_squared: 1.0,
            degenerate: true,
            points: nu.len(),
        });
    }
    let positive = nu.iter().filter(|v| **v > 0.0).count();
    if positive < 4 {
        return Err(Error::Parameter(format!("decay fit needs four positive values, got {positive}")));
    }
    let geo = geometric_fit(k_values, nu)?;
    let pts: Vec<(f64, f64)> = k_values
        .iter()
        .zip(nu)
        .filter(|(k, v)| **v > 0.0 && **k >= 1)
        .map(|(k, v)| ((*k as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return Ok(geo);
    }
    let (slope, r2) = line_fit(&pts);
    if r2 > geo.r_squared {
        Ok(DecayFit {
            model: DecayModel::Polynomial,
            rate: -slope,
            r_squared: r2,
            degenerate: false,
            points: pts.len(),
        })
    } else {
        Ok(geo)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NedComparison {
    pub identity: NedScan,
    pub indicator: NedScan,
    pub abs_pow: NedScan,
    /// Geometric ratios fitted to each scan (`None` when a scan has fewer
    /// than two positive values).
    pub identity_rate: Option<f64>,
    pub indicator_rate: Option<f64>,
    pub abs_pow_rate: Option<f64>,
    pub tolerance: f64,
    /// Both functional scans decay no faster than the identity scan, up to
    /// `tolerance`.
    pub consistent: Option<bool>,
}

/// Scans of the identity, `1{X <= x_threshold}` and `|X|^r` side by side.
pub fn functional_ned_comparison(
    spec: &ProcessSpec,
    x_threshold: f64,
    r: u32,
    k_values: &[usize],
    opts: &NedOptions,
    tolerance: f64,
) -> Result<NedComparison> {
    let identity = ned_scan(spec, NedFunctional::Identity, k_values, opts)?;
    let indicator = ned_scan(spec, NedFunctional::IndicatorLeq(x_threshold), k_values, opts)?;
    let abs_pow = ned_scan(spec, NedFunctional::AbsPow(r), k_values, opts)?;
    let rate = |s: &NedScan| geometric_fit(&s.k_values, &s.nu_hat).ok().map(|f| f.rate);
    let (ri, rind, rabs) = (rate(&identity), rate(&indicator), rate(&abs_pow));
    let consistent = match (ri, rind, rabs) {
        (Some(a), Some(b), Some(c)) => Some(b >= a - tolerance && c >= a - tolerance),
        _ => None,
    };
    Ok(NedComparison {
        identity,
        indicator,
        abs_pow,
        identity_rate: ri,
        indicator_rate: rind,
        abs_pow_rate: rabs,
        tolerance,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_sim::{ArmaSpec, InnovationDist};

    #[test]
    fn functional_parsing_round_trips() {
        for s in ["identity", "abs_pow:2", "indicator_leq:0.5", "indicator_leq:-1.25"] {
            let f: NedFunctional = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
        assert!("abs_pow".parse::<NedFunctional>().is_err());
        assert!("abs_pow:0".parse::<NedFunctional>().is_err());
        assert!("median".parse::<NedFunctional>().is_err());
        let j = serde_json::to_string(&NedFunctional::AbsPow(3)).unwrap();
        assert_eq!(j, "\"abs_pow:3\"");
    }

    #[test]
    fn synthetic_geometric() {
        let k: Vec<usize> = (1..=10).collect();
        let nu: Vec<f64> = k.iter().map(|k| 0.5f64.powi(*k as i32)).collect();
        let f = fit_decay(&k, &nu).unwrap();
        assert_eq!(f.model, DecayModel::Geometric);
        assert!((f.rate - 0.5).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn synthetic_polynomial() {
        let k: Vec<usize> = (1..=10).collect();
        let nu: Vec<f64> = k.iter().map(|k| (*k as f64).powi(-3)).collect();
        let f = fit_decay(&k, &nu).unwrap();
        assert_eq!(f.model, DecayModel::Polynomial);
        assert!((f.rate - 3.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_zero_is_degenerate() {
        let f = fit_decay(&[1, 2, 3, 4], &[0.0; 4]).unwrap();
        assert!(f.degenerate);
        assert_eq!(f.model, DecayModel::FiniteDependence);
        assert!(fit_decay(&[1, 2, 3], &[1.0, 0.5, 0.25]).is_err());
    }

    #[test]
    fn ma1_has_finite_window() {
        let spec = ProcessSpec::Arma(ArmaSpec::new(&[], &[0.6]));
        let opts = NedOptions { redraws: 8, samples: 64, pre_window: 20, seed: 1 };
        assert!(estimate_ned(&spec, NedFunctional::Identity, 0, &opts).unwrap().nu_hat > 0.1);
        for k in 1..4 {
            let e = estimate_ned(&spec, NedFunctional::Identity, k, &opts).unwrap();
            assert_eq!(e.nu_hat, 0.0);
        }
    }

    #[test]
    fn ar1_tail_formula() {
        let spec = ProcessSpec::Arma(ArmaSpec::ar1(-0.5));
        let opts = NedOptions { redraws: 32, samples: 2048, pre_window: 60, seed: 4 };
        for k in [0, 2, 5] {
            let e = estimate_ned(&spec, NedFunctional::Identity, k, &opts).unwrap();
            let exact = 0.5f64.powi(k as i32 + 1) * (4.0f64 / 3.0).sqrt();
            assert!((e.nu_hat_jk - exact).abs() < 4.0 * e.se_jk, "k={k}: {} vs {exact}", e.nu_hat_jk);
        }
    }

    #[test]
    fn iid_has_no_dependence() {
        let spec = ProcessSpec::Iid(InnovationDist::StandardNormal);
        let opts = NedOptions { redraws: 4, samples: 16, pre_window: 5, seed: 0 };
        let s = ned_scan(&spec, NedFunctional::AbsPow(2), &[1, 2, 3, 4], &opts).unwrap();
        assert!(s.nu_hat.iter().all(|v| *v == 0.0));
        assert!(s.fit.unwrap().degenerate);
    }

    #[test]
    fn non_causal_is_unsupported() {
        let spec = ProcessSpec::Arma(ArmaSpec::ar1(-1.5));
        let e = estimate_ned(&spec, NedFunctional::Identity, 1, &NedOptions::new(0));
        assert!(matches!(e, Err(Error::Unsupported(_))));
    }

    #[test]
    fn csv_round_trip() {
        let spec = ProcessSpec::Arma(ArmaSpec::ar1(-0.5));
        let opts = NedOptions { redraws: 4, samples: 32, pre_window: 10, seed: 9 };
        let s = ned_scan(&spec, NedFunctional::Identity, &[1, 2], &opts).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let rows = NedScan::read_csv_rows(&buf[..]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].0, 2);
        assert_eq!(rows[1].1, s.nu_hat[1]);
        assert!(String::from_utf8(buf).unwrap().starts_with("k,nu_hat,se,nu_hat_jk\n"));
    }
}
