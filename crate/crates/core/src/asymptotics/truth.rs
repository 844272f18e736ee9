//! Population constants (`q`, `f(q)`, `mu`, `a_r`, `m`) used to centre
//! estimators in model-based experiments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::iid::marginal_moments;
use crate::error::{Error, Result};
use crate::estimators::sample_quantile;
use crate::process_sim::{ArmaInnovation, InnovationDist, Lambda, ProcessSpec};
use crate::rng::{stream_rng, PILOT_STREAM};
use crate::scalar::compensated_sum;

/// Default pilot length.
pub const PILOT_DRAWS: usize = 10_000_000;

const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm {
        method: String,
    },
    PilotMc {
        draws: usize,
        seed: u64,
        burn_in: usize,
        spec_fingerprint: String,
        pilot_fingerprint: String,
    },
    Supplied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub q_true: f64,
    pub f_at_q: f64,
    pub mu: f64,
    pub a_r: f64,
    pub m_true: f64,
    pub p: f64,
    pub r: u32,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Truth {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_at_q > 0.0 && self.f_at_q.is_finite()) {
            return Err(Error::Singular(format!("density at the quantile is {}", self.f_at_q)));
        }
        for (name, v) in [
            ("q_true", self.q_true),
            ("mu", self.mu),
            ("a_r", self.a_r),
            ("m_true", self.m_true),
        ] {
            if !v.is_finite() {
                return Err(Error::Parameter(format!("{name} = {v} is not finite")));
            }
        }
        Ok(())
    }
}

/// Truths in closed form where available, otherwise from a pilot of `draws`
/// values on the pilot stream of `seed`.
pub fn resolve_truth(spec: &ProcessSpec, p: f64, r: u32, draws: usize, seed: u64) -> Result<Truth> {
    match closed_form_truth(spec, p, r)? {
        Some(t) => Ok(t),
        None => pilot_truth(spec, p, r, draws, seed),
    }
}

fn closed_form_truth(spec: &ProcessSpec, p: f64, r: u32) -> Result<Option<Truth>> {
    match spec {
        ProcessSpec::Constant(_) => Err(Error::Singular(
            "a constant process has no density at its quantiles".into(),
        )),
        ProcessSpec::Iid(dist) => {
            let m = marginal_moments(dist, p, r)?;
            Ok(Some(Truth {
                q_true: m.q,
                f_at_q: m.f_at_q,
                mu: m.mu,
                a_r: m.a_r,
                m_true: m.abs_r,
                p,
                r,
                provenance: Provenance::ClosedForm { method: "iid_quadrature".into() },
                notes: vec![],
            }))
        }
        ProcessSpec::Arma(a) => match a.innovation {
            ArmaInnovation::Iid(InnovationDist::StandardNormal) => {
                a.validate()?;
                let v = gaussian_arma_variance(&a.phi, &a.theta)?;
                let sd = v.sqrt();
                let z = InnovationDist::StandardNormal;
                let q = sd * z.quantile(p);
                Ok(Some(Truth {
                    q_true: q,
                    f_at_q: z.pdf(q / sd) / sd,
                    mu: 0.0,
                    a_r: 0.0,
                    m_true: sd.powi(r as i32) * z.abs_moment(r as f64),
                    p,
                    r,
                    provenance: Provenance::ClosedForm { method: "gaussian_arma".into() },
                    notes: vec![],
                }))
            }
            _ => Ok(None),
        },
        ProcessSpec::Garch(_) => Ok(None),
    }
}

/// `sum psi_j^2`, summed until the terms are negligible.
fn gaussian_arma_variance(phi: &[f64], theta: &[f64]) -> Result<f64> {
    let mut k = 256;
    loop {
        let psi = crate::process_sim::arma::psi_weights(phi, theta, k);
        let tail: f64 = psi[k / 2..].iter().map(|x| x * x).sum();
        let total = compensated_sum(psi.iter().map(|x| x * x));
        if tail <= 1e-17 * total {
            return Ok(total);
        }
        if k > 1 << 22 {
            return Err(Error::Accuracy { estimate: total, achieved: tail });
        }
        k *= 4;
    }
}

fn chunked<F>(n: usize, f: F) -> (f64, f64)
where
    F: Fn(usize) -> (f64, f64) + Sync,
{
    let parts: Vec<(f64, f64)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let mut a = Vec::with_capacity(hi - lo);
            let mut b = Vec::with_capacity(hi - lo);
            for i in lo..hi {
                let (x, y) = f(i);
                a.push(x);
                b.push(y);
            }
            (compensated_sum(a), compensated_sum(b))
        })
        .collect();
    (
        compensated_sum(parts.iter().map(|x| x.0)),
        compensated_sum(parts.iter().map(|x| x.1)),
    )
}

/// Pilot run using `X_t = m_t + s_t eps_t`: the marginal CDF and density are
/// averages of the innovation CDF and density over the simulated
/// `(m_t, s_t)`, which removes the indicator noise of the plain empirical
/// quantities.
pub fn pilot_truth(spec: &ProcessSpec, p: f64, r: u32, draws: usize, seed: u64) -> Result<Truth> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Parameter(format!("p = {p} must lie in (0, 1)")));
    }
    if r == 0 {
        return Err(Error::Parameter("moment order r must be at least 1".into()));
    }
    if draws < 1000 {
        return Err(Error::Parameter(format!("pilot needs at least 1000 draws, got {draws}")));
    }
    let process = spec.compile()?;
    let dist = spec.innovation();
    if dist.is_discrete() {
        return Err(Error::Singular(format!("{dist:?} innovations have no density")));
    }
    let burn_in = process.default_burn_in();
    let mut rng = stream_rng(seed, PILOT_STREAM);
    let mut eps = Vec::new();
    process.draw_into(&mut rng, draws + burn_in, &mut eps);
    let (x, m, s) = process.conditional_parts(&eps)?;
    drop(eps);
    let (x, m, s) = (&x[burn_in..], &m[burn_in..], &s[burn_in..]);
    let n = x.len();
    let nf = n as f64;

    let cdf_pdf = |q: f64| {
        let (fsum, dsum) = chunked(n, |i| {
            let z = (q - m[i]) / s[i];
            (dist.cdf(z), dist.pdf(z) / s[i])
        });
        (fsum / nf, dsum / nf)
    };
    let mut q = sample_quantile(x, p)?;
    let (mut fq, mut dq) = cdf_pdf(q);
    for _ in 0..100 {
        if !(dq > 0.0) {
            return Err(Error::Singular(format!("pilot density at {q} is {dq}")));
        }
        let mut step = (fq - p) / dq;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = q - step;
            let (fc, dc) = cdf_pdf(cand);
            if (fc - p).abs() <= (fq - p).abs() {
                q = cand;
                fq = fc;
                dq = dc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || step.abs() <= 1e-14 * (1.0 + q.abs()) {
            break;
        }
    }
    let (_, f_at_q) = cdf_pdf(q);
    if !(f_at_q > 0.0) {
        return Err(Error::Singular(format!("pilot density at {q} is {f_at_q}")));
    }

    let mut notes = vec![
        "mu = 0 and a_r = 0: the innovations are symmetric with mean zero and the marginal law is symmetric".to_string(),
    ];
    let ri = r as i32;
    let m_true = match process.garch_state() {
        Some((Lambda::Power { delta }, lambda0, ec)) if (r as f64 - 2.0 * delta).abs() < 1e-12 && ec < 1.0 => {
            notes.push("m_true = E[sigma^r] E|eps|^r with E[sigma^r] the stationary mean of the power state".into());
            lambda0 * dist.abs_moment(r as f64)
        }
        _ if m.iter().all(|v| *v == 0.0) => {
            notes.push("m_true from the pilot mean of s_t^r times E|eps|^r".into());
            let (a, _) = chunked(n, |i| (s[i].powi(ri), 0.0));
            a / nf * dist.abs_moment(r as f64)
        }
        _ => {
            notes.push("m_true from the pilot mean of |X_t|^r".into());
            let (a, _) = chunked(n, |i| (x[i].abs().powi(ri), 0.0));
            a / nf
        }
    };

    let spec_fingerprint = spec.fingerprint();
    let mut h = Sha256::new();
    h.update(format!("{spec_fingerprint}|{p}|{r}|{draws}|{seed}|{burn_in}"));
    let pilot_fingerprint = hex::encode(&h.finalize()[..8]);
    let t = Truth {
        q_true: q,
        f_at_q,
        mu: 0.0,
        a_r: 0.0,
        m_true,
        p,
        r,
        provenance: Provenance::PilotMc {
            draws,
            seed,
            burn_in,
            spec_fingerprint,
            pilot_fingerprint,
        },
        notes,
    };
    t.validate()?;
    Ok(t)
}
