use rand::distr::Distribution;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::arma::{ArmaInnovation, ArmaSpec};
use super::garch::{CompiledGarch, GarchModel, GarchSpec, InnovationFn, Lambda};
use super::innovation::{InnovationDist, InnovationSampler};
use super::path::Path;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamRng};

/// A simulatable stationary model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecFile", into = "SpecFile")]
pub enum ProcessSpec {
    Iid(InnovationDist),
    Garch(GarchSpec),
    Arma(ArmaSpec),
    /// Degenerate constant process.
    Constant(f64),
}

/// Flat JSON layout of a [`ProcessSpec`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    alpha: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    beta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    gamma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    innovation: Option<InnovationDist>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    phi: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    theta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    garch: Option<Box<SpecFile>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    g: Vec<InnovationFn>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    c: Vec<InnovationFn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
}

fn garch_to_file(g: &GarchSpec) -> SpecFile {
    let (lambda, delta) = match g.lambda {
        Lambda::Power { delta } => ("power", Some(delta)),
        Lambda::Log => ("log", None),
    };
    SpecFile {
        model: g.model.name().into(),
        lambda: Some(lambda.into()),
        delta,
        p: Some(g.p()),
        q: Some(g.q()),
        omega: (g.model != GarchModel::Generic).then_some(g.omega),
        alpha: g.alpha.clone(),
        beta: g.beta.clone(),
        gamma: g.gamma.clone(),
        innovation: Some(g.innovation),
        g: g.g.clone(),
        c: g.c.clone(),
        ..Default::default()
    }
}

fn garch_from_file(f: SpecFile, model: GarchModel) -> Result<GarchSpec> {
    let lambda = match (f.lambda.as_deref(), f.delta) {
        (Some("log"), None) => Lambda::Log,
        (Some("log"), Some(_)) => {
            return Err(Error::Parse("delta is meaningless with lambda = log".into()))
        }
        (Some("power"), Some(delta)) => Lambda::Power { delta },
        (Some("power"), None) => Lambda::Power { delta: 1.0 },
        (Some(other), _) => return Err(Error::Parse(format!("unknown lambda '{other}'"))),
        (None, delta) => {
            if model.is_exponential() {
                if delta.is_some() {
                    return Err(Error::Parse("delta is meaningless for exponential models".into()));
                }
                Lambda::Log
            } else if model == GarchModel::Generic {
                return Err(Error::Parse("generic model needs an explicit lambda".into()));
            } else {
                let default = match model {
                    GarchModel::Tgarch | GarchModel::Tsgarch => 0.5,
                    _ => 1.0,
                };
                Lambda::Power { delta: delta.unwrap_or(default) }
            }
        }
    };
    let spec = GarchSpec {
        model,
        lambda,
        omega: f.omega.unwrap_or(0.0),
        alpha: f.alpha,
        beta: f.beta,
        gamma: f.gamma,
        g: f.g,
        c: f.c,
        innovation: f.innovation.unwrap_or_default(),
    };
    if model != GarchModel::Generic && f.omega.is_none() {
        return Err(Error::Parse(format!("{} needs omega", model.name())));
    }
    if let Some(p) = f.p {
        if p != spec.p() {
            return Err(Error::Parse(format!("p = {p} does not match {} lag coefficients", spec.p())));
        }
    }
    if let Some(q) = f.q {
        if q != spec.q() {
            return Err(Error::Parse(format!("q = {q} does not match {} lag coefficients", spec.q())));
        }
    }
    spec.validate()?;
    Ok(spec)
}

impl From<ProcessSpec> for SpecFile {
    fn from(s: ProcessSpec) -> Self {
        match s {
            ProcessSpec::Iid(d) => SpecFile { model: "iid".into(), innovation: Some(d), ..Default::default() },
            ProcessSpec::Constant(v) => SpecFile { model: "constant".into(), value: Some(v), ..Default::default() },
            ProcessSpec::Garch(g) => garch_to_file(&g),
            ProcessSpec::Arma(a) => {
                let mut f = SpecFile {
                    model: "arma".into(),
                    p: Some(a.phi.len()),
                    q: Some(a.theta.len()),
                    phi: a.phi.clone(),
                    theta: a.theta.clone(),
                    ..Default::default()
                };
                match &a.innovation {
                    ArmaInnovation::Iid(d) => f.innovation = Some(*d),
                    ArmaInnovation::Garch(g) => f.garch = Some(Box::new(garch_to_file(g))),
                }
                f
            }
        }
    }
}

impl TryFrom<SpecFile> for ProcessSpec {
    type Error = Error;

    fn try_from(f: SpecFile) -> Result<Self> {
        match f.model.as_str() {
            "iid" => {
                let d = f.innovation.unwrap_or_default();
                d.validate()?;
                Ok(ProcessSpec::Iid(d))
            }
            "constant" => Ok(ProcessSpec::Constant(
                f.value.ok_or_else(|| Error::Parse("constant model needs 'value'".into()))?,
            )),
            "arma" => {
                if f.garch.is_some() && f.innovation.is_some() {
                    return Err(Error::Parse(
                        "give either 'innovation' or 'garch' for an ARMA model, not both".into(),
                    ));
                }
                if let Some(p) = f.p {
                    if p != f.phi.len() {
                        return Err(Error::Parse(format!("p = {p} but {} phi coefficients", f.phi.len())));
                    }
                }
                if let Some(q) = f.q {
                    if q != f.theta.len() {
                        return Err(Error::Parse(format!("q = {q} but {} theta coefficients", f.theta.len())));
                    }
                }
                let innovation = match f.garch {
                    Some(g) => {
                        let model = GarchModel::from_name(&g.model)
                            .ok_or_else(|| Error::Parse(format!("unknown model '{}'", g.model)))?;
                        ArmaInnovation::Garch(Box::new(garch_from_file(*g, model)?))
                    }
                    None => ArmaInnovation::Iid(f.innovation.unwrap_or_default()),
                };
                let a = ArmaSpec { phi: f.phi, theta: f.theta, innovation };
                if let ArmaInnovation::Iid(d) = &a.innovation {
                    d.validate()?;
                }
                Ok(ProcessSpec::Arma(a))
            }
            name => {
                let model = GarchModel::from_name(name)
                    .ok_or_else(|| Error::Parse(format!("unknown model '{name}'")))?;
                Ok(ProcessSpec::Garch(garch_from_file(f, model)?))
            }
        }
    }
}

impl ProcessSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<SpecFile>(s)
            .map_err(Error::from)
            .and_then(ProcessSpec::try_from)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serialises")
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    /// Law of the iid shocks driving the process.
    pub fn innovation(&self) -> InnovationDist {
        match self {
            ProcessSpec::Iid(d) => *d,
            ProcessSpec::Garch(g) => g.innovation,
            ProcessSpec::Arma(a) => a.base_innovation(),
            ProcessSpec::Constant(_) => InnovationDist::StandardNormal,
        }
    }

    pub fn default_burn_in(&self) -> usize {
        let lags = match self {
            ProcessSpec::Iid(_) | ProcessSpec::Constant(_) => return 0,
            ProcessSpec::Garch(g) => g.p() + g.q(),
            ProcessSpec::Arma(a) => {
                let inner = match &a.innovation {
                    ArmaInnovation::Garch(g) => g.p() + g.q(),
                    ArmaInnovation::Iid(_) => 0,
                };
                a.phi.len() + a.theta.len() + inner
            }
        };
        1000usize.max(20 * lags)
    }

    pub fn compile(&self) -> Result<Process> {
        let kind = match self {
            ProcessSpec::Iid(d) => {
                d.validate()?;
                Kind::Iid
            }
            ProcessSpec::Constant(v) => {
                if !v.is_finite() {
                    return Err(Error::Parameter("constant value must be finite".into()));
                }
                Kind::Constant(*v)
            }
            ProcessSpec::Garch(g) => Kind::Garch(g.compile()?),
            ProcessSpec::Arma(a) => {
                a.validate()?;
                let garch = match &a.innovation {
                    ArmaInnovation::Garch(g) => Some(g.compile()?),
                    ArmaInnovation::Iid(_) => None,
                };
                Kind::Arma { arma: a.clone(), garch }
            }
        };
        let innovation = self.innovation();
        Ok(Process {
            spec: self.clone(),
            fingerprint: self.fingerprint(),
            sampler: innovation.sampler()?,
            kind,
        })
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Iid,
    Constant(f64),
    Garch(CompiledGarch),
    Arma { arma: ArmaSpec, garch: Option<CompiledGarch> },
}

/// A compiled, ready-to-simulate process. The output is a deterministic
/// function of the iid shock sequence.
#[derive(Debug, Clone)]
pub struct Process {
    spec: ProcessSpec,
    fingerprint: String,
    sampler: InnovationSampler,
    kind: Kind,
}

impl Process {
    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, Kind::Constant(_))
    }

    pub fn sampler(&self) -> &InnovationSampler {
        &self.sampler
    }

    pub fn default_burn_in(&self) -> usize {
        self.spec.default_burn_in()
    }

    pub fn draw_into(&self, rng: &mut StreamRng, len: usize, buf: &mut Vec<f64>) {
        buf.clear();
        if self.is_constant() {
            buf.resize(len, 0.0);
            return;
        }
        buf.extend((0..len).map(|_| self.sampler.sample(rng)));
    }

    /// Maps shocks to process values. `scratch` is reused between calls.
    pub fn filter_into(&self, eps: &[f64], scratch: &mut Vec<f64>, out: &mut Vec<f64>) -> Result<()> {
        match &self.kind {
            Kind::Iid => {
                out.clear();
                out.extend_from_slice(eps);
            }
            Kind::Constant(v) => {
                out.clear();
                out.resize(eps.len(), *v);
            }
            Kind::Garch(g) => g.filter_into(eps, out)?,
            Kind::Arma { arma, garch: None } => arma.filter_into(eps, out),
            Kind::Arma { arma, garch: Some(g) } => {
                g.filter_into(eps, scratch)?;
                arma.filter_into(scratch, out);
            }
        }
        Ok(())
    }

    pub fn filter(&self, eps: &[f64]) -> Result<Vec<f64>> {
        let mut scratch = Vec::new();
        let mut out = Vec::new();
        self.filter_into(eps, &mut scratch, &mut out)?;
        Ok(out)
    }

    /// Decomposition `X_t = m_t + s_t * eps_t` with `(m_t, s_t)` determined by
    /// earlier shocks. Returns `(x, m, s)`.
    pub fn conditional_parts(&self, eps: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let n = eps.len();
        match &self.kind {
            Kind::Constant(_) => Err(Error::Singular(
                "a constant process has no conditional density".into(),
            )),
            Kind::Iid => Ok((eps.to_vec(), vec![0.0; n], vec![1.0; n])),
            Kind::Garch(g) => {
                let mut s = Vec::new();
                g.sigma_into(eps, &mut s)?;
                let x = s.iter().zip(eps).map(|(a, b)| a * b).collect();
                Ok((x, vec![0.0; n], s))
            }
            Kind::Arma { arma, garch } => {
                let (e, s) = match garch {
                    Some(g) => {
                        let mut s = Vec::new();
                        g.sigma_into(eps, &mut s)?;
                        (s.iter().zip(eps).map(|(a, b)| a * b).collect::<Vec<_>>(), s)
                    }
                    None => (eps.to_vec(), vec![1.0; n]),
                };
                let mut x = Vec::new();
                arma.filter_into(&e, &mut x);
                let m = x.iter().zip(&e).map(|(a, b)| a - b).collect();
                Ok((x, m, s))
            }
        }
    }

    /// `(lambda0, sum E[c_j])` of the volatility recursion, if any.
    pub fn garch_state(&self) -> Option<(Lambda, f64, f64)> {
        match &self.kind {
            Kind::Garch(g) => Some((g.lambda, g.lambda0, g.mean_c_sum)),
            _ => None,
        }
    }

    /// Values after burn-in, drawn from `rng`, written into `out`.
    pub fn simulate_with(
        &self,
        rng: &mut StreamRng,
        n: usize,
        burn_in: usize,
        work: &mut Workspace,
        out: &mut Vec<f64>,
    ) -> Result<()> {
        self.draw_into(rng, n + burn_in, &mut work.eps);
        self.filter_into(&work.eps, &mut work.scratch, &mut work.full)?;
        out.clear();
        out.extend_from_slice(&work.full[burn_in..]);
        Ok(())
    }

    pub fn simulate(&self, n: usize, burn_in: usize, seed: u64, stream: u64) -> Result<Path> {
        if n == 0 {
            return Err(Error::Parameter("path length n must be at least 1".into()));
        }
        let mut rng = stream_rng(seed, stream);
        let mut values = Vec::new();
        self.simulate_with(&mut rng, n, burn_in, &mut Workspace::default(), &mut values)?;
        Ok(Path {
            values,
            spec_fingerprint: self.fingerprint.clone(),
            seed,
            stream,
            burn_in,
        })
    }
}

/// Reusable buffers for repeated simulation.
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    eps: Vec<f64>,
    scratch: Vec<f64>,
    full: Vec<f64>,
}
