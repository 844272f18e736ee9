use serde::{Deserialize, Serialize};

use super::innovation::InnovationDist;
use crate::error::{Error, Result};
use crate::quadrature;

/// One additive piece of an innovation function `g_i` or `c_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "term", rename_all = "snake_case")]
pub enum Term {
    Const { value: f64 },
    /// `coef * (|e| - gamma * e)^power`
    AsymPower { coef: f64, gamma: f64, power: f64 },
    /// `coef * max(0, -e)^2`
    NegPartSq { coef: f64 },
    /// `coef * (e + shift)^2`
    ShiftedSq { coef: f64, shift: f64 },
    /// `coef * e`
    Linear { coef: f64 },
    /// `coef * (|e| - E|e|)`; the mean is filled in at compile time.
    CenteredAbs {
        coef: f64,
        #[serde(default)]
        mean_abs: f64,
    },
    /// `coef * log(e^2)`
    LogSq { coef: f64 },
}

impl Term {
    #[inline]
    pub fn eval(&self, e: f64) -> f64 {
        match *self {
            Term::Const { value } => value,
            Term::AsymPower { coef, gamma, power } => {
                let d = e.abs() - gamma * e;
                let v = if power == 2.0 {
                    d * d
                } else if power == 1.0 {
                    d
                } else {
                    d.powf(power)
                };
                coef * v
            }
            Term::NegPartSq { coef } => {
                let m = (-e).max(0.0);
                coef * (m * m)
            }
            Term::ShiftedSq { coef, shift } => {
                let d = e + shift;
                coef * (d * d)
            }
            Term::Linear { coef } => coef * e,
            Term::CenteredAbs { coef, mean_abs } => coef * (e.abs() - mean_abs),
            Term::LogSq { coef } => coef * (e * e).ln(),
        }
    }

    fn is_constant(&self) -> bool {
        match *self {
            Term::Const { .. } => true,
            Term::AsymPower { coef, .. }
            | Term::NegPartSq { coef }
            | Term::ShiftedSq { coef, .. }
            | Term::Linear { coef }
            | Term::CenteredAbs { coef, .. }
            | Term::LogSq { coef } => coef == 0.0,
        }
    }

    fn breakpoint(&self) -> Option<f64> {
        match *self {
            Term::ShiftedSq { shift, .. } => Some(-shift),
            _ => None,
        }
    }

    /// Infimum over the support `[-b, b]` (`b` possibly infinite), assuming
    /// the support contains a neighbourhood of every point in it.
    fn infimum(&self, b: f64, mean_abs_dist: f64) -> f64 {
        let bounded = b.is_finite();
        match *self {
            Term::Const { value } => value,
            Term::AsymPower { coef, gamma, power } => {
                if coef >= 0.0 {
                    0.0
                } else if bounded {
                    coef * (b * (1.0 + gamma.abs())).powf(power)
                } else {
                    f64::NEG_INFINITY
                }
            }
            Term::NegPartSq { coef } => {
                if coef >= 0.0 {
                    0.0
                } else if bounded {
                    coef * b * b
                } else {
                    f64::NEG_INFINITY
                }
            }
            Term::ShiftedSq { coef, shift } => {
                if coef >= 0.0 {
                    let gap = (shift.abs() - b).max(0.0);
                    coef * gap * gap
                } else if bounded {
                    let far = b + shift.abs();
                    coef * far * far
                } else {
                    f64::NEG_INFINITY
                }
            }
            Term::Linear { coef } => {
                if coef == 0.0 {
                    0.0
                } else if bounded {
                    -coef.abs() * b
                } else {
                    f64::NEG_INFINITY
                }
            }
            Term::CenteredAbs { coef, .. } => {
                if coef >= 0.0 {
                    -coef * mean_abs_dist
                } else if bounded {
                    coef * (b - mean_abs_dist)
                } else {
                    f64::NEG_INFINITY
                }
            }
            Term::LogSq { coef } => {
                if coef == 0.0 {
                    0.0
                } else if coef < 0.0 && bounded {
                    coef * (b * b).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }
}

/// A function of a single innovation, represented as a sum of [`Term`]s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InnovationFn {
    pub terms: Vec<Term>,
}

impl InnovationFn {
    pub fn constant(v: f64) -> Self {
        InnovationFn { terms: vec![Term::Const { value: v }] }
    }

    #[inline]
    pub fn eval(&self, e: f64) -> f64 {
        let mut acc = 0.0;
        for (k, t) in self.terms.iter().enumerate() {
            let v = t.eval(e);
            acc = if k == 0 { v } else { acc + v };
        }
        acc
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(Term::is_constant)
    }

    pub fn constant_value(&self) -> Option<f64> {
        self.is_constant().then(|| self.eval(0.0))
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.terms.iter().filter_map(Term::breakpoint).collect()
    }

    /// Lower bound for `inf f(e)` over the support of `dist`; exact for the
    /// discrete law and for single-term functions.
    pub fn infimum(&self, dist: &InnovationDist) -> f64 {
        if dist.is_discrete() {
            return self.eval(-1.0).min(self.eval(1.0));
        }
        let (_, b) = dist.support();
        let m = dist.mean_abs();
        self.terms.iter().map(|t| t.infimum(b, m)).sum()
    }

    pub fn mean(&self, dist: &InnovationDist) -> Result<f64> {
        if let Some(c) = self.constant_value() {
            return Ok(c);
        }
        quadrature::expectation(dist, |e| self.eval(e), &self.breakpoints())
    }

    /// `E|f(eps)|^s`.
    pub fn abs_moment(&self, dist: &InnovationDist, s: f64) -> Result<f64> {
        if let Some(c) = self.constant_value() {
            return Ok(c.abs().powf(s));
        }
        quadrature::moment_functional_with_breaks(dist, |e| self.eval(e), s, &self.breakpoints())
    }

    fn resolve_means(&mut self, dist: &InnovationDist) {
        for t in &mut self.terms {
            if let Term::CenteredAbs { mean_abs, .. } = t {
                *mean_abs = dist.mean_abs();
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GarchModel {
    Generic,
    Apgarch,
    Agarch,
    Gjr,
    Garch,
    Arch,
    Tgarch,
    Tsgarch,
    Pgarch,
    Vgarch,
    Ngarch,
    Mgarch,
    Egarch,
}

impl GarchModel {
    pub fn name(&self) -> &'static str {
        match self {
            GarchModel::Generic => "generic",
            GarchModel::Apgarch => "apgarch",
            GarchModel::Agarch => "agarch",
            GarchModel::Gjr => "gjr",
            GarchModel::Garch => "garch",
            GarchModel::Arch => "arch",
            GarchModel::Tgarch => "tgarch",
            GarchModel::Tsgarch => "tsgarch",
            GarchModel::Pgarch => "pgarch",
            GarchModel::Vgarch => "vgarch",
            GarchModel::Ngarch => "ngarch",
            GarchModel::Mgarch => "mgarch",
            GarchModel::Egarch => "egarch",
        }
    }

    pub fn from_name(s: &str) -> Option<GarchModel> {
        use GarchModel::*;
        [Generic, Apgarch, Agarch, Gjr, Garch, Arch, Tgarch, Tsgarch, Pgarch, Vgarch, Ngarch, Mgarch, Egarch]
            .into_iter()
            .find(|m| m.name() == s)
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self, GarchModel::Mgarch | GarchModel::Egarch)
    }

    /// The Λ exponent forced by the model, if any.
    fn fixed_delta(&self) -> Option<f64> {
        match self {
            GarchModel::Garch
            | GarchModel::Arch
            | GarchModel::Gjr
            | GarchModel::Agarch
            | GarchModel::Vgarch
            | GarchModel::Ngarch => Some(1.0),
            GarchModel::Tgarch | GarchModel::Tsgarch => Some(0.5),
            _ => None,
        }
    }
}

/// Transformation Λ applied to the conditional variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Lambda {
    /// `Λ(x) = x^delta`
    Power { delta: f64 },
    /// `Λ(x) = log x`
    Log,
}

impl Lambda {
    pub fn delta(&self) -> Option<f64> {
        match self {
            Lambda::Power { delta } => Some(*delta),
            Lambda::Log => None,
        }
    }

    #[inline]
    fn invert(&self, l: f64) -> f64 {
        match *self {
            Lambda::Power { delta } => {
                if delta == 1.0 {
                    l
                } else if delta == 0.5 {
                    l * l
                } else {
                    l.powf(1.0 / delta)
                }
            }
            Lambda::Log => l.exp(),
        }
    }
}

/// Augmented GARCH(p, q) specification.
///
/// For the named models `alpha`, `beta` and `gamma` carry the usual
/// coefficients (for `gjr` they are `alpha*` and `gamma*`). For `generic`,
/// `g` and `c` list the innovation functions directly.
#[derive(Debug, Clone, PartialEq)]
pub struct GarchSpec {
    pub model: GarchModel,
    pub lambda: Lambda,
    pub omega: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub g: Vec<InnovationFn>,
    pub c: Vec<InnovationFn>,
    pub innovation: InnovationDist,
}

impl GarchSpec {
    /// GARCH(p, q) with normal innovations.
    pub fn garch(omega: f64, alpha: &[f64], beta: &[f64]) -> Self {
        Self::named(GarchModel::Garch, omega, alpha, beta, &[])
    }

    pub fn named(model: GarchModel, omega: f64, alpha: &[f64], beta: &[f64], gamma: &[f64]) -> Self {
        let lambda = if model.is_exponential() {
            Lambda::Log
        } else {
            Lambda::Power { delta: model.fixed_delta().unwrap_or(1.0) }
        };
        GarchSpec {
            model,
            lambda,
            omega,
            alpha: alpha.to_vec(),
            beta: beta.to_vec(),
            gamma: gamma.to_vec(),
            g: Vec::new(),
            c: Vec::new(),
            innovation: InnovationDist::StandardNormal,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.lambda = Lambda::Power { delta };
        self
    }

    pub fn with_innovation(mut self, innovation: InnovationDist) -> Self {
        self.innovation = innovation;
        self
    }

    pub fn p(&self) -> usize {
        match self.model {
            GarchModel::Generic => self.g.len(),
            _ => self.alpha.len(),
        }
    }

    pub fn q(&self) -> usize {
        match self.model {
            GarchModel::Generic => self.c.len(),
            _ => self.beta.len(),
        }
    }

    fn gamma_at(&self, i: usize) -> f64 {
        self.gamma.get(i).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.innovation.validate()?;
        let perr = |m: String| Err(Error::Parameter(format!("{}: {m}", self.model.name())));
        match (self.model, self.lambda) {
            (GarchModel::Generic, _) => {}
            (m, Lambda::Log) if !m.is_exponential() => {
                return perr("log transformation is only available for mgarch, egarch and generic".into())
            }
            (m, Lambda::Power { .. }) if m.is_exponential() => {
                return perr("exponential models require the log transformation".into())
            }
            (m, Lambda::Power { delta }) => {
                if let Some(d) = m.fixed_delta() {
                    if delta != d {
                        return perr(format!("delta is fixed to {d} for this model, got {delta}"));
                    }
                }
            }
            _ => {}
        }
        if let Lambda::Power { delta } = self.lambda {
            if !(delta.is_finite() && delta > 0.0) {
                return perr(format!("delta must be positive, got {delta}"));
            }
        }
        if self.model == GarchModel::Generic {
            if self.g.is_empty() {
                return perr("generic model needs at least one g function".into());
            }
            for f in self.g.iter().chain(&self.c) {
                for t in &f.terms {
                    if let Term::AsymPower { gamma, power, .. } = t {
                        if gamma.abs() > 1.0 || !(*power > 0.0) {
                            return perr("asym_power needs |gamma| <= 1 and power > 0".into());
                        }
                    }
                }
            }
            if self.lambda == Lambda::Log && !self.c.iter().all(InnovationFn::is_constant) {
                return perr("log transformation requires constant c functions".into());
            }
            return Ok(());
        }
        if self.alpha.is_empty() {
            return perr("at least one alpha coefficient is required (p >= 1)".into());
        }
        if !self.omega.is_finite() || (!self.model.is_exponential() && self.omega <= 0.0) {
            return perr(format!("omega must be positive, got {}", self.omega));
        }
        if self.alpha.iter().chain(&self.beta).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return perr("alpha and beta coefficients must be finite and non-negative".into());
        }
        if self.gamma.len() > self.alpha.len().max(self.beta.len()) {
            return perr("more gamma coefficients than lags".into());
        }
        match self.model {
            GarchModel::Gjr => {
                if self.gamma.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
                    return perr("gamma* must be non-negative".into());
                }
            }
            GarchModel::Garch | GarchModel::Arch | GarchModel::Tsgarch | GarchModel::Pgarch => {
                if self.gamma.iter().any(|g| *g != 0.0) {
                    return perr("this model has no gamma coefficients".into());
                }
            }
            _ => {
                if self.gamma.iter().any(|g| !(g.abs() <= 1.0)) {
                    return perr("gamma coefficients must lie in [-1, 1]".into());
                }
            }
        }
        if self.model == GarchModel::Arch && !self.beta.is_empty() {
            return perr("arch has no beta coefficients".into());
        }
        Ok(())
    }

    /// Builds the `g_i` and `c_j` lists.
    pub fn functions(&self) -> Result<(Vec<InnovationFn>, Vec<InnovationFn>)> {
        self.validate()?;
        let p = self.alpha.len();
        let lags = p.max(self.beta.len());
        let beta_at = |j: usize| self.beta.get(j).copied().unwrap_or(0.0);
        let alpha_at = |j: usize| self.alpha.get(j).copied().unwrap_or(0.0);
        let const_g = || vec![InnovationFn::constant(self.omega / p as f64); p];
        let (mut g, mut c) = match self.model {
            GarchModel::Generic => (self.g.clone(), self.c.clone()),
            GarchModel::Apgarch
            | GarchModel::Agarch
            | GarchModel::Garch
            | GarchModel::Arch
            | GarchModel::Tgarch
            | GarchModel::Tsgarch
            | GarchModel::Pgarch => {
                let power = 2.0 * self.lambda.delta().expect("power model");
                let c = (0..lags)
                    .map(|j| {
                        let mut terms = Vec::new();
                        if self.model != GarchModel::Arch {
                            terms.push(Term::Const { value: beta_at(j) });
                        }
                        terms.push(Term::AsymPower { coef: alpha_at(j), gamma: self.gamma_at(j), power });
                        InnovationFn { terms }
                    })
                    .collect();
                (const_g(), c)
            }
            GarchModel::Gjr => {
                let c = (0..lags)
                    .map(|j| InnovationFn {
                        terms: vec![
                            Term::Const { value: beta_at(j) },
                            Term::AsymPower { coef: alpha_at(j), gamma: 0.0, power: 2.0 },
                            Term::NegPartSq { coef: self.gamma_at(j) },
                        ],
                    })
                    .collect();
                (const_g(), c)
            }
            GarchModel::Ngarch => {
                let c = (0..lags)
                    .map(|j| InnovationFn {
                        terms: vec![
                            Term::Const { value: beta_at(j) },
                            Term::ShiftedSq { coef: alpha_at(j), shift: self.gamma_at(j) },
                        ],
                    })
                    .collect();
                (const_g(), c)
            }
            GarchModel::Vgarch => {
                let g = (0..p)
                    .map(|i| InnovationFn {
                        terms: vec![
                            Term::Const { value: self.omega / p as f64 },
                            Term::ShiftedSq { coef: self.alpha[i], shift: self.gamma_at(i) },
                        ],
                    })
                    .collect();
                let c = self.beta.iter().map(|b| InnovationFn::constant(*b)).collect();
                (g, c)
            }
            GarchModel::Mgarch => {
                let g = (0..p)
                    .map(|i| InnovationFn {
                        terms: vec![
                            Term::Const { value: self.omega / p as f64 },
                            Term::LogSq { coef: self.alpha[i] },
                        ],
                    })
                    .collect();
                let c = self.beta.iter().map(|b| InnovationFn::constant(*b)).collect();
                (g, c)
            }
            GarchModel::Egarch => {
                let g = (0..p)
                    .map(|i| InnovationFn {
                        terms: vec![
                            Term::Const { value: self.omega / p as f64 },
                            Term::CenteredAbs { coef: self.alpha[i], mean_abs: 0.0 },
                            Term::Linear { coef: self.gamma_at(i) },
                        ],
                    })
                    .collect();
                let c = self.beta.iter().map(|b| InnovationFn::constant(*b)).collect();
                (g, c)
            }
        };
        for f in g.iter_mut().chain(c.iter_mut()) {
            f.resolve_means(&self.innovation);
        }
        Ok((g, c))
    }

    pub fn compile(&self) -> Result<CompiledGarch> {
        let (g, c) = self.functions()?;
        let eg: f64 = g.iter().map(|f| f.mean(&self.innovation).unwrap_or(f64::INFINITY)).sum();
        let ec: f64 = c.iter().map(|f| f.mean(&self.innovation).unwrap_or(f64::INFINITY)).sum();
        let lambda0 = if ec < 1.0 && eg.is_finite() { eg / (1.0 - ec) } else { eg };
        if !lambda0.is_finite() {
            return Err(Error::Parameter("E[g] is not finite; cannot initialise the recursion".into()));
        }
        if let Lambda::Power { .. } = self.lambda {
            if lambda0 <= 0.0 {
                return Err(Error::Parameter(format!(
                    "initial state {lambda0} is not positive under a power transformation"
                )));
            }
        }
        Ok(CompiledGarch {
            lambda: self.lambda,
            g,
            c,
            lambda0,
            mean_c_sum: ec,
        })
    }
}

/// Ready-to-run volatility recursion.
#[derive(Debug, Clone)]
pub struct CompiledGarch {
    pub lambda: Lambda,
    pub g: Vec<InnovationFn>,
    pub c: Vec<InnovationFn>,
    /// Λ(σ²) used for the presample.
    pub lambda0: f64,
    /// `sum_j E[c_j(eps)]`.
    pub mean_c_sum: f64,
}

impl CompiledGarch {
    pub fn max_lag(&self) -> usize {
        self.g.len().max(self.c.len())
    }

    /// Maps innovations to `X_t = sigma_t * eps_t`, writing into `out`.
    pub fn filter_into(&self, eps: &[f64], out: &mut Vec<f64>) -> Result<()> {
        self.sigma_into(eps, out)?;
        for (x, e) in out.iter_mut().zip(eps) {
            *x *= e;
        }
        Ok(())
    }

    /// Conditional standard deviations `sigma_t`.
    pub fn sigma_into(&self, eps: &[f64], out: &mut Vec<f64>) -> Result<()> {
        out.clear();
        out.reserve(eps.len());
        let lag = self.max_lag();
        let mut hist = vec![self.lambda0; lag.max(1)];
        let sigma0 = self.lambda.invert(self.lambda0).sqrt();
        for t in 0..eps.len() {
            let (l, s) = if t < lag {
                (self.lambda0, sigma0)
            } else {
                let mut l = 0.0;
                for (i, gi) in self.g.iter().enumerate() {
                    l += gi.eval(eps[t - 1 - i]);
                }
                for (j, cj) in self.c.iter().enumerate() {
                    l += cj.eval(eps[t - 1 - j]) * hist[(t - 1 - j) % lag];
                }
                if !l.is_finite() {
                    return Err(Error::Divergence { t: t + 1, detail: format!("state {l}") });
                }
                if matches!(self.lambda, Lambda::Power { .. }) && l <= 0.0 {
                    return Err(Error::Divergence {
                        t: t + 1,
                        detail: format!("non-positive state {l} under a power transformation"),
                    });
                }
                let s2 = self.lambda.invert(l);
                if !s2.is_finite() {
                    return Err(Error::Divergence { t: t + 1, detail: format!("variance {s2}") });
                }
                (l, s2.sqrt())
            };
            if lag > 0 {
                hist[t % lag] = l;
            }
            out.push(s);
        }
        Ok(())
    }
}
