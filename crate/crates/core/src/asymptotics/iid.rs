//! Closed-form covariances for iid samples, with every expectation computed
//! by quadrature against the innovation law.

use serde::{Deserialize, Serialize};

use super::{Gamma2, LrcMethod, TrivariateLRC};
use crate::error::{Error, Result};
use crate::process_sim::InnovationDist;
use crate::quadrature::expectation;

/// Marginal quantities of `X` entering the iid covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalMoments {
    pub p: f64,
    pub r: u32,
    pub q: f64,
    pub f_at_q: f64,
    pub mu: f64,
    pub var: f64,
    /// `E|X - mu|^r`
    pub abs_r: f64,
    /// `E|X - mu|^(2r)`
    pub abs_2r: f64,
    /// `E[(X - mu) |X - mu|^r]`
    pub cross_uv: f64,
    /// `E[(X - mu) 1{X <= q}]`
    pub u_below: f64,
    /// `E[|X - mu|^r 1{X <= q}]`
    pub v_below: f64,
    pub a_r: f64,
}

pub(crate) fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `r E[(X - mu)^(r-1) sgn(X - mu)^r]` written as a function of `d = X - mu`.
pub(crate) fn a_r_integrand(d: f64, r: u32) -> f64 {
    let s = sgn(d);
    let sr = if r % 2 == 0 { s * s } else { s };
    r as f64 * d.powi(r as i32 - 1) * sr
}

pub fn marginal_moments(dist: &InnovationDist, p: f64, r: u32) -> Result<MarginalMoments> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Parameter(format!("p = {p} must lie in (0, 1)")));
    }
    if r == 0 {
        return Err(Error::Parameter("moment order r must be at least 1".into()));
    }
    dist.validate()?;
    if dist.is_discrete() {
        return Err(Error::Singular(format!("{dist:?} has no density at its quantiles")));
    }
    let q = dist.quantile(p);
    let f = dist.pdf(q);
    if !(f > 0.0) {
        return Err(Error::Singular(format!("density at the {p}-quantile is {f}")));
    }
    if 2.0 * r as f64 >= dist.moment_order_limit() {
        return Err(Error::Unsupported(format!(
            "E|X|^{} is infinite under {dist:?}",
            2 * r
        )));
    }
    let mu = expectation(dist, |x| x, &[])?;
    let brk = [q, mu];
    let e = |g: &dyn Fn(f64) -> f64| expectation(dist, g, &brk);
    let ri = r as i32;
    let var = e(&|x| (x - mu) * (x - mu))?;
    let abs_r = e(&|x| (x - mu).abs().powi(ri))?;
    let abs_2r = e(&|x| (x - mu).abs().powi(2 * ri))?;
    let cross_uv = e(&|x| (x - mu) * (x - mu).abs().powi(ri))?;
    let u_below = e(&|x| if x <= q { x - mu } else { 0.0 })?;
    let v_below = e(&|x| if x <= q { (x - mu).abs().powi(ri) } else { 0.0 })?;
    let a_r = if r == 1 {
        e(&|x| sgn(x - mu))?
    } else {
        e(&|x| a_r_integrand(x - mu, r))?
    };
    Ok(MarginalMoments {
        p,
        r,
        q,
        f_at_q: f,
        mu,
        var,
        abs_r,
        abs_2r,
        cross_uv,
        u_below,
        v_below,
        a_r,
    })
}

impl MarginalMoments {
    /// Lag-0 covariance of `(U, V, W)`, which is the full long-run covariance
    /// for independent data.
    pub fn sigma(&self) -> [[f64; 3]; 3] {
        let f = self.f_at_q;
        let uu = self.var;
        let vv = self.abs_2r - self.abs_r * self.abs_r;
        let ww = self.p * (1.0 - self.p) / (f * f);
        let uv = self.cross_uv;
        let uw = -self.u_below / f;
        let vw = -(self.v_below - self.p * self.abs_r) / f;
        [[uu, uv, uw], [uv, vv, vw], [uw, vw, ww]]
    }

    pub fn gamma(&self) -> Gamma2<f64> {
        let f = self.f_at_q;
        let a = self.a_r;
        let cov_ind_x = self.u_below;
        let cov_ind_v = self.v_below - self.p * self.abs_r;
        Gamma2 {
            g11: self.p * (1.0 - self.p) / (f * f),
            g22: a * a * self.var + (self.abs_2r - self.abs_r * self.abs_r) - 2.0 * a * self.cross_uv,
            g12: (a * cov_ind_x - cov_ind_v) / f,
            a_r: a,
        }
    }
}

pub fn iid_trivariate(dist: &InnovationDist, p: f64, r: u32) -> Result<TrivariateLRC> {
    let m = marginal_moments(dist, p, r)?;
    Ok(TrivariateLRC::assemble(
        m.sigma(),
        0,
        LrcMethod::IidClosedForm,
        m.f_at_q,
        m.q,
        p,
        r,
    ))
}

pub fn iid_gamma(dist: &InnovationDist, p: f64, r: u32) -> Result<Gamma2<f64>> {
    Ok(marginal_moments(dist, p, r)?.gamma())
}
