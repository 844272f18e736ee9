use nalgebra::{Complex, DMatrix};

use super::garch::GarchSpec;
use super::innovation::InnovationDist;
use crate::error::{Error, Result};

/// Driving noise of an ARMA recursion.
#[derive(Debug, Clone, PartialEq)]
pub enum ArmaInnovation {
    Iid(InnovationDist),
    /// GARCH errors, giving an ARMA-GARCH process.
    Garch(Box<GarchSpec>),
}

/// `Phi(B) X_t = Theta(B) eps_t` with `Phi(z) = 1 + phi_1 z + ... + phi_p z^p`
/// and `Theta(z) = 1 + theta_1 z + ... + theta_q z^q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmaSpec {
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub innovation: ArmaInnovation,
}

/// Tolerance on root distances for the common-root check.
pub const COMMON_ROOT_TOL: f64 = 1e-8;
/// Margin applied to the unit circle in the causality check.
pub const CAUSALITY_MARGIN: f64 = 1e-10;

impl ArmaSpec {
    pub fn new(phi: &[f64], theta: &[f64]) -> Self {
        ArmaSpec {
            phi: phi.to_vec(),
            theta: theta.to_vec(),
            innovation: ArmaInnovation::Iid(InnovationDist::StandardNormal),
        }
    }

    pub fn ar1(phi1: f64) -> Self {
        Self::new(&[phi1], &[])
    }

    pub fn with_garch(mut self, garch: GarchSpec) -> Self {
        self.innovation = ArmaInnovation::Garch(Box::new(garch));
        self
    }

    pub fn with_innovation(mut self, dist: InnovationDist) -> Self {
        self.innovation = ArmaInnovation::Iid(dist);
        self
    }

    /// Law of the iid shocks at the bottom of the recursion.
    pub fn base_innovation(&self) -> InnovationDist {
        match &self.innovation {
            ArmaInnovation::Iid(d) => *d,
            ArmaInnovation::Garch(g) => g.innovation,
        }
    }

    pub fn phi_roots(&self) -> Result<Vec<Complex<f64>>> {
        polynomial_roots(&self.phi)
    }

    pub fn theta_roots(&self) -> Result<Vec<Complex<f64>>> {
        polynomial_roots(&self.theta)
    }

    /// Smallest modulus among the roots of `Phi`; `inf` for a pure MA.
    pub fn min_root_modulus(&self) -> Result<f64> {
        Ok(self
            .phi_roots()?
            .iter()
            .map(|z| z.norm())
            .fold(f64::INFINITY, f64::min))
    }

    pub fn validate(&self) -> Result<()> {
        if self.phi.iter().chain(&self.theta).any(|v| !v.is_finite()) {
            return Err(Error::Parameter("ARMA coefficients must be finite".into()));
        }
        match &self.innovation {
            ArmaInnovation::Iid(d) => d.validate()?,
            ArmaInnovation::Garch(g) => {
                if g.model != super::garch::GarchModel::Garch {
                    return Err(Error::Parameter(
                        "ARMA-GARCH supports model = garch for the error process".into(),
                    ));
                }
                g.validate()?;
            }
        }
        let modulus = self.min_root_modulus()?;
        if !(modulus > 1.0 + CAUSALITY_MARGIN) {
            return Err(Error::NonCausal { modulus });
        }
        let pr = self.phi_roots()?;
        let tr = self.theta_roots()?;
        for a in &pr {
            for b in &tr {
                if (a - b).norm() < COMMON_ROOT_TOL {
                    return Err(Error::Parameter(format!(
                        "Phi and Theta share the root {:.6}{:+.6}i",
                        a.re, a.im
                    )));
                }
            }
        }
        Ok(())
    }

    /// `psi_0 ..= psi_k` of the causal expansion `X_t = sum psi_j eps_{t-j}`.
    pub fn psi(&self, k: usize) -> Result<Vec<f64>> {
        let modulus = self.min_root_modulus()?;
        if !(modulus > 1.0 + CAUSALITY_MARGIN) {
            return Err(Error::NonCausal { modulus });
        }
        Ok(psi_weights(&self.phi, &self.theta, k))
    }

    /// Runs the recursion with zero presample values.
    pub fn filter_into(&self, eps: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.reserve(eps.len());
        for t in 0..eps.len() {
            let mut x = eps[t];
            for (j, th) in self.theta.iter().enumerate() {
                if t > j {
                    x += th * eps[t - 1 - j];
                }
            }
            for (i, ph) in self.phi.iter().enumerate() {
                if t > i {
                    x -= ph * out[t - 1 - i];
                }
            }
            out.push(x);
        }
    }
}

pub(crate) fn psi_weights(phi: &[f64], theta: &[f64], k: usize) -> Vec<f64> {
    let mut psi = Vec::with_capacity(k + 1);
    psi.push(1.0);
    for j in 1..=k {
        let mut v = theta.get(j - 1).copied().unwrap_or(0.0);
        for (i, ph) in phi.iter().enumerate().take(j) {
            v -= ph * psi[j - 1 - i];
        }
        psi.push(v);
    }
    psi
}

/// Roots of `1 + a_1 z + ... + a_m z^m` (trailing zero coefficients dropped).
pub fn polynomial_roots(coefs: &[f64]) -> Result<Vec<Complex<f64>>> {
    let m = match coefs.iter().rposition(|c| *c != 0.0) {
        Some(i) => i + 1,
        None => return Ok(Vec::new()),
    };
    let lead = coefs[m - 1];
    // monic form: z^m + b_{m-1} z^{m-1} + ... + b_0, with b_k = a_k / a_m and a_0 = 1
    let b = |k: usize| if k == 0 { 1.0 / lead } else { coefs[k - 1] / lead };
    let mut comp = DMatrix::<f64>::zeros(m, m);
    for i in 1..m {
        comp[(i, i - 1)] = 1.0;
    }
    for k in 0..m {
        comp[(k, m - 1)] = -b(k);
    }
    let schur = comp
        .try_schur(1e-14, 10_000)
        .ok_or_else(|| Error::RootFinding(format!("Schur decomposition did not converge for degree {m}")))?;
    let eig = schur.complex_eigenvalues();
    let eval = |z: Complex<f64>| {
        let mut p = Complex::new(0.0, 0.0);
        let mut dp = Complex::new(0.0, 0.0);
        for k in (0..=m).rev() {
            let a = if k == 0 { 1.0 } else { coefs[k - 1] };
            dp = dp * z + p;
            p = p * z + a;
        }
        (p, dp)
    };
    let mut roots = Vec::with_capacity(m);
    for z0 in eig.iter() {
        let mut z = *z0;
        for _ in 0..8 {
            let (p, dp) = eval(z);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            let cand = z - step;
            if !(cand.re.is_finite() && cand.im.is_finite()) || eval(cand).0.norm() >= p.norm() {
                break;
            }
            z = cand;
        }
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::RootFinding("non-finite root".into()));
        }
        roots.push(z);
    }
    Ok(roots)
}
