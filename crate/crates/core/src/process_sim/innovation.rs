use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal, StudentsT};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Law of the standardized innovations (mean 0, variance 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InnovationDist {
    StandardNormal,
    /// Student-t with `dof` degrees of freedom, rescaled to unit variance.
    StudentT { dof: f64 },
    Rademacher,
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    Uniform,
}

impl Default for InnovationDist {
    fn default() -> Self {
        InnovationDist::StandardNormal
    }
}

impl InnovationDist {
    pub fn validate(&self) -> Result<()> {
        if let InnovationDist::StudentT { dof } = self {
            if !(dof.is_finite() && *dof > 2.0) {
                return Err(Error::Parameter(format!(
                    "student_t needs dof > 2 for unit variance, got {dof}"
                )));
            }
        }
        Ok(())
    }

    fn t_scale(dof: f64) -> f64 {
        ((dof - 2.0) / dof).sqrt()
    }

    /// Highest order for which absolute moments exist (`inf` when all do).
    pub fn moment_order_limit(&self) -> f64 {
        match self {
            InnovationDist::StudentT { dof } => *dof,
            _ => f64::INFINITY,
        }
    }

    /// Heavy-tailed laws without a finite fourth moment.
    pub fn lacks_fourth_moment(&self) -> bool {
        self.moment_order_limit() <= 4.0
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, InnovationDist::Rademacher)
    }

    pub fn is_symmetric(&self) -> bool {
        true
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            InnovationDist::Uniform => (-SQRT3, SQRT3),
            InnovationDist::Rademacher => (-1.0, 1.0),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn sampler(&self) -> Result<InnovationSampler> {
        self.validate()?;
        Ok(match self {
            InnovationDist::StandardNormal => InnovationSampler::Normal,
            InnovationDist::StudentT { dof } => InnovationSampler::T {
                dist: StudentT::new(*dof)
                    .map_err(|e| Error::Parameter(format!("student_t: {e}")))?,
                scale: Self::t_scale(*dof),
            },
            InnovationDist::Rademacher => InnovationSampler::Rademacher,
            InnovationDist::Uniform => InnovationSampler::Uniform,
        })
    }

    /// Density (zero for the discrete law).
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            InnovationDist::StandardNormal => {
                (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
            }
            InnovationDist::StudentT { dof } => {
                let s = Self::t_scale(*dof);
                students_t(*dof).pdf(x / s) / s
            }
            InnovationDist::Uniform => {
                if x.abs() <= SQRT3 {
                    1.0 / (2.0 * SQRT3)
                } else {
                    0.0
                }
            }
            InnovationDist::Rademacher => 0.0,
        }
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        match self {
            InnovationDist::StandardNormal => {
                -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            InnovationDist::StudentT { dof } => {
                let s = Self::t_scale(*dof);
                students_t(*dof).ln_pdf(x / s) - s.ln()
            }
            _ => self.pdf(x).ln(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            InnovationDist::StandardNormal => std_normal().cdf(x),
            InnovationDist::StudentT { dof } => students_t(*dof).cdf(x / Self::t_scale(*dof)),
            InnovationDist::Uniform => ((x + SQRT3) / (2.0 * SQRT3)).clamp(0.0, 1.0),
            InnovationDist::Rademacher => {
                if x < -1.0 {
                    0.0
                } else if x < 1.0 {
                    0.5
                } else {
                    1.0
                }
            }
        }
    }

    /// Left-continuous inverse of the CDF.
    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            InnovationDist::StandardNormal => std_normal().inverse_cdf(p),
            InnovationDist::StudentT { dof } => {
                students_t(*dof).inverse_cdf(p) * Self::t_scale(*dof)
            }
            InnovationDist::Uniform => -SQRT3 + 2.0 * SQRT3 * p,
            InnovationDist::Rademacher => {
                if p <= 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
        }
    }

    /// `E|eps|^k` in closed form; `inf` when the moment does not exist.
    pub fn abs_moment(&self, k: f64) -> f64 {
        match self {
            InnovationDist::StandardNormal => {
                (0.5 * k * 2f64.ln() + ln_gamma(0.5 * (k + 1.0))).exp()
                    / std::f64::consts::PI.sqrt()
            }
            InnovationDist::StudentT { dof } => {
                if k >= *dof {
                    return f64::INFINITY;
                }
                let s = Self::t_scale(*dof);
                let log_t = 0.5 * k * dof.ln() + ln_gamma(0.5 * (k + 1.0))
                    + ln_gamma(0.5 * (dof - k))
                    - 0.5 * std::f64::consts::PI.ln()
                    - ln_gamma(0.5 * dof);
                (k * s.ln() + log_t).exp()
            }
            InnovationDist::Uniform => 3f64.powf(0.5 * k) / (k + 1.0),
            InnovationDist::Rademacher => 1.0,
        }
    }

    /// `E|eps|`.
    pub fn mean_abs(&self) -> f64 {
        match self {
            InnovationDist::StandardNormal => (2.0 / std::f64::consts::PI).sqrt(),
            _ => self.abs_moment(1.0),
        }
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid standard normal")
}

fn students_t(dof: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, dof).expect("dof validated before use")
}

/// Prepared sampler for an [`InnovationDist`].
#[derive(Debug, Clone)]
pub enum InnovationSampler {
    Normal,
    T { dist: StudentT<f64>, scale: f64 },
    Rademacher,
    Uniform,
}

impl Distribution<f64> for InnovationSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            InnovationSampler::Normal => StandardNormal.sample(rng),
            InnovationSampler::T { dist, scale } => dist.sample(rng) * scale,
            InnovationSampler::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            InnovationSampler::Uniform => SQRT3 * (2.0 * rng.random::<f64>() - 1.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::expectation;
    use approx::assert_relative_eq;

    fn laws() -> Vec<InnovationDist> {
        vec![
            InnovationDist::StandardNormal,
            InnovationDist::StudentT { dof: 7.0 },
            InnovationDist::Rademacher,
            InnovationDist::Uniform,
        ]
    }

    #[test]
    fn unit_variance_and_zero_mean() {
        for d in laws() {
            let m = expectation(&d, |x| x, &[]).unwrap();
            let v = expectation(&d, |x| x * x, &[]).unwrap();
            assert!(m.abs() < 1e-12, "{d:?} mean {m}");
            assert!((v - 1.0).abs() < 1e-12, "{d:?} variance {v}");
        }
    }

    #[test]
    fn closed_form_abs_moments_match_quadrature() {
        for d in laws() {
            for k in [1.0, 2.0, 3.0, 4.0, 2.5] {
                let q = expectation(&d, |x| x.abs().powf(k), &[]).unwrap();
                assert_relative_eq!(d.abs_moment(k), q, max_relative = 1e-9);
            }
        }
        assert_eq!(InnovationDist::StudentT { dof: 3.0 }.abs_moment(4.0), f64::INFINITY);
    }

    #[test]
    fn cdf_and_quantile_are_inverse() {
        for d in [InnovationDist::StandardNormal, InnovationDist::StudentT { dof: 5.0 }, InnovationDist::Uniform] {
            for p in [0.05, 0.5, 0.9] {
                assert_relative_eq!(d.cdf(d.quantile(p)), p, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn low_dof_is_rejected() {
        assert!(InnovationDist::StudentT { dof: 2.0 }.validate().is_err());
        assert!(InnovationDist::StudentT { dof: 1.5 }.sampler().is_err());
        assert!(InnovationDist::StudentT { dof: 4.0 }.lacks_fourth_moment());
    }

    #[test]
    fn serde_shape() {
        let d: InnovationDist = serde_json::from_str(r#"{"kind":"student_t","dof":5}"#).unwrap();
        assert_eq!(d, InnovationDist::StudentT { dof: 5.0 });
        let s = serde_json::to_string(&InnovationDist::StandardNormal).unwrap();
        assert_eq!(s, r#"{"kind":"standard_normal"}"#);
    }
}
