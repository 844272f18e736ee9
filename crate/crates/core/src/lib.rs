pub mod asymptotics;
pub mod conditions;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod ned;
pub mod process_sim;
pub mod quadrature;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type EstimatePair = estimators::EstimatePair<f64>;
pub type ExactEstimatePair = estimators::EstimatePair<num_rational::BigRational>;
pub type Gamma2 = asymptotics::Gamma2<f64>;
pub type ExactGamma2 = asymptotics::Gamma2<num_rational::BigRational>;
