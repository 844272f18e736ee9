//! Seeded simulation of iid, augmented GARCH, ARMA and ARMA-GARCH processes.

pub mod arma;
pub mod garch;
pub mod innovation;
pub mod path;
pub mod spec;

pub use arma::{polynomial_roots, ArmaInnovation, ArmaSpec};
pub use garch::{CompiledGarch, GarchModel, GarchSpec, InnovationFn, Lambda, Term};
pub use innovation::{InnovationDist, InnovationSampler};
pub use path::Path;
pub use spec::{Process, ProcessSpec, Workspace};

use crate::error::Result;

pub fn simulate_iid(dist: InnovationDist, n: usize, seed: u64) -> Result<Path> {
    ProcessSpec::Iid(dist).compile()?.simulate(n, 0, seed, 0)
}

pub fn simulate_augmented_garch(spec: &GarchSpec, n: usize, burn_in: usize, seed: u64) -> Result<Path> {
    ProcessSpec::Garch(spec.clone()).compile()?.simulate(n, burn_in, seed, 0)
}

pub fn simulate_arma(spec: &ArmaSpec, n: usize, burn_in: usize, seed: u64) -> Result<Path> {
    ProcessSpec::Arma(spec.clone()).compile()?.simulate(n, burn_in, seed, 0)
}

/// `psi_0 ..= psi_k` of the causal MA(inf) expansion.
pub fn causal_ma_coefficients(spec: &ArmaSpec, k: usize) -> Result<Vec<f64>> {
    spec.psi(k)
}
