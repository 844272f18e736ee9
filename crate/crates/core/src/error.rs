use thiserror::Error;

use crate::conditions::ConditionReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("recursion diverged at t = {t}: {detail}")]
    Divergence { t: usize, detail: String },

    #[error("non-causal ARMA specification: root modulus {modulus} is not outside the unit circle")]
    NonCausal { modulus: f64 },

    #[error("quadrature did not converge (estimate {estimate}, achieved error {achieved})")]
    Accuracy { estimate: f64, achieved: f64 },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("singular quantity: {0}")]
    Singular(String),

    #[error("condition check refers to the wrong model group: {0}")]
    WrongGroup(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("preconditions refused: {}", summarize(.0))]
    Refused(Vec<ConditionReport>),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

fn summarize(reports: &[ConditionReport]) -> String {
    reports
        .iter()
        .filter(|r| !r.satisfied)
        .map(|r| format!("{} (value {}, threshold {})", r.condition_name, r.computed_value, r.threshold))
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
