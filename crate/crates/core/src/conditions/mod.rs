//! Sufficient conditions for the joint limit theory of the estimators:
//! positivity (A), the polynomial moment bound (P_s), the exponential bound
//! (L_r), ARMA causality, and the closed-form table rows.

mod report;
mod garch_checks;
mod tables;

pub use garch_checks::{
    check_exponential_condition, check_garch_stationarity, check_polynomial_condition,
    check_positivity, polynomial_order, TailVerdict,
};
pub use report::{Comparison, ConditionReport, Method, Status, STRICT_MARGIN};
pub use tables::{garch11_closed_form_rows, garch_pq_closed_form_rows, AGREEMENT_TOL};

use crate::error::Result;
use crate::process_sim::{ArmaInnovation, ArmaSpec, GarchSpec, ProcessSpec};

/// Roots of `Phi` must lie strictly outside the unit circle.
pub fn check_causality(spec: &ArmaSpec) -> Result<ConditionReport> {
    let roots = spec.phi_roots()?;
    let modulus = roots.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let mut rep = ConditionReport::new(
        "causality",
        "all roots of Phi(z) outside the unit circle",
        modulus,
        1.0,
        Comparison::Above,
        Method::ClosedForm,
    );
    rep.extra.insert("root_count".into(), (roots.len() as f64).into());
    if roots.is_empty() {
        rep.discrepancy_note = Some("no autoregressive part; trivially causal".into());
    }
    Ok(rep)
}

fn garch_reports(g: &GarchSpec, r: u32, out: &mut Vec<ConditionReport>) -> Result<()> {
    match g.lambda {
        crate::process_sim::Lambda::Power { .. } => {
            out.push(check_positivity(g)?);
            out.push(check_polynomial_condition(g, r)?);
        }
        crate::process_sim::Lambda::Log => {
            out.extend(check_exponential_condition(g, r)?);
        }
    }
    Ok(())
}

/// All conditions that gate an experiment on `spec` with moment order `r`.
/// The list is empty for iid and constant specs.
pub fn check_process(spec: &ProcessSpec, r: u32) -> Result<Vec<ConditionReport>> {
    let mut out = Vec::new();
    match spec {
        ProcessSpec::Iid(_) | ProcessSpec::Constant(_) => {}
        ProcessSpec::Garch(g) => garch_reports(g, r, &mut out)?,
        ProcessSpec::Arma(a) => {
            out.push(check_causality(a)?);
            if let ArmaInnovation::Garch(g) = &a.innovation {
                out.push(check_garch_stationarity(g)?);
                garch_reports(g, r, &mut out)?;
            }
        }
    }
    Ok(out)
}

/// `true` when every report is satisfied.
pub fn all_satisfied(reports: &[ConditionReport]) -> bool {
    reports.iter().all(|r| r.satisfied)
}
