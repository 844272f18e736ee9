use serde::Serialize;

use super::report::{Comparison, ConditionReport, Method, Status};
use crate::error::{Error, Result};
use crate::process_sim::{GarchModel, GarchSpec, InnovationFn, Lambda};
use crate::quadrature;

fn require_power(g: &GarchSpec, what: &str) -> Result<f64> {
    match g.lambda {
        Lambda::Power { delta } => Ok(delta),
        Lambda::Log => Err(Error::WrongGroup(format!(
            "{what} applies to power transformations; {} uses log",
            g.model.name()
        ))),
    }
}

/// Positivity (A): every `g_i` and `c_j` is non-negative.
///
/// `computed_value` is a lower bound for the smallest infimum over the
/// support of the innovation law (exact for the named models).
pub fn check_positivity(g: &GarchSpec) -> Result<ConditionReport> {
    require_power(g, "(A)")?;
    let (gs, cs) = g.functions()?;
    let inf = gs
        .iter()
        .chain(&cs)
        .map(|f| f.infimum(&g.innovation))
        .fold(f64::INFINITY, f64::min);
    Ok(ConditionReport::new(
        "A",
        "g_i >= 0 and c_j >= 0",
        inf,
        0.0,
        Comparison::AtLeast,
        Method::ClosedForm,
    ))
}

/// Norm order `s = max(1, r / delta)` used by (P_s).
pub fn polynomial_order(delta: f64, r: u32) -> f64 {
    (r as f64 / delta).max(1.0)
}

/// `(sum_j ||f_j||_s, sum_j E|f_j|^s, note)`.
fn norm_sum(fs: &[InnovationFn], g: &GarchSpec, s: f64) -> (f64, f64, Option<String>) {
    let mut total = 0.0;
    let mut moments = 0.0;
    for f in fs {
        match f.abs_moment(&g.innovation, s) {
            Ok(m) => {
                total += m.powf(1.0 / s);
                moments += m;
            }
            Err(e) => {
                return (
                    f64::INFINITY,
                    f64::INFINITY,
                    Some(format!("moment of order {s} appears infinite ({e})")),
                )
            }
        }
    }
    (total, moments, None)
}

/// (P_s) with `s = max(1, r/delta)`: `sum ||g_i||_s < inf` and
/// `sum ||c_j||_s < 1`, together with (A).
pub fn check_polynomial_condition(g: &GarchSpec, r: u32) -> Result<ConditionReport> {
    let delta = require_power(g, "(P_s)")?;
    if r == 0 {
        return Err(Error::Parameter("r must be positive".into()));
    }
    let s = polynomial_order(delta, r);
    let (gs, cs) = g.functions()?;
    let all_const = gs.iter().chain(&cs).all(InnovationFn::is_constant);
    let (c_sum, c_moments, c_note) = norm_sum(&cs, g, s);
    let (g_sum, _, g_note) = norm_sum(&gs, g, s);
    let label = format!("sum_j ||c_j(eps)||_s < 1 with s = {s}");
    let mut rep = ConditionReport::new(
        "P_s",
        &label,
        c_sum,
        1.0,
        Comparison::Below,
        if all_const { Method::ClosedForm } else { Method::Quadrature },
    )
    .with_extra("s", s)
    .with_extra("c_moment_sum", c_moments)
    .with_extra("g_norm_sum", g_sum);
    if let Some(n) = c_note {
        rep = rep.fail_because(&n);
    }
    if let Some(n) = g_note {
        rep = rep.fail_because(&format!("g functions: {n}"));
    } else if !g_sum.is_finite() {
        rep = rep.fail_because("sum of g norms is not finite");
    }
    let a = check_positivity(g)?;
    rep = rep.with_extra("positivity_infimum", a.computed_value);
    if !a.satisfied {
        rep = rep.fail_because("positivity (A) fails");
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailVerdict {
    Convergent,
    Divergent,
    Inconclusive,
}

impl TailVerdict {
    fn name(&self) -> &'static str {
        match self {
            TailVerdict::Convergent => "convergent",
            TailVerdict::Divergent => "divergent",
            TailVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Growth test for `int exp(l(u)) du` as `u -> inf`, from `l` at three
/// equally spaced large abscissae.
fn classify_tail(l: [f64; 3], h: f64) -> TailVerdict {
    if l.iter().any(|v| v.is_nan()) {
        return TailVerdict::Inconclusive;
    }
    if l.iter().any(|v| *v == f64::INFINITY) {
        return TailVerdict::Divergent;
    }
    if l.iter().all(|v| *v == f64::NEG_INFINITY) {
        return TailVerdict::Convergent;
    }
    if l.iter().any(|v| !v.is_finite()) {
        return TailVerdict::Inconclusive;
    }
    let scale: f64 = l.iter().map(|v| v.abs()).sum::<f64>() + 1.0;
    let curv = (l[2] - 2.0 * l[1] + l[0]) / (h * h);
    let slope = (3.0 * l[2] - 4.0 * l[1] + l[0]) / (2.0 * h);
    let curv_tol = 1e-9 * scale / (h * h);
    let slope_tol = 1e-9 * scale / h + 1e-9;
    if curv > curv_tol {
        TailVerdict::Divergent
    } else if slope < -slope_tol {
        TailVerdict::Convergent
    } else if slope > slope_tol {
        TailVerdict::Divergent
    } else {
        TailVerdict::Inconclusive
    }
}

fn combine(a: TailVerdict, b: TailVerdict) -> TailVerdict {
    use TailVerdict::*;
    match (a, b) {
        (Divergent, _) | (_, Divergent) => Divergent,
        (Convergent, Convergent) => Convergent,
        _ => Inconclusive,
    }
}

/// (L_r): `E[exp(4r sum_i g_i(eps)^2)] < inf` and `sum_j |c_j| < 1`.
///
/// Returns two reports: the exponential moment (threshold `inf`) and the
/// `c_j` sum. Finiteness of the exponential moment is decided by a growth
/// test on the integrand near zero and toward infinity; if either tail is
/// ambiguous the report is inconclusive.
pub fn check_exponential_condition(g: &GarchSpec, r: u32) -> Result<Vec<ConditionReport>> {
    if g.lambda != Lambda::Log {
        return Err(Error::WrongGroup(format!(
            "(L_r) applies to the log transformation; {} uses a power",
            g.model.name()
        )));
    }
    if r == 0 {
        return Err(Error::Parameter("r must be positive".into()));
    }
    let (gs, cs) = g.functions()?;
    let k = 4.0 * r as f64;
    let gsq = |e: f64| gs.iter().map(|f| f.eval(e).powi(2)).sum::<f64>();
    let dist = g.innovation;

    let exp_label = format!("E[exp({k} sum_i g_i(eps)^2)] < inf");
    let exp_rep = if dist.is_discrete() {
        let v = 0.5 * ((k * gsq(-1.0)).exp() + (k * gsq(1.0)).exp());
        ConditionReport::new("L_r", &exp_label, v, f64::INFINITY, Comparison::Finite, Method::Quadrature)
    } else {
        let h = 50.0;
        let us: [f64; 3] = [100.0, 150.0, 200.0];
        let (lo, hi) = dist.support();
        let ell = |x: f64, jac: f64| k * gsq(x) + dist.log_pdf(x) + jac;
        let side = |sign: f64, to_zero: bool| {
            let l = us.map(|u| {
                if to_zero {
                    ell(sign * (-u).exp(), -u)
                } else {
                    ell(sign * u.exp(), u)
                }
            });
            classify_tail(l, h)
        };
        let near_zero = combine(side(1.0, true), side(-1.0, true));
        let far = if lo.is_finite() && hi.is_finite() {
            TailVerdict::Convergent
        } else {
            combine(side(1.0, false), side(-1.0, false))
        };
        let verdict = combine(near_zero, far);
        let mut rep = match verdict {
            TailVerdict::Divergent => ConditionReport::new(
                "L_r",
                &exp_label,
                f64::INFINITY,
                f64::INFINITY,
                Comparison::Finite,
                Method::Quadrature,
            ),
            TailVerdict::Inconclusive => ConditionReport::new(
                "L_r",
                &exp_label,
                f64::NAN,
                f64::INFINITY,
                Comparison::Finite,
                Method::Quadrature,
            )
            .inconclusive("integrand growth test is ambiguous"),
            TailVerdict::Convergent => {
                let breaks: Vec<f64> = gs.iter().flat_map(|f| f.breakpoints()).collect();
                match quadrature::expectation(&dist, |e| (k * gsq(e)).exp(), &breaks) {
                    Ok(v) => ConditionReport::new(
                        "L_r",
                        &exp_label,
                        v,
                        f64::INFINITY,
                        Comparison::Finite,
                        Method::Quadrature,
                    ),
                    Err(e) => ConditionReport::new(
                        "L_r",
                        &exp_label,
                        f64::NAN,
                        f64::INFINITY,
                        Comparison::Finite,
                        Method::Quadrature,
                    )
                    .inconclusive(&format!("tails decay but quadrature failed: {e}")),
                }
            }
        };
        rep.extra.insert("tail_near_zero".into(), near_zero.name().into());
        rep.extra.insert("tail_at_infinity".into(), far.name().into());
        rep
    };

    let mut c_sum = 0.0;
    for c in &cs {
        match c.constant_value() {
            Some(v) => c_sum += v.abs(),
            None => {
                return Err(Error::Parameter(
                    "(L_r) needs constant c_j under the log transformation".into(),
                ))
            }
        }
    }
    let c_rep = ConditionReport::new(
        "L_r",
        "sum_j |c_j| < 1",
        c_sum,
        1.0,
        Comparison::Below,
        Method::ClosedForm,
    );
    Ok(vec![exp_rep, c_rep])
}

/// `sum alpha_i + sum beta_j < 1` for GARCH with unit-variance shocks.
pub fn check_garch_stationarity(g: &GarchSpec) -> Result<ConditionReport> {
    if g.model != GarchModel::Garch && g.model != GarchModel::Arch {
        return Err(Error::WrongGroup(format!(
            "stationarity shortcut is for garch, got {}",
            g.model.name()
        )));
    }
    let v: f64 = g.alpha.iter().sum::<f64>() + g.beta.iter().sum::<f64>();
    Ok(ConditionReport::new(
        "garch_stationarity",
        "sum alpha_i + sum beta_j < 1",
        v,
        1.0,
        Comparison::Below,
        Method::ClosedForm,
    ))
}

impl ConditionReport {
    pub fn is_inconclusive(&self) -> bool {
        self.status == Status::Inconclusive
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_sim::InnovationDist;
    use approx::assert_relative_eq;

    #[test]
    fn garch_r1_and_r2() {
        let g = GarchSpec::garch(0.1, &[0.1], &[0.8]);
        let r1 = check_polynomial_condition(&g, 1).unwrap();
        assert!(r1.satisfied);
        assert_relative_eq!(r1.computed_value, 0.9, max_relative = 1e-10);
        let g2 = GarchSpec::garch(0.1, &[0.2], &[0.7]);
        let r2 = check_polynomial_condition(&g2, 2).unwrap();
        assert!(r2.satisfied);
        assert_relative_eq!(r2.computed_value, 0.89f64.sqrt(), max_relative = 1e-9);
    }

    #[test]
    fn arch_boundary() {
        let g = GarchSpec::named(GarchModel::Arch, 1.0, &[1.0], &[], &[]);
        let r = check_polynomial_condition(&g, 1).unwrap();
        assert!(!r.satisfied);
    }

    #[test]
    fn wrong_group_errors() {
        let e = GarchSpec::named(GarchModel::Egarch, 0.0, &[0.1], &[0.5], &[0.0]);
        assert!(matches!(check_polynomial_condition(&e, 1), Err(Error::WrongGroup(_))));
        assert!(matches!(check_positivity(&e), Err(Error::WrongGroup(_))));
        let g = GarchSpec::garch(0.1, &[0.1], &[0.8]);
        assert!(matches!(check_exponential_condition(&g, 1), Err(Error::WrongGroup(_))));
    }

    #[test]
    fn egarch_is_satisfied() {
        let e = GarchSpec::named(GarchModel::Egarch, 0.1, &[0.1], &[0.5], &[-0.05]);
        let reps = check_exponential_condition(&e, 1).unwrap();
        assert!(reps[0].satisfied, "{:?}", reps[0]);
        assert!(reps[0].computed_value.is_finite());
        assert!(reps[1].satisfied);
    }

    #[test]
    fn mgarch_unit_beta_fails() {
        let m = GarchSpec::named(GarchModel::Mgarch, 0.1, &[0.05], &[1.0], &[]);
        let reps = check_exponential_condition(&m, 1).unwrap();
        assert!(!reps[1].satisfied);
    }

    #[test]
    fn mgarch_log_term_diverges_at_zero_under_normal_law() {
        let m = GarchSpec::named(GarchModel::Mgarch, 0.1, &[0.05], &[0.5], &[]);
        let reps = check_exponential_condition(&m, 1).unwrap();
        assert!(!reps[0].satisfied);
        assert_eq!(reps[0].status, Status::NotSatisfied);
        assert_eq!(reps[0].extra["tail_near_zero"], "divergent");
        // without the log term the moment is exp(4 omega^2)
        let m0 = GarchSpec::named(GarchModel::Mgarch, 0.1, &[0.0], &[0.5], &[]);
        let reps = check_exponential_condition(&m0, 1).unwrap();
        assert!(reps[0].satisfied);
        assert_relative_eq!(reps[0].computed_value, (0.04f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn egarch_heavy_tails_diverge() {
        let e = GarchSpec::named(GarchModel::Egarch, 0.1, &[0.1], &[0.5], &[0.0])
            .with_innovation(InnovationDist::StudentT { dof: 5.0 });
        let reps = check_exponential_condition(&e, 1).unwrap();
        assert!(!reps[0].satisfied);
    }

    #[test]
    fn stationarity_examples() {
        assert!(check_garch_stationarity(&GarchSpec::garch(0.1, &[0.1], &[0.8])).unwrap().satisfied);
        assert!(!check_garch_stationarity(&GarchSpec::garch(0.1, &[0.3], &[0.7])).unwrap().satisfied);
        let r = check_garch_stationarity(&GarchSpec::garch(0.1, &[0.1, 0.1], &[0.5])).unwrap();
        assert!(r.satisfied);
        assert_relative_eq!(r.computed_value, 0.7, max_relative = 1e-15);
    }

    #[test]
    fn tail_classifier() {
        // l(u) = -u
        assert_eq!(classify_tail([-100.0, -150.0, -200.0], 50.0), TailVerdict::Convergent);
        // l(u) = 0.01 u^2 - u
        let f = |u: f64| 0.01 * u * u - u;
        assert_eq!(classify_tail([f(100.0), f(150.0), f(200.0)], 50.0), TailVerdict::Divergent);
        assert_eq!(classify_tail([1.0, 1.0, 1.0], 50.0), TailVerdict::Inconclusive);
    }
}
