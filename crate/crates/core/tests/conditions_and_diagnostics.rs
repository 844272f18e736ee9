use fclt_core::asymptotics::{resolve_truth, trivariate_long_run_cov_mc, LrcOptions};
use fclt_core::conditions::{check_garch_stationarity, check_polynomial_condition, check_process};
use fclt_core::ned::{functional_ned_comparison, ned_scan, NedFunctional, NedOptions};
use fclt_core::process_sim::{ArmaSpec, GarchModel, GarchSpec, ProcessSpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn satisfied_orders_are_downward_closed(alpha in 0.0f64..0.6, beta in 0.0f64..0.95) {
        let g = GarchSpec::garch(0.1, &[alpha], &[beta]);
        let ok: Vec<bool> = (1..=4)
            .map(|r| check_polynomial_condition(&g, r).unwrap().satisfied)
            .collect();
        for r in 1..ok.len() {
            prop_assert!(ok[r - 1] || !ok[r], "alpha {alpha} beta {beta}: {ok:?}");
        }
    }

    #[test]
    fn apgarch_nests_garch(alpha in 0.0f64..0.5, beta in 0.0f64..0.9, r in 1u32..=3) {
        let garch = GarchSpec::garch(0.1, &[alpha], &[beta]);
        let ap = GarchSpec::named(GarchModel::Apgarch, 0.1, &[alpha], &[beta], &[0.0]).with_delta(1.0);
        let a = check_polynomial_condition(&garch, r).unwrap();
        let b = check_polynomial_condition(&ap, r).unwrap();
        prop_assert!((a.computed_value - b.computed_value).abs() <= 1e-10);
        prop_assert_eq!(a.satisfied, b.satisfied);
    }
}

#[test]
fn stationarity_arithmetic() {
    let s = |a: &[f64], b: &[f64]| check_garch_stationarity(&GarchSpec::garch(0.1, a, b)).unwrap();
    assert!(s(&[0.1], &[0.8]).satisfied);
    assert!(!s(&[0.3], &[0.7]).satisfied);
    let r = s(&[0.1, 0.1], &[0.5]);
    assert!(r.satisfied);
    assert!((r.computed_value - 0.7).abs() < 1e-12);
}

#[test]
fn squares_of_garch_are_positively_dependent() {
    let spec = ProcessSpec::Garch(GarchSpec::garch(0.1, &[0.1], &[0.8]));
    assert!(check_process(&spec, 2).unwrap().iter().all(|r| r.satisfied));
    let truth = resolve_truth(&spec, 0.5, 2, 1_000_000, 3).unwrap();
    let est = trivariate_long_run_cov_mc(&spec, &truth, &LrcOptions::new(2000, 200, 41)).unwrap();
    let long_run = est.lrc.sigma[1][1];
    let lag0 = est.lag0[1][1];
    assert!(long_run > 1.5 * lag0, "long-run {long_run} vs lag-0 {lag0}");
}

fn assert_non_increasing(spec: &ProcessSpec, func: NedFunctional) {
    let opts = NedOptions { redraws: 32, samples: 1024, ..NedOptions::new(12) };
    let scan = ned_scan(spec, func, &[1, 2, 3, 5, 8, 12], &opts).unwrap();
    for i in 1..scan.k_values.len() {
        let slack = 3.0 * (scan.se[i].powi(2) + scan.se[i - 1].powi(2)).sqrt();
        assert!(
            scan.nu_hat[i] <= scan.nu_hat[i - 1] + slack,
            "{func}: nu({}) = {} > nu({}) = {} + {slack}",
            scan.k_values[i],
            scan.nu_hat[i],
            scan.k_values[i - 1],
            scan.nu_hat[i - 1]
        );
    }
}

#[test]
fn ned_coefficients_do_not_increase() {
    let garch = ProcessSpec::Garch(GarchSpec::garch(0.1, &[0.1], &[0.8]));
    let ar = ProcessSpec::Arma(ArmaSpec::new(&[-0.6], &[0.2]));
    for spec in [&garch, &ar] {
        assert_non_increasing(spec, NedFunctional::Identity);
        assert_non_increasing(spec, NedFunctional::AbsPow(2));
        assert_non_increasing(spec, NedFunctional::IndicatorLeq(0.5));
    }
}

#[test]
fn indicator_decay_of_ar1_is_geometric() {
    let spec = ProcessSpec::Arma(ArmaSpec::ar1(-0.5));
    let opts = NedOptions { redraws: 32, samples: 2048, ..NedOptions::new(5) };
    let cmp = functional_ned_comparison(&spec, 0.0, 2, &[1, 2, 3, 4, 5, 6], &opts, 0.1).unwrap();
    let rate = cmp.indicator_rate.unwrap();
    assert!((0.5..=0.85).contains(&rate), "indicator rate {rate}");
    // nu(k) = sqrt(sum_{j>k} psi_j^2) is proportional to 0.5^k
    let id = cmp.identity_rate.unwrap();
    assert!((id - 0.5).abs() < 0.05, "identity rate {id}");
}
