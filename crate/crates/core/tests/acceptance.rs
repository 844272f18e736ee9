//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use fclt_core::asymptotics::{
    representation_bracket, representation_gap, resolve_truth, trivariate_long_run_cov_mc,
    LrcOptions,
};
use fclt_core::conditions::{check_process, garch11_closed_form_rows, garch_pq_closed_form_rows, AGREEMENT_TOL};
use fclt_core::estimators::sample_mean;
use fclt_core::harness::{
    run_experiment, ExperimentConfig, ExperimentKind, ExperimentReport, Verdict,
};
use fclt_core::ned::{estimate_ned, geometric_fit, ned_scan, NedFunctional, NedOptions};
use fclt_core::process_sim::{
    simulate_iid, ArmaSpec, GarchModel, GarchSpec, InnovationDist, ProcessSpec,
};
use fclt_core::Scalar;
use num_rational::BigRational;

type Outcome = Result<Vec<String>, Vec<String>>;

fn normal() -> ProcessSpec {
    ProcessSpec::Iid(InnovationDist::StandardNormal)
}

fn garch11() -> ProcessSpec {
    ProcessSpec::Garch(GarchSpec::garch(0.1, &[0.1], &[0.8]))
}

fn ar1() -> ProcessSpec {
    ProcessSpec::Arma(ArmaSpec::ar1(-0.5))
}

fn finish(ok: bool, lines: Vec<String>) -> Outcome {
    if ok {
        Ok(lines)
    } else {
        Err(lines)
    }
}

fn iid_clt() -> Outcome {
    let cfg = ExperimentConfig::new(normal(), 0.5, 2, 5000, 2000, 101);
    let ExperimentReport::Clt(r) = run_experiment(&cfg).map_err(|e| vec![e.to_string()])? else {
        unreachable!()
    };
    let g = r.target.gamma.matrix();
    let target_ok = (g[0][0] - PI / 2.0).abs() < 1e-9 && (g[1][1] - 2.0).abs() < 1e-9 && g[0][1].abs() < 1e-12;
    let line = format!(
        "cov = {:?}, se = {:?}, z = {:?}",
        r.empirical_cov, r.cov_se, r.per_entry_z
    );
    finish(r.verdict == Verdict::Pass && target_ok, vec![line])
}

fn fclt_scaling() -> Outcome {
    let mut cfg = ExperimentConfig::new(normal(), 0.5, 2, 5000, 2000, 101);
    cfg.experiment = ExperimentKind::Fclt;
    cfg.t_grid = Some(vec![0.25, 0.5, 0.75, 1.0]);
    let ExperimentReport::Fclt(r) = run_experiment(&cfg).map_err(|e| vec![e.to_string()])? else {
        unreachable!()
    };
    let mut lines = Vec::new();
    for row in &r.rows {
        lines.push(format!("t = {}: ratio = {:?}, linear z = {:?}", row.t, row.ratio, row.linear_z));
    }
    for inc in &r.increments {
        lines.push(format!("{:?} vs {:?}: corr z = {:?}", inc.first, inc.second, inc.z));
    }
    finish(r.verdict == Verdict::Pass, lines)
}

fn self_consistency(spec: ProcessSpec, p: f64, r: u32, extra: impl Fn(&[[f64; 3]; 3]) -> (bool, String)) -> Outcome {
    let reports = check_process(&spec, r).map_err(|e| vec![e.to_string()])?;
    let mut lines: Vec<String> = reports
        .iter()
        .map(|c| format!("{}: {} (value {})", c.condition_name, c.satisfied, c.computed_value))
        .collect();
    let mut cfg = ExperimentConfig::new(spec, p, r, 10_000, 2000, 303);
    cfg.relative_slack = 0.10;
    cfg.target.max_lag = 50;
    let ExperimentReport::Clt(rep) = run_experiment(&cfg).map_err(|e| vec![e.to_string()])? else {
        unreachable!()
    };
    let lrc = rep.target.lrc.as_ref().expect("replication target");
    let (ok_extra, line) = extra(&lrc.sigma);
    lines.push(format!(
        "replication gamma = {:?} (se {:?}), empirical = {:?} (se {:?}), tail bound {:?}",
        rep.target.gamma.matrix(),
        rep.target.gamma_se,
        rep.empirical_cov,
        rep.cov_se,
        lrc.tail_bound
    ));
    lines.push(line);
    finish(reports.iter().all(|c| c.satisfied) && rep.verdict == Verdict::Pass && ok_extra, lines)
}

fn garch_case() -> Outcome {
    let spec = garch11();
    let reports = check_process(&spec, 2).map_err(|e| vec![e.to_string()])?;
    let ps = reports.iter().find(|c| c.condition_name == "P_s").expect("P_s report");
    let moment = ps.extra["c_moment_sum"].as_f64().unwrap_or(f64::NAN);
    let ps_ok = ps.satisfied && (moment - 0.83).abs() < 1e-9;
    self_consistency(spec, 0.5, 2, |_| {
        (ps_ok, format!("E[(alpha1 eps^2 + beta1)^2] = {moment}, norm {}", ps.computed_value))
    })
}

fn arma_case() -> Outcome {
    self_consistency(ar1(), 0.95, 1, |s| {
        let exact = 3.0 * 4.0 / 3.0;
        let rel = (s[0][0] / exact - 1.0).abs();
        (rel <= 0.05, format!("Var(U) = {} vs {exact} (relative {rel:.4})", s[0][0]))
    })
}

fn bahadur() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, spec) in [("iid normal", normal()), ("AR(1)", ar1())] {
        let mut cfg = ExperimentConfig::new(spec, 0.5, 2, 0, 500, 505);
        cfg.experiment = ExperimentKind::Bahadur;
        cfg.n_ladder = Some(vec![500, 2000, 8000]);
        let rep = run_experiment(&cfg).map_err(|e| vec![e.to_string()])?;
        let ExperimentReport::Bahadur(d) = rep else { unreachable!() };
        let med: Vec<f64> = d.rows.iter().map(|r| r.median).collect();
        let strict = med.windows(2).all(|w| w[1] <= 1.1 * w[0]);
        ok &= d.verdict == Verdict::Pass && strict;
        lines.push(format!("{name}: medians {med:?}, p90 {:?}", d.rows.iter().map(|r| r.p90).collect::<Vec<_>>()));
    }
    finish(ok, lines)
}

fn representation() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let mut exact = 0;
    for i in 0..100u64 {
        let x = simulate_iid(InnovationDist::StandardNormal, 50 + i as usize, 9000 + i)
            .unwrap()
            .values;
        let q: Vec<BigRational> = x.iter().map(|v| BigRational::from_real(*v)).collect();
        let zero = BigRational::from_real(0.0);
        let b = representation_bracket(&q, 2, &zero, &zero).unwrap();
        let d = sample_mean(&q).unwrap();
        let formula = -(d.clone() * d);
        let gap = representation_gap(&x, 2, 0.0, 0.0).unwrap();
        let n = x.len() as f64;
        let rel = (gap - n.sqrt() * formula.to_real()).abs() / (n.sqrt() * formula.to_real()).abs().max(1e-300);
        if b == formula && rel < 1e-6 {
            exact += 1;
        }
    }
    ok &= exact == 100;
    lines.push(format!("exact identity held on {exact}/100 paths"));
    for (name, spec, r) in [("GARCH(1,1) r = 2", garch11(), 2), ("iid normal r = 1", normal(), 1)] {
        let mut cfg = ExperimentConfig::new(spec, 0.5, r, 0, 500, 606);
        cfg.experiment = ExperimentKind::Representation;
        cfg.n_ladder = Some(vec![1000, 4000, 16000]);
        let ExperimentReport::Representation(d) = run_experiment(&cfg).map_err(|e| vec![e.to_string()])? else {
            unreachable!()
        };
        ok &= d.verdict == Verdict::Pass;
        lines.push(format!("{name}: std {:?}", d.rows.iter().map(|r| r.std).collect::<Vec<_>>()));
    }
    finish(ok, lines)
}

fn ned() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let opts = NedOptions::new(707);
    let mut worst: f64 = 0.0;
    for k in 0..=10 {
        let e = estimate_ned(&ar1(), NedFunctional::Identity, k, &opts).map_err(|e| vec![e.to_string()])?;
        let exact = 0.5f64.powi(k as i32 + 1) * (4.0f64 / 3.0).sqrt();
        let z = (e.nu_hat_jk - exact) / e.se_jk;
        worst = worst.max(z.abs());
        ok &= z.abs() <= 3.0;
    }
    lines.push(format!("AR(1) identity: largest |z| over k = 0..10 is {worst:.2}"));
    let ks: Vec<usize> = (1..=12).collect();
    let g = ned_scan(&garch11(), NedFunctional::AbsPow(2), &ks, &opts).map_err(|e| vec![e.to_string()])?;
    let fit = geometric_fit(&g.k_values, &g.nu_hat).map_err(|e| vec![e.to_string()])?;
    ok &= fit.r_squared > 0.9 && fit.rate < 1.0;
    lines.push(format!("GARCH(1,1) abs_pow:2 geometric rate {:.4}, R^2 {:.4}", fit.rate, fit.r_squared));
    let ma = ProcessSpec::Arma(ArmaSpec::new(&[], &[0.5]));
    let s = ned_scan(&ma, NedFunctional::Identity, &(1..=10).collect::<Vec<_>>(), &opts)
        .map_err(|e| vec![e.to_string()])?;
    let zero = s.nu_hat.iter().zip(&s.se).all(|(v, se)| *v <= 3.0 * se);
    ok &= zero;
    lines.push(format!("MA(1) identity, k >= 1: max nu_hat {}", s.nu_hat.iter().cloned().fold(0.0, f64::max)));
    finish(ok, lines)
}

fn table_oracles() -> Outcome {
    let t = InnovationDist::StudentT { dof: 12.0 };
    let specs: Vec<(GarchSpec, u32)> = vec![
        (GarchSpec::garch(0.1, &[0.1], &[0.8]), 1),
        (GarchSpec::garch(0.1, &[0.1], &[0.8]), 2),
        (GarchSpec::garch(0.1, &[0.1], &[0.8]), 3),
        (GarchSpec::garch(0.1, &[0.05], &[0.9]).with_innovation(t), 2),
        (GarchSpec::named(GarchModel::Arch, 0.2, &[0.3], &[], &[]), 1),
        (GarchSpec::named(GarchModel::Arch, 0.2, &[0.3], &[], &[]), 2),
        (GarchSpec::named(GarchModel::Arch, 0.2, &[0.3], &[], &[]), 3),
        (GarchSpec::named(GarchModel::Gjr, 0.1, &[0.05], &[0.8], &[0.1]), 1),
        (GarchSpec::named(GarchModel::Tgarch, 0.1, &[0.1], &[0.8], &[0.3]), 1),
        (GarchSpec::named(GarchModel::Tsgarch, 0.1, &[0.1], &[0.8], &[]), 1),
        (GarchSpec::named(GarchModel::Tsgarch, 0.1, &[0.1], &[0.8], &[]), 3),
        (GarchSpec::named(GarchModel::Pgarch, 0.1, &[0.1], &[0.8], &[]).with_delta(0.5), 2),
        (GarchSpec::named(GarchModel::Ngarch, 0.1, &[0.1], &[0.7], &[0.4]), 1),
        (GarchSpec::named(GarchModel::Vgarch, 0.1, &[0.1], &[0.7], &[0.2]), 2),
        (GarchSpec::named(GarchModel::Egarch, -0.1, &[0.1], &[0.9], &[0.2]), 2),
        (GarchSpec::named(GarchModel::Mgarch, 0.1, &[0.1], &[0.5], &[]), 1),
        (GarchSpec::garch(0.1, &[0.05, 0.05], &[0.4, 0.3]), 2),
        (GarchSpec::named(GarchModel::Arch, 0.1, &[0.2, 0.1], &[], &[]), 2),
        (GarchSpec::named(GarchModel::Tsgarch, 0.1, &[0.05, 0.05], &[0.4, 0.4], &[]), 2),
        (GarchSpec::named(GarchModel::Pgarch, 0.1, &[0.05, 0.05], &[0.4, 0.4], &[]).with_delta(0.5), 1),
    ];
    let mut checked = 0;
    let mut bad = Vec::new();
    for (g, r) in specs {
        let mut rows = garch11_closed_form_rows(&g, r).map_err(|e| vec![e.to_string()])?;
        rows.extend(garch_pq_closed_form_rows(&g, r).map_err(|e| vec![e.to_string()])?);
        for row in rows {
            checked += 1;
            let rel = row.extra.get("relative_difference").and_then(|v| v.as_f64()).unwrap_or(f64::NAN);
            let garch_r2 = row.label.starts_with("GARCH(1,1), r = 2:");
            let ok = if garch_r2 {
                row.discrepancy_note.is_some()
            } else {
                rel <= AGREEMENT_TOL
            };
            if !ok {
                bad.push(format!("{} (relative difference {rel:e})", row.label));
            }
        }
    }
    let mut lines = vec![format!("{checked} rows checked")];
    let ok = bad.is_empty() && checked > 0;
    lines.extend(bad);
    finish(ok, lines)
}

fn determinism() -> Outcome {
    let mut cfgs = Vec::new();
    cfgs.push(ExperimentConfig::new(normal(), 0.5, 2, 1000, 200, 1));
    let mut f = ExperimentConfig::new(ar1(), 0.9, 1, 1000, 200, 2);
    f.experiment = ExperimentKind::Fclt;
    f.t_grid = Some(vec![0.5, 1.0]);
    cfgs.push(f);
    let mut b = ExperimentConfig::new(ar1(), 0.5, 2, 0, 100, 3);
    b.experiment = ExperimentKind::Bahadur;
    b.n_ladder = Some(vec![200, 800]);
    cfgs.push(b);
    let mut r = ExperimentConfig::new(garch11(), 0.5, 2, 0, 100, 4);
    r.experiment = ExperimentKind::Representation;
    r.n_ladder = Some(vec![200, 800]);
    r.pilot.draws = 200_000;
    cfgs.push(r);
    let mut c = ExperimentConfig::new(garch11(), 0.5, 2, 2000, 100, 5);
    c.pilot.draws = 200_000;
    c.target.max_lag = 10;
    cfgs.push(c);
    let run_all = |threads: usize| -> Vec<String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut out: Vec<String> = cfgs
                .iter()
                .map(|c| serde_json::to_string(&run_experiment(c).unwrap()).unwrap())
                .collect();
            let scan = ned_scan(&garch11(), NedFunctional::AbsPow(2), &[1, 3], &NedOptions { redraws: 8, samples: 256, pre_window: 50, seed: 6 }).unwrap();
            out.push(serde_json::to_string(&scan).unwrap());
            let truth = resolve_truth(&ar1(), 0.5, 1, 0, 0).unwrap();
            let lrc = trivariate_long_run_cov_mc(&ar1(), &truth, &LrcOptions::new(500, 50, 7)).unwrap();
            out.push(serde_json::to_string(&lrc).unwrap());
            out
        })
    };
    let a = run_all(1);
    let b = run_all(4);
    let same = a.iter().zip(&b).filter(|(x, y)| x == y).count();
    finish(same == a.len(), vec![format!("{same}/{} reports byte-identical across 1 and 4 threads", a.len())])
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 iid CLT reproduction", iid_clt),
        ("2 FCLT Brownian scaling", fclt_scaling),
        ("3 GARCH(1,1) self-consistency", garch_case),
        ("4 AR(1) self-consistency", arma_case),
        ("5 Bahadur decay", bahadur),
        ("6 representation gap", representation),
        ("7 NED decay", ned),
        ("8 condition-table oracles", table_oracles),
        ("9 determinism across thread counts", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let (ok, lines) = match f() {
            Ok(l) => (true, l),
            Err(l) => (false, l),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {name}: {} ({:.1}s)",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for l in lines {
            println!("    {l}");
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
