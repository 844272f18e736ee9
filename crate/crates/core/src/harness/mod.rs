//! Monte Carlo experiments comparing the replication distribution of the
//! estimators with their limiting covariance, Brownian scaling and
//! remainder decay.

mod clt;
mod decay;
pub mod stats;

pub use clt::{run_clt_experiment, run_fclt_experiment, CltReport, FcltReport, FcltRow, IncrementRow};
pub use decay::{run_bahadur_experiment, run_representation_experiment, DecayKind, DecayReport, DecayRow};
pub use stats::Verdict;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asymptotics::{
    iid_gamma, resolve_truth, trivariate_long_run_cov_mc, Gamma2, LrcOptions, LrcReport, Truth,
    PILOT_DRAWS,
};
use crate::conditions::{all_satisfied, check_process, Comparison, ConditionReport, Method};
use crate::error::{Error, Result};
use crate::estimators::validate_grid;
use crate::process_sim::ProcessSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    Clt,
    Fclt,
    Bahadur,
    Representation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PilotConfig {
    #[serde(default = "default_pilot_draws")]
    pub draws: usize,
    #[serde(default = "default_pilot_seed")]
    pub seed: u64,
}

fn default_pilot_draws() -> usize {
    PILOT_DRAWS
}
fn default_pilot_seed() -> u64 {
    0x5EED
}

impl Default for PilotConfig {
    fn default() -> Self {
        PilotConfig {
            draws: default_pilot_draws(),
            seed: default_pilot_seed(),
        }
    }
}

/// Settings for the replication Monte Carlo target when no target is
/// supplied and no closed form exists. Unset lengths default to the
/// experiment's `n` and `reps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    #[serde(default = "default_max_lag")]
    pub max_lag: usize,
    #[serde(default)]
    pub n_per_rep: Option<usize>,
    #[serde(default)]
    pub reps: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_max_lag() -> usize {
    50
}

impl Default for TargetConfig {
    fn default() -> Self {
        TargetConfig {
            max_lag: default_max_lag(),
            n_per_rep: None,
            reps: None,
            seed: None,
        }
    }
}

fn default_z() -> f64 {
    3.0
}
fn default_decay_slack() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: ExperimentKind,
    pub spec: ProcessSpec,
    pub p: f64,
    pub r: u32,
    /// Path length (unused by the ladder experiments).
    #[serde(default)]
    pub n: usize,
    /// Replications `M`.
    #[serde(alias = "M")]
    pub reps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_ladder: Option<Vec<usize>>,
    /// Target `Gamma`; computed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Gamma2<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_se: Option<[[f64; 2]; 2]>,
    pub seed: u64,
    /// Population constants; resolved in closed form or by a pilot run when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Truth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    /// Pass threshold in Monte Carlo standard errors.
    #[serde(default = "default_z")]
    pub z_threshold: f64,
    /// Covariance entries also pass within this fraction of the target.
    #[serde(default)]
    pub relative_slack: f64,
    /// Allowed relative increase between ladder rungs.
    #[serde(default = "default_decay_slack")]
    pub decay_slack: f64,
    #[serde(default)]
    pub pilot: PilotConfig,
    #[serde(default)]
    pub target: TargetConfig,
}

impl ExperimentConfig {
    pub fn new(spec: ProcessSpec, p: f64, r: u32, n: usize, reps: usize, seed: u64) -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::Clt,
            spec,
            p,
            r,
            n,
            reps,
            t_grid: None,
            n_ladder: None,
            targets: None,
            target_se: None,
            seed,
            truth: None,
            burn_in: None,
            z_threshold: default_z(),
            relative_slack: 0.0,
            decay_slack: default_decay_slack(),
            pilot: PilotConfig::default(),
            target: TargetConfig::default(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the compact JSON form.
    pub fn fingerprint(&self) -> String {
        let s = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(s.as_bytes())[..8])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Parameter(format!("p = {} must lie in (0, 1)", self.p)));
        }
        if self.r == 0 {
            return Err(Error::Parameter("r must be at least 1".into()));
        }
        if self.reps < 2 {
            return Err(Error::Parameter(format!("at least two replications are required, got {}", self.reps)));
        }
        if !(self.z_threshold > 0.0) || !(self.relative_slack >= 0.0) || !(self.decay_slack >= 0.0) {
            return Err(Error::Parameter("thresholds must be positive".into()));
        }
        match self.experiment {
            ExperimentKind::Clt | ExperimentKind::Fclt => {
                if self.n == 0 {
                    return Err(Error::Parameter("path length n must be at least 1".into()));
                }
            }
            ExperimentKind::Bahadur | ExperimentKind::Representation => {
                let l = self.n_ladder.as_deref().unwrap_or(&[]);
                if l.is_empty() || l.contains(&0) {
                    return Err(Error::Parameter("n_ladder must list positive path lengths".into()));
                }
            }
        }
        if let Some(g) = &self.t_grid {
            validate_grid(g)?;
        }
        if let Some(t) = &self.truth {
            if t.p != self.p || t.r != self.r {
                return Err(Error::Parameter("truth was computed for a different (p, r)".into()));
            }
        }
        Ok(())
    }
}

/// Any report produced by [`run_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentReport {
    Clt(CltReport),
    Fclt(FcltReport),
    Bahadur(DecayReport),
    Representation(DecayReport),
}

impl ExperimentReport {
    pub fn verdict(&self) -> Verdict {
        match self {
            ExperimentReport::Clt(r) => r.verdict,
            ExperimentReport::Fclt(r) => r.verdict,
            ExperimentReport::Bahadur(r) | ExperimentReport::Representation(r) => r.verdict,
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    Ok(match cfg.experiment {
        ExperimentKind::Clt => ExperimentReport::Clt(run_clt_experiment(cfg)?),
        ExperimentKind::Fclt => ExperimentReport::Fclt(run_fclt_experiment(cfg)?),
        ExperimentKind::Bahadur => ExperimentReport::Bahadur(run_bahadur_experiment(cfg)?),
        ExperimentKind::Representation => {
            ExperimentReport::Representation(run_representation_experiment(cfg)?)
        }
    })
}

fn density_report(value: f64, note: &str) -> ConditionReport {
    ConditionReport::new(
        "density_at_quantile",
        "f_X(q_X(p)) > 0 and continuous near the quantile",
        value,
        0.0,
        Comparison::Above,
        Method::ClosedForm,
    )
    .inconclusive(note)
}

/// Checks the process conditions and resolves the truths, converting every
/// failed precondition into a refusal carrying the reports.
pub(crate) fn admit(cfg: &ExperimentConfig) -> Result<Truth> {
    cfg.validate()?;
    if let ProcessSpec::Constant(_) = cfg.spec {
        return Err(Error::Refused(vec![density_report(
            0.0,
            "constant process: the density at the quantile does not exist",
        )]));
    }
    let reports = match check_process(&cfg.spec, cfg.r) {
        Ok(r) => r,
        Err(Error::NonCausal { modulus }) => {
            return Err(Error::Refused(vec![ConditionReport::new(
                "causality",
                "all roots of Phi(z) outside the unit circle",
                modulus,
                1.0,
                Comparison::Above,
                Method::ClosedForm,
            )]))
        }
        Err(e) => return Err(e),
    };
    if !all_satisfied(&reports) {
        return Err(Error::Refused(reports));
    }
    let truth = match &cfg.truth {
        Some(t) => t.clone(),
        None => match resolve_truth(&cfg.spec, cfg.p, cfg.r, cfg.pilot.draws, cfg.pilot.seed) {
            Ok(t) => t,
            Err(Error::Singular(why)) => return Err(Error::Refused(vec![density_report(0.0, &why)])),
            Err(e) => return Err(e),
        },
    };
    if let Err(e) = truth.validate() {
        return Err(Error::Refused(vec![density_report(truth.f_at_q, &e.to_string())]));
    }
    Ok(truth)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSource {
    Supplied,
    IidClosedForm,
    ReplicationMc { max_lag: usize, n_per_rep: usize, reps: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub gamma: Gamma2<f64>,
    pub gamma_se: Option<[[f64; 2]; 2]>,
    pub source: TargetSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lrc: Option<LrcReport>,
}

pub(crate) fn resolve_target(cfg: &ExperimentConfig, truth: &Truth) -> Result<Target> {
    if let Some(g) = &cfg.targets {
        return Ok(Target {
            gamma: g.clone(),
            gamma_se: cfg.target_se,
            source: TargetSource::Supplied,
            lrc: None,
        });
    }
    if let ProcessSpec::Iid(dist) = &cfg.spec {
        return Ok(Target {
            gamma: iid_gamma(dist, cfg.p, cfg.r)?,
            gamma_se: None,
            source: TargetSource::IidClosedForm,
            lrc: None,
        });
    }
    let opts = LrcOptions {
        max_lag: cfg.target.max_lag,
        n_per_rep: cfg.target.n_per_rep.unwrap_or(cfg.n),
        reps: cfg.target.reps.unwrap_or(cfg.reps),
        seed: cfg.target.seed.unwrap_or(cfg.seed),
        burn_in: cfg.burn_in,
    };
    let est = trivariate_long_run_cov_mc(&cfg.spec, truth, &opts)?;
    Ok(Target {
        gamma: est.gamma.clone(),
        gamma_se: Some(est.gamma_se),
        source: TargetSource::ReplicationMc {
            max_lag: opts.max_lag,
            n_per_rep: opts.n_per_rep,
            reps: opts.reps,
            seed: opts.seed,
        },
        lrc: Some(LrcReport::new(&est.lrc, truth.a_r, Some(est.gamma_se))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_sim::{ArmaSpec, InnovationDist};

    fn normal_cfg(n: usize, reps: usize) -> ExperimentConfig {
        ExperimentConfig::new(ProcessSpec::Iid(InnovationDist::StandardNormal), 0.5, 2, n, reps, 17)
    }

    #[test]
    fn two_reps_are_inconclusive() {
        let r = run_clt_experiment(&normal_cfg(200, 2)).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert_eq!(r.used + r.quarantined, 2);
    }

    #[test]
    fn constant_process_is_refused() {
        let mut cfg = normal_cfg(100, 10);
        cfg.spec = ProcessSpec::Constant(1.0);
        match run_clt_experiment(&cfg) {
            Err(Error::Refused(r)) => assert_eq!(r[0].condition_name, "density_at_quantile"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_causal_arma_is_refused() {
        let mut cfg = normal_cfg(100, 10);
        cfg.spec = ProcessSpec::Arma(ArmaSpec::ar1(-1.25));
        match run_clt_experiment(&cfg) {
            Err(Error::Refused(r)) => {
                assert_eq!(r[0].condition_name, "causality");
                assert!((r[0].computed_value - 0.8).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fclt_at_one_reproduces_clt() {
        let cfg = normal_cfg(300, 40);
        let clt = run_clt_experiment(&cfg).unwrap();
        let mut f = cfg.clone();
        f.experiment = ExperimentKind::Fclt;
        f.t_grid = Some(vec![1.0]);
        let fr = run_fclt_experiment(&f).unwrap();
        assert_eq!(fr.clt.empirical_cov, clt.empirical_cov);
        assert_eq!(fr.clt.empirical_mean, clt.empirical_mean);
        assert_eq!(fr.rows[0].cov, clt.empirical_cov);
    }

    #[test]
    fn reports_do_not_depend_on_thread_count() {
        let mut cfg = normal_cfg(400, 50);
        cfg.experiment = ExperimentKind::Fclt;
        cfg.t_grid = Some(vec![0.5, 1.0]);
        let run = |k: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap();
            pool.install(|| serde_json::to_string(&run_experiment(&cfg).unwrap()).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn single_rung_ladder_is_inconclusive() {
        let mut cfg = normal_cfg(0, 40);
        cfg.experiment = ExperimentKind::Bahadur;
        cfg.n_ladder = Some(vec![100]);
        let r = run_bahadur_experiment(&cfg).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.verdict, Verdict::Inconclusive);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let back = DecayReport::read_csv_rows(&buf[..]).unwrap();
        assert_eq!(back[0].median, r.rows[0].median);
    }

    #[test]
    fn config_json_round_trip() {
        let mut cfg = normal_cfg(100, 20);
        cfg.t_grid = Some(vec![0.5, 1.0]);
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        let with_m = r#"{"spec":{"model":"iid","innovation":{"kind":"standard_normal"}},"p":0.5,"r":2,"n":10,"M":3,"seed":1}"#;
        assert_eq!(ExperimentConfig::from_json(with_m).unwrap().reps, 3);
        assert!(ExperimentConfig::from_json(r#"{"spec":{"model":"iid"},"p":0.5,"r":2,"reps":3,"seed":1,"bogus":0}"#).is_err());
    }
}
