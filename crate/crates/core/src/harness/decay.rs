use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{median_se, order_stat, std_dev, Verdict, MIN_REPS_FOR_VERDICT};
use super::{admit, ExperimentConfig};
use crate::asymptotics::{bahadur_remainder, representation_gap, Truth};
use crate::error::{Error, Result};
use crate::process_sim::Workspace;
use crate::rng::{ladder_stream, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayKind {
    /// `sqrt(n) R_n` of the quantile representation.
    Bahadur,
    /// `sqrt(n)` times the moment representation bracket.
    Representation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub n: usize,
    /// Median of the absolute statistic.
    pub median: f64,
    /// 90th percentile of the absolute statistic.
    pub p90: f64,
    /// Standard deviation of the signed statistic.
    pub std: f64,
    /// Standard error of the checked summary: the median for
    /// [`DecayKind::Bahadur`], the standard deviation otherwise.
    pub se: f64,
    pub used: usize,
    pub quarantined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub kind: DecayKind,
    pub rows: Vec<DecayRow>,
    /// Summaries required to be non-increasing along the ladder.
    pub checked: Vec<String>,
    pub slack: f64,
    pub verdict: Verdict,
    pub truth: Truth,
    pub config_fingerprint: String,
}

impl DecayReport {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let e = |e: csv::Error| Error::Parse(e.to_string());
        wr.write_record(["n", "median", "p90", "std", "se"]).map_err(e)?;
        for r in &self.rows {
            wr.write_record([
                r.n.to_string(),
                r.median.to_string(),
                r.p90.to_string(),
                r.std.to_string(),
                r.se.to_string(),
            ])
            .map_err(e)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Rows read back from [`DecayReport::write_csv`] output (counts are
    /// not part of the CSV and come back as zero).
    pub fn read_csv_rows<R: std::io::Read>(r: R) -> Result<Vec<DecayRow>> {
        let mut rd = csv::Reader::from_reader(r);
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Parse("short CSV row".into()))?
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(e.to_string()))
            };
            rows.push(DecayRow {
                n: num(0)? as usize,
                median: num(1)?,
                p90: num(2)?,
                std: num(3)?,
                se: num(4)?,
                used: 0,
                quarantined: 0,
            });
        }
        Ok(rows)
    }
}

fn non_increasing(v: &[f64], slack: f64) -> bool {
    v.windows(2).all(|w| w[1] <= (1.0 + slack) * w[0])
}

fn run_ladder(cfg: &ExperimentConfig, kind: DecayKind) -> Result<DecayReport> {
    let truth = admit(cfg)?;
    let ladder = cfg.n_ladder.clone().expect("validated");
    let process = cfg.spec.compile()?;
    let burn_in = cfg.burn_in.unwrap_or_else(|| process.default_burn_in());
    let mut rows = Vec::with_capacity(ladder.len());
    for (rung, &n) in ladder.iter().enumerate() {
        let sqrt_n = (n as f64).sqrt();
        let stats: Vec<Result<Option<f64>>> = (0..cfg.reps)
            .into_par_iter()
            .map_init(
                || (Workspace::default(), Vec::with_capacity(n)),
                |(work, x), rep| {
                    let mut rng = stream_rng(cfg.seed, ladder_stream(rung, rep));
                    match process.simulate_with(&mut rng, n, burn_in, work, x) {
                        Ok(()) => {}
                        Err(Error::Divergence { .. }) => return Ok(None),
                        Err(e) => return Err(e),
                    }
                    let v = match kind {
                        DecayKind::Bahadur => {
                            sqrt_n * bahadur_remainder(x, cfg.p, &truth.q_true, &truth.f_at_q)?
                        }
                        DecayKind::Representation => representation_gap(x, cfg.r, truth.mu, truth.a_r)?,
                    };
                    Ok(v.is_finite().then_some(v))
                },
            )
            .collect();
        let mut vals = Vec::with_capacity(cfg.reps);
        for s in stats {
            if let Some(v) = s? {
                vals.push(v);
            }
        }
        let used = vals.len();
        if used < 2 {
            return Err(Error::Parameter(format!("rung n = {n}: only {used} finite replications")));
        }
        let abs: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
        let sd = std_dev(&vals);
        rows.push(DecayRow {
            n,
            median: order_stat(&abs, 0.5),
            p90: order_stat(&abs, 0.9),
            std: sd,
            se: match kind {
                DecayKind::Bahadur => median_se(&abs),
                DecayKind::Representation => sd / (2.0 * (used as f64 - 1.0)).sqrt(),
            },
            used,
            quarantined: cfg.reps - used,
        });
    }
    let checked: Vec<String> = match kind {
        DecayKind::Bahadur => vec!["median".into(), "p90".into()],
        DecayKind::Representation => vec!["std".into()],
    };
    let enough = rows.iter().all(|r| r.used >= MIN_REPS_FOR_VERDICT);
    let verdict = if rows.len() < 2 || !enough {
        Verdict::Inconclusive
    } else {
        let ok = match kind {
            DecayKind::Bahadur => {
                non_increasing(&rows.iter().map(|r| r.median).collect::<Vec<_>>(), cfg.decay_slack)
                    && non_increasing(&rows.iter().map(|r| r.p90).collect::<Vec<_>>(), cfg.decay_slack)
            }
            DecayKind::Representation => {
                non_increasing(&rows.iter().map(|r| r.std).collect::<Vec<_>>(), cfg.decay_slack)
            }
        };
        Verdict::from_bool(ok)
    };
    Ok(DecayReport {
        kind,
        rows,
        checked,
        slack: cfg.decay_slack,
        verdict,
        truth,
        config_fingerprint: cfg.fingerprint(),
    })
}

/// Ladder of `|sqrt(n) R_n|` summaries for the quantile representation.
pub fn run_bahadur_experiment(cfg: &ExperimentConfig) -> Result<DecayReport> {
    run_ladder(cfg, DecayKind::Bahadur)
}

/// Ladder of summaries of the moment representation gap.
pub fn run_representation_experiment(cfg: &ExperimentConfig) -> Result<DecayReport> {
    run_ladder(cfg, DecayKind::Representation)
}
