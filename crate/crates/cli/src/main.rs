mod manifest;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use fclt_core::conditions::{check_process, ConditionReport};
use fclt_core::estimators::estimator_vector;
use fclt_core::harness::{run_experiment, ExperimentConfig, ExperimentReport};
use fclt_core::ned::{ned_scan, NedFunctional, NedOptions};
use fclt_core::process_sim::{Path as SamplePath, ProcessSpec};
use serde::Serialize;
use thiserror::Error;

use manifest::{fingerprint_str, RunManifest};

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] fclt_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Simulation, condition checks and Monte Carlo diagnostics for sample
/// quantiles and absolute central moments of dependent processes.
#[derive(Debug, Parser)]
#[command(name = "fclt-lab", version)]
struct Cli {
    /// Worker threads [default: number of logical cores]
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one path and write it as a single-column CSV (header `x`)
    Simulate(SimulateArgs),
    /// Check the moment and stability conditions of a process for a given r
    Check(CheckArgs),
    /// Compute the sample quantile and r-th absolute central moment of a CSV sample
    Estimate(EstimateArgs),
    /// Estimate NED coefficients nu(k) for k = 1..=kmax and write them as CSV
    NedScan(NedScanArgs),
    /// Run a Monte Carlo experiment described by a JSON config
    Mc(McArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Process specification (JSON)
    #[arg(long)]
    spec: PathBuf,
    /// Path length
    #[arg(long)]
    n: usize,
    /// Master seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Moment order
    #[arg(long, default_value_t = 2)]
    r: u32,
    /// Output JSON [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// CSV with a column named `x`
    #[arg(long)]
    input: PathBuf,
    /// Quantile level in (0, 1)
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Moment order
    #[arg(long, default_value_t = 2)]
    r: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NedScanArgs {
    #[arg(long)]
    spec: PathBuf,
    /// identity, abs_pow:<r> or indicator_leq:<x>
    #[arg(long, default_value = "identity")]
    functional: NedFunctional,
    /// Largest lag k
    #[arg(long, default_value_t = 15)]
    kmax: usize,
    /// Coupled redraws per sample
    #[arg(long, default_value_t = 64)]
    reps: usize,
    /// Independent conditioning samples
    #[arg(long, default_value_t = 4096)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV (k, nu_hat, se, nu_hat_jk) [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct McArgs {
    /// Experiment configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's n
    #[arg(long)]
    n: Option<usize>,
    /// Overrides the config's reps
    #[arg(long)]
    reps: Option<usize>,
    /// Overrides the config's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Report JSON; decay experiments also write `<out stem>.csv` [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_error(e),
    }
}

fn report_error(e: CliError) -> ExitCode {
    match e {
        CliError::Core(fclt_core::Error::Refused(reports)) => {
            eprintln!("refused: preconditions not satisfied");
            if let Some(c) = reports.iter().find(|r| r.condition_name == "causality") {
                eprintln!("smallest root modulus of Phi: {}", c.computed_value);
            }
            eprintln!("{}", serde_json::to_string_pretty(&reports).expect("reports serialise"));
            ExitCode::from(1)
        }
        CliError::Core(fclt_core::Error::NonCausal { modulus }) => {
            eprintln!("refused: non-causal ARMA, smallest root modulus {modulus}");
            eprintln!("{}", serde_json::to_string_pretty(&[causality_report(modulus)]).expect("report serialises"));
            ExitCode::from(1)
        }
        other => {
            eprintln!("error: {other}");
            ExitCode::from(2)
        }
    }
}

fn causality_report(modulus: f64) -> ConditionReport {
    use fclt_core::conditions::{Comparison, Method};
    ConditionReport::new(
        "causality",
        "all roots of Phi(z) outside the unit circle",
        modulus,
        1.0,
        Comparison::Above,
        Method::ClosedForm,
    )
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Check(a) => check(a),
        Command::Estimate(a) => estimate(a),
        Command::NedScan(a) => ned(a),
        Command::Mc(a) => mc(a),
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.into(), source })?;
    }
    fs::write(path, bytes).map_err(|source| CliError::Io { path: path.into(), source })
}

fn read_spec(path: &Path) -> CliResult<ProcessSpec> {
    Ok(ProcessSpec::from_json(&read_text(path)?)?)
}

/// Serialises `value`, stamping JSON objects with the manifest hash.
fn json_bytes<T: Serialize>(value: &T, manifest_hash: Option<&str>) -> Vec<u8> {
    let mut v = serde_json::to_value(value).expect("output serialises");
    if let (Some(h), serde_json::Value::Object(map)) = (manifest_hash, &mut v) {
        map.insert("manifest_hash".into(), h.into());
    }
    let mut text = serde_json::to_string_pretty(&v).expect("output serialises");
    text.push('\n');
    text.into_bytes()
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> fclt_core::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn to_stdout(bytes: &[u8]) -> CliResult<()> {
    std::io::stdout()
        .write_all(bytes)
        .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
}

enum Output {
    Json(Box<dyn Fn(Option<&str>) -> Vec<u8>>),
    Raw(Vec<u8>),
}

/// Writes the outputs and their manifest, or prints the first output when
/// no path was given.
fn emit(
    command: &str,
    fingerprint: String,
    seed: u64,
    out: Option<&Path>,
    outputs: Vec<(PathBuf, Output)>,
    started: Instant,
) -> CliResult<()> {
    let Some(_) = out else {
        let bytes = match &outputs[0].1 {
            Output::Json(f) => f(None),
            Output::Raw(b) => b.clone(),
        };
        return to_stdout(&bytes);
    };
    let paths: Vec<PathBuf> = outputs.iter().map(|(p, _)| p.clone()).collect();
    let manifest = RunManifest::new(command, fingerprint, seed, &paths);
    for (path, o) in &outputs {
        let bytes = match o {
            Output::Json(f) => f(Some(&manifest.manifest_hash)),
            Output::Raw(b) => b.clone(),
        };
        write_bytes(path, &bytes)?;
    }
    let first = paths[0].clone();
    manifest
        .finish(started.elapsed().as_secs_f64())
        .map_err(|source| CliError::Io { path: first, source })?;
    Ok(())
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let started = Instant::now();
    let spec = read_spec(&a.spec)?;
    let process = spec.compile()?;
    let path = process.simulate(a.n, process.default_burn_in(), a.seed, 0)?;
    let bytes = csv_bytes(|b| path.write_csv(b))?;
    let fp = fingerprint_str(&format!("{}|n={}", spec.fingerprint(), a.n));
    let outputs = vec![(a.out.clone().unwrap_or_default(), Output::Raw(bytes))];
    emit("simulate", fp, a.seed, a.out.as_deref(), outputs, started)
}

fn check(a: CheckArgs) -> CliResult<()> {
    let started = Instant::now();
    let spec = read_spec(&a.spec)?;
    let reports = match check_process(&spec, a.r) {
        Ok(r) => r,
        Err(fclt_core::Error::NonCausal { modulus }) => vec![causality_report(modulus)],
        Err(e) => return Err(e.into()),
    };
    let fp = fingerprint_str(&format!("{}|r={}", spec.fingerprint(), a.r));
    let outputs = vec![(
        a.out.clone().unwrap_or_default(),
        Output::Json(Box::new(move |h| json_bytes(&reports, h))),
    )];
    emit("check", fp, 0, a.out.as_deref(), outputs, started)
}

fn estimate(a: EstimateArgs) -> CliResult<()> {
    let started = Instant::now();
    let text = read_text(&a.input)?;
    let sample = SamplePath::read_csv(text.as_bytes())?;
    let pair = estimator_vector(&sample.values, a.p, a.r)?;
    let fp = fingerprint_str(&format!("{}|p={}|r={}", fingerprint_str(&text), a.p, a.r));
    let outputs = vec![(
        a.out.clone().unwrap_or_default(),
        Output::Json(Box::new(move |h| json_bytes(&pair, h))),
    )];
    emit("estimate", fp, 0, a.out.as_deref(), outputs, started)
}

fn ned(a: NedScanArgs) -> CliResult<()> {
    let started = Instant::now();
    if a.kmax == 0 {
        return Err(CliError::Usage("--kmax must be at least 1".into()));
    }
    let spec = read_spec(&a.spec)?;
    let opts = NedOptions { redraws: a.reps, samples: a.n, ..NedOptions::new(a.seed) };
    let ks: Vec<usize> = (1..=a.kmax).collect();
    let scan = ned_scan(&spec, a.functional, &ks, &opts)?;
    if let Some(fit) = &scan.fit {
        eprintln!("decay fit: {:?} rate {} (R^2 {})", fit.model, fit.rate, fit.r_squared);
    }
    let bytes = csv_bytes(|b| scan.write_csv(b))?;
    let fp = fingerprint_str(&format!(
        "{}|{}|kmax={}|reps={}|n={}",
        spec.fingerprint(),
        a.functional,
        a.kmax,
        a.reps,
        a.n
    ));
    let outputs = vec![(a.out.clone().unwrap_or_default(), Output::Raw(bytes))];
    emit("ned-scan", fp, a.seed, a.out.as_deref(), outputs, started)
}

fn mc(a: McArgs) -> CliResult<()> {
    let started = Instant::now();
    let mut cfg = ExperimentConfig::from_json(&read_text(&a.config)?)?;
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(reps) = a.reps {
        cfg.reps = reps;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let report = run_experiment(&cfg)?;
    eprintln!("verdict: {:?}", report.verdict());
    let mut outputs = Vec::new();
    let out = a.out.clone().unwrap_or_default();
    let table = match &report {
        ExperimentReport::Bahadur(d) | ExperimentReport::Representation(d) => {
            Some(csv_bytes(|b| d.write_csv(b))?)
        }
        _ => None,
    };
    outputs.push((out.clone(), Output::Json(Box::new(move |h| json_bytes(&report, h)))));
    if let (Some(bytes), Some(_)) = (table, &a.out) {
        outputs.push((out.with_extension("csv"), Output::Raw(bytes)));
    }
    emit("mc", cfg.fingerprint(), cfg.seed, a.out.as_deref(), outputs, started)
}
