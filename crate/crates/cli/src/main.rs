//! `smoothmean` command-line front end.

mod args;
mod data;

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde::Serialize;

use smoothmean::bandwidth::{check_plug_in_admissible, optimal_bandwidth, PLUG_IN_MIN_BETA};
use smoothmean::estimator::sample_moments;
use smoothmean::inference::interval_for;
use smoothmean::kernels::kernel_by_name;
use smoothmean::montecarlo::{run_coverage_detailed, run_normality_check, with_workers};
use smoothmean::processes::{variance_scaling_probe, ProcessSpec};
use smoothmean::randomness::{replicate_seed, MasterSeed, RNG_ALGORITHM};
use smoothmean::smoothing::{sample_smoothing, smoothing_by_name};
use smoothmean::{BandwidthPolicy, CoverageExperiment};

use args::{
    BandwidthArgs, CiArgs, Cli, Command, ConfigFile, ExperimentArgs, ExperimentCommand, ProbeArgs,
    SimulateArgs,
};

pub const SCHEMA_VERSION: u32 = 1;

/// A failure with its process exit code: 2 for configuration or input
/// problems, 3 for statistical preconditions the data violate.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn statistical(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<smoothmean::Error> for CliError {
    fn from(e: smoothmean::Error) -> Self {
        if e.is_statistical() {
            CliError::statistical(e.to_string())
        } else {
            CliError::config(e.to_string())
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Document<C: Serialize, R: Serialize> {
    schema_version: u32,
    command: &'static str,
    config: C,
    report: R,
    /// Wall-clock time of emission; the only field that varies between runs.
    generated_at_unix: u64,
}

fn emit<C: Serialize, R: Serialize>(
    command: &'static str,
    config: C,
    report: R,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let doc = Document {
        schema_version: SCHEMA_VERSION,
        command,
        config,
        report,
        generated_at_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::config(format!("serialising report: {e}")))?;
    text.push('\n');
    write_output(&text, out)
}

fn write_output(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
        }
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::input(format!("stdout: {e}"))),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CiConfig {
    input: String,
    bandwidth: BandwidthPolicy,
    kernel: String,
    smoothing: String,
    level: f64,
    beta: Option<f64>,
    master_seed: MasterSeed,
    rng: &'static str,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CiReport {
    h: f64,
    estimate: smoothmean::EstimateResult,
    interval: smoothmean::ConfidenceInterval,
}

fn cmd_ci(a: CiArgs) -> Result<(), CliError> {
    let y = data::read_series(&a.input)?;
    let policy = a
        .bandwidth
        .policy()?
        .unwrap_or(BandwidthPolicy::PlugInOptimal);
    policy.check_admissible(a.beta)?;
    let kernel = kernel_by_name(a.smoothing.kernel_name())?;
    let smoothing = smoothing_by_name(a.smoothing.smoothing_name())?;
    let seed = a.seed.resolve()?;
    let (y_bar, y_sq_bar) = sample_moments(&y)?;
    let h = policy.resolve(
        y_sq_bar,
        y_bar,
        y.len(),
        kernel.as_ref(),
        smoothing.as_ref(),
    )?;
    let mut rng = replicate_seed(seed, 0);
    let x = sample_smoothing(smoothing.as_ref(), y.len(), &mut rng)?;
    let (estimate, interval) =
        interval_for(&y, &x, kernel.as_ref(), smoothing.as_ref(), h, a.level)?;
    let config = CiConfig {
        input: a.input.display().to_string(),
        bandwidth: policy,
        kernel: kernel.name().to_string(),
        smoothing: smoothing.name(),
        level: a.level,
        beta: a.beta,
        master_seed: seed,
        rng: RNG_ALGORITHM,
    };
    emit(
        "ci",
        config,
        CiReport {
            h,
            estimate,
            interval,
        },
        a.out.as_deref(),
    )
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), CliError> {
    let spec = a.process.spec()?;
    if a.n == 0 {
        return Err(CliError::config("--n must be at least 1"));
    }
    let seed = a.seed.resolve()?;
    let process = spec.build()?;
    let mut rng = replicate_seed(seed, 0);
    let y = process.generate(a.n, &mut rng);
    if a.seed.random_seed.unwrap_or(false) {
        eprintln!("seed: {seed}");
    }
    write_output(&data::format_series(&y), a.out.as_deref())
}

/// Resolves the experiment; the default bandwidth is the plug-in rule when
/// admissible and `n^-2d` for ARFIMA otherwise.
fn build_experiment(cmd: &ExperimentCommand) -> Result<CoverageExperiment, CliError> {
    let file = match &cmd.config {
        Some(path) => ConfigFile::read(path)?.into_args(),
        None => ExperimentArgs::default(),
    };
    let a = cmd.experiment.clone().merged(file);
    let spec = a.process.spec()?;
    let n = a.n.ok_or_else(|| CliError::config("--n is required"))?;
    let replicates = a
        .replicates
        .ok_or_else(|| CliError::config("--replicates is required"))?;
    let seed = a.seed.resolve()?;
    let beta = match a.beta {
        Some(b) => b,
        None => spec.build()?.variance_decay_exponent(),
    };
    let policy = match a.bandwidth.policy()? {
        Some(p) => p,
        None if check_plug_in_admissible(beta) => BandwidthPolicy::PlugInOptimal,
        None => match spec {
            ProcessSpec::Arfima { d, .. } => BandwidthPolicy::power_law(2.0 * d),
            _ => {
                return Err(CliError::config(format!(
                    "var(mean) decays like n^-{beta}, too slowly for the plug-in rule \
                     (needs beta > {PLUG_IN_MIN_BETA}, i.e. var(mean) = o(n^-4/5)); \
                     pass --h or --power-law-exp"
                )))
            }
        },
    };
    let mut e = CoverageExperiment::new(spec, n, replicates, seed)
        .with_bandwidth(policy)
        .with_kernel(kernel_by_name(a.smoothing.kernel_name())?)
        .with_smoothing(smoothing_by_name(a.smoothing.smoothing_name())?);
    if let Some(level) = a.level {
        e = e.with_level(level);
    }
    e.memory_exponent = a.beta;
    e.prepare()?;
    Ok(e)
}

fn cmd_coverage(cmd: ExperimentCommand) -> Result<(), CliError> {
    let e = build_experiment(&cmd)?;
    let report = with_workers(cmd.workers, || run_coverage_detailed(&e, cmd.per_replicate))??;
    emit("coverage", e.echo(), report, cmd.out.as_deref())
}

fn cmd_normality(cmd: ExperimentCommand) -> Result<(), CliError> {
    let e = build_experiment(&cmd)?;
    let report = with_workers(cmd.workers, || run_normality_check(&e))??;
    emit("normality", e.echo(), report, cmd.out.as_deref())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct BandwidthConfig {
    input: String,
    kernel: String,
    smoothing: String,
    beta: Option<f64>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct BandwidthReport {
    h_o: f64,
    n: usize,
    y_bar: f64,
    y_sq_bar: f64,
    kernel_a: f64,
    kernel_b: f64,
    f_zero: f64,
    f_second_zero: f64,
    admissible: Option<bool>,
    verdict: String,
}

fn cmd_bandwidth(a: BandwidthArgs) -> Result<(), CliError> {
    let y = data::read_series(&a.input)?;
    let kernel = kernel_by_name(a.smoothing.kernel_name())?;
    let smoothing = smoothing_by_name(a.smoothing.smoothing_name())?;
    let (y_bar, y_sq_bar) = sample_moments(&y)?;
    let h_o = optimal_bandwidth(
        y_sq_bar,
        y_bar,
        y.len(),
        kernel.as_ref(),
        smoothing.as_ref(),
    )?;
    let c = kernel.constants()?;
    let admissible = a.beta.map(check_plug_in_admissible);
    let verdict = match (a.beta, admissible) {
        (Some(b), Some(true)) => format!("admissible: beta = {b} > {PLUG_IN_MIN_BETA}"),
        (Some(b), _) => format!(
            "inadmissible: beta = {b} <= {PLUG_IN_MIN_BETA}; the plug-in rule needs \
             var(mean) = o(n^-4/5), use a power-law bandwidth"
        ),
        (None, _) => "not checked: pass --beta to test admissibility".to_string(),
    };
    let report = BandwidthReport {
        h_o,
        n: y.len(),
        y_bar,
        y_sq_bar,
        kernel_a: c.a,
        kernel_b: c.b,
        f_zero: smoothing.density_at_zero()?,
        f_second_zero: smoothing.second_derivative_at_zero()?,
        admissible,
        verdict,
    };
    let config = BandwidthConfig {
        input: a.input.display().to_string(),
        kernel: kernel.name().to_string(),
        smoothing: smoothing.name(),
        beta: a.beta,
    };
    emit("bandwidth", config, report, a.out.as_deref())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ProbeConfig {
    process: ProcessSpec,
    sample_sizes: Vec<usize>,
    replicates: usize,
    master_seed: MasterSeed,
    rng: &'static str,
}

fn cmd_probe(a: ProbeArgs) -> Result<(), CliError> {
    let spec = a.process.spec()?;
    let sizes = a
        .sizes
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| CliError::config(format!("--sizes `{t}`: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let seed = a.seed.resolve()?;
    let process = spec.build()?;
    let report = with_workers(a.workers, || {
        variance_scaling_probe(process.as_ref(), &sizes, a.replicates, seed)
    })??;
    let config = ProbeConfig {
        process: spec,
        sample_sizes: sizes,
        replicates: a.replicates,
        master_seed: seed,
        rng: RNG_ALGORITHM,
    };
    emit("probe", config, report, a.out.as_deref())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ci(a) => cmd_ci(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Coverage(a) => cmd_coverage(a),
        Command::Normality(a) => cmd_normality(a),
        Command::Bandwidth(a) => cmd_bandwidth(a),
        Command::Probe(a) => cmd_probe(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
