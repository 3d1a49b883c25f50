use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use smoothmean::bandwidth::BandwidthPolicy;
use smoothmean::processes::{ProcessSpec, DEFAULT_TRUNCATION};
use smoothmean::randomness::{InnovationDist, MasterSeed};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "smoothmean",
    version,
    about = "Confidence intervals for the mean of dependent data by auxiliary kernel smoothing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the mean of a `y` column and report a confidence interval.
    Ci(CiArgs),
    /// Write a simulated series as a single-column CSV.
    Simulate(SimulateArgs),
    /// Replicated coverage study against a process with known mean.
    Coverage(ExperimentCommand),
    /// Replicated normality check of the studentised statistic.
    Normality(ExperimentCommand),
    /// Plug-in bandwidth for a `y` column.
    Bandwidth(BandwidthArgs),
    /// Variance-of-mean scaling probe for a process.
    Probe(ProbeArgs),
}

/// Process selection. With none of `--arfima-d`, `--chain-alpha`, `--coeffs`
/// the process is i.i.d. innovations plus `--shift`.
#[derive(Debug, Clone, Default, Args)]
pub struct ProcessArgs {
    /// ARFIMA(0, d, 0) memory parameter in (0, 0.5).
    #[arg(long)]
    pub arfima_d: Option<f64>,
    /// Signed-Pareto chain tail exponent in (1, 2).
    #[arg(long)]
    pub chain_alpha: Option<f64>,
    /// Comma-separated moving-average coefficients a_0,a_1,...
    #[arg(long)]
    pub coeffs: Option<String>,
    /// Innovation law: normal, uniform or chisq2.
    #[arg(long)]
    pub innovation: Option<String>,
    /// Added constant (the true mean).
    #[arg(long)]
    pub shift: Option<f64>,
    /// ARFIMA moving-average truncation lag.
    #[arg(long)]
    pub truncation: Option<usize>,
}

impl ProcessArgs {
    pub fn merged(self, file: ProcessArgs) -> ProcessArgs {
        ProcessArgs {
            arfima_d: self.arfima_d.or(file.arfima_d),
            chain_alpha: self.chain_alpha.or(file.chain_alpha),
            coeffs: self.coeffs.or(file.coeffs),
            innovation: self.innovation.or(file.innovation),
            shift: self.shift.or(file.shift),
            truncation: self.truncation.or(file.truncation),
        }
    }

    pub fn spec(&self) -> Result<ProcessSpec, CliError> {
        let chosen = [
            self.arfima_d.is_some(),
            self.chain_alpha.is_some(),
            self.coeffs.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        if chosen > 1 {
            return Err(CliError::config(
                "choose at most one of --arfima-d, --chain-alpha, --coeffs",
            ));
        }
        let innovation: InnovationDist = match &self.innovation {
            Some(s) => s.parse()?,
            None => InnovationDist::StdNormal,
        };
        let shift = self.shift.unwrap_or(0.0);
        let spec = if let Some(d) = self.arfima_d {
            ProcessSpec::Arfima {
                d,
                innovation,
                truncation: self.truncation.unwrap_or(DEFAULT_TRUNCATION),
                shift,
            }
        } else if let Some(alpha_tail) = self.chain_alpha {
            if self.shift.is_some() || self.innovation.is_some() {
                return Err(CliError::config(
                    "--shift and --innovation do not apply to the sign chain",
                ));
            }
            ProcessSpec::SignedParetoChain { alpha_tail }
        } else if let Some(c) = &self.coeffs {
            let coeffs = c
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|e| CliError::config(format!("--coeffs `{t}`: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            ProcessSpec::LinearProcess {
                coeffs,
                innovation,
                shift,
            }
        } else {
            ProcessSpec::Iid { innovation, shift }
        };
        if self.truncation.is_some() && self.arfima_d.is_none() {
            return Err(CliError::config(
                "--truncation only applies with --arfima-d",
            ));
        }
        spec.build()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct BandwidthFlags {
    /// Fixed bandwidth.
    #[arg(long = "h")]
    pub h: Option<f64>,
    /// Power-law bandwidth h = scale·n^-exp with exp in (0, 1).
    #[arg(long)]
    pub power_law_exp: Option<f64>,
    /// Scale of the power-law bandwidth.
    #[arg(long)]
    pub power_law_scale: Option<f64>,
    /// Plug-in MSE-optimal bandwidth.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub plug_in: Option<bool>,
}

impl BandwidthFlags {
    pub fn merged(self, file: BandwidthFlags) -> BandwidthFlags {
        BandwidthFlags {
            h: self.h.or(file.h),
            power_law_exp: self.power_law_exp.or(file.power_law_exp),
            power_law_scale: self.power_law_scale.or(file.power_law_scale),
            plug_in: self.plug_in.or(file.plug_in),
        }
    }

    /// `None` when no bandwidth flag was given.
    pub fn policy(&self) -> Result<Option<BandwidthPolicy>, CliError> {
        let plug_in = self.plug_in.unwrap_or(false);
        let count = [self.h.is_some(), self.power_law_exp.is_some(), plug_in]
            .iter()
            .filter(|b| **b)
            .count();
        if count > 1 {
            return Err(CliError::config(
                "choose at most one of --h, --power-law-exp, --plug-in",
            ));
        }
        if self.power_law_scale.is_some() && self.power_law_exp.is_none() {
            return Err(CliError::config(
                "--power-law-scale requires --power-law-exp",
            ));
        }
        let policy = if let Some(h) = self.h {
            Some(BandwidthPolicy::Fixed { h })
        } else if let Some(exponent) = self.power_law_exp {
            Some(BandwidthPolicy::PowerLaw {
                exponent,
                scale: self.power_law_scale.unwrap_or(1.0),
            })
        } else if plug_in {
            Some(BandwidthPolicy::PlugInOptimal)
        } else {
            None
        };
        if let Some(p) = &policy {
            p.validate()?;
        }
        Ok(policy)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SmoothingArgs {
    /// Kernel name: gaussian, epanechnikov, uniform.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Smoothing law: normal, uniform or uniform:a:b.
    #[arg(long)]
    pub smoothing: Option<String>,
}

impl SmoothingArgs {
    pub fn merged(self, file: SmoothingArgs) -> SmoothingArgs {
        SmoothingArgs {
            kernel: self.kernel.or(file.kernel),
            smoothing: self.smoothing.or(file.smoothing),
        }
    }
    pub fn kernel_name(&self) -> &str {
        self.kernel.as_deref().unwrap_or("gaussian")
    }
    pub fn smoothing_name(&self) -> &str {
        self.smoothing.as_deref().unwrap_or("normal")
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SeedArgs {
    /// Master seed, decimal or 0x-prefixed hexadecimal.
    #[arg(long)]
    pub seed: Option<String>,
    /// Draw the seed from OS entropy; the drawn value is recorded in the output.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub random_seed: Option<bool>,
}

impl SeedArgs {
    pub fn merged(self, file: SeedArgs) -> SeedArgs {
        SeedArgs {
            seed: self.seed.or(file.seed),
            random_seed: self.random_seed.or(file.random_seed),
        }
    }

    pub fn resolve(&self) -> Result<MasterSeed, CliError> {
        match (&self.seed, self.random_seed.unwrap_or(false)) {
            (Some(_), true) => Err(CliError::config("--seed and --random-seed are exclusive")),
            (Some(s), false) => Ok(s.parse()?),
            (None, true) => Ok(MasterSeed(os_entropy_seed())),
            (None, false) => Ok(MasterSeed(0)),
        }
    }
}

fn os_entropy_seed() -> u64 {
    use std::hash::{BuildHasher, Hasher};
    // RandomState keys are drawn from the OS on first use.
    let mut h = std::collections::hash_map::RandomState::new().build_hasher();
    h.write_u64(0x5eed);
    h.finish()
}

fn level_arg(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("confidence level must lie in (0, 1), got {v}"))
    }
}

#[derive(Debug, Args)]
pub struct CiArgs {
    /// CSV file with a single `y` column.
    pub input: PathBuf,
    #[command(flatten)]
    pub bandwidth: BandwidthFlags,
    #[command(flatten)]
    pub smoothing: SmoothingArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Confidence level in (0, 1).
    #[arg(long, default_value = "0.95", value_parser = level_arg)]
    pub level: f64,
    /// Declared decay exponent beta of var(mean) for the plug-in admissibility check.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    /// Series length.
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Experiment parameters. Flags win over a `--config` file.
#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    #[command(flatten)]
    pub bandwidth: BandwidthFlags,
    #[command(flatten)]
    pub smoothing: SmoothingArgs,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Series length per replicate.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of replicates.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Confidence level in (0, 1).
    #[arg(long)]
    pub level: Option<f64>,
    /// Declared decay exponent beta of var(mean); defaults to the process's own.
    #[arg(long)]
    pub beta: Option<f64>,
}

impl ExperimentArgs {
    pub fn merged(self, file: ExperimentArgs) -> ExperimentArgs {
        ExperimentArgs {
            process: self.process.merged(file.process),
            bandwidth: self.bandwidth.merged(file.bandwidth),
            smoothing: self.smoothing.merged(file.smoothing),
            seed: self.seed.merged(file.seed),
            n: self.n.or(file.n),
            replicates: self.replicates.or(file.replicates),
            level: self.level.or(file.level),
            beta: self.beta.or(file.beta),
        }
    }
}

/// TOML experiment file; keys are the long flag names.
#[derive(Debug, Default, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct ConfigFile {
    pub arfima_d: Option<f64>,
    pub chain_alpha: Option<f64>,
    pub coeffs: Option<String>,
    pub innovation: Option<String>,
    pub shift: Option<f64>,
    pub truncation: Option<usize>,
    pub h: Option<f64>,
    pub power_law_exp: Option<f64>,
    pub power_law_scale: Option<f64>,
    pub plug_in: Option<bool>,
    pub kernel: Option<String>,
    pub smoothing: Option<String>,
    pub seed: Option<SeedValue>,
    pub random_seed: Option<bool>,
    pub n: Option<usize>,
    pub replicates: Option<usize>,
    pub level: Option<f64>,
    pub beta: Option<f64>,
}

/// A seed written either as a TOML integer or as a string (`"0x2a"`).
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SeedValue {
    Int(u64),
    Text(String),
}

impl ConfigFile {
    pub fn read(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn into_args(self) -> ExperimentArgs {
        ExperimentArgs {
            process: ProcessArgs {
                arfima_d: self.arfima_d,
                chain_alpha: self.chain_alpha,
                coeffs: self.coeffs,
                innovation: self.innovation,
                shift: self.shift,
                truncation: self.truncation,
            },
            bandwidth: BandwidthFlags {
                h: self.h,
                power_law_exp: self.power_law_exp,
                power_law_scale: self.power_law_scale,
                plug_in: self.plug_in,
            },
            smoothing: SmoothingArgs {
                kernel: self.kernel,
                smoothing: self.smoothing,
            },
            seed: SeedArgs {
                seed: self.seed.map(|s| match s {
                    SeedValue::Int(v) => v.to_string(),
                    SeedValue::Text(t) => t,
                }),
                random_seed: self.random_seed,
            },
            n: self.n,
            replicates: self.replicates,
            level: self.level,
            beta: self.beta,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExperimentCommand {
    /// TOML file with experiment parameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Worker threads (0 = all cores). Never changes the output.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Include every replicate's interval in the report.
    #[arg(long)]
    pub per_replicate: bool,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BandwidthArgs {
    /// CSV file with a single `y` column.
    pub input: PathBuf,
    #[command(flatten)]
    pub smoothing: SmoothingArgs,
    /// Declared decay exponent beta of var(mean); enables the admissibility verdict.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    /// Comma-separated sample sizes (at least three, each ≥ 64).
    #[arg(long, default_value = "256,512,1024,2048,4096")]
    pub sizes: String,
    /// Replicates per size (≥ 50).
    #[arg(long, default_value_t = 200)]
    pub replicates: usize,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
