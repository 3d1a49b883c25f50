//! Replicated experiments: interval coverage against the known mean of a
//! [`Process`], and the normality of the studentised statistic
//! `T = √(nh) (r̂ - μ) / √(ȳ₂ B / f(0))`.
//!
//! Replicate `i` draws its series and then its smoothing sample from
//! `replicate_seed(master, i)`. Outcomes are collected in index order, so a
//! report does not depend on the number of worker threads, and a run over
//! `[0, a+b)` equals the concatenation of runs over `[0, a)` and `[a, a+b)`.

use std::ops::Range;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::bandwidth::BandwidthPolicy;
use crate::error::{Error, Result};
use crate::estimator::estimate;
use crate::inference::{
    check_level, confidence_interval, critical_value, normal_quantile, ConfidenceInterval,
};
use crate::kernels::{GaussianKernel, Kernel};
use crate::numeric::{mean_and_variance, normal_cdf};
use crate::processes::{Process, ProcessSpec};
use crate::randomness::{replicate_seed, MasterSeed, RNG_ALGORITHM};
use crate::smoothing::{sample_smoothing, SmoothingDistribution, StdNormalSmoothing};

#[derive(Debug, Clone)]
pub struct CoverageExperiment {
    pub process: ProcessSpec,
    pub n: usize,
    pub level: f64,
    pub bandwidth: BandwidthPolicy,
    pub kernel: Arc<dyn Kernel>,
    pub smoothing: Arc<dyn SmoothingDistribution>,
    pub replicates: usize,
    pub master_seed: MasterSeed,
    /// Declared decay exponent of `var(Ȳ_n)`; defaults to the process's own.
    pub memory_exponent: Option<f64>,
}

impl CoverageExperiment {
    /// Gaussian kernel, standard normal smoothing, 95%, plug-in bandwidth.
    pub fn new(process: ProcessSpec, n: usize, replicates: usize, master_seed: MasterSeed) -> Self {
        Self {
            process,
            n,
            level: 0.95,
            bandwidth: BandwidthPolicy::PlugInOptimal,
            kernel: Arc::new(GaussianKernel),
            smoothing: Arc::new(StdNormalSmoothing),
            replicates,
            master_seed,
            memory_exponent: None,
        }
    }

    pub fn with_level(mut self, level: f64) -> Self {
        self.level = level;
        self
    }

    pub fn with_bandwidth(mut self, policy: BandwidthPolicy) -> Self {
        self.bandwidth = policy;
        self
    }

    pub fn with_kernel(mut self, kernel: Arc<dyn Kernel>) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn with_smoothing(mut self, smoothing: Arc<dyn SmoothingDistribution>) -> Self {
        self.smoothing = smoothing;
        self
    }

    /// Checks the whole configuration before any replicate runs.
    pub fn prepare(&self) -> Result<PreparedExperiment> {
        if self.replicates == 0 {
            return Err(Error::param("replicates", "need at least one replicate"));
        }
        if self.n == 0 {
            return Err(Error::param("n", "series length must be at least 1"));
        }
        check_level(self.level)?;
        let process = self.process.build()?;
        let beta = self
            .memory_exponent
            .unwrap_or_else(|| process.variance_decay_exponent());
        self.bandwidth.check_admissible(Some(beta))?;
        let f0 = self.smoothing.density_at_zero()?;
        let b = self.kernel.constants()?.b;
        if self.bandwidth == BandwidthPolicy::PlugInOptimal {
            // surface a missing f''(0) now rather than once per replicate
            self.smoothing.second_derivative_at_zero()?;
        }
        Ok(PreparedExperiment {
            config: self.clone(),
            process,
            f0,
            b,
        })
    }

    pub fn echo(&self) -> ExperimentEcho {
        ExperimentEcho {
            process: self.process.clone(),
            n: self.n,
            level: self.level,
            bandwidth: self.bandwidth,
            kernel: self.kernel.name().to_string(),
            smoothing: self.smoothing.name(),
            replicates: self.replicates,
            master_seed: self.master_seed,
            memory_exponent: self.memory_exponent,
            rng: RNG_ALGORITHM,
        }
    }
}

/// Resolved configuration as echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentEcho {
    pub process: ProcessSpec,
    pub n: usize,
    pub level: f64,
    pub bandwidth: BandwidthPolicy,
    pub kernel: String,
    pub smoothing: String,
    pub replicates: usize,
    pub master_seed: MasterSeed,
    pub memory_exponent: Option<f64>,
    pub rng: &'static str,
}

/// A validated experiment with its process built.
#[derive(Debug)]
pub struct PreparedExperiment {
    config: CoverageExperiment,
    process: Arc<dyn Process>,
    f0: f64,
    b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplicateOutcome {
    pub index: usize,
    pub h: Option<f64>,
    pub r_hat: Option<f64>,
    pub y_sq_bar: Option<f64>,
    pub interval: Option<ConfidenceInterval>,
    pub hit: bool,
    pub invalid_reason: Option<String>,
}

impl ReplicateOutcome {
    fn invalid(index: usize, reason: String) -> Self {
        Self {
            index,
            h: None,
            r_hat: None,
            y_sq_bar: None,
            interval: None,
            hit: false,
            invalid_reason: Some(reason),
        }
    }
}

impl PreparedExperiment {
    pub fn config(&self) -> &CoverageExperiment {
        &self.config
    }

    pub fn true_mean(&self) -> f64 {
        self.process.true_mean()
    }

    pub fn run_replicate(&self, index: usize) -> ReplicateOutcome {
        let e = &self.config;
        let mut rng = replicate_seed(e.master_seed, index as u64);
        let y = self.process.generate(e.n, &mut rng);
        let x = match sample_smoothing(e.smoothing.as_ref(), e.n, &mut rng) {
            Ok(x) => x,
            Err(err) => return ReplicateOutcome::invalid(index, err.to_string()),
        };
        let result = (|| {
            let (y_bar, y_sq_bar) = crate::estimator::sample_moments(&y)?;
            let h = e.bandwidth.resolve(
                y_sq_bar,
                y_bar,
                e.n,
                e.kernel.as_ref(),
                e.smoothing.as_ref(),
            )?;
            let est = estimate(&y, &x, e.kernel.as_ref(), self.f0, h)?;
            let ci = confidence_interval(
                est.r_hat,
                est.y_sq_bar,
                est.n,
                h,
                e.kernel.as_ref(),
                self.f0,
                e.level,
            )?;
            Ok::<_, Error>((h, est, ci))
        })();
        match result {
            Ok((h, est, ci)) => ReplicateOutcome {
                index,
                h: Some(h),
                r_hat: Some(est.r_hat),
                y_sq_bar: Some(est.y_sq_bar),
                hit: ci.contains(self.process.true_mean()),
                interval: Some(ci),
                invalid_reason: None,
            },
            Err(err) => ReplicateOutcome::invalid(index, err.to_string()),
        }
    }

    /// Outcomes for replicate indices in `range`, in index order.
    pub fn run_range(&self, range: Range<usize>) -> Vec<ReplicateOutcome> {
        range
            .into_par_iter()
            .map(|i| self.run_replicate(i))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BinomialInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

/// Wilson score interval for `hits` successes out of `trials`.
pub fn coverage_binomial_interval(
    hits: usize,
    trials: usize,
    level: f64,
) -> Result<BinomialInterval> {
    if trials == 0 || hits > trials {
        return Err(Error::param(
            "hits",
            format!("need 0 ≤ hits ≤ trials and trials ≥ 1, got {hits}/{trials}"),
        ));
    }
    let z = critical_value(level)?;
    let m = trials as f64;
    let p = hits as f64 / m;
    let z2 = z * z;
    let denom = 1.0 + z2 / m;
    let center = (p + z2 / (2.0 * m)) / denom;
    let half = z * (p * (1.0 - p) / m + z2 / (4.0 * m * m)).sqrt() / denom;
    Ok(BinomialInterval {
        lower: (center - half).max(0.0),
        upper: (center + half).min(1.0),
        level,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InvalidReplicate {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CoverageReport {
    pub hits: usize,
    pub replicates: usize,
    pub valid_count: usize,
    pub coverage: f64,
    pub coverage_ci: BinomialInterval,
    pub mean_half_width: f64,
    pub median_half_width: f64,
    pub mean_bandwidth: f64,
    pub true_mean: f64,
    pub invalid: Vec<InvalidReplicate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_replicate: Option<Vec<ReplicateOutcome>>,
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

impl CoverageReport {
    /// Folds outcomes (in index order) into a report.
    pub fn from_outcomes(
        outcomes: Vec<ReplicateOutcome>,
        level: f64,
        true_mean: f64,
        keep_per_replicate: bool,
    ) -> Result<Self> {
        let replicates = outcomes.len();
        let hits = outcomes.iter().filter(|o| o.hit).count();
        let invalid: Vec<InvalidReplicate> = outcomes
            .iter()
            .filter_map(|o| {
                o.invalid_reason.as_ref().map(|r| InvalidReplicate {
                    index: o.index,
                    reason: r.clone(),
                })
            })
            .collect();
        let mut widths: Vec<f64> = outcomes
            .iter()
            .filter_map(|o| o.interval.map(|c| c.half_width))
            .collect();
        let hs: Vec<f64> = outcomes.iter().filter_map(|o| o.h).collect();
        let mean_half_width = mean_and_variance(&widths).0;
        let mean_bandwidth = mean_and_variance(&hs).0;
        Ok(Self {
            hits,
            replicates,
            valid_count: replicates - invalid.len(),
            coverage: hits as f64 / replicates as f64,
            coverage_ci: coverage_binomial_interval(hits, replicates, level)?,
            mean_half_width,
            median_half_width: median(&mut widths),
            mean_bandwidth,
            true_mean,
            invalid,
            per_replicate: keep_per_replicate.then_some(outcomes),
        })
    }
}

/// Runs `f` on a pool of `workers` threads (`0` means the global pool).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}

pub fn run_coverage(e: &CoverageExperiment) -> Result<CoverageReport> {
    run_coverage_detailed(e, false)
}

pub fn run_coverage_detailed(
    e: &CoverageExperiment,
    keep_per_replicate: bool,
) -> Result<CoverageReport> {
    let prepared = e.prepare()?;
    let outcomes = prepared.run_range(0..e.replicates);
    CoverageReport::from_outcomes(outcomes, e.level, prepared.true_mean(), keep_per_replicate)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NormalityReport {
    pub standardized_stats: Vec<f64>,
    pub ks_statistic: f64,
    /// `F̂(z_p) - p` at `p = 0.1, ..., 0.9`, with `F̂` the empirical CDF of `T`.
    pub decile_deviations: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub valid_count: usize,
    pub invalid: Vec<InvalidReplicate>,
}

/// Kolmogorov-Smirnov distance between `samples` and `N(0, 1)`.
pub fn ks_statistic(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = normal_cdf(x);
            (c - i as f64 / n).max((i + 1) as f64 / n - c)
        })
        .fold(0.0, f64::max)
}

/// `F̂(Φ⁻¹(p)) - p` at the nine deciles.
pub fn decile_deviations(samples: &[f64]) -> Vec<f64> {
    let n = samples.len() as f64;
    (1..=9)
        .map(|i| {
            let p = i as f64 / 10.0;
            let z = normal_quantile(p).expect("decile in (0, 1)");
            samples.iter().filter(|&&t| t <= z).count() as f64 / n - p
        })
        .collect()
}

pub fn run_normality_check(e: &CoverageExperiment) -> Result<NormalityReport> {
    let prepared = e.prepare()?;
    let mu = prepared.true_mean();
    let outcomes = prepared.run_range(0..e.replicates);
    let mut stats = Vec::with_capacity(outcomes.len());
    let mut invalid = Vec::new();
    for o in &outcomes {
        match (o.h, o.r_hat, o.y_sq_bar) {
            (Some(h), Some(r), Some(s)) if s > 0.0 => {
                let scale = (s * prepared.b / prepared.f0).sqrt();
                stats.push((e.n as f64 * h).sqrt() * (r - mu) / scale);
            }
            _ => invalid.push(InvalidReplicate {
                index: o.index,
                reason: o
                    .invalid_reason
                    .clone()
                    .unwrap_or_else(|| "zero second moment".into()),
            }),
        }
    }
    let (mean, variance) = mean_and_variance(&stats);
    Ok(NormalityReport {
        ks_statistic: ks_statistic(&stats),
        decile_deviations: decile_deviations(&stats),
        mean,
        variance,
        valid_count: stats.len(),
        invalid,
        standardized_stats: stats,
    })
}
