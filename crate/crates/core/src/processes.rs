//! Stationary test processes with known mean and known memory:
//!
//! * i.i.d. noise,
//! * causal linear processes `Y_k = μ + Σ_{i=0}^{m} a_i ξ_{k-i}`,
//! * ARFIMA(0, d, 0) as the linear process with `a_i = Γ(i+d)/(Γ(d)Γ(i+1))`
//!   truncated at lag `m`,
//! * the signed-Pareto reversible chain, whose sign process has
//!   `var(S_n) ≍ n^{2/α}`.
//!
//! Each variant is a [`Process`] trait object built from a serialisable
//! [`ProcessSpec`]. The module also carries the diagnostics used to check
//! memory: sample autocovariances and a Monte Carlo probe of how the variance
//! of the mean (or partial sum) scales with `n`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{adaptive_simpson, mean_and_variance, CompensatedSum};
use crate::randomness::{draw_innovation, replicate_seed, MasterSeed, RngState};

pub use crate::randomness::InnovationDist;

/// Default MA truncation lag for ARFIMA generation.
pub const DEFAULT_TRUNCATION: usize = 10_000;

/// Above this many multiply-adds the filter switches to FFT convolution.
const DIRECT_CONVOLUTION_LIMIT: usize = 1 << 18;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum ProcessSpec {
    #[serde(rename_all = "camelCase")]
    Iid {
        innovation: InnovationDist,
        shift: f64,
    },
    #[serde(rename_all = "camelCase")]
    LinearProcess {
        coeffs: Vec<f64>,
        innovation: InnovationDist,
        shift: f64,
    },
    #[serde(rename_all = "camelCase")]
    Arfima {
        d: f64,
        innovation: InnovationDist,
        truncation: usize,
        shift: f64,
    },
    #[serde(rename_all = "camelCase")]
    SignedParetoChain { alpha_tail: f64 },
}

impl ProcessSpec {
    pub fn arfima(d: f64, shift: f64) -> Self {
        ProcessSpec::Arfima {
            d,
            innovation: InnovationDist::StdNormal,
            truncation: DEFAULT_TRUNCATION,
            shift,
        }
    }

    pub fn iid_normal(shift: f64) -> Self {
        ProcessSpec::Iid {
            innovation: InnovationDist::StdNormal,
            shift,
        }
    }

    pub fn build(&self) -> Result<Arc<dyn Process>> {
        Ok(match self {
            ProcessSpec::Iid { innovation, shift } => Arc::new(IidProcess {
                innovation: *innovation,
                shift: check_shift(*shift)?,
            }),
            ProcessSpec::LinearProcess {
                coeffs,
                innovation,
                shift,
            } => Arc::new(LinearProcess::new(coeffs.clone(), *innovation, *shift)?),
            ProcessSpec::Arfima {
                d,
                innovation,
                truncation,
                shift,
            } => Arc::new(ArfimaProcess::new(*d, *innovation, *truncation, *shift)?),
            ProcessSpec::SignedParetoChain { alpha_tail } => {
                Arc::new(SignedParetoChain::new(*alpha_tail)?)
            }
        })
    }
}

fn check_shift(shift: f64) -> Result<f64> {
    if shift.is_finite() {
        Ok(shift)
    } else {
        Err(Error::param(
            "shift",
            format!("must be finite, got {shift}"),
        ))
    }
}

/// Which Monte Carlo variance the scaling probe tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ProbeTarget {
    /// `var(Ȳ_n)`
    Mean,
    /// `var(S_n)`
    PartialSum,
}

pub trait Process: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// A series of length `n`, deterministic given `rng`.
    fn generate(&self, n: usize, rng: &mut RngState) -> Vec<f64>;

    /// Known stationary mean.
    fn true_mean(&self) -> f64;

    /// `β` such that `var(Ȳ_n) ≍ n^-β`.
    fn variance_decay_exponent(&self) -> f64;

    fn probe_target(&self) -> ProbeTarget {
        ProbeTarget::Mean
    }
}

#[derive(Debug, Clone)]
pub struct IidProcess {
    innovation: InnovationDist,
    shift: f64,
}

impl Process for IidProcess {
    fn name(&self) -> &'static str {
        "iid"
    }
    fn generate(&self, n: usize, rng: &mut RngState) -> Vec<f64> {
        (0..n)
            .map(|_| self.shift + draw_innovation(self.innovation, rng))
            .collect()
    }
    fn true_mean(&self) -> f64 {
        self.shift
    }
    fn variance_decay_exponent(&self) -> f64 {
        1.0
    }
}

struct FilterPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    coeff_spectrum: Vec<Complex<f64>>,
}

/// Causal moving-average filter with cached FFT plans per transform length.
pub struct LinearFilter {
    coeffs: Vec<f64>,
    plans: Mutex<HashMap<usize, Arc<FilterPlan>>>,
}

impl fmt::Debug for LinearFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearFilter")
            .field("lags", &self.coeffs.len())
            .finish()
    }
}

impl LinearFilter {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Empty("filter coefficients"));
        }
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::param(
                "coeffs",
                format!("non-finite coefficient {c}"),
            ));
        }
        Ok(Self {
            coeffs,
            plans: Mutex::new(HashMap::new()),
        })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Number of innovations consumed for `n` outputs.
    pub fn input_len(&self, n: usize) -> usize {
        n + self.coeffs.len() - 1
    }

    /// `out[k] = Σ_i a_i e[k + m - i]` for `k < n`, where `e.len() = n + m`.
    pub fn apply(&self, innovations: &[f64], n: usize) -> Vec<f64> {
        assert_eq!(innovations.len(), self.input_len(n));
        if n.saturating_mul(self.coeffs.len()) <= DIRECT_CONVOLUTION_LIMIT {
            self.apply_direct(innovations, n)
        } else {
            self.apply_fft(innovations, n)
        }
    }

    pub fn apply_direct(&self, innovations: &[f64], n: usize) -> Vec<f64> {
        let m = self.coeffs.len() - 1;
        (0..n)
            .map(|k| {
                let window = &innovations[k..=k + m];
                self.coeffs
                    .iter()
                    .zip(window.iter().rev())
                    .map(|(a, e)| a * e)
                    .sum()
            })
            .collect()
    }

    fn plan(&self, len: usize) -> Arc<FilterPlan> {
        let mut plans = self.plans.lock().expect("filter plan cache poisoned");
        plans
            .entry(len)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                let forward = planner.plan_fft_forward(len);
                let inverse = planner.plan_fft_inverse(len);
                let mut coeff_spectrum = vec![Complex::new(0.0, 0.0); len];
                for (slot, &a) in coeff_spectrum.iter_mut().zip(&self.coeffs) {
                    slot.re = a;
                }
                forward.process(&mut coeff_spectrum);
                Arc::new(FilterPlan {
                    forward,
                    inverse,
                    coeff_spectrum,
                })
            })
            .clone()
    }

    pub fn apply_fft(&self, innovations: &[f64], n: usize) -> Vec<f64> {
        let m = self.coeffs.len() - 1;
        // Circular wrap-around only touches indices below m, which are discarded.
        let len = (n + m).next_power_of_two();
        let plan = self.plan(len);
        let mut buf = vec![Complex::new(0.0, 0.0); len];
        for (slot, &e) in buf.iter_mut().zip(innovations) {
            slot.re = e;
        }
        plan.forward.process(&mut buf);
        for (b, c) in buf.iter_mut().zip(&plan.coeff_spectrum) {
            *b *= c;
        }
        plan.inverse.process(&mut buf);
        let scale = 1.0 / len as f64;
        buf[m..m + n].iter().map(|c| c.re * scale).collect()
    }

    pub fn generate(
        &self,
        innovation: InnovationDist,
        n: usize,
        shift: f64,
        rng: &mut RngState,
    ) -> Vec<f64> {
        let e: Vec<f64> = (0..self.input_len(n))
            .map(|_| draw_innovation(innovation, rng))
            .collect();
        let mut y = self.apply(&e, n);
        for v in &mut y {
            *v += shift;
        }
        y
    }
}

/// `shift + Σ_{i=0}^{m} coeffs_i ξ_{k-i}` from `n + m` fresh innovations.
pub fn gen_linear(
    coeffs: &[f64],
    innovation: InnovationDist,
    n: usize,
    shift: f64,
    rng: &mut RngState,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::param("n", "series length must be at least 1"));
    }
    let filter = LinearFilter::new(coeffs.to_vec())?;
    Ok(filter.generate(innovation, n, check_shift(shift)?, rng))
}

#[derive(Debug)]
pub struct LinearProcess {
    filter: LinearFilter,
    innovation: InnovationDist,
    shift: f64,
}

impl LinearProcess {
    pub fn new(coeffs: Vec<f64>, innovation: InnovationDist, shift: f64) -> Result<Self> {
        Ok(Self {
            filter: LinearFilter::new(coeffs)?,
            innovation,
            shift: check_shift(shift)?,
        })
    }
}

impl Process for LinearProcess {
    fn name(&self) -> &'static str {
        "linear"
    }
    fn generate(&self, n: usize, rng: &mut RngState) -> Vec<f64> {
        self.filter.generate(self.innovation, n, self.shift, rng)
    }
    fn true_mean(&self) -> f64 {
        self.shift
    }
    fn variance_decay_exponent(&self) -> f64 {
        // finitely many lags: short memory
        1.0
    }
}

fn check_memory(d: f64) -> Result<()> {
    if d > 0.0 && d < 0.5 {
        Ok(())
    } else {
        Err(Error::param(
            "d",
            format!("ARFIMA memory parameter must lie in (0, 0.5), got {d}"),
        ))
    }
}

/// `a_0..a_m` of `(1-B)^-d` via `a_i = a_{i-1} (i-1+d)/i`.
pub fn arfima_coefficients(d: f64, m: usize) -> Result<Vec<f64>> {
    check_memory(d)?;
    let mut a = Vec::with_capacity(m + 1);
    a.push(1.0);
    for i in 1..=m {
        let prev = a[i - 1];
        a.push(prev * (i as f64 - 1.0 + d) / i as f64);
    }
    Ok(a)
}

#[derive(Debug)]
pub struct ArfimaProcess {
    d: f64,
    innovation: InnovationDist,
    shift: f64,
    filter: LinearFilter,
}

impl ArfimaProcess {
    pub fn new(d: f64, innovation: InnovationDist, truncation: usize, shift: f64) -> Result<Self> {
        let coeffs = arfima_coefficients(d, truncation)?;
        Ok(Self {
            d,
            innovation,
            shift: check_shift(shift)?,
            filter: LinearFilter::new(coeffs)?,
        })
    }

    pub fn d(&self) -> f64 {
        self.d
    }
}

impl Process for ArfimaProcess {
    fn name(&self) -> &'static str {
        "arfima"
    }
    fn generate(&self, n: usize, rng: &mut RngState) -> Vec<f64> {
        self.filter.generate(self.innovation, n, self.shift, rng)
    }
    fn true_mean(&self) -> f64 {
        self.shift
    }
    fn variance_decay_exponent(&self) -> f64 {
        1.0 - 2.0 * self.d
    }
}

/// ARFIMA(0, d, 0) series of length `n` from a truncated MA(∞) filter.
pub fn gen_arfima(spec: &ProcessSpec, n: usize, rng: &mut RngState) -> Result<Vec<f64>> {
    match spec {
        ProcessSpec::Arfima { .. } => {
            if n == 0 {
                return Err(Error::param("n", "series length must be at least 1"));
            }
            Ok(spec.build()?.generate(n, rng))
        }
        other => Err(Error::param(
            "spec",
            format!("expected an ARFIMA spec, got {other:?}"),
        )),
    }
}

/// `γ_α = ∫₀¹ y^(α-2) (1 - e^-y) dy`, integrated in `s = √y` to smooth the
/// endpoint behaviour at zero.
pub fn gamma_alpha(alpha_tail: f64) -> Result<f64> {
    adaptive_simpson(
        |s: f64| {
            if s == 0.0 {
                0.0
            } else {
                2.0 * s.powf(2.0 * alpha_tail - 3.0) * (-(-s * s).exp_m1())
            }
        },
        0.0,
        1.0,
        1e-12,
    )
}

/// Probability that one proposal from `π` is accepted by the `ν` sampler.
pub fn nu_acceptance_rate(alpha_tail: f64) -> Result<f64> {
    Ok((alpha_tail - 1.0) * gamma_alpha(alpha_tail)? / (1.0 - (-1.0f64).exp()))
}

/// Reversible chain on `|x| > 1` with stationary law
/// `π(dx) = (α-1)/(2|x|^α) dx` and kernel `Q(x,·) = p(x)δ_x + (1-p(x))ν`,
/// where `p(x) = exp(-1/|x|)` and `ν ∝ (1-p)π`.
#[derive(Debug, Clone, Copy)]
pub struct SignedParetoChain {
    alpha_tail: f64,
}

impl SignedParetoChain {
    pub fn new(alpha_tail: f64) -> Result<Self> {
        if alpha_tail > 1.0 && alpha_tail < 2.0 {
            Ok(Self { alpha_tail })
        } else {
            Err(Error::param(
                "alphaTail",
                format!("tail exponent must lie in (1, 2), got {alpha_tail}"),
            ))
        }
    }

    pub fn alpha_tail(&self) -> f64 {
        self.alpha_tail
    }

    /// `p(x)`, the probability of staying put.
    #[inline]
    pub fn stay_probability(x: f64) -> f64 {
        (-1.0 / x.abs()).exp()
    }

    /// Draw from `π` by inversion: `|X| = U^{-1/(α-1)}`, random sign.
    #[inline]
    pub fn sample_pi(&self, rng: &mut RngState) -> f64 {
        let sign = if rng.next_u64() >> 63 == 0 { 1.0 } else { -1.0 };
        sign * rng.uniform_open().powf(-1.0 / (self.alpha_tail - 1.0))
    }

    /// Draw from `ν` by rejection from `π`; also returns the proposal count.
    pub fn sample_nu(&self, rng: &mut RngState) -> (f64, u64) {
        let ceiling = -(-1.0f64).exp_m1();
        let mut proposals = 0;
        loop {
            proposals += 1;
            let y = self.sample_pi(rng);
            let accept = -(-1.0 / y.abs()).exp_m1() / ceiling;
            if rng.uniform_open() < accept {
                return (y, proposals);
            }
        }
    }

    /// The state path `X_1..X_n`, started from `π`.
    pub fn states(&self, n: usize, rng: &mut RngState) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        if n == 0 {
            return out;
        }
        let mut x = self.sample_pi(rng);
        out.push(x);
        while out.len() < n {
            if rng.uniform_open() >= Self::stay_probability(x) {
                x = self.sample_nu(rng).0;
            }
            out.push(x);
        }
        out
    }
}

impl Process for SignedParetoChain {
    fn name(&self) -> &'static str {
        "signed-pareto-chain"
    }
    fn generate(&self, n: usize, rng: &mut RngState) -> Vec<f64> {
        self.states(n, rng).into_iter().map(f64::signum).collect()
    }
    fn true_mean(&self) -> f64 {
        0.0
    }
    fn variance_decay_exponent(&self) -> f64 {
        2.0 - 2.0 / self.alpha_tail
    }
    fn probe_target(&self) -> ProbeTarget {
        ProbeTarget::PartialSum
    }
}

/// Signs `sign(X_i)` of the signed-Pareto chain.
pub fn gen_signed_pareto_chain(alpha_tail: f64, n: usize, rng: &mut RngState) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::param("n", "series length must be at least 1"));
    }
    Ok(SignedParetoChain::new(alpha_tail)?.generate(n, rng))
}

/// `γ̂(k) = (1/n) Σ_{i<n-k} (Y_i - Ȳ)(Y_{i+k} - Ȳ)` for `k = 0..=max_lag`.
pub fn sample_autocovariance(y: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = y.len();
    if max_lag >= n {
        return Err(Error::param(
            "maxLag",
            format!("must be below the series length {n}, got {max_lag}"),
        ));
    }
    let mean = crate::numeric::compensated_sum(y.iter().copied()) / n as f64;
    let centered: Vec<f64> = y.iter().map(|v| v - mean).collect();
    Ok((0..=max_lag)
        .map(|k| {
            let mut acc = CompensatedSum::new();
            for i in 0..n - k {
                acc.add(centered[i] * centered[i + k]);
            }
            acc.total() / n as f64
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScalingProbeResult {
    pub target: ProbeTarget,
    pub sample_sizes: Vec<usize>,
    pub variance_estimates: Vec<f64>,
    pub log_log_slope: f64,
    pub slope_std_err: f64,
    pub intercept: f64,
    pub replicates: usize,
}

/// Ordinary least squares `(slope, intercept, slope standard error)`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let se = if xs.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, se)
}

/// Monte Carlo `var(Ȳ_n)` (or `var(S_n)`) at each size over `replicates`
/// independent streams, and the least-squares slope of log variance on log n.
///
/// Replicate `r` at size index `s` uses stream `s·replicates + r`; runs in the
/// current rayon pool and aggregates in index order.
pub fn variance_scaling_probe(
    process: &dyn Process,
    sample_sizes: &[usize],
    replicates: usize,
    master: MasterSeed,
) -> Result<ScalingProbeResult> {
    if sample_sizes.len() < 3 {
        return Err(Error::param("sizes", "need at least 3 sample sizes"));
    }
    if let Some(n) = sample_sizes.iter().find(|&&n| n < 64) {
        return Err(Error::param(
            "sizes",
            format!("each size must be at least 64, got {n}"),
        ));
    }
    if replicates < 50 {
        return Err(Error::param(
            "replicates",
            format!("need at least 50, got {replicates}"),
        ));
    }
    let target = process.probe_target();
    let mut variances = Vec::with_capacity(sample_sizes.len());
    for (s, &n) in sample_sizes.iter().enumerate() {
        let stats: Vec<f64> = (0..replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = replicate_seed(master, (s * replicates + r) as u64);
                let y = process.generate(n, &mut rng);
                let sum = crate::numeric::compensated_sum(y);
                match target {
                    ProbeTarget::Mean => sum / n as f64,
                    ProbeTarget::PartialSum => sum,
                }
            })
            .collect();
        variances.push(mean_and_variance(&stats).1);
    }
    if let Some(v) = variances.iter().find(|v| v.is_nan() || **v <= 0.0) {
        return Err(Error::param(
            "process",
            format!("non-positive variance estimate {v}"),
        ));
    }
    let lx: Vec<f64> = sample_sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = variances.iter().map(|v| v.ln()).collect();
    let (slope, intercept, se) = ols_slope(&lx, &ly);
    Ok(ScalingProbeResult {
        target,
        sample_sizes: sample_sizes.to_vec(),
        variance_estimates: variances,
        log_log_slope: slope,
        slope_std_err: se,
        intercept,
        replicates,
    })
}
