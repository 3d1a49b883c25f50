//! Normal-theory intervals for the mean built on `r̂`:
//!
//! ```text
//! r̂ ± z_{α/2} · sqrt( ȳ₂ · B / (n h f(0)) )
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{estimate, EstimateResult};
use crate::kernels::{GaussianKernel, Kernel};
use crate::numeric::normal_cdf;
use crate::smoothing::{check_bandwidth, SmoothingDistribution, StdNormalSmoothing};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub half_width: f64,
    pub center: f64,
    /// Set when the second moment is zero and the interval collapses to a point.
    pub degenerate: bool,
}

impl ConfidenceInterval {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

pub(crate) fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::param(
            "level",
            format!("confidence level must lie in (0, 1), got {level}"),
        ))
    }
}

// Acklam's rational approximation, refined by one Halley step.
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.38357751867269e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const P_LOW: f64 = 0.02425;

fn acklam(p: f64) -> f64 {
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -acklam(1.0 - p)
    }
}

/// `Φ⁻¹(p)` for `p ∈ (0, 1)`.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param(
            "p",
            format!("probability must lie in (0, 1), got {p}"),
        ));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Work in the lower tail and reflect, so the result is exactly antisymmetric.
    let (tail, sign) = if p < 0.5 { (p, 1.0) } else { (1.0 - p, -1.0) };
    let x = acklam(tail);
    let e = normal_cdf(x) - tail;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    Ok(sign * (x - u / (1.0 + 0.5 * x * u)))
}

/// Two-sided critical value `z_{α/2}` for confidence `level = 1 - α`.
pub fn critical_value(level: f64) -> Result<f64> {
    check_level(level)?;
    normal_quantile(0.5 + 0.5 * level)
}

/// Interval centred at `r_hat` with half-width `z · sqrt(ȳ₂ B / (n h f0))`.
pub fn confidence_interval(
    r_hat: f64,
    y_sq_bar: f64,
    n: usize,
    h: f64,
    k: &dyn Kernel,
    f0: f64,
    level: f64,
) -> Result<ConfidenceInterval> {
    check_level(level)?;
    check_bandwidth(h)?;
    if n == 0 {
        return Err(Error::param("n", "sample size must be at least 1"));
    }
    if f0.is_nan() || f0 <= 0.0 {
        return Err(Error::param(
            "f0",
            format!("density at zero must be positive, got {f0}"),
        ));
    }
    if y_sq_bar.is_nan() || y_sq_bar < 0.0 {
        return Err(Error::param(
            "ySqBar",
            format!("must be nonnegative, got {y_sq_bar}"),
        ));
    }
    let b = k.constants()?.b;
    let z = critical_value(level)?;
    let half_width = z * (y_sq_bar * b / (n as f64 * h * f0)).sqrt();
    Ok(ConfidenceInterval {
        lower: r_hat - half_width,
        upper: r_hat + half_width,
        level,
        half_width,
        center: r_hat,
        degenerate: y_sq_bar == 0.0,
    })
}

/// Estimate and interval for data `y` smoothed by `x ~ d` with kernel `k`.
pub fn interval_for(
    y: &[f64],
    x: &[f64],
    k: &dyn Kernel,
    d: &dyn SmoothingDistribution,
    h: f64,
    level: f64,
) -> Result<(EstimateResult, ConfidenceInterval)> {
    check_level(level)?;
    let f0 = d.density_at_zero()?;
    let est = estimate(y, x, k, f0, h)?;
    let ci = confidence_interval(est.r_hat, est.y_sq_bar, est.n, h, k, f0, level)?;
    Ok((est, ci))
}

/// Gaussian kernel with standard normal smoothing, where `B/f(0) = 1/√2` and
/// the half-width becomes `z · sqrt(Σ Y_i² / (√2 n² h))`.
pub fn practical_interval(
    y: &[f64],
    x: &[f64],
    h: f64,
    level: f64,
) -> Result<(EstimateResult, ConfidenceInterval)> {
    interval_for(y, x, &GaussianKernel, &StdNormalSmoothing, h, level)
}
