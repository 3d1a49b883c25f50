//! Bandwidth rules.
//!
//! The plug-in rule minimises the two leading terms of the mean squared error
//! of `r̂`,
//!
//! ```text
//! MSE(h) ≈ (1/f(0)²) [ E(Y²) B f(0) / (n h)  +  (h⁴/4) μ² (f''(0) A)² ]
//! h_o    = [ f(0) B ȳ₂ / (n (f''(0) A)² ȳ²) ]^(1/5)
//! ```
//!
//! with `ȳ₂` and `ȳ` the sample second moment and mean. It is only valid when
//! the variance of the sample mean decays faster than `n^-4/5`; for stronger
//! dependence an explicit power law `h = s·n^-e` must be chosen instead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::smoothing::SmoothingDistribution;

/// Decay exponent of `var(Ȳ_n)` above which the plug-in rule is admissible.
pub const PLUG_IN_MIN_BETA: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum BandwidthPolicy {
    PlugInOptimal,
    PowerLaw { exponent: f64, scale: f64 },
    Fixed { h: f64 },
}

impl BandwidthPolicy {
    pub fn power_law(exponent: f64) -> Self {
        BandwidthPolicy::PowerLaw {
            exponent,
            scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BandwidthPolicy::PlugInOptimal => Ok(()),
            BandwidthPolicy::PowerLaw { exponent, scale } => {
                check_exponent(exponent)?;
                check_scale(scale)
            }
            BandwidthPolicy::Fixed { h } => {
                if h > 0.0 && h.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param(
                        "h",
                        format!("fixed bandwidth must be positive, got {h}"),
                    ))
                }
            }
        }
    }

    /// Refuses the plug-in rule when `var(Ȳ_n) ≍ n^-beta` with `beta ≤ 4/5`.
    pub fn check_admissible(&self, beta: Option<f64>) -> Result<()> {
        self.validate()?;
        if let (BandwidthPolicy::PlugInOptimal, Some(beta)) = (self, beta) {
            if !check_plug_in_admissible(beta) {
                return Err(Error::InadmissiblePlugIn { beta });
            }
        }
        Ok(())
    }

    /// Bandwidth for a sample of size `n` with the given moments.
    pub fn resolve(
        &self,
        y_sq_bar: f64,
        y_bar: f64,
        n: usize,
        k: &dyn Kernel,
        d: &dyn SmoothingDistribution,
    ) -> Result<f64> {
        match *self {
            BandwidthPolicy::PlugInOptimal => optimal_bandwidth(y_sq_bar, y_bar, n, k, d),
            BandwidthPolicy::PowerLaw { exponent, scale } => {
                power_law_bandwidth(n, exponent, scale)
            }
            BandwidthPolicy::Fixed { h } => {
                self.validate()?;
                Ok(h)
            }
        }
    }
}

fn check_exponent(exponent: f64) -> Result<()> {
    if exponent > 0.0 && exponent < 1.0 {
        Ok(())
    } else {
        Err(Error::param(
            "exponent",
            format!(
                "power-law exponent must lie in (0, 1) so that h → 0 and nh → ∞, got {exponent}"
            ),
        ))
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if scale > 0.0 && scale.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            "scale",
            format!("must be positive, got {scale}"),
        ))
    }
}

/// Plug-in optimum `[f(0) B ȳ₂ / (n (f''(0) A)² ȳ²)]^(1/5)`.
pub fn optimal_bandwidth(
    y_sq_bar: f64,
    y_bar: f64,
    n: usize,
    k: &dyn Kernel,
    d: &dyn SmoothingDistribution,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", "sample size must be at least 1"));
    }
    if y_sq_bar == 0.0 {
        return Err(Error::ZeroSecondMoment);
    }
    if !(y_sq_bar > 0.0 && y_sq_bar.is_finite()) {
        return Err(Error::param(
            "ySqBar",
            format!("must be positive, got {y_sq_bar}"),
        ));
    }
    if y_bar == 0.0 {
        return Err(Error::ZeroMean);
    }
    let f0 = d.density_at_zero()?;
    let f2 = d.second_derivative_at_zero()?;
    let c = k.constants()?;
    let curvature = f2 * c.a;
    if curvature == 0.0 || !curvature.is_finite() {
        return Err(Error::PlugInUnavailable(format!(
            "f''(0)·A = {curvature} makes the bias term vanish"
        )));
    }
    let ratio = f0 * c.b * y_sq_bar / (n as f64 * curvature * curvature * y_bar * y_bar);
    Ok(ratio.powf(0.2))
}

/// `scale · n^-exponent` with `exponent ∈ (0, 1)`.
pub fn power_law_bandwidth(n: usize, exponent: f64, scale: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", "sample size must be at least 1"));
    }
    check_exponent(exponent)?;
    check_scale(scale)?;
    Ok(scale * (n as f64).powf(-exponent))
}

/// True iff `var(Ȳ_n) ≍ n^-beta` decays fast enough for the plug-in rule.
pub fn check_plug_in_admissible(beta: f64) -> bool {
    beta > PLUG_IN_MIN_BETA
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MseMainTerm {
    pub variance_term: f64,
    pub bias_term: f64,
    pub total: f64,
}

/// Leading variance and squared-bias terms of the MSE at bandwidth `h`.
pub fn mse_main_term(
    h: f64,
    n: usize,
    y_sq_bar: f64,
    y_bar: f64,
    k: &dyn Kernel,
    d: &dyn SmoothingDistribution,
) -> Result<MseMainTerm> {
    if h.is_nan() || h <= 0.0 || n == 0 {
        return Err(Error::param(
            "h",
            format!("need h > 0 and n ≥ 1, got h = {h}, n = {n}"),
        ));
    }
    let f0 = d.density_at_zero()?;
    let f2 = d.second_derivative_at_zero()?;
    let c = k.constants()?;
    let variance_term = y_sq_bar * c.b * f0 / (n as f64 * h) / (f0 * f0);
    let curvature = f2 * c.a;
    let bias_term = h.powi(4) / 4.0 * y_bar * y_bar * curvature * curvature / (f0 * f0);
    Ok(MseMainTerm {
        variance_term,
        bias_term,
        total: variance_term + bias_term,
    })
}
