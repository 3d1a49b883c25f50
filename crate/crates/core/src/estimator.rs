//! The smoothed mean `r̂ = (1/(n h f(0))) Σ Y_i K(X_i/h)`, its Nadaraya-Watson
//! counterpart with the estimated density in the denominator, sample moments
//! and the partial-sum paths `t ↦ r̂(t)`, `t ↦ m̂(t)`.
//!
//! All sums run left to right through [`CompensatedSum`], so a path evaluated
//! at `t = 1` reproduces the full estimate bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::numeric::CompensatedSum;
use crate::smoothing::check_bandwidth;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EstimateResult {
    pub r_hat: f64,
    /// `None` when every kernel weight is zero.
    pub m_hat: Option<f64>,
    pub f_hat_zero: f64,
    pub y_bar: f64,
    pub y_sq_bar: f64,
    pub n: usize,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PartialSumPath {
    pub grid: Vec<f64>,
    pub r_path: Vec<f64>,
    pub m_path: Vec<f64>,
}

fn check_inputs(y: &[f64], x: &[f64], h: f64) -> Result<()> {
    if y.len() != x.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: x.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::Empty("data"));
    }
    check_bandwidth(h)
}

fn check_f0(f0: f64) -> Result<()> {
    if f0 > 0.0 && f0.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            "f0",
            format!("density at zero must be positive, got {f0}"),
        ))
    }
}

/// Running `(Σ Y_i K_i, Σ K_i)` accumulators.
#[derive(Default, Clone, Copy)]
struct WeightedSums {
    numerator: CompensatedSum,
    mass: CompensatedSum,
}

impl WeightedSums {
    #[inline]
    fn add(&mut self, y: f64, w: f64) {
        self.numerator.add(y * w);
        self.mass.add(w);
    }
}

fn weighted_sums(y: &[f64], x: &[f64], k: &dyn Kernel, h: f64) -> WeightedSums {
    let mut s = WeightedSums::default();
    for (&yi, &xi) in y.iter().zip(x) {
        s.add(yi, k.eval(xi / h));
    }
    s
}

pub fn smoothed_mean(y: &[f64], x: &[f64], k: &dyn Kernel, f0: f64, h: f64) -> Result<f64> {
    check_inputs(y, x, h)?;
    check_f0(f0)?;
    let s = weighted_sums(y, x, k, h);
    Ok(s.numerator.total() / (y.len() as f64 * h * f0))
}

/// `Σ Y_i K(X_i/h) / Σ K(X_i/h)`.
pub fn nw_mean(y: &[f64], x: &[f64], k: &dyn Kernel, h: f64) -> Result<f64> {
    check_inputs(y, x, h)?;
    let s = weighted_sums(y, x, k, h);
    let mass = s.mass.total();
    if mass <= 0.0 {
        return Err(Error::DegenerateWeights { h });
    }
    Ok(s.numerator.total() / mass)
}

/// `(Ȳ, mean of Y²)`.
pub fn sample_moments(y: &[f64]) -> Result<(f64, f64)> {
    if y.is_empty() {
        return Err(Error::Empty("data"));
    }
    let mut s = CompensatedSum::new();
    let mut sq = CompensatedSum::new();
    for &v in y {
        s.add(v);
        sq.add(v * v);
    }
    let n = y.len() as f64;
    Ok((s.total() / n, sq.total() / n))
}

/// Every statistic at once, from a single pass over the data.
pub fn estimate(y: &[f64], x: &[f64], k: &dyn Kernel, f0: f64, h: f64) -> Result<EstimateResult> {
    check_inputs(y, x, h)?;
    check_f0(f0)?;
    let s = weighted_sums(y, x, k, h);
    let (y_bar, y_sq_bar) = sample_moments(y)?;
    let n = y.len();
    let numerator = s.numerator.total();
    let mass = s.mass.total();
    Ok(EstimateResult {
        r_hat: numerator / (n as f64 * h * f0),
        m_hat: (mass > 0.0).then(|| numerator / mass),
        f_hat_zero: mass / (n as f64 * h),
        y_bar,
        y_sq_bar,
        n,
        h,
    })
}

/// `r̂(t)` and `m̂(t)` on `grid`, summing the first `⌊n t⌋` terms. The `m̂`
/// path divides by the density estimate of the full sample.
pub fn partial_sum_paths(
    y: &[f64],
    x: &[f64],
    k: &dyn Kernel,
    f0: f64,
    h: f64,
    grid: &[f64],
) -> Result<PartialSumPath> {
    check_inputs(y, x, h)?;
    check_f0(f0)?;
    if let Some(t) = grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::param("grid", format!("t = {t} outside [0, 1]")));
    }
    let n = y.len();
    let cutoffs: Vec<usize> = grid
        .iter()
        .map(|&t| ((n as f64 * t).floor() as usize).min(n))
        .collect();

    // prefix[j] = accumulator after the first j terms
    let mut prefix = Vec::with_capacity(n + 1);
    let mut s = WeightedSums::default();
    prefix.push(s.numerator.total());
    for (&yi, &xi) in y.iter().zip(x) {
        s.add(yi, k.eval(xi / h));
        prefix.push(s.numerator.total());
    }
    let f_hat = s.mass.total() / (n as f64 * h);
    let scale_r = n as f64 * h * f0;
    let scale_m = n as f64 * h * f_hat;
    Ok(PartialSumPath {
        grid: grid.to_vec(),
        r_path: cutoffs.iter().map(|&c| prefix[c] / scale_r).collect(),
        m_path: cutoffs
            .iter()
            .map(|&c| if c == 0 { 0.0 } else { prefix[c] / scale_m })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::GaussianKernel;
    use std::f64::consts::PI;

    const F0: f64 = 0.3989422804014327;

    #[test]
    fn smoothed_mean_small_cases() {
        let k = GaussianKernel;
        assert!((smoothed_mean(&[1.0], &[0.0], &k, F0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(
            (smoothed_mean(&[1.0, 3.0], &[0.0, 0.0], &k, F0, 1.0).unwrap() - 2.0).abs() < 1e-15
        );
        let v = smoothed_mean(&[2.0], &[1.0], &k, F0, 1.0).unwrap();
        assert!((v - 2.0 * (-0.5f64).exp()).abs() < 1e-15);
        assert!((v - 1.2130613194).abs() < 1e-10);
    }

    #[test]
    fn smoothed_mean_errors() {
        let k = GaussianKernel;
        assert!(matches!(
            smoothed_mean(&[1.0, 2.0], &[0.0], &k, F0, 1.0),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(smoothed_mean(&[1.0], &[0.0], &k, F0, 0.0).is_err());
        assert!(smoothed_mean(&[1.0], &[0.0], &k, 0.0, 1.0).is_err());
        assert!(smoothed_mean(&[], &[], &k, F0, 1.0).is_err());
    }

    #[test]
    fn nw_mean_cases() {
        let k = GaussianKernel;
        assert!((nw_mean(&[1.0, 3.0], &[0.0, 0.0], &k, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((nw_mean(&[5.0; 4], &[0.1, -2.0, 3.0, 0.7], &k, 0.5).unwrap() - 5.0).abs() < 1e-14);
        // 4K(1)/(K(0)+K(1)) with K(0) = 1/√(2π), K(1) = e^{-1/2}/√(2π)
        let k1 = (-0.5f64).exp() / (2.0 * PI).sqrt();
        let k0 = 1.0 / (2.0 * PI).sqrt();
        let got = nw_mean(&[0.0, 4.0], &[0.0, 1.0], &k, 1.0).unwrap();
        assert!((got - 4.0 * k1 / (k0 + k1)).abs() < 1e-15);
        assert!((got - 1.5101626751925818).abs() < 1e-12);
    }

    #[test]
    fn nw_mean_degenerate_weights() {
        let k = crate::kernels::EpanechnikovKernel;
        assert!(matches!(
            nw_mean(&[1.0, 2.0], &[5.0, -5.0], &k, 0.1),
            Err(Error::DegenerateWeights { .. })
        ));
        let e = estimate(&[1.0, 2.0], &[5.0, -5.0], &k, 0.5, 0.1).unwrap();
        assert_eq!(e.m_hat, None);
        assert_eq!(e.r_hat, 0.0);
    }

    #[test]
    fn moments() {
        let (m, s) = sample_moments(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert!((s - 14.0 / 3.0).abs() < 1e-15);
        assert_eq!(sample_moments(&[0.0, 0.0]).unwrap(), (0.0, 0.0));
        assert_eq!(sample_moments(&[-1.0, 1.0]).unwrap(), (0.0, 1.0));
        assert!(sample_moments(&[]).is_err());
    }

    #[test]
    fn estimate_matches_components() {
        let y = [1.5, -0.2, 3.3, 2.0, 0.4];
        let x = [0.3, -1.2, 0.05, 2.2, -0.4];
        let k = GaussianKernel;
        let e = estimate(&y, &x, &k, F0, 0.6).unwrap();
        assert_eq!(e.r_hat, smoothed_mean(&y, &x, &k, F0, 0.6).unwrap());
        assert_eq!(e.m_hat.unwrap(), nw_mean(&y, &x, &k, 0.6).unwrap());
        let f = crate::smoothing::estimate_density_at_zero(&x, &k, 0.6).unwrap();
        assert!((e.f_hat_zero - f).abs() < 1e-15);
        assert_eq!((e.y_bar, e.y_sq_bar), sample_moments(&y).unwrap());
    }

    #[test]
    fn paths_endpoints_and_truncation() {
        let y = [2.0, 5.0];
        let x = [0.0, 0.5];
        let k = GaussianKernel;
        let p = partial_sum_paths(&y, &x, &k, F0, 1.0, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(p.r_path[0], 0.0);
        assert_eq!(p.m_path[0], 0.0);
        assert_eq!(p.r_path[2], smoothed_mean(&y, &x, &k, F0, 1.0).unwrap());
        // t = 0.5 keeps only the first term
        let first = 2.0 * k.eval(0.0) / (2.0 * 1.0 * F0);
        assert!((p.r_path[1] - first).abs() < 1e-15);
        let m_full = nw_mean(&y, &x, &k, 1.0).unwrap();
        assert!((p.m_path[2] - m_full).abs() < 1e-14);
        assert!(partial_sum_paths(&y, &x, &k, F0, 1.0, &[1.5]).is_err());
    }
}
