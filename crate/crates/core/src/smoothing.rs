//! The auxiliary i.i.d. sequence `X_1..X_n` drawn by the statistician,
//! independent of the data, and the kernel estimate of its density at zero.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::numeric::CompensatedSum;
use crate::randomness::RngState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SmoothingFamily {
    StdNormal,
    Uniform { a: f64, b: f64 },
    Custom,
}

pub trait SmoothingDistribution: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn family(&self) -> SmoothingFamily;

    /// `f(0)`, strictly positive.
    fn density_at_zero(&self) -> Result<f64>;

    /// `f''(0)`, needed only by the plug-in bandwidth rule.
    fn second_derivative_at_zero(&self) -> Result<f64>;

    /// Density `f(x)` when known in closed form.
    fn density(&self, _x: f64) -> Option<f64> {
        None
    }

    fn draw(&self, rng: &mut RngState) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StdNormalSmoothing;

impl SmoothingDistribution for StdNormalSmoothing {
    fn name(&self) -> String {
        "normal".into()
    }
    fn family(&self) -> SmoothingFamily {
        SmoothingFamily::StdNormal
    }
    fn density_at_zero(&self) -> Result<f64> {
        Ok(1.0 / (2.0 * PI).sqrt())
    }
    fn second_derivative_at_zero(&self) -> Result<f64> {
        Ok(-1.0 / (2.0 * PI).sqrt())
    }
    fn density(&self, x: f64) -> Option<f64> {
        Some((-0.5 * x * x).exp() / (2.0 * PI).sqrt())
    }
    #[inline]
    fn draw(&self, rng: &mut RngState) -> f64 {
        rng.standard_normal()
    }
}

/// Uniform on `(a, b)` with `a < 0 < b`.
#[derive(Debug, Clone, Copy)]
pub struct UniformSmoothing {
    a: f64,
    b: f64,
}

impl UniformSmoothing {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < 0.0 && 0.0 < b) {
            return Err(Error::param(
                "smoothing",
                format!("uniform({a}, {b}) must satisfy a < 0 < b so that f(0) > 0"),
            ));
        }
        Ok(Self { a, b })
    }
}

impl SmoothingDistribution for UniformSmoothing {
    fn name(&self) -> String {
        format!("uniform:{}:{}", self.a, self.b)
    }
    fn family(&self) -> SmoothingFamily {
        SmoothingFamily::Uniform {
            a: self.a,
            b: self.b,
        }
    }
    fn density_at_zero(&self) -> Result<f64> {
        Ok(1.0 / (self.b - self.a))
    }
    fn second_derivative_at_zero(&self) -> Result<f64> {
        Err(Error::PlugInUnavailable(
            "f'' undefined at 0 for uniform smoothing (the flat density zeroes the bias term)"
                .into(),
        ))
    }
    fn density(&self, x: f64) -> Option<f64> {
        Some(if x > self.a && x < self.b {
            1.0 / (self.b - self.a)
        } else {
            0.0
        })
    }
    #[inline]
    fn draw(&self, rng: &mut RngState) -> f64 {
        self.a + (self.b - self.a) * rng.uniform_open()
    }
}

type Sampler = dyn Fn(&mut RngState) -> f64 + Send + Sync;

/// Smoothing law given by a sampler plus whatever constants the caller knows.
#[derive(Clone)]
pub struct CustomSmoothing {
    name: String,
    sampler: Arc<Sampler>,
    density_at_zero: Option<f64>,
    second_derivative_at_zero: Option<f64>,
}

impl CustomSmoothing {
    pub fn new(
        name: impl Into<String>,
        sampler: impl Fn(&mut RngState) -> f64 + Send + Sync + 'static,
        density_at_zero: Option<f64>,
        second_derivative_at_zero: Option<f64>,
    ) -> Self {
        Self {
            name: name.into(),
            sampler: Arc::new(sampler),
            density_at_zero,
            second_derivative_at_zero,
        }
    }
}

impl fmt::Debug for CustomSmoothing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomSmoothing")
            .field("name", &self.name)
            .field("density_at_zero", &self.density_at_zero)
            .field("second_derivative_at_zero", &self.second_derivative_at_zero)
            .finish()
    }
}

impl SmoothingDistribution for CustomSmoothing {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn family(&self) -> SmoothingFamily {
        SmoothingFamily::Custom
    }
    fn density_at_zero(&self) -> Result<f64> {
        match self.density_at_zero {
            Some(v) if v > 0.0 && v.is_finite() => Ok(v),
            Some(v) => Err(Error::param("f(0)", format!("must be positive, got {v}"))),
            None => Err(Error::param(
                "f(0)",
                format!("not supplied for `{}`", self.name),
            )),
        }
    }
    fn second_derivative_at_zero(&self) -> Result<f64> {
        self.second_derivative_at_zero.ok_or_else(|| {
            Error::PlugInUnavailable(format!("f''(0) not supplied for `{}`", self.name))
        })
    }
    fn draw(&self, rng: &mut RngState) -> f64 {
        (self.sampler)(rng)
    }
}

pub fn density_at_zero(d: &dyn SmoothingDistribution) -> Result<f64> {
    d.density_at_zero()
}

pub fn second_derivative_at_zero(d: &dyn SmoothingDistribution) -> Result<f64> {
    d.second_derivative_at_zero()
}

/// `n` i.i.d. draws from `d`.
pub fn sample_smoothing(
    d: &dyn SmoothingDistribution,
    n: usize,
    rng: &mut RngState,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::param(
            "n",
            "smoothing sample size must be at least 1",
        ));
    }
    Ok((0..n).map(|_| d.draw(rng)).collect())
}

/// Kernel density estimate at the origin, `(1/(nh)) Σ K(X_i/h)`.
pub fn estimate_density_at_zero(x: &[f64], k: &dyn Kernel, h: f64) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Empty("smoothing sample"));
    }
    check_bandwidth(h)?;
    let mut acc = CompensatedSum::new();
    for &xi in x {
        acc.add(k.eval(xi / h));
    }
    Ok(acc.total() / (x.len() as f64 * h))
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            "h",
            format!("bandwidth must be positive and finite, got {h}"),
        ))
    }
}

type SmoothingFactory = fn(&[f64]) -> Result<Arc<dyn SmoothingDistribution>>;

/// Name-to-distribution lookup. Specs take the form `name[:p1:p2...]`,
/// e.g. `normal` or `uniform:-1:1`.
#[derive(Clone)]
pub struct SmoothingRegistry {
    entries: BTreeMap<String, SmoothingFactory>,
}

impl Default for SmoothingRegistry {
    fn default() -> Self {
        let mut r = Self {
            entries: BTreeMap::new(),
        };
        r.register("normal", |params| {
            if !params.is_empty() {
                return Err(Error::param("smoothing", "`normal` takes no parameters"));
            }
            Ok(Arc::new(StdNormalSmoothing))
        });
        r.register("uniform", |params| match params {
            [] => Ok(Arc::new(UniformSmoothing::new(-0.5, 0.5)?)),
            [a, b] => Ok(Arc::new(UniformSmoothing::new(*a, *b)?)),
            _ => Err(Error::param("smoothing", "`uniform` takes `uniform:a:b`")),
        });
        r
    }
}

impl SmoothingRegistry {
    pub fn register(&mut self, name: &str, factory: SmoothingFactory) {
        self.entries.insert(name.to_ascii_lowercase(), factory);
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    pub fn get(&self, spec: &str) -> Result<Arc<dyn SmoothingDistribution>> {
        let mut parts = spec.trim().split(':');
        let name = parts.next().unwrap_or_default().to_ascii_lowercase();
        let params = parts
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::param("smoothing", format!("`{spec}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let factory = self.entries.get(&name).ok_or_else(|| Error::UnknownName {
            kind: "smoothing distribution",
            name: spec.to_string(),
            available: self.names().join(", "),
        })?;
        factory(&params)
    }
}

pub fn smoothing_by_name(spec: &str) -> Result<Arc<dyn SmoothingDistribution>> {
    SmoothingRegistry::default().get(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{EpanechnikovKernel, GaussianKernel};
    use crate::numeric::{adaptive_simpson, mean_and_variance};
    use crate::randomness::replicate_seed;
    use crate::randomness::MasterSeed;

    #[test]
    fn constants_at_zero() {
        assert_eq!(
            density_at_zero(&StdNormalSmoothing).unwrap(),
            0.3989422804014327
        );
        assert_eq!(
            second_derivative_at_zero(&StdNormalSmoothing).unwrap(),
            -0.3989422804014327
        );
        let u = UniformSmoothing::new(-0.5, 0.5).unwrap();
        assert_eq!(u.density_at_zero().unwrap(), 1.0);
        assert_eq!(
            UniformSmoothing::new(-1.0, 1.0)
                .unwrap()
                .density_at_zero()
                .unwrap(),
            0.5
        );
        assert!(matches!(
            u.second_derivative_at_zero(),
            Err(Error::PlugInUnavailable(_))
        ));
    }

    #[test]
    fn uniform_must_straddle_origin() {
        assert!(UniformSmoothing::new(0.0, 1.0).is_err());
        assert!(UniformSmoothing::new(-1.0, -0.1).is_err());
    }

    #[test]
    fn custom_constants_pass_through() {
        let c = CustomSmoothing::new("t", |r| r.standard_normal(), Some(0.3), Some(-0.2));
        assert_eq!(c.second_derivative_at_zero().unwrap(), -0.2);
        assert_eq!(c.density_at_zero().unwrap(), 0.3);
        let bare = CustomSmoothing::new("bare", |r| r.standard_normal(), None, None);
        assert!(bare.density_at_zero().is_err());
        assert!(bare.second_derivative_at_zero().is_err());
    }

    #[test]
    fn normal_sample_moments() {
        let mut rng = RngState::from_seed(1);
        let x = sample_smoothing(&StdNormalSmoothing, 10_000, &mut rng).unwrap();
        let (m, v) = mean_and_variance(&x);
        assert!(m.abs() < 0.05 && (v - 1.0).abs() < 0.05, "{m} {v}");
    }

    #[test]
    fn uniform_sample_support_and_empty() {
        let mut rng = RngState::from_seed(2);
        let u = UniformSmoothing::new(-0.5, 0.5).unwrap();
        let x = sample_smoothing(&u, 1, &mut rng).unwrap();
        assert!(x[0] > -0.5 && x[0] < 0.5);
        assert!(sample_smoothing(&u, 0, &mut rng).is_err());
    }

    #[test]
    fn density_estimate_small_cases() {
        let k = GaussianKernel;
        assert!((estimate_density_at_zero(&[0.0], &k, 1.0).unwrap() - 0.3989422804).abs() < 1e-10);
        assert!(
            (estimate_density_at_zero(&[0.0, 0.0], &k, 0.5).unwrap() - 0.7978845608).abs() < 1e-10
        );
        assert!(estimate_density_at_zero(&[], &k, 1.0).is_err());
        assert!(estimate_density_at_zero(&[0.0], &k, 0.0).is_err());
        assert!(estimate_density_at_zero(&[0.0], &k, -1.0).is_err());
    }

    #[test]
    fn density_estimate_is_consistent() {
        let mut rng = RngState::from_seed(3);
        let x = sample_smoothing(&StdNormalSmoothing, 10_000, &mut rng).unwrap();
        let f = estimate_density_at_zero(&x, &GaussianKernel, 0.2).unwrap();
        assert!((f - 0.39894).abs() < 0.05, "{f}");
    }

    #[test]
    fn density_estimate_scaling_identity() {
        let mut rng = RngState::from_seed(4);
        let x = sample_smoothing(&StdNormalSmoothing, 500, &mut rng).unwrap();
        let c = 2.5;
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        let lhs = estimate_density_at_zero(&scaled, &GaussianKernel, c * 0.3).unwrap();
        let rhs = estimate_density_at_zero(&x, &GaussianKernel, 0.3).unwrap() / c;
        assert!((lhs - rhs).abs() < 1e-13 * rhs.abs());
    }

    #[test]
    fn density_estimate_unbiased_at_fixed_bandwidth() {
        // E f̂(0) = ∫K(u) f(uh) du, by quadrature.
        let h = 0.3;
        let k = EpanechnikovKernel;
        let expected = adaptive_simpson(
            |u| k.eval(u) * StdNormalSmoothing.density(u * h).unwrap(),
            -1.0,
            1.0,
            1e-12,
        )
        .unwrap();
        let reps = 400;
        let estimates: Vec<f64> = (0..reps)
            .map(|r| {
                let mut rng = replicate_seed(MasterSeed(77), r);
                let x = sample_smoothing(&StdNormalSmoothing, 1000, &mut rng).unwrap();
                estimate_density_at_zero(&x, &k, h).unwrap()
            })
            .collect();
        let (m, v) = mean_and_variance(&estimates);
        let se = (v / reps as f64).sqrt();
        assert!(
            (m - expected).abs() < 3.0 * se,
            "{m} vs {expected} (se {se})"
        );
    }

    #[test]
    fn registry_parses_parameters() {
        let u = smoothing_by_name("uniform:-1:1").unwrap();
        assert_eq!(u.density_at_zero().unwrap(), 0.5);
        assert_eq!(
            smoothing_by_name("uniform")
                .unwrap()
                .density_at_zero()
                .unwrap(),
            1.0
        );
        assert!(smoothing_by_name("uniform:1:2").is_err());
        assert!(smoothing_by_name("normal:3").is_err());
        assert!(smoothing_by_name("cauchy").is_err());
    }
}
