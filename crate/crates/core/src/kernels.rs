//! Smoothing kernels: symmetric bounded probability densities `K` together
//! with the moment constants `A = ∫u²K(u)du` and `B = ∫K(u)²du` used by the
//! bandwidth rule and the interval half-width.
//!
//! Kernels are trait objects looked up by name through [`KernelRegistry`], so
//! the command-line front end and experiment configs can select them at run
//! time. Built-in families carry closed-form constants; [`CustomKernel`] gets
//! its constants by adaptive quadrature.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::adaptive_simpson;

/// Absolute tolerance for quadrature-derived kernel constants.
pub const QUADRATURE_TOL: f64 = 1e-10;
/// Truncation half-width for kernels without compact support.
pub const UNBOUNDED_TRUNCATION: f64 = 10.0;
const GRID_POINTS: usize = 1001;
const UNIT_INTEGRAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum KernelFamily {
    Gaussian,
    Epanechnikov,
    Uniform,
    Custom,
}

/// Second moment `a` and squared-norm `b` of a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    /// `∫u²K(u)du`
    pub a: f64,
    /// `∫K(u)²du`
    pub b: f64,
}

pub trait Kernel: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn family(&self) -> KernelFamily;

    /// `K(u)`; zero outside [`Kernel::support`].
    fn eval(&self, u: f64) -> f64;

    /// Closed support interval, or `None` for the whole real line.
    fn support(&self) -> Option<(f64, f64)>;

    /// Upper bound of `K`.
    fn sup_bound(&self) -> f64;

    fn constants(&self) -> Result<KernelConstants> {
        quadrature_constants(self)
    }
}

/// Evaluates `k` at `u`.
#[inline]
pub fn kernel_eval(k: &dyn Kernel, u: f64) -> f64 {
    k.eval(u)
}

pub fn kernel_constants(k: &dyn Kernel) -> Result<KernelConstants> {
    k.constants()
}

fn integration_range(k: &(impl Kernel + ?Sized)) -> Result<(f64, f64)> {
    match k.support() {
        Some((lo, hi)) => Ok((lo, hi)),
        None => {
            let c = UNBOUNDED_TRUNCATION;
            let tail = [c, -c]
                .iter()
                .map(|&u| (1.0 + u * u) * k.eval(u))
                .fold(0.0, f64::max);
            if tail > 1e-12 {
                return Err(Error::Quadrature(format!(
                    "kernel `{}` is not negligible at ±{c} ((1+u²)K(u) = {tail:.3e})",
                    k.name()
                )));
            }
            Ok((-c, c))
        }
    }
}

/// `A` and `B` by adaptive Simpson over the support (or `±10`).
pub fn quadrature_constants(k: &(impl Kernel + ?Sized)) -> Result<KernelConstants> {
    let (lo, hi) = integration_range(k)?;
    let a = adaptive_simpson(|u| u * u * k.eval(u), lo, hi, QUADRATURE_TOL)?;
    let b = adaptive_simpson(
        |u| {
            let v = k.eval(u);
            v * v
        },
        lo,
        hi,
        QUADRATURE_TOL,
    )?;
    Ok(KernelConstants { a, b })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianKernel;

impl Kernel for GaussianKernel {
    fn name(&self) -> &str {
        "gaussian"
    }
    fn family(&self) -> KernelFamily {
        KernelFamily::Gaussian
    }
    #[inline]
    fn eval(&self, u: f64) -> f64 {
        (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
    }
    fn support(&self) -> Option<(f64, f64)> {
        None
    }
    fn sup_bound(&self) -> f64 {
        1.0 / (2.0 * PI).sqrt()
    }
    fn constants(&self) -> Result<KernelConstants> {
        Ok(KernelConstants {
            a: 1.0,
            b: 1.0 / (2.0 * PI.sqrt()),
        })
    }
}

/// `0.75(1-u²)` on `[-1, 1]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EpanechnikovKernel;

impl Kernel for EpanechnikovKernel {
    fn name(&self) -> &str {
        "epanechnikov"
    }
    fn family(&self) -> KernelFamily {
        KernelFamily::Epanechnikov
    }
    #[inline]
    fn eval(&self, u: f64) -> f64 {
        if u.abs() <= 1.0 {
            0.75 * (1.0 - u * u)
        } else {
            0.0
        }
    }
    fn support(&self) -> Option<(f64, f64)> {
        Some((-1.0, 1.0))
    }
    fn sup_bound(&self) -> f64 {
        0.75
    }
    fn constants(&self) -> Result<KernelConstants> {
        Ok(KernelConstants { a: 0.2, b: 0.6 })
    }
}

/// `1/2` on `[-1, 1]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformKernel;

impl Kernel for UniformKernel {
    fn name(&self) -> &str {
        "uniform"
    }
    fn family(&self) -> KernelFamily {
        KernelFamily::Uniform
    }
    #[inline]
    fn eval(&self, u: f64) -> f64 {
        if u.abs() <= 1.0 {
            0.5
        } else {
            0.0
        }
    }
    fn support(&self) -> Option<(f64, f64)> {
        Some((-1.0, 1.0))
    }
    fn sup_bound(&self) -> f64 {
        0.5
    }
    fn constants(&self) -> Result<KernelConstants> {
        Ok(KernelConstants {
            a: 1.0 / 3.0,
            b: 0.5,
        })
    }
}

type KernelFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A user-supplied kernel. Nothing is checked at construction; run
/// [`validate_kernel`] before trusting it.
#[derive(Clone)]
pub struct CustomKernel {
    name: String,
    func: Arc<KernelFn>,
    support: Option<(f64, f64)>,
    sup_bound: f64,
}

impl CustomKernel {
    pub fn new(
        name: impl Into<String>,
        func: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support: Option<(f64, f64)>,
        sup_bound: f64,
    ) -> Self {
        Self {
            name: name.into(),
            func: Arc::new(func),
            support,
            sup_bound,
        }
    }
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("sup_bound", &self.sup_bound)
            .finish()
    }
}

impl Kernel for CustomKernel {
    fn name(&self) -> &str {
        &self.name
    }
    fn family(&self) -> KernelFamily {
        KernelFamily::Custom
    }
    fn eval(&self, u: f64) -> f64 {
        match self.support {
            Some((lo, hi)) if u < lo || u > hi => 0.0,
            _ => (self.func)(u),
        }
    }
    fn support(&self) -> Option<(f64, f64)> {
        self.support
    }
    fn sup_bound(&self) -> f64 {
        self.sup_bound
    }
}

/// Outcome of [`validate_kernel`]; `violations` is empty when every check passes.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct KernelValidation {
    pub max_asymmetry: f64,
    pub integral: Option<f64>,
    pub max_value: f64,
    pub min_value: f64,
    pub violations: Vec<String>,
}

impl KernelValidation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks symmetry, nonnegativity and boundedness on a 1001-point grid and
/// the unit integral by quadrature. Never fails; problems are listed.
pub fn validate_kernel(k: &dyn Kernel) -> KernelValidation {
    let half = match k.support() {
        Some((lo, hi)) => lo.abs().max(hi.abs()),
        None => UNBOUNDED_TRUNCATION,
    };
    let mut max_asymmetry = 0.0f64;
    let mut max_value = f64::NEG_INFINITY;
    let mut min_value = f64::INFINITY;
    for i in 0..GRID_POINTS {
        let u = -half + 2.0 * half * i as f64 / (GRID_POINTS - 1) as f64;
        let (v, w) = (k.eval(u), k.eval(-u));
        max_asymmetry = max_asymmetry.max((v - w).abs());
        max_value = max_value.max(v);
        min_value = min_value.min(v);
    }

    let mut violations = Vec::new();
    if max_asymmetry > 0.0 {
        violations.push(format!(
            "symmetry: max |K(u) - K(-u)| = {max_asymmetry:.3e}"
        ));
    }
    if min_value < 0.0 {
        violations.push(format!("nonnegativity: min K = {min_value:.3e}"));
    }
    if max_value.is_nan() || max_value > k.sup_bound() {
        violations.push(format!(
            "boundedness: max K = {max_value:.6} exceeds declared bound {:.6}",
            k.sup_bound()
        ));
    }
    let integral = integration_range(k)
        .and_then(|(lo, hi)| adaptive_simpson(|u| k.eval(u), lo, hi, QUADRATURE_TOL));
    let integral = match integral {
        Ok(v) => {
            if (v - 1.0).abs() > UNIT_INTEGRAL_TOL {
                violations.push(format!("unit integral: ∫K = {v:.10}"));
            }
            Some(v)
        }
        Err(e) => {
            violations.push(format!("unit integral: {e}"));
            None
        }
    };
    KernelValidation {
        max_asymmetry,
        integral,
        max_value,
        min_value,
        violations,
    }
}

type KernelFactory = fn() -> Arc<dyn Kernel>;

/// Name-to-kernel lookup. [`KernelRegistry::default`] holds the built-ins.
#[derive(Clone)]
pub struct KernelRegistry {
    entries: BTreeMap<String, KernelFactory>,
}

impl Default for KernelRegistry {
    fn default() -> Self {
        let mut r = Self {
            entries: BTreeMap::new(),
        };
        r.register("gaussian", || Arc::new(GaussianKernel));
        r.register("epanechnikov", || Arc::new(EpanechnikovKernel));
        r.register("uniform", || Arc::new(UniformKernel));
        r
    }
}

impl KernelRegistry {
    pub fn register(&mut self, name: &str, factory: KernelFactory) {
        self.entries.insert(name.to_ascii_lowercase(), factory);
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Kernel>> {
        self.entries
            .get(&name.trim().to_ascii_lowercase())
            .map(|f| f())
            .ok_or_else(|| Error::UnknownName {
                kind: "kernel",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }
}

/// Looks `name` up in the built-in registry.
pub fn kernel_by_name(name: &str) -> Result<Arc<dyn Kernel>> {
    KernelRegistry::default().get(name)
}
