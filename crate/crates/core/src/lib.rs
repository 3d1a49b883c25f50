//! Confidence intervals for the mean of a stationary, possibly long-memory
//! sequence by auxiliary kernel smoothing.
//!
//! Given data `Y_1..Y_n`, draw an independent i.i.d. sample `X_1..X_n` with
//! known density `f` and form
//!
//! ```text
//! r̂ = (1/(n h f(0))) Σ Y_i K(X_i / h)
//! ```
//!
//! The extra randomness makes `√(nh)(r̂ - μ)/√(mean of Y²)` asymptotically
//! normal with variance `B/f(0)`, whatever the memory of `Y`, provided
//! `nh·var(Ȳ_n) → 0`. See [`inference::confidence_interval`] and
//! [`bandwidth`] for the bandwidth rules.

pub mod bandwidth;
pub mod error;
pub mod estimator;
pub mod inference;
pub mod kernels;
pub mod montecarlo;
pub mod numeric;
pub mod processes;
pub mod randomness;
pub mod smoothing;

pub use bandwidth::BandwidthPolicy;
pub use error::{Error, Result};
pub use estimator::EstimateResult;
pub use inference::ConfidenceInterval;
pub use kernels::{Kernel, KernelConstants, KernelRegistry};
pub use montecarlo::{CoverageExperiment, CoverageReport, NormalityReport};
pub use processes::{Process, ProcessSpec};
pub use randomness::{InnovationDist, MasterSeed, RngState};
pub use smoothing::{SmoothingDistribution, SmoothingRegistry};
