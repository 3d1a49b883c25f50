use thiserror::Error;

/// Errors raised by the estimation, bandwidth and simulation routines.
///
/// Variants are split along the line the command-line front end cares about:
/// [`Error::is_statistical`] marks data-dependent precondition failures (a
/// zero sample mean under the plug-in rule, say) as opposed to malformed
/// configuration.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: {left} values vs {right} values")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate weights: kernel mass is zero at bandwidth {h}")]
    DegenerateWeights { h: f64 },

    #[error("plug-in bandwidth undefined: sample mean is zero")]
    ZeroMean,

    #[error("plug-in bandwidth undefined: second sample moment is zero (all-zero data)")]
    ZeroSecondMoment,

    #[error("plug-in bandwidth unavailable: {0}")]
    PlugInUnavailable(String),

    #[error(
        "plug-in bandwidth inadmissible: variance of the mean decays like n^-{beta}, \
         but the plug-in rule needs var(mean) = o(n^-4/5); use an explicit power-law bandwidth"
    )]
    InadmissiblePlugIn { beta: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownName {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures caused by the data rather than by the configuration.
    pub fn is_statistical(&self) -> bool {
        matches!(
            self,
            Error::ZeroMean | Error::ZeroSecondMoment | Error::DegenerateWeights { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
