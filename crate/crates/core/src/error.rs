//! Error type shared by the solver modules.

use alloc::vec::Vec;
use core::fmt;

/// Failure modes of model construction and the solver pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Incompatible dimensions, e.g. more components than ambient dimensions.
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    /// The requested pairwise spacing admits no valid parameter set.
    InfeasibleSpacing { k: usize, delta: f64 },
    /// Component weights are not a strictly positive probability vector.
    InvalidWeights,
    /// A parameter vector exceeds the unit-norm bound.
    NormBound { component: usize, norm: f64 },
    /// An operation received an empty sample slice.
    EmptySlice,
    /// A config value is out of its documented range.
    InvalidConfig(&'static str),
    /// The second-moment matrix is numerically rank deficient; carries the
    /// full spectrum so callers can inspect the failure.
    RankDeficient { required: usize, spectrum: Vec<f64> },
    /// Every restart of the power method degenerated while extracting the
    /// given component.
    DecompositionFailure { component: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension {
                what,
                expected,
                actual,
            } => write!(f, "dimension error: {what}: expected {expected}, got {actual}"),
            Error::InfeasibleSpacing { k, delta } => write!(
                f,
                "spacing {delta} is infeasible for {k} components (Gram matrix not PSD)"
            ),
            Error::InvalidWeights => write!(
                f,
                "weights must be strictly positive and sum to one"
            ),
            Error::NormBound { component, norm } => write!(
                f,
                "component {component} has norm {norm} exceeding the unit bound"
            ),
            Error::EmptySlice => write!(f, "operation requires a nonempty sample slice"),
            Error::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            Error::RankDeficient { required, spectrum } => write!(
                f,
                "second moment is rank deficient: need rank {required}, spectrum {spectrum:?}"
            ),
            Error::DecompositionFailure { component } => write!(
                f,
                "tensor power method degenerated on every restart for component {component}"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
