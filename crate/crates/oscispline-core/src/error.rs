//! Error type shared by the whole crate.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Diagnostics attached to a solver that ran out of iterations.
#[derive(Debug, Clone)]
pub struct ConvergenceFailure {
    /// Which solver gave up.
    pub context: String,
    /// Best residual reached (same normalization the solver converges on).
    pub residual: f64,
    /// Iterations spent.
    pub iterations: usize,
    /// Best knot vector reached, when the solver has one.
    pub best_knots: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum Error {
    /// A weight family parameter combination yields w(t) <= 0 somewhere.
    NonPositive(String),
    /// Half-line weight without a computable limit at infinity.
    MissingLimit,
    /// Operands live on different domains.
    DomainMismatch,
    /// A supremum exceeded the overflow guard; the norm is infinite.
    NotFinite,
    /// Tail quadrature failed to converge; (th0)/(th1) violated numerically.
    Divergent(String),
    /// Knots outside the open domain interval.
    KnotsOutOfRange,
    /// Knot vector not strictly increasing.
    KnotsNotSorted,
    /// Prescribed zeros closer than the resolution limit.
    ZerosTooClose,
    /// Evaluation point outside the spline domain.
    OutOfDomain { t: f64 },
    /// An envelope weight is non-positive somewhere on the domain.
    InvalidEnvelope,
    /// Standing assumptions were not verified for the requested operation.
    AssumptionsNotVerified(String),
    /// Requested norm level outside the attainable range.
    OutOfRange(String),
    /// Operation called outside its stated parameter range.
    PreconditionViolated(String),
    /// Iterative solver failed; carries the best iterate found.
    NoConvergence(Box<ConvergenceFailure>),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonPositive(what) => write!(f, "weight is not positive: {what}"),
            Error::MissingLimit => write!(f, "half-line weight needs a limit at infinity"),
            Error::DomainMismatch => write!(f, "weights live on different domains"),
            Error::NotFinite => write!(f, "supremum exceeds the overflow guard (norm is infinite)"),
            Error::Divergent(what) => write!(f, "tail integral diverges: {what}"),
            Error::KnotsOutOfRange => write!(f, "knots must lie strictly inside the domain"),
            Error::KnotsNotSorted => write!(f, "knots must be strictly increasing"),
            Error::ZerosTooClose => write!(f, "prescribed zeros are below the resolution limit"),
            Error::OutOfDomain { t } => write!(f, "evaluation point t = {t} outside the domain"),
            Error::InvalidEnvelope => write!(f, "envelope weight is non-positive somewhere"),
            Error::AssumptionsNotVerified(what) => {
                write!(f, "standing assumptions not verified: {what}")
            }
            Error::OutOfRange(what) => write!(f, "requested value out of range: {what}"),
            Error::PreconditionViolated(what) => write!(f, "precondition violated: {what}"),
            Error::NoConvergence(fail) => write!(
                f,
                "{} did not converge after {} iterations (best residual {:.3e})",
                fail.context, fail.iterations, fail.residual
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
