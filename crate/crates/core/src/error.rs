//! Error type shared by all engines.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// One violated parameter invariant.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ValidationIssue {
    /// Name of the offending field, e.g. `"hurst"`.
    pub field: String,
    /// Human readable explanation.
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Which no-arbitrage bound an option price violated during vol inversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PriceBound {
    /// At or below discounted intrinsic value (zero volatility).
    Lower,
    /// At or above the discounted forward (infinite volatility).
    Upper,
}

impl fmt::Display for PriceBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriceBound::Lower => f.write_str("lower (intrinsic) bound"),
            PriceBound::Upper => f.write_str("upper (forward) bound"),
        }
    }
}

/// Errors raised by the numerical engines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the function's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative method hit its iteration cap.
    #[error("no convergence in {what} after {iterations} iterations (partial value {partial}, error bound {bound})")]
    Convergence {
        /// Which computation failed.
        what: String,
        /// Iterations performed.
        iterations: usize,
        /// Value accumulated so far.
        partial: f64,
        /// Best available bound on the remaining error.
        bound: f64,
    },

    /// The linear-domain result overflows `f64`; use the log-domain variant.
    #[error("overflow in {0}; use the log-domain variant")]
    Overflow(String),

    /// The time-change clock is not strictly positive.
    #[error("degenerate clock: gamma_T = {0}")]
    DegenerateClock(f64),

    /// A valid request routed to an engine that cannot handle it.
    #[error("wrong branch: {0}")]
    WrongBranch(String),

    /// Parameter combination the engine does not support.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Aggregated parameter validation failures.
    #[error("invalid parameters: {}", join(.0))]
    Validation(Vec<ValidationIssue>),

    /// Spot lies outside the finite-difference grid.
    #[error("spot {spot} outside PDE grid [{x_min}, {x_max}]")]
    OutsideGrid {
        /// Requested spot.
        spot: f64,
        /// Lower grid bound.
        x_min: f64,
        /// Upper grid bound.
        x_max: f64,
    },

    /// The time stepping produced non-finite values.
    #[error("PDE instability: {0}")]
    Instability(String),

    /// A covariance matrix could not be factorized even after jitter.
    #[error("covariance matrix not positive semidefinite (jitter {jitter})")]
    NotPositiveDefinite {
        /// Largest jitter tried.
        jitter: f64,
    },

    /// Implied volatility inversion failed.
    #[error("price {price} violates the {bound}")]
    Inversion {
        /// Offending price.
        price: f64,
        /// Which bound.
        bound: PriceBound,
    },
}

fn join(issues: &[ValidationIssue]) -> String {
    let mut out = String::new();
    for (i, issue) in issues.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        out.push_str(&alloc::format!("{issue}"));
    }
    out
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Short machine-readable tag for reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Convergence { .. } => "convergence",
            Error::Overflow(_) => "overflow",
            Error::DegenerateClock(_) => "degenerate_clock",
            Error::WrongBranch(_) => "wrong_branch",
            Error::Unsupported(_) => "unsupported",
            Error::Validation(_) => "validation",
            Error::OutsideGrid { .. } => "outside_grid",
            Error::Instability(_) => "instability",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::Inversion { .. } => "inversion",
        }
    }
}
