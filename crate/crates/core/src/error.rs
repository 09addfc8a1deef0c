use thiserror::Error;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside the range where the routine is defined.
    #[error("{name} = {value} is out of range: expected {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// The analytic continuation requested would leave the real axis.
    #[error("argument {argument} lies on a branch cut; the value has a non-zero imaginary part")]
    BranchCut { argument: f64 },

    /// An iterative scheme did not reach its tolerance within its budget.
    #[error("{what} did not converge after {iterations} iterations")]
    ConvergenceFailure { what: &'static str, iterations: usize },

    /// An integral could not be computed to the requested accuracy.
    #[error("quadrature tolerance not met: estimated error {estimated:e} exceeds {requested:e}")]
    QuadratureTolerance { estimated: f64, requested: f64 },

    /// The integral or series defining a quantity diverges at this point.
    #[error("{what} diverges at {at}")]
    Divergent { what: &'static str, at: f64 },

    /// A density does not satisfy a support hypothesis.
    #[error("support violation: {0}")]
    SupportViolation(String),

    /// A regression-based diagnostic could not be trusted.
    #[error("inconclusive {what}: coefficient of determination {r_squared:.6} below {threshold}")]
    Inconclusive {
        what: &'static str,
        r_squared: f64,
        threshold: f64,
    },

    /// Rejection sampling accepts too rarely to be useful.
    #[error("rejection budget exceeded: acceptance rate {rate:e} is below {minimum:e}")]
    RejectionBudget { rate: f64, minimum: f64 },

    /// Doubling the FFT grid changed the factorization by more than the tolerance.
    #[error("aliasing: doubling the grid changed psi[{index}] by {change:e} (tolerance {tolerance:e})")]
    Aliasing {
        index: usize,
        change: f64,
        tolerance: f64,
    },

    /// The log-spectrum is not integrable.
    #[error("log spectral density is not integrable: {0}")]
    NonIntegrableLog(String),

    /// Malformed input data or configuration.
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// `true` for failures of a numerical tolerance or convergence check, as
    /// opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ConvergenceFailure { .. }
                | Error::QuadratureTolerance { .. }
                | Error::Divergent { .. }
                | Error::Inconclusive { .. }
                | Error::RejectionBudget { .. }
                | Error::Aliasing { .. }
                | Error::NonIntegrableLog(_)
        )
    }

    pub(crate) fn domain(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            expected,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Checks `0 < d < 1/2`, the memory-parameter range used throughout.
pub(crate) fn check_memory(name: &'static str, d: f64) -> Result<()> {
    if d.is_finite() && d > 0.0 && d < 0.5 {
        Ok(())
    } else {
        Err(Error::domain(name, d, "0 < d < 1/2"))
    }
}
