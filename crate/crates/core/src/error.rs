use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the geometric and variational routines.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A simplex or vertex index is out of range.
    InvalidIndex { index: usize, len: usize },
    /// A source simplex has (numerically) zero measure.
    DegenerateSimplex { simplex: usize },
    /// A simplex of the image of a map has (numerically) zero measure.
    DegenerateImage { simplex: usize },
    /// A map reverses orientation, either globally (`simplex == None`) or on
    /// one folded simplex.
    OrientationReversal { simplex: Option<usize> },
    /// Two objects that must share combinatorics or positions do not.
    Incompatible(&'static str),
    /// An argument lies outside the domain of the operation.
    Domain(&'static str),
    /// Structural construction error or failed validation.
    Invalid(String),
    /// The line search could not decrease the objective any further.
    Stagnation { residual: f64, iterations: usize },
    /// The iteration cap was reached before the tolerance.
    NotConverged { residual: f64, iterations: usize },
    /// Curve reparametrization could not close the loop.
    ClosureFailed { gap: f64 },
    /// Precondition of the volume-based morph functional.
    NotPairwiseMinimal { deviation: f64 },
    /// A requested time is not a sample of the morph grid.
    TimeNotOnGrid { t: f64 },
    /// Random generation exhausted its retry budget.
    Generation { attempts: usize },
    /// An error attached to one morph frame.
    Frame { index: usize, source: Box<Error> },
}

impl Error {
    /// True for the iterative-solver failures (stagnation, iteration cap,
    /// loop closure), possibly wrapped in a frame error.
    pub fn is_convergence_failure(&self) -> bool {
        match self {
            Error::Stagnation { .. } | Error::NotConverged { .. } | Error::ClosureFailed { .. } => {
                true
            }
            Error::Frame { source, .. } => source.is_convergence_failure(),
            _ => false,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidIndex { index, len } => {
                write!(f, "index {index} out of range (len {len})")
            }
            Error::DegenerateSimplex { simplex } => write!(f, "degenerate simplex {simplex}"),
            Error::DegenerateImage { simplex } => {
                write!(f, "image of simplex {simplex} is degenerate")
            }
            Error::OrientationReversal { simplex: Some(s) } => {
                write!(f, "map reverses orientation on simplex {s}")
            }
            Error::OrientationReversal { simplex: None } => {
                write!(f, "map reverses the global orientation")
            }
            Error::Incompatible(what) => write!(f, "incompatible inputs: {what}"),
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::Invalid(what) => write!(f, "invalid input: {what}"),
            Error::Stagnation { residual, iterations } => write!(
                f,
                "line search stagnated after {iterations} iterations (residual {residual:e})"
            ),
            Error::NotConverged { residual, iterations } => write!(
                f,
                "not converged after {iterations} iterations (residual {residual:e})"
            ),
            Error::ClosureFailed { gap } => {
                write!(f, "curve reparametrization failed to close the loop (gap {gap:e})")
            }
            Error::NotPairwiseMinimal { deviation } => write!(
                f,
                "morph is not pairwise minimal (max Jacobian deviation {deviation:e})"
            ),
            Error::TimeNotOnGrid { t } => write!(f, "time {t} is not a sample of the morph"),
            Error::Generation { attempts } => {
                write!(f, "could not generate a valid object in {attempts} attempts")
            }
            Error::Frame { index, source } => write!(f, "frame {index}: {source}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::Frame { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}
