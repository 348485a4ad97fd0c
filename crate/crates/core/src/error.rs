use alloc::string::String;
use core::fmt;

use crate::linalg::SolveReport;

/// Errors raised anywhere in the numerical core.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// The Jacobian determinant of the map is not positive at `(x1, x2)`.
    NonPositiveJacobian { x1: f64, x2: f64, value: f64 },
    /// The right-side boundary weight went negative.
    NegativeBoundaryWeight { s: f64, value: f64 },
    InvalidEpsilon(f64),
    InvalidMeshSize { nx: usize, ny: usize },
    /// The oscillation-resolving rule would need more quadrature points than allowed.
    QuadratureBudgetExceeded { points: usize, cap: usize },
    DimensionMismatch { expected: usize, found: usize },
    /// Two sparse operators that must share a sparsity pattern do not.
    PatternMismatch,
    /// The canonical-metric assembler only supports the linear profile.
    ProfileMismatch,
    NotConverged(SolveReport),
    DegenerateDeflation { index: usize },
    NewtonDiverged { iterations: usize, residual: f64 },
    SingularLinearization(SolveReport),
    BlowupDetected { time: f64, sup_norm: f64 },
    ContinuationLost { epsilon: f64 },
    /// A problem specification violates a structural hypothesis.
    HypothesisViolation { hypothesis: &'static str, detail: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonPositiveJacobian { x1, x2, value } => {
                write!(f, "non-positive Jacobian {value:e} at ({x1}, {x2})")
            }
            Error::NegativeBoundaryWeight { s, value } => {
                write!(f, "negative boundary weight {value:e} at s = {s}")
            }
            Error::InvalidEpsilon(eps) => write!(f, "invalid epsilon {eps}"),
            Error::InvalidMeshSize { nx, ny } => {
                write!(f, "invalid mesh size {nx}x{ny} (need at least 2x2)")
            }
            Error::QuadratureBudgetExceeded { points, cap } => {
                write!(f, "quadrature needs {points} points, cap is {cap}")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::PatternMismatch => f.write_str("sparsity patterns differ"),
            Error::ProfileMismatch => {
                f.write_str("canonical-metric operator requires the linear profile")
            }
            Error::NotConverged(r) => write!(
                f,
                "solver not converged after {} iterations (residual {:e})",
                r.iterations, r.residual
            ),
            Error::DegenerateDeflation { index } => {
                write!(f, "deflation collapsed while computing eigenpair {index}")
            }
            Error::NewtonDiverged { iterations, residual } => {
                write!(f, "Newton diverged after {iterations} steps (residual {residual:e})")
            }
            Error::SingularLinearization(r) => write!(
                f,
                "linearized system could not be solved ({} iterations, residual {:e})",
                r.iterations, r.residual
            ),
            Error::BlowupDetected { time, sup_norm } => {
                write!(f, "blowup detected at t = {time}: sup norm {sup_norm:e}")
            }
            Error::ContinuationLost { epsilon } => {
                write!(f, "continuation lost at epsilon = {epsilon}")
            }
            Error::HypothesisViolation { hypothesis, detail } => {
                write!(f, "{hypothesis}: {detail}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
