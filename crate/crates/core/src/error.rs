use thiserror::Error;

/// Errors raised by the solver stack.
///
/// `NoConvergence` and `FoldDetected` are expected outcomes near or past the
/// extremal parameter and are matched on by the continuation driver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("singular operator: pivot {pivot:.3e} at row {row} (largest pivot {max_pivot:.3e})")]
    SingularOperator {
        row: usize,
        pivot: f64,
        max_pivot: f64,
    },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e}): {reason}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        reason: String,
    },

    /// The eigenvalue iteration stalled. Never read as "no solution".
    #[error("eigenvalue iteration stalled after {iterations} iterations (residual {residual:.3e})")]
    EigenNoConvergence { iterations: usize, residual: f64 },

    #[error("fold detected at lambda = {lambda}: linearization is singular")]
    FoldDetected { lambda: f64 },

    #[error("singular weight: field reaches {value} at node {node}")]
    SingularWeight { node: usize, value: f64 },

    #[error("certificate domain violated at node {node}: {reason}")]
    CertificateDomain { node: usize, reason: String },
}

impl Error {
    /// True for outcomes that signal "no solution at this parameter" rather
    /// than a defect in the solver.
    pub fn is_no_solution(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::FoldDetected { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
