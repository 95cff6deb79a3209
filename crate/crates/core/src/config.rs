use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest accepted number of mesh intervals.
pub const MIN_INTERVALS: usize = 16;

/// Run parameters shared by every solver in the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    /// Spatial dimension of the ball.
    pub n: usize,
    /// Exponent of the nonlinearity `(1 - u)^(-p)`; `p = 1` is the MEMS plate problem.
    pub p: f64,
    /// Number of mesh intervals on `[0, 1]`.
    pub intervals: usize,
    /// Exclusion radius for certificates built from functions singular at the origin.
    pub r_min_certificate: f64,
    /// Fixed-point residual tolerance for the nonlinear solvers (units of `u`).
    pub tol_newton: f64,
    /// Eigenvector residual tolerance for inverse iteration.
    pub tol_eig: f64,
    /// Relative width of the final extremal-parameter bracket.
    pub tol_fold: f64,
}

impl ProblemConfig {
    pub fn new(n: usize, intervals: usize) -> Self {
        Self {
            n,
            p: 1.0,
            intervals,
            r_min_certificate: 0.05,
            tol_newton: 1e-11,
            tol_eig: 1e-10,
            tol_fold: 1e-6,
        }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn with_intervals(mut self, intervals: usize) -> Self {
        self.intervals = intervals;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Config(format!("dimension n must be >= 1, got {}", self.n)));
        }
        if self.intervals < MIN_INTERVALS {
            return Err(Error::Config(format!(
                "mesh needs at least {MIN_INTERVALS} intervals, got {}",
                self.intervals
            )));
        }
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(Error::Config(format!("exponent p must be positive, got {}", self.p)));
        }
        if !(self.r_min_certificate > 0.0 && self.r_min_certificate < 1.0) {
            return Err(Error::Config(format!(
                "r_min_certificate must lie in (0, 1), got {}",
                self.r_min_certificate
            )));
        }
        for (name, tol) in [
            ("tol_newton", self.tol_newton),
            ("tol_eig", self.tol_eig),
            ("tol_fold", self.tol_fold),
        ] {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {tol}")));
            }
        }
        Ok(())
    }

    pub fn mesh_width(&self) -> f64 {
        1.0 / self.intervals as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        assert!(ProblemConfig::new(3, 256).validate().is_ok());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ProblemConfig::new(0, 64).validate().is_err());
        assert!(ProblemConfig::new(3, 15).validate().is_err());
        assert!(ProblemConfig::new(3, 64).with_p(0.0).validate().is_err());
        let mut cfg = ProblemConfig::new(3, 64);
        cfg.r_min_certificate = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ProblemConfig::new(3, 64);
        cfg.tol_fold = 0.0;
        assert!(cfg.validate().is_err());
    }
}
