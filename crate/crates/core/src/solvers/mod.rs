//! Online solvers: space-time Galerkin Newton, the sequential reduced
//! baseline, warm starts and reconstruction of full-order fields.

pub mod reconstruct;
pub mod srb;
pub mod stgrb;
pub mod warmstart;

pub use reconstruct::{project_trajectory, reconstruct_space_time};
pub use srb::{ReducedHistory, SrbSolution, SrbSolver};
pub use stgrb::{StGrbSolver, StSolution};
pub use warmstart::{NniWeighting, WarmStartStore, WarmStartStrategy};

use crate::error::{Error, Result};
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JacobianMode {
    /// Jacobian reassembled and factorized at every iteration.
    #[default]
    Full,
    /// Linear operator only, factorized once per membrane parameter and reused.
    Quasi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Relative residual tolerance.
    pub tol: f64,
    pub max_iters: usize,
    pub mode: JacobianMode,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            max_iters: 10,
            mode: JacobianMode::Full,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidTolerance(self.tol));
        }
        if self.max_iters == 0 {
            return Err(Error::Infeasible("Newton needs at least one iteration".into()));
        }
        Ok(())
    }

    /// Whether the iteration may stop at residual norm `r` given the initial norm `r0`.
    pub(crate) fn satisfied(&self, r: f64, r0: f64, x_norm: f64) -> bool {
        r <= self.tol * r0 || r <= 1e-15 * (1.0 + x_norm)
    }
}

/// Outcome of one Newton solve. Non-convergence is reported, not raised.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// Residual 2-norm before each iteration and after the last one.
    pub residuals: Vec<f64>,
    pub wall_time: Duration,
}
