//! Local minimisation, steepest-descent path tracing and basin-hopping.

mod basin;
mod descent;
mod lbfgs;

pub use basin::{basin_hopping, dedup_minima, BasinHoppingConfig};
pub use descent::steepest_descent_path;
pub use lbfgs::local_minimize;

pub(crate) use lbfgs::LbfgsMemory;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimizerConfig {
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
    /// Number of correction pairs kept by the quasi-Newton update.
    pub history_size: usize,
}

impl Default for MinimizerConfig {
    fn default() -> Self {
        MinimizerConfig {
            gradient_tolerance: 1e-6,
            max_iterations: 2000,
            history_size: 10,
        }
    }
}

impl MinimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_tolerance > 0.0) || self.max_iterations == 0 || self.history_size == 0 {
            return Err(Error::invalid(
                "minimizer needs gradient_tolerance > 0, max_iterations >= 1, history_size >= 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMinimum {
    pub position: Point,
    pub value: f64,
    /// Norm of the bound-projected gradient at `position`.
    pub gradient_norm: f64,
    pub converged: bool,
    /// Converged only because a box face blocks further descent; the
    /// unconstrained gradient is not small there.
    pub pinned_to_bounds: bool,
    pub iterations: usize,
}

impl LocalMinimum {
    /// A converged, unpinned result: a genuine stationary point of the surface.
    pub fn is_stationary(&self) -> bool {
        self.converged && !self.pinned_to_bounds
    }
}
