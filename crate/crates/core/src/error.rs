use thiserror::Error;

use crate::feasibility::{FeasibilityReport, Infeasibility};

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, Error)]
pub enum ModelError {
    #[error("invalid parameter {name} = {value}: must satisfy {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    #[error("{what} = {value} lies outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// The free-entry cutoff lies above the top of the cost support.
    #[error("support violation: cutoff {cutoff} exceeds c_M = {cost_max}{}", min_hint(*.min_cost_max))]
    SupportViolation {
        cutoff: f64,
        cost_max: f64,
        min_cost_max: Option<f64>,
    },

    #[error("no feasible equilibrium: {}", .0.failure_summary())]
    Infeasible(FeasibilityReport),

    #[error("internal inconsistency in {what}: residual {residual:e}")]
    Inconsistent { what: &'static str, residual: f64 },

    #[error("degenerate Jacobian: dF/dM = {value:e}")]
    DegenerateJacobian { value: f64 },

    #[error("best-response iteration failed to converge after {iterations} iterations (damping {damping})")]
    NoConvergence { iterations: usize, damping: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn min_hint(min: Option<f64>) -> String {
    match min {
        Some(m) => format!(" (c_M >= {m} restores an interior cutoff)"),
        None => String::new(),
    }
}

impl ModelError {
    /// Economic classification of a failure, shared by the analytic solvers
    /// and the oracle. `None` for input and numerical errors.
    pub fn infeasibility(&self) -> Option<Infeasibility> {
        match self {
            ModelError::SupportViolation { .. } => Some(Infeasibility::Support),
            ModelError::Infeasible(report) => report.classify(),
            _ => None,
        }
    }
}
