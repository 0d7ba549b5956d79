//! Constraint audit of a candidate covariance.

use super::{AffineConstraint, Sense};
use crate::scene::CovarianceMatrix;

/// Relative tolerance used to call a constraint satisfied.
pub const FEASIBILITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintResidual {
    pub label: String,
    pub sense: Sense,
    pub value: f64,
    pub rhs: f64,
    /// Signed slack, negative when violated.
    pub residual: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub constraints: Vec<ConstraintResidual>,
    pub min_eigenvalue: f64,
    pub trace: f64,
    /// Set when `λ_min < −1e-8 · tr R`.
    pub psd_violation: bool,
}

impl ValidationReport {
    pub fn feasible(&self) -> bool {
        !self.psd_violation && self.constraints.iter().all(|c| c.satisfied)
    }

    /// Most negative slack relative to `max(1, |rhs|)`, or zero.
    pub fn worst_relative_violation(&self) -> f64 {
        self.constraints
            .iter()
            .map(|c| (-c.residual / c.rhs.abs().max(1.0)).max(0.0))
            .fold(0.0, f64::max)
    }
}

pub fn validate_solution(r: &CovarianceMatrix, constraints: &[AffineConstraint]) -> ValidationReport {
    let constraints = constraints
        .iter()
        .map(|c| {
            let residual = c.slack(r);
            ConstraintResidual {
                label: c.label.clone(),
                sense: c.sense,
                value: c.functional.eval(r),
                rhs: c.rhs,
                residual,
                satisfied: residual >= -FEASIBILITY_TOL * c.rhs.abs().max(1.0),
            }
        })
        .collect();
    let min_eigenvalue = if r.is_empty() {
        0.0
    } else {
        crate::linalg::min_eigenvalue(r)
    };
    let trace = crate::linalg::trace_re(r);
    ValidationReport {
        constraints,
        min_eigenvalue,
        trace,
        psd_violation: min_eigenvalue < -1e-8 * trace.abs(),
    }
}
