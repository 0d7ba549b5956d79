//! Small dense convex solver over Hermitian positive semidefinite matrices.
//!
//! Problems have the form
//!
//! ```text
//! minimize    w_lin ⟨C, R⟩ + w_det / (s · det F(R))
//! subject to  ⟨A_i, R⟩ (≤ | ≥ | =) b_i,   R ⪰ 0
//! ```
//!
//! where `F` is a linear map into real symmetric matrices (a Fisher
//! information map) and `s > 0` a normalizer. The solver is a log-det
//! barrier interior point method with damped Newton steps on the real
//! coordinates of `R` (see [`HermitianBasis`]). Equality constraints are
//! eliminated exactly. A phase-1 slack problem finds a strictly feasible
//! start or certifies infeasibility.

mod barrier;
mod detinv;
mod validate;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::array::SteeringVector;
use crate::error::{Error, Result};
use crate::fim::{FisherMatrix, RadarModel};
use crate::linalg::HermitianBasis;
use crate::scene::CovarianceMatrix;

pub use detinv::{det_inv_value_grad_hess, DetInvOracle};
pub use validate::{validate_solution, ConstraintResidual, ValidationReport};

/// `R ↦ Re tr(C R)` for a Hermitian coefficient `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFunctional {
    coefficient: DMatrix<Complex64>,
}

impl LinearFunctional {
    /// Fails with [`Error::NotHermitian`] if `C` deviates from its adjoint by
    /// more than `1e-12` relative.
    pub fn new(coefficient: DMatrix<Complex64>) -> Result<Self> {
        if !coefficient.is_square() {
            return Err(Error::DimensionMismatch {
                expected: coefficient.nrows(),
                got: coefficient.ncols(),
            });
        }
        let residue = (&coefficient - coefficient.adjoint()).norm();
        if residue > 1e-12 * coefficient.norm().max(1.0) {
            return Err(Error::NotHermitian { residue });
        }
        Ok(Self {
            coefficient: crate::linalg::hermitian_part(&coefficient),
        })
    }

    /// Beampattern `aᴴ R a`, i.e. `C = a aᴴ`.
    pub fn beampattern(a: &SteeringVector) -> Self {
        Self {
            coefficient: a * a.adjoint(),
        }
    }

    /// `tr R`.
    pub fn trace(n: usize) -> Self {
        Self {
            coefficient: DMatrix::identity(n, n),
        }
    }

    pub fn coefficient(&self) -> &DMatrix<Complex64> {
        &self.coefficient
    }

    pub fn n(&self) -> usize {
        self.coefficient.nrows()
    }

    pub fn eval(&self, r: &CovarianceMatrix) -> f64 {
        crate::linalg::inner(&self.coefficient, r)
    }

    /// `self − other`.
    pub fn minus(&self, other: &LinearFunctional) -> Self {
        Self {
            coefficient: &self.coefficient - &other.coefficient,
        }
    }

    /// `c · self`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            coefficient: &self.coefficient * Complex64::new(c, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// `⟨C, R⟩ sense rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineConstraint {
    pub functional: LinearFunctional,
    pub sense: Sense,
    pub rhs: f64,
    /// Short name used in reports.
    pub label: String,
}

impl AffineConstraint {
    pub fn le(functional: LinearFunctional, rhs: f64, label: impl Into<String>) -> Self {
        Self {
            functional,
            sense: Sense::Le,
            rhs,
            label: label.into(),
        }
    }

    pub fn ge(functional: LinearFunctional, rhs: f64, label: impl Into<String>) -> Self {
        Self {
            functional,
            sense: Sense::Ge,
            rhs,
            label: label.into(),
        }
    }

    pub fn eq(functional: LinearFunctional, rhs: f64, label: impl Into<String>) -> Self {
        Self {
            functional,
            sense: Sense::Eq,
            rhs,
            label: label.into(),
        }
    }

    /// Signed slack: non-negative when satisfied, `−|violation|` otherwise.
    pub fn slack(&self, r: &CovarianceMatrix) -> f64 {
        let v = self.functional.eval(r);
        match self.sense {
            Sense::Le => self.rhs - v,
            Sense::Ge => v - self.rhs,
            Sense::Eq => -(v - self.rhs).abs(),
        }
    }
}

/// Linear map `R ↦ F(R)` into real symmetric matrices, stored as the images
/// of the Hermitian basis.
#[derive(Debug, Clone)]
pub struct FimMap {
    basis: HermitianBasis,
    images: Vec<DMatrix<f64>>,
}

impl FimMap {
    /// Tabulates a linear map by evaluating it on every basis element.
    pub fn from_linear_map(
        n: usize,
        mut f: impl FnMut(&CovarianceMatrix) -> Result<DMatrix<f64>>,
    ) -> Result<Self> {
        let basis = HermitianBasis::new(n);
        let images = (0..basis.dim())
            .map(|k| f(&basis.element(k)).map(|m| (&m + m.transpose()) * 0.5))
            .collect::<Result<Vec<_>>>()?;
        let d = images.first().map_or(0, |m| m.nrows());
        if d == 0 || images.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(Error::Domain("linear map must return square matrices of one size".into()));
        }
        Ok(Self { basis, images })
    }

    /// Fisher information map of a radar model.
    pub fn from_model(model: &RadarModel) -> Result<Self> {
        Self::from_linear_map(model.tx.n_elements(), |r| {
            model.fisher(r).map(FisherMatrix::into_matrix)
        })
    }

    /// Side length of the argument matrix.
    pub fn n(&self) -> usize {
        self.basis.n()
    }

    /// Side length of the image matrix.
    pub fn out_dim(&self) -> usize {
        self.images[0].nrows()
    }

    pub(crate) fn apply_coords(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let d = self.out_dim();
        let mut out = DMatrix::zeros(d, d);
        for (xk, img) in x.iter().zip(&self.images) {
            if *xk != 0.0 {
                out += img * *xk;
            }
        }
        out
    }

    pub(crate) fn images(&self) -> &[DMatrix<f64>] {
        &self.images
    }

    pub fn apply(&self, r: &CovarianceMatrix) -> FisherMatrix {
        FisherMatrix::from_matrix(self.apply_coords(&self.basis.coords(r)))
    }

    /// Adjoint map: the Hermitian `G` with `⟨G, R⟩ = ⟨S, F(R)⟩` for all `R`.
    pub fn adjoint(&self, s: &DMatrix<f64>) -> CovarianceMatrix {
        self.basis.to_matrix(&self.adjoint_coords(s))
    }

    pub(crate) fn adjoint_coords(&self, s: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.images.len(),
            self.images.iter().map(|img| img.component_mul(s).sum()),
        )
    }
}

/// Weighted objective `w_lin ⟨C, R⟩ + w_det / (scale · det F(R))`.
#[derive(Debug, Clone)]
pub struct ObjectiveSpec {
    pub linear_weight: f64,
    pub linear_term: Option<LinearFunctional>,
    pub detinv_weight: f64,
    pub fim_map: Option<FimMap>,
    pub detinv_scale: f64,
}

impl ObjectiveSpec {
    pub fn linear(term: LinearFunctional) -> Self {
        Self {
            linear_weight: 1.0,
            linear_term: Some(term),
            detinv_weight: 0.0,
            fim_map: None,
            detinv_scale: 1.0,
        }
    }

    /// `1 / (scale · det F(R))`.
    pub fn detinv(map: FimMap, scale: f64) -> Self {
        Self {
            linear_weight: 0.0,
            linear_term: None,
            detinv_weight: 1.0,
            fim_map: Some(map),
            detinv_scale: scale,
        }
    }

    pub fn weighted(
        linear_weight: f64,
        term: LinearFunctional,
        detinv_weight: f64,
        map: FimMap,
        scale: f64,
    ) -> Self {
        Self {
            linear_weight,
            linear_term: Some(term),
            detinv_weight,
            fim_map: Some(map),
            detinv_scale: scale,
        }
    }

    fn has_linear(&self) -> bool {
        self.linear_weight > 0.0 && self.linear_term.is_some()
    }

    fn has_det(&self) -> bool {
        self.detinv_weight > 0.0 && self.fim_map.is_some()
    }

    pub(crate) fn check(&self, n: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::Domain(m.to_string()));
        if !(self.linear_weight >= 0.0 && self.detinv_weight >= 0.0) {
            return bad("objective weights must be non-negative");
        }
        if !self.has_linear() && !self.has_det() {
            return bad("objective has no active term");
        }
        if self.has_det() && !(self.detinv_scale > 0.0 && self.detinv_scale.is_finite()) {
            return bad("determinant normalizer must be positive");
        }
        if let Some(t) = &self.linear_term {
            if t.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: t.n(),
                });
            }
        }
        if let Some(m) = &self.fim_map {
            if m.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: m.n(),
                });
            }
        }
        Ok(())
    }

    /// Value of the `1/det` term alone (unweighted, normalized).
    pub fn detinv_term(&self, r: &CovarianceMatrix) -> Result<f64> {
        let map = self
            .fim_map
            .as_ref()
            .ok_or_else(|| Error::Domain("objective has no determinant term".into()))?;
        let ld = crate::fim::log_det_crb(&map.apply(r))?;
        Ok((ld - self.detinv_scale.ln()).exp())
    }

    /// Objective value at `R`.
    pub fn evaluate(&self, r: &CovarianceMatrix) -> Result<f64> {
        let mut v = 0.0;
        if self.has_linear() {
            v += self.linear_weight * self.linear_term.as_ref().unwrap().eval(r);
        }
        if self.has_det() {
            v += self.detinv_weight * self.detinv_term(r)?;
        }
        Ok(v)
    }
}

/// Solver tolerances and limits.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    /// Barrier weight updates before giving up.
    pub max_outer: usize,
    /// Newton steps allowed per centering.
    pub max_newton: usize,
    /// Stop once the barrier weight is below this fraction of its start value.
    pub barrier_ratio: f64,
    /// Centering stops when half the squared Newton decrement is below this.
    pub newton_tol: f64,
    /// Required duality gap relative to `1 + |objective|`.
    pub gap_tol: f64,
    /// Barrier weight reduction factor.
    pub mu: f64,
    /// Keep a per-outer-iteration trace in the result.
    pub record_trace: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            max_outer: 60,
            max_newton: 200,
            barrier_ratio: 1e-9,
            newton_tol: 1e-8,
            gap_tol: 1e-8,
            mu: 10.0,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::Infeasible => "Infeasible",
            SolveStatus::MaxIterations => "MaxIterations",
        };
        f.write_str(s)
    }
}

/// One barrier-weight update.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterateRecord {
    pub phase: u8,
    pub outer: usize,
    pub barrier_weight: f64,
    pub objective: f64,
    pub newton_steps: usize,
    pub decrement: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub r: CovarianceMatrix,
    pub objective: f64,
    pub status: SolveStatus,
    /// Total Newton steps over both phases.
    pub iterations: usize,
    pub kkt_residual: f64,
    /// Duality gap bound `κ m` at the final iterate.
    pub duality_gap: f64,
    pub trace: Vec<IterateRecord>,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Iterate trace as JSON lines.
    pub fn trace_json_lines(&self) -> String {
        self.trace
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }
}

/// Solves the problem over `n × n` Hermitian PSD matrices.
///
/// Input errors (dimension mismatch, non-finite data, an objective with no
/// active term) are returned as `Err`. Infeasibility and iteration limits are
/// reported through [`SolveResult::status`].
pub fn solve(
    objective: &ObjectiveSpec,
    constraints: &[AffineConstraint],
    n: usize,
    settings: &Settings,
) -> Result<SolveResult> {
    if n == 0 {
        return Err(Error::Domain("matrix dimension must be at least one".into()));
    }
    objective.check(n)?;
    for c in constraints {
        if c.functional.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: c.functional.n(),
            });
        }
        if !c.rhs.is_finite() {
            return Err(Error::config(&c.label, "constraint bound must be finite"));
        }
    }
    barrier::run(objective, constraints, n, settings)
}
