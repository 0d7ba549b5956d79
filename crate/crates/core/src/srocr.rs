//! Sequential rank-one constraint relaxation.
//!
//! Starting from a relaxed (SDR) solution `R⁰`, each iteration re-solves the
//! problem with the cut `uᴴ R u ≥ w tr(R)`, where `u` is the principal
//! eigenvector of the previous iterate. `w` is raised towards one by a step
//! `δ` that is halved whenever the cut makes the problem infeasible.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{fix_phase, hermitian_eigen, trace_re};
use crate::scene::CovarianceMatrix;
use crate::sdp::{self, AffineConstraint, LinearFunctional, ObjectiveSpec, SolveResult, SolveStatus};

/// Eigenvalues closer than this fraction of the trace count as tied.
const DEGENERATE_GAP: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SrocrSettings {
    /// Objective change tolerance, relative to `max(1, |opt⁰|)`.
    pub vartheta: f64,
    /// Required `λ_max / tr R`.
    pub tau: f64,
    pub max_iter: usize,
    /// `δ⁰ = delta_fraction · (1 − w⁰)`.
    pub delta_fraction: f64,
}

impl Default for SrocrSettings {
    fn default() -> Self {
        Self {
            vartheta: 1e-4,
            tau: 0.999,
            max_iter: 50,
            delta_fraction: 0.5,
        }
    }
}

/// One refinement iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SrocrState {
    pub j: usize,
    /// Cut level used in this iteration.
    pub w: f64,
    pub delta: f64,
    /// Objective of the accepted iterate after this iteration.
    pub opt: f64,
    /// `λ_max / tr` of the accepted iterate.
    pub ratio: f64,
    pub feasible: bool,
    pub solver_iterations: usize,
    #[serde(skip)]
    pub r: CovarianceMatrix,
    #[serde(skip)]
    pub u: DVector<Complex64>,
}

#[derive(Debug, Clone)]
pub struct SrocrOutcome {
    pub result: SolveResult,
    pub ratio: f64,
    /// Number of augmented solves performed.
    pub solves: usize,
    pub trace: Vec<SrocrState>,
}

/// Principal eigenvector `u` (unit norm, phase fixed) and `uᴴRu / tr R`.
pub fn principal_ratio(r: &CovarianceMatrix) -> Result<(DVector<Complex64>, f64)> {
    let tr = trace_re(r);
    if !(tr > 0.0) {
        return Err(Error::Domain(format!("trace must be positive, got {tr}")));
    }
    let (vals, vecs) = hermitian_eigen(r);
    let top = vals[0];
    // Deterministic pick inside a (near) degenerate top eigenspace.
    let mut best: Option<DVector<Complex64>> = None;
    for k in 0..vals.len() {
        if top - vals[k] > DEGENERATE_GAP * tr {
            break;
        }
        let cand = fix_phase(&vecs.column(k).into_owned(), 1e-9);
        let better = match &best {
            None => true,
            Some(b) => cand[0].re > b[0].re + 1e-12,
        };
        if better {
            best = Some(cand);
        }
    }
    let u = best.expect("at least one eigenvector");
    let w = (u.adjoint() * r * &u)[(0, 0)].re / tr;
    Ok((u, w))
}

/// Cut `uᴴ R u − w tr R ≥ 0`.
fn cut(u: &DVector<Complex64>, w: f64) -> AffineConstraint {
    let n = u.len();
    let c = u * u.adjoint() - DMatrix::identity(n, n) * Complex64::new(w, 0.0);
    AffineConstraint::ge(
        LinearFunctional::new(c).expect("rank-one cut is Hermitian"),
        0.0,
        "rank_one_cut",
    )
}

/// Runs the refinement from the relaxed solution `r0`.
///
/// Succeeds once the ratio reaches `τ` and the objective has settled; after
/// `max_iter` iterations [`Error::RankOneFailure`] carries the iterate with
/// the highest ratio.
pub fn srocr_refine(
    objective: &ObjectiveSpec,
    constraints: &[AffineConstraint],
    r0: &SolveResult,
    settings: &SrocrSettings,
    solver: &sdp::Settings,
) -> Result<SrocrOutcome> {
    let n = r0.r.nrows();
    let (mut u, w0) = principal_ratio(&r0.r)?;
    let mut current = r0.clone();
    let mut ratio = w0;
    if w0 >= settings.tau {
        return Ok(SrocrOutcome {
            result: current,
            ratio,
            solves: 0,
            trace: Vec::new(),
        });
    }
    let opt_scale = r0.objective.abs().max(1.0);
    let mut w = w0;
    let mut delta = settings.delta_fraction * (1.0 - w0);
    let mut trace = Vec::new();
    let mut best = (ratio, current.clone());
    let mut cons = constraints.to_vec();
    cons.push(cut(&u, w));
    for j in 0..settings.max_iter {
        *cons.last_mut().expect("cut present") = cut(&u, w);
        let prev_opt = current.objective;
        let res = sdp::solve(objective, &cons, n, solver)?;
        let feasible = res.status == SolveStatus::Optimal;
        if feasible {
            current = res;
            let (u1, r1) = principal_ratio(&current.r)?;
            u = u1;
            ratio = r1;
        } else {
            delta *= 0.5;
        }
        trace.push(SrocrState {
            j,
            w,
            delta,
            opt: current.objective,
            ratio,
            feasible,
            solver_iterations: current.iterations,
            r: current.r.clone(),
            u: u.clone(),
        });
        if ratio > best.0 {
            best = (ratio, current.clone());
        }
        let settled = (current.objective - prev_opt).abs() <= settings.vartheta * opt_scale;
        if feasible && settled && ratio >= settings.tau {
            return Ok(SrocrOutcome {
                result: current,
                ratio,
                solves: j + 1,
                trace,
            });
        }
        w = (ratio + delta).min(1.0);
    }
    Err(Error::RankOneFailure {
        best: Box::new(best.1),
        ratio: best.0,
    })
}

/// Beamformer `w = sqrt(λ_max) u` of a numerically rank-one covariance, with
/// its first significant entry real and non-negative.
pub fn extract_beamformer(r: &CovarianceMatrix, tau: f64) -> Result<DVector<Complex64>> {
    let (u, ratio) = principal_ratio(r)?;
    if ratio < tau {
        return Err(Error::ContractViolation(format!(
            "covariance is not rank one: eigen ratio {ratio:.6} < {tau}"
        )));
    }
    let lambda = ratio * trace_re(r);
    Ok(u * Complex64::new(lambda.sqrt(), 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn rank_one_ratio() {
        let v = DVector::from_vec(vec![Complex64::new(1.0, 1.0), c(2.0), Complex64::new(0.0, -1.0)]);
        let r = &v * v.adjoint();
        let (u, w) = principal_ratio(&r).unwrap();
        assert!((w - 1.0).abs() < 1e-12);
        let overlap = u.dotc(&v).norm() / v.norm();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_ratio() {
        let (_, w) = principal_ratio(&DMatrix::identity(4, 4)).unwrap();
        assert!((w - 0.25).abs() < 1e-12);
        assert!(principal_ratio(&DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn ratio_lower_bound() {
        for s in 0..20 {
            let b = DMatrix::from_fn(5, 5, |i, j| {
                Complex64::new(((s * 7 + i * 3 + j) as f64).sin(), ((s + i * j) as f64).cos())
            });
            let r = &b * b.adjoint();
            let (_, w) = principal_ratio(&r).unwrap();
            assert!(w >= 1.0 / 5.0 - 1e-12 && w <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn beamformer_of_scaled_basis_vector() {
        let mut r = DMatrix::<Complex64>::zeros(3, 3);
        r[(0, 0)] = c(2.0);
        let w = extract_beamformer(&r, 0.999).unwrap();
        assert!((w[0] - c(2f64.sqrt())).norm() < 1e-12);
        assert!(w[1].norm() < 1e-12 && w[2].norm() < 1e-12);
        assert!(matches!(
            extract_beamformer(&DMatrix::identity(3, 3), 0.999),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn reconstruction_error_bounded_by_tail() {
        let v = DVector::from_vec(vec![c(1.0), Complex64::new(0.3, 0.4), c(-0.2)]);
        let r = &v * v.adjoint() + DMatrix::identity(3, 3) * c(1e-4);
        let tau = 0.999;
        let w = extract_beamformer(&r, tau).unwrap();
        let err = (&w * w.adjoint() - &r).norm();
        assert!(err <= (1.0 - tau) * trace_re(&r));
        assert!(((w.norm_squared()) - principal_ratio(&r).unwrap().1 * trace_re(&r)).abs() < 1e-12);
    }

    #[test]
    fn already_rank_one_needs_no_solves() {
        let v = DVector::from_vec(vec![c(1.0), c(0.5)]);
        let r0 = SolveResult {
            r: &v * v.adjoint(),
            objective: 1.0,
            status: SolveStatus::Optimal,
            iterations: 0,
            kkt_residual: 0.0,
            duality_gap: 0.0,
            trace: Vec::new(),
        };
        let obj = ObjectiveSpec::linear(LinearFunctional::trace(2));
        let out = srocr_refine(&obj, &[], &r0, &SrocrSettings::default(), &sdp::Settings::default())
            .unwrap();
        assert_eq!(out.solves, 0);
    }

    #[test]
    fn refines_a_full_rank_relaxation() {
        // max I(θ1) + I(θ2) over tr R ≤ 1 has a rank-two optimum when the two
        // beams are orthogonal; a ripple band keeps the problem well posed.
        let g = crate::array::UlaGeometry::half_wavelength(4).unwrap();
        let a1 = crate::array::steering(&g, 0.0);
        let a2 = crate::array::steering(&g, (0.5f64).asin());
        let obj = ObjectiveSpec::linear(
            LinearFunctional::beampattern(&a1)
                .scaled(-1.0)
                .minus(&LinearFunctional::beampattern(&a2)),
        );
        let cons = vec![AffineConstraint::le(LinearFunctional::trace(4), 1.0, "power")];
        let s = sdp::Settings::default();
        let r0 = sdp::solve(&obj, &cons, 4, &s).unwrap();
        let (_, w0) = principal_ratio(&r0.r).unwrap();
        assert!(w0 < 0.9, "{w0}");
        let out = srocr_refine(&obj, &cons, &r0, &SrocrSettings::default(), &s).unwrap();
        assert!(out.ratio >= 0.999);
        assert!(out.result.objective >= r0.objective - 1e-6);
        let rep = sdp::validate_solution(&out.result.r, &cons);
        assert!(rep.feasible());
        let accepted: Vec<_> = out.trace.iter().filter(|t| t.feasible).collect();
        for t in &accepted {
            assert!(t.ratio >= t.w - 1e-6, "{} < {}", t.ratio, t.w);
        }
    }
}
