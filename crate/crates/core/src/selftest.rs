//! Randomized oracle suites: analytic FIM against finite differences, CRB
//! inversion, and the solver against a dense eigensolver.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::array::{steering, UlaGeometry};
use crate::error::{Error, Result};
use crate::fim::{crb, fim_blocks, fim_oracle, fisher_matrix, TargetSet};
use crate::linalg::{hermitian_eigen, hermitian_part};
use crate::sdp::{self, AffineConstraint, LinearFunctional, ObjectiveSpec, SolveStatus};

/// Relative Frobenius tolerance between analytic and finite-difference FIM.
pub const FIM_TOL: f64 = 1e-6;
/// Tolerance on `‖Φ F − I‖_max`.
pub const INVERSE_TOL: f64 = 1e-8;
/// Relative tolerance on eigenvalue programs.
pub const SOLVER_TOL: f64 = 1e-6;

const FD_STEP: f64 = 1e-5;
const SIZES: [usize; 4] = [2, 4, 8, 12];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Largest error seen, in the units of the suite's tolerance.
    pub worst: f64,
    pub tolerance: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn complex_normal(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// A random single-target FIM instance: `(w, target, N)`.
pub fn random_fim_instance(rng: &mut impl Rng) -> (DVector<Complex64>, TargetSet, usize) {
    let n = SIZES[rng.random_range(0..SIZES.len())];
    let w = DVector::from_fn(n, |_, _| complex_normal(rng));
    let theta = rng.random_range(-70.0f64..70.0).to_radians();
    let mag = 10f64.powf(rng.random_range(-1.0..1.0));
    let phase = rng.random_range(0.0..2.0 * std::f64::consts::PI);
    let beta = Complex64::from_polar(mag, phase);
    (w, TargetSet::single(theta, beta), n)
}

/// Analytic versus finite-difference Fisher matrix on random rank-one beams.
pub fn fim_suite(cases: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..cases {
        let (w, t, n) = random_fim_instance(&mut rng);
        let g = UlaGeometry::half_wavelength(n)?;
        let sigma2 = 0.1 + rng.random::<f64>();
        let r = &w * w.adjoint();
        let f = fisher_matrix(&fim_blocks(&r, &t, &g, &g)?, sigma2)?;
        let o = fim_oracle(&w, &t, &g, &g, sigma2, FD_STEP);
        let err = (f.matrix() - o.matrix()).norm() / o.matrix().norm();
        worst = worst.max(err);
        if !(err <= FIM_TOL) {
            failures += 1;
        }
    }
    Ok(SuiteReport {
        name: "fim_oracle",
        cases,
        failures,
        worst,
        tolerance: FIM_TOL,
    })
}

/// `Φ F = I` on the non-singular instances of [`fim_suite`], plus beams
/// that do not illuminate the target, which must be reported singular.
pub fn crb_suite(cases: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut failures = 0;
    let mut checked = 0;
    for _ in 0..cases {
        let (w, t, n) = random_fim_instance(&mut rng);
        let g = UlaGeometry::half_wavelength(n)?;
        let sigma2 = 0.1 + rng.random::<f64>();
        let f = fisher_matrix(&fim_blocks(&(&w * w.adjoint()), &t, &g, &g)?, sigma2)?;
        match crb(&f) {
            Ok(phi) => {
                checked += 1;
                let d = f.dim();
                let err = (phi.matrix() * f.matrix() - DMatrix::identity(d, d)).amax();
                worst = worst.max(err);
                if !(err <= INVERSE_TOL) {
                    failures += 1;
                }
            }
            Err(Error::SingularFisher { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    for n in SIZES {
        checked += 1;
        let g = UlaGeometry::half_wavelength(n)?;
        // The echo carries a_tᵀ w, so a beam orthogonal to conj(a_t) is dark.
        let a = steering(&g, 0.2).conjugate();
        let p = DMatrix::identity(n, n) - &a * a.adjoint() / Complex64::new(n as f64, 0.0);
        let t = TargetSet::single(0.2, Complex64::new(1.0, 0.0));
        let f = fisher_matrix(&fim_blocks(&p, &t, &g, &g)?, 1.0)?;
        if !matches!(crb(&f), Err(Error::SingularFisher { .. })) {
            failures += 1;
        }
    }
    Ok(SuiteReport {
        name: "crb_inversion",
        cases: checked,
        failures,
        worst,
        tolerance: INVERSE_TOL,
    })
}

fn random_hermitian(n: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    hermitian_part(&DMatrix::from_fn(n, n, |_, _| complex_normal(rng)))
}

/// Min and max eigenvalue programs over the unit-trace spectraplex, plus
/// infeasible trace systems that must be flagged.
pub fn solver_suite(cases: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let settings = sdp::Settings::default();
    let mut worst = 0.0f64;
    let mut failures = 0;
    for k in 0..cases {
        let n = 2 + rng.random_range(0..5);
        let c = random_hermitian(n, &mut rng);
        let (vals, _) = hermitian_eigen(&c);
        let maximize = k % 2 == 1;
        let (term, expected) = if maximize {
            (LinearFunctional::new(-&c)?, -vals[0])
        } else {
            (LinearFunctional::new(c.clone())?, vals[n - 1])
        };
        let cons = [AffineConstraint::eq(LinearFunctional::trace(n), 1.0, "unit_trace")];
        let res = sdp::solve(&ObjectiveSpec::linear(term), &cons, n, &settings)?;
        let err = (res.objective - expected).abs() / expected.abs().max(1.0);
        worst = worst.max(err);
        if res.status != SolveStatus::Optimal || !(err <= SOLVER_TOL) {
            failures += 1;
        }
    }
    let mut flagged = 0;
    for n in [2usize, 3, 5] {
        let probes = [
            vec![AffineConstraint::le(LinearFunctional::trace(n), -1.0, "negative_trace")],
            vec![
                AffineConstraint::ge(LinearFunctional::trace(n), 2.0, "lo"),
                AffineConstraint::le(LinearFunctional::trace(n), 1.0, "hi"),
            ],
        ];
        for cons in probes {
            flagged += 1;
            let obj = ObjectiveSpec::linear(LinearFunctional::trace(n));
            if sdp::solve(&obj, &cons, n, &settings)?.status != SolveStatus::Infeasible {
                failures += 1;
            }
        }
    }
    Ok(SuiteReport {
        name: "solver_oracle",
        cases: cases + flagged,
        failures,
        worst,
        tolerance: SOLVER_TOL,
    })
}

/// All suites with their default sizes.
pub fn run_all(seed: u64) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        fim_suite(200, seed)?,
        crb_suite(200, seed)?,
        solver_suite(50, seed.wrapping_add(1))?,
    ])
}
