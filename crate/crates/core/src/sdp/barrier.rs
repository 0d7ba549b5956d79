//! Log-det barrier interior point method.
//!
//! The variable is `v ∈ ℝ^p` with `x = x0 + A v` the basis coordinates of
//! `R`; `A` spans the null space of the equality constraints (or is the
//! identity). Inequalities are kept as normalized rows `G v ≤ h`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::{AffineConstraint, IterateRecord, ObjectiveSpec, Sense, Settings, SolveResult, SolveStatus};
use crate::error::Result;
use crate::linalg::{HermitianBasis, HermitianCholesky};

const ARMIJO: f64 = 0.01;
const MAX_BACKTRACK: usize = 80;

/// Smooth convex objective in `x` coordinates.
struct Smooth<'a> {
    /// Weighted linear coefficients.
    lin: Option<DVector<f64>>,
    det: Option<&'a super::FimMap>,
    det_weight: f64,
    ln_scale: f64,
    /// Pure determinant objective: minimize `−log det F` instead, same argmin.
    surrogate: bool,
}

struct Derivs {
    value: f64,
    grad: DVector<f64>,
    hess: Option<DMatrix<f64>>,
}

impl<'a> Smooth<'a> {
    fn new(spec: &'a ObjectiveSpec, basis: &HermitianBasis) -> Self {
        let lin = spec
            .linear_term
            .as_ref()
            .filter(|_| spec.linear_weight > 0.0)
            .map(|t| basis.coords(t.coefficient()) * spec.linear_weight);
        let det = spec.fim_map.as_ref().filter(|_| spec.detinv_weight > 0.0);
        Self {
            surrogate: lin.is_none(),
            lin,
            det,
            det_weight: spec.detinv_weight,
            ln_scale: spec.detinv_scale.ln(),
        }
    }

    fn neg_logdet(&self, x: &DVector<f64>) -> Option<f64> {
        let map = self.det?;
        let f = map.apply_coords(x);
        crate::fim::factor_spd(&f).map(|(ld, _)| -ld)
    }

    fn value(&self, x: &DVector<f64>) -> Option<f64> {
        let mut v = self.lin.as_ref().map_or(0.0, |c| c.dot(x));
        if self.det.is_some() {
            let phi = self.neg_logdet(x)?;
            v += if self.surrogate {
                phi
            } else {
                self.det_weight * (phi - self.ln_scale).exp()
            };
        }
        v.is_finite().then_some(v)
    }

    /// Objective in the caller's units.
    fn report(&self, x: &DVector<f64>) -> f64 {
        let mut v = self.lin.as_ref().map_or(0.0, |c| c.dot(x));
        if self.det.is_some() {
            match self.neg_logdet(x) {
                Some(phi) => v += self.det_weight * (phi - self.ln_scale).exp(),
                None => return f64::INFINITY,
            }
        }
        v
    }

    fn derivs(&self, x: &DVector<f64>) -> Option<Derivs> {
        let m = x.len();
        let mut value = 0.0;
        let mut grad = DVector::zeros(m);
        let mut hess = None;
        if let Some(c) = &self.lin {
            value += c.dot(x);
            grad += c;
        }
        if let Some(map) = self.det {
            let f = map.apply_coords(x);
            let (ld, f_inv) = crate::fim::factor_spd(&f)?;
            let phi = -ld;
            let imgs = map.images();
            let prods: Vec<DMatrix<f64>> = imgs.iter().map(|fk| &f_inv * fk).collect();
            let g_phi = DVector::from_iterator(m, prods.iter().map(|p| -p.trace()));
            let d2 = prods[0].len();
            let p_rows = DMatrix::from_fn(m, d2, |k, e| prods[k][e]);
            let q_rows = DMatrix::from_fn(m, d2, |k, e| {
                let d = prods[k].nrows();
                prods[k][(e / d, e % d)]
            });
            let mut h_phi = &p_rows * q_rows.transpose();
            h_phi = (&h_phi + h_phi.transpose()) * 0.5;
            if self.surrogate {
                value += phi;
                grad += &g_phi;
                hess = Some(h_phi);
            } else {
                let e = self.det_weight * (phi - self.ln_scale).exp();
                value += e;
                grad += &g_phi * e;
                hess = Some((h_phi + &g_phi * g_phi.transpose()) * e);
            }
        }
        value.is_finite().then_some(Derivs { value, grad, hess })
    }
}

enum Objective<'a> {
    /// Linear in `v` (phase 1).
    Linear(DVector<f64>),
    Smooth(&'a Smooth<'a>),
}

struct Engine<'a> {
    basis: &'a HermitianBasis,
    x0: DVector<f64>,
    a: Option<DMatrix<f64>>,
    g: DMatrix<f64>,
    h: DVector<f64>,
    objective: Objective<'a>,
}

struct Newton {
    dv: DVector<f64>,
    /// Squared decrement of the κ-weighted merit function.
    dec2: f64,
    grad: DVector<f64>,
}

enum Centered {
    Done,
    Stalled,
    Limit,
    Stopped,
}

impl<'a> Engine<'a> {
    fn dim(&self) -> usize {
        self.a.as_ref().map_or(self.x0.len(), |a| a.ncols())
    }

    fn barrier_count(&self) -> f64 {
        (self.g.nrows() + self.basis.n()) as f64
    }

    fn x_of(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.a {
            Some(a) => &self.x0 + a * v,
            None => &self.x0 + v,
        }
    }

    fn to_v(&self, gx: &DVector<f64>) -> DVector<f64> {
        match &self.a {
            Some(a) => a.tr_mul(gx),
            None => gx.clone(),
        }
    }

    fn to_v_hess(&self, hx: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.a {
            Some(a) => a.tr_mul(&(hx * a)),
            None => hx.clone(),
        }
    }

    fn lmi(&self, x: &DVector<f64>) -> Option<(f64, DMatrix<Complex64>)> {
        let chol = HermitianCholesky::new(&self.basis.to_matrix(x))?;
        Some((chol.log_det(), chol.inverse()))
    }

    fn slacks(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.h - &self.g * v
    }

    fn f_value(&self, v: &DVector<f64>, x: &DVector<f64>) -> Option<f64> {
        match &self.objective {
            Objective::Linear(c) => Some(c.dot(v)),
            Objective::Smooth(s) => s.value(x),
        }
    }

    /// `f + κ B`, or `None` outside the domain.
    fn merit(&self, v: &DVector<f64>, kappa: f64) -> Option<f64> {
        let s = self.slacks(v);
        if s.iter().any(|&si| !(si > 0.0)) {
            return None;
        }
        let x = self.x_of(v);
        let (ld, _) = self.lmi(&x)?;
        let f = self.f_value(v, &x)?;
        let b = -s.iter().map(|si| si.ln()).sum::<f64>() - ld;
        let m = f + kappa * b;
        m.is_finite().then_some(m)
    }

    fn newton(&self, v: &DVector<f64>, kappa: f64) -> Option<Newton> {
        let p = self.dim();
        let x = self.x_of(v);
        let (_, w) = self.lmi(&x)?;
        let mut gx = -self.basis.coords(&w) * kappa;
        let mut hx = self.basis.logdet_hessian(&w) * kappa;
        let mut gv_extra = DVector::zeros(p);
        match &self.objective {
            Objective::Linear(c) => gv_extra += c,
            Objective::Smooth(s) => {
                let d = s.derivs(&x)?;
                gx += &d.grad;
                if let Some(h) = d.hess {
                    hx += h;
                }
            }
        }
        let mut grad = self.to_v(&gx) + gv_extra;
        let mut hess = self.to_v_hess(&hx);
        if self.g.nrows() > 0 {
            let s = self.slacks(v);
            let inv = s.map(|si| 1.0 / si);
            grad += self.g.tr_mul(&inv) * kappa;
            let mut gs = self.g.clone();
            for (mut row, &d) in gs.row_iter_mut().zip(inv.iter()) {
                row *= d;
            }
            hess += gs.tr_mul(&gs) * kappa;
        }
        hess = (&hess + hess.transpose()) * 0.5;
        let dv = solve_spd(hess, &grad)?;
        let dv = -dv;
        let dec2 = -grad.dot(&dv);
        (dec2.is_finite()).then_some(Newton { dv, dec2, grad })
    }

    /// Damped Newton centering for weight `κ`. `stop` is checked after each
    /// accepted step.
    fn center(
        &self,
        v: &mut DVector<f64>,
        kappa: f64,
        settings: &Settings,
        steps: &mut usize,
        last_dec: &mut f64,
        stop: &dyn Fn(&DVector<f64>) -> bool,
    ) -> Centered {
        let Some(mut phi) = self.merit(v, kappa) else {
            return Centered::Stalled;
        };
        for _ in 0..settings.max_newton {
            let Some(nt) = self.newton(v, kappa) else {
                return Centered::Stalled;
            };
            *last_dec = nt.dec2;
            if nt.dec2 / kappa / 2.0 <= settings.newton_tol {
                return Centered::Done;
            }
            let mut alpha = 1.0f64;
            if self.g.nrows() > 0 {
                let gd = &self.g * &nt.dv;
                let s = self.slacks(v);
                for (gdi, si) in gd.iter().zip(s.iter()) {
                    if *gdi > 0.0 {
                        alpha = alpha.min(0.99 * si / gdi);
                    }
                }
            }
            let slope = nt.grad.dot(&nt.dv);
            let fp_slack = 1e-13 * phi.abs().max(1.0);
            let mut accepted = false;
            for _ in 0..MAX_BACKTRACK {
                let trial = &*v + &nt.dv * alpha;
                if let Some(pt) = self.merit(&trial, kappa) {
                    if pt <= phi + ARMIJO * alpha * slope + fp_slack {
                        *v = trial;
                        phi = pt;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            *steps += 1;
            if !accepted {
                return Centered::Stalled;
            }
            if stop(v) {
                return Centered::Stopped;
            }
        }
        Centered::Limit
    }
}

/// Cholesky solve with a growing diagonal shift on failure.
fn solve_spd(h: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(c) = Cholesky::new(h.clone()) {
        return Some(c.solve(rhs));
    }
    let n = h.nrows();
    let scale = (h.trace().abs() / n.max(1) as f64).max(f64::MIN_POSITIVE);
    let mut eps = 1e-14;
    while eps < 1e-2 {
        let shifted = &h + DMatrix::identity(n, n) * (eps * scale);
        if let Some(c) = Cholesky::new(shifted) {
            return Some(c.solve(rhs));
        }
        eps *= 100.0;
    }
    None
}

/// Affine parametrization of the equality-constrained set.
struct Reduced {
    x0: DVector<f64>,
    a: Option<DMatrix<f64>>,
}

fn eliminate_equalities(rows: &[(DVector<f64>, f64)], m: usize) -> Option<Reduced> {
    if rows.is_empty() {
        return Some(Reduced {
            x0: DVector::zeros(m),
            a: None,
        });
    }
    let q = rows.len();
    let aeq = DMatrix::from_fn(q, m, |i, j| rows[i].0[j]);
    let b = DVector::from_iterator(q, rows.iter().map(|r| r.1));
    // Eigen-decomposition of AᵀA yields both the row space and the null space.
    let ata = aeq.tr_mul(&aeq);
    let eig = SymmetricEigen::new(ata);
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let tol = 1e-12 * max.max(f64::MIN_POSITIVE);
    let null: Vec<_> = (0..m)
        .filter(|&i| eig.eigenvalues[i] <= tol)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    let range: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] > tol).collect();
    // Minimum-norm solution x0 = V Λ⁻¹ Vᵀ Aᵀ b over the row space.
    let atb = aeq.tr_mul(&b);
    let mut x0 = DVector::zeros(m);
    for &i in &range {
        let vi = eig.eigenvectors.column(i);
        x0 += vi * (vi.dot(&atb) / eig.eigenvalues[i]);
    }
    let resid = (&aeq * &x0 - &b).norm();
    if resid > 1e-9 * (1.0 + b.norm()) {
        return None;
    }
    let a = if null.is_empty() {
        DMatrix::zeros(m, 0)
    } else {
        DMatrix::from_columns(&null)
    };
    Some(Reduced { x0, a: Some(a) })
}

fn infeasible(n: usize, trace: Vec<IterateRecord>, iterations: usize) -> SolveResult {
    SolveResult {
        r: DMatrix::zeros(n, n),
        objective: f64::NAN,
        status: SolveStatus::Infeasible,
        iterations,
        kkt_residual: f64::INFINITY,
        duality_gap: f64::INFINITY,
        trace,
    }
}

/// Scale of the scaled-identity starting point: half of the tightest
/// upper bound implied by constraints with PSD coefficients.
fn start_scale(constraints: &[AffineConstraint], n: usize) -> f64 {
    let mut s = f64::INFINITY;
    for c in constraints {
        if c.sense == Sense::Ge || c.rhs <= 0.0 {
            continue;
        }
        let coef = c.functional.coefficient();
        let tr = coef.trace().re;
        if tr <= 0.0 {
            continue;
        }
        if crate::linalg::min_eigenvalue(coef) >= -1e-12 * coef.norm() {
            s = s.min(c.rhs / (2.0 * tr));
        }
    }
    if s.is_finite() {
        s
    } else {
        1.0 / n as f64
    }
}

pub(super) fn run(
    spec: &ObjectiveSpec,
    constraints: &[AffineConstraint],
    n: usize,
    settings: &Settings,
) -> Result<SolveResult> {
    let basis = HermitianBasis::new(n);
    let m = basis.dim();

    let mut eq_rows = Vec::new();
    let mut ineq_rows: Vec<(DVector<f64>, f64)> = Vec::new();
    for c in constraints {
        let g = basis.coords(c.functional.coefficient());
        match c.sense {
            Sense::Le => ineq_rows.push((g, c.rhs)),
            Sense::Ge => ineq_rows.push((-g, -c.rhs)),
            Sense::Eq => eq_rows.push((g, c.rhs)),
        }
    }
    let mut trace = Vec::new();
    let Some(reduced) = eliminate_equalities(&eq_rows, m) else {
        return Ok(infeasible(n, trace, 0));
    };

    // Project the inequalities into v-space and normalize the rows.
    let mut g_rows: Vec<DVector<f64>> = Vec::new();
    let mut h_vals = Vec::new();
    for (g, h) in &ineq_rows {
        let gv = match &reduced.a {
            Some(a) => a.tr_mul(g),
            None => g.clone(),
        };
        let hv = h - g.dot(&reduced.x0);
        let norm = gv.norm();
        let scale = g.norm().max(f64::MIN_POSITIVE);
        if norm <= 1e-12 * scale {
            if hv < -1e-9 * h.abs().max(1.0) {
                return Ok(infeasible(n, trace, 0));
            }
            continue;
        }
        g_rows.push(gv / norm);
        h_vals.push(hv / norm);
    }
    let p = reduced.a.as_ref().map_or(m, |a| a.ncols());
    let g = if g_rows.is_empty() {
        DMatrix::zeros(0, p)
    } else {
        DMatrix::from_fn(g_rows.len(), p, |i, j| g_rows[i][j])
    };
    let h = DVector::from_vec(h_vals);

    let smooth = Smooth::new(spec, &basis);
    let engine = Engine {
        basis: &basis,
        x0: reduced.x0.clone(),
        a: reduced.a.clone(),
        g,
        h,
        objective: Objective::Smooth(&smooth),
    };

    // Scaled identity projected onto the equality set.
    let x_id = basis.coords(&DMatrix::identity(n, n)) * start_scale(constraints, n);
    let mut v = engine.to_v(&(&x_id - &reduced.x0));
    let mut iterations = 0;

    let strictly_feasible = |e: &Engine, v: &DVector<f64>| e.merit(v, 1.0).is_some();
    if !strictly_feasible(&engine, &v) {
        match phase_one(&engine, &v, settings, &mut iterations, &mut trace) {
            PhaseOne::Feasible(v1) => v = v1,
            PhaseOne::Infeasible => return Ok(infeasible(n, trace, iterations)),
            PhaseOne::Failed => {
                let mut r = infeasible(n, trace, iterations);
                r.status = SolveStatus::MaxIterations;
                return Ok(r);
            }
        }
        if !strictly_feasible(&engine, &v) {
            // Feasible for the constraints but outside the objective domain.
            let x = engine.x_of(&v);
            if smooth.value(&x).is_none() {
                return Err(crate::error::Error::SingularFisher { rcond: 0.0 });
            }
            return Ok(infeasible(n, trace, iterations));
        }
    }

    let mb = engine.barrier_count();
    let x_start = engine.x_of(&v);
    let d0 = smooth
        .derivs(&x_start)
        .ok_or(crate::error::Error::SingularFisher { rcond: 0.0 })?;
    let gv0 = engine.to_v(&d0.grad);
    let kappa0 = ((d0.value.abs()).max(gv0.norm() * v.norm()).max(1e-300)) / mb;
    let mut kappa = kappa0;
    let mut status = SolveStatus::MaxIterations;
    let mut last_dec = f64::INFINITY;
    let mut gap = f64::INFINITY;
    let mut kkt = f64::INFINITY;
    for outer in 0..settings.max_outer {
        let before = iterations;
        let outcome = engine.center(&mut v, kappa, settings, &mut iterations, &mut last_dec, &|_| false);
        let x = engine.x_of(&v);
        let f = smooth.value(&x).unwrap_or(f64::INFINITY);
        gap = kappa * mb;
        let gap_rel = gap / (1.0 + f.abs());
        kkt = gap_rel.max(last_dec.max(0.0) / 2.0 / (1.0 + f.abs()));
        if settings.record_trace {
            trace.push(IterateRecord {
                phase: 2,
                outer,
                barrier_weight: kappa,
                objective: smooth.report(&x),
                newton_steps: iterations - before,
                decrement: last_dec,
                gap,
            });
        }
        let centered = matches!(outcome, Centered::Done);
        // At tiny weights the relative decrement test is round-off bound; accept an
        // unfinished centering once the absolute KKT measure is small.
        let stalled_small = matches!(outcome, Centered::Stalled | Centered::Limit) && kkt <= settings.gap_tol;
        if (centered || stalled_small)
            && kappa <= settings.barrier_ratio * kappa0
            && gap_rel <= settings.gap_tol
        {
            status = SolveStatus::Optimal;
            break;
        }
        kappa /= settings.mu;
    }

    let x = engine.x_of(&v);
    let r = crate::linalg::hermitian_part(&basis.to_matrix(&x));
    Ok(SolveResult {
        objective: smooth.report(&x),
        r,
        status,
        iterations,
        kkt_residual: kkt,
        duality_gap: gap,
        trace,
    })
}

enum PhaseOne {
    Feasible(DVector<f64>),
    Infeasible,
    Failed,
}

/// Minimizes `s` subject to `G v − s ≤ h`, `X(v) + s I ≻ 0`, stopping at the
/// first iterate with `s < 0`.
fn phase_one(
    e: &Engine,
    v0: &DVector<f64>,
    settings: &Settings,
    iterations: &mut usize,
    trace: &mut Vec<IterateRecord>,
) -> PhaseOne {
    let n = e.basis.n();
    let p = e.dim();
    let id = e.basis.coords(&DMatrix::identity(n, n));
    let x0v = e.x_of(v0);
    let lam_min = crate::linalg::min_eigenvalue(&e.basis.to_matrix(&x0v));
    let viol = e.slacks(v0).iter().map(|s| -s).fold(-lam_min, f64::max);
    let tr0 = id.dot(&x0v).abs();
    let s0 = viol + 0.1 * viol.abs() + 1e-3 * (1.0 + tr0 / n as f64);

    // A with an extra column for s.
    let mut a1 = match &e.a {
        Some(a) => a.clone().insert_column(p, 0.0),
        None => DMatrix::identity(p, p + 1),
    };
    a1.set_column(p, &id);
    let floor = 10.0 * (s0.abs() + 1.0);
    let mut rows: Vec<DVector<f64>> = Vec::new();
    let mut hs = Vec::new();
    for i in 0..e.g.nrows() {
        let mut r = e.g.row(i).transpose().insert_row(p, 0.0);
        r[p] = -1.0;
        rows.push(r);
        hs.push(e.h[i]);
    }
    let mut lower = DVector::zeros(p + 1);
    lower[p] = -1.0;
    rows.push(lower);
    hs.push(floor);
    // Upper trace bound keeps the phase-1 set bounded.
    let tr_row = match &e.a {
        Some(a) => a.tr_mul(&id),
        None => id.clone(),
    };
    let tnorm = tr_row.norm();
    if tnorm > 1e-12 {
        let big = 1e3 * (1.0 + tr0 + floor * n as f64);
        let mut r = tr_row.insert_row(p, 0.0);
        r /= tnorm;
        rows.push(r);
        hs.push((big - id.dot(&e.x0)) / tnorm);
    }
    let g1 = DMatrix::from_fn(rows.len(), p + 1, |i, j| rows[i][j]);
    let mut c = DVector::zeros(p + 1);
    c[p] = 1.0;
    let e1 = Engine {
        basis: e.basis,
        x0: e.x0.clone(),
        a: Some(a1),
        g: g1,
        h: DVector::from_vec(hs),
        objective: Objective::Linear(c),
    };
    let mut v = v0.clone().insert_row(p, s0);
    let mb = e1.barrier_count();
    let kappa0 = (s0.abs() + 1e-12) / mb;
    let mut kappa = kappa0;
    let stop = |v: &DVector<f64>| v[p] < 0.0;
    for outer in 0..settings.max_outer {
        let before = *iterations;
        let mut dec = f64::INFINITY;
        let outcome = e1.center(&mut v, kappa, settings, iterations, &mut dec, &stop);
        if settings.record_trace {
            trace.push(IterateRecord {
                phase: 1,
                outer,
                barrier_weight: kappa,
                objective: v[p],
                newton_steps: *iterations - before,
                decrement: dec,
                gap: kappa * mb,
            });
        }
        if matches!(outcome, Centered::Stopped) || v[p] < 0.0 {
            return PhaseOne::Feasible(v.rows(0, p).into_owned());
        }
        let centered = matches!(outcome, Centered::Done);
        if centered && v[p] - kappa * mb > 0.0 {
            return PhaseOne::Infeasible;
        }
        if kappa <= settings.barrier_ratio * kappa0 {
            return if centered || matches!(outcome, Centered::Stalled) {
                PhaseOne::Infeasible
            } else {
                PhaseOne::Failed
            };
        }
        kappa /= settings.mu;
    }
    PhaseOne::Failed
}
