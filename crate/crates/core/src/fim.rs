//! Fisher information of the monostatic echo, the CRB, and the Monte-Carlo
//! utilities used to sanity-check them.
//!
//! The echo for `K` targets is `μ = A_r diag(β) A_tᵀ x` plus white circular
//! noise of power `σ²`. Parameters are ordered `ζ = [θ_1..θ_K, β_R, β_I]`, so
//! the Fisher matrix is `3K × 3K`.
//!
//! Because the echo carries `a_tᵀ x`, the power that reaches a target at `θ`
//! is `a_tᵀ R a_t* = a_t(−θ)ᴴ R a_t(−θ)`, the transmit beampattern mirrored
//! about broadside. The two coincide for a target at `θ = 0`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array::{
    steering, steering_derivative_matrix, steering_matrix, AngleGrid,
    UlaGeometry,
};
use crate::error::{Error, Result};
use crate::scene::CovarianceMatrix;

/// Reciprocal condition number below which a Fisher matrix is treated as
/// singular.
pub const SINGULAR_RCOND: f64 = 1e-12;

/// Target directions and reflection coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet {
    angles: Vec<f64>,
    betas: Vec<Complex64>,
}

impl TargetSet {
    pub fn new(angles: Vec<f64>, betas: Vec<Complex64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::Domain("at least one target is required".into()));
        }
        if angles.len() != betas.len() {
            return Err(Error::DimensionMismatch {
                expected: angles.len(),
                got: betas.len(),
            });
        }
        Ok(Self { angles, betas })
    }

    pub fn single(theta: f64, beta: Complex64) -> Self {
        Self {
            angles: vec![theta],
            betas: vec![beta],
        }
    }

    pub fn k(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn betas(&self) -> &[Complex64] {
        &self.betas
    }
}

/// The three complex `K × K` blocks from which the real Fisher matrix is
/// assembled.
#[derive(Debug, Clone, PartialEq)]
pub struct FimBlocks {
    pub f11: DMatrix<Complex64>,
    pub f12: DMatrix<Complex64>,
    pub f22: DMatrix<Complex64>,
    /// `|β_k|`, which relates the angle rows to the gain rows.
    pub beta_magnitudes: Vec<f64>,
}

/// Real symmetric `3K × 3K` Fisher information matrix.
///
/// Carries a per-parameter unit so that singularity can be judged
/// independently of `|β|`: angle rows scale with `|β_k|`, gain rows do not.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    m: DMatrix<f64>,
    units: DVector<f64>,
}

/// Inverse of a [`FisherMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct CrbMatrix(DMatrix<f64>);

impl FisherMatrix {
    /// Wraps a matrix, symmetrizing it. Panics if it is not square.
    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "Fisher matrix must be square");
        let n = m.nrows();
        Self {
            m: (&m + m.transpose()) * 0.5,
            units: DVector::from_element(n, 1.0),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Scale of each parameter: `|β_k|` for angles, 1 for gains.
    pub fn units(&self) -> &DVector<f64> {
        &self.units
    }

    /// Ratio of extreme eigenvalues of `F` expressed in parameter units.
    pub fn rcond(&self) -> f64 {
        let u = &self.units;
        let n = self.dim();
        let scaled = DMatrix::from_fn(n, n, |i, j| self.m[(i, j)] / (u[i] * u[j]));
        let ev = SymmetricEigen::new(scaled).eigenvalues;
        let max = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
        if max > 0.0 && max.is_finite() {
            min / max
        } else {
            0.0
        }
    }

    /// `log det F`, or `None` outside the positive definite cone.
    ///
    /// Uses a Cholesky factor of the diagonally equilibrated matrix, which is
    /// needed because the `θ` and `β` rows differ by many orders of magnitude.
    pub fn log_det(&self) -> Option<f64> {
        Equilibrated::new(&self.m).map(|e| e.log_det)
    }
}

impl CrbMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// CRB on `θ_1` (the first diagonal entry).
    pub fn theta(&self) -> f64 {
        self.0[(0, 0)]
    }
}

/// `D F D` with `D = diag(F)^{-1/2}`, its Cholesky factor and `log det F`.
struct Equilibrated {
    scale: DVector<f64>,
    chol: Cholesky<f64, nalgebra::Dyn>,
    log_det: f64,
}

impl Equilibrated {
    fn new(f: &DMatrix<f64>) -> Option<Self> {
        let n = f.nrows();
        if f.diagonal().iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
            return None;
        }
        let scale = f.diagonal().map(|d| 1.0 / d.sqrt());
        let scaled = DMatrix::from_fn(n, n, |i, j| f[(i, j)] * scale[i] * scale[j]);
        let chol = Cholesky::new(scaled)?;
        let l = chol.l_dirty();
        let log_det_scaled: f64 = (0..n).map(|i| 2.0 * l[(i, i)].ln()).sum();
        let log_diag: f64 = f.diagonal().iter().map(|d| d.ln()).sum();
        Some(Self {
            scale,
            chol,
            log_det: log_diag + log_det_scaled,
        })
    }
}

/// `(log det F, F⁻¹)` for a symmetric positive definite `F`, through the
/// equilibrated Cholesky factor. `None` outside the cone.
pub(crate) fn factor_spd(f: &DMatrix<f64>) -> Option<(f64, DMatrix<f64>)> {
    let eq = Equilibrated::new(f)?;
    let inv = eq.chol.inverse();
    let n = f.nrows();
    let out = DMatrix::from_fn(n, n, |i, j| inv[(i, j)] * eq.scale[i] * eq.scale[j]);
    Some((eq.log_det, (&out + out.transpose()) * 0.5))
}

fn check_square(r: &CovarianceMatrix, n: usize) -> Result<()> {
    if r.nrows() != n || r.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: r.nrows(),
        });
    }
    Ok(())
}

/// Complex Fisher blocks for transmit covariance `R`.
pub fn fim_blocks(
    r: &CovarianceMatrix,
    targets: &TargetSet,
    tx: &UlaGeometry,
    rx: &UlaGeometry,
) -> Result<FimBlocks> {
    check_square(r, tx.n_elements())?;
    let th = targets.angles();
    let at = steering_matrix(tx, th);
    let dat = steering_derivative_matrix(tx, th);
    let ar = steering_matrix(rx, th);
    let dar = steering_derivative_matrix(rx, th);
    let rc = r.conjugate();

    let g_rr = ar.adjoint() * &ar;
    let g_rd = ar.adjoint() * &dar;
    let g_dr = dar.adjoint() * &ar;
    let g_dd = dar.adjoint() * &dar;
    let t_tt = at.adjoint() * &rc * &at;
    let t_dt = dat.adjoint() * &rc * &at;
    let t_td = at.adjoint() * &rc * &dat;
    let t_dd = dat.adjoint() * &rc * &dat;

    let b = targets.betas();
    let k = targets.k();
    let both = |m: &DMatrix<Complex64>| DMatrix::from_fn(k, k, |i, j| b[i].conj() * m[(i, j)] * b[j]);
    let left = |m: &DMatrix<Complex64>| DMatrix::from_fn(k, k, |i, j| b[i].conj() * m[(i, j)]);

    let f11 = g_rd.component_mul(&both(&t_dt))
        + g_rr.component_mul(&both(&t_dd))
        + g_dd.component_mul(&both(&t_tt))
        + g_dr.component_mul(&both(&t_td));
    let f12 = g_rr.component_mul(&left(&t_dt)) + g_dr.component_mul(&left(&t_tt));
    let f22 = g_rr.component_mul(&t_tt);
    Ok(FimBlocks {
        f11,
        f12,
        f22,
        beta_magnitudes: b.iter().map(|z| z.norm()).collect(),
    })
}

/// Assembles the real Fisher matrix with the `2/σ²` prefactor.
pub fn fisher_matrix(blocks: &FimBlocks, noise_power: f64) -> Result<FisherMatrix> {
    if !(noise_power > 0.0) {
        return Err(Error::Domain(format!(
            "noise power must be positive, got {noise_power}"
        )));
    }
    let k = blocks.f22.nrows();
    let c = 2.0 / noise_power;
    let re = |m: &DMatrix<Complex64>| m.map(|z| z.re);
    let im = |m: &DMatrix<Complex64>| m.map(|z| z.im);
    let mut f = DMatrix::zeros(3 * k, 3 * k);
    let parts = [
        [re(&blocks.f11), re(&blocks.f12), -im(&blocks.f12)],
        [re(&blocks.f12).transpose(), re(&blocks.f22), -im(&blocks.f22)],
        [-im(&blocks.f12).transpose(), -im(&blocks.f22).transpose(), re(&blocks.f22)],
    ];
    for (bi, row) in parts.iter().enumerate() {
        for (bj, blk) in row.iter().enumerate() {
            f.view_mut((bi * k, bj * k), (k, k)).copy_from(&(blk * c));
        }
    }
    let mut out = FisherMatrix::from_matrix(f);
    for (i, &m) in blocks.beta_magnitudes.iter().enumerate() {
        if m > 0.0 && m.is_finite() {
            out.units[i] = m;
        }
    }
    Ok(out)
}

fn checked(f: &FisherMatrix) -> Result<Equilibrated> {
    let eq = Equilibrated::new(f.matrix()).ok_or(Error::SingularFisher { rcond: 0.0 })?;
    let rcond = f.rcond();
    if !(rcond >= SINGULAR_RCOND) {
        return Err(Error::SingularFisher { rcond });
    }
    Ok(eq)
}

/// Inverts `F`, or reports [`Error::SingularFisher`].
pub fn crb(f: &FisherMatrix) -> Result<CrbMatrix> {
    let eq = checked(f)?;
    let inv = eq.chol.inverse();
    let n = f.dim();
    let phi = DMatrix::from_fn(n, n, |i, j| inv[(i, j)] * eq.scale[i] * eq.scale[j]);
    Ok(CrbMatrix((&phi + phi.transpose()) * 0.5))
}

/// `det Φ = 1 / det F`, accumulated in the log domain.
pub fn det_crb(f: &FisherMatrix) -> Result<f64> {
    log_det_crb(f).map(f64::exp)
}

/// `ln det Φ = −ln det F`.
pub fn log_det_crb(f: &FisherMatrix) -> Result<f64> {
    let eq = checked(f)?;
    Ok(-eq.log_det)
}

/// Noiseless echo `A_r diag(β) A_tᵀ w`.
pub fn echo_mean(
    w: &DVector<Complex64>,
    targets: &TargetSet,
    tx: &UlaGeometry,
    rx: &UlaGeometry,
) -> DVector<Complex64> {
    let mut mu = DVector::zeros(rx.n_elements());
    for (&th, &b) in targets.angles().iter().zip(targets.betas()) {
        let gain = (steering(tx, th).transpose() * w)[(0, 0)];
        mu += steering(rx, th) * (b * gain);
    }
    mu
}

/// Fisher matrix of rank-one `R = w wᴴ` obtained by differentiating the echo
/// mean numerically, central differences with step `h` on the angles.
pub fn fim_oracle(
    w: &DVector<Complex64>,
    targets: &TargetSet,
    tx: &UlaGeometry,
    rx: &UlaGeometry,
    noise_power: f64,
    h: f64,
) -> FisherMatrix {
    let k = targets.k();
    let mut derivs: Vec<DVector<Complex64>> = Vec::with_capacity(3 * k);
    for i in 0..k {
        let shifted = |delta: f64| {
            let mut a = targets.angles().to_vec();
            a[i] += delta;
            echo_mean(w, &TargetSet::new(a, targets.betas().to_vec()).unwrap(), tx, rx)
        };
        derivs.push((shifted(h) - shifted(-h)) / Complex64::new(2.0 * h, 0.0));
    }
    for unit in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
        for i in 0..k {
            let mut b = vec![Complex64::new(0.0, 0.0); k];
            b[i] = unit;
            derivs.push(echo_mean(w, &TargetSet::new(targets.angles().to_vec(), b).unwrap(), tx, rx));
        }
    }
    let c = 2.0 / noise_power;
    let n = 3 * k;
    FisherMatrix::from_matrix(DMatrix::from_fn(n, n, |i, j| {
        c * derivs[i].dotc(&derivs[j]).re
    }))
}

/// One noisy echo for a single target, with circular Gaussian noise of
/// per-entry variance `σ²`.
pub fn simulate_echo(
    w: &DVector<Complex64>,
    theta: f64,
    beta: Complex64,
    tx: &UlaGeometry,
    rx: &UlaGeometry,
    noise_power: f64,
    seed: u64,
) -> DVector<Complex64> {
    let mean = echo_mean(w, &TargetSet::single(theta, beta), tx, rx);
    if noise_power == 0.0 {
        return mean;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = (noise_power / 2.0).sqrt();
    mean.map(|m| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        m + Complex64::new(re * s, im * s)
    })
}

/// Grid maximum-likelihood estimate of a single target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlEstimate {
    pub theta: f64,
    pub beta: Complex64,
}

/// Step of the refinement pass around the coarse maximum, 0.01°.
pub const ML_FINE_STEP: f64 = 0.01 * std::f64::consts::PI / 180.0;

/// Least-squares fit of `y ≈ b(θ) β` with `b(θ) = a_r(θ) a_t(θ)ᵀ w` over the
/// grid, refined once to [`ML_FINE_STEP`] around the best coarse point.
///
/// Several echoes are averaged first, which is sufficient for the white
/// Gaussian model.
pub fn ml_estimate(
    echoes: &[DVector<Complex64>],
    w: &DVector<Complex64>,
    tx: &UlaGeometry,
    rx: &UlaGeometry,
    grid: &AngleGrid,
) -> Result<MlEstimate> {
    if echoes.is_empty() {
        return Err(Error::Domain("at least one echo is required".into()));
    }
    if w.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::Domain("beamformer is identically zero".into()));
    }
    let mut y = DVector::zeros(rx.n_elements());
    for e in echoes {
        if e.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                got: e.len(),
            });
        }
        y += e;
    }
    y /= Complex64::new(echoes.len() as f64, 0.0);

    let fit = |theta: f64| -> Option<(f64, Complex64)> {
        let b = steering(rx, theta) * (steering(tx, theta).transpose() * w)[(0, 0)];
        let nb = b.norm_squared();
        if nb <= 1e-300 {
            return None;
        }
        let proj = b.dotc(&y);
        Some((proj.norm_sqr() / nb, proj / nb))
    };
    let best = |thetas: &mut dyn Iterator<Item = f64>| {
        let mut out: Option<(f64, f64, Complex64)> = None;
        for t in thetas {
            if let Some((score, beta)) = fit(t) {
                if out.map_or(true, |(s, _, _)| score > s) {
                    out = Some((score, t, beta));
                }
            }
        }
        out
    };
    let (_, coarse, _) = best(&mut grid.angles().iter().copied())
        .ok_or_else(|| Error::Domain("beamformer radiates nothing over the grid".into()))?;
    let steps = (grid.resolution() / ML_FINE_STEP).ceil() as i64;
    let (_, theta, beta) = best(&mut (-steps..=steps).map(|i| coarse + i as f64 * ML_FINE_STEP))
        .expect("coarse point is part of the fine grid");
    Ok(MlEstimate { theta, beta })
}

/// Radar model used by the optimizer: targets, arrays, noise and snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarModel {
    pub targets: TargetSet,
    pub tx: UlaGeometry,
    pub rx: UlaGeometry,
    pub noise_power: f64,
    pub snapshots: u32,
}

impl RadarModel {
    /// Dimension of the Fisher matrix.
    pub fn dim(&self) -> usize {
        3 * self.targets.k()
    }

    /// Fisher information for covariance `R`, accumulated over the snapshots.
    pub fn fisher(&self, r: &CovarianceMatrix) -> Result<FisherMatrix> {
        let blocks = fim_blocks(r, &self.targets, &self.tx, &self.rx)?;
        fisher_matrix(&blocks, self.noise_power / f64::from(self.snapshots.max(1)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const DEG: f64 = PI / 180.0;

    fn ula(n: usize) -> UlaGeometry {
        UlaGeometry::half_wavelength(n).unwrap()
    }

    fn w_sample(n: usize, seed: f64) -> DVector<Complex64> {
        DVector::from_fn(n, |i, _| {
            Complex64::new((seed + 1.7 * i as f64).cos(), (0.3 * seed - i as f64).sin())
        })
    }

    #[test]
    fn zero_covariance_gives_zero_blocks() {
        let t = TargetSet::single(0.2, Complex64::new(1.0, 0.5));
        let b = fim_blocks(&DMatrix::zeros(4, 4), &t, &ula(4), &ula(4)).unwrap();
        assert_eq!(b.f11.norm(), 0.0);
        assert_eq!(b.f12.norm(), 0.0);
        assert_eq!(b.f22.norm(), 0.0);
    }

    #[test]
    fn identity_fim22() {
        let t = TargetSet::single(0.4, Complex64::new(0.3, -2.0));
        let b = fim_blocks(&DMatrix::identity(6, 6), &t, &ula(6), &ula(5)).unwrap();
        assert!((b.f22[(0, 0)] - Complex64::new(30.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let t = TargetSet::single(0.0, Complex64::new(1.0, 0.0));
        assert!(matches!(
            fim_blocks(&DMatrix::identity(3, 3), &t, &ula(4), &ula(4)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn analytic_matches_oracle_single_target() {
        let t = TargetSet::single(23.0 * DEG, Complex64::new(1.5, -0.7));
        let w = w_sample(8, 0.9);
        let r = &w * w.adjoint();
        let f = fisher_matrix(&fim_blocks(&r, &t, &ula(8), &ula(8)).unwrap(), 0.5).unwrap();
        let o = fim_oracle(&w, &t, &ula(8), &ula(8), 0.5, 1e-5);
        let err = (f.matrix() - o.matrix()).norm() / o.matrix().norm();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn analytic_matches_oracle_two_targets() {
        let t = TargetSet::new(
            vec![-31.0 * DEG, 12.0 * DEG],
            vec![Complex64::new(0.8, 0.1), Complex64::new(-0.4, 1.2)],
        )
        .unwrap();
        let w = w_sample(6, 2.1);
        let r = &w * w.adjoint();
        let f = fisher_matrix(&fim_blocks(&r, &t, &ula(6), &ula(7)).unwrap(), 1.0).unwrap();
        let o = fim_oracle(&w, &t, &ula(6), &ula(7), 1.0, 1e-5);
        let err = (f.matrix() - o.matrix()).norm() / o.matrix().norm();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn noise_scaling() {
        let t = TargetSet::single(0.1, Complex64::new(1.0, 0.0));
        let b = fim_blocks(&DMatrix::identity(4, 4), &t, &ula(4), &ula(4)).unwrap();
        let f1 = fisher_matrix(&b, 1.0).unwrap();
        let f2 = fisher_matrix(&b, 2.0).unwrap();
        assert!((f1.matrix() * 0.5 - f2.matrix()).norm() < 1e-14);
        assert!(fisher_matrix(&b, 0.0).is_err());
    }

    #[test]
    fn crb_of_scaled_identity() {
        let f = FisherMatrix::from_matrix(DMatrix::identity(3, 3) * 4.0);
        let phi = crb(&f).unwrap();
        assert!((phi.matrix() - DMatrix::identity(3, 3) * 0.25).norm() < 1e-15);
    }

    #[test]
    fn det_crb_diag() {
        let f = FisherMatrix::from_matrix(DMatrix::from_diagonal(&DVector::from_vec(vec![
            2.0, 4.0, 8.0,
        ])));
        assert!((det_crb(&f).unwrap() - 1.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn null_space_beam_is_singular() {
        // Every column of R is orthogonal to a_t(0), so nothing hits the target.
        let n = 4;
        let a = steering(&ula(n), 0.0);
        let p = DMatrix::identity(n, n) - &a * a.adjoint() / Complex64::new(n as f64, 0.0);
        let t = TargetSet::single(0.0, Complex64::new(1.0, 0.0));
        let f = fisher_matrix(&fim_blocks(&p, &t, &ula(n), &ula(n)).unwrap(), 1.0).unwrap();
        assert!(matches!(crb(&f), Err(Error::SingularFisher { .. })));
        assert!(matches!(det_crb(&f), Err(Error::SingularFisher { .. })));
    }

    #[test]
    fn dark_beam_off_broadside_is_singular() {
        let n = 6;
        let theta = 25.0 * DEG;
        let a = steering(&ula(n), theta).conjugate();
        let p = DMatrix::identity(n, n) - &a * a.adjoint() / Complex64::new(n as f64, 0.0);
        let t = TargetSet::single(theta, Complex64::new(0.3, 0.2));
        let f = fisher_matrix(&fim_blocks(&p, &t, &ula(n), &ula(n)).unwrap(), 1.0).unwrap();
        assert!(matches!(crb(&f), Err(Error::SingularFisher { .. })));
        // Same beam in the mirrored direction is dark for the transmit pattern.
        let mirror = steering(&ula(n), -theta);
        assert!((mirror.adjoint() * &p * &mirror)[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn tiny_reflectivity_is_not_singular() {
        let t = TargetSet::single(0.0, Complex64::new(1.6e-9, 0.0));
        let f = fisher_matrix(
            &fim_blocks(&DMatrix::identity(12, 12), &t, &ula(12), &ula(12)).unwrap(),
            1.0,
        )
        .unwrap();
        let phi = crb(&f).unwrap();
        let prod = phi.matrix() * f.matrix();
        assert!((prod - DMatrix::identity(3, 3)).norm() < 1e-8);
        let via_inv = phi.matrix().determinant();
        let d = det_crb(&f).unwrap();
        assert!(((d - via_inv) / d).abs() < 1e-9);
    }

    #[test]
    fn noiseless_echo_and_determinism() {
        let w = w_sample(4, 0.3);
        let (tx, rx) = (ula(4), ula(4));
        let beta = Complex64::new(0.7, 0.2);
        let e0 = simulate_echo(&w, 0.3, beta, &tx, &rx, 0.0, 1);
        assert_eq!(e0, echo_mean(&w, &TargetSet::single(0.3, beta), &tx, &rx));
        let a = simulate_echo(&w, 0.3, beta, &tx, &rx, 0.1, 9);
        let b = simulate_echo(&w, 0.3, beta, &tx, &rx, 0.1, 9);
        assert_eq!(a, b);
        assert_ne!(a, simulate_echo(&w, 0.3, beta, &tx, &rx, 0.1, 10));
    }

    #[test]
    fn ml_recovers_noiseless_on_grid_target() {
        let (tx, rx) = (ula(8), ula(8));
        let grid = AngleGrid::new((-90.0 * DEG, 90.0 * DEG), DEG, 0.0, 5.0 * DEG, 45.0 * DEG).unwrap();
        let w = steering(&tx, 10.0 * DEG).conjugate();
        let beta = Complex64::new(-0.4, 1.1);
        let y = simulate_echo(&w, 10.0 * DEG, beta, &tx, &rx, 0.0, 0);
        let est = ml_estimate(&[y], &w, &tx, &rx, &grid).unwrap();
        assert!((est.theta - 10.0 * DEG).abs() < 1e-12);
        assert!((est.beta - beta).norm() < 1e-12);
        assert!(ml_estimate(&[], &w, &tx, &rx, &grid).is_err());
        let zero = DVector::zeros(8);
        assert!(ml_estimate(&[DVector::zeros(8)], &zero, &tx, &rx, &grid).is_err());
    }
}
