//! Value, gradient and Hessian action of `R ↦ 1 / det F(R)`.

use nalgebra::DMatrix;

use super::FimMap;
use crate::error::{Error, Result};
use crate::scene::CovarianceMatrix;

/// Second-order model of `v(R) = 1/det F(R)` around a point.
#[derive(Debug, Clone)]
pub struct DetInvOracle<'a> {
    map: &'a FimMap,
    f_inv: DMatrix<f64>,
    /// `1 / det F(R)`.
    pub value: f64,
    /// Hermitian `G` with `dv = ⟨G, dR⟩`.
    pub gradient: CovarianceMatrix,
}

impl DetInvOracle<'_> {
    /// Hessian applied to a Hermitian direction `D`:
    /// `v (tr(F⁻¹F(D)) F*(F⁻¹) + F*(F⁻¹ F(D) F⁻¹))`.
    pub fn hessian_apply(&self, d: &CovarianceMatrix) -> CovarianceMatrix {
        let fd = self.map.apply(d).into_matrix();
        let m = &self.f_inv * &fd;
        let tr = m.trace();
        let inner = &m * &self.f_inv;
        let sym = (&inner + inner.transpose()) * 0.5;
        (self.map.adjoint(&self.f_inv) * nalgebra::Complex::new(tr, 0.0) + self.map.adjoint(&sym))
            * nalgebra::Complex::new(self.value, 0.0)
    }
}

/// Builds the oracle at `R`; fails with [`Error::SingularFisher`] when `F(R)`
/// is not positive definite.
pub fn det_inv_value_grad_hess<'a>(
    map: &'a FimMap,
    r: &CovarianceMatrix,
) -> Result<DetInvOracle<'a>> {
    if r.nrows() != map.n() || r.ncols() != map.n() {
        return Err(Error::DimensionMismatch {
            expected: map.n(),
            got: r.nrows(),
        });
    }
    let f = map.apply(r).into_matrix();
    let (log_det, f_inv) =
        crate::fim::factor_spd(&f).ok_or(Error::SingularFisher { rcond: 0.0 })?;
    let value = (-log_det).exp();
    let gradient = map.adjoint(&f_inv) * nalgebra::Complex::new(-value, 0.0);
    Ok(DetInvOracle {
        map,
        f_inv,
        value,
        gradient,
    })
}
