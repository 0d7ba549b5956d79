//! Uniform linear array geometry, steering vectors and angle grids.
//!
//! Angles are in radians and measured from broadside. Element 0 is the phase
//! reference, so entry `n` of the steering vector is
//! `exp(j 2π (d/λ) n sin θ)`.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex array response toward one direction.
pub type SteeringVector = DVector<Complex64>;

/// Geometry of a uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlaGeometry {
    n_elements: usize,
    spacing_over_wavelength: f64,
}

impl UlaGeometry {
    pub fn new(n_elements: usize, spacing_over_wavelength: f64) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::config("n_elements", "array needs at least one element"));
        }
        if !(spacing_over_wavelength > 0.0 && spacing_over_wavelength.is_finite()) {
            return Err(Error::config(
                "spacing",
                format!("element spacing must be positive, got {spacing_over_wavelength}"),
            ));
        }
        Ok(Self {
            n_elements,
            spacing_over_wavelength,
        })
    }

    /// Half-wavelength array with `n_elements` elements.
    pub fn half_wavelength(n_elements: usize) -> Result<Self> {
        Self::new(n_elements, 0.5)
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn spacing_over_wavelength(&self) -> f64 {
        self.spacing_over_wavelength
    }

    fn phase_step(&self, theta: f64) -> f64 {
        2.0 * PI * self.spacing_over_wavelength * theta.sin()
    }
}

/// Steering vector `a(θ)`.
pub fn steering(geom: &UlaGeometry, theta: f64) -> SteeringVector {
    let step = geom.phase_step(theta);
    DVector::from_fn(geom.n_elements, |n, _| {
        if n == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, step * n as f64)
        }
    })
}

/// Derivative `∂a(θ)/∂θ`.
pub fn steering_derivative(geom: &UlaGeometry, theta: f64) -> SteeringVector {
    let step = geom.phase_step(theta);
    let k = 2.0 * PI * geom.spacing_over_wavelength * theta.cos();
    DVector::from_fn(geom.n_elements, |n, _| {
        let n = n as f64;
        Complex64::new(0.0, k * n) * Complex64::from_polar(1.0, step * n)
    })
}

/// Steering matrix `[a(θ_1), …, a(θ_K)]`.
pub fn steering_matrix(geom: &UlaGeometry, thetas: &[f64]) -> nalgebra::DMatrix<Complex64> {
    let cols: Vec<_> = thetas.iter().map(|&t| steering(geom, t)).collect();
    nalgebra::DMatrix::from_columns(&cols)
}

/// Matrix of steering derivatives, one column per angle.
pub fn steering_derivative_matrix(
    geom: &UlaGeometry,
    thetas: &[f64],
) -> nalgebra::DMatrix<Complex64> {
    let cols: Vec<_> = thetas
        .iter()
        .map(|&t| steering_derivative(geom, t))
        .collect();
    nalgebra::DMatrix::from_columns(&cols)
}

/// Uniform angle grid over the detection range, with the target and
/// eavesdropping directions placed exactly on grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    angles: Vec<f64>,
    resolution: f64,
    target: usize,
    eaves: usize,
    mainlobe: Vec<usize>,
    sidelobe: Vec<usize>,
    all_but_target: Vec<usize>,
}

impl AngleGrid {
    /// Builds the grid over `range` with step `resolution`.
    ///
    /// The grid points nearest to `theta_s` and `theta_d` are replaced by the
    /// exact angles. The mainlobe set collects every grid angle within
    /// `delta_theta` of `theta_s`; the sidelobe set is its complement.
    pub fn new(
        range: (f64, f64),
        resolution: f64,
        theta_s: f64,
        delta_theta: f64,
        theta_d: f64,
    ) -> Result<Self> {
        let (lo, hi) = range;
        if !(hi > lo) {
            return Err(Error::config("detection_range", "range must be increasing"));
        }
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::config("resolution", "resolution must be positive"));
        }
        if resolution > hi - lo {
            return Err(Error::config(
                "resolution",
                "resolution is larger than the detection range",
            ));
        }
        if !(delta_theta >= 0.0) {
            return Err(Error::config("delta_theta", "uncertainty must be non-negative"));
        }
        let slack = 1e-9 * resolution;
        for (key, t) in [("theta_s", theta_s), ("theta_d", theta_d)] {
            if t < lo - slack || t > hi + slack {
                return Err(Error::config(key, "angle outside the detection range"));
            }
        }

        let count = ((hi - lo) / resolution + 1e-9).floor() as usize + 1;
        let mut angles: Vec<f64> = (0..count).map(|i| lo + i as f64 * resolution).collect();
        let snap = |t: f64| -> usize {
            let i = ((t - lo) / resolution).round() as usize;
            i.min(count - 1)
        };
        let target = snap(theta_s);
        let eaves = snap(theta_d);
        if target == eaves {
            return Err(Error::config(
                "theta_d",
                "target and eavesdropping directions fall on the same grid point",
            ));
        }
        angles[target] = theta_s;
        angles[eaves] = theta_d;

        let tol = 1e-9 * resolution;
        let (mainlobe, sidelobe): (Vec<usize>, Vec<usize>) =
            (0..count).partition(|&i| (angles[i] - theta_s).abs() <= delta_theta + tol);
        let all_but_target = (0..count).filter(|&i| i != target).collect();

        Ok(Self {
            angles,
            resolution,
            target,
            eaves,
            mainlobe,
            sidelobe,
            all_but_target,
        })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn target_index(&self) -> usize {
        self.target
    }

    pub fn eaves_index(&self) -> usize {
        self.eaves
    }

    pub fn target_angle(&self) -> f64 {
        self.angles[self.target]
    }

    pub fn eaves_angle(&self) -> f64 {
        self.angles[self.eaves]
    }

    /// Ω1: grid angles inside the uncertainty window (includes the target).
    pub fn mainlobe(&self) -> &[usize] {
        &self.mainlobe
    }

    /// Ω2: grid angles outside the uncertainty window.
    pub fn sidelobe(&self) -> &[usize] {
        &self.sidelobe
    }

    /// Ω: every grid angle except the target direction.
    pub fn all_but_target(&self) -> &[usize] {
        &self.all_but_target
    }
}
