//! Scenario geometry, line-of-sight channels and the eavesdropping SNRs.
//!
//! `S` is the illegal transmitter (also the radar target), `D` the illegal
//! receiver and `E` the base station that senses `S` while jamming `D` with
//! its radar waveform. The monitoring succeeds when `γ_D ≤ γ_E`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array::{steering, AngleGrid, SteeringVector, UlaGeometry};
use crate::error::{Error, Result};
use crate::units::{db_to_linear, dbm_to_watts};

/// Transmit covariance, an `N_t × N_t` Hermitian PSD matrix.
pub type CovarianceMatrix = DMatrix<Complex64>;

/// Every physical and algorithmic parameter of a scenario, in linear units
/// and radians.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub pos_s: [f64; 2],
    pub pos_d: [f64; 2],
    pub pos_e: [f64; 2],
    pub theta_s: f64,
    pub theta_d: f64,
    pub delta_theta: f64,
    /// Transmit power of `S` in watts.
    pub p_s: f64,
    /// Power budget of `E` in watts.
    pub p0: f64,
    /// Radar receiver noise power.
    pub radar_noise: f64,
    pub noise_d: f64,
    pub noise_e: f64,
    pub beta0: f64,
    /// Gain of the `E–D` interference link; the reference gain unless overridden.
    pub beta_e: f64,
    pub alpha: f64,
    pub phi: f64,
    pub gamma_s: f64,
    pub rho: f64,
    pub vartheta: f64,
    pub tau: f64,
    pub resolution: f64,
    pub detection_range: (f64, f64),
    /// Target reflection coefficient `β`.
    pub beta_target: Complex64,
    pub tx: UlaGeometry,
    pub rx: UlaGeometry,
    /// Number of snapshots per coherent processing interval.
    pub snapshots: u32,
    /// Drops the eavesdropping constraint from the joint problem when `ρ = 0`.
    pub drop_eaves_constraint_at_rho0: bool,
}

impl ScenarioConfig {
    /// The reference scenario: `S=[500,0]`, `D=[250,250]`, `E=[0,0]`,
    /// `β0=-30 dB`, `σ_D²=σ_E²=-80 dBm`, `P_S=30 dBm`, `α=2.7`, twelve
    /// half-wavelength elements on each side, 1° grid over ±90°.
    pub fn reference() -> Self {
        let deg = PI / 180.0;
        let mut cfg = Self {
            pos_s: [500.0, 0.0],
            pos_d: [250.0, 250.0],
            pos_e: [0.0, 0.0],
            theta_s: 0.0,
            theta_d: 45.0 * deg,
            delta_theta: 5.0 * deg,
            p_s: dbm_to_watts(30.0),
            p0: dbm_to_watts(30.0),
            radar_noise: 1.0,
            noise_d: dbm_to_watts(-80.0),
            noise_e: dbm_to_watts(-80.0),
            beta0: db_to_linear(-30.0),
            beta_e: db_to_linear(-30.0),
            alpha: 2.7,
            phi: 0.05,
            gamma_s: 0.01,
            rho: 0.5,
            vartheta: 1e-4,
            tau: 0.999,
            resolution: deg,
            detection_range: (-90.0 * deg, 90.0 * deg),
            beta_target: Complex64::new(0.0, 0.0),
            tx: UlaGeometry::half_wavelength(12).expect("valid geometry"),
            rx: UlaGeometry::half_wavelength(12).expect("valid geometry"),
            snapshots: 1,
            drop_eaves_constraint_at_rho0: false,
        };
        cfg.beta_target = cfg.default_beta_target();
        cfg
    }

    /// Two-way path loss to the target at `S`: `sqrt(β0) d_SE^-α`, zero phase.
    pub fn default_beta_target(&self) -> Complex64 {
        let d_se = distance(self.pos_s, self.pos_e);
        Complex64::new(self.beta0.sqrt() * d_se.powf(-self.alpha), 0.0)
    }

    pub fn d_sd(&self) -> f64 {
        distance(self.pos_s, self.pos_d)
    }

    pub fn d_ed(&self) -> f64 {
        distance(self.pos_e, self.pos_d)
    }

    pub fn d_se(&self) -> f64 {
        distance(self.pos_s, self.pos_e)
    }

    /// `|h_SD|²`.
    pub fn h_sd_sq(&self) -> f64 {
        self.beta0 * self.d_sd().powf(-self.alpha)
    }

    /// `|h_SE|²`.
    pub fn h_se_sq(&self) -> f64 {
        self.beta0 * self.d_se().powf(-self.alpha)
    }

    /// Grid over the detection range with the target and `D` directions on it.
    pub fn grid(&self) -> Result<AngleGrid> {
        AngleGrid::new(
            self.detection_range,
            self.resolution,
            self.theta_s,
            self.delta_theta,
            self.theta_d,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("p_s", self.p_s),
            ("p0", self.p0),
            ("radar_noise", self.radar_noise),
            ("noise_d", self.noise_d),
            ("noise_e", self.noise_e),
            ("beta0", self.beta0),
            ("beta_e", self.beta_e),
            ("alpha", self.alpha),
            ("resolution", self.resolution),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        for (key, v) in [("phi", self.phi), ("rho", self.rho)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(key, format!("must lie in [0, 1], got {v}")));
            }
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::config("tau", format!("must lie in (0, 1], got {}", self.tau)));
        }
        if !(self.vartheta > 0.0) {
            return Err(Error::config("vartheta", "must be positive"));
        }
        if !(self.gamma_s >= 0.0) {
            return Err(Error::config("gamma_s", "must be non-negative"));
        }
        if !(self.delta_theta >= 0.0) {
            return Err(Error::config("delta_theta", "must be non-negative"));
        }
        if self.snapshots == 0 {
            return Err(Error::config("snapshots", "must be at least one"));
        }
        if !(self.beta_target.norm() > 0.0) {
            return Err(Error::config("beta_target", "reflection coefficient must be nonzero"));
        }
        for (key, d) in [("pos_d", self.d_sd()), ("pos_d", self.d_ed()), ("pos_s", self.d_se())] {
            if !(d > 0.0) {
                return Err(Error::config(key, "nodes must not coincide"));
            }
        }
        self.grid().map(|_| ())
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Squared channel magnitude `β0 d^-α`.
pub fn path_gain(beta0: f64, d: f64, alpha: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("path length must be positive, got {d}")));
    }
    Ok(beta0 * d.powf(-alpha))
}

/// Line-of-sight channel from `E` to `D`, `sqrt(β0 / d_ED^α) a_tᵀ(θ_D)`.
pub fn channel_ed(config: &ScenarioConfig) -> Result<DVector<Complex64>> {
    let gain = path_gain(config.beta0, config.d_ed(), config.alpha)?;
    Ok(steering(&config.tx, config.theta_d) * Complex64::new(gain.sqrt(), 0.0))
}

/// `aᴴ R a`.
pub fn beampattern(r: &CovarianceMatrix, a: &SteeringVector) -> Result<f64> {
    if r.nrows() != a.len() || r.ncols() != a.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: r.nrows(),
        });
    }
    let v = (a.adjoint() * r * a)[(0, 0)];
    if v.im.abs() > 1e-10 * v.re.abs().max(1.0) {
        return Err(Error::NotHermitian { residue: v.im });
    }
    Ok(v.re)
}

/// Beampattern toward `D`, `I(θ_D)`.
pub fn interference(config: &ScenarioConfig, r: &CovarianceMatrix) -> Result<f64> {
    beampattern(r, &steering(&config.tx, config.theta_d))
}

/// SINR at the illegal receiver `D` under the jamming covariance `R`.
pub fn gamma_d(config: &ScenarioConfig, r: &CovarianceMatrix) -> Result<f64> {
    let i_d = interference(config, r)?;
    let ed = config.beta_e * config.d_ed().powf(-config.alpha);
    Ok(config.p_s * config.h_sd_sq() / (ed * i_d + config.noise_d))
}

/// SNR of the intercepted link at `E`.
pub fn gamma_e(config: &ScenarioConfig) -> f64 {
    config.p_s * config.h_se_sq() / config.noise_e
}

/// Smallest `I(θ_D)` for which `γ_D ≤ γ_E`. Non-positive when no jamming is
/// needed.
pub fn eaves_threshold(config: &ScenarioConfig) -> f64 {
    let bracket = config.h_sd_sq() * config.noise_e / config.h_se_sq() - config.noise_d;
    config.d_ed().powf(config.alpha) / config.beta_e * bracket
}

/// True when `E` already hears `S` at least as well as `D` does, so no power
/// needs to be sent toward `D`.
pub fn interference_free(config: &ScenarioConfig) -> bool {
    config.h_sd_sq() / config.noise_d <= config.h_se_sq() / config.noise_e
}
