//! Experiment configuration files.
//!
//! The format is TOML with five optional sections:
//!
//! ```toml
//! [scenario]
//! theta_s_deg = 0.0
//! p0_dbm = 30.0
//!
//! [solver]
//! gap_tol = 1e-8
//!
//! [srocr]
//! max_iter = 50
//!
//! [experiment]
//! mode = "JPT"
//! seed = 7
//!
//! [sweep]
//! parameter = "rho"
//! values = [0.0, 0.5, 1.0]
//! ```
//!
//! Keys may also be written at the top level without their section, in
//! which case they are matched by name. Every field has a default taken from
//! the reference scenario; unknown keys are rejected with their full path.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use jtsape::array::UlaGeometry;
use jtsape::problems::{PipelineSettings, ProblemKind};
use jtsape::scene::ScenarioConfig;
use jtsape::sdp;
use jtsape::srocr::SrocrSettings;
use jtsape::units::{db_to_linear, dbm_to_watts};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Scenario parameters in configuration units (degrees, dB, dBm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    pub pos_s: [f64; 2],
    pub pos_d: [f64; 2],
    pub pos_e: [f64; 2],
    pub theta_s_deg: f64,
    pub theta_d_deg: f64,
    pub delta_theta_deg: f64,
    pub p_s_dbm: f64,
    #[serde(alias = "power_budget_dbm")]
    pub p0_dbm: f64,
    /// Radar receiver noise power, linear.
    pub radar_noise: f64,
    pub noise_d_dbm: f64,
    pub noise_e_dbm: f64,
    pub beta0_db: f64,
    pub beta_e_db: f64,
    pub alpha: f64,
    pub phi: f64,
    pub gamma_s: f64,
    pub rho: f64,
    pub vartheta: f64,
    pub tau: f64,
    pub resolution_deg: f64,
    pub detection_range_deg: [f64; 2],
    /// `[re, im]`; the two-way path loss to `S` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_target: Option<[f64; 2]>,
    /// Elements on each of the transmit and receive arrays.
    pub n_antennas: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
    pub snapshots: u32,
    pub drop_eaves_constraint_at_rho0: bool,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            pos_s: [500.0, 0.0],
            pos_d: [250.0, 250.0],
            pos_e: [0.0, 0.0],
            theta_s_deg: 0.0,
            theta_d_deg: 45.0,
            delta_theta_deg: 5.0,
            p_s_dbm: 30.0,
            p0_dbm: 30.0,
            radar_noise: 1.0,
            noise_d_dbm: -80.0,
            noise_e_dbm: -80.0,
            beta0_db: -30.0,
            beta_e_db: -30.0,
            alpha: 2.7,
            phi: 0.05,
            gamma_s: 0.01,
            rho: 0.5,
            vartheta: 1e-4,
            tau: 0.999,
            resolution_deg: 1.0,
            detection_range_deg: [-90.0, 90.0],
            beta_target: None,
            n_antennas: 12,
            spacing: 0.5,
            snapshots: 1,
            drop_eaves_constraint_at_rho0: false,
        }
    }
}

/// Core field name to configuration key.
const KEY_NAMES: [(&str, &str); 11] = [
    ("p_s", "p_s_dbm"),
    ("p0", "p0_dbm"),
    ("noise_d", "noise_d_dbm"),
    ("noise_e", "noise_e_dbm"),
    ("beta0", "beta0_db"),
    ("beta_e", "beta_e_db"),
    ("resolution", "resolution_deg"),
    ("delta_theta", "delta_theta_deg"),
    ("theta_s", "theta_s_deg"),
    ("theta_d", "theta_d_deg"),
    ("detection_range", "detection_range_deg"),
];

impl ScenarioParams {
    /// Converts to linear units and validates.
    pub fn to_scenario(&self) -> Result<ScenarioConfig, CliError> {
        let deg = |d: f64| d.to_radians();
        if self.n_antennas < 2 {
            return Err(CliError::config("scenario.n_antennas", "needs at least two elements"));
        }
        let geom = UlaGeometry::new(self.n_antennas, self.spacing)
            .map_err(|e| CliError::config("scenario.spacing", root_message(&e)))?;
        let mut cfg = ScenarioConfig {
            pos_s: self.pos_s,
            pos_d: self.pos_d,
            pos_e: self.pos_e,
            theta_s: deg(self.theta_s_deg),
            theta_d: deg(self.theta_d_deg),
            delta_theta: deg(self.delta_theta_deg),
            p_s: dbm_to_watts(self.p_s_dbm),
            p0: dbm_to_watts(self.p0_dbm),
            radar_noise: self.radar_noise,
            noise_d: dbm_to_watts(self.noise_d_dbm),
            noise_e: dbm_to_watts(self.noise_e_dbm),
            beta0: db_to_linear(self.beta0_db),
            beta_e: db_to_linear(self.beta_e_db),
            alpha: self.alpha,
            phi: self.phi,
            gamma_s: self.gamma_s,
            rho: self.rho,
            vartheta: self.vartheta,
            tau: self.tau,
            resolution: deg(self.resolution_deg),
            detection_range: (deg(self.detection_range_deg[0]), deg(self.detection_range_deg[1])),
            beta_target: Complex64::new(0.0, 0.0),
            tx: geom,
            rx: geom,
            snapshots: self.snapshots,
            drop_eaves_constraint_at_rho0: self.drop_eaves_constraint_at_rho0,
        };
        cfg.beta_target = match self.beta_target {
            Some([re, im]) => Complex64::new(re, im),
            None => cfg.default_beta_target(),
        };
        cfg.validate().map_err(|e| match e {
            jtsape::Error::Config { key, message } => {
                let name = KEY_NAMES
                    .iter()
                    .find(|(k, _)| *k == key)
                    .map_or(key.as_str(), |(_, n)| n);
                CliError::config(format!("scenario.{name}"), message)
            }
            jtsape::Error::Domain(message) => CliError::config("scenario", message),
            e => CliError::Core(e),
        })?;
        Ok(cfg)
    }
}

/// Solver tolerances as written in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub max_outer: usize,
    pub max_newton: usize,
    pub barrier_ratio: f64,
    pub newton_tol: f64,
    pub gap_tol: f64,
    pub mu: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        let s = sdp::Settings::default();
        Self {
            max_outer: s.max_outer,
            max_newton: s.max_newton,
            barrier_ratio: s.barrier_ratio,
            newton_tol: s.newton_tol,
            gap_tol: s.gap_tol,
            mu: s.mu,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SrocrParams {
    pub max_iter: usize,
    pub delta_fraction: f64,
}

impl Default for SrocrParams {
    fn default() -> Self {
        let s = SrocrSettings::default();
        Self {
            max_iter: s.max_iter,
            delta_fraction: s.delta_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentParams {
    pub mode: String,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Concurrent sweep points; zero uses every core.
    pub workers: usize,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            mode: ProblemKind::Jpt.as_str().to_string(),
            output_dir: PathBuf::from("out"),
            seed: 0,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    DeltaTheta,
    NAntennas,
    Rho,
    PowerBudgetDbm,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 4] = [
        SweepParameter::DeltaTheta,
        SweepParameter::NAntennas,
        SweepParameter::Rho,
        SweepParameter::PowerBudgetDbm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::DeltaTheta => "delta_theta",
            SweepParameter::NAntennas => "n_antennas",
            SweepParameter::Rho => "rho",
            SweepParameter::PowerBudgetDbm => "power_budget_dbm",
        }
    }

    /// Scenario with this parameter set to `value`.
    pub fn apply(self, base: &ScenarioParams, value: f64) -> ScenarioParams {
        let mut p = base.clone();
        match self {
            SweepParameter::DeltaTheta => p.delta_theta_deg = value,
            SweepParameter::NAntennas => p.n_antennas = value as usize,
            SweepParameter::Rho => p.rho = value,
            SweepParameter::PowerBudgetDbm => p.p0_dbm = value,
        }
        p
    }

    fn check(self, value: f64) -> Result<(), String> {
        let ok = match self {
            SweepParameter::DeltaTheta => value >= 0.0 && value < 90.0,
            SweepParameter::NAntennas => value >= 2.0 && value.fract() == 0.0 && value <= 256.0,
            SweepParameter::Rho => (0.0..=1.0).contains(&value),
            SweepParameter::PowerBudgetDbm => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(format!("value {value} is outside the domain of `{}`", self.as_str()))
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParameter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        SweepParameter::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                format!(
                    "unknown sweep parameter `{s}`, expected one of {}",
                    SweepParameter::ALL.map(|p| p.as_str()).join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepParams {
    parameter: String,
    values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: ScenarioParams,
    pub solver: SolverParams,
    pub srocr: SrocrParams,
    pub mode: ProblemKind,
    pub sweep: Option<Sweep>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub workers: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            scenario: ScenarioParams::default(),
            solver: SolverParams::default(),
            srocr: SrocrParams::default(),
            mode: ProblemKind::Jpt,
            sweep: None,
            output_dir: ExperimentParams::default().output_dir,
            seed: 0,
            workers: 0,
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileLayout {
    scenario: ScenarioParams,
    solver: SolverParams,
    srocr: SrocrParams,
    experiment: ExperimentParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepParams>,
}

const SECTIONS: [&str; 5] = ["scenario", "solver", "srocr", "experiment", "sweep"];

/// Section owning each leaf key, for keys written at the top level.
fn leaf_index() -> BTreeMap<String, &'static str> {
    fn keys<T: Serialize>(v: &T) -> Vec<String> {
        match toml::Value::try_from(v) {
            Ok(toml::Value::Table(t)) => t.keys().cloned().collect(),
            _ => Vec::new(),
        }
    }
    let mut idx = BTreeMap::new();
    let mut scenario = keys(&ScenarioParams::default());
    scenario.push("beta_target".into());
    scenario.push("power_budget_dbm".into());
    for (section, names) in [
        ("scenario", scenario),
        ("solver", keys(&SolverParams::default())),
        ("srocr", keys(&SrocrParams::default())),
        ("experiment", keys(&ExperimentParams::default())),
        ("sweep", vec!["parameter".into(), "values".into()]),
    ] {
        for n in names {
            idx.insert(n, section);
        }
    }
    idx
}

/// Lifts top-level leaf keys into their sections and rejects unknown keys.
fn normalize(mut root: toml::Table) -> Result<toml::Table, CliError> {
    let idx = leaf_index();
    let mut out = toml::Table::new();
    for s in SECTIONS {
        if let Some(v) = root.remove(s) {
            let toml::Value::Table(t) = v else {
                return Err(CliError::config(s, "must be a table"));
            };
            for k in t.keys() {
                if idx.get(k.as_str()) != Some(&s) {
                    return Err(CliError::config(format!("{s}.{k}"), "unknown key"));
                }
            }
            out.insert(s.to_string(), toml::Value::Table(t));
        }
    }
    for (k, v) in root {
        let Some(section) = idx.get(k.as_str()) else {
            return Err(CliError::config(k, "unknown key"));
        };
        let entry = out
            .entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let toml::Value::Table(t) = entry else {
            unreachable!("sections are tables")
        };
        if t.contains_key(&k) {
            return Err(CliError::config(
                format!("{section}.{k}"),
                "given both at the top level and in its section",
            ));
        }
        t.insert(k, v);
    }
    Ok(out)
}

/// Parses a configuration from text.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, CliError> {
    let root: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::config("<file>", e.message().to_string()))?;
    let table = normalize(root)?;
    let mut layout = FileLayout::default();
    for s in SECTIONS {
        let Some(v) = table.get(s) else { continue };
        let err = |e: toml::de::Error| CliError::config(s, e.message().trim().to_string());
        match s {
            "scenario" => layout.scenario = v.clone().try_into().map_err(err)?,
            "solver" => layout.solver = v.clone().try_into().map_err(err)?,
            "srocr" => layout.srocr = v.clone().try_into().map_err(err)?,
            "experiment" => layout.experiment = v.clone().try_into().map_err(err)?,
            _ => layout.sweep = Some(v.clone().try_into().map_err(err)?),
        }
    }
    let mode: ProblemKind = layout
        .experiment
        .mode
        .parse()
        .map_err(|e: jtsape::Error| CliError::config("experiment.mode", root_message(&e)))?;
    let sweep = match layout.sweep {
        None => None,
        Some(sp) => {
            let parameter: SweepParameter = sp
                .parameter
                .parse()
                .map_err(|m| CliError::config("sweep.parameter", m))?;
            if sp.values.is_empty() {
                return Err(CliError::config("sweep.values", "must not be empty"));
            }
            for &v in &sp.values {
                parameter.check(v).map_err(|m| CliError::config("sweep.values", m))?;
            }
            Some(Sweep {
                parameter,
                values: sp.values,
            })
        }
    };
    let spec = ExperimentSpec {
        scenario: layout.scenario,
        solver: layout.solver,
        srocr: layout.srocr,
        mode,
        sweep,
        output_dir: layout.experiment.output_dir,
        seed: layout.experiment.seed,
        workers: layout.experiment.workers,
    };
    spec.validate()?;
    Ok(spec)
}

fn root_message(e: &jtsape::Error) -> String {
    match e.root() {
        jtsape::Error::Config { message, .. } => message.clone(),
        e => e.to_string(),
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_config(&text)
}

/// Effective configuration as a full file, every key explicit.
pub fn dump_config(spec: &ExperimentSpec) -> String {
    let layout = FileLayout {
        scenario: spec.scenario.clone(),
        solver: spec.solver.clone(),
        srocr: spec.srocr.clone(),
        experiment: ExperimentParams {
            mode: spec.mode.as_str().to_string(),
            output_dir: spec.output_dir.clone(),
            seed: spec.seed,
            workers: spec.workers,
        },
        sweep: spec.sweep.as_ref().map(|s| SweepParams {
            parameter: s.parameter.as_str().to_string(),
            values: s.values.clone(),
        }),
    };
    toml::to_string(&layout).expect("configuration is always representable")
}

impl ExperimentSpec {
    /// Range checks on everything, with the sweep applied point by point.
    pub fn validate(&self) -> Result<(), CliError> {
        self.scenario.to_scenario()?;
        if let Some(s) = &self.sweep {
            for &v in &s.values {
                s.parameter.apply(&self.scenario, v).to_scenario()?;
            }
        }
        let sv = &self.solver;
        let positive = [
            ("solver.barrier_ratio", sv.barrier_ratio),
            ("solver.newton_tol", sv.newton_tol),
            ("solver.gap_tol", sv.gap_tol),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v < 1.0) {
                return Err(CliError::config(k, format!("must lie in (0, 1), got {v}")));
            }
        }
        if !(sv.mu > 1.0) {
            return Err(CliError::config("solver.mu", "must exceed one"));
        }
        if sv.max_outer == 0 || sv.max_newton == 0 {
            return Err(CliError::config("solver", "iteration limits must be positive"));
        }
        if self.srocr.max_iter == 0 {
            return Err(CliError::config("srocr.max_iter", "must be positive"));
        }
        let d = self.srocr.delta_fraction;
        if !(d > 0.0 && d <= 1.0) {
            return Err(CliError::config("srocr.delta_fraction", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Solver and refinement settings for a scenario from this spec.
    pub fn pipeline(&self, scenario: &ScenarioConfig) -> PipelineSettings {
        let sv = &self.solver;
        PipelineSettings {
            solver: sdp::Settings {
                max_outer: sv.max_outer,
                max_newton: sv.max_newton,
                barrier_ratio: sv.barrier_ratio,
                newton_tol: sv.newton_tol,
                gap_tol: sv.gap_tol,
                mu: sv.mu,
                record_trace: false,
            },
            srocr: SrocrSettings {
                vartheta: scenario.vartheta,
                tau: scenario.tau,
                max_iter: self.srocr.max_iter,
                delta_fraction: self.srocr.delta_fraction,
            },
        }
    }
}
