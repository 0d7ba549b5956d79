//! Single solves, sweeps and their CSV artifacts.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use jtsape::array::{steering, AngleGrid};
use jtsape::fim::det_crb;
use jtsape::problems::{design, radar_model, Design};
use jtsape::scene::{gamma_d, gamma_e, CovarianceMatrix, ScenarioConfig};
use jtsape::srocr::SrocrState;
use jtsape::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{dump_config, ExperimentSpec};
use crate::CliError;

/// Floor applied to `gain_db` so exact nulls stay finite.
pub const DB_FLOOR: f64 = -120.0;

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    /// Swept value, or `single`.
    pub sweep_value: String,
    #[serde(rename = "gamma_D")]
    pub gamma_d: f64,
    #[serde(rename = "gamma_E")]
    pub gamma_e: f64,
    pub det_crb: f64,
    pub crb_theta: f64,
    pub objective: f64,
    pub rank_ratio: f64,
    pub status: String,
    /// Wall time of the point; kept out of the CSV so that it is reproducible.
    #[serde(skip)]
    pub wall_time_ms: u128,
}

impl ResultRow {
    pub fn is_optimal(&self) -> bool {
        self.status == "Optimal"
    }
}

/// Outcome of one sweep point, with the covariance that produced the row.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub row: ResultRow,
    pub scenario: Option<ScenarioConfig>,
    pub covariance: Option<CovarianceMatrix>,
    pub trace: Vec<SrocrState>,
}

fn status_name(e: &Error) -> String {
    match e.root() {
        Error::Solver { status } => status.to_string(),
        Error::EavesdropInfeasible { .. } => "EavesdropInfeasible".into(),
        Error::RankOneFailure { .. } => "RankOneFailure".into(),
        Error::SingularFisher { .. } => "SingularFisher".into(),
        Error::ContractViolation(_) => "ContractViolation".into(),
        Error::Config { .. } | Error::Domain(_) => "InvalidInput".into(),
        _ => "Error".into(),
    }
}

/// Quantities reported for a covariance; CRB cells become 0 when the Fisher
/// matrix is singular.
fn metrics(cfg: &ScenarioConfig, r: &CovarianceMatrix) -> (f64, f64, f64, Option<Error>) {
    let gd = gamma_d(cfg, r).unwrap_or(0.0);
    match radar_model(cfg).fisher(r).and_then(|f| {
        let d = det_crb(&f)?;
        let phi = jtsape::fim::crb(&f)?;
        Ok((d, phi.theta()))
    }) {
        Ok((d, t)) => (gd, d, t, None),
        Err(e) => (gd, 0.0, 0.0, Some(e)),
    }
}

fn finite(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        0.0
    }
}

/// Runs the design chain for one scenario.
pub fn run_point(spec: &ExperimentSpec, label: String, cfg: ScenarioConfig) -> PointResult {
    let start = Instant::now();
    let settings = spec.pipeline(&cfg);
    let outcome = design(&cfg, spec.mode, &settings);
    let ge = gamma_e(&cfg);
    let mut row = ResultRow {
        sweep_value: label,
        gamma_d: 0.0,
        gamma_e: ge,
        det_crb: 0.0,
        crb_theta: 0.0,
        objective: 0.0,
        rank_ratio: 0.0,
        status: String::new(),
        wall_time_ms: 0,
    };
    let (covariance, trace) = match outcome {
        Ok(Design { refined, .. }) => {
            let r = refined.result.r;
            let (gd, d, t, err) = metrics(&cfg, &r);
            row.gamma_d = gd;
            row.det_crb = d;
            row.crb_theta = t;
            row.objective = refined.result.objective;
            row.rank_ratio = refined.ratio;
            row.status = err.map_or_else(|| "Optimal".to_string(), |e| status_name(&e));
            (Some(r), refined.trace)
        }
        Err(e) => {
            row.status = status_name(&e);
            match e.root() {
                Error::RankOneFailure { best, ratio } => {
                    let (gd, d, t, _) = metrics(&cfg, &best.r);
                    row.gamma_d = gd;
                    row.det_crb = d;
                    row.crb_theta = t;
                    row.objective = best.objective;
                    row.rank_ratio = *ratio;
                    (Some(best.r.clone()), Vec::new())
                }
                _ => (None, Vec::new()),
            }
        }
    };
    for x in [
        &mut row.gamma_d,
        &mut row.gamma_e,
        &mut row.det_crb,
        &mut row.crb_theta,
        &mut row.objective,
        &mut row.rank_ratio,
    ] {
        *x = finite(*x);
    }
    row.wall_time_ms = start.elapsed().as_millis();
    PointResult {
        row,
        scenario: Some(cfg),
        covariance,
        trace,
    }
}

/// Label used in file names and the `sweep_value` column.
pub fn value_label(v: f64) -> String {
    format!("{v}")
}

/// Runs every point of the spec. Rows follow the sweep order.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<PointResult>, CliError> {
    spec.validate()?;
    let Some(sweep) = &spec.sweep else {
        let cfg = spec.scenario.to_scenario()?;
        return Ok(vec![run_point(spec, "single".into(), cfg)]);
    };
    let points = sweep
        .values
        .iter()
        .map(|&v| {
            let cfg = sweep.parameter.apply(&spec.scenario, v).to_scenario()?;
            Ok((value_label(v), cfg))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| CliError::config("experiment.workers", e.to_string()))?;
    Ok(pool.install(|| {
        points
            .into_par_iter()
            .map(|(label, cfg)| run_point(spec, label, cfg))
            .collect()
    }))
}

fn create(path: &Path) -> Result<File, CliError> {
    File::create(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Csv {
        path: path.to_path_buf(),
        source: e,
    }
}

#[derive(Serialize)]
struct BeamRow {
    angle_deg: f64,
    gain_linear: f64,
    gain_db: f64,
}

/// `aᴴ R a` over the grid, as `(angle_deg, gain_linear, gain_db)`.
pub fn beampattern_rows(r: &CovarianceMatrix, cfg: &ScenarioConfig, grid: &AngleGrid) -> Vec<(f64, f64, f64)> {
    grid.angles()
        .iter()
        .map(|&t| {
            let a = steering(&cfg.tx, t);
            let g = (a.adjoint() * r * &a)[(0, 0)].re.max(0.0);
            let db = if g > 0.0 {
                (10.0 * g.log10()).max(DB_FLOOR)
            } else {
                DB_FLOOR
            };
            // Grid angles are stored in radians; print the degree value.
            ((t.to_degrees() * 1e9).round() / 1e9, g, db)
        })
        .collect()
}

/// Writes the beampattern CSV with header `angle_deg,gain_linear,gain_db`.
pub fn beampattern_export(
    r: &CovarianceMatrix,
    cfg: &ScenarioConfig,
    grid: &AngleGrid,
    path: &Path,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for (angle_deg, gain_linear, gain_db) in beampattern_rows(r, cfg, grid) {
        w.serialize(BeamRow {
            angle_deg,
            gain_linear,
            gain_db,
        })
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>, header: &[&str]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

const RESULT_HEADER: [&str; 8] = [
    "sweep_value",
    "gamma_D",
    "gamma_E",
    "det_crb",
    "crb_theta",
    "objective",
    "rank_ratio",
    "status",
];

const CONVERGENCE_HEADER: [&str; 7] = ["j", "w", "delta", "opt", "ratio", "feasible", "solver_iterations"];

/// Files written by [`write_artifacts`].
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub results: PathBuf,
    pub beampatterns: Vec<PathBuf>,
    pub convergence: Vec<PathBuf>,
    pub timings: PathBuf,
    pub config: PathBuf,
}

/// Writes `results.csv`, one beampattern and one convergence file per point,
/// the effective configuration and a timing log.
pub fn write_artifacts(spec: &ExperimentSpec, points: &[PointResult], dir: &Path) -> Result<Artifacts, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut art = Artifacts {
        results: dir.join("results.csv"),
        timings: dir.join("timings.log"),
        config: dir.join("config.effective.toml"),
        ..Artifacts::default()
    };
    write_rows(&art.results, points.iter().map(|p| &p.row), &RESULT_HEADER)?;
    for p in points {
        let label = &p.row.sweep_value;
        if let (Some(r), Some(cfg)) = (&p.covariance, &p.scenario) {
            let grid = cfg.grid().map_err(CliError::Core)?;
            let path = dir.join(format!("beampattern_{label}.csv"));
            beampattern_export(r, cfg, &grid, &path)?;
            art.beampatterns.push(path);
        }
        let path = dir.join(format!("convergence_{label}.csv"));
        write_rows(&path, &p.trace, &CONVERGENCE_HEADER)?;
        art.convergence.push(path);
    }
    let mut log = create(&art.timings)?;
    for p in points {
        writeln!(log, "{} {} ms {}", p.row.sweep_value, p.row.wall_time_ms, p.row.status).map_err(|e| {
            CliError::Io {
                path: art.timings.clone(),
                source: e,
            }
        })?;
    }
    std::fs::write(&art.config, dump_config(spec)).map_err(|e| CliError::Io {
        path: art.config.clone(),
        source: e,
    })?;
    Ok(art)
}
