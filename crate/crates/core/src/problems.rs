//! The covariance programs of the sensing/eavesdropping trade-off and the
//! pipeline that chains them.
//!
//! | kind | objective | beam constraints |
//! |------|-----------|------------------|
//! | PEO | `I(θ_D)` | `I(θ_D) ≥` threshold |
//! | TSO perfect | `det Φ` | gap over every grid angle but `θ_S` |
//! | TSO robust | `det Φ` | gap outside the mainlobe, mainlobe ripple |
//! | JPT | `ρ I(θ_D)/Ĩ + (1−ρ) det Φ/det Φ̃` | threshold, robust gap and ripple |
//! | JPT zero interference | `det Φ` | `I(θ_D) ≈ 0`, robust gap and ripple |
//!
//! All programs carry `tr R ≤ P_0` and `R ⪰ 0`; the rank-one requirement is
//! handled afterwards by [`crate::srocr`].

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array::{steering, AngleGrid};
use crate::error::{Error, Result};
use crate::fim::{RadarModel, TargetSet};
use crate::linalg::{hermitian_eigen, hermitian_part};
use crate::scene::{eaves_threshold, interference_free, CovarianceMatrix, ScenarioConfig};
use crate::sdp::{self, AffineConstraint, FimMap, LinearFunctional, ObjectiveSpec, SolveResult, SolveStatus};
use crate::srocr::{srocr_refine, SrocrOutcome, SrocrSettings};

/// Relative width of the band that stands in for `I(θ_D) = 0`.
pub const NULL_TOLERANCE: f64 = 1e-9;

/// Optimal values of the two single-objective programs, used to put both
/// terms of the joint objective on a common scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizers {
    /// Optimal `I(θ_D)` of the eavesdropping-only program.
    pub i_tilde: f64,
    /// Optimal `det Φ` of the sensing-only program.
    pub det_phi_tilde: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    Peo,
    TsoPerfect,
    TsoRobust,
    Jpt,
    JptZeroInterference,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 5] = [
        ProblemKind::Peo,
        ProblemKind::TsoPerfect,
        ProblemKind::TsoRobust,
        ProblemKind::Jpt,
        ProblemKind::JptZeroInterference,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::Peo => "PEO",
            ProblemKind::TsoPerfect => "TSO_perfect",
            ProblemKind::TsoRobust => "TSO_robust",
            ProblemKind::Jpt => "JPT",
            ProblemKind::JptZeroInterference => "JPT_zero_interference",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::config(
                    "mode",
                    format!(
                        "unknown mode `{s}`, expected one of {}",
                        ProblemKind::ALL.map(|k| k.as_str()).join(", ")
                    ),
                )
            })
    }
}

/// A relaxed covariance program.
///
/// With `lift = Some(B)` the program is solved over `R = B X Bᴴ`, where the
/// columns of `B` are orthonormal. Objective and constraints are always
/// stated for the full `n × n` matrix.
#[derive(Debug, Clone)]
pub struct CovarianceProblem {
    pub objective: ObjectiveSpec,
    pub constraints: Vec<AffineConstraint>,
    pub n: usize,
    pub lift: Option<DMatrix<Complex64>>,
}

/// The program restated over the variable actually handed to the solver.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    pub objective: ObjectiveSpec,
    pub constraints: Vec<AffineConstraint>,
    pub n: usize,
}

impl CovarianceProblem {
    pub fn reduced(&self) -> Result<ReducedProblem> {
        let Some(b) = &self.lift else {
            return Ok(ReducedProblem {
                objective: self.objective.clone(),
                constraints: self.constraints.clone(),
                n: self.n,
            });
        };
        let m = b.ncols();
        let compress = |f: &LinearFunctional| {
            LinearFunctional::new(hermitian_part(&(b.adjoint() * f.coefficient() * b)))
        };
        let constraints = self
            .constraints
            .iter()
            .map(|c| {
                Ok(AffineConstraint {
                    functional: compress(&c.functional)?,
                    ..c.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut objective = self.objective.clone();
        if let Some(t) = &self.objective.linear_term {
            objective.linear_term = Some(compress(t)?);
        }
        if let Some(map) = &self.objective.fim_map {
            objective.fim_map = Some(FimMap::from_linear_map(m, |x| {
                Ok(map.apply(&(b * x * b.adjoint())).into_matrix())
            })?);
        }
        Ok(ReducedProblem {
            objective,
            constraints,
            n: m,
        })
    }

    /// Maps a solver variable back to the full covariance.
    pub fn embed(&self, x: &CovarianceMatrix) -> CovarianceMatrix {
        match &self.lift {
            Some(b) => hermitian_part(&(b * x * b.adjoint())),
            None => x.clone(),
        }
    }

    pub fn solve(&self, settings: &sdp::Settings) -> Result<SolveResult> {
        let red = self.reduced()?;
        let mut res = sdp::solve(&red.objective, &red.constraints, red.n, settings)?;
        res.r = self.embed(&res.r);
        Ok(res)
    }
}

/// Orthonormal basis of the complement of `a`.
fn complement_basis(a: &DVector<Complex64>) -> DMatrix<Complex64> {
    let n = a.len();
    let p = DMatrix::<Complex64>::identity(n, n) - a * a.adjoint() / Complex64::new(a.norm_squared(), 0.0);
    let (_, vecs) = hermitian_eigen(&p);
    vecs.columns(0, n - 1).into_owned()
}

/// Radar model for the configured target.
pub fn radar_model(config: &ScenarioConfig) -> RadarModel {
    RadarModel {
        targets: TargetSet::single(config.theta_s, config.beta_target),
        tx: config.tx,
        rx: config.rx,
        noise_power: config.radar_noise,
        snapshots: config.snapshots,
    }
}

struct Beams<'a> {
    config: &'a ScenarioConfig,
    grid: &'a AngleGrid,
}

impl Beams<'_> {
    fn at(&self, idx: usize) -> LinearFunctional {
        LinearFunctional::beampattern(&steering(&self.config.tx, self.grid.angles()[idx]))
    }

    fn target(&self) -> LinearFunctional {
        self.at(self.grid.target_index())
    }

    fn eaves(&self) -> LinearFunctional {
        self.at(self.grid.eaves_index())
    }

    fn power(&self) -> AffineConstraint {
        AffineConstraint::le(
            LinearFunctional::trace(self.config.tx.n_elements()),
            self.config.p0,
            "power",
        )
    }

    /// `I(θ_S) − I(θ_n) ≥ γ_s` for every `n` in `set`.
    fn gaps(&self, set: &[usize], out: &mut Vec<AffineConstraint>) {
        let target = self.target();
        for &i in set {
            out.push(AffineConstraint::ge(
                target.minus(&self.at(i)),
                self.config.gamma_s,
                format!("gap@{:.4}", self.grid.angles()[i].to_degrees()),
            ));
        }
    }

    /// `(1−φ) I(θ_S) ≤ I(θ_m) ≤ (1+φ) I(θ_S)` over the mainlobe, `θ_S` excluded.
    fn ripple(&self, out: &mut Vec<AffineConstraint>) {
        let target = self.target();
        let phi = self.config.phi;
        for &i in self.grid.mainlobe() {
            if i == self.grid.target_index() {
                continue;
            }
            let deg = self.grid.angles()[i].to_degrees();
            let m = self.at(i);
            out.push(AffineConstraint::ge(
                m.minus(&target.scaled(1.0 - phi)),
                0.0,
                format!("ripple_lo@{deg:.4}"),
            ));
            out.push(AffineConstraint::ge(
                target.scaled(1.0 + phi).minus(&m),
                0.0,
                format!("ripple_hi@{deg:.4}"),
            ));
        }
    }

    /// `I(θ_D) ≥ max(threshold, 0)`.
    fn eaves_lower(&self) -> Result<AffineConstraint> {
        let thr = eaves_threshold(self.config).max(0.0);
        let achievable = self.config.tx.n_elements() as f64 * self.config.p0;
        if thr > achievable {
            return Err(Error::EavesdropInfeasible {
                required: thr,
                achievable,
            });
        }
        Ok(AffineConstraint::ge(self.eaves(), thr, "eaves"))
    }
}

fn check_grid(config: &ScenarioConfig, grid: &AngleGrid) -> Result<()> {
    let ok = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + b.abs());
    if !ok(grid.target_angle(), config.theta_s) || !ok(grid.eaves_angle(), config.theta_d) {
        return Err(Error::ContractViolation(
            "grid was built for different target or eavesdropping angles".into(),
        ));
    }
    Ok(())
}

fn fim_map(config: &ScenarioConfig) -> Result<FimMap> {
    FimMap::from_model(&radar_model(config))
}

/// Eavesdropping only: minimize `I(θ_D)` subject to the jamming threshold.
pub fn build_pe_only(config: &ScenarioConfig, grid: &AngleGrid) -> Result<CovarianceProblem> {
    check_grid(config, grid)?;
    let b = Beams { config, grid };
    Ok(CovarianceProblem {
        objective: ObjectiveSpec::linear(b.eaves()),
        constraints: vec![b.eaves_lower()?, b.power()],
        n: config.tx.n_elements(),
        lift: None,
    })
}

/// Sensing only with a perfectly known direction.
pub fn build_ts_perfect(config: &ScenarioConfig, grid: &AngleGrid) -> Result<CovarianceProblem> {
    check_grid(config, grid)?;
    if !(config.gamma_s >= 0.0) {
        return Err(Error::config("gamma_s", "sidelobe gap must be non-negative"));
    }
    let b = Beams { config, grid };
    let mut constraints = Vec::new();
    b.gaps(grid.all_but_target(), &mut constraints);
    constraints.push(b.power());
    Ok(CovarianceProblem {
        objective: ObjectiveSpec::detinv(fim_map(config)?, 1.0),
        constraints,
        n: config.tx.n_elements(),
        lift: None,
    })
}

/// Sensing only with direction uncertainty `Δθ`.
pub fn build_ts_robust(config: &ScenarioConfig, grid: &AngleGrid) -> Result<CovarianceProblem> {
    check_grid(config, grid)?;
    if !(0.0..=1.0).contains(&config.phi) {
        return Err(Error::config("phi", "ripple must lie in [0, 1]"));
    }
    let b = Beams { config, grid };
    let mut constraints = Vec::new();
    b.gaps(grid.sidelobe(), &mut constraints);
    b.ripple(&mut constraints);
    constraints.push(b.power());
    Ok(CovarianceProblem {
        objective: ObjectiveSpec::detinv(fim_map(config)?, 1.0),
        constraints,
        n: config.tx.n_elements(),
        lift: None,
    })
}

fn positive(label: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{label} must be positive and finite, got {v}")))
    }
}

/// Solves the two single-objective programs (concurrently).
pub fn compute_normalizers(
    config: &ScenarioConfig,
    grid: &AngleGrid,
    robust: bool,
    settings: &sdp::Settings,
) -> Result<Normalizers> {
    let solve_pe = || -> Result<f64> {
        let p = build_pe_only(config, grid).map_err(|e| e.in_stage("normalizer PEO"))?;
        let r = p.solve(settings).map_err(|e| e.in_stage("normalizer PEO"))?;
        expect_optimal(&r).map_err(|e| e.in_stage("normalizer PEO"))?;
        positive("I_tilde", r.objective)
    };
    let solve_ts = || -> Result<f64> {
        let p = if robust {
            build_ts_robust(config, grid)
        } else {
            build_ts_perfect(config, grid)
        }
        .map_err(|e| e.in_stage("normalizer TSO"))?;
        let r = p.solve(settings).map_err(|e| e.in_stage("normalizer TSO"))?;
        expect_optimal(&r).map_err(|e| e.in_stage("normalizer TSO"))?;
        positive("det_phi_tilde", r.objective)
    };
    let (i, d) = rayon::join(solve_pe, solve_ts);
    Ok(Normalizers {
        i_tilde: i?,
        det_phi_tilde: d?,
    })
}

/// Weighted joint program.
pub fn build_joint(
    config: &ScenarioConfig,
    grid: &AngleGrid,
    normalizers: &Normalizers,
) -> Result<CovarianceProblem> {
    check_grid(config, grid)?;
    if !(0.0..=1.0).contains(&config.rho) {
        return Err(Error::config("rho", "weight must lie in [0, 1]"));
    }
    positive("I_tilde", normalizers.i_tilde)?;
    positive("det_phi_tilde", normalizers.det_phi_tilde)?;
    let b = Beams { config, grid };
    let mut constraints = vec![b.power()];
    if !(config.rho == 0.0 && config.drop_eaves_constraint_at_rho0) {
        constraints.push(b.eaves_lower()?);
    }
    b.gaps(grid.sidelobe(), &mut constraints);
    b.ripple(&mut constraints);
    let objective = ObjectiveSpec::weighted(
        config.rho / normalizers.i_tilde,
        b.eaves(),
        1.0 - config.rho,
        fim_map(config)?,
        normalizers.det_phi_tilde,
    );
    Ok(CovarianceProblem {
        objective,
        constraints,
        n: config.tx.n_elements(),
        lift: None,
    })
}

/// Sensing with a null toward `D`, for scenarios that need no jamming.
pub fn build_zero_interference(
    config: &ScenarioConfig,
    grid: &AngleGrid,
) -> Result<CovarianceProblem> {
    check_grid(config, grid)?;
    if !interference_free(config) {
        return Err(Error::ContractViolation(
            "zero-interference program requires a scenario where E already out-hears D".into(),
        ));
    }
    let b = Beams { config, grid };
    let mut constraints = vec![
        b.power(),
        AffineConstraint::le(b.eaves(), NULL_TOLERANCE * config.p0, "null"),
    ];
    b.gaps(grid.sidelobe(), &mut constraints);
    b.ripple(&mut constraints);
    // The null is imposed exactly by keeping R off the direction of D; the
    // band row stays for auditing.
    let lift = complement_basis(&steering(&config.tx, config.theta_d));
    Ok(CovarianceProblem {
        objective: ObjectiveSpec::detinv(fim_map(config)?, 1.0),
        constraints,
        n: config.tx.n_elements(),
        lift: Some(lift),
    })
}

fn expect_optimal(r: &SolveResult) -> Result<()> {
    if r.status == SolveStatus::Optimal {
        Ok(())
    } else {
        Err(Error::Solver { status: r.status })
    }
}

/// Which branch of the joint design was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `E` must jam `D`: normalizers, weighted program, refinement.
    Jamming,
    /// No jamming needed: null toward `D`, refinement.
    ZeroInterference,
    /// A single-objective program requested directly.
    Single,
}

/// Solver settings for a whole pipeline.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineSettings {
    pub solver: sdp::Settings,
    pub srocr: SrocrSettings,
}

impl PipelineSettings {
    /// Defaults with `ϑ` and `τ` taken from the scenario.
    pub fn for_config(config: &ScenarioConfig) -> Self {
        Self {
            solver: sdp::Settings::default(),
            srocr: SrocrSettings {
                vartheta: config.vartheta,
                tau: config.tau,
                ..SrocrSettings::default()
            },
        }
    }
}

/// Everything produced by one design run.
#[derive(Debug, Clone)]
pub struct Design {
    pub kind: ProblemKind,
    pub branch: Branch,
    pub normalizers: Option<Normalizers>,
    pub problem: CovarianceProblem,
    /// Relaxed solution before refinement.
    pub relaxed: SolveResult,
    pub refined: SrocrOutcome,
}

impl Design {
    pub fn covariance(&self) -> &CovarianceMatrix {
        &self.refined.result.r
    }
}

fn refine(
    kind: ProblemKind,
    branch: Branch,
    normalizers: Option<Normalizers>,
    problem: CovarianceProblem,
    settings: &PipelineSettings,
) -> Result<Design> {
    let red = problem.reduced().map_err(|e| e.in_stage("build"))?;
    let mut relaxed = sdp::solve(&red.objective, &red.constraints, red.n, &settings.solver)
        .map_err(|e| e.in_stage("relaxation"))?;
    expect_optimal(&relaxed).map_err(|e| e.in_stage("relaxation"))?;
    let embed_outcome = |mut out: SrocrOutcome| {
        out.result.r = problem.embed(&out.result.r);
        for s in &mut out.trace {
            s.r = problem.embed(&s.r);
            if let Some(b) = &problem.lift {
                s.u = b * &s.u;
            }
        }
        out
    };
    let refined = srocr_refine(
        &red.objective,
        &red.constraints,
        &relaxed,
        &settings.srocr,
        &settings.solver,
    )
    .map(embed_outcome)
    .map_err(|e| match e {
        Error::RankOneFailure { mut best, ratio } => {
            best.r = problem.embed(&best.r);
            Error::RankOneFailure { best, ratio }
        }
        e => e,
    })
    .map_err(|e| e.in_stage("rank-one refinement"))?;
    relaxed.r = problem.embed(&relaxed.r);
    Ok(Design {
        kind,
        branch,
        normalizers,
        problem,
        relaxed,
        refined,
    })
}

/// Joint design: picks the jamming or zero-interference branch from the
/// channel qualities, then refines to rank one.
pub fn dispatch(
    config: &ScenarioConfig,
    grid: &AngleGrid,
    settings: &PipelineSettings,
) -> Result<Design> {
    if interference_free(config) {
        let p = build_zero_interference(config, grid).map_err(|e| e.in_stage("build"))?;
        refine(ProblemKind::JptZeroInterference, Branch::ZeroInterference, None, p, settings)
    } else {
        let nz = compute_normalizers(config, grid, true, &settings.solver)?;
        let p = build_joint(config, grid, &nz).map_err(|e| e.in_stage("build"))?;
        refine(ProblemKind::Jpt, Branch::Jamming, Some(nz), p, settings)
    }
}

/// Runs the requested program kind end to end.
pub fn design(
    config: &ScenarioConfig,
    kind: ProblemKind,
    settings: &PipelineSettings,
) -> Result<Design> {
    config.validate()?;
    let grid = config.grid()?;
    let build = |r: Result<CovarianceProblem>| r.map_err(|e| e.in_stage("build"));
    match kind {
        ProblemKind::Jpt => dispatch(config, &grid, settings),
        ProblemKind::Peo => refine(kind, Branch::Single, None, build(build_pe_only(config, &grid))?, settings),
        ProblemKind::TsoPerfect => refine(
            kind,
            Branch::Single,
            None,
            build(build_ts_perfect(config, &grid))?,
            settings,
        ),
        ProblemKind::TsoRobust => refine(
            kind,
            Branch::Single,
            None,
            build(build_ts_robust(config, &grid))?,
            settings,
        ),
        ProblemKind::JptZeroInterference => refine(
            kind,
            Branch::ZeroInterference,
            None,
            build(build_zero_interference(config, &grid))?,
            settings,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in ProblemKind::ALL {
            assert_eq!(k.as_str().parse::<ProblemKind>().unwrap(), k);
        }
        assert!("nope".parse::<ProblemKind>().is_err());
    }

    #[test]
    fn robust_with_zero_uncertainty_equals_perfect() {
        let mut cfg = ScenarioConfig::reference();
        cfg.delta_theta = 0.0;
        let grid = cfg.grid().unwrap();
        let a = build_ts_perfect(&cfg, &grid).unwrap();
        let b = build_ts_robust(&cfg, &grid).unwrap();
        assert_eq!(a.constraints, b.constraints);
    }

    #[test]
    fn constraint_counts() {
        let cfg = ScenarioConfig::reference();
        let grid = cfg.grid().unwrap();
        assert_eq!(build_pe_only(&cfg, &grid).unwrap().constraints.len(), 2);
        assert_eq!(build_ts_perfect(&cfg, &grid).unwrap().constraints.len(), 181);
        // 170 gaps, 2 × 10 ripple rows, power
        assert_eq!(build_ts_robust(&cfg, &grid).unwrap().constraints.len(), 191);
        let nz = Normalizers {
            i_tilde: 1.0,
            det_phi_tilde: 1.0,
        };
        assert_eq!(build_joint(&cfg, &grid, &nz).unwrap().constraints.len(), 192);
    }

    #[test]
    fn eavesdrop_infeasible_is_reported() {
        let mut cfg = ScenarioConfig::reference();
        // Weak S–E link makes the threshold exceed what E can radiate.
        cfg.noise_e *= 1e6;
        let grid = cfg.grid().unwrap();
        assert!(eaves_threshold(&cfg) > 2.0 * 12.0 * cfg.p0);
        assert!(matches!(
            build_pe_only(&cfg, &grid),
            Err(Error::EavesdropInfeasible { .. })
        ));
    }

    #[test]
    fn zero_interference_requires_free_scenario() {
        let cfg = ScenarioConfig::reference();
        let grid = cfg.grid().unwrap();
        assert!(matches!(
            build_zero_interference(&cfg, &grid),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn rho_range_checked() {
        let mut cfg = ScenarioConfig::reference();
        cfg.rho = 1.5;
        let grid = cfg.grid().unwrap();
        let nz = Normalizers {
            i_tilde: 1.0,
            det_phi_tilde: 1.0,
        };
        assert!(matches!(build_joint(&cfg, &grid, &nz), Err(Error::Config { .. })));
    }

    #[test]
    fn drop_switch_removes_eaves_row_only_at_rho0() {
        let mut cfg = ScenarioConfig::reference();
        cfg.rho = 0.0;
        cfg.drop_eaves_constraint_at_rho0 = true;
        let grid = cfg.grid().unwrap();
        let nz = Normalizers {
            i_tilde: 1.0,
            det_phi_tilde: 1.0,
        };
        let p = build_joint(&cfg, &grid, &nz).unwrap();
        assert!(p.constraints.iter().all(|c| c.label != "eaves"));
        cfg.rho = 0.25;
        let p = build_joint(&cfg, &grid, &nz).unwrap();
        assert!(p.constraints.iter().any(|c| c.label == "eaves"));
    }
}
