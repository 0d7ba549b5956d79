use jtsape::fim::det_crb;
use jtsape::problems::*;
use jtsape::scene::*;
use jtsape::sdp::{validate_solution, Settings, SolveStatus};
use jtsape::units::dbm_to_watts;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn trace(r: &CovarianceMatrix) -> f64 {
    r.diagonal().iter().map(|z| z.re).sum()
}

fn audit(p: &CovarianceProblem, r: &CovarianceMatrix) {
    let rep = validate_solution(r, &p.constraints);
    for c in &rep.constraints {
        assert!(c.satisfied, "{} violated: {} vs {}", c.label, c.value, c.rhs);
    }
    assert!(!rep.psd_violation, "λ_min = {}", rep.min_eigenvalue);
}

fn crb_of(cfg: &ScenarioConfig, r: &CovarianceMatrix) -> f64 {
    det_crb(&radar_model(cfg).fisher(r).unwrap()).unwrap()
}

#[test]
fn eavesdropping_only_pins_threshold() {
    let cfg = ScenarioConfig::reference();
    let grid = cfg.grid().unwrap();
    let p = build_pe_only(&cfg, &grid).unwrap();
    let r = p.solve(&Settings::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    let thr = eaves_threshold(&cfg);
    assert!((thr - 0.1177).abs() < 1e-3);
    assert!(rel(r.objective, thr) < 1e-6, "{} vs {thr}", r.objective);
    assert!(rel(gamma_d(&cfg, &r.r).unwrap(), gamma_e(&cfg)) < 1e-6);
    audit(&p, &r.r);
}

#[test]
fn perfect_sensing_peaks_at_target() {
    let cfg = ScenarioConfig::reference();
    let grid = cfg.grid().unwrap();
    let p = build_ts_perfect(&cfg, &grid).unwrap();
    let r = p.solve(&Settings::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    audit(&p, &r.r);
    let gains: Vec<f64> = grid
        .angles()
        .iter()
        .map(|&t| beampattern(&r.r, &jtsape::array::steering(&cfg.tx, t)).unwrap())
        .collect();
    let argmax = (0..gains.len()).max_by(|&a, &b| gains[a].total_cmp(&gains[b])).unwrap();
    assert_eq!(argmax, grid.target_index());
    assert!(rel(trace(&r.r), cfg.p0) < 1e-6);
    assert!(rel(crb_of(&cfg, &r.r), r.objective) < 1e-9);
}

#[test]
fn dropping_the_gap_can_only_help() {
    let cfg = ScenarioConfig::reference();
    let mut loose = cfg.clone();
    loose.gamma_s = 0.0;
    let s = Settings::default();
    let a = build_ts_perfect(&cfg, &cfg.grid().unwrap()).unwrap().solve(&s).unwrap();
    let b = build_ts_perfect(&loose, &loose.grid().unwrap()).unwrap().solve(&s).unwrap();
    assert!(b.objective <= a.objective * (1.0 + 1e-7));
}

#[test]
fn more_power_lowers_the_bound() {
    let s = Settings::default();
    let mut prev = f64::INFINITY;
    for dbm in [30.0, 35.0] {
        let mut cfg = ScenarioConfig::reference();
        cfg.p0 = dbm_to_watts(dbm);
        let r = build_ts_perfect(&cfg, &cfg.grid().unwrap()).unwrap().solve(&s).unwrap();
        assert!(r.objective < prev);
        prev = r.objective;
    }
}

#[test]
fn robust_sensing_keeps_mainlobe_flat_and_grows_with_uncertainty() {
    let s = Settings::default();
    let mut prev = 0.0;
    for deg in [0.0f64, 3.0, 5.0] {
        let mut cfg = ScenarioConfig::reference();
        cfg.delta_theta = deg.to_radians();
        let grid = cfg.grid().unwrap();
        let p = build_ts_robust(&cfg, &grid).unwrap();
        let r = p.solve(&s).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        audit(&p, &r.r);
        let g = |t: f64| beampattern(&r.r, &jtsape::array::steering(&cfg.tx, t)).unwrap();
        let peak = g(cfg.theta_s);
        for &m in grid.mainlobe() {
            let x = g(grid.angles()[m]) / peak;
            assert!((0.95 - 1e-6..=1.05 + 1e-6).contains(&x), "{x}");
        }
        assert!(r.objective >= prev);
        prev = r.objective;
    }
}

#[test]
fn normalizers_match_single_programs() {
    let cfg = ScenarioConfig::reference();
    let grid = cfg.grid().unwrap();
    let s = Settings::default();
    let nz = compute_normalizers(&cfg, &grid, true, &s).unwrap();
    assert!(rel(nz.i_tilde, eaves_threshold(&cfg)) < 1e-6);
    let ts = build_ts_robust(&cfg, &grid).unwrap().solve(&s).unwrap();
    assert!(rel(nz.det_phi_tilde, ts.objective) < 1e-9);
    // Self-normalization at the pure optimizer.
    let mut c0 = cfg.clone();
    c0.rho = 0.0;
    let joint = build_joint(&c0, &grid, &nz).unwrap();
    if validate_solution(&ts.r, &joint.constraints).feasible() {
        assert!((joint.objective.evaluate(&ts.r).unwrap() - 1.0).abs() < 1e-6);
    }
    let pe = build_pe_only(&cfg, &grid).unwrap().solve(&s).unwrap();
    let mut c1 = cfg.clone();
    c1.rho = 1.0;
    let joint = build_joint(&c1, &grid, &nz).unwrap();
    assert!((interference(&cfg, &pe.r).unwrap() / nz.i_tilde - 1.0).abs() < 1e-6);
    if validate_solution(&pe.r, &joint.constraints).feasible() {
        assert!((joint.objective.evaluate(&pe.r).unwrap() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn joint_pins_sinr_and_saturates_power() {
    let s = Settings::default();
    for rho in [0.0, 1.0] {
        let mut cfg = ScenarioConfig::reference();
        cfg.rho = rho;
        let grid = cfg.grid().unwrap();
        let nz = compute_normalizers(&cfg, &grid, true, &s).unwrap();
        let p = build_joint(&cfg, &grid, &nz).unwrap();
        let r = p.solve(&s).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        audit(&p, &r.r);
        assert!(rel(gamma_d(&cfg, &r.r).unwrap(), gamma_e(&cfg)) < 1e-6);
        if rho < 1.0 {
            // With no CRB term at ρ = 1 the trace is not pinned.
            assert!(rel(trace(&r.r), cfg.p0) < 1e-6, "tr = {}", trace(&r.r));
        }
        // The robust sensing optimizer is another feasible point of P3 here.
        let ts = build_ts_robust(&cfg, &grid).unwrap().solve(&s).unwrap();
        if validate_solution(&ts.r, &p.constraints).feasible() {
            let other = p.objective.evaluate(&ts.r).unwrap();
            assert!(r.objective <= other * (1.0 + 1e-6), "{} > {other}", r.objective);
        }
    }
}

#[test]
fn weight_sweep_is_a_tradeoff() {
    let s = Settings::default();
    let base = ScenarioConfig::reference();
    let grid = base.grid().unwrap();
    let nz = compute_normalizers(&base, &grid, true, &s).unwrap();
    let mut prev: Option<(f64, f64)> = None;
    for rho in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let mut cfg = base.clone();
        cfg.rho = rho;
        let p = build_joint(&cfg, &grid, &nz).unwrap();
        let r = p.solve(&s).unwrap();
        let e = interference(&cfg, &r.r).unwrap() / nz.i_tilde;
        let c = crb_of(&cfg, &r.r) / nz.det_phi_tilde;
        if let Some((pe, pc)) = prev {
            assert!(e <= pe + 1e-6, "eaves term rose at ρ={rho}: {pe} -> {e}");
            assert!(c >= pc - 1e-6, "CRB term fell at ρ={rho}: {pc} -> {c}");
        }
        prev = Some((e, c));
    }
}

#[test]
fn reference_scenario_takes_jamming_branch() {
    let cfg = ScenarioConfig::reference();
    let grid = cfg.grid().unwrap();
    let d = dispatch(&cfg, &grid, &PipelineSettings::for_config(&cfg)).unwrap();
    assert_eq!(d.branch, Branch::Jamming);
    assert_eq!(d.kind, ProblemKind::Jpt);
    assert!(d.refined.ratio >= cfg.tau);
    audit(&d.problem, d.covariance());
}

#[test]
fn distant_receiver_takes_null_branch() {
    let mut cfg = ScenarioConfig::reference();
    // Same bearing from E, three times farther: d_SD > d_SE.
    cfg.pos_d = [750.0, 750.0];
    assert!(interference_free(&cfg));
    let grid = cfg.grid().unwrap();
    let d = dispatch(&cfg, &grid, &PipelineSettings::for_config(&cfg)).unwrap();
    assert_eq!(d.branch, Branch::ZeroInterference);
    let r = d.covariance();
    assert!(interference(&cfg, r).unwrap() <= 1e-9 * cfg.p0);
    assert!(d.refined.ratio >= cfg.tau);
    audit(&d.problem, r);
    let free = cfg.p_s * cfg.h_sd_sq() / cfg.noise_d;
    assert!(rel(gamma_d(&cfg, r).unwrap(), free) < 1e-6);
}

#[test]
fn stage_names_are_attached() {
    let mut cfg = ScenarioConfig::reference();
    cfg.noise_e *= 1e6;
    let err = design(&cfg, ProblemKind::Jpt, &PipelineSettings::for_config(&cfg)).unwrap_err();
    assert!(err.to_string().starts_with("normalizer PEO"), "{err}");
    assert!(matches!(err.root(), jtsape::Error::EavesdropInfeasible { .. }));
}
