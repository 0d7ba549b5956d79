use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jtsape::problems::ProblemKind;
use jtsape_cli::config::{load_config, parse_config, Sweep, SweepParameter};
use jtsape_cli::experiment::run;
use tempfile::TempDir;

fn jtsape(args: &[&std::ffi::OsStr]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jtsape"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let p = dir.path().join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn all_finite(row: &[String], skip: &[usize]) -> bool {
    row.iter()
        .enumerate()
        .filter(|(i, _)| !skip.contains(i))
        .all(|(_, c)| c.parse::<f64>().is_ok_and(f64::is_finite))
}

#[test]
fn solve_writes_every_artifact() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[experiment]\nmode = \"PEO\"\n");
    let out = dir.path().join("out");
    let o = jtsape(&["solve".as_ref(), cfg.as_os_str(), "-o".as_ref(), out.as_os_str()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let (h, rows) = table(&out.join("results.csv"));
    assert_eq!(
        h,
        ["sweep_value", "gamma_D", "gamma_E", "det_crb", "crb_theta", "objective", "rank_ratio", "status"]
    );
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert_eq!(row[0], "single");
    assert_eq!(row[col(&h, "status")], "Optimal");
    let objective: f64 = row[col(&h, "objective")].parse().unwrap();
    assert!((objective - 0.118).abs() < 5e-4, "objective {objective}");
    let gd: f64 = row[col(&h, "gamma_D")].parse().unwrap();
    let ge: f64 = row[col(&h, "gamma_E")].parse().unwrap();
    assert!((gd - ge).abs() <= 1e-6 * ge);
    let ratio: f64 = row[col(&h, "rank_ratio")].parse().unwrap();
    assert!(ratio >= 0.999);
    assert!(all_finite(row, &[0, col(&h, "status")]));

    let (bh, beam) = table(&out.join("beampattern_single.csv"));
    assert_eq!(bh, ["angle_deg", "gain_linear", "gain_db"]);
    assert_eq!(beam.len(), 181);
    assert!(beam.iter().all(|r| all_finite(r, &[])));
    let (ch, _) = table(&out.join("convergence_single.csv"));
    assert_eq!(ch[0], "j");
    assert!(out.join("timings.log").exists());

    // The dumped configuration loads back to the same experiment.
    let again = load_config(&out.join("config.effective.toml")).unwrap();
    assert_eq!(again, load_config(&cfg).unwrap());
}

#[test]
fn beampattern_of_sensing_design_peaks_at_target() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "mode = \"TSO_perfect\"\ntheta_s_deg = 10.0\n");
    let out = dir.path().join("bp");
    let o = jtsape(&["beampattern".as_ref(), cfg.as_os_str(), "-o".as_ref(), out.as_os_str()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = table(&out.join("beampattern_single.csv"));
    assert_eq!(rows.len(), 181);
    let parsed: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect();
    let peak = parsed.iter().copied().fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    assert_eq!(peak.0, 10.0);
}

#[test]
fn weight_sweep_keeps_sinr_at_threshold() {
    let mut spec = parse_config("mode = \"JPT\"").unwrap();
    spec.sweep = Some(Sweep {
        parameter: SweepParameter::Rho,
        values: vec![0.0, 0.5, 1.0],
    });
    let rows = run(&spec).unwrap();
    assert_eq!(rows.len(), 3);
    let labels: Vec<_> = rows.iter().map(|p| p.row.sweep_value.as_str()).collect();
    assert_eq!(labels, ["0", "0.5", "1"]);
    for p in &rows {
        assert!(p.row.is_optimal(), "{:?}", p.row);
        assert!(p.row.rank_ratio >= 0.999);
    }
    for p in &rows[1..] {
        let (gd, ge) = (p.row.gamma_d, p.row.gamma_e);
        assert!((gd - ge).abs() <= 1e-6 * ge, "ρ = {}: γ_D {gd} vs γ_E {ge}", p.row.sweep_value);
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "[scenario]\nrhoo = 0.5\n");
    let o = jtsape(&["solve".as_ref(), cfg.as_os_str()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("scenario.rhoo"));

    let cfg = write_config(&dir, "rho = 1.5\n");
    let o = jtsape(&["solve".as_ref(), cfg.as_os_str()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rho"));

    let cfg = write_config(&dir, "mode = \"PEO\"\n");
    let o = jtsape(&["sweep".as_ref(), cfg.as_os_str()]);
    assert_eq!(o.status.code(), Some(2));

    let o = jtsape(&["solve".as_ref(), dir.path().join("missing.toml").as_os_str()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_rows_are_recorded_and_fail_the_run() {
    let dir = TempDir::new().unwrap();
    // E is so noisy that no jamming power within budget silences D.
    let cfg = write_config(&dir, "mode = \"PEO\"\nnoise_e_dbm = -20.0\n");
    let out = dir.path().join("out");
    let o = jtsape(&["solve".as_ref(), cfg.as_os_str(), "-o".as_ref(), out.as_os_str()]);
    assert_eq!(o.status.code(), Some(1));
    let (h, rows) = table(&out.join("results.csv"));
    assert_eq!(rows[0][col(&h, "status")], "EavesdropInfeasible");
    assert!(all_finite(&rows[0], &[0, col(&h, "status")]));
}

#[test]
fn validate_and_selftest_report_pass_lines() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "mode = \"PEO\"\n");
    let o = jtsape(&["validate".as_ref(), cfg.as_os_str()]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{text}");
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
    assert!(text.contains("eavesdropping"));

    let o = jtsape(&["selftest".as_ref(), "--seed".as_ref(), "5".as_ref()]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 3);
}

#[test]
fn empty_config_is_the_reference_experiment() {
    let spec = parse_config("").unwrap();
    assert_eq!(spec.mode, ProblemKind::Jpt);
    let cfg = spec.scenario.to_scenario().unwrap();
    assert_eq!(cfg.pos_s, [500.0, 0.0]);
    assert_eq!(cfg.tx.n_elements(), 12);
    assert!((cfg.theta_d.to_degrees() - 45.0).abs() < 1e-12);
    let spec = parse_config("power_budget_dbm = 30").unwrap();
    assert!((spec.scenario.to_scenario().unwrap().p0 - 1.0).abs() < 1e-12);
}
