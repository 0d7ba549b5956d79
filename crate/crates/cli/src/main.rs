use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jtsape_cli::config::{load_config, ExperimentSpec};
use jtsape_cli::experiment::{beampattern_export, run, run_point, write_artifacts};
use jtsape_cli::validate::validate_scenario;
use jtsape_cli::CliError;

#[derive(Parser)]
#[command(name = "jtsape", version, about = "Beamforming designs for joint sensing and proactive eavesdropping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured mode once and write its artifacts.
    Solve {
        config: PathBuf,
        /// Overrides `experiment.output_dir`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the configured sweep.
    Sweep {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve once and write only the beampattern.
    Beampattern {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check the scenario and audit a solution against every invariant.
    Validate { config: PathBuf },
    /// Run the randomized oracle suites.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn out_dir(spec: &ExperimentSpec, output: Option<PathBuf>) -> PathBuf {
    output.unwrap_or_else(|| spec.output_dir.clone())
}

fn report(spec: &ExperimentSpec, dir: &Path) -> Result<ExitCode, CliError> {
    let points = run(spec)?;
    let art = write_artifacts(spec, &points, dir)?;
    let mut ok = true;
    for p in &points {
        let r = &p.row;
        println!(
            "{:>10}  {:<20} objective {:.6e}  det_crb {:.6e}  ratio {:.6}",
            r.sweep_value, r.status, r.objective, r.det_crb, r.rank_ratio
        );
        ok &= r.is_optimal();
    }
    println!("wrote {}", art.results.display());
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Solve { config, output } => {
            let mut spec = load_config(&config)?;
            spec.sweep = None;
            let dir = out_dir(&spec, output);
            report(&spec, &dir)
        }
        Command::Sweep { config, output } => {
            let spec = load_config(&config)?;
            if spec.sweep.is_none() {
                return Err(CliError::config("sweep", "the configuration has no [sweep] section"));
            }
            let dir = out_dir(&spec, output);
            report(&spec, &dir)
        }
        Command::Beampattern { config, output } => {
            let spec = load_config(&config)?;
            let cfg = spec.scenario.to_scenario()?;
            let p = run_point(&spec, "single".into(), cfg.clone());
            let Some(r) = &p.covariance else {
                eprintln!("no covariance produced: {}", p.row.status);
                return Ok(ExitCode::FAILURE);
            };
            let dir = out_dir(&spec, output);
            std::fs::create_dir_all(&dir).map_err(|e| CliError::Io {
                path: dir.clone(),
                source: e,
            })?;
            let path = dir.join("beampattern_single.csv");
            beampattern_export(r, &cfg, &cfg.grid()?, &path)?;
            println!("wrote {}", path.display());
            Ok(if p.row.is_optimal() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Validate { config } => {
            let spec = load_config(&config)?;
            let checks = validate_scenario(&spec)?;
            for c in &checks {
                println!("{} {:<22} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Selftest { seed } => {
            let reports = jtsape::selftest::run_all(seed)?;
            for r in &reports {
                println!(
                    "{} {:<14} {} cases, {} failures, worst {:.3e} (tol {:.0e})",
                    if r.passed() { "PASS" } else { "FAIL" },
                    r.name,
                    r.cases,
                    r.failures,
                    r.worst,
                    r.tolerance
                );
            }
            Ok(if reports.iter().all(|r| r.passed()) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
