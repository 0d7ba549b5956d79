//! Invariant checks for one configured scenario.

use jtsape::fim::crb;
use jtsape::linalg::trace_re;
use jtsape::problems::{design, radar_model, Branch, ProblemKind};
use jtsape::scene::{eaves_threshold, gamma_d, gamma_e, interference, interference_free};
use jtsape::sdp::validate_solution;
use nalgebra::DMatrix;

use crate::config::ExperimentSpec;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed,
            detail: detail.into(),
        }
    }
}

/// Solves the configured mode once (sweeps ignored) and audits the result.
pub fn validate_scenario(spec: &ExperimentSpec) -> Result<Vec<Check>, CliError> {
    let cfg = spec.scenario.to_scenario()?;
    let mut out = vec![Check::new("config", true, "scenario parameters in range")];
    let free = interference_free(&cfg);
    let thr = eaves_threshold(&cfg);
    let n = cfg.tx.n_elements() as f64;
    out.push(Check::new(
        "branch",
        true,
        format!(
            "interference_free = {free}, threshold = {thr:.6e}, gamma_E = {:.6e}",
            gamma_e(&cfg)
        ),
    ));
    if !free {
        out.push(Check::new(
            "threshold_achievable",
            thr <= n * cfg.p0,
            format!("threshold {thr:.6e} vs N_t P_0 = {:.6e}", n * cfg.p0),
        ));
    }
    let d = match design(&cfg, spec.mode, &spec.pipeline(&cfg)) {
        Ok(d) => d,
        Err(e) => {
            out.push(Check::new("solve", false, e.to_string()));
            return Ok(out);
        }
    };
    out.push(Check::new("solve", true, format!("{} via {:?}", d.kind, d.branch)));
    let r = d.covariance();
    let rep = validate_solution(r, &d.problem.constraints);
    let worst = rep.worst_relative_violation();
    out.push(Check::new(
        "constraints",
        rep.feasible(),
        format!(
            "{} rows, worst relative violation {worst:.3e}, min eigenvalue {:.3e}",
            rep.constraints.len(),
            rep.min_eigenvalue
        ),
    ));
    out.push(Check::new(
        "rank_one",
        d.refined.ratio >= cfg.tau,
        format!("lambda_max / trace = {:.9} (tau = {})", d.refined.ratio, cfg.tau),
    ));
    let tr = trace_re(r);
    out.push(Check::new(
        "power",
        tr <= cfg.p0 * (1.0 + 1e-7),
        format!("trace {tr:.9e} vs P_0 {:.9e}", cfg.p0),
    ));
    match radar_model(&cfg).fisher(r).and_then(|f| crb(&f).map(|p| (f, p))) {
        Ok((f, phi)) => {
            // Residual in parameter units, U (Phi F - I) U^-1, so that a tiny |beta|
            // does not mix scales across rows.
            let k = f.dim();
            let u = f.units();
            let e = phi.matrix() * f.matrix() - DMatrix::identity(k, k);
            let err = (0..k)
                .flat_map(|i| (0..k).map(move |j| (i, j)))
                .map(|(i, j)| (e[(i, j)] * u[i] / u[j]).abs())
                .fold(0.0, f64::max);
            out.push(Check::new(
                "crb_inverse",
                err <= 1e-8,
                format!("max |Phi F - I| in parameter units = {err:.3e}"),
            ));
        }
        Err(e) => out.push(Check::new("crb_inverse", false, e.to_string())),
    }
    let jamming = d.branch == Branch::Jamming || d.kind == ProblemKind::Peo;
    if jamming {
        let gd = gamma_d(&cfg, r)?;
        let ge = gamma_e(&cfg);
        out.push(Check::new(
            "eavesdropping",
            gd <= ge * (1.0 + 1e-6),
            format!("gamma_D = {gd:.9e}, gamma_E = {ge:.9e}"),
        ));
    }
    if d.branch == Branch::ZeroInterference {
        let i = interference(&cfg, r)?;
        out.push(Check::new(
            "null",
            i <= 1e-9 * cfg.p0,
            format!("I(theta_D) = {i:.3e}"),
        ));
    }
    Ok(out)
}
