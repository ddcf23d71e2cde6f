//! Verification, solve and sweep drivers.

pub mod config;
pub mod diagnostics;
pub mod sweep;
pub mod verify;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::fields::{fitted_order, TrigField};
use crate::solver::{Problem, SolveError, SolveReport};
use config::{BoundaryKind, ConfigError, RunConfig};
use diagnostics::{PhiDiagnostic, PhiSummary};

pub use config::manufactured_data;
pub use sweep::{run_sweep, SweepPlan, SweepRow};
pub use verify::{run_verify, Check, SuiteReport, VerifyReport};

/// Order a refinement study must reach.
pub const ORDER_MIN: f64 = 1.8;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Core(#[from] Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelError {
    pub n_theta: usize,
    pub n_phi: usize,
    pub h_theta: f64,
    /// Max-norm distance to the exact solution over all nodes.
    pub error: f64,
    pub newton_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementTable {
    pub levels: Vec<LevelError>,
    pub order: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutput {
    /// Solve on the finest grid that was run.
    pub report: SolveReport,
    pub phi: PhiSummary,
    pub refinement: Option<RefinementTable>,
}

/// Solves once on `level` and evaluates the test functions on the result.
pub fn solve_level(cfg: &RunConfig, level: usize) -> Result<(SolveReport, PhiSummary), RunError> {
    let sc = cfg.solve_config(level)?;
    let problem = Problem::new(&sc)?;
    let report = problem.solve()?;
    let d = PhiDiagnostic { a: cfg.diagnostics.a, beta: cfg.diagnostics.beta };
    let phi = d.evaluate(&report.field(), &problem.initial_field(), sc.slack)?;
    Ok((report, phi))
}

/// `kcurv solve`: one solve, or a refinement study against the exact
/// solution for a manufactured boundary.
pub fn run_solve(cfg: &RunConfig) -> Result<SolveOutput, RunError> {
    cfg.validate()?;
    if cfg.boundary.kind != BoundaryKind::Manufactured {
        let (report, phi) = solve_level(cfg, 0)?;
        return Ok(SolveOutput { report, phi, refinement: None });
    }
    let exact = TrigField::manufactured(cfg.boundary.c, cfg.boundary.a);
    let mut levels = Vec::with_capacity(cfg.boundary.levels);
    let mut last = None;
    for level in 0..cfg.boundary.levels {
        let (report, phi) = solve_level(cfg, level)?;
        let g = report.grid;
        let error = exact
            .sample(g)
            .values()
            .iter()
            .zip(&report.u)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        levels.push(LevelError {
            n_theta: g.n_theta(),
            n_phi: g.n_phi(),
            h_theta: g.h_theta(),
            error,
            newton_iters: report.newton_iters,
        });
        last = Some((report, phi));
    }
    let hs: Vec<f64> = levels.iter().map(|l| l.h_theta).collect();
    let errs: Vec<f64> = levels.iter().map(|l| l.error).collect();
    let order = fitted_order(&hs, &errs);
    let (report, phi) = last.expect("at least two levels");
    Ok(SolveOutput { report, phi, refinement: Some(RefinementTable { levels, order, passed: order >= ORDER_MIN }) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_slice_solve_output() {
        let cfg = RunConfig::from_json(r#"{"grid": {"n_theta": 9, "n_phi": 16}, "psi": {"kind": "custom-table"}}"#).unwrap();
        let out = run_solve(&cfg).unwrap();
        assert!(out.refinement.is_none());
        assert_eq!(out.report.newton_iters, 0);
        assert!((out.report.extremes.sup_interior_abs_a - 0.5f64.tanh()).abs() < 1e-9);
        assert!(out.phi.phi_max.is_none());
    }

    #[test]
    fn manufactured_refinement() {
        let cfg = RunConfig::from_json(
            r#"{"grid": {"n_theta": 9, "n_phi": 16}, "psi": {"kind": "custom-table"},
                "boundary": {"kind": "manufactured", "c": 0.5, "a": 0.1, "levels": 3}}"#,
        )
        .unwrap();
        let t = run_solve(&cfg).unwrap().refinement.unwrap();
        assert_eq!(t.levels.len(), 3);
        assert!(t.passed, "order {}", t.order);
    }
}
