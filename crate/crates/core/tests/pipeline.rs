use kcurv::harness::config::RunConfig;
use kcurv::harness::run_solve;
use kcurv::solver::curvature_extremes;
use kcurv::{solve, SolveConfig, SolveError};

fn small(extra: &str) -> RunConfig {
    RunConfig::from_json(&format!(r#"{{"grid": {{"n_theta": 9, "n_phi": 16}}{extra}}}"#)).unwrap()
}

#[test]
fn stored_field_reproduces_reported_extremes() {
    let cfg = small(r#", "psi": {"base": "cosine-bump", "amplitude": 0.1}"#);
    let out = run_solve(&cfg).unwrap();
    let r = &out.report;
    let again = curvature_extremes(&r.field(), cfg.solver.slack).unwrap();
    assert_eq!(again, r.extremes);
    assert!(r.converged && r.final_residual <= cfg.solver.newton_tol);
}

#[test]
fn report_survives_json_round_trip() {
    let out = run_solve(&small("")).unwrap();
    let text = serde_json::to_string(&out).unwrap();
    let back: kcurv::harness::SolveOutput = serde_json::from_str(&text).unwrap();
    assert_eq!(back.report.u, out.report.u);
}

#[test]
fn solve_config_round_trips_and_gates_modes() {
    let cfg = small(r#", "mode": "theorem1", "psi": {"p": 2}"#).solve_config(0).unwrap();
    let text = serde_json::to_string(&cfg).unwrap();
    let mut back: SolveConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(back, cfg);
    let r = solve(&back).unwrap();
    assert!(r.growth_margin_min >= 0.0);

    back.mode = kcurv::Mode::Theorem2;
    assert!(matches!(solve(&back), Err(SolveError::Config(_))));
}

#[test]
fn mean_curvature_case_is_flagged() {
    let out = run_solve(&small(r#", "curvature": {"k": 1}"#)).unwrap();
    assert!(out.report.mean_curvature_case);
}
