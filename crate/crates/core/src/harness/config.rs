//! JSON run configuration shared by `verify`, `solve` and `sweep`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::error::Error;
use crate::fields::TrigField;
use crate::geometry::{evaluate, DEFAULT_SLACK};
use crate::grid::{SphericalGrid, DEFAULT_SIN_THETA_FLOOR};
use crate::rhs::{calibrated_base_value, Mode, PsiBase, PsiModel};
use crate::solver::{BoundaryData, JacobianMode, SolveConfig};
use crate::symmetric::{f_eval, CurvatureSpec};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid config parameter `{param}`: {reason}")]
pub struct ConfigError {
    pub param: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(param: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { param: param.into(), reason: reason.into() }
    }
}

fn fail<T>(param: &str, reason: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::new(param, reason))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub theta_min: f64,
    pub theta_max: f64,
    pub n_theta: usize,
    pub n_phi: usize,
    pub sin_theta_floor: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            theta_min: PI / 4.0,
            theta_max: 3.0 * PI / 4.0,
            n_theta: 17,
            n_phi: 32,
            sin_theta_floor: DEFAULT_SIN_THETA_FLOOR,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvatureSection {
    pub n: usize,
    pub k: usize,
}

impl Default for CurvatureSection {
    fn default() -> Self {
        Self { n: 2, k: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PsiKind {
    #[default]
    Power,
    CustomTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BaseKind {
    #[default]
    Constant,
    CosineBump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsiSection {
    pub kind: PsiKind,
    pub p: f64,
    pub base: BaseKind,
    pub amplitude: f64,
    /// Base value `φ₀`; when absent it is calibrated so that the slice
    /// `u ≡ c` solves the unperturbed problem.
    pub value: Option<f64>,
}

impl Default for PsiSection {
    fn default() -> Self {
        Self { kind: PsiKind::Power, p: 3.0, base: BaseKind::Constant, amplitude: 0.0, value: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    #[default]
    Constant,
    /// `u* = c + a sin θ sin φ` with `ψ` frozen from the exact jet of `u*`.
    Manufactured,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundarySection {
    pub kind: BoundaryKind,
    pub c: f64,
    pub a: f64,
    /// Grid levels of the manufactured refinement study.
    pub levels: usize,
}

impl Default for BoundarySection {
    fn default() -> Self {
        Self { kind: BoundaryKind::Constant, c: 0.5, a: 0.1, levels: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub newton_tol: f64,
    pub max_iters: usize,
    pub continuation_steps: usize,
    pub continuation_tol: f64,
    pub jacobian_mode: JacobianMode,
    pub damping_min: f64,
    pub slack: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            newton_tol: 1e-9,
            max_iters: 50,
            continuation_steps: 8,
            continuation_tol: 1e-6,
            jacobian_mode: JacobianMode::Analytic,
            damping_min: 1e-4,
            slack: DEFAULT_SLACK,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub a: f64,
    pub beta: f64,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self { a: 1.0, beta: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub fields: usize,
    pub levels: usize,
    /// Samples for the Newton–Maclaurin and lower-bound fuzz checks.
    pub fuzz_samples: usize,
    /// Samples for the gradient, concavity and Hessian checks.
    pub derivative_samples: usize,
    /// `n_theta = n_phi` of the Jacobian cross-check grid.
    pub jacobian_n: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self { fields: 5, levels: 3, fuzz_samples: 100_000, derivative_samples: 1000, jacobian_n: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub curvature: CurvatureSection,
    pub psi: PsiSection,
    pub boundary: BoundarySection,
    pub solver: SolverSection,
    pub diagnostics: DiagnosticsSection,
    pub mode: Mode,
    pub verify: VerifySection,
}

fn grid_error(e: Error) -> ConfigError {
    match e {
        Error::InvalidGrid { param, reason } => ConfigError::new(format!("grid.{param}"), reason),
        other => ConfigError::new("grid", other.to_string()),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::new("<document>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn base_grid(&self) -> Result<SphericalGrid, ConfigError> {
        let g = &self.grid;
        SphericalGrid::with_floor(g.theta_min, g.theta_max, g.n_theta, g.n_phi, g.sin_theta_floor).map_err(grid_error)
    }

    pub fn spec(&self) -> Result<CurvatureSpec, ConfigError> {
        if self.curvature.n != 2 {
            return fail("curvature.n", format!("{} is not supported, graphs are surfaces (n = 2)", self.curvature.n));
        }
        CurvatureSpec::new(self.curvature.n, self.curvature.k)
            .map_err(|e| ConfigError::new("curvature.k", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.base_grid()?;
        self.spec()?;
        let s = &self.solver;
        if !(s.newton_tol > 0.0) {
            return fail("solver.newton_tol", "must be positive");
        }
        if !(s.continuation_tol > 0.0) {
            return fail("solver.continuation_tol", "must be positive");
        }
        if s.max_iters == 0 {
            return fail("solver.max_iters", "must be at least 1");
        }
        if s.continuation_steps == 0 {
            return fail("solver.continuation_steps", "must be at least 1");
        }
        if !(s.damping_min > 0.0 && s.damping_min <= 1.0) {
            return fail("solver.damping_min", "must lie in (0, 1]");
        }
        if !(s.slack > 0.0 && s.slack < 1.0) {
            return fail("solver.slack", "must lie in (0, 1)");
        }
        let d = &self.diagnostics;
        if !(d.a > 0.0) {
            return fail("diagnostics.a", "must be positive");
        }
        if !(d.beta > 0.0) {
            return fail("diagnostics.beta", "must be positive");
        }
        let v = &self.verify;
        if v.fields == 0 {
            return fail("verify.fields", "must be at least 1");
        }
        if v.levels < 2 {
            return fail("verify.levels", "an order fit needs at least 2 levels");
        }
        if v.jacobian_n < 8 {
            return fail("verify.jacobian_n", "must be at least 8");
        }
        self.validate_psi()?;
        self.validate_boundary()
    }

    fn validate_psi(&self) -> Result<(), ConfigError> {
        let p = &self.psi;
        if !p.p.is_finite() {
            return fail("psi.p", "must be finite");
        }
        if !(p.amplitude.abs() < 1.0) {
            return fail("psi.amplitude", format!("{} must satisfy |amplitude| < 1", p.amplitude));
        }
        if p.base == BaseKind::Constant && p.amplitude != 0.0 {
            return fail("psi.amplitude", "a constant base takes no amplitude; use base = \"cosine-bump\"");
        }
        if let Some(v) = p.value {
            if !(v.is_finite() && v > 0.0) {
                return fail("psi.value", format!("{v} must be positive"));
            }
        }
        match (p.kind, self.mode) {
            (_, Mode::Permissive) => Ok(()),
            (PsiKind::CustomTable, m) => fail("psi.kind", format!("custom-table has no tilt growth and is not allowed in {m:?} mode")),
            (PsiKind::Power, Mode::Theorem1) if p.p < 2.0 => {
                fail("psi.p", format!("{} gives growth margin (p - 2) psi < 0, rejected in theorem1 mode", p.p))
            }
            (PsiKind::Power, Mode::Theorem2) if p.p <= 2.0 => {
                fail("psi.p", format!("{} gives growth margin (p - 2) psi <= 0, rejected in theorem2 mode", p.p))
            }
            _ => Ok(()),
        }
    }

    fn validate_boundary(&self) -> Result<(), ConfigError> {
        let b = &self.boundary;
        if !b.c.is_finite() {
            return fail("boundary.c", "must be finite");
        }
        if b.c <= 0.0 {
            return fail("boundary.c", format!("{} gives the slice curvature tanh c <= 0, outside the admissible cone", b.c));
        }
        if b.kind == BoundaryKind::Manufactured {
            if self.psi.kind != PsiKind::CustomTable {
                return fail("psi.kind", "a manufactured boundary freezes psi from the exact solution; set psi.kind = \"custom-table\"");
            }
            if b.levels < 2 {
                return fail("boundary.levels", "an order fit needs at least 2 levels");
            }
            if !b.a.is_finite() {
                return fail("boundary.a", "must be finite");
            }
            let grid = self.base_grid()?.refined_times(b.levels - 1);
            let ratio = TrigField::manufactured(b.c, b.a).min_spacelike_ratio(&grid);
            if !(ratio >= 10.0 * self.solver.slack) {
                return fail("boundary.a", format!("{} leaves spacelike margin ratio {ratio:e} below 10 x slack", b.a));
            }
        }
        Ok(())
    }

    fn psi_base(&self, c: f64) -> PsiBase {
        let value = self.psi.value.unwrap_or_else(|| calibrated_base_value(c, self.psi.p));
        match self.psi.base {
            BaseKind::Constant => PsiBase::Constant { value },
            BaseKind::CosineBump => PsiBase::CosineBump { value, amplitude: self.psi.amplitude },
        }
    }

    /// Solver input on the base grid refined `level` times.
    pub fn solve_config(&self, level: usize) -> Result<SolveConfig, ConfigError> {
        let grid = self.base_grid()?.refined_times(level);
        let spec = self.spec()?;
        let c = self.boundary.c;
        let (boundary, psi) = match self.boundary.kind {
            BoundaryKind::Manufactured => {
                let (boundary, values) = manufactured_data(grid, spec, c, self.boundary.a, self.solver.slack)
                    .map_err(|e| ConfigError::new("boundary.a", e.to_string()))?;
                (boundary, PsiModel::CustomTable { values })
            }
            BoundaryKind::Constant => {
                let psi = match self.psi.kind {
                    PsiKind::Power => PsiModel::Power { base: self.psi_base(c), p: self.psi.p },
                    PsiKind::CustomTable => {
                        let v = self.psi.value.unwrap_or_else(|| c.tanh());
                        PsiModel::CustomTable { values: vec![v; grid.len()] }
                    }
                };
                (BoundaryData::Constant { c }, psi)
            }
        };
        let s = &self.solver;
        let mut cfg = SolveConfig::new(grid, spec, boundary, psi);
        cfg.mode = self.mode;
        cfg.newton_tol = s.newton_tol;
        cfg.max_iters = s.max_iters;
        cfg.damping_min = s.damping_min;
        cfg.continuation_steps = s.continuation_steps;
        cfg.continuation_tol = s.continuation_tol;
        cfg.jacobian_mode = s.jacobian_mode;
        cfg.slack = s.slack;
        Ok(cfg)
    }
}

/// Boundary trace of `u* = c + a sin θ sin φ` and `ψ = f(λ(A[u*]))` per node,
/// with `A[u*]` from the exact jet.
pub fn manufactured_data(
    grid: SphericalGrid,
    spec: CurvatureSpec,
    c: f64,
    a: f64,
    slack: f64,
) -> Result<(BoundaryData, Vec<f64>), Error> {
    let exact = TrigField::manufactured(c, a);
    let mut values = Vec::with_capacity(grid.len());
    for n in grid.nodes() {
        let geo = evaluate(&exact.jet(grid.theta(n.i), grid.phi(n.j)), slack)?;
        let lambda = [geo.lambda[0], geo.lambda[1]];
        let ev = f_eval(&lambda, spec);
        if !ev.admissible {
            return Err(Error::InadmissibleAt { i: n.i, j: n.j, lambda });
        }
        values.push(ev.value);
    }
    let n = grid.n_phi();
    let last = grid.n_theta() - 1;
    let trace = |i: usize| (0..n).map(|j| exact.value(grid.theta(i), grid.phi(j))).collect();
    Ok((BoundaryData::Table { lower: trace(0), upper: trace(last) }, values))
}
