//! Damped Newton with continuation for the Dirichlet problem
//! `H_k^{1/k}(λ(A[u])) = ψ(ξ, u, τ)` in the band, `u = φ` on both boundary
//! circles.
//!
//! Unknowns are the interior nodes, numbered `(i − 1) n_φ + j`. The linear
//! systems are reordered so that the periodic φ direction stays inside a band
//! of half-width `n_φ + 2` and factorised directly.

mod banded;
mod local;

pub use banded::{BandedLu, BandedMatrix};
pub use local::{NodeEval, FD_STEP};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::geometry::{evaluate, DEFAULT_SLACK};
use crate::grid::{jet_at, Node, ScalarField, SphericalGrid};
use crate::rhs::{Mode, PsiModel};
use crate::symmetric::CurvatureSpec;
use local::{node_eval, node_gradient, node_gradient_fd, LocalCtx, Site};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianMode {
    FiniteDifference,
    #[default]
    Analytic,
    /// Newton uses the analytic Jacobian; the finite-difference one is
    /// assembled alongside and the largest discrepancy is reported.
    CrossCheck,
}

/// Dirichlet data on the two boundary circles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundaryData {
    Constant { c: f64 },
    /// One value per meridian on `θ = θ_min` (`lower`) and `θ = θ_max`
    /// (`upper`).
    Table { lower: Vec<f64>, upper: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub grid: SphericalGrid,
    pub spec: CurvatureSpec,
    pub boundary: BoundaryData,
    pub psi: PsiModel,
    pub mode: Mode,
    pub newton_tol: f64,
    pub max_iters: usize,
    pub damping_min: f64,
    pub continuation_steps: usize,
    /// Residual target for the intermediate continuation steps.
    pub continuation_tol: f64,
    pub jacobian_mode: JacobianMode,
    pub slack: f64,
}

impl SolveConfig {
    pub fn new(grid: SphericalGrid, spec: CurvatureSpec, boundary: BoundaryData, psi: PsiModel) -> Self {
        Self {
            grid,
            spec,
            boundary,
            psi,
            mode: Mode::Permissive,
            newton_tol: 1e-9,
            max_iters: 50,
            damping_min: 1e-4,
            continuation_steps: 8,
            continuation_tol: 1e-6,
            jacobian_mode: JacobianMode::Analytic,
            slack: DEFAULT_SLACK,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |what: &str| Err(Error::Domain(what.to_owned()));
        if !(self.newton_tol > 0.0) {
            return bad("newton_tol must be positive");
        }
        if !(self.continuation_tol > 0.0) {
            return bad("continuation_tol must be positive");
        }
        if !(self.damping_min > 0.0 && self.damping_min <= 1.0) {
            return bad("damping_min must lie in (0, 1]");
        }
        if self.continuation_steps < 1 {
            return bad("continuation_steps must be at least 1");
        }
        if self.max_iters < 1 {
            return bad("max_iters must be at least 1");
        }
        if !(self.slack > 0.0 && self.slack < 1.0) {
            return bad("slack must lie in (0, 1)");
        }
        if self.spec.n() != 2 {
            return Err(Error::OrderOutOfRange { k: self.spec.k(), n: self.spec.n() });
        }
        if let PsiModel::CustomTable { values } = &self.psi {
            if values.len() != self.grid.len() {
                return Err(Error::FieldShape { expected: self.grid.len(), got: values.len() });
            }
        }
        if let BoundaryData::Table { lower, upper } = &self.boundary {
            for side in [lower, upper] {
                if side.len() != self.grid.n_phi() {
                    return Err(Error::FieldShape { expected: self.grid.n_phi(), got: side.len() });
                }
                if let Some(index) = side.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { index });
                }
            }
        }
        if let BoundaryData::Constant { c } = self.boundary {
            if !c.is_finite() {
                return Err(Error::NonFinite { index: 0 });
            }
        }
        self.psi.check_mode(self.mode)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    Config(Error),
    #[error("boundary data is not spacelike at row {i}, column {j} (margin {margin:e})")]
    NotSpacelikeBoundary { i: usize, j: usize, margin: f64 },
    #[error("initial iterate is not admissible: {0}")]
    InadmissibleStart(Error),
    #[error("no damping factor down to the minimum gives an acceptable step (continuation step {step}, iteration {iteration}, residual {residual:e}): {reason}")]
    ConeExit { step: usize, iteration: usize, residual: f64, reason: String },
    #[error("no convergence after {iterations} iterations in continuation step {step} (residual {residual:e})")]
    Stagnation { step: usize, iterations: usize, residual: f64 },
    #[error("growth condition for {mode:?} mode violated at node ({i}, {j}): margin {margin:e}")]
    GrowthViolation { i: usize, j: usize, margin: f64, mode: Mode },
    #[error("linear solve failed: {0}")]
    Linear(Error),
}

/// Cone and spacelike checks performed on accepted iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InvariantCounters {
    pub accepted_iterates: usize,
    pub node_checks: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub t: f64,
    pub iterations: usize,
    /// Residual max-norm before each iteration and after the last one.
    pub residual_history: Vec<f64>,
}

/// Curvature and tilt extremes of a field, as recorded in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureExtremes {
    /// `max |λ_i|` over the fixed interior subdomain, see
    /// [`SphericalGrid::in_core`].
    pub sup_interior_abs_a: f64,
    /// `max |λ_i|` over the first interior ring.
    pub sup_boundary_abs_a: f64,
    pub tau_min: f64,
    pub tau_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub steps: Vec<StepReport>,
    pub newton_iters: usize,
    pub final_residual: f64,
    pub extremes: CurvatureExtremes,
    pub growth_margin_min: f64,
    pub jacobian_discrepancy: Option<f64>,
    pub c0: f64,
    /// `k = 1`: the operator is linear in the principal curvatures.
    pub mean_curvature_case: bool,
    pub invariants: InvariantCounters,
    pub grid: SphericalGrid,
    pub u: Vec<f64>,
}

impl SolveReport {
    pub fn field(&self) -> ScalarField {
        ScalarField::new(self.grid, self.u.clone()).expect("report field matches its grid")
    }
}

/// `max |λ|` on the fixed interior subdomain and on the first ring, and the
/// range of `τ` over all interior nodes.
pub fn curvature_extremes(u: &ScalarField, slack: f64) -> Result<CurvatureExtremes, Error> {
    let g = u.grid();
    let mut out = CurvatureExtremes {
        sup_interior_abs_a: 0.0,
        sup_boundary_abs_a: 0.0,
        tau_min: f64::INFINITY,
        tau_max: f64::NEG_INFINITY,
    };
    for node in g.interior_nodes() {
        let geo = evaluate(&jet_at(u, node)?, slack)?;
        let a = geo.lambda.abs().max();
        if g.in_core(node) {
            out.sup_interior_abs_a = out.sup_interior_abs_a.max(a);
        }
        if g.rows_to_boundary(node) == 1 {
            out.sup_boundary_abs_a = out.sup_boundary_abs_a.max(a);
        }
        out.tau_min = out.tau_min.min(geo.tau);
        out.tau_max = out.tau_max.max(geo.tau);
    }
    Ok(out)
}

/// Sparse Jacobian with at most nine entries per row, columns in the natural
/// interior numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl Jacobian {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().filter(|(c, _)| *c == j).map(|(_, v)| v).sum()
    }

    /// `max |a − b| / max(|a|, 1e−6 · max_row |a|)` over all stored entries.
    pub fn discrepancy(&self, other: &Jacobian) -> f64 {
        let mut worst: f64 = 0.0;
        for (ra, rb) in self.rows.iter().zip(&other.rows) {
            let rowmax = ra.iter().fold(0.0_f64, |m, (_, v)| m.max(v.abs()));
            for &(c, a) in ra {
                let b = rb.iter().find(|(cb, _)| *cb == c).map_or(0.0, |(_, v)| *v);
                let denom = a.abs().max(1e-6 * rowmax).max(f64::MIN_POSITIVE);
                worst = worst.max((a - b).abs() / denom);
            }
        }
        worst
    }
}

/// Evaluations at every interior node of one iterate.
#[derive(Debug, Clone)]
pub struct IterateEval {
    pub nodes: Vec<NodeEval>,
    pub max_residual: f64,
}

impl IterateEval {
    pub fn residual(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.r).collect()
    }
}

/// A validated problem with fixed boundary data.
#[derive(Debug, Clone)]
pub struct Problem {
    config: SolveConfig,
    lower: Vec<f64>,
    upper: Vec<f64>,
    c0: f64,
}

fn zigzag(j: usize, n: usize) -> usize {
    if j < n - j {
        2 * j
    } else {
        2 * (n - 1 - j) + 1
    }
}

impl Problem {
    pub fn new(config: &SolveConfig) -> Result<Self, SolveError> {
        config.validate().map_err(SolveError::Config)?;
        let n_phi = config.grid.n_phi();
        let (lower, upper) = match &config.boundary {
            BoundaryData::Constant { c } => (vec![*c; n_phi], vec![*c; n_phi]),
            BoundaryData::Table { lower, upper } => (lower.clone(), upper.clone()),
        };
        let g = config.grid;
        for (i, side) in [(0, &lower), (g.n_theta() - 1, &upper)] {
            let s = g.theta(i).sin();
            for j in 0..n_phi {
                let d = (side[(j + 1) % n_phi] - side[(j + n_phi - 1) % n_phi]) / (2.0 * g.h_phi());
                let ch2 = side[j].cosh().powi(2);
                let margin = ch2 - d * d / (s * s);
                if !(margin >= config.slack * ch2) {
                    return Err(SolveError::NotSpacelikeBoundary { i, j, margin });
                }
            }
        }
        let all = lower.iter().chain(&upper);
        let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
        let hi = all.clone().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean_sinh = all.map(|v| v.sinh()).sum::<f64>() / (2 * n_phi) as f64;
        let c0 = mean_sinh.asinh().clamp(lo, hi);
        Ok(Self { config: config.clone(), lower, upper, c0 })
    }

    pub fn config(&self) -> &SolveConfig {
        &self.config
    }

    pub fn grid(&self) -> &SphericalGrid {
        &self.config.grid
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// `c₀` plus the boundary deviations from `c₀` interpolated linearly in
    /// θ; this is the constant slice whenever the boundary data is constant.
    pub fn initial_field(&self) -> ScalarField {
        let g = *self.grid();
        let span = g.theta_max() - g.theta_min();
        let mut u = ScalarField::constant(g, self.c0);
        for node in g.nodes() {
            let s = (g.theta(node.i) - g.theta_min()) / span;
            let v = self.c0 + (1.0 - s) * (self.lower[node.j] - self.c0) + s * (self.upper[node.j] - self.c0);
            u.values_mut()[g.index(node)] = v;
        }
        self.impose_boundary(&mut u);
        u
    }

    fn impose_boundary(&self, u: &mut ScalarField) {
        let g = *self.grid();
        let last = g.n_theta() - 1;
        for j in 0..g.n_phi() {
            u.values_mut()[g.index(Node::new(0, j))] = self.lower[j];
            u.values_mut()[g.index(Node::new(last, j))] = self.upper[j];
        }
    }

    /// Field with the given interior values and this problem's boundary.
    pub fn field_from_interior(&self, x: &[f64]) -> ScalarField {
        let g = *self.grid();
        assert_eq!(x.len(), g.interior_len());
        let mut u = ScalarField::constant(g, 0.0);
        u.values_mut()[g.n_phi()..g.n_phi() + x.len()].copy_from_slice(x);
        self.impose_boundary(&mut u);
        u
    }

    pub fn interior_values(&self, u: &ScalarField) -> Vec<f64> {
        let n = self.grid().n_phi();
        u.values()[n..n + self.grid().interior_len()].to_vec()
    }

    fn ctx(&self, t: f64) -> LocalCtx<'_> {
        LocalCtx {
            spec: self.config.spec,
            psi: &self.config.psi,
            slack: self.config.slack,
            t,
            psi_start: self.c0.tanh(),
            h_theta: self.grid().h_theta(),
            h_phi: self.grid().h_phi(),
        }
    }

    fn site(&self, node: Node) -> Site {
        let g = self.grid();
        Site { node, theta: g.theta(node.i), phi: g.phi(node.j), index: g.index(node) }
    }

    fn rows<T: Send>(
        &self,
        f: impl Fn(Node) -> Result<T, Error> + Sync + Send,
    ) -> Result<Vec<T>, Error> {
        let g = *self.grid();
        let per_row: Vec<Result<Vec<T>, Error>> = (1..g.n_theta() - 1)
            .into_par_iter()
            .map(|i| (0..g.n_phi()).map(|j| f(Node::new(i, j))).collect())
            .collect();
        let mut out = Vec::with_capacity(g.interior_len());
        for row in per_row {
            out.extend(row?);
        }
        Ok(out)
    }

    /// Residual `f(λ) − ψ_t` at every interior node, with
    /// `ψ_t = (1 − t) tanh c₀ + t ψ`. Fails on the first node (in grid order)
    /// that is not spacelike or not admissible.
    pub fn evaluate(&self, u: &ScalarField, t: f64) -> Result<IterateEval, Error> {
        let ctx = self.ctx(t);
        let nodes = self.rows(|node| node_eval(&ctx, &self.site(node), &u.stencil(node)?))?;
        let max_residual = nodes.iter().fold(0.0_f64, |m, n| m.max(n.r.abs()));
        Ok(IterateEval { nodes, max_residual })
    }

    fn unknown(&self, node: Node) -> Option<usize> {
        let g = self.grid();
        if g.is_boundary(node) {
            None
        } else {
            Some((node.i - 1) * g.n_phi() + node.j)
        }
    }

    pub fn jacobian(&self, u: &ScalarField, t: f64, finite_difference: bool) -> Result<Jacobian, Error> {
        let ctx = self.ctx(t);
        let g = *self.grid();
        let rows = self.rows(|node| {
            let s = u.stencil(node)?;
            let mut free = [[true; 3]; 3];
            let mut cols = [[None; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    let nb = Node::new(node.i + a - 1, g.wrap_j(node.j, b as isize - 1));
                    cols[a][b] = self.unknown(nb);
                    free[a][b] = cols[a][b].is_some();
                }
            }
            let site = self.site(node);
            let (_, grad) = if finite_difference {
                node_gradient_fd(&ctx, &site, &s, &free)?
            } else {
                node_gradient(&ctx, &site, &s)?
            };
            let mut row = Vec::with_capacity(9);
            for a in 0..3 {
                for b in 0..3 {
                    if let Some(c) = cols[a][b] {
                        row.push((c, grad[a][b]));
                    }
                }
            }
            Ok(row)
        })?;
        Ok(Jacobian { rows })
    }

    fn permutation(&self) -> Vec<usize> {
        let n = self.grid().n_phi();
        (0..self.grid().interior_len()).map(|k| (k / n) * n + zigzag(k % n, n)).collect()
    }

    /// Solves `J d = b` through the banded factorisation.
    pub fn linear_solve(&self, jac: &Jacobian, b: &[f64]) -> Result<Vec<f64>, Error> {
        let perm = self.permutation();
        let bw = self.grid().n_phi() + 2;
        let n = jac.dim();
        let mut m = BandedMatrix::zeros(n, bw.min(n.saturating_sub(1)), bw.min(n.saturating_sub(1)));
        let mut pb = vec![0.0; n];
        for (r, row) in jac.rows.iter().enumerate() {
            pb[perm[r]] = b[r];
            for &(c, v) in row {
                m.add(perm[r], perm[c], v)?;
            }
        }
        let y = m.factor()?.solve(&pb);
        Ok((0..n).map(|k| y[perm[k]]).collect())
    }

    fn check_invariants(&self, eval: &IterateEval, counters: &mut InvariantCounters) -> Result<f64, SolveError> {
        counters.accepted_iterates += 1;
        let mut margin_min = f64::INFINITY;
        for (k, n) in eval.nodes.iter().enumerate() {
            counters.node_checks += 1;
            if !(n.admissible && n.spacelike_ratio >= self.config.slack) {
                counters.violations += 1;
            }
            let m = n.psi.growth_margin;
            margin_min = margin_min.min(m);
            if !self.config.mode.accepts(m) {
                let nphi = self.grid().n_phi();
                return Err(SolveError::GrowthViolation {
                    i: k / nphi + 1,
                    j: k % nphi,
                    margin: m,
                    mode: self.config.mode,
                });
            }
        }
        Ok(margin_min)
    }

    pub fn solve(&self) -> Result<SolveReport, SolveError> {
        let cfg = &self.config;
        let mut u = self.initial_field();
        let mut eval = self.evaluate(&u, 0.0).map_err(SolveError::InadmissibleStart)?;
        let mut counters = InvariantCounters::default();
        let mut growth_margin_min = self.check_invariants(&eval, &mut counters)?;
        let mut steps = Vec::with_capacity(cfg.continuation_steps + 1);
        let mut discrepancy: Option<f64> = None;

        for step in 0..=cfg.continuation_steps {
            let t = step as f64 / cfg.continuation_steps as f64;
            let last = step == cfg.continuation_steps;
            let tol = if last { cfg.newton_tol } else { cfg.newton_tol.max(cfg.continuation_tol) };
            if step > 0 {
                eval = self.evaluate(&u, t).map_err(|e| SolveError::ConeExit {
                    step,
                    iteration: 0,
                    residual: f64::NAN,
                    reason: e.to_string(),
                })?;
            }
            let mut history = vec![eval.max_residual];
            let mut iterations = 0;
            while eval.max_residual > tol {
                if iterations == cfg.max_iters {
                    return Err(SolveError::Stagnation { step, iterations, residual: eval.max_residual });
                }
                let fd = cfg.jacobian_mode == JacobianMode::FiniteDifference;
                let jac = self.jacobian(&u, t, fd).map_err(SolveError::Linear)?;
                if cfg.jacobian_mode == JacobianMode::CrossCheck {
                    let other = self.jacobian(&u, t, true).map_err(SolveError::Linear)?;
                    let d = jac.discrepancy(&other);
                    discrepancy = Some(discrepancy.map_or(d, |x| x.max(d)));
                }
                let rhs: Vec<f64> = eval.nodes.iter().map(|n| -n.r).collect();
                let dir = self.linear_solve(&jac, &rhs).map_err(SolveError::Linear)?;
                let x = self.interior_values(&u);

                let mut alpha = 1.0;
                let accepted = loop {
                    let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + alpha * d).collect();
                    let trial = self.field_from_interior(&trial);
                    let reason = match self.evaluate(&trial, t) {
                        Ok(e) if e.max_residual < eval.max_residual => break Some((trial, e)),
                        Ok(e) => format!("residual {:e} does not decrease", e.max_residual),
                        Err(e) => e.to_string(),
                    };
                    alpha *= 0.5;
                    if alpha < cfg.damping_min {
                        return Err(SolveError::ConeExit {
                            step,
                            iteration: iterations,
                            residual: eval.max_residual,
                            reason,
                        });
                    }
                };
                let (trial, e) = accepted.expect("loop only breaks on acceptance");
                u = trial;
                eval = e;
                growth_margin_min = self.check_invariants(&eval, &mut counters)?;
                iterations += 1;
                history.push(eval.max_residual);
            }
            steps.push(StepReport { t, iterations, residual_history: history });
        }

        if cfg.jacobian_mode == JacobianMode::CrossCheck && discrepancy.is_none() {
            let a = self.jacobian(&u, 1.0, false).map_err(SolveError::Linear)?;
            let b = self.jacobian(&u, 1.0, true).map_err(SolveError::Linear)?;
            discrepancy = Some(a.discrepancy(&b));
        }
        let extremes = curvature_extremes(&u, cfg.slack).map_err(SolveError::Linear)?;
        Ok(SolveReport {
            converged: true,
            newton_iters: steps.iter().map(|s| s.iterations).sum(),
            steps,
            final_residual: eval.max_residual,
            extremes,
            growth_margin_min,
            jacobian_discrepancy: discrepancy,
            c0: self.c0,
            mean_curvature_case: cfg.spec.k() == 1,
            invariants: counters,
            grid: *self.grid(),
            u: u.into_values(),
        })
    }
}

pub fn solve(config: &SolveConfig) -> Result<SolveReport, SolveError> {
    Problem::new(config)?.solve()
}

/// Target residual of `u` at `t = 1`.
pub fn residual(u: &ScalarField, config: &SolveConfig) -> Result<Vec<f64>, SolveError> {
    let p = Problem::new(config)?;
    p.evaluate(u, 1.0).map(|e| e.residual()).map_err(SolveError::Linear)
}
