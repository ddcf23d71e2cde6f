//! Verification suites behind `kcurv verify`.
//!
//! Every suite is a deterministic function of its inputs and an RNG, and
//! reports named checks against fixed limits.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::ORDER_MIN;
use super::diagnostics::{alpha, alpha_identity_residual, alpha_prime};
use crate::error::Result;
use crate::fields::{fitted_order, TrigField};
use crate::geometry::embedding::{embedded_second_fundamental_form, normal_check};
use crate::geometry::identities::{gauss_codazzi_check, verify_prop1, GAUSS_CODAZZI_NAMES, PROP1_NAMES};
use crate::geometry::second_fundamental_form;
use crate::grid::{jet_at, Node, ScalarField, SphericalGrid};
use crate::rhs::{PsiBase, PsiModel};
use crate::solver::{BoundaryData, Problem, SolveConfig};
use crate::symmetric::{
    admissible, binomial, f_eval, hessian_contract, lower_bound_check, newton_maclaurin_check, CurvatureSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// `value <= limit`.
    Max,
    /// `value >= limit`.
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub bound: Bound,
    pub passed: bool,
}

impl Check {
    pub fn max(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, bound: Bound::Max, passed: value <= limit }
    }

    pub fn min(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, bound: Bound::Min, passed: value >= limit }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(name: &str, checks: Vec<Check>) -> Self {
        Self { name: name.to_owned(), passed: checks.iter().all(|c| c.passed), checks }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}


pub const SLICE_RESIDUAL_MAX: f64 = 1e-8;
pub const NORMAL_DEFECT_MAX: f64 = 1e-10;

/// Draws a random smooth field that is spacelike with a wide margin on
/// `grid` and depends on φ.
pub fn random_field<R: Rng + ?Sized>(rng: &mut R, grid: &SphericalGrid) -> TrigField {
    loop {
        let offset = rng.random_range(0.2..0.8);
        let mut f = TrigField::random(rng, offset, 3, 0.08);
        if f.modes[0].phi_freq == 0 {
            f.modes[0].phi_freq = 1;
        }
        if f.min_spacelike_ratio(grid) > 0.1 {
            return f;
        }
    }
}

/// Nodes of the base grid at least two rows from the boundary, which stay
/// nodes (at `(i << l, j << l)`) on every refinement.
fn probe_nodes(base: &SphericalGrid) -> Vec<Node> {
    base.nodes().filter(|n| base.rows_to_boundary(*n) >= 2).collect()
}

const FIELD_QUANTITIES: [&str; 9] = [
    PROP1_NAMES[0],
    PROP1_NAMES[1],
    PROP1_NAMES[2],
    GAUSS_CODAZZI_NAMES[0],
    GAUSS_CODAZZI_NAMES[1],
    "normal_tangency",
    "embedded_form",
    "jet_gradient",
    "jet_hessian",
];

/// Max over the probe nodes of each quantity in [`FIELD_QUANTITIES`], and the
/// largest normal norm and position defects.
fn field_residuals(
    f: &TrigField,
    grid: SphericalGrid,
    level: usize,
    probes: &[Node],
    slack: f64,
) -> Result<([f64; 9], f64)> {
    let u = f.sample(grid);
    let mut out = [0.0f64; 9];
    let mut defect = 0.0f64;
    for p in probes {
        let node = Node::new(p.i << level, p.j << level);
        let prop = verify_prop1(&u, node, slack)?;
        let gc = gauss_codazzi_check(&u, node, slack)?;
        let nc = normal_check(&u, node, slack)?;
        let (theta, phi) = (grid.theta(node.i), grid.phi(node.j));
        let exact = f.jet(theta, phi);
        let emb = embedded_second_fundamental_form(&u, node, slack)?;
        let a = second_fundamental_form(&exact, slack)?;
        let fd = jet_at(&u, node)?;
        let vals = [
            prop[0].value,
            prop[1].value,
            prop[2].value,
            gc[0].value,
            gc[1].value,
            nc.tangency_defect,
            (emb - a).abs().max(),
            (fd.du - exact.du).abs().max(),
            (fd.hess - exact.hess).abs().max(),
        ];
        for (o, v) in out.iter_mut().zip(vals) {
            *o = o.max(v);
        }
        defect = defect.max(nc.norm_defect).max(nc.position_defect);
    }
    Ok((out, defect))
}

/// Geometric identities, normal vector and jet convergence on random fields,
/// and exactness on constant slices.
pub fn identity_suite<R: Rng + ?Sized>(
    rng: &mut R,
    base: SphericalGrid,
    n_fields: usize,
    levels: usize,
    slack: f64,
) -> Result<SuiteReport> {
    let probes = probe_nodes(&base);
    let mut checks = Vec::new();
    for c in [0.25, 0.5, 1.0] {
        let u = ScalarField::constant(base, c);
        let mut worst = 0.0f64;
        let mut defect = 0.0f64;
        for &node in &probes {
            for r in verify_prop1(&u, node, slack)?.iter().chain(&gauss_codazzi_check(&u, node, slack)?) {
                worst = worst.max(r.value);
            }
            let nc = normal_check(&u, node, slack)?;
            worst = worst.max(nc.tangency_defect);
            defect = defect.max(nc.norm_defect).max(nc.position_defect);
        }
        checks.push(Check::max(format!("slice_c{c}.residual"), worst, SLICE_RESIDUAL_MAX));
        checks.push(Check::max(format!("slice_c{c}.normal_defect"), defect, NORMAL_DEFECT_MAX));
    }
    let finest = base.refined_times(levels - 1);
    for k in 0..n_fields {
        let f = random_field(rng, &finest);
        let mut hs = Vec::with_capacity(levels);
        let mut res = Vec::with_capacity(levels);
        let mut defect = 0.0f64;
        for level in 0..levels {
            let g = base.refined_times(level);
            let (r, d) = field_residuals(&f, g, level, &probes, slack)?;
            hs.push(g.h_theta());
            res.push(r);
            defect = defect.max(d);
        }
        for (q, name) in FIELD_QUANTITIES.iter().enumerate() {
            let errs: Vec<f64> = res.iter().map(|r| r[q]).collect();
            checks.push(Check::min(format!("field{k}.{name}.order"), fitted_order(&hs, &errs), ORDER_MIN));
        }
        checks.push(Check::max(format!("field{k}.normal_defect"), defect, NORMAL_DEFECT_MAX));
    }
    Ok(SuiteReport::new("identities", checks))
}

/// Sample sizes for [`symmetric_suite`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricSamples {
    pub derivative: usize,
    pub fuzz: usize,
}

fn random_lambda<R: Rng + ?Sized>(rng: &mut R) -> Vec<f64> {
    let n = rng.random_range(2..=5);
    (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()
}

/// Shifts along `(1, …, 1)` until `λ` lies in the cone, then by `extra`.
fn into_cone(mut l: Vec<f64>, spec: CurvatureSpec, extra: f64) -> Vec<f64> {
    let mut shift = 0.05;
    while !admissible(&l, spec) {
        l.iter_mut().for_each(|x| *x += shift);
        shift *= 2.0;
    }
    l.iter_mut().for_each(|x| *x += extra);
    l
}

fn random_admissible<R: Rng + ?Sized>(rng: &mut R, extra: f64) -> (Vec<f64>, CurvatureSpec) {
    let l = random_lambda(rng);
    let spec = CurvatureSpec::new(l.len(), rng.random_range(1..=l.len())).expect("k drawn in range");
    (into_cone(l, spec, extra), spec)
}

fn max_abs(l: &[f64]) -> f64 {
    l.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&m + m.transpose()) * 0.5
}

/// `f` of the eigenvalues of a symmetric matrix.
fn f_of_matrix(a: &DMatrix<f64>, spec: CurvatureSpec) -> f64 {
    let ev = SymmetricEigen::new(a.clone()).eigenvalues;
    f_eval(ev.as_slice(), spec).value
}

/// Euler identity, gradient and Hessian against differences, concavity,
/// Newton–Maclaurin and the lower bound on random eigenvalue vectors.
pub fn symmetric_suite<R: Rng + ?Sized>(rng: &mut R, samples: SymmetricSamples) -> SuiteReport {
    let mut euler = 0.0f64;
    let mut grad_err = 0.0f64;
    let mut concavity = f64::NEG_INFINITY;
    let mut hess_err = 0.0f64;
    for _ in 0..samples.derivative {
        let extra = rng.random_range(0.0..0.5);
        let (l, spec) = random_admissible(rng, extra);
        let n = l.len();
        let ev = f_eval(&l, spec);
        let e: f64 = ev.grad.iter().zip(&l).map(|(g, x)| g * x).sum();
        euler = euler.max((e - ev.value).abs() / ev.value.abs());

        let h = 1e-6 * max_abs(&l).max(1e-3);
        let gmax = max_abs(&ev.grad);
        for i in 0..n {
            let mut p = l.clone();
            p[i] += h;
            let mut m = l.clone();
            m[i] -= h;
            let fd = (f_eval(&p, spec).value - f_eval(&m, spec).value) / (2.0 * h);
            grad_err = grad_err.max((fd - ev.grad[i]).abs() / gmax);
        }

        let eta = random_symmetric(rng, n);
        let q = hessian_contract(&l, spec, &eta).expect("sample is admissible");
        let scale = eta.norm_squared() * ev.value.abs().max(1e-300) / max_abs(&l).powi(2);
        concavity = concavity.max(q / scale);

        let base = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(l.clone()));
        let s = 1e-3 * max_abs(&l) / eta.norm().max(1e-300);
        let second = |s: f64| {
            let fp = f_of_matrix(&(&base + &eta * s), spec);
            let fm = f_of_matrix(&(&base - &eta * s), spec);
            (fp - 2.0 * ev.value + fm) / (s * s)
        };
        // Richardson step removes the O(s²) term.
        let fd = (4.0 * second(0.5 * s) - second(s)) / 3.0;
        hess_err = hess_err.max((fd - q).abs() / q.abs().max(scale));
    }

    let mut nm = f64::INFINITY;
    let mut lower = f64::INFINITY;
    for _ in 0..samples.fuzz {
        let l = random_lambda(rng);
        let n = l.len();
        let k = rng.random_range(1..n);
        let spec = CurvatureSpec::new(n, k).expect("k < n");
        let scale = max_abs(&l).max(1e-3).powi(2 * k as i32);
        nm = nm.min(newton_maclaurin_check(&l, spec).expect("k < n") / scale);

        let (l, spec) = random_admissible(rng, 0.0);
        let scale = max_abs(&l).powi(2) * binomial(l.len(), spec.k()).powf(1.0 / spec.k() as f64);
        lower = lower.min(lower_bound_check(&l, spec) / scale);
    }

    SuiteReport::new(
        "symmetric",
        vec![
            Check::max("euler.rel_error", euler, 1e-12),
            Check::max("gradient.rel_error", grad_err, 1e-6),
            Check::max("concavity.scaled_max", concavity, 1e-12),
            Check::max("hessian.rel_error", hess_err, 1e-5),
            Check::min("newton_maclaurin.scaled_min", nm, -1e-12),
            Check::min("lower_bound.scaled_min", lower, -1e-10),
        ],
    )
}

/// `α'' − (α')² = 0` and `α'` against differences over `τ ∈ [1, 10]`.
pub fn alpha_suite(a: f64) -> SuiteReport {
    let mut identity = 0.0f64;
    let mut slope = 0.0f64;
    for k in 0..=900 {
        let tau = 1.0 + k as f64 * 0.01;
        identity = identity.max(alpha_identity_residual(tau, a).abs());
        let h = 1e-5;
        let fd = (alpha(tau + h, a) - alpha(tau - h, a)) / (2.0 * h);
        slope = slope.max((fd - alpha_prime(tau, a)).abs() / alpha_prime(tau, a).abs());
    }
    SuiteReport::new(
        "alpha",
        vec![Check::max("identity.max_abs", identity, 1e-14), Check::max("derivative.rel_error", slope, 1e-8)],
    )
}

/// Analytic against finite-difference Jacobian on a random admissible
/// iterate of an `n × n` grid, with a tilt-dependent right-hand side.
pub fn jacobian_suite<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize, slack: f64) -> Result<SuiteReport> {
    let grid = SphericalGrid::new(std::f64::consts::FRAC_PI_4, 3.0 * std::f64::consts::FRAC_PI_4, n, n)?;
    let spec = CurvatureSpec::new(2, k)?;
    let (u, problem) = loop {
        let offset = rng.random_range(0.4..0.8);
        let f = TrigField::random(rng, offset, 3, 0.04);
        let u = f.sample(grid);
        let last = grid.n_theta() - 1;
        let trace = |i: usize| (0..n).map(|j| u.at(Node::new(i, j))).collect::<Vec<_>>();
        let psi = PsiModel::Power { base: PsiBase::CosineBump { value: 0.3, amplitude: 0.2 }, p: 3.0 };
        let boundary = BoundaryData::Table { lower: trace(0), upper: trace(last) };
        let mut cfg = SolveConfig::new(grid, spec, boundary, psi);
        cfg.slack = slack;
        let Ok(problem) = Problem::new(&cfg) else { continue };
        if problem.evaluate(&u, 1.0).is_ok() {
            break (u, problem);
        }
    };
    let a = problem.jacobian(&u, 1.0, false)?;
    let b = problem.jacobian(&u, 1.0, true)?;
    Ok(SuiteReport::new("jacobian", vec![Check::max("cross_check.discrepancy", a.discrepancy(&b), 1e-5)]))
}

/// All suites of `kcurv verify`, seeded by `seed`.
pub fn run_verify(cfg: &RunConfig, seed: u64) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = cfg.base_grid().map_err(|e| crate::error::Error::Domain(e.to_string()))?;
    let v = &cfg.verify;
    let slack = cfg.solver.slack;
    let suites = vec![
        identity_suite(&mut rng, base, v.fields, v.levels, slack)?,
        symmetric_suite(&mut rng, SymmetricSamples { derivative: v.derivative_samples, fuzz: v.fuzz_samples }),
        alpha_suite(cfg.diagnostics.a),
        jacobian_suite(&mut rng, v.jacobian_n, cfg.curvature.k, slack)?,
    ];
    Ok(VerifyReport { seed, passed: suites.iter().all(|s| s.passed), suites })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn small_symmetric_suite_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = symmetric_suite(&mut rng, SymmetricSamples { derivative: 200, fuzz: 2000 });
        assert!(r.passed, "{:?}", r.failures().collect::<Vec<_>>());
    }

    #[test]
    fn small_identity_suite_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = SphericalGrid::new(PI / 4.0, 3.0 * PI / 4.0, 9, 16).unwrap();
        let r = identity_suite(&mut rng, base, 1, 3, 1e-6).unwrap();
        assert!(r.passed, "{:?}", r.failures().collect::<Vec<_>>());
    }

    #[test]
    fn jacobian_suite_passes_for_both_orders() {
        for k in [1, 2] {
            let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
            let r = jacobian_suite(&mut rng, 12, k, 1e-6).unwrap();
            assert!(r.passed, "{:?}", r.checks);
        }
    }

    #[test]
    fn verify_is_deterministic() {
        let mut cfg = RunConfig::default();
        cfg.grid.n_theta = 9;
        cfg.grid.n_phi = 16;
        cfg.verify.fields = 1;
        cfg.verify.fuzz_samples = 500;
        cfg.verify.derivative_samples = 50;
        let a = serde_json::to_string(&run_verify(&cfg, 42).unwrap()).unwrap();
        let b = serde_json::to_string(&run_verify(&cfg, 42).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
