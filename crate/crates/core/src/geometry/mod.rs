//! Extrinsic geometry of the radial graph `Y = (u(ξ), ξ)` in de Sitter space.
//!
//! In the coordinates `(r, ξ)` the ambient metric is `−dr² + cosh²(r) σ`. For
//! a graph with jet `(u, ∂u, ∇̃²u)` this module assembles the induced metric,
//! the second fundamental form with respect to the future timelike normal,
//! the principal curvatures, and the tilt and height functions.

pub mod embedding;
pub mod identities;

use nalgebra::{Matrix2, SymmetricEigen, Vector2};

use crate::error::{Error, Result};
use crate::grid::FieldJet;

/// Default relative slack for the spacelike condition
/// `cosh²u − |∇u|² ≥ slack · cosh²u`.
pub const DEFAULT_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InducedMetric {
    pub g: Matrix2<f64>,
    pub g_inv: Matrix2<f64>,
    /// `W = sqrt(cosh⁴u − cosh²u |∇u|²)`.
    pub w: f64,
}

/// Everything the solver and the diagnostics need at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryEval {
    pub g: Matrix2<f64>,
    pub g_inv: Matrix2<f64>,
    pub w: f64,
    pub a: Matrix2<f64>,
    /// Principal curvatures, `lambda[0] >= lambda[1]`.
    pub lambda: Vector2<f64>,
    pub tau: f64,
    pub eta: f64,
}

/// `cosh²u − |∇u|²_σ`; positive iff the graph is spacelike at the point.
pub fn spacelike_margin(jet: &FieldJet) -> f64 {
    jet.u.cosh().powi(2) - jet.grad_norm_sq()
}

fn checked_margin(jet: &FieldJet, slack: f64) -> Result<f64> {
    let m = spacelike_margin(jet);
    let ch2 = jet.u.cosh().powi(2);
    if !(m >= slack * ch2) {
        return Err(Error::NotSpacelike { margin: m });
    }
    Ok(m)
}

fn sigma(theta: f64) -> (Matrix2<f64>, Matrix2<f64>) {
    let s2 = theta.sin().powi(2);
    (Matrix2::new(1.0, 0.0, 0.0, s2), Matrix2::new(1.0, 0.0, 0.0, 1.0 / s2))
}

/// `G_ij = −u_i u_j + cosh²u σ_ij` and its inverse
/// `G^ij = σ^ij / cosh²u + ũ^i ũ^j / W²` with `ũ^i = σ^{ij} u_j`.
pub fn induced_metric(jet: &FieldJet, slack: f64) -> Result<InducedMetric> {
    let m = checked_margin(jet, slack)?;
    let ch2 = jet.u.cosh().powi(2);
    let (s, s_inv) = sigma(jet.theta);
    let du = jet.du;
    let g = ch2 * s - du * du.transpose();
    let w2 = ch2 * m;
    let up = s_inv * du;
    let g_inv = s_inv / ch2 + up * up.transpose() / w2;
    Ok(InducedMetric { g, g_inv, w: w2.sqrt() })
}

/// `A_ij = (cosh²u / W)(∇̃²_ij u − 2 tanh(u) u_i u_j + sinh u cosh u σ_ij)`.
pub fn second_fundamental_form(jet: &FieldJet, slack: f64) -> Result<Matrix2<f64>> {
    let m = checked_margin(jet, slack)?;
    let (sh, ch) = (jet.u.sinh(), jet.u.cosh());
    let (s, _) = sigma(jet.theta);
    let du = jet.du;
    let w = ch * m.sqrt();
    let inner = jet.hess - 2.0 * (sh / ch) * du * du.transpose() + sh * ch * s;
    let a = (ch * ch / w) * inner;
    Ok(0.5 * (a + a.transpose()))
}

/// Eigenvalues (descending) and `G`-orthonormal eigenvectors (columns) of
/// the symmetric-definite pencil `A x = λ G x`, computed through the
/// congruent symmetric matrix `G^{-1/2} A G^{-1/2}`.
pub fn pencil_eigen(a: &Matrix2<f64>, g: &Matrix2<f64>) -> Result<(Vector2<f64>, Matrix2<f64>)> {
    let ge = SymmetricEigen::new(*g);
    if !(ge.eigenvalues.min() > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let d = ge.eigenvalues.map(|x| 1.0 / x.sqrt());
    let g_isqrt = ge.eigenvectors * Matrix2::from_diagonal(&d) * ge.eigenvectors.transpose();
    let l = g_isqrt * a * g_isqrt;
    let le = SymmetricEigen::new(0.5 * (l + l.transpose()));
    let (mut lam, mut q) = (le.eigenvalues, le.eigenvectors);
    if lam[0] < lam[1] {
        lam.swap_rows(0, 1);
        q.swap_columns(0, 1);
    }
    Ok((lam, g_isqrt * q))
}

/// Principal curvatures sorted `λ₁ ≥ λ₂`.
pub fn principal_curvatures(a: &Matrix2<f64>, g: &Matrix2<f64>) -> Result<Vector2<f64>> {
    pencil_eigen(a, g).map(|(l, _)| l)
}

/// Tilt `τ = cosh²u / sqrt(cosh²u − |∇u|²)` and height `η = −sinh u`.
pub fn tilt_height(jet: &FieldJet, slack: f64) -> Result<(f64, f64)> {
    let m = checked_margin(jet, slack)?;
    Ok((jet.u.cosh().powi(2) / m.sqrt(), -jet.u.sinh()))
}

pub fn evaluate(jet: &FieldJet, slack: f64) -> Result<GeometryEval> {
    let im = induced_metric(jet, slack)?;
    let a = second_fundamental_form(jet, slack)?;
    let lambda = principal_curvatures(&a, &im.g)?;
    let (tau, eta) = tilt_height(jet, slack)?;
    Ok(GeometryEval { g: im.g, g_inv: im.g_inv, w: im.w, a, lambda, tau, eta })
}
