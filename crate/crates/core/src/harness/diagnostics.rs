//! Test functions from the maximum-principle arguments, evaluated on a
//! discrete solution.
//!
//! `Φ = ln λ₁ + α(τ) + β ln γ` with `α = −ln(τ + a)` and `γ = φ − u`, where `φ`
//! is the extension of the boundary data used as the initial iterate. The
//! variant `Φ₀ = ln λ₁ + α(τ) − β η` drops the barrier `γ`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::evaluate;
use crate::grid::{jet_at, ScalarField};

pub fn alpha(tau: f64, a: f64) -> f64 {
    -(tau + a).ln()
}

pub fn alpha_prime(tau: f64, a: f64) -> f64 {
    -1.0 / (tau + a)
}

pub fn alpha_second(tau: f64, a: f64) -> f64 {
    (tau + a).powi(-2)
}

/// `α'' − (α')²`, which vanishes for this family.
pub fn alpha_identity_residual(tau: f64, a: f64) -> f64 {
    alpha_second(tau, a) - alpha_prime(tau, a).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiDiagnostic {
    pub a: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Located {
    pub i: usize,
    pub j: usize,
    pub value: f64,
    /// In the fixed interior subdomain, as for `sup_interior_abs_a`.
    pub interior: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiSummary {
    pub a: f64,
    pub beta: f64,
    /// `None` when `γ > 0` and `λ₁ > 0` hold at no node.
    pub phi_max: Option<Located>,
    pub phi_height_max: Option<Located>,
    /// Maximum of `H = λ₁ + λ₂`.
    pub mean_max: Located,
    pub evaluated_nodes: usize,
    /// Nodes skipped because `γ ≤ 0` or `λ₁ ≤ 0`.
    pub skipped_nodes: usize,
}

fn keep_max(slot: &mut Option<Located>, cand: Located) {
    if slot.is_none_or(|s| cand.value > s.value) {
        *slot = Some(cand);
    }
}

impl PhiDiagnostic {
    pub fn evaluate(&self, u: &ScalarField, extension: &ScalarField, slack: f64) -> Result<PhiSummary> {
        let g = *u.grid();
        let mut phi_max = None;
        let mut phi_height_max = None;
        let mut mean_max: Option<Located> = None;
        let (mut evaluated, mut skipped) = (0, 0);
        for node in g.interior_nodes() {
            let geo = evaluate(&jet_at(u, node)?, slack)?;
            let interior = g.in_core(node);
            let at = |value| Located { i: node.i, j: node.j, value, interior };
            keep_max(&mut mean_max, at(geo.lambda[0] + geo.lambda[1]));
            let l1 = geo.lambda[0];
            if l1 > 0.0 {
                let base = l1.ln() + alpha(geo.tau, self.a);
                keep_max(&mut phi_height_max, at(base - self.beta * geo.eta));
                let gamma = extension.at(node) - u.at(node);
                if gamma > 0.0 {
                    keep_max(&mut phi_max, at(base + self.beta * gamma.ln()));
                    evaluated += 1;
                    continue;
                }
            }
            skipped += 1;
        }
        Ok(PhiSummary {
            a: self.a,
            beta: self.beta,
            phi_max,
            phi_height_max,
            mean_max: mean_max.unwrap_or(Located { i: 0, j: 0, value: f64::NAN, interior: false }),
            evaluated_nodes: evaluated,
            skipped_nodes: skipped,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SphericalGrid;
    use std::f64::consts::PI;

    #[test]
    fn alpha_identity_vanishes() {
        for a in [0.5, 1.0, 3.0] {
            for k in 0..=900 {
                let tau = 1.0 + k as f64 * 0.01;
                assert!(alpha_identity_residual(tau, a).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn alpha_derivatives_match_differences() {
        let (tau, a, h) = (2.5, 1.0, 1e-4);
        let d1 = (alpha(tau + h, a) - alpha(tau - h, a)) / (2.0 * h);
        let d2 = (alpha(tau + h, a) - 2.0 * alpha(tau, a) + alpha(tau - h, a)) / (h * h);
        assert!((d1 - alpha_prime(tau, a)).abs() < 1e-8);
        assert!((d2 - alpha_second(tau, a)).abs() < 1e-5);
    }

    #[test]
    fn slice_below_extension() {
        let g = SphericalGrid::new(PI / 4.0, 3.0 * PI / 4.0, 9, 16).unwrap();
        let u = ScalarField::constant(g, 0.5);
        let ext = ScalarField::constant(g, 0.6);
        let d = PhiDiagnostic { a: 1.0, beta: 0.1 };
        let s = d.evaluate(&u, &ext, 1e-6).unwrap();
        let expect = 0.5f64.tanh().ln() - (0.5f64.cosh() + 1.0).ln() + 0.1 * 0.1f64.ln();
        assert!((s.phi_max.unwrap().value - expect).abs() < 1e-12);
        assert_eq!(s.skipped_nodes, 0);
        assert!((s.mean_max.value - 2.0 * 0.5f64.tanh()).abs() < 1e-12);

        let none = d.evaluate(&u, &u, 1e-6).unwrap();
        assert!(none.phi_max.is_none());
        assert!(none.phi_height_max.is_some());
    }
}
