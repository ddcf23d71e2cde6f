//! Closed-form smooth fields on the sphere with exact jets.
//!
//! These drive the identity suites, manufactured solutions and refinement
//! studies: every field is a finite sum of separable trigonometric modes
//! `a cos(lθ + α) cos(mφ + β)` so its partial derivatives are exact.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::grid::{FieldJet, ScalarField, SphericalGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigMode {
    pub amplitude: f64,
    pub theta_freq: f64,
    pub theta_phase: f64,
    /// Integer so the mode stays periodic in phi.
    pub phi_freq: i32,
    pub phi_phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigField {
    pub offset: f64,
    pub modes: Vec<TrigMode>,
}

impl TrigField {
    pub fn constant(c: f64) -> Self {
        Self { offset: c, modes: Vec::new() }
    }

    /// `c + a sin θ sin φ`.
    pub fn manufactured(c: f64, a: f64) -> Self {
        Self {
            offset: c,
            modes: vec![TrigMode {
                amplitude: a,
                theta_freq: 1.0,
                theta_phase: -FRAC_PI_2,
                phi_freq: 1,
                phi_phase: -FRAC_PI_2,
            }],
        }
    }

    /// A random field of `n_modes` low-frequency modes. Amplitudes are drawn
    /// from `[-max_amplitude, max_amplitude]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, offset: f64, n_modes: usize, max_amplitude: f64) -> Self {
        let modes = (0..n_modes)
            .map(|_| TrigMode {
                amplitude: rng.random_range(-max_amplitude..=max_amplitude),
                theta_freq: rng.random_range(0.5..=2.0),
                theta_phase: rng.random_range(0.0..2.0 * PI),
                phi_freq: rng.random_range(0..=2),
                phi_phase: rng.random_range(0.0..2.0 * PI),
            })
            .collect();
        Self { offset, modes }
    }

    /// `[u, u_θ, u_φ, u_θθ, u_θφ, u_φφ]` at `(θ, φ)`.
    pub fn partials(&self, theta: f64, phi: f64) -> [f64; 6] {
        let mut d = [self.offset, 0.0, 0.0, 0.0, 0.0, 0.0];
        for m in &self.modes {
            let l = m.theta_freq;
            let k = m.phi_freq as f64;
            let (st, ct) = (l * theta + m.theta_phase).sin_cos();
            let (sp, cp) = (k * phi + m.phi_phase).sin_cos();
            let a = m.amplitude;
            d[0] += a * ct * cp;
            d[1] += -a * l * st * cp;
            d[2] += -a * k * ct * sp;
            d[3] += -a * l * l * ct * cp;
            d[4] += a * l * k * st * sp;
            d[5] += -a * k * k * ct * cp;
        }
        d
    }

    pub fn value(&self, theta: f64, phi: f64) -> f64 {
        self.partials(theta, phi)[0]
    }

    pub fn jet(&self, theta: f64, phi: f64) -> FieldJet {
        let [u, ut, up, utt, utp, upp] = self.partials(theta, phi);
        FieldJet::from_partials(theta, phi, u, ut, up, utt, utp, upp)
    }

    pub fn sample(&self, grid: SphericalGrid) -> ScalarField {
        ScalarField::from_fn(grid, |t, p| self.value(t, p))
    }

    /// Smallest relative spacelike margin `1 − |∇u|²/cosh²u` over the nodes
    /// of `grid`.
    pub fn min_spacelike_ratio(&self, grid: &SphericalGrid) -> f64 {
        grid.nodes()
            .map(|n| {
                let jet = self.jet(grid.theta(n.i), grid.phi(n.j));
                1.0 - jet.grad_norm_sq() / jet.u.cosh().powi(2)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Least-squares slope of `ln err` against `ln h`.
pub fn fitted_order(h: &[f64], err: &[f64]) -> f64 {
    assert_eq!(h.len(), err.len());
    assert!(h.len() >= 2);
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
