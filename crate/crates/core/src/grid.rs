//! Latitude-band grids on the round two-sphere and covariant finite differences.
//!
//! Nodes are laid out on `n_theta` latitude circles between `theta_min` and
//! `theta_max` (both included, these are the Dirichlet boundary circles) and
//! `n_phi` equally spaced meridians. The phi direction is periodic.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_SIN_THETA_FLOOR: f64 = 1e-3;

/// Width of the boundary strip left out of [`SphericalGrid::in_core`], as a
/// fraction of `theta_max - theta_min`.
pub const CORE_FRACTION: f64 = 0.125;

/// A structured grid on the band `theta_min <= theta <= theta_max` of S².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalGrid {
    theta_min: f64,
    theta_max: f64,
    n_theta: usize,
    n_phi: usize,
    sin_theta_floor: f64,
}

/// Grid node addressed by latitude row `i` and meridian column `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Node {
    pub i: usize,
    pub j: usize,
}

impl Node {
    pub fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }
}

impl SphericalGrid {
    pub fn new(theta_min: f64, theta_max: f64, n_theta: usize, n_phi: usize) -> Result<Self> {
        Self::with_floor(theta_min, theta_max, n_theta, n_phi, DEFAULT_SIN_THETA_FLOOR)
    }

    pub fn with_floor(
        theta_min: f64,
        theta_max: f64,
        n_theta: usize,
        n_phi: usize,
        sin_theta_floor: f64,
    ) -> Result<Self> {
        let bad = |param, reason: String| Err(Error::InvalidGrid { param, reason });
        if !(sin_theta_floor > 0.0 && sin_theta_floor < 1.0) {
            return bad("sin_theta_floor", format!("{sin_theta_floor} must lie in (0, 1)"));
        }
        if !(theta_min.is_finite() && theta_min > 0.0) {
            return bad("theta_min", format!("{theta_min} must be positive"));
        }
        if !(theta_max.is_finite() && theta_max < PI) {
            return bad("theta_max", format!("{theta_max} must be below pi"));
        }
        if theta_min >= theta_max {
            return bad("theta_min", format!("{theta_min} must be below theta_max = {theta_max}"));
        }
        if n_theta < 4 {
            return bad("n_theta", format!("{n_theta} < 4"));
        }
        if n_phi < 8 {
            return bad("n_phi", format!("{n_phi} < 8"));
        }
        for (param, theta) in [("theta_min", theta_min), ("theta_max", theta_max)] {
            if theta.sin() < sin_theta_floor {
                return bad(
                    "sin_theta_floor",
                    format!(
                        "{param} = {theta} gives sin theta = {:e} below sin_theta_floor = {sin_theta_floor:e}",
                        theta.sin()
                    ),
                );
            }
        }
        Ok(Self { theta_min, theta_max, n_theta, n_phi, sin_theta_floor })
    }

    pub fn theta_min(&self) -> f64 {
        self.theta_min
    }

    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn sin_theta_floor(&self) -> f64 {
        self.sin_theta_floor
    }

    pub fn h_theta(&self) -> f64 {
        (self.theta_max - self.theta_min) / (self.n_theta - 1) as f64
    }

    pub fn h_phi(&self) -> f64 {
        2.0 * PI / self.n_phi as f64
    }

    pub fn theta(&self, i: usize) -> f64 {
        if i == self.n_theta - 1 {
            self.theta_max
        } else {
            self.theta_min + i as f64 * self.h_theta()
        }
    }

    pub fn phi(&self, j: usize) -> f64 {
        j as f64 * self.h_phi()
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major (theta-major) flat index of a node.
    pub fn index(&self, node: Node) -> usize {
        node.i * self.n_phi + node.j
    }

    pub fn node(&self, index: usize) -> Node {
        Node::new(index / self.n_phi, index % self.n_phi)
    }

    /// Column index shifted by `dj` with periodic wrap.
    pub fn wrap_j(&self, j: usize, dj: isize) -> usize {
        (j as isize + dj).rem_euclid(self.n_phi as isize) as usize
    }

    pub fn is_boundary(&self, node: Node) -> bool {
        node.i == 0 || node.i == self.n_theta - 1
    }

    /// Distance, in rows, from the nearest boundary circle.
    pub fn rows_to_boundary(&self, node: Node) -> usize {
        node.i.min(self.n_theta - 1 - node.i)
    }

    /// Nodes of the fixed interior subdomain: at least [`CORE_FRACTION`] of
    /// the band width, and two rows, from the boundary. Nested under
    /// refinement when `CORE_FRACTION · (n_theta − 1)` is an integer.
    pub fn in_core(&self, node: Node) -> bool {
        let rows = self.rows_to_boundary(node);
        rows >= 2 && rows as f64 >= CORE_FRACTION * (self.n_theta - 1) as f64 - 1e-9
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (0..self.n_theta).flat_map(move |i| (0..self.n_phi).map(move |j| Node::new(i, j)))
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = Node> + '_ {
        (1..self.n_theta - 1).flat_map(move |i| (0..self.n_phi).map(move |j| Node::new(i, j)))
    }

    pub fn interior_len(&self) -> usize {
        (self.n_theta - 2) * self.n_phi
    }

    /// Halves both spacings. Nodes of `self` remain nodes of the refined grid
    /// at indices `(2i, 2j)`.
    pub fn refined(&self) -> Self {
        Self { n_theta: 2 * (self.n_theta - 1) + 1, n_phi: 2 * self.n_phi, ..*self }
    }

    pub fn refined_times(&self, levels: usize) -> Self {
        (0..levels).fold(*self, |g, _| g.refined())
    }

    pub fn check_theta(&self, theta: f64) -> Result<f64> {
        check_pole(theta, self.sin_theta_floor)
    }
}

fn check_pole(theta: f64, floor: f64) -> Result<f64> {
    let s = theta.sin();
    if !(s >= floor) {
        return Err(Error::PoleProximity { theta, sin_theta: s, floor });
    }
    Ok(s)
}

/// The round metric `diag(1, sin²θ)` in polar coordinates.
pub fn round_metric(theta: f64, sin_theta_floor: f64) -> Result<Matrix2<f64>> {
    let s = check_pole(theta, sin_theta_floor)?;
    Ok(Matrix2::new(1.0, 0.0, 0.0, s * s))
}

pub fn round_metric_inverse(theta: f64, sin_theta_floor: f64) -> Result<Matrix2<f64>> {
    let s = check_pole(theta, sin_theta_floor)?;
    Ok(Matrix2::new(1.0, 0.0, 0.0, 1.0 / (s * s)))
}

/// Nonzero Christoffel symbols of the round metric. Index 0 is theta, 1 is phi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereChristoffel {
    /// Γ^θ_{φφ} = -sin θ cos θ
    pub theta_phiphi: f64,
    /// Γ^φ_{θφ} = Γ^φ_{φθ} = cot θ
    pub phi_thetaphi: f64,
}

impl SphereChristoffel {
    /// Γ^k_{ij}.
    pub fn symbol(&self, k: usize, i: usize, j: usize) -> f64 {
        match (k, i, j) {
            (0, 1, 1) => self.theta_phiphi,
            (1, 0, 1) | (1, 1, 0) => self.phi_thetaphi,
            _ => 0.0,
        }
    }
}

pub fn christoffel_sigma(theta: f64, sin_theta_floor: f64) -> Result<SphereChristoffel> {
    let s = check_pole(theta, sin_theta_floor)?;
    let c = theta.cos();
    Ok(SphereChristoffel { theta_phiphi: -s * c, phi_thetaphi: c / s })
}

/// Values of the graph function `u`, one per grid node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    grid: SphericalGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: SphericalGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::FieldShape { expected: grid.len(), got: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: SphericalGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    pub fn from_fn(grid: SphericalGrid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = grid.nodes().map(|n| f(grid.theta(n.i), grid.phi(n.j))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &SphericalGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, node: Node) -> f64 {
        self.values[self.grid.index(node)]
    }

    /// Value at row `i + di`, column `j + dj` (periodic in phi).
    pub fn offset(&self, node: Node, di: isize, dj: isize) -> f64 {
        let i = (node.i as isize + di) as usize;
        self.values[i * self.grid.n_phi + self.grid.wrap_j(node.j, dj)]
    }

    /// The 3×3 neighbourhood `s[a][b] = u(i + a - 1, j + b - 1)`.
    pub fn stencil(&self, node: Node) -> Result<[[f64; 3]; 3]> {
        if self.grid.rows_to_boundary(node) < 1 {
            return Err(Error::Stencil { i: node.i, j: node.j, margin: 1 });
        }
        let mut s = [[0.0; 3]; 3];
        for (a, row) in s.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v = self.offset(node, a as isize - 1, b as isize - 1);
            }
        }
        Ok(s)
    }
}

/// Pointwise 2-jet of `u`: value, differential and covariant Hessian with
/// respect to the round metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldJet {
    pub theta: f64,
    pub phi: f64,
    pub u: f64,
    pub du: Vector2<f64>,
    pub hess: Matrix2<f64>,
}

impl FieldJet {
    /// Builds the jet from coordinate partial derivatives; the covariant
    /// Hessian is `∂_ij u − Γ^k_ij ∂_k u`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_partials(
        theta: f64,
        phi: f64,
        u: f64,
        u_t: f64,
        u_p: f64,
        u_tt: f64,
        u_tp: f64,
        u_pp: f64,
    ) -> Self {
        let (s, c) = theta.sin_cos();
        let h_tp = u_tp - c / s * u_p;
        let hess = Matrix2::new(u_tt, h_tp, h_tp, u_pp + s * c * u_t);
        Self { theta, phi, u, du: Vector2::new(u_t, u_p), hess }
    }

    pub fn constant(theta: f64, phi: f64, u: f64) -> Self {
        Self { theta, phi, u, du: Vector2::zeros(), hess: Matrix2::zeros() }
    }

    /// |∇u|² measured in the round metric.
    pub fn grad_norm_sq(&self) -> f64 {
        let s = self.theta.sin();
        self.du[0] * self.du[0] + self.du[1] * self.du[1] / (s * s)
    }
}

/// Coordinate partials `(u, u_θ, u_φ, u_θθ, u_θφ, u_φφ)` from a 3×3 stencil by
/// second-order central differences.
pub fn stencil_partials(s: &[[f64; 3]; 3], h_theta: f64, h_phi: f64) -> [f64; 6] {
    let u = s[1][1];
    let u_t = (s[2][1] - s[0][1]) / (2.0 * h_theta);
    let u_p = (s[1][2] - s[1][0]) / (2.0 * h_phi);
    let u_tt = (s[2][1] - 2.0 * u + s[0][1]) / (h_theta * h_theta);
    let u_pp = (s[1][2] - 2.0 * u + s[1][0]) / (h_phi * h_phi);
    let u_tp = (s[2][2] - s[2][0] - s[0][2] + s[0][0]) / (4.0 * h_theta * h_phi);
    [u, u_t, u_p, u_tt, u_tp, u_pp]
}

/// Linear weights of each partial with respect to the stencil value at
/// offset `(a, b)`; the transpose of [`stencil_partials`].
pub fn stencil_weights(a: usize, b: usize, h_theta: f64, h_phi: f64) -> [f64; 6] {
    let mut w = [0.0; 6];
    let (ht, hp) = (h_theta, h_phi);
    match (a, b) {
        (1, 1) => {
            w[0] = 1.0;
            w[3] = -2.0 / (ht * ht);
            w[5] = -2.0 / (hp * hp);
        }
        (0, 1) | (2, 1) => {
            let sgn = if a == 2 { 1.0 } else { -1.0 };
            w[1] = sgn / (2.0 * ht);
            w[3] = 1.0 / (ht * ht);
        }
        (1, 0) | (1, 2) => {
            let sgn = if b == 2 { 1.0 } else { -1.0 };
            w[2] = sgn / (2.0 * hp);
            w[5] = 1.0 / (hp * hp);
        }
        _ => {
            let sgn = if (a == 2) == (b == 2) { 1.0 } else { -1.0 };
            w[4] = sgn / (4.0 * ht * hp);
        }
    }
    w
}

pub fn jet_from_stencil(grid: &SphericalGrid, node: Node, s: &[[f64; 3]; 3]) -> FieldJet {
    let [u, u_t, u_p, u_tt, u_tp, u_pp] = stencil_partials(s, grid.h_theta(), grid.h_phi());
    FieldJet::from_partials(grid.theta(node.i), grid.phi(node.j), u, u_t, u_p, u_tt, u_tp, u_pp)
}

/// Second-order accurate jet at an interior node.
pub fn jet_at(field: &ScalarField, node: Node) -> Result<FieldJet> {
    let s = field.stencil(node)?;
    Ok(jet_from_stencil(field.grid(), node, &s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn band(n_theta: usize, n_phi: usize) -> SphericalGrid {
        SphericalGrid::new(PI / 4.0, 3.0 * PI / 4.0, n_theta, n_phi).unwrap()
    }

    #[test]
    fn round_metric_values() {
        let m = round_metric(PI / 2.0, 1e-3).unwrap();
        assert_abs_diff_eq!(m, Matrix2::identity(), epsilon = 1e-15);
        let m = round_metric(PI / 6.0, 1e-3).unwrap();
        assert_abs_diff_eq!(m[(1, 1)], 0.25, epsilon = 1e-15);
        let m = round_metric(PI / 3.0, 1e-3).unwrap();
        assert_abs_diff_eq!(m[(1, 1)], 0.75, epsilon = 1e-15);
        let inv = round_metric_inverse(PI / 3.0, 1e-3).unwrap();
        assert_abs_diff_eq!(m * inv, Matrix2::identity(), epsilon = 1e-15);
    }

    #[test]
    fn pole_floor_is_enforced() {
        assert!(matches!(round_metric(1e-4, 1e-3), Err(Error::PoleProximity { .. })));
        assert!(matches!(christoffel_sigma(PI - 1e-5, 1e-3), Err(Error::PoleProximity { .. })));
        let err = SphericalGrid::with_floor(1e-4, 1.0, 8, 8, 1e-3).unwrap_err();
        assert!(err.to_string().contains("sin_theta_floor"), "{err}");
    }

    #[test]
    fn grid_validation() {
        assert!(SphericalGrid::new(0.5, 0.4, 8, 8).is_err());
        assert!(SphericalGrid::new(0.5, 1.0, 3, 8).is_err());
        assert!(SphericalGrid::new(0.5, 1.0, 4, 7).is_err());
        let g = band(9, 16);
        assert_eq!(g.len(), 9 * 16);
        assert_eq!(g.interior_nodes().count(), 7 * 16);
        assert_eq!(g.nodes().filter(|n| g.is_boundary(*n)).count(), 2 * 16);
        assert_eq!(g.theta(8), 3.0 * PI / 4.0);
    }

    #[test]
    fn refinement_nests_nodes() {
        let g = band(5, 8);
        let f = g.refined();
        assert_eq!((f.n_theta(), f.n_phi()), (9, 16));
        for n in g.nodes() {
            assert_abs_diff_eq!(g.theta(n.i), f.theta(2 * n.i), epsilon = 1e-14);
            assert_abs_diff_eq!(g.phi(n.j), f.phi(2 * n.j), epsilon = 1e-14);
        }
    }

    #[test]
    fn christoffel_values() {
        let c = christoffel_sigma(PI / 2.0, 1e-3).unwrap();
        assert_abs_diff_eq!(c.theta_phiphi, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.phi_thetaphi, 0.0, epsilon = 1e-15);
        let c = christoffel_sigma(PI / 4.0, 1e-3).unwrap();
        assert_abs_diff_eq!(c.theta_phiphi, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.phi_thetaphi, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn christoffel_metric_compatibility() {
        // ∂_k σ_ij − Γ^l_ki σ_lj − Γ^l_kj σ_il = 0; only ∂_θ σ_φφ = 2 sin θ cos θ is nonzero.
        for step in 1..50 {
            let theta = 0.05 + step as f64 * 0.06;
            let s = round_metric(theta, 1e-3).unwrap();
            let g = christoffel_sigma(theta, 1e-3).unwrap();
            let ds = |k: usize, i: usize, j: usize| {
                if k == 0 && i == 1 && j == 1 {
                    2.0 * theta.sin() * theta.cos()
                } else {
                    0.0
                }
            };
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let mut r = ds(k, i, j);
                        for l in 0..2 {
                            r -= g.symbol(l, k, i) * s[(l, j)] + g.symbol(l, k, j) * s[(i, l)];
                        }
                        assert!(r.abs() <= 1e-12, "theta={theta} k={k} i={i} j={j} r={r}");
                    }
                }
            }
        }
    }

    #[test]
    fn constant_field_has_zero_jet() {
        let g = band(9, 16);
        let f = ScalarField::constant(g, 0.7);
        for n in g.interior_nodes() {
            let jet = jet_at(&f, n).unwrap();
            assert_eq!(jet.u, 0.7);
            assert_abs_diff_eq!(jet.du, Vector2::zeros(), epsilon = 1e-12);
            assert_abs_diff_eq!(jet.hess, Matrix2::zeros(), epsilon = 1e-9);
        }
    }

    #[test]
    fn boundary_node_has_no_stencil() {
        let g = band(9, 16);
        let f = ScalarField::constant(g, 0.1);
        assert!(matches!(jet_at(&f, Node::new(0, 3)), Err(Error::Stencil { .. })));
        assert!(matches!(jet_at(&f, Node::new(8, 0)), Err(Error::Stencil { .. })));
    }

    // Hand computation: the restriction of a linear ambient function is an
    // eigenfunction of the Hessian, ∇² cos θ = −cos θ σ.
    #[test]
    fn cos_theta_hessian_is_minus_cos_theta_sigma() {
        let mut prev = None;
        for level in 0..3 {
            let g = band(9, 16).refined_times(level);
            let f = ScalarField::from_fn(g, |t, _| t.cos());
            // Off the equator, where cos θ = 0 would leave only roundoff.
            let node = Node::new(2 << level, 3 << level);
            let jet = jet_at(&f, node).unwrap();
            let theta = g.theta(node.i);
            let exact = -theta.cos() * round_metric(theta, 1e-3).unwrap();
            let err = (jet.hess - exact).abs().max();
            if let Some(p) = prev {
                let ratio: f64 = p / err;
                assert!(ratio > 3.5, "ratio {ratio}");
            }
            prev = Some(err);
        }
    }

    #[test]
    fn periodic_shift_is_bit_identical() {
        let g = band(9, 16);
        let f = ScalarField::from_fn(g, |t, p| (2.0 * p).sin() * t.cos() + 0.3 * p.cos());
        for n in g.interior_nodes() {
            let a = jet_at(&f, n).unwrap();
            let s = f.stencil(n).unwrap();
            // Recompute through the wrapped neighbour columns.
            let shifted = Node::new(n.i, g.wrap_j(n.j, g.n_phi() as isize));
            let b = jet_at(&f, shifted).unwrap();
            assert_eq!(a, b);
            assert_eq!(s, f.stencil(shifted).unwrap());
        }
    }

    #[test]
    fn weights_match_partials() {
        let (ht, hp) = (0.13, 0.29);
        let mut s = [[0.0; 3]; 3];
        let vals = [0.3, -1.1, 0.7, 2.0, 0.9, -0.4, 1.3, 0.05, -0.8];
        for a in 0..3 {
            for b in 0..3 {
                s[a][b] = vals[3 * a + b];
            }
        }
        let direct = stencil_partials(&s, ht, hp);
        let mut via = [0.0; 6];
        for a in 0..3 {
            for b in 0..3 {
                let w = stencil_weights(a, b, ht, hp);
                for k in 0..6 {
                    via[k] += w[k] * s[a][b];
                }
            }
        }
        for k in 0..6 {
            assert_abs_diff_eq!(direct[k], via[k], epsilon = 1e-12 * direct[k].abs().max(1.0));
        }
    }
}
