//! The graph as a submanifold of Minkowski space `R^{3,1}`.
//!
//! `Y = sinh(u) E₁ + cosh(u) ξ` with `ξ ∈ S² ⊂ {x₁ = 0}`. Quantities here are
//! assembled from ambient vectors only and serve as an independent check of
//! the coordinate formulas in the parent module.

use nalgebra::{Matrix2, Vector4};

use crate::error::Result;
use crate::grid::{jet_at, FieldJet, Node, ScalarField};

pub type Ambient = Vector4<f64>;

/// `⟨a, b⟩ = −a₁b₁ + a₂b₂ + a₃b₃ + a₄b₄`.
pub fn minkowski(a: &Ambient, b: &Ambient) -> f64 {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

pub fn time_axis() -> Ambient {
    Ambient::new(1.0, 0.0, 0.0, 0.0)
}

pub fn sphere_point(theta: f64, phi: f64) -> Ambient {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Ambient::new(0.0, st * cp, st * sp, ct)
}

pub fn embed(u: f64, theta: f64, phi: f64) -> Ambient {
    u.sinh() * time_axis() + u.cosh() * sphere_point(theta, phi)
}

/// `n̂ = −(cosh²u ∂_r + ∇̃u) / W` as an ambient vector.
pub fn unit_normal(jet: &FieldJet, slack: f64) -> Result<Ambient> {
    let w = super::induced_metric(jet, slack)?.w;
    let (st, ct) = jet.theta.sin_cos();
    let (sp, cp) = jet.phi.sin_cos();
    let (sh, ch) = (jet.u.sinh(), jet.u.cosh());
    let xi = sphere_point(jet.theta, jet.phi);
    let d_r = ch * time_axis() + sh * xi;
    let d_theta = ch * Ambient::new(0.0, ct * cp, ct * sp, -st);
    let d_phi = ch * Ambient::new(0.0, -st * sp, st * cp, 0.0);
    let grad = jet.du[0] * d_theta + jet.du[1] / (st * st) * d_phi;
    Ok(-(ch * ch * d_r + grad) / w)
}

fn patch(field: &ScalarField, node: Node) -> Result<[[Ambient; 3]; 3]> {
    let s = field.stencil(node)?;
    let g = field.grid();
    let mut y = [[Ambient::zeros(); 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let theta = g.theta(node.i + a - 1);
            let phi = g.phi(node.j) + (b as f64 - 1.0) * g.h_phi();
            y[a][b] = embed(s[a][b], theta, phi);
        }
    }
    Ok(y)
}

/// `A_ij = ⟨∂_i∂_j Y, n̂⟩` with the coordinate derivatives of the embedding
/// taken by central differences.
pub fn embedded_second_fundamental_form(field: &ScalarField, node: Node, slack: f64) -> Result<Matrix2<f64>> {
    let y = patch(field, node)?;
    let g = field.grid();
    let (ht, hp) = (g.h_theta(), g.h_phi());
    let n = unit_normal(&jet_at(field, node)?, slack)?;
    let y_tt = (y[2][1] - 2.0 * y[1][1] + y[0][1]) / (ht * ht);
    let y_pp = (y[1][2] - 2.0 * y[1][1] + y[1][0]) / (hp * hp);
    let y_tp = (y[2][2] - y[2][0] - y[0][2] + y[0][0]) / (4.0 * ht * hp);
    let a01 = minkowski(&y_tp, &n);
    Ok(Matrix2::new(minkowski(&y_tt, &n), a01, a01, minkowski(&y_pp, &n)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalCheck {
    /// `|g(n̂, n̂) + 1|`
    pub norm_defect: f64,
    /// `max_i |g(n̂, Y_i)|` with `Y_i` by central differences.
    pub tangency_defect: f64,
    /// `|g(n̂, Y)|`; the normal must be tangent to de Sitter space.
    pub position_defect: f64,
}

pub fn normal_check(field: &ScalarField, node: Node, slack: f64) -> Result<NormalCheck> {
    let y = patch(field, node)?;
    let g = field.grid();
    let n = unit_normal(&jet_at(field, node)?, slack)?;
    let y_t = (y[2][1] - y[0][1]) / (2.0 * g.h_theta());
    let y_p = (y[1][2] - y[1][0]) / (2.0 * g.h_phi());
    Ok(NormalCheck {
        norm_defect: (minkowski(&n, &n) + 1.0).abs(),
        tangency_defect: minkowski(&n, &y_t).abs().max(minkowski(&n, &y_p).abs()),
        position_defect: minkowski(&n, &y[1][1]).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{fitted_order, TrigField};
    use crate::geometry::{second_fundamental_form, tilt_height, DEFAULT_SLACK};
    use crate::grid::SphericalGrid;
    use std::f64::consts::PI;

    #[test]
    fn embedding_lies_on_de_sitter() {
        for (u, t, p) in [(0.3, 1.0, 2.0), (-1.2, 0.4, 5.0), (2.0, 2.5, 0.1)] {
            let y = embed(u, t, p);
            assert!((minkowski(&y, &y) - 1.0).abs() < 1e-12);
            assert!((minkowski(&y, &time_axis()) + f64::sinh(u)).abs() < 1e-12);
        }
    }

    #[test]
    fn tilt_is_normal_time_component() {
        let f = TrigField::manufactured(0.4, 0.3);
        for (t, p) in [(1.0, 0.5), (1.8, 3.3)] {
            let jet = f.jet(t, p);
            let n = unit_normal(&jet, DEFAULT_SLACK).unwrap();
            let (tau, _) = tilt_height(&jet, DEFAULT_SLACK).unwrap();
            assert!((minkowski(&n, &time_axis()) - tau).abs() < 1e-12);
        }
    }

    #[test]
    fn embedded_form_converges_to_coordinate_formula() {
        let f = TrigField {
            offset: 0.35,
            modes: vec![
                crate::fields::TrigMode { amplitude: 0.12, theta_freq: 1.3, theta_phase: 0.4, phi_freq: 2, phi_phase: 1.0 },
                crate::fields::TrigMode { amplitude: -0.08, theta_freq: 0.7, theta_phase: 2.0, phi_freq: 1, phi_phase: 0.2 },
            ],
        };
        let base = SphericalGrid::new(PI / 4.0, 3.0 * PI / 4.0, 9, 16).unwrap();
        let (mut hs, mut errs, mut tang) = (vec![], vec![], vec![]);
        for level in 0..3 {
            let g = base.refined_times(level);
            let field = f.sample(g);
            let (mut e, mut t): (f64, f64) = (0.0, 0.0);
            for i in 1..8 {
                for j in 0..16 {
                    let node = Node::new(i << level, j << level);
                    let emb = embedded_second_fundamental_form(&field, node, DEFAULT_SLACK).unwrap();
                    let exact = second_fundamental_form(&f.jet(g.theta(node.i), g.phi(node.j)), DEFAULT_SLACK).unwrap();
                    e = e.max((emb - exact).abs().max());
                    let nc = normal_check(&field, node, DEFAULT_SLACK).unwrap();
                    assert!(nc.norm_defect <= 1e-10);
                    assert!(nc.position_defect <= 1e-10);
                    t = t.max(nc.tangency_defect);
                }
            }
            hs.push(g.h_theta());
            errs.push(e);
            tang.push(t);
        }
        assert!(fitted_order(&hs, &errs) >= 1.8, "{errs:?}");
        assert!(fitted_order(&hs, &tang) >= 1.8, "{tang:?}");
    }
}
