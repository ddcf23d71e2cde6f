//! Finite-difference residuals of the tensor identities satisfied by the tilt,
//! the height and the second fundamental form.
//!
//! Intrinsic Christoffel symbols of `G` come from differences of the metric,
//! never from a closed form, and the Gaussian curvature comes from the
//! Brioschi formula in `G` alone. `G = cosh²u σ − du du` is differenced
//! through the product rule: the `u`-dependent factors `cosh²u` and `du du`
//! by central differences over the patch, `σ(θ)` exactly. The second
//! fundamental form is split the same way, `A = X + Y σ`. Each residual is a
//! max-norm over tensor components at one node and decays like `h²`.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

use super::{evaluate, spacelike_margin, GeometryEval};
use crate::error::{Error, Result};
use crate::grid::{jet_at, Node, ScalarField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub name: String,
    pub value: f64,
    pub h: f64,
}

impl IdentityResidual {
    fn new(name: &str, value: f64, h: f64) -> Self {
        Self { name: name.to_owned(), value, h }
    }
}

pub const PROP1_NAMES: [&str; 3] = ["hessian_height", "gradient_tilt", "hessian_tilt"];
pub const GAUSS_CODAZZI_NAMES: [&str; 2] = ["gauss", "codazzi"];

struct Patch {
    geo: [[GeometryEval; 3]; 3],
    eta: [[f64; 3]; 3],
    ch2: [[f64; 3]; 3],
    dudu: [[Matrix2<f64>; 3]; 3],
    /// `A = x + y σ`.
    x: [[Matrix2<f64>; 3]; 3],
    y: [[f64; 3]; 3],
    theta: f64,
    ht: f64,
    hp: f64,
}

impl Patch {
    fn new(field: &ScalarField, node: Node, slack: f64) -> Result<Self> {
        let g = field.grid();
        if g.rows_to_boundary(node) < 2 {
            return Err(Error::Stencil { i: node.i, j: node.j, margin: 2 });
        }
        let mut geo = [[None; 3]; 3];
        let mut eta = [[0.0; 3]; 3];
        let mut ch2 = [[0.0; 3]; 3];
        let mut dudu = [[Matrix2::zeros(); 3]; 3];
        let mut x = [[Matrix2::zeros(); 3]; 3];
        let mut y = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                let nb = Node::new(node.i + a - 1, g.wrap_j(node.j, b as isize - 1));
                let jet = jet_at(field, nb)?;
                geo[a][b] = Some(evaluate(&jet, slack)?);
                eta[a][b] = -jet.u.sinh();
                ch2[a][b] = jet.u.cosh().powi(2);
                dudu[a][b] = jet.du * jet.du.transpose();
                let (sh, ch) = (jet.u.sinh(), jet.u.cosh());
                let q = ch / spacelike_margin(&jet).sqrt();
                x[a][b] = q * (jet.hess - 2.0 * (sh / ch) * dudu[a][b]);
                y[a][b] = q * sh * ch;
            }
        }
        Ok(Self {
            geo: geo.map(|r| r.map(Option::unwrap)),
            eta,
            ch2,
            dudu,
            x,
            y,
            theta: g.theta(node.i),
            ht: g.h_theta(),
            hp: g.h_phi(),
        })
    }

    fn center(&self) -> &GeometryEval {
        &self.geo[1][1]
    }

    fn map<T: Copy>(&self, f: impl Fn(&GeometryEval) -> T) -> [[T; 3]; 3] {
        self.geo.map(|r| r.map(|e| f(&e)))
    }

    fn sigma_derivative(&self) -> (Matrix2<f64>, [Matrix2<f64>; 2]) {
        let (s, c) = self.theta.sin_cos();
        (Matrix2::new(1.0, 0.0, 0.0, s * s), [Matrix2::new(0.0, 0.0, 0.0, 2.0 * s * c), Matrix2::zeros()])
    }

    /// `[∂_θ A, ∂_φ A]`.
    fn form_derivatives(&self) -> [Matrix2<f64>; 2] {
        let (sigma, ds) = self.sigma_derivative();
        let dx = d1(&self.x, self.ht, self.hp);
        let dy = d1(&self.y, self.ht, self.hp);
        let y = self.y[1][1];
        [0, 1].map(|k| dx[k] + sigma * dy[k] + ds[k] * y)
    }

    /// `[∂_θ G, ∂_φ G]` and `[∂_θθ G, ∂_θφ G, ∂_φφ G]`.
    fn metric_derivatives(&self) -> ([Matrix2<f64>; 2], [Matrix2<f64>; 3]) {
        let (ht, hp) = (self.ht, self.hp);
        let (s, c) = self.theta.sin_cos();
        let sigma = Matrix2::new(1.0, 0.0, 0.0, s * s);
        let z = Matrix2::zeros();
        // σ depends on θ only: σ_φφ = sin²θ, σ' = sin 2θ, σ'' = 2 cos 2θ.
        let ds = [Matrix2::new(0.0, 0.0, 0.0, 2.0 * s * c), z];
        let d2s = [Matrix2::new(0.0, 0.0, 0.0, 2.0 * (c * c - s * s)), z, z];
        let p = self.ch2[1][1];
        let dp = d1(&self.ch2, ht, hp);
        let d2p = d2(&self.ch2, ht, hp);
        let dd = d1(&self.dudu, ht, hp);
        let d2d = d2(&self.dudu, ht, hp);
        let first = [0, 1].map(|k| sigma * dp[k] + ds[k] * p - dd[k]);
        let pairs = [(0, 0), (0, 1), (1, 1)];
        let second = [0, 1, 2].map(|m| {
            let (a, b) = pairs[m];
            sigma * d2p[m] + ds[b] * dp[a] + ds[a] * dp[b] + d2s[m] * p - d2d[m]
        });
        (first, second)
    }
}

fn d1<T>(v: &[[T; 3]; 3], ht: f64, hp: f64) -> [T; 2]
where
    T: Copy + Sub<Output = T> + Mul<f64, Output = T>,
{
    [(v[2][1] - v[0][1]) * (0.5 / ht), (v[1][2] - v[1][0]) * (0.5 / hp)]
}

/// `[∂θθ, ∂θφ, ∂φφ]`.
fn d2<T>(v: &[[T; 3]; 3], ht: f64, hp: f64) -> [T; 3]
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    [
        (v[2][1] - v[1][1] * 2.0 + v[0][1]) * (1.0 / (ht * ht)),
        (v[2][2] - v[2][0] - v[0][2] + v[0][0]) * (0.25 / (ht * hp)),
        (v[1][2] - v[1][1] * 2.0 + v[1][0]) * (1.0 / (hp * hp)),
    ]
}

fn sym(d: [f64; 3]) -> Matrix2<f64> {
    Matrix2::new(d[0], d[1], d[1], d[2])
}

/// `gamma[k][(i, j)] = Γ^k_ij` of the metric from its inverse and partials.
fn christoffel(g_inv: &Matrix2<f64>, dg: &[Matrix2<f64>; 2]) -> [Matrix2<f64>; 2] {
    let mut out = [Matrix2::zeros(); 2];
    for (k, gk) in out.iter_mut().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for l in 0..2 {
                    s += g_inv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                gk[(i, j)] = 0.5 * s;
            }
        }
    }
    out
}

/// Covariant Hessian of a scalar from its coordinate partials.
fn scalar_hessian(d2s: [f64; 3], ds: [f64; 2], gamma: &[Matrix2<f64>; 2]) -> Matrix2<f64> {
    sym(d2s) - gamma[0] * ds[0] - gamma[1] * ds[1]
}

/// `nabla[n][(i, j)] = ∇_n A_ij = ∂_n A_ij − Γ^r_ni A_rj − Γ^r_nj A_ir`.
fn covariant_derivative(a: &Matrix2<f64>, da: &[Matrix2<f64>; 2], gamma: &[Matrix2<f64>; 2]) -> [Matrix2<f64>; 2] {
    let mut out = [Matrix2::zeros(); 2];
    for n in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let mut v = da[n][(i, j)];
                for r in 0..2 {
                    v -= gamma[r][(n, i)] * a[(r, j)] + gamma[r][(n, j)] * a[(i, r)];
                }
                out[n][(i, j)] = v;
            }
        }
    }
    out
}

/// Residuals at `node` of
/// 1. `∇_ij η + τ A_ij + η g_ij`,
/// 2. `∇_j τ + g^{ik} A_kj ∇_i η`,
/// 3. `∇_j∇_i τ + g^{mn} ∇_n A_ij ∇_m η − τ A_mj g^{mn} A_ni − A_ij η`.
pub fn verify_prop1(field: &ScalarField, node: Node, slack: f64) -> Result<[IdentityResidual; 3]> {
    let p = Patch::new(field, node, slack)?;
    let c = p.center();
    let (ht, hp) = (p.ht, p.hp);
    let gamma = christoffel(&c.g_inv, &p.metric_derivatives().0);

    let d_eta = d1(&p.eta, ht, hp);
    let hess_eta = scalar_hessian(d2(&p.eta, ht, hp), d_eta, &gamma);
    let r1 = hess_eta + c.tau * c.a + c.eta * c.g;

    let taus = p.map(|e| e.tau);
    let d_tau = d1(&taus, ht, hp);
    let grad_eta = Vector2::new(d_eta[0], d_eta[1]);
    let r2 = Vector2::new(d_tau[0], d_tau[1]) + (grad_eta.transpose() * c.g_inv * c.a).transpose();

    let nabla_a = covariant_derivative(&c.a, &p.form_derivatives(), &gamma);
    let hess_tau = scalar_hessian(d2(&taus, ht, hp), d_tau, &gamma);
    let up_eta = c.g_inv * grad_eta;
    let r3 = hess_tau + nabla_a[0] * up_eta[0] + nabla_a[1] * up_eta[1]
        - c.tau * c.a * c.g_inv * c.a
        - c.a * c.eta;

    Ok([
        IdentityResidual::new(PROP1_NAMES[0], r1.abs().max(), ht),
        IdentityResidual::new(PROP1_NAMES[1], r2.abs().max(), ht),
        IdentityResidual::new(PROP1_NAMES[2], r3.abs().max(), ht),
    ])
}

/// Gaussian curvature from the metric and its first and second partials via
/// the Brioschi formula, with `(E, F, G)` the components of the metric.
fn brioschi(g: &Matrix2<f64>, dg: &[Matrix2<f64>; 2], d2g: &[Matrix2<f64>; 3]) -> f64 {
    let (e0, f0, g0) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
    let (e_u, e_v) = (dg[0][(0, 0)], dg[1][(0, 0)]);
    let (f_u, f_v) = (dg[0][(0, 1)], dg[1][(0, 1)]);
    let (g_u, g_v) = (dg[0][(1, 1)], dg[1][(1, 1)]);
    let e_vv = d2g[2][(0, 0)];
    let f_uv = d2g[1][(0, 1)];
    let g_uu = d2g[0][(1, 1)];
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let m1 = [
        [-0.5 * e_vv + f_uv - 0.5 * g_uu, 0.5 * e_u, f_u - 0.5 * e_v],
        [f_v - 0.5 * g_u, e0, f0],
        [0.5 * g_v, f0, g0],
    ];
    let m2 = [[0.0, 0.5 * e_v, 0.5 * g_u], [0.5 * e_v, e0, f0], [0.5 * g_u, f0, g0]];
    (det3(m1) - det3(m2)) / (e0 * g0 - f0 * f0).powi(2)
}

/// Intrinsic curvature of `G` at the node, by differencing `G`.
pub fn intrinsic_curvature(field: &ScalarField, node: Node, slack: f64) -> Result<f64> {
    let p = Patch::new(field, node, slack)?;
    let (dg, d2g) = p.metric_derivatives();
    Ok(brioschi(&p.center().g, &dg, &d2g))
}

/// Gauss residual `K(G) − (1 − λ₁λ₂)` and Codazzi residual
/// `max |∇_i A_jk − ∇_j A_ik|` at `node`.
pub fn gauss_codazzi_check(field: &ScalarField, node: Node, slack: f64) -> Result<[IdentityResidual; 2]> {
    let p = Patch::new(field, node, slack)?;
    let c = p.center();
    let ht = p.ht;
    let (dg, d2g) = p.metric_derivatives();
    let gauss = brioschi(&c.g, &dg, &d2g) - (1.0 - c.lambda[0] * c.lambda[1]);

    let gamma = christoffel(&c.g_inv, &dg);
    let nabla_a = covariant_derivative(&c.a, &p.form_derivatives(), &gamma);
    let mut codazzi: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for kk in 0..2 {
                codazzi = codazzi.max((nabla_a[i][(j, kk)] - nabla_a[j][(i, kk)]).abs());
            }
        }
    }
    Ok([
        IdentityResidual::new(GAUSS_CODAZZI_NAMES[0], gauss.abs(), ht),
        IdentityResidual::new(GAUSS_CODAZZI_NAMES[1], codazzi, ht),
    ])
}
