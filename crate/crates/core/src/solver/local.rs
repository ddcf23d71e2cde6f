//! The residual at one node as a function of its 3×3 stencil, and its
//! derivative with respect to the nine stencil values.
//!
//! Jet variables are the coordinate partials
//! `v = (u, u_θ, u_φ, u_θθ, u_θφ, u_φφ)`. With `c = cosh u`, `s = sinh u`,
//! `S = sin θ`, `p = |∇u|²` and `m = c² − p`:
//!
//! * `A = q B` with `q = c / √m` and
//!   `B = ∇̃²u − 2 tanh(u) du du + s c σ`;
//! * `G = c² σ − du du`;
//! * `τ = c² / √m`.
//!
//! A principal curvature with `G`-unit eigenvector `x` moves by
//! `dλ = xᵀ(dA − λ dG)x`, so `df = ⟨F_A, dA⟩ − ⟨F_G, dG⟩` where
//! `F_A = Σ f_a x_a x_aᵀ` and `F_G = Σ f_a λ_a x_a x_aᵀ`.

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::geometry::{evaluate, pencil_eigen, spacelike_margin};
use crate::grid::{stencil_partials, stencil_weights, FieldJet, Node};
use crate::rhs::{PsiEval, PsiModel, PsiPoint};
use crate::symmetric::{f_eval, CurvatureSpec};

/// Data shared by every node of one residual evaluation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LocalCtx<'a> {
    pub spec: CurvatureSpec,
    pub psi: &'a PsiModel,
    pub slack: f64,
    /// Continuation parameter.
    pub t: f64,
    /// `tanh c₀`, the right-hand side at `t = 0`.
    pub psi_start: f64,
    pub h_theta: f64,
    pub h_phi: f64,
}

/// Where a node sits, for the right-hand side and for error reporting.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Site {
    pub node: Node,
    pub theta: f64,
    pub phi: f64,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeEval {
    pub r: f64,
    pub lambda: [f64; 2],
    pub tau: f64,
    pub u: f64,
    /// `(cosh²u − |∇u|²) / cosh²u`.
    pub spacelike_ratio: f64,
    pub admissible: bool,
    /// The target right-hand side at this node (`t = 1`).
    pub psi: PsiEval,
}

fn jet(site: &Site, v: &[f64; 6]) -> FieldJet {
    FieldJet::from_partials(site.theta, site.phi, v[0], v[1], v[2], v[3], v[4], v[5])
}

fn map_geometry_error(e: Error, node: Node) -> Error {
    match e {
        Error::NotSpacelike { margin } => Error::NotSpacelikeAt { i: node.i, j: node.j, margin },
        other => other,
    }
}

struct Core {
    eval: NodeEval,
    a: Matrix2<f64>,
    g: Matrix2<f64>,
}

fn core(ctx: &LocalCtx, site: &Site, v: &[f64; 6]) -> Result<Core> {
    let jet = jet(site, v);
    let geo = evaluate(&jet, ctx.slack).map_err(|e| map_geometry_error(e, site.node))?;
    let lambda = [geo.lambda[0], geo.lambda[1]];
    let ev = f_eval(&lambda, ctx.spec);
    if !ev.admissible {
        return Err(Error::InadmissibleAt { i: site.node.i, j: site.node.j, lambda });
    }
    let at = PsiPoint { theta: site.theta, phi: site.phi, u: jet.u, index: site.index };
    let psi = ctx.psi.eval(at, geo.tau)?;
    let r = ev.value - ((1.0 - ctx.t) * ctx.psi_start + ctx.t * psi.psi);
    let ch2 = jet.u.cosh().powi(2);
    Ok(Core {
        eval: NodeEval {
            r,
            lambda,
            tau: geo.tau,
            u: jet.u,
            spacelike_ratio: spacelike_margin(&jet) / ch2,
            admissible: ev.admissible,
            psi,
        },
        a: geo.a,
        g: geo.g,
    })
}

pub(crate) fn node_eval(ctx: &LocalCtx, site: &Site, s: &[[f64; 3]; 3]) -> Result<NodeEval> {
    let v = stencil_partials(s, ctx.h_theta, ctx.h_phi);
    core(ctx, site, &v).map(|c| c.eval)
}

fn frob(a: &Matrix2<f64>, b: &Matrix2<f64>) -> f64 {
    a.component_mul(b).sum()
}

/// `∂r/∂v` for the six jet variables.
fn jet_gradient(ctx: &LocalCtx, site: &Site, v: &[f64; 6], c: &Core) -> Result<[f64; 6]> {
    let [u, ut, up, utt, utp, upp] = *v;
    let (sh, ch) = (u.sinh(), u.cosh());
    let th = sh / ch;
    let (st, ct) = site.theta.sin_cos();
    let s2 = st * st;
    let p = ut * ut + up * up / s2;
    let m = ch * ch - p;
    let m32 = m * m.sqrt();
    let q = ch / m.sqrt();

    let b = Matrix2::new(
        utt - 2.0 * th * ut * ut + sh * ch,
        utp - ct / st * up - 2.0 * th * ut * up,
        utp - ct / st * up - 2.0 * th * ut * up,
        upp + st * ct * ut - 2.0 * th * up * up + sh * ch * s2,
    );
    let sym = |a: f64, b: f64, d: f64| Matrix2::new(a, b, b, d);
    let sech2 = 1.0 / (ch * ch);
    let dsc = ch * ch + sh * sh;

    let q_v = [-sh * p / m32, ch * ut / m32, ch * up / (s2 * m32), 0.0, 0.0, 0.0];
    let b_v = [
        sym(-2.0 * ut * ut * sech2 + dsc, -2.0 * ut * up * sech2, -2.0 * up * up * sech2 + dsc * s2),
        sym(-4.0 * th * ut, -2.0 * th * up, st * ct),
        sym(0.0, -ct / st - 2.0 * th * ut, -4.0 * th * up),
        sym(1.0, 0.0, 0.0),
        sym(0.0, 1.0, 0.0),
        sym(0.0, 0.0, 1.0),
    ];
    let g_v = [
        sym(2.0 * ch * sh, 0.0, 2.0 * ch * sh * s2),
        sym(-2.0 * ut, -up, 0.0),
        sym(0.0, -ut, -2.0 * up),
        Matrix2::zeros(),
        Matrix2::zeros(),
        Matrix2::zeros(),
    ];
    let tau_v = [
        ch * sh * (2.0 * m - ch * ch) / m32,
        ch * ch * ut / m32,
        ch * ch * up / (s2 * m32),
        0.0,
        0.0,
        0.0,
    ];

    let (lam, x) = pencil_eigen(&c.a, &c.g)?;
    let ev = f_eval(&[lam[0], lam[1]], ctx.spec);
    let mut fa = Matrix2::zeros();
    let mut fg = Matrix2::zeros();
    for a in 0..2 {
        let xa = x.column(a);
        let outer = xa * xa.transpose();
        fa += ev.grad[a] * outer;
        fg += ev.grad[a] * lam[a] * outer;
    }

    let psi = &c.eval.psi;
    let mut out = [0.0; 6];
    for k in 0..6 {
        let da = q_v[k] * b + q * b_v[k];
        let df = frob(&fa, &da) - frob(&fg, &g_v[k]);
        let dpsi = if k == 0 { psi.psi_u } else { 0.0 } + psi.psi_tau * tau_v[k];
        out[k] = df - ctx.t * dpsi;
    }
    Ok(out)
}

/// Residual and its exact derivative with respect to `s[a][b]`.
pub(crate) fn node_gradient(ctx: &LocalCtx, site: &Site, s: &[[f64; 3]; 3]) -> Result<(NodeEval, [[f64; 3]; 3])> {
    let v = stencil_partials(s, ctx.h_theta, ctx.h_phi);
    let c = core(ctx, site, &v)?;
    let dv = jet_gradient(ctx, site, &v, &c)?;
    let mut grad = [[0.0; 3]; 3];
    for (a, row) in grad.iter_mut().enumerate() {
        for (b, g) in row.iter_mut().enumerate() {
            let w = stencil_weights(a, b, ctx.h_theta, ctx.h_phi);
            *g = (0..6).map(|k| dv[k] * w[k]).sum();
        }
    }
    Ok((c.eval, grad))
}

/// Relative step for central differences of the residual.
pub const FD_STEP: f64 = 1e-6;

/// Central-difference derivative with respect to the stencil values whose
/// `free[a][b]` flag is set; other entries are zero.
pub(crate) fn node_gradient_fd(
    ctx: &LocalCtx,
    site: &Site,
    s: &[[f64; 3]; 3],
    free: &[[bool; 3]; 3],
) -> Result<(NodeEval, [[f64; 3]; 3])> {
    let eval = node_eval(ctx, site, s)?;
    let mut grad = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            if !free[a][b] {
                continue;
            }
            let h = FD_STEP * s[a][b].abs().max(1.0);
            let mut sp = *s;
            sp[a][b] += h;
            let mut sm = *s;
            sm[a][b] -= h;
            let rp = node_eval(ctx, site, &sp)?.r;
            let rm = node_eval(ctx, site, &sm)?.r;
            grad[a][b] = (rp - rm) / (2.0 * h);
        }
    }
    Ok((eval, grad))
}
