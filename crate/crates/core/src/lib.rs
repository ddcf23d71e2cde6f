//! Spacelike radial graphs in de Sitter space with prescribed `k`-curvature.
//!
//! The crate covers the pointwise extrinsic geometry of a graph `u` over a
//! latitude band of S², the curvature functions `H_k^{1/k}`, a damped Newton
//! solver for the Dirichlet problem `H_k^{1/k}(λ(A[u])) = ψ(ξ, u, τ)`, and the
//! verification harness behind the `kcurv` command line tool.

// `!(x > 0.0)` is how validation rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fields;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod rhs;
pub mod solver;
pub mod symmetric;

pub use error::{Error, Result};
pub use fields::{fitted_order, TrigField, TrigMode};
pub use geometry::{evaluate, GeometryEval, InducedMetric, DEFAULT_SLACK};
pub use grid::{jet_at, FieldJet, Node, ScalarField, SphericalGrid};
pub use rhs::{Mode, PsiBase, PsiEval, PsiModel, PsiPoint};
pub use solver::{solve, BoundaryData, JacobianMode, SolveConfig, SolveError, SolveReport};
pub use symmetric::{f_eval, CurvatureEval, CurvatureSpec};
