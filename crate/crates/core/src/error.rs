use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the pointwise geometry, grid and curvature routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid parameter `{param}`: {reason}")]
    InvalidGrid { param: &'static str, reason: String },

    #[error("theta = {theta} is too close to a pole (sin theta = {sin_theta:e} < sin_theta_floor = {floor:e})")]
    PoleProximity { theta: f64, sin_theta: f64, floor: f64 },

    #[error("node ({i}, {j}) has no interior stencil (needs {margin} rows to the theta boundary)")]
    Stencil { i: usize, j: usize, margin: usize },

    #[error("field length {got} does not match grid node count {expected}")]
    FieldShape { expected: usize, got: usize },

    #[error("field value at node {index} is not finite")]
    NonFinite { index: usize },

    #[error("graph is not spacelike: cosh^2 u - |grad u|^2 = {margin:e} is below the required slack")]
    NotSpacelike { margin: f64 },

    #[error("graph is not spacelike at node ({i}, {j}): margin {margin:e}")]
    NotSpacelikeAt { i: usize, j: usize, margin: f64 },

    #[error("principal curvatures {lambda:?} at node ({i}, {j}) leave the admissible cone")]
    InadmissibleAt { i: usize, j: usize, lambda: [f64; 2] },

    #[error("metric is not positive definite")]
    NotPositiveDefinite,

    #[error("curvature order k = {k} out of range for n = {n}")]
    OrderOutOfRange { k: usize, n: usize },

    #[error("principal curvatures {0:?} are not admissible")]
    Inadmissible(Vec<f64>),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid right-hand side model: {0}")]
    InvalidModel(String),
}
