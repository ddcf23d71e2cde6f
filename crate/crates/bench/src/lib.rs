//! Shared inputs for the criterion benchmarks.

use std::f64::consts::PI;

use kcurv::harness::manufactured_data;
use kcurv::solver::BandedMatrix;
use kcurv::{CurvatureSpec, PsiModel, SolveConfig, SphericalGrid};

pub fn band(n_theta: usize, n_phi: usize) -> SphericalGrid {
    SphericalGrid::new(PI / 4.0, 3.0 * PI / 4.0, n_theta, n_phi).expect("valid band")
}

/// Manufactured problem `u* = 0.5 + 0.1 sin θ sin φ` with `k = 2`.
pub fn manufactured(n_theta: usize, n_phi: usize) -> SolveConfig {
    let grid = band(n_theta, n_phi);
    let spec = CurvatureSpec::new(2, 2).expect("k = 2 fits n = 2");
    let (boundary, values) = manufactured_data(grid, spec, 0.5, 0.1, kcurv::DEFAULT_SLACK).expect("spacelike data");
    SolveConfig::new(grid, spec, boundary, PsiModel::CustomTable { values })
}

/// Diagonally dominant banded matrix with a deterministic fill.
pub fn banded(n: usize, kl: usize, ku: usize) -> BandedMatrix {
    let mut m = BandedMatrix::zeros(n, kl, ku);
    for i in 0..n {
        let lo = i.saturating_sub(kl);
        let hi = (i + ku).min(n - 1);
        for j in lo..=hi {
            let v = if i == j { 4.0 + (kl + ku) as f64 } else { ((i * 31 + j * 17) % 13) as f64 / 13.0 - 0.5 };
            m.add(i, j, v).expect("entry lies in the band");
        }
    }
    m
}
