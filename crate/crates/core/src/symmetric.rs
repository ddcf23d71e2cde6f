//! Elementary symmetric polynomials and the curvature function `f = H_k^{1/k}`.
//!
//! Everything here works for any dimension `n`; the geometry only ever feeds
//! `n = 2`, but the algebraic properties are checked on longer vectors too.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimension `n` and order `k` of the curvature function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurvatureSpec {
    n: usize,
    k: usize,
}

impl CurvatureSpec {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n < 2 || k < 1 || k > n {
            return Err(Error::OrderOutOfRange { k, n });
        }
        Ok(Self { n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// `f`, its gradient and the cone label at one eigenvalue vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureEval {
    pub value: f64,
    pub grad: Vec<f64>,
    pub lambda: Vec<f64>,
    pub admissible: bool,
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `e_0..=e_kmax` of the entries of `lambda` not listed in `skip`.
fn esym_table(lambda: &[f64], kmax: usize, skip: &[usize]) -> Vec<f64> {
    let mut e = vec![0.0; kmax + 1];
    e[0] = 1.0;
    let mut m = 0;
    for (idx, &x) in lambda.iter().enumerate() {
        if skip.contains(&idx) {
            continue;
        }
        m += 1;
        for j in (1..=kmax.min(m)).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e
}

fn esym_skip(lambda: &[f64], k: usize, skip: &[usize]) -> f64 {
    esym_table(lambda, k, skip)[k]
}

/// `S_k(λ)`, the sum over all k-subsets of products, via the recurrence
/// `e_k(λ_1..λ_m) = e_k(λ_1..λ_{m−1}) + λ_m e_{k−1}(λ_1..λ_{m−1})`.
pub fn elementary_symmetric(lambda: &[f64], k: usize) -> Result<f64> {
    if k > lambda.len() {
        return Err(Error::OrderOutOfRange { k, n: lambda.len() });
    }
    Ok(esym_skip(lambda, k, &[]))
}

/// `H_k = S_k / C(n, k)`, with `H_0 = 1`.
pub fn h_k(lambda: &[f64], k: usize) -> Result<f64> {
    Ok(elementary_symmetric(lambda, k)? / binomial(lambda.len(), k))
}

/// True iff `H_j(λ) > 0` for every `j = 1..=k`, which characterises the
/// component of `{H_k > 0}` that contains the positive orthant.
pub fn admissible(lambda: &[f64], spec: CurvatureSpec) -> bool {
    let n = lambda.len();
    let e = esym_table(lambda, spec.k.min(n), &[]);
    (1..=spec.k.min(n)).all(|j| e[j] / binomial(n, j) > 0.0)
}

fn root_k(h: f64, k: usize) -> f64 {
    if h >= 0.0 {
        h.powf(1.0 / k as f64)
    } else if k % 2 == 1 {
        -(-h).powf(1.0 / k as f64)
    } else {
        f64::NAN
    }
}

/// Evaluates `f = H_k^{1/k}` and `f_i = (1/k) H_k^{1/k−1} ∂H_k/∂λ_i`, using
/// `∂S_k/∂λ_i = S_{k−1}(λ | i)`. Inadmissible input is flagged, not rejected;
/// its derivatives carry no guarantees.
pub fn f_eval(lambda: &[f64], spec: CurvatureSpec) -> CurvatureEval {
    let n = lambda.len();
    assert_eq!(n, spec.n, "eigenvalue vector length must equal n");
    let k = spec.k;
    let c = binomial(n, k);
    let hk = esym_skip(lambda, k, &[]) / c;
    let value = root_k(hk, k);
    // (1/k) H^{1/k - 1} = value / (k H) for k > 1.
    let scale = if k == 1 { 1.0 } else { value / (k as f64 * hk) };
    let grad = (0..n).map(|i| scale * esym_skip(lambda, k - 1, &[i]) / c).collect();
    CurvatureEval { value, grad, lambda: lambda.to_vec(), admissible: admissible(lambda, spec) }
}

/// `∂²f/∂λ_i∂λ_j` from `∂²S_k/∂λ_i∂λ_j = S_{k−2}(λ | i, j)` (zero on the
/// diagonal) and the chain rule through `x ↦ x^{1/k}`.
pub fn second_derivatives(lambda: &[f64], spec: CurvatureSpec) -> DMatrix<f64> {
    let n = lambda.len();
    let k = spec.k;
    let mut out = DMatrix::zeros(n, n);
    if k == 1 {
        return out;
    }
    let c = binomial(n, k);
    let hk = esym_skip(lambda, k, &[]) / c;
    let value = root_k(hk, k);
    let kf = k as f64;
    let dh: Vec<f64> = (0..n).map(|i| esym_skip(lambda, k - 1, &[i]) / c).collect();
    let a = value / (kf * hk);
    let b = (1.0 / kf - 1.0) * value / (kf * hk * hk);
    for i in 0..n {
        for j in 0..n {
            let hij = if i == j { 0.0 } else { esym_skip(lambda, k - 2, &[i, j]) / c };
            out[(i, j)] = a * hij + b * dh[i] * dh[j];
        }
    }
    out
}

/// Eigenvalue gap below which the quotient `(f_i − f_j)/(λ_i − λ_j)` is
/// replaced by its limit.
pub fn degenerate_tolerance(lambda: &[f64]) -> f64 {
    1e-9 * lambda.iter().fold(1.0_f64, |m, x| m.max(x.abs()))
}

/// `F^{ij,kl} η_ij η_kl` at a diagonal `A = diag(λ)`:
/// `Σ f_ij η_ii η_jj + Σ_{i≠j} (f_i − f_j)/(λ_i − λ_j) η_ij²`.
///
/// For (nearly) equal eigenvalues the quotient is read as its limit
/// `½(f_ii + f_jj) − f_ij`.
pub fn hessian_contract(lambda: &[f64], spec: CurvatureSpec, eta: &DMatrix<f64>) -> Result<f64> {
    let n = lambda.len();
    assert_eq!(eta.shape(), (n, n));
    let ev = f_eval(lambda, spec);
    if !ev.admissible {
        return Err(Error::Inadmissible(lambda.to_vec()));
    }
    let d2 = second_derivatives(lambda, spec);
    let tol = degenerate_tolerance(lambda);
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            sum += d2[(i, j)] * eta[(i, i)] * eta[(j, j)];
            if i != j {
                let gap = lambda[i] - lambda[j];
                let q = if gap.abs() < tol {
                    0.5 * (d2[(i, i)] + d2[(j, j)]) - d2[(i, j)]
                } else {
                    (ev.grad[i] - ev.grad[j]) / gap
                };
                sum += q * eta[(i, j)] * eta[(i, j)];
            }
        }
    }
    Ok(sum)
}

/// `H_k² − H_{k+1} H_{k−1}` (with `H_0 = 1`), nonnegative for every real λ.
pub fn newton_maclaurin_check(lambda: &[f64], spec: CurvatureSpec) -> Result<f64> {
    let n = lambda.len();
    let k = spec.k;
    if k >= n {
        return Err(Error::OrderOutOfRange { k: k + 1, n });
    }
    let e = esym_table(lambda, k + 1, &[]);
    let h = |j: usize| e[j] / binomial(n, j);
    Ok(h(k) * h(k) - h(k + 1) * h(k - 1))
}

/// `Σ F^{ii} λ_i² − (1/n) S_k^{1/k} S_1` where `F = S_k^{1/k}`.
///
/// The right-hand side is stated with unnormalised `S_k`, so the left-hand
/// side uses the derivatives of `S_k^{1/k}` as well; the margin equals
/// `C(n,k)^{1/k} (Σ f_i λ_i² − f H_1)` for the normalised `f = H_k^{1/k}`.
pub fn lower_bound_check(lambda: &[f64], spec: CurvatureSpec) -> f64 {
    let n = lambda.len();
    let k = spec.k;
    let sk = esym_skip(lambda, k, &[]);
    let s1: f64 = lambda.iter().sum();
    let fs = root_k(sk, k);
    let scale = if k == 1 { 1.0 } else { fs / (k as f64 * sk) };
    let lhs: f64 = (0..n)
        .map(|i| scale * esym_skip(lambda, k - 1, &[i]) * lambda[i] * lambda[i])
        .sum();
    lhs - fs * s1 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec(n: usize, k: usize) -> CurvatureSpec {
        CurvatureSpec::new(n, k).unwrap()
    }

    // Brute-force S_k by subset enumeration, independent of the recurrence.
    fn subset_sum(lambda: &[f64], k: usize) -> f64 {
        let n = lambda.len();
        (0u32..(1 << n))
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| (0..n).filter(|i| m & (1 << i) != 0).map(|i| lambda[i]).product::<f64>())
            .sum()
    }

    #[test]
    fn elementary_examples() {
        assert_eq!(elementary_symmetric(&[1.0, 1.0, 1.0], 2).unwrap(), 3.0);
        assert_eq!(elementary_symmetric(&[1.0, 2.0, 3.0], 2).unwrap(), 11.0);
        assert_eq!(elementary_symmetric(&[1.0, 2.0, 3.0], 3).unwrap(), 6.0);
        assert!(elementary_symmetric(&[1.0, 2.0], 3).is_err());
    }

    #[test]
    fn h_k_examples() {
        for n in 2..7 {
            for k in 1..=n {
                assert_relative_eq!(h_k(&vec![1.0; n], k).unwrap(), 1.0, epsilon = 1e-14);
            }
        }
        assert_relative_eq!(h_k(&[1.0, 2.0, 3.0], 2).unwrap(), 11.0 / 3.0, epsilon = 1e-15);
        assert_eq!(h_k(&[2.0, 2.0], 1).unwrap(), 2.0);
    }

    #[test]
    fn spec_validation() {
        assert!(CurvatureSpec::new(2, 0).is_err());
        assert!(CurvatureSpec::new(2, 3).is_err());
        assert!(CurvatureSpec::new(1, 1).is_err());
    }

    #[test]
    fn f_eval_examples() {
        for n in 2..6 {
            for k in 1..=n {
                let ev = f_eval(&vec![1.0; n], spec(n, k));
                assert_relative_eq!(ev.value, 1.0, epsilon = 1e-14);
                for g in &ev.grad {
                    assert_relative_eq!(*g, 1.0 / n as f64, epsilon = 1e-14);
                }
            }
        }
        let ev = f_eval(&[3.0, -1.0, 0.5], spec(3, 1));
        assert_relative_eq!(ev.value, 2.5 / 3.0, epsilon = 1e-15);
        assert!(ev.grad.iter().all(|g| (*g - 1.0 / 3.0).abs() < 1e-15));
        let t = 0.7_f64.tanh();
        assert_relative_eq!(f_eval(&[t, t], spec(2, 2)).value, t, epsilon = 1e-15);
    }

    #[test]
    fn admissibility_examples() {
        assert!(admissible(&[0.1, 2.0, 5.0], spec(3, 3)));
        assert!(!admissible(&[-1.0, -1.0], spec(2, 2)));
        assert!(!admissible(&[2.0, 2.0, -1.0], spec(3, 2)));
        assert!(admissible(&[2.0, 2.0, -0.9], spec(3, 2)));
    }

    #[test]
    fn hessian_contract_k1_vanishes() {
        let eta = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, -2.0]);
        assert_eq!(hessian_contract(&[0.4, 0.1], spec(2, 1), &eta).unwrap(), 0.0);
        assert!(hessian_contract(&[-1.0, -1.0], spec(2, 2), &eta).is_err());
    }

    #[test]
    fn hessian_contract_diagonal_matches_fd() {
        let lambda = [1.3, 0.7, 0.2];
        let sp = spec(3, 2);
        let d = [0.4, -1.0, 0.6];
        let eta = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&d));
        let f = |t: f64| {
            let l: Vec<f64> = lambda.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            f_eval(&l, sp).value
        };
        let h = 1e-5;
        let fd = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
        let exact = hessian_contract(&lambda, sp, &eta).unwrap();
        assert_relative_eq!(fd, exact, max_relative = 1e-5);
    }

    #[test]
    fn hessian_contract_degenerate_limit_is_continuous() {
        let sp = spec(3, 3);
        let eta = DMatrix::from_row_slice(3, 3, &[0.2, 1.0, 0.3, 1.0, -0.5, 0.7, 0.3, 0.7, 0.1]);
        let exact = hessian_contract(&[1.0, 1.0, 0.5], sp, &eta).unwrap();
        let near = hessian_contract(&[1.0 + 1e-6, 1.0, 0.5], sp, &eta).unwrap();
        assert_relative_eq!(exact, near, max_relative = 1e-5);
    }

    #[test]
    fn newton_maclaurin_examples() {
        assert!(newton_maclaurin_check(&[1.0; 4], spec(4, 2)).unwrap().abs() < 1e-15);
        assert_relative_eq!(
            newton_maclaurin_check(&[1.0, 2.0, 3.0], spec(3, 1)).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-14
        );
        assert!(newton_maclaurin_check(&[1.0, 2.0], spec(2, 2)).is_err());
    }

    // At λ = (1,…,1): F^{ii}λ_i² = C(n,k)^{1/k} and (1/n) S_k^{1/k} S_1 = C(n,k)^{1/k}.
    #[test]
    fn lower_bound_equality_at_umbilic() {
        for n in 2..6 {
            for k in 1..=n {
                let m = lower_bound_check(&vec![1.0; n], spec(n, k));
                assert!(m.abs() < 1e-12, "n={n} k={k} m={m}");
            }
        }
        // k = 1: Σλ² − (Σλ)²/n.
        let l = [3.0, 1.0, 0.5];
        let expect = l.iter().map(|x| x * x).sum::<f64>() - 4.5f64.powi(2) / 3.0;
        assert_relative_eq!(lower_bound_check(&l, spec(3, 1)), expect, epsilon = 1e-13);
    }

    fn lambda_strategy() -> impl Strategy<Value = Vec<f64>> {
        (2usize..=5).prop_flat_map(|n| proptest::collection::vec(-3.0f64..3.0, n))
    }

    // Shifts along (1, ..., 1) until the point enters the cone; any vector
    // does after a large enough shift.
    fn into_cone(mut l: Vec<f64>, sp: CurvatureSpec) -> Vec<f64> {
        let mut shift = 0.05;
        while !admissible(&l, sp) {
            l.iter_mut().for_each(|x| *x += shift);
            shift *= 2.0;
        }
        l
    }

    fn admissible_strategy() -> impl Strategy<Value = (Vec<f64>, CurvatureSpec)> {
        lambda_strategy()
            .prop_flat_map(|l| {
                let n = l.len();
                (Just(l), 1..=n)
            })
            .prop_map(|(l, k)| {
                let sp = spec(l.len(), k);
                (into_cone(l, sp), sp)
            })
    }

    proptest! {
        #[test]
        fn recurrence_matches_enumeration(l in lambda_strategy(), k in 0usize..=5) {
            prop_assume!(k <= l.len());
            let a = elementary_symmetric(&l, k).unwrap();
            let b = subset_sum(&l, k);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }

        #[test]
        fn permutation_symmetry(l in lambda_strategy(), k in 1usize..=5, rot in 0usize..5) {
            let n = l.len();
            prop_assume!(k <= n);
            let mut p = l.clone();
            p.rotate_left(rot % n);
            p.swap(0, n - 1);
            let sp = spec(n, k);
            let (a, b) = (f_eval(&l, sp), f_eval(&p, sp));
            prop_assert_eq!(a.admissible, b.admissible);
            if a.admissible {
                prop_assert!((a.value - b.value).abs() <= 1e-12 * a.value.abs().max(1.0));
            }
            let ma = lower_bound_check(&l, sp);
            let mb = lower_bound_check(&p, sp);
            if ma.is_finite() {
                prop_assert!((ma - mb).abs() <= 1e-10 * (1.0 + ma.abs()));
            }
        }

        #[test]
        fn homogeneity((l, sp) in admissible_strategy(), t in 0.1f64..10.0) {
            let a = f_eval(&l, sp);
            prop_assert!(a.admissible);
            let scaled: Vec<f64> = l.iter().map(|x| t * x).collect();
            let b = f_eval(&scaled, sp);
            prop_assert!((b.value - t * a.value).abs() <= 1e-12 * t * a.value);
            for (ga, gb) in a.grad.iter().zip(&b.grad) {
                prop_assert!((ga - gb).abs() <= 1e-12 * ga.abs().max(1e-300) * 10.0);
            }
        }

        #[test]
        fn euler_identity_and_ellipticity((l, sp) in admissible_strategy()) {
            let ev = f_eval(&l, sp);
            prop_assert!(ev.admissible);
            let euler: f64 = ev.grad.iter().zip(&l).map(|(g, x)| g * x).sum();
            prop_assert!((euler - ev.value).abs() <= 1e-12 * ev.value.abs().max(1e-300) * 10.0);
            prop_assert!(ev.value > 0.0);
            prop_assert!(ev.grad.iter().all(|g| *g > 0.0));
        }

        #[test]
        fn newton_maclaurin_holds(l in lambda_strategy(), k in 1usize..5) {
            let n = l.len();
            prop_assume!(k < n);
            let m = newton_maclaurin_check(&l, spec(n, k)).unwrap();
            let scale = l.iter().fold(1.0f64, |a, x| a.max(x.abs())).powi(2 * k as i32);
            prop_assert!(m >= -1e-12 * scale);
        }
    }
}
