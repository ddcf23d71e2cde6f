//! Banded LU with partial pivoting.
//!
//! Row `i` keeps the window of columns `i − kl ..= i + kl + ku`, which is wide
//! enough to hold the fill created by row interchanges. Multipliers are kept
//! apart from `U` and replayed in the solve together with the pivots.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.kl + self.ku {
            return 0.0;
        }
        self.data[self.slot(i, j)]
    }

    /// Adds `v` to entry `(i, j)`, which must lie in the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        if !self.in_band(i, j) {
            return Err(Error::Domain(format!(
                "entry ({i}, {j}) is outside the band (kl = {}, ku = {})",
                self.kl, self.ku
            )));
        }
        let s = self.slot(i, j);
        self.data[s] += v;
        Ok(())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn factor(mut self) -> Result<BandedLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut piv = vec![0; n];
        let mut mult = vec![0.0; n * kl];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for r in k + 1..=last_row {
                let v = self.get(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::Domain(format!("matrix is singular at column {k}")));
            }
            piv[k] = p;
            if p != k {
                for c in k..=last_col {
                    let (a, b) = (self.slot(k, c), self.slot(p, c));
                    self.data.swap(a, b);
                }
            }
            let d = self.get(k, k);
            for r in k + 1..=last_row {
                let l = self.get(r, k) / d;
                mult[k * kl + (r - k - 1)] = l;
                if l == 0.0 {
                    continue;
                }
                for c in k + 1..=last_col {
                    let u = self.data[self.slot(k, c)];
                    let s = self.slot(r, c);
                    self.data[s] -= l * u;
                }
            }
        }
        Ok(BandedLu { u: self, piv, mult })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    u: BandedMatrix,
    piv: Vec<usize>,
    mult: Vec<f64>,
}

impl BandedLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, kl, ku) = (self.u.n, self.u.kl, self.u.ku);
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for k in 0..n {
            y.swap(k, self.piv[k]);
            for r in k + 1..=(k + kl).min(n - 1) {
                y[r] -= self.mult[k * kl + (r - k - 1)] * y[k];
            }
        }
        for k in (0..n).rev() {
            let mut s = y[k];
            for c in k + 1..=(k + kl + ku).min(n - 1) {
                s -= self.u.get(k, c) * y[c];
            }
            y[k] = s / self.u.get(k, k);
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_banded(n: usize, kl: usize, ku: usize, rng: &mut ChaCha8Rng) -> BandedMatrix {
        let mut m = BandedMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                m.add(i, j, rng.random_range(-1.0..1.0)).unwrap();
            }
        }
        m
    }

    #[test]
    fn matches_dense_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (n, kl, ku) in [(1, 0, 0), (5, 1, 1), (30, 4, 2), (40, 7, 7), (12, 11, 11)] {
            let m = random_banded(n, kl, ku, &mut rng);
            let dense = DMatrix::from_fn(n, n, |i, j| m.get(i, j));
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let expect = dense.clone().lu().solve(&DVector::from_vec(b.clone())).unwrap();
            let x = m.factor().unwrap().solve(&b);
            let err = x.iter().zip(expect.iter()).map(|(a, e)| (a - e).abs()).fold(0.0, f64::max);
            let scale = expect.amax().max(1.0);
            assert!(err <= 1e-10 * scale, "n={n} kl={kl} ku={ku} err={err}");
        }
    }

    // Zero leading diagonal forces a row interchange on the first step.
    #[test]
    fn pivots_when_needed() {
        let mut m = BandedMatrix::zeros(3, 1, 1);
        for (i, j, v) in [(0, 1, 1.0), (1, 0, 2.0), (1, 1, 1.0), (1, 2, 1.0), (2, 1, 1.0), (2, 2, 3.0)] {
            m.add(i, j, v).unwrap();
        }
        let b = m.mul_vec(&[1.0, -2.0, 0.5]);
        let x = m.factor().unwrap().solve(&b);
        for (a, e) in x.iter().zip([1.0, -2.0, 0.5]) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn out_of_band_and_singular() {
        let mut m = BandedMatrix::zeros(4, 1, 1);
        assert!(m.add(0, 2, 1.0).is_err());
        assert!(m.clone().factor().is_err());
        m.add(0, 0, 1.0).unwrap();
        assert!(m.factor().is_err());
    }
}
