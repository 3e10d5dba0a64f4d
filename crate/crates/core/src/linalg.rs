//! Symmetric banded matrices with an in-place Cholesky factorization.

use alloc::vec;
use alloc::vec::Vec;

/// Lower band of a symmetric matrix; row `i` stores columns `i-bw ..= i`.
#[derive(Debug, Clone)]
pub(crate) struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandMatrix {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (i - j)
    }

    /// Add `v` at `(i, j)`; the mirrored entry is implied.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    #[cfg(test)]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Replace row and column `i` by the identity row.
    pub fn pin(&mut self, i: usize) {
        let lo = i.saturating_sub(self.bw);
        for j in lo..i {
            let k = self.idx(i, j);
            self.data[k] = 0.0;
        }
        for r in i + 1..(i + self.bw + 1).min(self.n) {
            let k = self.idx(r, i);
            self.data[k] = 0.0;
        }
        let k = self.idx(i, i);
        self.data[k] = 1.0;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.data[self.idx(i, i)]).collect()
    }

    #[cfg(test)]
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// Factor in place as `L L^T`. Fails on a non-positive pivot.
    pub fn cholesky(mut self) -> Option<Cholesky> {
        let (n, bw) = (self.n, self.bw);
        for j in 0..n {
            let lo = j.saturating_sub(bw);
            let mut s = self.data[self.idx(j, j)];
            for k in lo..j {
                let l = self.data[self.idx(j, k)];
                s -= l * l;
            }
            if !(s > 0.0) || !s.is_finite() {
                return None;
            }
            let pivot = crate::math::sqrt(s);
            let kjj = self.idx(j, j);
            self.data[kjj] = pivot;
            for i in j + 1..(j + bw + 1).min(n) {
                let lo_i = i.saturating_sub(bw).max(lo);
                let mut s = self.data[self.idx(i, j)];
                for k in lo_i..j {
                    s -= self.data[self.idx(i, k)] * self.data[self.idx(j, k)];
                }
                let kij = self.idx(i, j);
                self.data[kij] = s / pivot;
            }
        }
        Some(Cholesky(self))
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Cholesky(BandMatrix);

impl Cholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = &self.0;
        let (n, bw) = (m.n, m.bw);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = y[i];
            for k in lo..i {
                s -= m.data[m.idx(i, k)] * y[k];
            }
            y[i] = s / m.data[m.idx(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for r in i + 1..(i + bw + 1).min(n) {
                s -= m.data[m.idx(r, i)] * y[r];
            }
            y[i] = s / m.data[m.idx(i, i)];
        }
        y
    }
}
