//! Symmetric positive definite banded matrices and their Cholesky factors.
//!
//! Only the lower band is stored: row `i` holds `A[i][i − k]` for
//! `k = 0..=bandwidth`. Factorisation costs `O(n · b²)`, which is what makes
//! Newton steps on tensor-product meshes affordable.

#[derive(Debug, Clone, PartialEq)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bw: bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.bw, "entry ({i}, {j}) outside the band");
        i * (self.bw + 1) + (i - j)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi - lo > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Adds `v` to the symmetric pair `(i, j)`, `(j, i)` (once on the diagonal).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn add_diagonal(&mut self, d: &[f64], scale: f64) {
        for (i, di) in d.iter().enumerate() {
            let s = self.slot(i, i);
            self.data[s] += scale * di;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            y[i] += row[0] * x[i];
            for k in 1..=self.bw.min(i) {
                let j = i - k;
                y[i] += row[k] * x[j];
                y[j] += row[k] * x[i];
            }
        }
        y
    }

    /// Cholesky factorisation `A = L Lᵀ`. On failure returns the index of the
    /// first non-positive pivot.
    pub fn cholesky(&self) -> Result<BandedCholesky, usize> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut l = self.data.clone();
        for i in 0..n {
            let first = i.saturating_sub(bw);
            for j in first..=i {
                // L[i][j] = (A[i][j] − Σ_m L[i][m] L[j][m]) / L[j][j]
                let m0 = first.max(j.saturating_sub(bw));
                let mut s = l[i * w + (i - j)];
                for m in m0..j {
                    s -= l[i * w + (i - m)] * l[j * w + (j - m)];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(i);
                    }
                    l[i * w] = s.sqrt();
                } else {
                    l[i * w + (i - j)] = s / l[j * w];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for j in i.saturating_sub(bw)..i {
                s -= self.l[i * w + (i - j)] * y[j];
            }
            y[i] = s / self.l[i * w];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..(i + w).min(n) {
                s -= self.l[j * w + (j - i)] * y[j];
            }
            y[i] = s / self.l[i * w];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_random_banded_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, bw) in &[(1, 0), (5, 1), (40, 3), (60, 10), (12, 20)] {
            let mut a = BandedSpd::zeros(n, bw);
            for i in 0..n {
                for j in i.saturating_sub(bw)..i {
                    a.add(i, j, rng.gen_range(-1.0..1.0));
                }
                a.add(i, i, 2.0 * bw as f64 + 1.0);
            }
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = a.mul_vec(&x);
            let y = a.cholesky().unwrap().solve(&b);
            for (xi, yi) in x.iter().zip(&y) {
                assert!((xi - yi).abs() < 1e-12, "{xi} vs {yi}");
            }
        }
    }

    #[test]
    fn reports_indefinite_pivot() {
        let mut a = BandedSpd::zeros(3, 1);
        a.add(0, 0, 1.0);
        a.add(1, 0, 2.0);
        a.add(1, 1, 1.0);
        a.add(2, 2, 1.0);
        assert_eq!(a.cholesky().unwrap_err(), 1);
        assert_eq!(a.get(0, 1), 2.0);
        assert_eq!(a.get(0, 2), 0.0);
    }
}
