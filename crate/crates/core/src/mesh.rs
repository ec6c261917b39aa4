//! Graded one-dimensional meshes and their tensor products.
//!
//! Nodes crowd geometrically toward both ends of an interval: the map
//!
//! ```text
//! t(ξ) = ½ (1 + tanh(β (2ξ − 1)) / tanh β),   ξ = k / N,
//! ```
//!
//! is smooth, symmetric and, near each end, has consecutive spacings in the
//! ratio `exp(4β / N)`. [`Grading::Ratio`] picks `β` from a target boundary
//! ratio (1.15 by default), so finer meshes reach deeper into the boundary
//! layer; [`Grading::Stretch`] fixes `β`, so that halving the computational
//! spacing refines one fixed smooth map (the right setting for convergence
//! studies).
//!
//! Distances to both ends are stored separately from positions, so that
//! nodes a few ulps away from the far end still know their exact distance
//! to it.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Grading {
    /// Ratio between consecutive spacings at the ends of the interval.
    Ratio(f64),
    /// Fixed stretching parameter `β` (0 gives a uniform mesh).
    Stretch(f64),
}

impl Default for Grading {
    fn default() -> Self {
        Grading::Ratio(1.15)
    }
}

/// Number of cells per axis and the grading law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub cells: usize,
    pub grading: Grading,
}

impl MeshSpec {
    pub fn new(cells: usize) -> Self {
        Self {
            cells,
            grading: Grading::default(),
        }
    }

    pub fn with_grading(cells: usize, grading: Grading) -> Self {
        Self { cells, grading }
    }

    /// The stretching parameter used for an axis with `self.cells` cells.
    pub fn stretch(&self) -> f64 {
        match self.grading {
            Grading::Ratio(r) => self.cells as f64 * r.max(1.0).ln() / 4.0,
            Grading::Stretch(b) => b,
        }
    }
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self::new(64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh1d {
    lo: f64,
    hi: f64,
    nodes: Vec<f64>,
    dist_lo: Vec<f64>,
    dist_hi: Vec<f64>,
    spacing: Vec<f64>,
}

impl Mesh1d {
    pub fn new(lo: f64, hi: f64, spec: &MeshSpec) -> Self {
        let n = spec.cells.max(2);
        let beta = spec.stretch();
        let len = hi - lo;
        // t_k for the left half; the right half is its mirror image.
        let t = |k: usize| -> f64 {
            let xi = k as f64 / n as f64;
            if beta.abs() < 1e-9 {
                xi
            } else {
                // ½(1 + tanh(β(2ξ−1))/tanh β), rewritten without cancellation near ξ = 0.
                0.5 * (2.0 * beta * xi).sinh() / (beta.sinh() * (beta * (1.0 - 2.0 * xi)).cosh())
            }
        };
        let mut dist_lo = vec![0.0; n + 1];
        let mut dist_hi = vec![0.0; n + 1];
        for k in 0..=n / 2 {
            dist_lo[k] = len * t(k);
            dist_hi[n - k] = dist_lo[k];
        }
        for k in 0..=n {
            if 2 * k < n {
                dist_hi[k] = len - dist_lo[k];
            } else if 2 * k > n {
                dist_lo[k] = len - dist_hi[k];
            }
        }
        let nodes: Vec<f64> = (0..=n)
            .map(|k| if 2 * k <= n { lo + dist_lo[k] } else { hi - dist_hi[k] })
            .collect();
        let spacing: Vec<f64> = (0..n)
            .map(|k| {
                if 2 * (k + 1) <= n {
                    dist_lo[k + 1] - dist_lo[k]
                } else if 2 * k >= n {
                    dist_hi[k] - dist_hi[k + 1]
                } else {
                    nodes[k + 1] - nodes[k]
                }
            })
            .collect();
        Self {
            lo,
            hi,
            nodes,
            dist_lo,
            dist_hi,
            spacing,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> f64 {
        self.nodes[k]
    }

    /// Distance from node `k` to the lower end.
    pub fn dist_lo(&self, k: usize) -> f64 {
        self.dist_lo[k]
    }

    /// Distance from node `k` to the upper end.
    pub fn dist_hi(&self, k: usize) -> f64 {
        self.dist_hi[k]
    }

    /// `h_k = x_{k+1} − x_k`.
    pub fn spacing(&self, k: usize) -> f64 {
        self.spacing[k]
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    /// Trapezoid weight of node `k` (half cells at the ends).
    pub fn weight(&self, k: usize) -> f64 {
        let n = self.cells();
        match k {
            0 => self.spacing[0] / 2.0,
            k if k == n => self.spacing[n - 1] / 2.0,
            k => (self.spacing[k - 1] + self.spacing[k]) / 2.0,
        }
    }

    /// Three-point second-difference coefficients at interior node `k`,
    /// exact on quadratics: `f''(x_k) ≈ a f_{k−1} + b f_k + c f_{k+1}`.
    pub fn second_difference(&self, k: usize) -> [f64; 3] {
        let (hm, hp) = (self.spacing[k - 1], self.spacing[k]);
        let a = 2.0 / (hm * (hm + hp));
        let c = 2.0 / (hp * (hm + hp));
        [a, -(a + c), c]
    }

    /// Centred first difference `(f_{k+1} − f_{k−1}) / (x_{k+1} − x_{k−1})`,
    /// exact on affine functions; used for mixed derivatives because it keeps
    /// the discrete operators in summation-by-parts form.
    pub fn centred_difference(&self, k: usize) -> [f64; 2] {
        let c = 1.0 / (self.spacing[k - 1] + self.spacing[k]);
        [-c, c]
    }

    /// Three-point first-difference coefficients at interior node `k`, exact on quadratics.
    pub fn first_difference(&self, k: usize) -> [f64; 3] {
        let (hm, hp) = (self.spacing[k - 1], self.spacing[k]);
        [-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp))]
    }

    /// Number of cells separating node `k` from the nearer end.
    pub fn layer(&self, k: usize) -> usize {
        k.min(self.cells() - k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_when_unstretched() {
        let m = Mesh1d::new(0.0, 2.0, &MeshSpec::with_grading(4, Grading::Stretch(0.0)));
        assert_eq!(m.nodes(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(m.weight(0), 0.25);
        assert_eq!(m.weight(2), 0.5);
    }

    #[test]
    fn graded_mesh_is_symmetric_and_crowds_to_the_ends() {
        let m = Mesh1d::new(0.0, 1.0, &MeshSpec::new(64));
        let n = m.cells();
        for k in 0..=n {
            assert_eq!(m.dist_lo(k), m.dist_hi(n - k));
        }
        assert!(m.spacing(0) < m.spacing(n / 2) / 10.0);
        assert_relative_eq!(m.spacing(1) / m.spacing(0), 1.15, epsilon = 1e-2);
        let total: f64 = (0..=n).map(|k| m.weight(k)).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn differences_are_exact_on_quadratics() {
        let m = Mesh1d::new(-1.0, 3.0, &MeshSpec::new(16));
        let f = |x: f64| 3.0 * x * x - 2.0 * x + 1.0;
        for k in 1..m.cells() {
            let [a, b, c] = m.second_difference(k);
            let d2 = a * f(m.node(k - 1)) + b * f(m.node(k)) + c * f(m.node(k + 1));
            assert_relative_eq!(d2, 6.0, epsilon = 1e-8);
            let [a, b, c] = m.first_difference(k);
            let d1 = a * f(m.node(k - 1)) + b * f(m.node(k)) + c * f(m.node(k + 1));
            assert_relative_eq!(d1, 6.0 * m.node(k) - 2.0, epsilon = 1e-8, max_relative = 1e-8);
        }
    }
}
