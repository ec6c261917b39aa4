//! Symplectic potentials, the toric metric and Abreu's scalar curvature.
//!
//! A torus-invariant Kähler metric on a toric manifold with moment polytope
//! `P` is encoded by a convex function `u` on `P`: in action–angle
//! coordinates the metric is `u_ab dx_a dx_b + u^{ab} dθ_a dθ_b`, and its
//! scalar curvature is Abreu's
//!
//! ```text
//! S = −½ Σ_ab ∂²u^{ab} / ∂x_a ∂x_b .
//! ```
//!
//! Smoothness across `∂P` is the requirement that `u − u₀` be smooth up to
//! the boundary, where `u₀ = Σ_k (ℓ_k / w_k) log ℓ_k` is Guillemin's
//! potential built from the lattice defining functions `ℓ_k = ⟨ν_k, x⟩ − c_k`
//! and the boundary weights `w_k`. A [`PotentialGrid`] stores only the smooth
//! part `φ = u − u₀` on a graded tensor mesh of a segment or rectangle;
//! `u₀` is always differentiated in closed form.
//!
//! Hessians are symmetric `2 × 2` matrices stored as `[xx, xy, yy]`; in
//! dimension one only the first slot is used.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh1d, MeshSpec};
use crate::polytope::{BoundaryMeasure, Polytope};
use crate::rational::to_f64;
use crate::stability::Quadratic;

/// A symmetric matrix of size one or two, stored as `[xx, xy, yy]`.
pub type Sym = [f64; 3];

/// `log det h`, or `None` when `h` is not positive definite.
pub fn sym_logdet(dim: usize, h: &Sym) -> Option<f64> {
    if dim == 1 {
        (h[0] > 0.0 && h[0].is_finite()).then(|| h[0].ln())
    } else {
        let det = h[0] * h[2] - h[1] * h[1];
        (h[0] > 0.0 && det > 0.0 && det.is_finite()).then(|| det.ln())
    }
}

pub fn sym_det(dim: usize, h: &Sym) -> f64 {
    if dim == 1 {
        h[0]
    } else {
        h[0] * h[2] - h[1] * h[1]
    }
}

pub fn sym_inverse(dim: usize, h: &Sym) -> Sym {
    if dim == 1 {
        [1.0 / h[0], 0.0, 0.0]
    } else {
        let det = h[0] * h[2] - h[1] * h[1];
        [h[2] / det, -h[1] / det, h[0] / det]
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn sym_min_eigenvalue(dim: usize, h: &Sym) -> f64 {
    if dim == 1 {
        h[0]
    } else {
        let m = 0.5 * (h[0] + h[2]);
        let r = (0.25 * (h[0] - h[2]).powi(2) + h[1] * h[1]).sqrt();
        m - r
    }
}

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

fn facet_data(p: &Polytope, sigma: &BoundaryMeasure) -> Result<Vec<(Vec<f64>, f64, f64)>> {
    sigma.check(p)?;
    Ok(p.facets()
        .iter()
        .zip(&sigma.weights)
        .map(|(f, w)| (f.normal.iter().map(|&v| v as f64).collect(), to_f64(&f.offset), to_f64(w)))
        .collect())
}

/// Guillemin's potential `u₀(x) = Σ_k (ℓ_k / w_k) log ℓ_k`, extended by
/// continuity (`0 log 0 = 0`) to the boundary.
pub fn guillemin_value(p: &Polytope, sigma: &BoundaryMeasure, x: &[f64]) -> Result<f64> {
    Ok(facet_data(p, sigma)?
        .iter()
        .map(|(nu, c, w)| {
            let l: f64 = nu.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - c;
            xlogx(l.max(0.0)) / w
        })
        .sum())
}

fn interior_ells(p: &Polytope, sigma: &BoundaryMeasure, x: &[f64]) -> Result<Vec<(Vec<f64>, f64, f64)>> {
    let data = facet_data(p, sigma)?;
    let mut out = Vec::with_capacity(data.len());
    for (nu, c, w) in data {
        let l: f64 = nu.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - c;
        if l <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "{x:?} is not an interior point; derivatives of u₀ exist only on int P"
            )));
        }
        out.push((nu, l, w));
    }
    Ok(out)
}

/// `∇u₀ = Σ_k ν_k (log ℓ_k + 1) / w_k` at an interior point.
pub fn guillemin_gradient(p: &Polytope, sigma: &BoundaryMeasure, x: &[f64]) -> Result<Vec<f64>> {
    let mut g = vec![0.0; x.len()];
    for (nu, l, w) in interior_ells(p, sigma, x)? {
        for (gi, ni) in g.iter_mut().zip(&nu) {
            *gi += ni * (l.ln() + 1.0) / w;
        }
    }
    Ok(g)
}

/// `D²u₀ = Σ_k ν_k ν_kᵀ / (w_k ℓ_k)` at an interior point, as `[xx, xy, yy]`.
pub fn guillemin_hessian(p: &Polytope, sigma: &BoundaryMeasure, x: &[f64]) -> Result<Sym> {
    if p.dim() > 2 {
        return Err(Error::UnsupportedDimension {
            dim: p.dim(),
            what: "Hessians",
        });
    }
    let mut h = [0.0; 3];
    for (nu, l, w) in interior_ells(p, sigma, x)? {
        let s = 1.0 / (w * l);
        h[0] += s * nu[0] * nu[0];
        if nu.len() == 2 {
            h[1] += s * nu[0] * nu[1];
            h[2] += s * nu[1] * nu[1];
        }
    }
    Ok(h)
}

/// Which reference potential `u₀` sits underneath the grid values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// Guillemin's `Σ (ℓ_k / w_k) log ℓ_k`; `u = u₀ + φ`.
    Guillemin,
    /// No reference; `u = φ` (for smooth test potentials).
    Zero,
}

/// How Hessians of `u` are formed at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HessianMode {
    /// `D²u₀` in closed form plus finite differences of `φ`.
    Hybrid,
    /// Finite differences of the sampled values of `u = u₀ + φ`.
    Sampled,
}

/// One term `coef · value[node]` of a finite-difference Hessian component
/// (`comp` is 0 for `xx`, 1 for `xy`, 2 for `yy`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Term {
    pub comp: usize,
    pub node: usize,
    pub coef: f64,
}

/// Metric data at one interior node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub point: Vec<f64>,
    /// `(u_ab)`, the metric on the moment-map directions.
    pub g_xx: Vec<Vec<f64>>,
    /// `(u^{ab})`, the metric on the torus directions.
    pub g_theta: Vec<Vec<f64>>,
    pub scalar_curvature: f64,
}

impl MetricSample {
    /// `‖G_xx G_θθ − I‖_max`.
    pub fn inverse_defect(&self) -> f64 {
        let n = self.g_xx.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| self.g_xx[i][k] * self.g_theta[k][j]).sum();
                worst = worst.max((s - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }

    /// Spectral condition number of `G_xx`.
    pub fn condition(&self) -> f64 {
        let h = to_sym(&self.g_xx);
        let n = self.g_xx.len();
        let lo = sym_min_eigenvalue(n, &h);
        let hi = if n == 1 { h[0] } else { h[0] + h[2] - lo };
        hi / lo
    }
}

fn to_matrix(dim: usize, h: &Sym) -> Vec<Vec<f64>> {
    if dim == 1 {
        vec![vec![h[0]]]
    } else {
        vec![vec![h[0], h[1]], vec![h[1], h[2]]]
    }
}

fn to_sym(m: &[Vec<f64>]) -> Sym {
    if m.len() == 1 {
        [m[0][0], 0.0, 0.0]
    } else {
        [m[0][0], m[0][1], m[1][1]]
    }
}

/// A discretised symplectic potential `u = u₀ + φ` on a segment or an
/// axis-parallel rectangle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialGrid {
    polytope: Polytope,
    measure: BoundaryMeasure,
    spec: MeshSpec,
    axes: Vec<Mesh1d>,
    /// `[w_lo, w_hi]` per axis.
    weights: Vec<[f64; 2]>,
    reference: Reference,
    a: f64,
    phi: Vec<f64>,
}

impl PotentialGrid {
    pub fn new(p: &Polytope, sigma: &BoundaryMeasure, spec: &MeshSpec, reference: Reference) -> Result<Self> {
        sigma.check(p)?;
        let shape = p.as_box().ok_or_else(|| {
            Error::UnsupportedDomain(
                "potential grids need a segment or an axis-parallel rectangle".into(),
            )
        })?;
        if spec.cells < 4 {
            return Err(Error::InvalidArgument("a mesh needs at least 4 cells per axis".into()));
        }
        let axes: Vec<Mesh1d> = (0..p.dim())
            .map(|a| Mesh1d::new(to_f64(&shape.lo[a]), to_f64(&shape.hi[a]), spec))
            .collect();
        let weights = shape
            .facet_of
            .iter()
            .map(|[lo, hi]| [to_f64(&sigma.weights[*lo]), to_f64(&sigma.weights[*hi])])
            .collect();
        let a = to_f64(&p.measures(sigma)?.a);
        let len = axes.iter().map(|m| m.len()).product();
        Ok(Self {
            polytope: p.clone(),
            measure: sigma.clone(),
            spec: *spec,
            axes,
            weights,
            reference,
            a,
            phi: vec![0.0; len],
        })
    }

    /// The Guillemin potential itself: `u = u₀`, `φ ≡ 0`.
    pub fn guillemin(p: &Polytope, sigma: &BoundaryMeasure, spec: &MeshSpec) -> Result<Self> {
        Self::new(p, sigma, spec, Reference::Guillemin)
    }

    pub fn polytope(&self) -> &Polytope {
        &self.polytope
    }

    pub fn measure(&self) -> &BoundaryMeasure {
        &self.measure
    }

    pub fn spec(&self) -> &MeshSpec {
        &self.spec
    }

    pub fn reference(&self) -> Reference {
        self.reference
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Mesh1d] {
        &self.axes
    }

    /// `A = Vol(∂P, dσ) / Vol(P)` in floating point.
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn phi_mut(&mut self) -> &mut [f64] {
        &mut self.phi
    }

    pub fn set_phi(&mut self, f: impl Fn(&[f64]) -> f64) {
        let vals: Vec<f64> = (0..self.len()).map(|i| f(&self.coords(i))).collect();
        self.phi = vals;
    }

    fn stride(&self) -> usize {
        self.axes[0].len()
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        if self.dim() == 1 {
            multi[0]
        } else {
            multi[0] + self.stride() * multi[1]
        }
    }

    pub fn multi(&self, idx: usize) -> [usize; 2] {
        if self.dim() == 1 {
            [idx, 0]
        } else {
            [idx % self.stride(), idx / self.stride()]
        }
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let m = self.multi(idx);
        (0..self.dim()).map(|a| self.axes[a].node(m[a])).collect()
    }

    /// Mesh layers between the node and `∂P` (0 on the boundary).
    pub fn layer(&self, idx: usize) -> usize {
        let m = self.multi(idx);
        (0..self.dim()).map(|a| self.axes[a].layer(m[a])).min().unwrap()
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        self.layer(idx) >= 1
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_interior(i)).collect()
    }

    /// Trapezoid weight of a node for `∫_P · dμ`.
    pub fn weight(&self, idx: usize) -> f64 {
        let m = self.multi(idx);
        (0..self.dim()).map(|a| self.axes[a].weight(m[a])).product()
    }

    /// Weight of a node in the trapezoid rule for `∫_∂P · dσ` (zero off the boundary).
    pub fn boundary_weight(&self, idx: usize) -> f64 {
        let m = self.multi(idx);
        let mut b = 0.0;
        for a in 0..self.dim() {
            let n = self.axes[a].cells();
            let side = if m[a] == 0 {
                0
            } else if m[a] == n {
                1
            } else {
                continue;
            };
            let along: f64 = (0..self.dim())
                .filter(|&o| o != a)
                .map(|o| self.axes[o].weight(m[o]))
                .product();
            b += self.weights[a][side] * along;
        }
        b
    }

    /// `u₀` at a node (zero for [`Reference::Zero`]).
    pub fn u0(&self, idx: usize) -> f64 {
        if self.reference == Reference::Zero {
            return 0.0;
        }
        let m = self.multi(idx);
        (0..self.dim())
            .map(|a| {
                let ax = &self.axes[a];
                let [wl, wh] = self.weights[a];
                xlogx(ax.dist_lo(m[a])) / wl + xlogx(ax.dist_hi(m[a])) / wh
            })
            .sum()
    }

    pub fn u(&self, idx: usize) -> f64 {
        self.u0(idx) + self.phi[idx]
    }

    /// Exact `∫_P log det D²u₀ dμ` for the Guillemin potential of the box.
    pub fn reference_logdet_integral(&self) -> f64 {
        if self.reference == Reference::Zero {
            return f64::NAN;
        }
        let lengths: Vec<f64> = self.axes.iter().map(|ax| ax.hi() - ax.lo()).collect();
        let mut total = 0.0;
        for a in 0..self.dim() {
            let len = lengths[a];
            let [wl, wh] = self.weights[a];
            // log(1/(wl x) + 1/(wh (len − x))) = log(wh len + (wl − wh) x) − log(wl wh) − log x − log(len − x)
            let m = wl - wh;
            let first = if m.abs() < 1e-300 {
                len * (wh * len).ln()
            } else {
                let g = |c: f64| c * c.ln() - c;
                (g(wl * len) - g(wh * len)) / m
            };
            let one_axis = first - len * (wl * wh).ln() - 2.0 * (len * len.ln() - len);
            let others: f64 = (0..self.dim()).filter(|&o| o != a).map(|o| lengths[o]).product();
            total += one_axis * others;
        }
        total
    }

    /// Exact `L(u₀) = ∫_∂P u₀ dσ − A ∫_P u₀ dμ` for the Guillemin potential of the box.
    pub fn reference_functional(&self) -> f64 {
        if self.reference == Reference::Zero {
            return 0.0;
        }
        let n = self.dim();
        let len: Vec<f64> = self.axes.iter().map(|ax| ax.hi() - ax.lo()).collect();
        // ∫ over axis a of (d_lo/w_lo) log d_lo + (d_hi/w_hi) log d_hi
        let j = |a: usize| {
            let [wl, wh] = self.weights[a];
            (1.0 / wl + 1.0 / wh) * (len[a] * len[a] / 2.0 * len[a].ln() - len[a] * len[a] / 4.0)
        };
        let prod_except = |skip: &[usize]| -> f64 { (0..n).filter(|o| !skip.contains(o)).map(|o| len[o]).product() };
        let interior: f64 = (0..n).map(|a| j(a) * prod_except(&[a])).sum();
        let mut boundary = 0.0;
        for a in 0..n {
            for side in 0..2 {
                let w = self.weights[a][side];
                let other = self.weights[a][1 - side];
                let mut on_facet = len[a] * len[a].ln() / other * prod_except(&[a]);
                for b in (0..n).filter(|&b| b != a) {
                    on_facet += j(b) * prod_except(&[a, b]);
                }
                boundary += w * on_facet;
            }
        }
        boundary - self.a * interior
    }

    /// Closed-form `D²u₀` at an interior node.
    pub fn reference_hessian(&self, idx: usize) -> Sym {
        if self.reference == Reference::Zero {
            return [0.0; 3];
        }
        let m = self.multi(idx);
        let mut h = [0.0; 3];
        for a in 0..self.dim() {
            let ax = &self.axes[a];
            let [wl, wh] = self.weights[a];
            h[2 * a] = 1.0 / (wl * ax.dist_lo(m[a])) + 1.0 / (wh * ax.dist_hi(m[a]));
        }
        h
    }

    /// Finite-difference stencil of the Hessian at an interior node.
    pub(crate) fn stencil(&self, idx: usize) -> Vec<Term> {
        let m = self.multi(idx);
        let mut t = Vec::with_capacity(10);
        let [a, b, c] = self.axes[0].second_difference(m[0]);
        t.push(Term { comp: 0, node: idx - 1, coef: a });
        t.push(Term { comp: 0, node: idx, coef: b });
        t.push(Term { comp: 0, node: idx + 1, coef: c });
        if self.dim() == 2 {
            let s = self.stride();
            let [a, b, c] = self.axes[1].second_difference(m[1]);
            t.push(Term { comp: 2, node: idx - s, coef: a });
            t.push(Term { comp: 2, node: idx, coef: b });
            t.push(Term { comp: 2, node: idx + s, coef: c });
            let [_, cx] = self.axes[0].centred_difference(m[0]);
            let [_, cy] = self.axes[1].centred_difference(m[1]);
            let k = cx * cy;
            t.push(Term { comp: 1, node: idx + 1 + s, coef: k });
            t.push(Term { comp: 1, node: idx + 1 - s, coef: -k });
            t.push(Term { comp: 1, node: idx - 1 + s, coef: -k });
            t.push(Term { comp: 1, node: idx - 1 - s, coef: k });
        }
        t
    }

    fn apply_stencil(&self, idx: usize, values: impl Fn(usize) -> f64) -> Sym {
        let mut h = [0.0; 3];
        for term in self.stencil(idx) {
            h[term.comp] += term.coef * values(term.node);
        }
        h
    }

    /// Hessian of `u` at an interior node.
    pub fn hessian(&self, idx: usize, mode: HessianMode) -> Sym {
        match mode {
            HessianMode::Hybrid => {
                let d = self.apply_stencil(idx, |j| self.phi[j]);
                let r = self.reference_hessian(idx);
                [r[0] + d[0], r[1] + d[1], r[2] + d[2]]
            }
            HessianMode::Sampled => self.apply_stencil(idx, |j| self.u(j)),
        }
    }

    /// Finite-difference Hessian of an arbitrary grid function at an interior node.
    pub fn hessian_of(&self, idx: usize, values: &[f64]) -> Sym {
        self.apply_stencil(idx, |j| values[j])
    }

    fn check_convex(&self, idx: usize, h: &Sym) -> Result<()> {
        if sym_logdet(self.dim(), h).is_none() {
            return Err(Error::ConvexityViolation {
                location: self.coords(idx),
            });
        }
        Ok(())
    }

    /// `(u^{ab})` at every node in [`HessianMode::Hybrid`], with the boundary
    /// limits of Guillemin potentials (all entries that involve a direction
    /// normal to a facet through the node vanish there).
    pub fn inverse_field(&self) -> Result<Vec<Sym>> {
        let dim = self.dim();
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                if !self.is_interior(i) {
                    if self.reference == Reference::Zero {
                        return Err(Error::InvalidArgument(
                            "boundary limits of u^{ab} need the Guillemin reference".into(),
                        ));
                    }
                    return Ok([0.0; 3]);
                }
                let h = self.hessian(i, HessianMode::Hybrid);
                self.check_convex(i, &h)?;
                Ok(sym_inverse(dim, &h))
            })
            .collect()
    }

    fn divergence_at(&self, idx: usize, q: impl Fn(usize) -> Sym) -> f64 {
        let mut s = 0.0;
        for term in self.stencil(idx) {
            let factor = if term.comp == 1 { 2.0 } else { 1.0 };
            s += factor * term.coef * q(term.node)[term.comp];
        }
        s
    }

    /// `Σ_ab ∂_a ∂_b u^{ab}` at every interior node (hybrid Hessians), paired
    /// with node indices.
    pub fn abreu_operator(&self) -> Result<Vec<(usize, f64)>> {
        let q = self.inverse_field()?;
        Ok(self
            .interior_nodes()
            .into_par_iter()
            .map(|i| (i, self.divergence_at(i, |j| q[j])))
            .collect())
    }

    /// `sup |Σ ∂_a∂_b u^{ab} + A|` over interior nodes.
    pub fn abreu_residual(&self) -> Result<f64> {
        Ok(self
            .abreu_operator()?
            .into_iter()
            .map(|(_, v)| (v + self.a).abs())
            .fold(0.0, f64::max))
    }

    /// Metric and scalar curvature at a node at least two layers inside,
    /// with every Hessian taken by finite differences of the sampled
    /// potential.
    pub fn abreu_s(&self, idx: usize) -> Result<MetricSample> {
        if self.layer(idx) < 2 {
            return Err(Error::InvalidArgument(format!(
                "node {:?} is within two mesh layers of the boundary",
                self.coords(idx)
            )));
        }
        let dim = self.dim();
        let mut cache: Vec<(usize, Sym)> = Vec::new();
        for term in self.stencil(idx) {
            if cache.iter().any(|(j, _)| *j == term.node) {
                continue;
            }
            let h = self.hessian(term.node, HessianMode::Sampled);
            self.check_convex(term.node, &h)?;
            cache.push((term.node, sym_inverse(dim, &h)));
        }
        let lookup = |j: usize| cache.iter().find(|(k, _)| *k == j).unwrap().1;
        let s = -0.5 * self.divergence_at(idx, lookup);
        let h = self.hessian(idx, HessianMode::Sampled);
        Ok(MetricSample {
            point: self.coords(idx),
            g_xx: to_matrix(dim, &h),
            g_theta: to_matrix(dim, &sym_inverse(dim, &h)),
            scalar_curvature: s,
        })
    }

    /// Metric samples with hybrid Hessians at every interior node; the
    /// scalar curvature uses the boundary limits of `u^{ab}`.
    pub fn metric_samples(&self) -> Result<Vec<MetricSample>> {
        let dim = self.dim();
        let q = self.inverse_field()?;
        Ok(self
            .interior_nodes()
            .into_par_iter()
            .map(|i| {
                let h = self.hessian(i, HessianMode::Hybrid);
                MetricSample {
                    point: self.coords(i),
                    g_xx: to_matrix(dim, &h),
                    g_theta: to_matrix(dim, &q[i]),
                    scalar_curvature: -0.5 * self.divergence_at(i, |j| q[j]),
                }
            })
            .collect())
    }

    /// Legendre transform at an interior node: returns `⟨x, ∇u⟩ − u` and
    /// `y = ∇u(x)`, the logarithmic coordinates of the corresponding point
    /// of the open orbit.
    pub fn legendre(&self, idx: usize) -> Result<(f64, Vec<f64>)> {
        if !self.is_interior(idx) {
            return Err(Error::InvalidArgument("the Legendre transform needs an interior node".into()));
        }
        let h = self.hessian(idx, HessianMode::Hybrid);
        self.check_convex(idx, &h)?;
        let m = self.multi(idx);
        let x = self.coords(idx);
        let stride = [1, self.stride()];
        let mut y = vec![0.0; self.dim()];
        for a in 0..self.dim() {
            let ax = &self.axes[a];
            let [c0, c1, c2] = ax.first_difference(m[a]);
            y[a] = c0 * self.phi[idx - stride[a]] + c1 * self.phi[idx] + c2 * self.phi[idx + stride[a]];
            if self.reference == Reference::Guillemin {
                let [wl, wh] = self.weights[a];
                y[a] += (ax.dist_lo(m[a]).ln() + 1.0) / wl - (ax.dist_hi(m[a]).ln() + 1.0) / wh;
            }
        }
        let value = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() - self.u(idx);
        Ok((value, y))
    }

    /// Trapezoid `∫_P Σ u^{ab} f_ab dμ` for a quadratic `f` (hybrid Hessians).
    pub fn hessian_pairing(&self, f: &Quadratic) -> Result<f64> {
        let q = self.inverse_field()?;
        let hf = f.hessian_f64();
        let dim = self.dim();
        Ok(self
            .interior_nodes()
            .into_iter()
            .map(|i| {
                let qi = q[i];
                let s = if dim == 1 {
                    qi[0] * hf[0][0]
                } else {
                    qi[0] * hf[0][0] + 2.0 * qi[1] * hf[0][1] + qi[2] * hf[1][1]
                };
                self.weight(i) * s
            })
            .sum())
    }

    /// Trapezoid value of `L(g) = ∫_∂P g dσ − A ∫_P g dμ` for grid values `g`.
    pub fn functional_of(&self, g: &[f64]) -> f64 {
        (0..self.len())
            .map(|i| (self.boundary_weight(i) - self.a * self.weight(i)) * g[i])
            .sum()
    }

    /// Grid samples of a quadratic.
    pub fn sample_quadratic(&self, f: &Quadratic) -> Vec<f64> {
        (0..self.len()).map(|i| f.eval_f64(&self.coords(i))).collect()
    }

    /// Writes `x1[,x2],u,det_hessian,S` for every interior node.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        let io = |e: std::io::Error| Error::InvalidArgument(format!("write failed: {e}"));
        let header = if self.dim() == 1 {
            "x1,u,det_hessian,S"
        } else {
            "x1,x2,u,det_hessian,S"
        };
        writeln!(out, "{header}").map_err(io)?;
        let samples = self.metric_samples()?;
        for (sample, i) in samples.iter().zip(self.interior_nodes()) {
            let coords: Vec<String> = sample.point.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(
                out,
                "{},{:.17e},{:.17e},{:.17e}",
                coords.join(","),
                self.u(i),
                sym_det(self.dim(), &to_sym(&sample.g_xx)),
                sample.scalar_curvature
            )
            .map_err(io)?;
        }
        Ok(())
    }
}
