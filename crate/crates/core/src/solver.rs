//! Minimisation of the toric Mabuchi functional.
//!
//! For `u = u₀ + φ` the functional is
//!
//! ```text
//! F(u) = −∫_P log det(u_ab) dμ + L(u),
//! ```
//!
//! and its critical points solve Abreu's equation `Σ ∂_a∂_b u^{ab} = −A`.
//! The discretisation is chosen so that this holds exactly at the discrete
//! level: with trapezoid weights `V`, the three-point second differences `D`
//! and the centred mixed difference,
//!
//! ```text
//! F_h(φ) = −Σ_interior V_i log det(D²u₀ + Dφ)_i + Σ_i (b_i − A V_i) u_i ,
//! ```
//!
//! where `b` is the trapezoid rule for `∫_∂P · dσ`. Summation by parts gives
//! `∂F_h/∂φ_i = −V_i (Σ D_ab u^{ab} + A)_i` at interior nodes, so a stationary
//! point has zero finite-difference Abreu residual; the boundary rows are
//! discrete versions of Guillemin's conditions `∂_ν u^{νν} = w` on each facet.
//!
//! Steps are linearly implicit Calabi-flow steps `(K + λ V) δ = −∇F_h`, with
//! `K` the exact Hessian of `F_h` (banded, positive semi-definite) and `λ`
//! the inverse time step, followed by Armijo backtracking that also keeps
//! every discrete Hessian positive definite. Once the residual drops below a
//! gate, `λ` is sent to (almost) zero and the iteration becomes Newton's
//! method. Affine functions are the null directions of `K`; they are
//! removed after every step when `L` vanishes on them, and otherwise only
//! constants are removed, so that a non-zero Futaki invariant shows up as
//! unbounded growth of `φ`, which is what the divergence certificate
//! detects.

use nalgebra::{DMatrix, DVector};
use num::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::banded::BandedSpd;
use crate::error::{Error, Result};
use crate::geometry::{sym_det, sym_inverse, sym_logdet, PotentialGrid, Reference, Sym, Term};
use crate::mesh::MeshSpec;
use crate::polytope::{BoundaryMeasure, Polytope};
use crate::rational::{self, fmt_vec, Rational};
use crate::stability::{futaki_linear, functional, functional_quadratic, PLConvexFunction, Quadratic};

/// Precomputed discrete operators for one grid.
struct Discretization {
    dim: usize,
    a: f64,
    weight: Vec<f64>,
    boundary: Vec<f64>,
    u0: Vec<f64>,
    interior: Vec<usize>,
    stencils: Vec<Vec<Term>>,
    reference: Vec<Sym>,
    reference_logdet: Vec<f64>,
    /// Exact `∫ log det D²u₀`; the quadrature only sees `log det H − log det D²u₀`.
    reference_integral: f64,
    /// Exact `L(u₀)`.
    reference_functional: f64,
    bandwidth: usize,
}

struct Evaluation {
    value: f64,
    hessian: Vec<Sym>,
    inverse: Vec<Sym>,
    min_det: (f64, usize),
}

impl Discretization {
    fn new(grid: &PotentialGrid) -> Self {
        let interior = grid.interior_nodes();
        let stencils = interior.iter().map(|&i| grid.stencil(i)).collect();
        let reference: Vec<Sym> = interior.iter().map(|&i| grid.reference_hessian(i)).collect();
        let reference_logdet = reference
            .iter()
            .map(|h| sym_logdet(grid.dim(), h).unwrap_or(0.0))
            .collect();
        let bandwidth = if grid.dim() == 1 { 2 } else { 2 * grid.axes()[0].len() + 2 };
        Self {
            dim: grid.dim(),
            a: grid.a(),
            weight: (0..grid.len()).map(|i| grid.weight(i)).collect(),
            boundary: (0..grid.len()).map(|i| grid.boundary_weight(i)).collect(),
            u0: (0..grid.len()).map(|i| grid.u0(i)).collect(),
            interior,
            stencils,
            reference,
            reference_logdet,
            reference_integral: grid.reference_logdet_integral(),
            reference_functional: grid.reference_functional(),
            bandwidth,
        }
    }

    fn hessian(&self, k: usize, phi: &[f64]) -> Sym {
        let mut h = self.reference[k];
        for t in &self.stencils[k] {
            h[t.comp] += t.coef * phi[t.node];
        }
        h
    }

    fn linear_part(&self, phi: &[f64]) -> f64 {
        self.reference_functional
            + (0..phi.len())
                .map(|i| (self.boundary[i] - self.a * self.weight[i]) * phi[i])
                .sum::<f64>()
    }

    /// `F_h(φ + ψ) − F_h(φ)`, computed term by term so that it keeps its
    /// relative accuracy when the change is far below the rounding level of
    /// `F_h` itself. `None` if some discrete Hessian stops being positive.
    fn decrement(&self, eval: &Evaluation, psi: &[f64]) -> Option<f64> {
        let mut total: f64 = (0..psi.len())
            .map(|i| (self.boundary[i] - self.a * self.weight[i]) * psi[i])
            .sum();
        for (k, &i) in self.interior.iter().enumerate() {
            let h = &eval.hessian[k];
            let mut e = [0.0; 3];
            for t in &self.stencils[k] {
                e[t.comp] += t.coef * psi[t.node];
            }
            // det(H + E) / det H − 1, expanded exactly.
            let rel = if self.dim == 1 {
                e[0] / h[0]
            } else {
                let cross = h[0] * e[2] + h[2] * e[0] - 2.0 * h[1] * e[1];
                let det_e = e[0] * e[2] - e[1] * e[1];
                (cross + det_e) / sym_det(2, h)
            };
            if !(rel > -1.0) || h[0] + e[0] <= 0.0 {
                return None;
            }
            total -= self.weight[i] * rel.ln_1p();
        }
        total.is_finite().then_some(total)
    }

    fn evaluate(&self, grid: &PotentialGrid, phi: &[f64]) -> Result<Evaluation> {
        let per_node: Vec<Result<(f64, Sym, f64)>> = (0..self.interior.len())
            .into_par_iter()
            .map(|k| {
                let h = self.hessian(k, phi);
                let i = self.interior[k];
                let ld = sym_logdet(self.dim, &h).ok_or_else(|| Error::ConvexityViolation {
                    location: grid.coords(i),
                })?;
                Ok((ld, sym_inverse(self.dim, &h), sym_det(self.dim, &h)))
            })
            .collect();
        let mut value = self.linear_part(phi) - self.reference_integral;
        let mut inverse = Vec::with_capacity(per_node.len());
        let mut min_det = (f64::INFINITY, 0);
        for (k, r) in per_node.into_iter().enumerate() {
            let (ld, q, det) = r?;
            value -= self.weight[self.interior[k]] * (ld - self.reference_logdet[k]);
            inverse.push(q);
            if det < min_det.0 {
                min_det = (det, self.interior[k]);
            }
        }
        let hessian = (0..self.interior.len()).map(|k| self.hessian(k, phi)).collect();
        Ok(Evaluation { value, hessian, inverse, min_det })
    }

    /// Partial derivatives of `log det` with respect to the stored components.
    fn dlogdet(&self, q: &Sym) -> Sym {
        [q[0], 2.0 * q[1], q[2]]
    }

    fn gradient(&self, eval: &Evaluation) -> Vec<f64> {
        let mut g: Vec<f64> = (0..self.weight.len())
            .map(|i| self.boundary[i] - self.a * self.weight[i])
            .collect();
        for (k, &i) in self.interior.iter().enumerate() {
            let d = self.dlogdet(&eval.inverse[k]);
            let w = self.weight[i];
            for t in &self.stencils[k] {
                g[t.node] -= w * d[t.comp] * t.coef;
            }
        }
        g
    }

    /// Second derivatives of `−log det` with respect to the stored components.
    fn d2(&self, q: &Sym) -> [[f64; 3]; 3] {
        if self.dim == 1 {
            [[q[0] * q[0], 0.0, 0.0], [0.0; 3], [0.0; 3]]
        } else {
            let (a, b, c) = (q[0], q[1], q[2]);
            [
                [a * a, 2.0 * a * b, b * b],
                [2.0 * a * b, 2.0 * (b * b + a * c), 2.0 * c * b],
                [b * b, 2.0 * c * b, c * c],
            ]
        }
    }

    fn hessian_matrix(&self, eval: &Evaluation) -> BandedSpd {
        let n = self.weight.len();
        let mut k = BandedSpd::zeros(n, self.bandwidth);
        for (kk, &i) in self.interior.iter().enumerate() {
            let m = self.d2(&eval.inverse[kk]);
            let w = self.weight[i];
            let st = &self.stencils[kk];
            for s in st {
                for t in st {
                    if t.node > s.node {
                        continue;
                    }
                    // Only the lower triangle is stored, so each unordered pair of
                    // distinct nodes is visited once; on the diagonal both orders count.
                    k.add(s.node, t.node, w * m[s.comp][t.comp] * s.coef * t.coef);
                }
            }
        }
        k
    }

    /// Scaled residuals: `|g_i| / V_i` at interior nodes (the Abreu residual)
    /// and `|g_i| / b_i` on the boundary (the flux mismatch).
    fn residuals(&self, g: &[f64]) -> (f64, f64) {
        let mut interior: f64 = 0.0;
        let mut boundary: f64 = 0.0;
        for i in 0..g.len() {
            if self.boundary[i] > 0.0 {
                boundary = boundary.max(g[i].abs() / self.boundary[i]);
            } else {
                interior = interior.max(g[i].abs() / self.weight[i]);
            }
        }
        (interior, boundary)
    }
}

/// Weighted least-squares fit of grid values by constants (and, if
/// `linear`, by affine functions). Returns the fitted coefficients
/// `[c, a_1, …]` and the sup-norm of the remainder.
pub fn affine_fit(grid: &PotentialGrid, values: &[f64], linear: bool) -> (Vec<f64>, f64) {
    let dim = grid.dim();
    let nb = if linear { dim + 1 } else { 1 };
    let basis = |i: usize| -> Vec<f64> {
        let x = grid.coords(i);
        let mut b = vec![1.0];
        if linear {
            b.extend(x);
        }
        b
    };
    let mut m = DMatrix::<f64>::zeros(nb, nb);
    let mut r = DVector::<f64>::zeros(nb);
    for (i, v) in values.iter().enumerate() {
        let b = basis(i);
        let w = grid.weight(i);
        for p in 0..nb {
            r[p] += w * b[p] * v;
            for q in 0..nb {
                m[(p, q)] += w * b[p] * b[q];
            }
        }
    }
    let c = m.lu().solve(&r).unwrap_or_else(|| DVector::zeros(nb));
    let coef: Vec<f64> = c.iter().cloned().collect();
    let mut sup: f64 = 0.0;
    for (i, v) in values.iter().enumerate() {
        let b = basis(i);
        let fit: f64 = b.iter().zip(&coef).map(|(x, y)| x * y).sum();
        sup = sup.max((v - fit).abs());
    }
    (coef, sup)
}

fn remove_fit(grid: &PotentialGrid, phi: &mut [f64], linear: bool) {
    let (coef, _) = affine_fit(grid, phi, linear);
    for (i, v) in phi.iter_mut().enumerate() {
        let mut s = coef[0];
        if linear {
            for (c, x) in coef[1..].iter().zip(grid.coords(i)) {
                s += c * x;
            }
        }
        *v -= s;
    }
}

/// Discrete Mabuchi functional `F_h(u)` of a grid with Guillemin reference.
pub fn mabuchi(grid: &PotentialGrid) -> Result<f64> {
    if grid.reference() != Reference::Guillemin {
        return Err(Error::InvalidArgument("the Mabuchi functional needs the Guillemin reference".into()));
    }
    let disc = Discretization::new(grid);
    Ok(disc.evaluate(grid, grid.phi())?.value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub mesh: MeshSpec,
    /// Stop when both scaled residuals are below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Divergence ceiling for `‖φ‖_∞`; `None` means `10³ · diam(P) · A`.
    pub ceiling: Option<f64>,
    /// Run even when the Futaki invariant is non-zero.
    pub force: bool,
    /// Amplitude of a smooth bump added to the initial potential.
    pub perturbation: f64,
    /// Residual below which the iteration switches to Newton steps.
    pub newton_gate: f64,
    /// Initial inverse time step of the implicit flow.
    pub initial_shift: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            mesh: MeshSpec::default(),
            tol: 1e-5,
            max_iter: 200,
            ceiling: None,
            force: false,
            perturbation: 0.0,
            newton_gate: 1e-2,
            initial_shift: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub mabuchi: f64,
    /// `sup |Σ D_ab u^{ab} + A|` over interior nodes.
    pub residual: f64,
    /// Largest boundary flux mismatch.
    pub boundary_residual: f64,
    pub min_det: f64,
    pub min_det_at: Vec<f64>,
    pub u_sup: f64,
    pub phi_sup: f64,
    pub shift: f64,
    pub step: f64,
}

/// Evidence that the Mabuchi functional is unbounded below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceCertificate {
    pub phi_sup: f64,
    pub ceiling: f64,
    /// Discrete `L` of the normalised direction `d = φ / ‖φ‖_∞`.
    pub direction_functional: f64,
    /// Linear part of the best affine fit of `d`.
    pub linear_part: Vec<f64>,
    /// `sup |d − affine fit|`.
    pub fit_residual: f64,
    /// Decrease of `F_h` over the last iterations.
    pub mabuchi_drop: f64,
    /// Rational destabiliser read off from the direction, when it is close
    /// to affine, with its exact `L` value.
    pub witness: Option<PLConvexFunction>,
    pub witness_value: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Termination {
    Converged,
    MaxIterations,
    Stalled,
    DivergenceCertificate(Box<DivergenceCertificate>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub grid: PotentialGrid,
    /// Interior Abreu residual of the final iterate.
    pub residual: f64,
    pub boundary_residual: f64,
    pub mabuchi: Vec<f64>,
    pub history: Vec<IterationRecord>,
    pub termination: Termination,
    pub futaki: Vec<Rational>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn certificate(&self) -> Option<&DivergenceCertificate> {
        match &self.termination {
            Termination::DivergenceCertificate(c) => Some(c),
            _ => None,
        }
    }
}

fn bump(grid: &PotentialGrid, amplitude: f64) -> Vec<f64> {
    let axes = grid.axes();
    (0..grid.len())
        .map(|i| {
            let x = grid.coords(i);
            amplitude
                * x.iter()
                    .zip(axes)
                    .map(|(xi, ax)| {
                        let t = (xi - ax.lo()) / (ax.hi() - ax.lo());
                        (std::f64::consts::PI * t).sin().powi(2) * (1.0 + 0.5 * t)
                    })
                    .product::<f64>()
        })
        .collect()
}

/// Reads a rational destabilising direction off a numerical slope vector.
fn rational_witness(p: &Polytope, sigma: &BoundaryMeasure, slope: &[f64]) -> Option<(PLConvexFunction, Rational)> {
    let scale = slope.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    // Best approximation with denominators up to 12, then made primitive.
    let approx: Vec<Rational> = slope
        .iter()
        .map(|v| rational::ratio((v / scale * 12.0).round() as i64, 12))
        .collect();
    let (dir, _) = rational::primitive_direction(&approx)?;
    let dir_q: Vec<Rational> = dir.iter().map(|&d| rational::int(d)).collect();
    let (lo, _) = p.linear_range(&dir_q);
    let f = PLConvexFunction::affine(dir_q, -lo);
    let value = functional(p, sigma, &f).ok()?;
    Some((f, value))
}

/// Solves Abreu's equation on a segment or rectangle; see the module docs.
pub fn solve(p: &Polytope, sigma: &BoundaryMeasure, opts: &SolveOptions) -> Result<SolveReport> {
    solve_observed(p, sigma, opts, |_, _| {})
}

/// As [`solve`], calling `observe(iteration, grid)` after every iteration.
pub fn solve_observed(
    p: &Polytope,
    sigma: &BoundaryMeasure,
    opts: &SolveOptions,
    mut observe: impl FnMut(usize, &PotentialGrid),
) -> Result<SolveReport> {
    let futaki = futaki_linear(p, sigma)?;
    let balanced = futaki.iter().all(|f| f.is_zero());
    if !balanced && !opts.force {
        return Err(Error::NonZeroFutaki(format!(
            "Futaki invariant {} is non-zero, so no constant scalar curvature metric exists",
            fmt_vec(&futaki)
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let mut grid = PotentialGrid::guillemin(p, sigma, &opts.mesh)?;
    let disc = Discretization::new(&grid);
    let ceiling = opts
        .ceiling
        .unwrap_or_else(|| 1e3 * p.diameter() * grid.a());
    let mut phi = bump(&grid, opts.perturbation);
    remove_fit(&grid, &mut phi, balanced);

    let mut history: Vec<IterationRecord> = Vec::new();
    let mut shift = opts.initial_shift;
    let min_shift = 1e-12;
    let mut last_step = 0.0;
    let mut eval = disc.evaluate(&grid, &phi)?;
    let termination = loop {
        let iteration = history.len();
        let g = disc.gradient(&eval);
        let (residual, boundary_residual) = disc.residuals(&g);
        let phi_sup = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let u_sup = (0..phi.len()).fold(0.0f64, |m, i| m.max((disc.u0[i] + phi[i]).abs()));
        history.push(IterationRecord {
            iteration,
            mabuchi: eval.value,
            residual,
            boundary_residual,
            min_det: eval.min_det.0,
            min_det_at: grid.coords(eval.min_det.1),
            u_sup,
            phi_sup,
            shift,
            step: last_step,
        });
        grid.phi_mut().copy_from_slice(&phi);
        observe(iteration, &grid);

        if residual < opts.tol && boundary_residual < opts.tol {
            break Termination::Converged;
        }
        if phi_sup > ceiling {
            let d: Vec<f64> = phi.iter().map(|v| v / phi_sup).collect();
            let direction_functional = grid.functional_of(&d);
            let look_back = history.len().saturating_sub(6);
            let mabuchi_drop = history[look_back].mabuchi - eval.value;
            if direction_functional < 0.0 && mabuchi_drop > 0.0 {
                let (coef, fit_residual) = affine_fit(&grid, &d, true);
                let linear_part = coef[1..].to_vec();
                let (witness, witness_value) = if fit_residual < 0.1 {
                    match rational_witness(p, sigma, &linear_part) {
                        Some((f, v)) => (Some(f), Some(v)),
                        None => (None, None),
                    }
                } else {
                    (None, None)
                };
                break Termination::DivergenceCertificate(Box::new(DivergenceCertificate {
                    phi_sup,
                    ceiling,
                    direction_functional,
                    linear_part,
                    fit_residual,
                    mabuchi_drop,
                    witness,
                    witness_value,
                }));
            }
        }
        if iteration >= opts.max_iter {
            break Termination::MaxIterations;
        }

        let newton = residual.max(boundary_residual) < opts.newton_gate;
        let mut accepted = None;
        let mut local_shift = if newton { min_shift } else { shift };
        let kmat = disc.hessian_matrix(&eval);
        for _ in 0..8 {
            let mut m = kmat.clone();
            m.add_diagonal(&disc.weight, local_shift);
            let chol = match m.cholesky() {
                Ok(c) => c,
                Err(_) => {
                    local_shift = (local_shift * 10.0).max(1e-8);
                    continue;
                }
            };
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let delta = chol.solve(&rhs);
            let slope: f64 = g.iter().zip(&delta).map(|(a, b)| a * b).sum();
            if !(slope < 0.0) {
                local_shift = (local_shift * 10.0).max(1e-8);
                continue;
            }
            let mut t = 1.0;
            for _ in 0..40 {
                let mut trial: Vec<f64> = phi.iter().zip(&delta).map(|(a, b)| a + t * b).collect();
                remove_fit(&grid, &mut trial, balanced);
                let psi: Vec<f64> = trial.iter().zip(&phi).map(|(a, b)| a - b).collect();
                if let Some(change) = disc.decrement(&eval, &psi) {
                    if change <= 1e-4 * t * slope {
                        accepted = Some((trial, t, change));
                        break;
                    }
                }
                t *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
            local_shift = (local_shift * 10.0).max(1e-6);
        }
        match accepted {
            Some((trial, t, change)) => {
                let value = eval.value + change;
                eval = disc.evaluate(&grid, &trial)?;
                eval.value = value;
                phi = trial;
                last_step = t;
                if !newton {
                    shift = if t == 1.0 { (local_shift * 0.25).max(min_shift) } else { local_shift * 2.0 };
                }
            }
            None => break Termination::Stalled,
        }
    };
    grid.phi_mut().copy_from_slice(&phi);
    let last = history.last().unwrap();
    Ok(SolveReport {
        residual: last.residual,
        boundary_residual: last.boundary_residual,
        mabuchi: history.iter().map(|h| h.mabuchi).collect(),
        history,
        termination,
        futaki,
        grid,
    })
}

/// Result of pairing a solution with a quadratic test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractCheck {
    /// Trapezoid `∫_P Σ u^{ab} f_ab dμ`.
    pub pairing: f64,
    /// Exact `L(f)`.
    pub exact: f64,
    /// `|L_h(f) − L(f)|`, the quadrature error of the same rule on `f` itself.
    pub quadrature_error: f64,
    /// Bound on the contribution of the solver residual.
    pub residual_bound: f64,
}

impl ContractCheck {
    pub fn discrepancy(&self) -> f64 {
        (self.pairing - self.exact).abs()
    }

    /// `|pairing − L(f)| ≤ 10 × (quadrature error + residual contribution)`.
    pub fn holds(&self) -> bool {
        self.discrepancy() <= 10.0 * (self.quadrature_error + self.residual_bound) + 1e-13
    }
}

/// Integration-by-parts check `∫ Σ u^{ab} f_ab dμ = L(f)` on a solver grid.
pub fn contract_check(report: &SolveReport, f: &Quadratic) -> Result<ContractCheck> {
    let grid = &report.grid;
    let pairing = grid.hessian_pairing(f)?;
    let exact_q = functional_quadratic(grid.polytope(), grid.measure(), f)?;
    let exact = rational::to_f64(&exact_q);
    let samples = grid.sample_quadratic(f);
    let discrete = grid.functional_of(&samples);
    let residual_bound: f64 = (0..grid.len())
        .map(|i| {
            let b = grid.boundary_weight(i);
            let scale = if b > 0.0 { b * report.boundary_residual } else { grid.weight(i) * report.residual };
            scale * samples[i].abs()
        })
        .sum();
    Ok(ContractCheck {
        pairing,
        exact,
        quadrature_error: (discrete - exact).abs(),
        residual_bound,
    })
}

/// The quadratic monomials `1, x_a, x_a x_b` in dimension `n` (1 or 2).
pub fn quadratic_basis(dim: usize) -> Vec<Quadratic> {
    let z = || Rational::zero();
    let mut out = Vec::new();
    let lin = |k: Option<usize>| -> Vec<Rational> {
        (0..dim).map(|a| if Some(a) == k { rational::int(1) } else { z() }).collect()
    };
    let zero_h = || vec![vec![z(); dim]; dim];
    out.push(Quadratic::new(rational::int(1), lin(None), zero_h()).unwrap());
    for a in 0..dim {
        out.push(Quadratic::new(z(), lin(Some(a)), zero_h()).unwrap());
    }
    for a in 0..dim {
        for b in a..dim {
            let mut h = zero_h();
            // f = x_a x_b has Hessian entries 1 off the diagonal, 2 on it.
            if a == b {
                h[a][a] = rational::int(2);
            } else {
                h[a][b] = rational::int(1);
                h[b][a] = rational::int(1);
            }
            out.push(Quadratic::new(z(), lin(None), h).unwrap());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaySlope {
    /// `(s, F_h(u₀ + s f̃))` on the geometric ladder.
    pub ladder: Vec<(f64, f64)>,
    /// Slope of the asymptote `F ≈ c + slope · s + κ log s` fitted on the top rungs.
    pub slope: f64,
    pub log_coefficient: f64,
    /// Exact `L(f̃)`.
    pub exact: Rational,
}

/// Slope of the Mabuchi functional along the ray `u₀ + s f̃`.
pub fn ray_slope(p: &Polytope, sigma: &BoundaryMeasure, f: &Quadratic, s_max: f64, mesh: &MeshSpec) -> Result<RaySlope> {
    if !(s_max > 0.0) {
        return Err(Error::InvalidArgument("s_max must be positive".into()));
    }
    let h = f.hessian_f64();
    let convex = match h.len() {
        1 => h[0][0] >= 0.0,
        2 => h[0][0] >= 0.0 && h[1][1] >= 0.0 && h[0][0] * h[1][1] >= h[0][1] * h[0][1],
        _ => false,
    };
    if !convex {
        return Err(Error::InvalidArgument("the ray direction must be convex".into()));
    }
    let exact = functional_quadratic(p, sigma, f)?;
    let grid = PotentialGrid::guillemin(p, sigma, mesh)?;
    let disc = Discretization::new(&grid);
    let base = grid.sample_quadratic(f);
    let rungs = 10;
    let mut ladder = Vec::with_capacity(rungs + 1);
    for k in (0..=rungs).rev() {
        let s = s_max / 2f64.powi(k as i32);
        let phi: Vec<f64> = base.iter().map(|v| s * v).collect();
        ladder.push((s, disc.evaluate(&grid, &phi)?.value));
    }
    let top = &ladder[ladder.len() - 3..];
    let m = DMatrix::from_fn(3, 3, |r, c| match c {
        0 => 1.0,
        1 => top[r].0,
        _ => top[r].0.ln(),
    });
    let rhs = DVector::from_iterator(3, top.iter().map(|(_, v)| *v));
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Degenerate("singular ladder fit".into()))?;
    Ok(RaySlope {
        ladder,
        slope: sol[1],
        log_coefficient: sol[2],
        exact,
    })
}

/// Whether `L` is negative on a crease, in which case [`solve`] cannot converge.
pub fn obstructed(p: &Polytope, sigma: &BoundaryMeasure, f: &PLConvexFunction) -> Result<bool> {
    Ok(functional(p, sigma, f)?.is_negative())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use approx::assert_relative_eq;

    fn segment() -> Polytope {
        Polytope::segment(int(0), int(1))
    }

    fn square() -> Polytope {
        Polytope::from_vertices(&[
            vec![int(0), int(0)],
            vec![int(1), int(0)],
            vec![int(1), int(1)],
            vec![int(0), int(1)],
        ])
        .unwrap()
    }

    fn x_squared() -> Quadratic {
        Quadratic::new(int(0), vec![int(0)], vec![vec![int(2)]]).unwrap()
    }

    #[test]
    fn mabuchi_of_the_guillemin_potential_on_the_segment() {
        // −∫ log(1/(x(1−x))) + L(u₀) = −2 + 1.
        let grid = PotentialGrid::guillemin(&segment(), &BoundaryMeasure::uniform(2), &MeshSpec::new(256)).unwrap();
        let f = mabuchi(&grid).unwrap();
        assert!((f + 1.0).abs() < 1e-4, "{f}");
    }

    #[test]
    fn mabuchi_shifts_by_l_along_affine_functions() {
        let p = segment();
        let s = BoundaryMeasure::new(vec![int(1), int(2)]).unwrap();
        let mut grid = PotentialGrid::guillemin(&p, &s, &MeshSpec::new(64)).unwrap();
        let f0 = mabuchi(&grid).unwrap();
        grid.set_phi(|x| 3.0 * x[0]);
        let f1 = mabuchi(&grid).unwrap();
        assert_relative_eq!(f1 - f0, 3.0 * 0.5, epsilon = 1e-12);
        let sq = square();
        let mut grid = PotentialGrid::guillemin(&sq, &BoundaryMeasure::uniform(4), &MeshSpec::new(16)).unwrap();
        let f0 = mabuchi(&grid).unwrap();
        grid.set_phi(|x| 2.0 - x[0] + 4.0 * x[1]);
        assert_relative_eq!(mabuchi(&grid).unwrap(), f0, epsilon = 1e-11);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let sq = square();
        let s = BoundaryMeasure::new(vec![int(1), int(2), int(1), int(2)]).unwrap();
        let mut grid = PotentialGrid::guillemin(&sq, &s, &MeshSpec::new(6)).unwrap();
        grid.set_phi(|x| 0.05 * (x[0] * x[1]).sin() + 0.02 * x[0] * x[0]);
        let disc = Discretization::new(&grid);
        let phi = grid.phi().to_vec();
        let e = disc.evaluate(&grid, &phi).unwrap();
        let g = disc.gradient(&e);
        let k = disc.hessian_matrix(&e);
        let dir: Vec<f64> = (0..phi.len()).map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.5).collect();
        let eps = 1e-6;
        let at = |t: f64| {
            let p: Vec<f64> = phi.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
            disc.evaluate(&grid, &p).unwrap()
        };
        let fd = (at(eps).value - at(-eps).value) / (2.0 * eps);
        let an: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        assert_relative_eq!(fd, an, max_relative = 1e-6);
        let gp = disc.gradient(&at(eps));
        let gm = disc.gradient(&at(-eps));
        let kd = k.mul_vec(&dir);
        for i in 0..phi.len() {
            let fd = (gp[i] - gm[i]) / (2.0 * eps);
            assert!((fd - kd[i]).abs() <= 1e-5 * (1.0 + kd[i].abs()), "{i}: {fd} vs {}", kd[i]);
        }
    }

    #[test]
    fn segment_solution_from_a_perturbed_start() {
        let opts = SolveOptions {
            mesh: MeshSpec::new(256),
            perturbation: 0.05,
            ..SolveOptions::default()
        };
        let r = solve(&segment(), &BoundaryMeasure::uniform(2), &opts).unwrap();
        assert!(r.converged(), "{:?}", r.termination);
        assert!(r.residual < 1e-5);
        assert!(r.history.len() > 2);
        for w in r.mabuchi.windows(2) {
            assert!(w[1] <= w[0], "Mabuchi history increased: {} -> {}", w[0], w[1]);
        }
        let mid = r.grid.index(&[128]);
        let h = r.grid.hessian(mid, crate::geometry::HessianMode::Hybrid)[0];
        assert!((h - 4.0).abs() / 4.0 < 1e-4, "{h}");
    }

    #[test]
    fn refuses_non_zero_futaki() {
        let s = BoundaryMeasure::new(vec![int(1), int(2)]).unwrap();
        assert!(matches!(
            solve(&segment(), &s, &SolveOptions::default()),
            Err(Error::NonZeroFutaki(_))
        ));
    }

    #[test]
    fn forced_solve_produces_a_divergence_certificate() {
        let s = BoundaryMeasure::new(vec![int(1), int(2)]).unwrap();
        let opts = SolveOptions {
            mesh: MeshSpec::new(64),
            force: true,
            ..SolveOptions::default()
        };
        let r = solve(&segment(), &s, &opts).unwrap();
        let c = r.certificate().unwrap_or_else(|| panic!("{:?}", r.termination));
        assert!(c.direction_functional < 0.0);
        let w = c.witness.as_ref().unwrap();
        assert!(c.witness_value.as_ref().unwrap().is_negative());
        assert_eq!(w.pieces()[0].slope, vec![int(-1)]);
        for h in r.mabuchi.windows(2) {
            assert!(h[1] <= h[0]);
        }
    }

    #[test]
    fn square_solution_with_contract() {
        let opts = SolveOptions {
            mesh: MeshSpec::new(24),
            perturbation: 0.1,
            ..SolveOptions::default()
        };
        let r = solve(&square(), &BoundaryMeasure::uniform(4), &opts).unwrap();
        assert!(r.converged(), "{:?}", r.termination);
        for s in r.grid.metric_samples().unwrap() {
            assert!((s.scalar_curvature - 2.0).abs() < 1e-5);
        }
        for f in quadratic_basis(2) {
            let c = contract_check(&r, &f).unwrap();
            assert!(c.holds(), "{c:?}");
        }
    }

    #[test]
    fn ray_slopes() {
        let p = segment();
        let s = BoundaryMeasure::new(vec![int(1), int(2)]).unwrap();
        let lin = Quadratic::new(int(0), vec![int(1)], vec![vec![int(0)]]).unwrap();
        let r = ray_slope(&p, &s, &lin, 1e3, &MeshSpec::new(256)).unwrap();
        assert_eq!(r.exact, crate::rational::ratio(1, 2));
        assert!((r.slope - 0.5).abs() < 1e-9, "{}", r.slope);
        let r = ray_slope(&p, &s, &x_squared(), 1e3, &MeshSpec::new(256)).unwrap();
        assert_eq!(r.exact, int(1));
        assert!((r.slope - 1.0).abs() < 0.05, "{}", r.slope);
        let zero = Quadratic::new(int(0), vec![int(0)], vec![vec![int(0)]]).unwrap();
        let r = ray_slope(&p, &s, &zero, 1e3, &MeshSpec::new(64)).unwrap();
        assert!(r.slope.abs() < 1e-9);
    }
}
