//! Finite-dimensional moment maps: Hilbert–Mumford weights, Kempf–Ness
//! functions and gradient flows of `|μ|²`.
//!
//! Two model actions are implemented.
//!
//! * `SU(2)` acting on configurations of `d` points of `CP¹ = S²`. The
//!   moment map of the configuration `(u_1, …, u_d)` with multiplicities
//!   `m_i` is the centre of mass `μ = Σ m_i u_i`, and the gradient flow of
//!   `|μ|²` moves each point along the tangential part of `−μ` (the gradient
//!   for the metric `Σ m_i g_{S²}`). The flow
//!   runs on the sphere itself rather than on the tensor representation;
//!   this is the Fubini–Study reduction, legitimate because the projective
//!   moment map `|v|⁻² μ(v)` only depends on the projected points. Fixing
//!   `|v| = 1` leaves the zero set unchanged. A configuration in which one
//!   point carries exactly half the mass is semistable without being
//!   polystable: `|μ|` still tends to zero, but only at an algebraic rate, so
//!   such flows may end as [`SphereVerdict::NotConverged`] with small `|μ|`.
//! * `GL(n, ℂ)` acting on square matrices by conjugation, restricted to the
//!   imaginary directions `exp(tH)`, `H` Hermitian. The moment map is
//!   `μ(A) = i[A, A*]`, whose zeros are the normal matrices.
//!
//! For a diagonal one-parameter subgroup `λ(t) = diag(t^{ξ_1}, …)` the
//! Hilbert–Mumford weight is `w(λ, v) = −min{ξ_i : v_i ≠ 0}`, and the
//! Kempf–Ness function `s ↦ log |exp(sξ) v|` is convex with slope `−w` at
//! `s → −∞`.

use nalgebra::{DMatrix, SymmetricEigen};
use num::complex::Complex64;
use num::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points of the unit sphere with positive integer multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereConfig {
    points: Vec<[f64; 3]>,
    multiplicities: Vec<u32>,
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

impl SphereConfig {
    /// Builds a configuration, projecting every (non-zero) vector radially
    /// onto the sphere.
    pub fn new(points: Vec<[f64; 3]>, multiplicities: Vec<u32>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("a configuration needs at least one point".into()));
        }
        if points.len() != multiplicities.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} multiplicities",
                points.len(),
                multiplicities.len()
            )));
        }
        if multiplicities.contains(&0) {
            return Err(Error::InvalidArgument("multiplicities must be positive".into()));
        }
        let points = points
            .into_iter()
            .map(|p| {
                let r = norm(&p);
                if !(r > 0.0) || !r.is_finite() {
                    Err(Error::InvalidArgument(format!("point {p:?} cannot be projected to the sphere")))
                } else {
                    Ok([p[0] / r, p[1] / r, p[2] / r])
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { points, multiplicities })
    }

    /// All multiplicities equal to one.
    pub fn simple(points: Vec<[f64; 3]>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1; n])
    }

    /// Parses lines `x y z [multiplicity]`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        let mut mult = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: no + 1, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 && fields.len() != 4 {
                return Err(err(format!("expected `x y z [multiplicity]`, found {} fields", fields.len())));
            }
            let mut p = [0.0; 3];
            for (slot, f) in p.iter_mut().zip(&fields) {
                *slot = f.parse().map_err(|_| err(format!("`{f}` is not a number")))?;
            }
            let m = match fields.get(3) {
                Some(f) => f.parse().map_err(|_| err(format!("`{f}` is not a positive integer")))?,
                None => 1,
            };
            if m == 0 {
                return Err(err("multiplicity must be positive".into()));
            }
            if !(norm(&p) > 0.0) {
                return Err(err("the zero vector is not a point of the sphere".into()));
            }
            points.push(p);
            mult.push(m);
        }
        Self::new(points, mult)
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicities
    }

    /// Total multiplicity `d`.
    pub fn degree(&self) -> u32 {
        self.multiplicities.iter().sum()
    }
}

/// `μ = Σ m_i u_i`.
pub fn sphere_moment(c: &SphereConfig) -> [f64; 3] {
    let mut mu = [0.0; 3];
    for (p, &m) in c.points.iter().zip(&c.multiplicities) {
        for k in 0..3 {
            mu[k] += m as f64 * p[k];
        }
    }
    mu
}

/// Gradient of `|μ|²` for the product metric `Σ m_i g_{S²}`, whose
/// symplectic form is the one `μ` is a moment map for: point `i` moves
/// along `2 (μ − ⟨μ, u_i⟩ u_i)`, independently of its multiplicity.
fn sphere_gradient(c: &SphereConfig, mu: &[f64; 3]) -> Vec<[f64; 3]> {
    c.points
        .iter()
        .map(|u| {
            let along = dot(mu, u);
            [2.0 * (mu[0] - along * u[0]), 2.0 * (mu[1] - along * u[1]), 2.0 * (mu[2] - along * u[2])]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Initial time step; steps are halved on failure and grow by 1.5× on success.
    pub step: f64,
    pub max_steps: usize,
    /// `|μ|` (respectively `‖[A, A*]‖`) below which the point counts as a zero of the moment map.
    pub zero_tol: f64,
    /// Scale-free size of the flow's vector field below which a point with
    /// non-zero moment counts as stationary: `max_i |∇_i| / (2|μ|)`, the
    /// sine of the largest angle between a point and the axis of `μ`, on the
    /// sphere; `‖H‖ / (‖A‖² ‖[A, A*]‖)` for matrices. Changes of `|μ|²` become invisible
    /// in double precision long before `10⁻⁸`, so the default is `10⁻⁷`.
    pub stationary_tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            step: 0.05,
            max_steps: 20_000,
            zero_tol: 1e-8,
            stationary_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereState {
    pub iteration: usize,
    pub points: Vec<[f64; 3]>,
    pub moment: [f64; 3],
    pub moment_norm: f64,
    /// Time step that produced this state (0 for the initial state).
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SphereVerdict {
    /// `|μ| < zero_tol`: the configuration is (numerically) polystable.
    Balanced,
    /// The flow stopped at a non-zero critical point of `|μ|²`: all points
    /// lie on the axis `±μ/|μ|`, with the given total multiplicities.
    FixedPoint {
        axis: [f64; 3],
        forward: u32,
        backward: u32,
        moment_norm: f64,
    },
    NotConverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereFlow {
    pub trajectory: Vec<SphereState>,
    pub limit: SphereConfig,
    pub verdict: SphereVerdict,
}

/// Gradient flow of `|μ|²` on configurations of points on the sphere.
pub fn sphere_flow(c: &SphereConfig, opts: &FlowOptions) -> SphereFlow {
    let mut cur = c.clone();
    let mut dt = opts.step;
    let mut trajectory = Vec::new();
    let mut last_step = 0.0;
    let verdict = loop {
        let mu = sphere_moment(&cur);
        let f = dot(&mu, &mu);
        trajectory.push(SphereState {
            iteration: trajectory.len(),
            points: cur.points.clone(),
            moment: mu,
            moment_norm: f.sqrt(),
            step: last_step,
        });
        if f.sqrt() < opts.zero_tol {
            break SphereVerdict::Balanced;
        }
        let g = sphere_gradient(&cur, &mu);
        // Squared length in the weighted metric: the first-order decrease rate.
        let g2: f64 = g.iter().zip(&cur.multiplicities).map(|(v, &m)| m as f64 * dot(v, v)).sum();
        let misalignment = g.iter().map(|v| norm(v) / 2.0).fold(0.0f64, f64::max) / f.sqrt();
        if misalignment < opts.stationary_tol {
            let len = f.sqrt();
            let axis = [mu[0] / len, mu[1] / len, mu[2] / len];
            let (mut forward, mut backward) = (0, 0);
            for (u, &m) in cur.points.iter().zip(&cur.multiplicities) {
                if dot(u, &axis) > 0.0 {
                    forward += m;
                } else {
                    backward += m;
                }
            }
            break SphereVerdict::FixedPoint {
                axis,
                forward,
                backward,
                moment_norm: len,
            };
        }
        if trajectory.len() > opts.max_steps {
            break SphereVerdict::NotConverged;
        }
        let mut accepted = None;
        for _ in 0..80 {
            let points: Vec<[f64; 3]> = cur
                .points
                .iter()
                .zip(&g)
                .map(|(u, gi)| {
                    let v = [u[0] - dt * gi[0], u[1] - dt * gi[1], u[2] - dt * gi[2]];
                    let r = norm(&v);
                    [v[0] / r, v[1] / r, v[2] / r]
                })
                .collect();
            let trial = SphereConfig {
                points,
                multiplicities: cur.multiplicities.clone(),
            };
            let m = sphere_moment(&trial);
            if dot(&m, &m) <= f - 1e-4 * dt * g2 && dot(&m, &m) < f {
                accepted = Some(trial);
                break;
            }
            dt *= 0.5;
        }
        match accepted {
            Some(t) => {
                cur = t;
                last_step = dt;
                dt *= 1.5;
            }
            None => break SphereVerdict::NotConverged,
        }
    };
    SphereFlow {
        trajectory,
        limit: cur,
        verdict,
    }
}

/// Whether every point is fixed by the rotation generated by `μ`, i.e.
/// `V_{μ(x)}(x) = 0`: either `μ = 0` or every point lies on the axis of `μ`.
pub fn is_critical(c: &SphereConfig, tol: f64) -> bool {
    let mu = sphere_moment(c);
    sphere_gradient(c, &mu).iter().all(|g| norm(g) <= tol)
}

/// A square complex matrix, stored row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixPoint {
    rows: Vec<Vec<Complex64>>,
}

impl MatrixPoint {
    pub fn new(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty matrix".into()));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("matrix must be square".into()));
        }
        if rows.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("matrix entries must be finite".into()));
        }
        Ok(Self { rows })
    }

    /// Real matrix from rows.
    pub fn real(rows: &[&[f64]]) -> Result<Self> {
        Self::new(
            rows.iter()
                .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    /// Parses one row per line, entries like `1`, `-2.5i` or `1+2i`
    /// separated by whitespace; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|f| {
                    f.parse::<Complex64>().map_err(|_| Error::Parse {
                        line: no + 1,
                        msg: format!("`{f}` is not a complex number"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(rows)
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<Complex64>] {
        &self.rows
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |i, j| self.rows[i][j])
    }

    pub fn from_matrix(m: &DMatrix<Complex64>) -> Self {
        Self {
            rows: (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect(),
        }
    }

    /// Eigenvalues (from a complex Schur decomposition).
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let m = self.to_matrix();
        match m.clone().schur().eigenvalues() {
            Some(e) => e.iter().cloned().collect(),
            None => Vec::new(),
        }
    }
}

fn commutator(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a * b - b * a
}

/// `μ(A) = i[A, A*]`.
pub fn matrix_moment(a: &MatrixPoint) -> DMatrix<Complex64> {
    let m = a.to_matrix();
    commutator(&m, &m.adjoint()) * Complex64::i()
}

/// Frobenius norm of `[A, A*]`.
pub fn commutator_norm(a: &MatrixPoint) -> f64 {
    let m = a.to_matrix();
    commutator(&m, &m.adjoint()).norm()
}

/// Largest distance between the two spectra under a greedy matching.
pub fn spectral_drift(before: &[Complex64], after: &[Complex64]) -> f64 {
    if before.len() != after.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; after.len()];
    let mut worst: f64 = 0.0;
    for z in before {
        let (k, d) = after
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, w)| (k, (z - w).norm()))
            .fold((usize::MAX, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
        if k == usize::MAX {
            return f64::INFINITY;
        }
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixState {
    pub iteration: usize,
    pub commutator_norm: f64,
    pub frobenius_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum MatrixVerdict {
    /// `‖[A, A*]‖ < zero_tol`.
    Normal,
    /// `‖A‖_F` fell below `10⁻³ ‖A₀‖_F`: the orbit closure contains 0.
    CollapsesToZero,
    /// Stationary with a non-zero commutator.
    Stationary,
    NotConverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFlow {
    pub trajectory: Vec<MatrixState>,
    pub limit: MatrixPoint,
    pub verdict: MatrixVerdict,
    /// Distance between the spectra of the initial and final matrices.
    pub eigenvalue_drift: f64,
}

/// `exp(tH) A exp(−tH)` for Hermitian `H`.
fn conjugate(a: &DMatrix<Complex64>, h: &DMatrix<Complex64>, t: f64) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(h.clone());
    let u = &eig.eigenvectors;
    let n = h.nrows();
    let scaled = |sign: f64| {
        let d = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new((sign * t * eig.eigenvalues[i]).exp(), 0.0)
            } else {
                Complex64::zero()
            }
        });
        u * d * u.adjoint()
    };
    scaled(1.0) * a * scaled(-1.0)
}

/// Gradient flow of `‖[A, A*]‖²` along the orbit `exp(tH) A exp(−tH)`.
///
/// The steepest direction is `H = −Herm([A, [A*, M]])` with `M = [A, A*]`,
/// along which `d/dt ‖M‖² = −4 ‖H‖²`.
pub fn matrix_flow(a0: &MatrixPoint, opts: &FlowOptions) -> MatrixFlow {
    let start = a0.to_matrix();
    let norm0 = start.norm();
    let mut a = start.clone();
    let mut dt = opts.step;
    let mut last_step = 0.0;
    let mut trajectory = Vec::new();
    let verdict = loop {
        let m = commutator(&a, &a.adjoint());
        let f = m.norm_squared();
        let an = a.norm();
        trajectory.push(MatrixState {
            iteration: trajectory.len(),
            commutator_norm: f.sqrt(),
            frobenius_norm: an,
            step: last_step,
        });
        if an < 1e-3 * norm0 {
            break MatrixVerdict::CollapsesToZero;
        }
        if f.sqrt() < opts.zero_tol {
            break MatrixVerdict::Normal;
        }
        let z = &a * commutator(&a.adjoint(), &m) - commutator(&a.adjoint(), &m) * &a;
        let h = -(&z + z.adjoint()) * Complex64::new(0.5, 0.0);
        let h2 = h.norm_squared();
        if h2.sqrt() < opts.stationary_tol * an * an * f.sqrt() {
            break MatrixVerdict::Stationary;
        }
        if trajectory.len() > opts.max_steps {
            break MatrixVerdict::NotConverged;
        }
        let mut accepted = None;
        for _ in 0..80 {
            let trial = conjugate(&a, &h, dt);
            let mt = commutator(&trial, &trial.adjoint());
            let ft = mt.norm_squared();
            if ft <= f - 4e-4 * dt * h2 && ft < f {
                accepted = Some(trial);
                break;
            }
            dt *= 0.5;
        }
        match accepted {
            Some(t) => {
                a = t;
                last_step = dt;
                dt *= 2.0;
            }
            None => break MatrixVerdict::NotConverged,
        }
    };
    let limit = MatrixPoint::from_matrix(&a);
    let eigenvalue_drift = spectral_drift(&a0.eigenvalues(), &limit.eigenvalues());
    MatrixFlow {
        trajectory,
        limit,
        verdict,
        eigenvalue_drift,
    }
}

/// Generator `ξ` of the diagonal one-parameter subgroup `λ(t) = diag(t^{ξ_i})`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OnePS {
    weights: Vec<i64>,
    /// Free-form description of the basis in which `λ` is diagonal.
    pub basis: Option<String>,
}

impl OnePS {
    pub fn new(weights: Vec<i64>) -> Result<Self> {
        if weights.iter().all(|&w| w == 0) {
            return Err(Error::InvalidArgument("a one-parameter subgroup needs a non-zero weight".into()));
        }
        Ok(Self { weights, basis: None })
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    fn check(&self, v: &[Complex64]) -> Result<()> {
        if v.len() != self.weights.len() {
            return Err(Error::InvalidArgument(format!(
                "vector has {} coordinates but the subgroup has {} weights",
                v.len(),
                self.weights.len()
            )));
        }
        if v.iter().all(|z| z.is_zero()) {
            return Err(Error::InvalidArgument("the zero vector has no Hilbert–Mumford weight".into()));
        }
        Ok(())
    }
}

/// `w(λ, v) = −min{ξ_i : v_i ≠ 0}`, minus the order of the leading term of `λ(t) v` at `t = 0`.
pub fn hm_weight(lambda: &OnePS, v: &[Complex64]) -> Result<i64> {
    lambda.check(v)?;
    let order = lambda
        .weights
        .iter()
        .zip(v)
        .filter(|(_, z)| !z.is_zero())
        .map(|(&w, _)| w)
        .min()
        .unwrap_or(0);
    Ok(-order)
}

/// The limit of `[λ(t) v]` as `t → 0`: the normalised component of `v` of lowest weight.
pub fn limit_point(lambda: &OnePS, v: &[Complex64]) -> Result<Vec<Complex64>> {
    let order = -hm_weight(lambda, v)?;
    let mut p: Vec<Complex64> = lambda
        .weights
        .iter()
        .zip(v)
        .map(|(&w, &z)| if w == order { z } else { Complex64::zero() })
        .collect();
    let r = p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut p {
        *z /= r;
    }
    Ok(p)
}

/// `⟨μ(p), ξ⟩ = −Σ ξ_i |p_i|² / |p|²`, the pairing of the projective moment
/// map of the diagonal torus with `ξ`; at the limit point of `λ(t) v` it
/// equals the Hilbert–Mumford weight.
pub fn moment_pairing(lambda: &OnePS, p: &[Complex64]) -> Result<f64> {
    lambda.check(p)?;
    let total: f64 = p.iter().map(|z| z.norm_sqr()).sum();
    let s: f64 = lambda.weights.iter().zip(p).map(|(&w, z)| w as f64 * z.norm_sqr()).sum();
    Ok(-s / total)
}

/// Samples of the Kempf–Ness function `s ↦ log |exp(sξ) v|` along a geodesic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnProfile {
    pub samples: Vec<(f64, f64)>,
    /// Indices `k` where the second difference at sample `k` is negative beyond rounding.
    pub convexity_violations: Vec<usize>,
    /// Secant slope between the two most negative samples.
    pub slope_minus_infinity: f64,
    /// Secant slope between the two most positive samples.
    pub slope_plus_infinity: f64,
    /// Sample with the smallest value.
    pub minimum: (f64, f64),
}

/// `log |exp(sξ) v| = ½ log Σ |v_i|² e^{2sξ_i}`, evaluated with log-sum-exp.
pub fn kn_value(lambda: &OnePS, v: &[Complex64], s: f64) -> Result<f64> {
    lambda.check(v)?;
    Ok(kn_value_unchecked(&lambda.weights, v, s))
}

fn kn_value_unchecked(weights: &[i64], v: &[Complex64], s: f64) -> f64 {
    let exps: Vec<f64> = weights
        .iter()
        .zip(v)
        .filter(|(_, z)| !z.is_zero())
        .map(|(&w, z)| 2.0 * s * w as f64 + z.norm_sqr().ln())
        .collect();
    let top = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = exps.iter().map(|e| (e - top).exp()).sum();
    0.5 * (top + sum.ln())
}

/// Samples the Kempf–Ness function at `samples` equally spaced points of `range`.
pub fn kn_function(lambda: &OnePS, v: &[Complex64], range: (f64, f64), samples: usize) -> Result<KnProfile> {
    lambda.check(v)?;
    let (lo, hi) = range;
    if !(lo < hi) || samples < 3 {
        return Err(Error::InvalidArgument("need lo < hi and at least three samples".into()));
    }
    let step = (hi - lo) / (samples - 1) as f64;
    let pts: Vec<(f64, f64)> = (0..samples)
        .map(|k| {
            let s = lo + k as f64 * step;
            (s, kn_value_unchecked(&lambda.weights, v, s))
        })
        .collect();
    let scale = pts.iter().fold(1.0f64, |m, p| m.max(p.1.abs()));
    let tol = 64.0 * f64::EPSILON * scale;
    let convexity_violations = (1..samples - 1)
        .filter(|&k| pts[k - 1].1 - 2.0 * pts[k].1 + pts[k + 1].1 < -tol)
        .collect();
    let minimum = pts.iter().cloned().fold((f64::NAN, f64::INFINITY), |m, p| if p.1 < m.1 { p } else { m });
    Ok(KnProfile {
        slope_minus_infinity: (pts[1].1 - pts[0].1) / step,
        slope_plus_infinity: (pts[samples - 1].1 - pts[samples - 2].1) / step,
        samples: pts,
        convexity_violations,
        minimum,
    })
}

/// A point of either model action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GroupPoint {
    Sphere(SphereConfig),
    Matrix(MatrixPoint),
}

impl GroupPoint {
    /// `|μ|` for a sphere configuration, `‖[A, A*]‖` for a matrix.
    pub fn moment_norm(&self) -> f64 {
        match self {
            GroupPoint::Sphere(c) => norm(&sphere_moment(c)),
            GroupPoint::Matrix(a) => commutator_norm(a),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn sphere_moments() {
        let anti = SphereConfig::simple(vec![[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]).unwrap();
        assert_eq!(sphere_moment(&anti), [0.0, 0.0, 0.0]);
        let poles = SphereConfig::new(vec![[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]], vec![3, 1]).unwrap();
        assert_eq!(sphere_moment(&poles), [0.0, 0.0, 2.0]);
        let s = 1.0 / 3f64.sqrt();
        let tetra = SphereConfig::simple(vec![[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]]).unwrap();
        assert!(norm(&sphere_moment(&tetra)) < 1e-12);
        for p in tetra.points() {
            assert!((norm(p) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn polystable_pair_balances() {
        let c = SphereConfig::new(vec![[1.0, 0.0, 0.0], [0.0, 0.6, 0.8]], vec![2, 2]).unwrap();
        let flow = sphere_flow(&c, &FlowOptions::default());
        assert_eq!(flow.verdict, SphereVerdict::Balanced);
        assert!(flow.trajectory.last().unwrap().moment_norm < 1e-8);
        for w in flow.trajectory.windows(2) {
            assert!(w[1].moment_norm < w[0].moment_norm);
        }
        let p = flow.limit.points();
        assert!((dot(&p[0], &p[1]) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn unstable_triple_point_flows_to_antipodal_limit() {
        let c = SphereConfig::new(vec![[0.0, 0.0, 1.0], [0.8, 0.0, 0.6]], vec![3, 1]).unwrap();
        let flow = sphere_flow(&c, &FlowOptions::default());
        match flow.verdict {
            SphereVerdict::FixedPoint {
                forward,
                backward,
                moment_norm,
                ..
            } => {
                assert_eq!((forward, backward), (3, 1));
                assert!((moment_norm - 2.0).abs() < 1e-6);
            }
            v => panic!("{v:?}"),
        }
        assert!(is_critical(&flow.limit, 1e-5));
        assert!(!is_critical(&c, 1e-5));
    }

    #[test]
    fn balanced_configuration_does_not_move() {
        let c = SphereConfig::simple(vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]).unwrap();
        let flow = sphere_flow(&c, &FlowOptions::default());
        assert_eq!(flow.verdict, SphereVerdict::Balanced);
        assert_eq!(flow.trajectory.len(), 1);
        assert_eq!(flow.limit, c);
    }

    #[test]
    fn diagonalisable_matrix_becomes_normal() {
        let a = MatrixPoint::real(&[&[1.0, 1.0], &[0.0, 2.0]]).unwrap();
        let flow = matrix_flow(&a, &FlowOptions::default());
        assert_eq!(flow.verdict, MatrixVerdict::Normal);
        assert!(commutator_norm(&flow.limit) < 1e-8);
        assert!(flow.eigenvalue_drift < 1e-6, "{}", flow.eigenvalue_drift);
        for w in flow.trajectory.windows(2) {
            assert!(w[1].commutator_norm < w[0].commutator_norm);
        }
    }

    #[test]
    fn jordan_block_collapses() {
        let a = MatrixPoint::real(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        let flow = matrix_flow(&a, &FlowOptions::default());
        assert_eq!(flow.verdict, MatrixVerdict::CollapsesToZero);
    }

    #[test]
    fn normal_matrix_is_fixed() {
        let a = MatrixPoint::real(&[&[0.0, 1.0], &[-1.0, 0.0]]).unwrap();
        let flow = matrix_flow(&a, &FlowOptions::default());
        assert_eq!(flow.verdict, MatrixVerdict::Normal);
        assert_eq!(flow.limit, a);
    }

    #[test]
    fn moment_map_of_a_matrix_is_hermitian_times_i() {
        let a = MatrixPoint::parse("1 1+2i\n0 -3i\n").unwrap();
        let mu = matrix_moment(&a);
        let skew = &mu + mu.adjoint();
        assert!(skew.norm() < 1e-14);
    }

    #[test]
    fn hilbert_mumford_weights() {
        let l = OnePS::new(vec![1, -1]).unwrap();
        assert_eq!(hm_weight(&l, &[c(1.0), c(0.0)]).unwrap(), -1);
        assert_eq!(hm_weight(&l, &[c(1.0), c(1.0)]).unwrap(), 1);
        assert_eq!(hm_weight(&l, &[c(0.0), c(1.0)]).unwrap(), 1);
        assert!(hm_weight(&l, &[c(0.0), c(0.0)]).is_err());
        assert!(OnePS::new(vec![0, 0]).is_err());
    }

    #[test]
    fn kempf_ness_profiles() {
        let l = OnePS::new(vec![1, -1]).unwrap();
        let prof = kn_function(&l, &[c(1.0), c(1.0)], (-20.0, 20.0), 401).unwrap();
        assert!(prof.convexity_violations.is_empty());
        assert_relative_eq!(prof.slope_minus_infinity, -1.0, epsilon = 1e-12);
        assert_relative_eq!(prof.slope_plus_infinity, 1.0, epsilon = 1e-12);
        assert!(prof.minimum.0.abs() < 1e-12);
        let single = kn_function(&l, &[c(0.0), c(2.0)], (-5.0, 5.0), 11).unwrap();
        for (s, v) in &single.samples {
            assert_relative_eq!(*v, 2f64.ln() - s, epsilon = 1e-12);
        }
    }

    #[test]
    fn weight_equals_moment_pairing_at_the_limit() {
        let l = OnePS::new(vec![2, -1, -1, 3]).unwrap();
        let v = [c(1.0), Complex64::new(0.5, 2.0), c(-1.0), c(0.0)];
        let p = limit_point(&l, &v).unwrap();
        assert_relative_eq!(moment_pairing(&l, &p).unwrap(), hm_weight(&l, &v).unwrap() as f64, epsilon = 1e-14);
    }

    #[test]
    fn parses_sphere_files() {
        let c = SphereConfig::parse("# two points\n0 0 2 3\n0 0 -1\n").unwrap();
        assert_eq!(c.multiplicities(), &[3, 1]);
        assert_eq!(c.points()[0], [0.0, 0.0, 1.0]);
        assert!(matches!(SphereConfig::parse("0 0 0\n"), Err(Error::Parse { line: 1, .. })));
    }
}
