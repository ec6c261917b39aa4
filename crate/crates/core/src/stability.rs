//! The boundary functional `L`, Futaki invariants on linear functions and
//! toric K-stability verdicts.
//!
//! For a polytope `P` with boundary measure `dσ`,
//!
//! ```text
//! L(f) = ∫_∂P f dσ − A ∫_P f dμ,      A = Vol(∂P, dσ) / Vol(P, dμ),
//! ```
//!
//! so `L` kills constants. Its restriction to linear functions is the Futaki
//! invariant, and the pair `(P, dσ)` is toric K-stable when `L(f) ≥ 0` for every
//! rational piecewise-linear convex `f`, with equality only for affine `f`.
//! Every value here is an exact rational.

use std::collections::BTreeSet;

use num::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::{lattice_length, BoundaryMeasure, Facet, Point, Polytope};
use crate::rational::{self, dot, int, primitive_direction, Rational};

/// Something that can be evaluated exactly at rational points.
pub trait ExactFunction: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[Rational]) -> Rational;
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AffinePiece {
    pub slope: Vec<Rational>,
    pub constant: Rational,
}

impl AffinePiece {
    pub fn new(slope: Vec<Rational>, constant: Rational) -> Self {
        Self { slope, constant }
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        dot(&self.slope, x) + &self.constant
    }
}

/// `f = max_i λ_i` for finitely many rational affine functions `λ_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PLConvexFunction {
    pieces: Vec<AffinePiece>,
}

impl PLConvexFunction {
    pub fn new(pieces: Vec<AffinePiece>) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return Err(Error::InvalidArgument("a PL function needs at least one piece".into()));
        };
        let n = first.slope.len();
        if pieces.iter().any(|p| p.slope.len() != n) {
            return Err(Error::InvalidArgument("pieces of mixed dimension".into()));
        }
        Ok(Self { pieces })
    }

    pub fn affine(slope: Vec<Rational>, constant: Rational) -> Self {
        Self {
            pieces: vec![AffinePiece::new(slope, constant)],
        }
    }

    /// The crease `max(0, ⟨a, x⟩ − c)`.
    pub fn crease(direction: &[i64], offset: &Rational) -> Self {
        let n = direction.len();
        Self {
            pieces: vec![
                AffinePiece::new(vec![Rational::zero(); n], Rational::zero()),
                AffinePiece::new(direction.iter().map(|&x| int(x)).collect(), -offset.clone()),
            ],
        }
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].slope.len()
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        self.pieces.iter().map(|p| p.eval(x)).max().unwrap()
    }

    /// Full-dimensional cells of the decomposition of `P` on which `f` agrees
    /// with one piece, paired with the index of that piece. Duplicate pieces are
    /// ignored after their first occurrence.
    pub fn cells(&self, p: &Polytope) -> Result<Vec<(usize, Polytope)>> {
        let mut out = Vec::new();
        for (i, pi) in self.pieces.iter().enumerate() {
            if self.pieces[..i].contains(pi) {
                continue;
            }
            let mut cell = Some(p.clone());
            for (j, pj) in self.pieces.iter().enumerate() {
                if i == j || pj == pi {
                    continue;
                }
                let Some(c) = cell else { break };
                // λ_i ≥ λ_j  ⇔  ⟨a_i − a_j, x⟩ ≥ b_j − b_i
                let a: Vec<Rational> = pi.slope.iter().zip(&pj.slope).map(|(x, y)| x - y).collect();
                let rhs = &pj.constant - &pi.constant;
                cell = c.clip(&a, &rhs)?;
            }
            if let Some(c) = cell {
                out.push((i, c));
            }
        }
        Ok(out)
    }

    /// Drops pieces that are maximal on no open subset of `P`.
    pub fn canonical(&self, p: &Polytope) -> Result<Self> {
        let keep: Vec<AffinePiece> = self
            .cells(p)?
            .into_iter()
            .map(|(i, _)| self.pieces[i].clone())
            .collect();
        Ok(Self { pieces: keep })
    }

    pub fn max_on(&self, p: &Polytope) -> Rational {
        p.vertices().iter().map(|v| self.eval(v)).max().unwrap()
    }

    pub fn min_on_vertices(&self, p: &Polytope) -> Rational {
        p.vertices().iter().map(|v| self.eval(v)).min().unwrap()
    }
}

impl ExactFunction for PLConvexFunction {
    fn dim(&self) -> usize {
        PLConvexFunction::dim(self)
    }

    fn value(&self, x: &[Rational]) -> Rational {
        self.eval(x)
    }
}

/// `f(x) = c + ⟨b, x⟩ + ½ xᵀ H x` with rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quadratic {
    pub constant: Rational,
    pub linear: Vec<Rational>,
    pub hessian: Vec<Vec<Rational>>,
}

impl Quadratic {
    pub fn new(constant: Rational, linear: Vec<Rational>, hessian: Vec<Vec<Rational>>) -> Result<Self> {
        let n = linear.len();
        if hessian.len() != n || hessian.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("Hessian shape does not match".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if hessian[i][j] != hessian[j][i] {
                    return Err(Error::InvalidArgument("Hessian is not symmetric".into()));
                }
            }
        }
        Ok(Self { constant, linear, hessian })
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        let mut v = &self.constant + dot(&self.linear, x);
        let half = rational::ratio(1, 2);
        for (i, row) in self.hessian.iter().enumerate() {
            for (j, h) in row.iter().enumerate() {
                v += &half * h * &x[i] * &x[j];
            }
        }
        v
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        let mut v = rational::to_f64(&self.constant);
        for (b, xi) in self.linear.iter().zip(x) {
            v += rational::to_f64(b) * xi;
        }
        for (i, row) in self.hessian.iter().enumerate() {
            for (j, h) in row.iter().enumerate() {
                v += 0.5 * rational::to_f64(h) * x[i] * x[j];
            }
        }
        v
    }

    pub fn hessian_f64(&self) -> Vec<Vec<f64>> {
        self.hessian
            .iter()
            .map(|r| r.iter().map(rational::to_f64).collect())
            .collect()
    }
}

impl ExactFunction for Quadratic {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn value(&self, x: &[Rational]) -> Rational {
        self.eval(x)
    }
}

fn midpoint(p: &Point, q: &Point) -> Point {
    p.iter().zip(q).map(|(a, b)| (a + b) / int(2)).collect()
}

/// `∫_0^1 max_i (α_i t + β_i) dt`, exactly.
fn integrate_pl_on_unit_interval(lines: &[(Rational, Rational)]) -> Rational {
    let mut ts: Vec<Rational> = vec![Rational::zero(), Rational::one()];
    for (i, (ai, bi)) in lines.iter().enumerate() {
        for (aj, bj) in &lines[i + 1..] {
            if ai != aj {
                let t = (bj - bi) / (ai - aj);
                if t.is_positive() && t < Rational::one() {
                    ts.push(t);
                }
            }
        }
    }
    ts.sort();
    ts.dedup();
    let eval = |t: &Rational| lines.iter().map(|(a, b)| a * t + b).max().unwrap();
    ts.windows(2)
        .map(|w| (&w[1] - &w[0]) * eval(&((&w[0] + &w[1]) / int(2))))
        .sum()
}

fn check_dims(p: &Polytope, sigma: &BoundaryMeasure, n: usize) -> Result<()> {
    sigma.check(p)?;
    if n != p.dim() {
        return Err(Error::InvalidArgument(format!(
            "function of dimension {n} on a polytope of dimension {}",
            p.dim()
        )));
    }
    if p.dim() > 2 {
        return Err(Error::UnsupportedDimension {
            dim: p.dim(),
            what: "the boundary functional",
        });
    }
    Ok(())
}

/// `∫_∂P f dσ` for a PL convex function.
pub fn boundary_integral(p: &Polytope, sigma: &BoundaryMeasure, f: &PLConvexFunction) -> Result<Rational> {
    check_dims(p, sigma, f.dim())?;
    let mut total = Rational::zero();
    match p.dim() {
        1 => {
            for (k, v) in p.vertices().iter().enumerate() {
                total += &sigma.weights[k] * f.eval(v);
            }
        }
        _ => {
            let vs = p.vertices();
            let m = vs.len();
            for k in 0..m {
                let (a, b) = (&vs[k], &vs[(k + 1) % m]);
                let lines: Vec<(Rational, Rational)> = f
                    .pieces()
                    .iter()
                    .map(|pc| {
                        let fa = pc.eval(a);
                        (pc.eval(b) - &fa, fa)
                    })
                    .collect();
                let len = lattice_length(a, b, &p.facets()[k].normal);
                total += &sigma.weights[k] * len * integrate_pl_on_unit_interval(&lines);
            }
        }
    }
    Ok(total)
}

/// `∫_P f dμ` for a PL convex function.
pub fn interior_integral(p: &Polytope, f: &PLConvexFunction) -> Result<Rational> {
    if p.dim() > 2 {
        return Err(Error::UnsupportedDimension {
            dim: p.dim(),
            what: "integration",
        });
    }
    let mut total = Rational::zero();
    for (i, cell) in f.cells(p)? {
        total += cell.volume()? * f.pieces()[i].eval(&cell.centroid()?);
    }
    Ok(total)
}

/// The functional `L(f) = ∫_∂P f dσ − A ∫_P f dμ` on PL convex functions.
pub fn functional(p: &Polytope, sigma: &BoundaryMeasure, f: &PLConvexFunction) -> Result<Rational> {
    let a = p.measures(sigma)?.a;
    Ok(boundary_integral(p, sigma, f)? - a * interior_integral(p, f)?)
}

/// `L` on a quadratic polynomial, exactly (Simpson on edges, edge-midpoint
/// rule on a triangle fan; both exact in degree two).
pub fn functional_quadratic(p: &Polytope, sigma: &BoundaryMeasure, f: &Quadratic) -> Result<Rational> {
    check_dims(p, sigma, f.linear.len())?;
    let a = p.measures(sigma)?.a;
    let vs = p.vertices();
    let (boundary, interior) = match p.dim() {
        1 => {
            let b = &sigma.weights[0] * f.eval(&vs[0]) + &sigma.weights[1] * f.eval(&vs[1]);
            let len = &vs[1][0] - &vs[0][0];
            let simpson = (f.eval(&vs[0]) + int(4) * f.eval(&midpoint(&vs[0], &vs[1])) + f.eval(&vs[1])) / int(6);
            (b, len * simpson)
        }
        _ => {
            let m = vs.len();
            let mut b = Rational::zero();
            for k in 0..m {
                let (p0, p1) = (&vs[k], &vs[(k + 1) % m]);
                let len = lattice_length(p0, p1, &p.facets()[k].normal);
                let simpson = (f.eval(p0) + int(4) * f.eval(&midpoint(p0, p1)) + f.eval(p1)) / int(6);
                b += &sigma.weights[k] * len * simpson;
            }
            let mut i = Rational::zero();
            for k in 1..m - 1 {
                let (p0, p1, p2) = (&vs[0], &vs[k], &vs[k + 1]);
                let area = ((&p1[0] - &p0[0]) * (&p2[1] - &p0[1]) - (&p2[0] - &p0[0]) * (&p1[1] - &p0[1])) / int(2);
                let avg = (f.eval(&midpoint(p0, p1)) + f.eval(&midpoint(p1, p2)) + f.eval(&midpoint(p0, p2))) / int(3);
                i += area * avg;
            }
            (b, i)
        }
    };
    Ok(boundary - a * interior)
}

/// Futaki invariant on linear functions: `(L(x₁), …, L(x_n))`.
pub fn futaki_linear(p: &Polytope, sigma: &BoundaryMeasure) -> Result<Vec<Rational>> {
    let m = p.measures(sigma)?;
    // L(x_i) = Vol(∂P)·(boundary centroid)_i − A·Vol(P)·(centroid)_i and A·Vol(P) = Vol(∂P).
    Ok(m.boundary_centroid
        .iter()
        .zip(&m.centroid)
        .map(|(b, c)| &m.boundary_volume * (b - c))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityStatus {
    Unstable,
    SemistableBoundary,
    StableAtResolution,
}

/// A crease `max(0, ⟨a, x⟩ − c)` together with its exact `L` value and mass `∫_P f dμ`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crease {
    pub direction: Vec<i64>,
    pub offset: Rational,
    pub value: Rational,
    pub mass: Rational,
}

impl Crease {
    /// Scale-invariant objective `L(f) / ∫_P f dμ`.
    pub fn ratio(&self) -> Rational {
        &self.value / &self.mass
    }

    pub fn function(&self) -> PLConvexFunction {
        PLConvexFunction::crease(&self.direction, &self.offset)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub function: PLConvexFunction,
    pub value: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub status: StabilityStatus,
    pub witness: Option<Witness>,
    pub futaki: Vec<Rational>,
    pub resolution: u32,
    pub creases_examined: usize,
    /// The lowest-ratio creases, best first (at most ten).
    pub best: Vec<Crease>,
}

impl StabilityVerdict {
    /// True when instability comes from a non-zero Futaki invariant.
    pub fn futaki_obstructed(&self) -> bool {
        self.futaki.iter().any(|x| !x.is_zero())
    }
}

fn primitive_directions(dim: usize, r: i64) -> Vec<Vec<i64>> {
    match dim {
        1 => vec![vec![-1], vec![1]],
        2 => {
            let mut out = Vec::new();
            for a in -r..=r {
                for b in -r..=r {
                    if rational::gcd_i64(a, b) == 1 {
                        out.push(vec![a, b]);
                    }
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

/// Rationals strictly inside `(lo, hi)` with denominator at most `r`.
fn offsets(lo: &Rational, hi: &Rational, r: i64) -> Vec<Rational> {
    let mut set = BTreeSet::new();
    for q in 1..=r {
        let qq = int(q);
        let start = rational::floor_i64(&(lo * &qq)) + 1;
        let end = rational::ceil_i64(&(hi * &qq)) - 1;
        for num in start..=end {
            let c = rational::ratio(num, q);
            if &c > lo && &c < hi {
                set.insert(c);
            }
        }
    }
    set.into_iter().collect()
}

/// `L` and `∫ f` for `max(0, ⟨a,x⟩ − c)`, using one clip instead of the
/// general cell decomposition.
pub fn crease_value(
    p: &Polytope,
    sigma: &BoundaryMeasure,
    a_coef: &Rational,
    direction: &[i64],
    offset: &Rational,
) -> Result<(Rational, Rational)> {
    let a: Vec<Rational> = direction.iter().map(|&x| int(x)).collect();
    let lam = |x: &[Rational]| dot(&a, x) - offset;
    let mass = match p.clip(&a, offset)? {
        Some(cell) => cell.volume()? * lam(&cell.centroid()?),
        None => Rational::zero(),
    };
    let mut boundary = Rational::zero();
    let vs = p.vertices();
    match p.dim() {
        1 => {
            for (k, v) in vs.iter().enumerate() {
                let val = lam(v);
                if val.is_positive() {
                    boundary += &sigma.weights[k] * val;
                }
            }
        }
        _ => {
            let m = vs.len();
            for k in 0..m {
                let (p0, p1) = (&vs[k], &vs[(k + 1) % m]);
                let (g0, g1) = (lam(p0), lam(p1));
                let integral = if !g0.is_negative() && !g1.is_negative() {
                    (&g0 + &g1) / int(2)
                } else if !g0.is_positive() && !g1.is_positive() {
                    Rational::zero()
                } else {
                    let pos = if g0.is_positive() { g0.clone() } else { g1.clone() };
                    let frac = &pos / (&g0 - &g1).abs();
                    pos * frac / int(2)
                };
                if !integral.is_zero() {
                    boundary += &sigma.weights[k] * lattice_length(p0, p1, &p.facets()[k].normal) * integral;
                }
            }
        }
    }
    Ok((boundary - a_coef * &mass, mass))
}

/// Searches creases `max(0, ⟨a, x⟩ − c)` with primitive `a`, `max|a_i| ≤ R`
/// and `c` of denominator at most `R` cutting the interior, minimising
/// `L(f) / ∫_P f dμ`. A non-zero Futaki invariant is reported as instability
/// with a linear witness.
pub fn crease_search(p: &Polytope, sigma: &BoundaryMeasure, resolution: u32) -> Result<StabilityVerdict> {
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    if p.dim() > 2 {
        return Err(Error::UnsupportedDimension {
            dim: p.dim(),
            what: "crease search",
        });
    }
    let measures = p.measures(sigma)?;
    let futaki = futaki_linear(p, sigma)?;
    let r = resolution as i64;

    let directions = primitive_directions(p.dim(), r);
    let mut creases: Vec<Crease> = directions
        .par_iter()
        .map(|dir| -> Result<Vec<Crease>> {
            let a: Vec<Rational> = dir.iter().map(|&x| int(x)).collect();
            let (lo, hi) = p.linear_range(&a);
            offsets(&lo, &hi, r)
                .into_iter()
                .map(|c| {
                    let (value, mass) = crease_value(p, sigma, &measures.a, dir, &c)?;
                    Ok(Crease {
                        direction: dir.clone(),
                        offset: c,
                        value,
                        mass,
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    creases.par_sort_by(|x, y| {
        x.ratio()
            .cmp(&y.ratio())
            .then_with(|| x.direction.cmp(&y.direction))
            .then_with(|| x.offset.cmp(&y.offset))
    });
    let examined = creases.len();
    creases.truncate(10);

    if futaki.iter().any(|x| !x.is_zero()) {
        let minus: Vec<Rational> = futaki.iter().map(|x| -x.clone()).collect();
        let (dir, _) = primitive_direction(&minus).expect("non-zero vector");
        let a: Vec<Rational> = dir.iter().map(|&x| int(x)).collect();
        let (lo, _) = p.linear_range(&a);
        let f = PLConvexFunction::affine(a, -lo);
        let value = functional(p, sigma, &f)?;
        return Ok(StabilityVerdict {
            status: StabilityStatus::Unstable,
            witness: Some(Witness { function: f, value }),
            futaki,
            resolution,
            creases_examined: examined,
            best: creases,
        });
    }

    let witness = creases.first().map(|c| Witness {
        function: c.function(),
        value: c.value.clone(),
    });
    let status = match creases.first().map(|c| c.value.clone()) {
        Some(v) if v.is_negative() => StabilityStatus::Unstable,
        Some(v) if v.is_zero() => StabilityStatus::SemistableBoundary,
        _ => StabilityStatus::StableAtResolution,
    };
    Ok(StabilityVerdict {
        status,
        witness,
        futaki,
        resolution,
        creases_examined: examined,
        best: creases,
    })
}

/// The polytope `Q = {(x, y) : x ∈ P, f(x) ≤ y ≤ top}` of the toric test
/// configuration defined by `f`, with the induced decomposition of `P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfiguration {
    pub polytope: Polytope,
    /// Height of the truncating facet `y ≤ top`, equal to `max_P f + 1`.
    pub top: Rational,
    /// Components of the central fibre: cells of `P` where `f` is affine.
    pub cells: Vec<Polytope>,
    pub function: PLConvexFunction,
}

pub fn test_configuration(p: &Polytope, f: &PLConvexFunction) -> Result<TestConfiguration> {
    if f.dim() != p.dim() {
        return Err(Error::InvalidArgument("dimension mismatch".into()));
    }
    let canonical = f.canonical(p)?;
    let cells: Vec<Polytope> = canonical.cells(p)?.into_iter().map(|(_, c)| c).collect();
    let top = canonical.max_on(p) + Rational::one();
    let n = p.dim();
    let mut facets: Vec<Facet> = p
        .facets()
        .iter()
        .map(|fc| {
            let mut normal = fc.normal.clone();
            normal.push(0);
            Facet::new(normal, fc.offset.clone())
        })
        .collect();
    for piece in canonical.pieces() {
        // y − ⟨a, x⟩ ≥ b
        let mut v: Vec<Rational> = piece.slope.iter().map(|x| -x.clone()).collect();
        v.push(Rational::one());
        let (normal, factor) = primitive_direction(&v).expect("non-zero normal");
        facets.push(Facet::new(normal, &piece.constant * factor));
    }
    let mut up = vec![0i64; n];
    up.push(-1);
    facets.push(Facet::new(up, -top.clone()));
    let (polytope, _) = Polytope::from_facets(n + 1, &facets)?;
    Ok(TestConfiguration {
        polytope,
        top,
        cells,
        function: canonical,
    })
}
