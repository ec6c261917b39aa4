//! Futaki invariants from lattice-point counting.
//!
//! Sections of `L^k` on a polarised toric manifold are labelled by the lattice
//! points of `kP`. A circle action generated by an integral `ξ` acts on the
//! section labelled by `m` with weight `⟨ξ, m⟩` (sign convention fixed here:
//! not its negative). With `d_k = #(kP ∩ ℤⁿ)` and `w_k = Σ ⟨ξ, m⟩`,
//!
//! ```text
//! F(k) = w_k / (k d_k) = F₀ + F₁/k + F₂/k² + …
//! ```
//!
//! and `F₁` is the algebro-geometric Futaki invariant. Comparing the Ehrhart
//! expansions of `d_k` and `w_k` gives `F₁ = L(⟨ξ, x⟩) / (2 Vol P)` for unit
//! boundary weights, which the tests check numerically.

use num::{BigInt, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::Polytope;
use crate::rational::{self, int, Rational};
use crate::stability::ExactFunction;

/// Lattice data of `kP` for one `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightData {
    pub k: u64,
    /// `d_k = #(kP ∩ ℤⁿ)`.
    pub count: u64,
    /// `w_k = Σ_{m ∈ kP ∩ ℤⁿ} ⟨ξ, m⟩`.
    pub weight: BigInt,
}

impl WeightData {
    /// `F(k) = w_k / (k d_k)`.
    pub fn normalized(&self) -> Rational {
        Rational::new(self.weight.clone(), BigInt::from(self.k) * BigInt::from(self.count))
    }
}

/// Least-squares fit of `F(k)` against `(1, 1/k, 1/k²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFit {
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
    /// Largest absolute deviation of the data from the fitted curve.
    pub residual: f64,
    pub k_min: u64,
    pub k_max: u64,
    pub data: Vec<WeightData>,
}

struct IntegerPolytope {
    dim: usize,
    normals: Vec<Vec<i64>>,
    offsets: Vec<i64>,
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl IntegerPolytope {
    fn new(p: &Polytope) -> Result<Self> {
        for v in p.vertices() {
            if !v.iter().all(rational::is_integer) {
                return Err(Error::NonIntegralVertex(rational::fmt_vec(v)));
            }
        }
        let dim = p.dim();
        let to_i = |q: &Rational| q.to_integer().to_i64().expect("coordinate fits in i64");
        let lo = (0..dim)
            .map(|i| p.vertices().iter().map(|v| to_i(&v[i])).min().unwrap())
            .collect();
        let hi = (0..dim)
            .map(|i| p.vertices().iter().map(|v| to_i(&v[i])).max().unwrap())
            .collect();
        Ok(Self {
            dim,
            normals: p.facets().iter().map(|f| f.normal.clone()).collect(),
            // Integral vertices and primitive normals give integral offsets.
            offsets: p.facets().iter().map(|f| to_i(&f.offset)).collect(),
            lo,
            hi,
        })
    }

    fn contains_scaled(&self, m: &[i64], k: i64) -> bool {
        self.normals.iter().zip(&self.offsets).all(|(nu, c)| {
            let s: i64 = nu.iter().zip(m).map(|(a, b)| a * b).sum();
            s >= k * c
        })
    }

    /// Visits the lattice points of `kP`, in parallel over the first coordinate.
    fn fold<T, F, R>(&self, k: i64, init: T, visit: F, reduce: R) -> T
    where
        T: Send + Clone + Sync,
        F: Fn(&mut T, &[i64]) + Sync,
        R: Fn(T, T) -> T + Sync + Send,
    {
        let (lo, hi) = (self.lo[0] * k, self.hi[0] * k);
        (lo..=hi)
            .into_par_iter()
            .map(|x0| {
                let mut acc = init.clone();
                let mut m: Vec<i64> = std::iter::once(x0)
                    .chain((1..self.dim).map(|i| self.lo[i] * k))
                    .collect();
                loop {
                    if self.contains_scaled(&m, k) {
                        visit(&mut acc, &m);
                    }
                    let mut i = 1;
                    loop {
                        if i >= self.dim {
                            return acc;
                        }
                        if m[i] < self.hi[i] * k {
                            m[i] += 1;
                            break;
                        }
                        m[i] = self.lo[i] * k;
                        i += 1;
                    }
                }
            })
            .reduce(|| init.clone(), reduce)
    }
}

/// All lattice points of `kP`, in lexicographic order.
pub fn lattice_points(p: &Polytope, k: u64) -> Result<Vec<Vec<i64>>> {
    let ip = IntegerPolytope::new(p)?;
    let mut pts = ip.fold(
        k as i64,
        Vec::new(),
        |acc: &mut Vec<Vec<i64>>, m| acc.push(m.to_vec()),
        |mut a, b| {
            a.extend(b);
            a
        },
    );
    pts.sort();
    Ok(pts)
}

pub fn count_and_weigh(p: &Polytope, xi: &[i64], k: u64) -> Result<WeightData> {
    if xi.len() != p.dim() {
        return Err(Error::InvalidArgument("ξ has the wrong dimension".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let ip = IntegerPolytope::new(p)?;
    let (count, weight) = ip.fold(
        k as i64,
        (0u64, 0i128),
        |acc, m| {
            acc.0 += 1;
            acc.1 += xi.iter().zip(m).map(|(a, b)| (*a as i128) * (*b as i128)).sum::<i128>();
        },
        |a, b| (a.0 + b.0, a.1 + b.1),
    );
    Ok(WeightData {
        k,
        count,
        weight: BigInt::from(weight),
    })
}

pub fn expansion(p: &Polytope, xi: &[i64], k_min: u64, k_max: u64) -> Result<ExpansionFit> {
    if k_min == 0 || k_max < k_min + 3 {
        return Err(Error::InvalidArgument(format!(
            "need 1 ≤ k_min and k_max − k_min ≥ 3, got [{k_min}, {k_max}]"
        )));
    }
    let data: Vec<WeightData> = (k_min..=k_max)
        .map(|k| count_and_weigh(p, xi, k))
        .collect::<Result<_>>()?;
    let ks: Vec<f64> = data.iter().map(|d| d.k as f64).collect();
    let ys: Vec<f64> = data.iter().map(|d| rational::to_f64(&d.normalized())).collect();
    let design = nalgebra::DMatrix::from_fn(ks.len(), 3, |r, c| ks[r].powi(-(c as i32)));
    let rhs = nalgebra::DVector::from_vec(ys.clone());
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let fitted = &design * &coef;
    let residual = fitted
        .iter()
        .zip(&ys)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(ExpansionFit {
        f0: coef[0],
        f1: coef[1],
        f2: coef[2],
        residual,
        k_min,
        k_max,
        data,
    })
}

/// Filtration data at level `k`: the lattice point `m` of `kP` enters the
/// filtration at step `i(m) = ⌈k f(m/k)⌉`, the least `i` with `m ∈ k P_{i,k}`
/// where `P_{i,k} = {x : f(x) ≤ i/k}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiltrationData {
    pub k: u64,
    pub count: u64,
    /// `Σ_m i(m)`.
    pub level_sum: BigInt,
    /// Smallest level that occurs (negative when `f` takes negative values;
    /// integral shifts of `f` cancel in [`filtration_futaki`]).
    pub min_level: i64,
}

impl FiltrationData {
    /// `Σ_m i(m) / (k d_k)`, the analogue of `w_k / (k d_k)`.
    pub fn normalized(&self) -> Rational {
        Rational::new(self.level_sum.clone(), BigInt::from(self.k) * BigInt::from(self.count))
    }
}

pub fn filtration_data(p: &Polytope, f: &dyn ExactFunction, k: u64) -> Result<FiltrationData> {
    if f.dim() != p.dim() {
        return Err(Error::InvalidArgument("function has the wrong dimension".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let pts = lattice_points(p, k)?;
    let kk = int(k as i64);
    let levels: Vec<i64> = pts
        .par_iter()
        .map(|m| {
            let x: Vec<Rational> = m.iter().map(|&c| Rational::new(BigInt::from(c), BigInt::from(k))).collect();
            rational::ceil_i64(&(f.value(&x) * &kk))
        })
        .collect();
    Ok(FiltrationData {
        k,
        count: pts.len() as u64,
        level_sum: levels.iter().map(|&l| BigInt::from(l)).sum(),
        min_level: levels.iter().copied().min().unwrap_or(0),
    })
}

/// Finite-`k` Futaki statistic of the filtration defined by `f`:
/// `2k (F(k) − F(2k))` with `F(k) = Σ i(m) / (k d_k)`. It converges to the
/// `1/k` coefficient of `F`, i.e. to `L(f) / (2 Vol P)` for unit weights.
pub fn filtration_futaki(p: &Polytope, f: &dyn ExactFunction, k: u64) -> Result<Rational> {
    let a = filtration_data(p, f, k)?.normalized();
    let b = filtration_data(p, f, 2 * k)?.normalized();
    Ok((a - b) * int(2 * k as i64))
}

/// One Richardson step on [`filtration_futaki`]: `2 s(k) − s(k/2)`, removing
/// the leading `1/k` error. `k` must be even.
pub fn filtration_futaki_extrapolated(p: &Polytope, f: &dyn ExactFunction, k: u64) -> Result<Rational> {
    if k < 2 || k % 2 != 0 {
        return Err(Error::InvalidArgument("extrapolation needs an even k ≥ 2".into()));
    }
    let fine = filtration_futaki(p, f, k)?;
    let coarse = filtration_futaki(p, f, k / 2)?;
    Ok(fine * int(2) - coarse)
}

/// Coefficients `c₀ … c_n` of the Ehrhart polynomial `d_k = Σ c_j k^j`,
/// interpolated exactly from `k = 0, …, n` (with `d_0 = 1`).
pub fn ehrhart_polynomial(p: &Polytope) -> Result<Vec<Rational>> {
    let n = p.dim();
    let values = (0..=n as u64)
        .map(|k| Ok(if k == 0 { 1 } else { count_and_weigh(p, &vec![0; n], k)?.count }))
        .map(|d: Result<u64>| d.map(|d| int(d as i64)))
        .collect::<Result<Vec<_>>>()?;
    interpolate(&values)
}

/// Coefficients of the polynomial of degree `values.len() − 1` taking the
/// value `values[k]` at `k = 0, 1, …`.
fn interpolate(values: &[Rational]) -> Result<Vec<Rational>> {
    let m = values.len();
    let rows = (0..m as i64).map(|k| (0..m as u32).map(|j| int(k.pow(j))).collect()).collect();
    rational::solve_exact(rows, values.to_vec()).ok_or_else(|| Error::Degenerate("singular Vandermonde system".into()))
}

/// Exact `F₀` and `F₁` of a lattice polytope.
///
/// For integral `P` both `d_k` (degree `n`) and `w_k` (degree `n + 1`) are
/// polynomials in `k`, so the expansion of `w_k / (k d_k)` in `1/k` follows
/// from their top coefficients without any fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactExpansion {
    pub f0: Rational,
    pub f1: Rational,
    /// Coefficients of `d_k`, constant term first.
    pub count_polynomial: Vec<Rational>,
    /// Coefficients of `w_k`, constant term first.
    pub weight_polynomial: Vec<Rational>,
    /// Both polynomials were checked against direct enumeration for `k ≤ k_max`.
    pub k_max: u64,
}

pub fn exact_expansion(p: &Polytope, xi: &[i64], k_max: u64) -> Result<ExactExpansion> {
    let n = p.dim();
    if k_max < n as u64 + 1 {
        return Err(Error::InvalidArgument(format!("k_max must be at least {}", n + 1)));
    }
    let data: Vec<WeightData> = (1..=k_max).map(|k| count_and_weigh(p, xi, k)).collect::<Result<_>>()?;
    let counts: Vec<Rational> = std::iter::once(int(1)).chain(data.iter().map(|d| int(d.count as i64))).collect();
    let weights: Vec<Rational> =
        std::iter::once(Rational::zero()).chain(data.iter().map(|d| Rational::from(d.weight.clone()))).collect();
    let count_polynomial = interpolate(&counts[..=n])?;
    let weight_polynomial = interpolate(&weights[..=n + 1])?;
    for (k, (d, w)) in counts.iter().zip(&weights).enumerate() {
        if &eval_polynomial(&count_polynomial, k as u64) != d || &eval_polynomial(&weight_polynomial, k as u64) != w {
            return Err(Error::Degenerate(format!("lattice data at k = {k} is not polynomial")));
        }
    }
    // k d_k = c_n k^{n+1} + c_{n−1} k^n + …, w_k = a_{n+1} k^{n+1} + a_n k^n + …
    let c = &count_polynomial;
    let a = &weight_polynomial;
    let f0 = &a[n + 1] / &c[n];
    let f1 = (&a[n] - &f0 * &c[n - 1]) / &c[n];
    Ok(ExactExpansion {
        f0,
        f1,
        count_polynomial,
        weight_polynomial,
        k_max,
    })
}

pub fn eval_polynomial(coefs: &[Rational], k: u64) -> Rational {
    let kk = int(k as i64);
    coefs
        .iter()
        .rev()
        .fold(Rational::zero(), |acc, c| acc * &kk + c)
}

/// `sign(x)` as −1, 0 or 1.
pub fn sign(x: &Rational) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}
