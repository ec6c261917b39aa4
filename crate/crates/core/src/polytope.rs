//! Exact rational convex polytopes with primitive inward facet normals.
//!
//! A facet is stored as the inequality `⟨ν, x⟩ ≥ c` with `ν` a primitive integer
//! vector pointing into the polytope. In dimension two the vertices are kept in
//! counterclockwise order and facet `i` is the edge from vertex `i` to vertex
//! `i + 1`; in dimension one facet `0` is the left endpoint and facet `1` the
//! right one. Higher dimensions are supported for construction from facets,
//! the Delzant test and lattice-point enumeration.
//!
//! The boundary measure `dσ` on a facet is the Lebesgue measure induced by the
//! lattice in the facet's hyperplane, multiplied by a positive rational weight.
//! With unit weights an edge of a polygon has measure equal to its lattice
//! length and an endpoint of a segment has measure one.

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, dot, dot_int, int, primitive_direction, Rational};

pub type Point = Vec<Rational>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub offset: Rational,
}

impl Facet {
    pub fn new(normal: Vec<i64>, offset: Rational) -> Self {
        Self { normal, offset }
    }

    /// Lattice-normalised defining function `ℓ(x) = ⟨ν, x⟩ − c`, non-negative on the polytope.
    pub fn eval(&self, x: &[Rational]) -> Rational {
        dot_int(&self.normal, x) - &self.offset
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.normal
            .iter()
            .zip(x)
            .map(|(n, xi)| *n as f64 * xi)
            .sum::<f64>()
            - rational::to_f64(&self.offset)
    }

    fn check_primitive(&self) -> Result<()> {
        let g = rational::gcd_slice(&self.normal);
        if g == 0 {
            return Err(Error::Degenerate("zero facet normal".into()));
        }
        if g != 1 {
            return Err(Error::NonPrimitiveNormal {
                normal: self.normal.clone(),
                gcd: g,
            });
        }
        Ok(())
    }
}

/// Positive rational densities multiplying the lattice measure, one per facet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryMeasure {
    pub weights: Vec<Rational>,
}

impl BoundaryMeasure {
    pub fn new(weights: Vec<Rational>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !w.is_positive()) {
            return Err(Error::InvalidMeasure(format!("weight {w} is not positive")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(facets: usize) -> Self {
        Self {
            weights: vec![Rational::one(); facets],
        }
    }

    pub fn check(&self, p: &Polytope) -> Result<()> {
        if self.weights.len() != p.facets.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} weights for {} facets",
                self.weights.len(),
                p.facets.len()
            )));
        }
        Ok(())
    }
}

/// Exact volume data of a polytope with boundary measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measures {
    pub volume: Rational,
    pub boundary_volume: Rational,
    /// `A = Vol(∂P, dσ) / Vol(P, dμ)`, the average scalar curvature times two.
    pub a: Rational,
    pub centroid: Point,
    pub boundary_centroid: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    dim: usize,
    facets: Vec<Facet>,
    vertices: Vec<Point>,
}

impl Polytope {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Convex hull of a point cloud (dimensions one and two).
    pub fn from_vertices(points: &[Point]) -> Result<Self> {
        let dim = points
            .first()
            .map(|p| p.len())
            .ok_or_else(|| Error::Degenerate("no points".into()))?;
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Degenerate("points of mixed dimension".into()));
        }
        match dim {
            1 => {
                let lo = points.iter().map(|p| &p[0]).min().unwrap().clone();
                let hi = points.iter().map(|p| &p[0]).max().unwrap().clone();
                if lo == hi {
                    return Err(Error::Degenerate("segment has zero length".into()));
                }
                Ok(Self::segment(lo, hi))
            }
            2 => {
                let hull = convex_hull_2d(points);
                if hull.len() < 3 {
                    return Err(Error::Degenerate(
                        "points are collinear; the hull is not full-dimensional".into(),
                    ));
                }
                let m = hull.len();
                let facets = (0..m)
                    .map(|i| edge_facet(&hull[i], &hull[(i + 1) % m]))
                    .collect();
                Ok(Self {
                    dim: 2,
                    facets,
                    vertices: hull,
                })
            }
            _ => Err(Error::UnsupportedDimension {
                dim,
                what: "construction from vertices",
            }),
        }
    }

    /// The segment `[lo, hi]`; panics unless `lo < hi`.
    pub fn segment(lo: Rational, hi: Rational) -> Self {
        assert!(lo < hi, "empty segment");
        Self {
            dim: 1,
            facets: vec![Facet::new(vec![1], lo.clone()), Facet::new(vec![-1], -hi.clone())],
            vertices: vec![vec![lo], vec![hi]],
        }
    }

    /// Builds a polytope from inward inequalities `⟨ν, x⟩ ≥ c`. Returns the
    /// polytope together with, for each of its facets, the index of the input
    /// inequality it came from (so per-facet data can follow the reordering).
    pub fn from_facets(dim: usize, input: &[Facet]) -> Result<(Self, Vec<usize>)> {
        if dim == 0 {
            return Err(Error::Degenerate("dimension zero".into()));
        }
        for f in input {
            if f.normal.len() != dim {
                return Err(Error::Degenerate(format!(
                    "facet normal {:?} does not have dimension {dim}",
                    f.normal
                )));
            }
            f.check_primitive()?;
        }
        for (i, f) in input.iter().enumerate() {
            if input[..i].contains(f) {
                return Err(Error::Degenerate(format!("facet {:?} listed twice", f.normal)));
            }
        }
        if has_nontrivial_recession(dim, input) {
            return Err(Error::Degenerate("facet system is unbounded".into()));
        }
        let verts = enumerate_vertices(dim, input);
        if !affinely_full(dim, &verts) {
            return Err(Error::Degenerate(
                "facet system does not define a full-dimensional polytope".into(),
            ));
        }
        let poly = match dim {
            1 | 2 => Self::from_vertices(&verts)?,
            _ => {
                let mut vertices = verts;
                vertices.sort();
                let facets: Vec<Facet> = input.to_vec();
                Self {
                    dim,
                    facets,
                    vertices,
                }
            }
        };
        let mut map = Vec::with_capacity(poly.facets.len());
        for f in &poly.facets {
            match input.iter().position(|g| g == f) {
                Some(i) => map.push(i),
                None => {
                    return Err(Error::Degenerate(format!(
                        "internal: facet {:?} not found among inputs",
                        f.normal
                    )))
                }
            }
        }
        if dim >= 3 {
            for (i, f) in input.iter().enumerate() {
                let on: Vec<Point> = poly
                    .vertices
                    .iter()
                    .filter(|v| f.eval(v).is_zero())
                    .cloned()
                    .collect();
                if !affinely_spans(dim - 1, &on) {
                    return Err(Error::Degenerate(format!("facet {i} ({:?}) is redundant", f.normal)));
                }
            }
        } else if map.len() != input.len() {
            let unused: Vec<usize> = (0..input.len()).filter(|i| !map.contains(i)).collect();
            return Err(Error::Degenerate(format!("redundant facets {unused:?}")));
        }
        Ok((poly, map))
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        self.facets.iter().all(|f| !f.eval(x).is_negative())
    }

    /// Delzant (smoothness) test: every vertex lies on exactly `n` facets whose
    /// primitive normals form a basis of `ℤⁿ`.
    pub fn is_delzant(&self) -> bool {
        self.vertices.iter().all(|v| {
            let active: Vec<Vec<i64>> = self
                .facets
                .iter()
                .filter(|f| f.eval(v).is_zero())
                .map(|f| f.normal.clone())
                .collect();
            active.len() == self.dim && rational::det_i64(&active).abs() == 1
        })
    }

    /// Vertices lying on facet `k`.
    pub fn facet_vertices(&self, k: usize) -> Vec<&Point> {
        self.vertices
            .iter()
            .filter(|v| self.facets[k].eval(v).is_zero())
            .collect()
    }

    /// Lattice (n−1)-volume of facet `k` with unit density. Dimensions one and two.
    pub fn facet_lattice_volume(&self, k: usize) -> Result<Rational> {
        match self.dim {
            1 => Ok(Rational::one()),
            2 => {
                let m = self.vertices.len();
                Ok(lattice_length(
                    &self.vertices[k],
                    &self.vertices[(k + 1) % m],
                    &self.facets[k].normal,
                ))
            }
            d => Err(Error::UnsupportedDimension {
                dim: d,
                what: "facet measures",
            }),
        }
    }

    /// Euclidean volume (length in dimension one).
    pub fn volume(&self) -> Result<Rational> {
        match self.dim {
            1 => Ok(&self.vertices[1][0] - &self.vertices[0][0]),
            2 => Ok(polygon_area_centroid(&self.vertices).0),
            d => Err(Error::UnsupportedDimension { dim: d, what: "volume" }),
        }
    }

    pub fn centroid(&self) -> Result<Point> {
        match self.dim {
            1 => Ok(vec![(&self.vertices[0][0] + &self.vertices[1][0]) / int(2)]),
            2 => Ok(polygon_area_centroid(&self.vertices).1),
            d => Err(Error::UnsupportedDimension { dim: d, what: "centroid" }),
        }
    }

    /// Volume, σ-boundary volume, `A` and both centres of mass.
    pub fn measures(&self, sigma: &BoundaryMeasure) -> Result<Measures> {
        sigma.check(self)?;
        let volume = self.volume()?;
        let centroid = self.centroid()?;
        let mut boundary_volume = Rational::zero();
        let mut moment = vec![Rational::zero(); self.dim];
        for k in 0..self.facets.len() {
            let mass = self.facet_lattice_volume(k)? * &sigma.weights[k];
            let mid = self.facet_centroid(k);
            for (acc, x) in moment.iter_mut().zip(&mid) {
                *acc += &mass * x;
            }
            boundary_volume += mass;
        }
        let boundary_centroid = moment.into_iter().map(|m| m / &boundary_volume).collect();
        let a = &boundary_volume / &volume;
        Ok(Measures {
            volume,
            boundary_volume,
            a,
            centroid,
            boundary_centroid,
        })
    }

    fn facet_centroid(&self, k: usize) -> Point {
        match self.dim {
            1 => self.vertices[k].clone(),
            _ => {
                let m = self.vertices.len();
                let (p, q) = (&self.vertices[k], &self.vertices[(k + 1) % m]);
                p.iter().zip(q).map(|(a, b)| (a + b) / int(2)).collect()
            }
        }
    }

    /// Intersection with the half-space `⟨a, x⟩ ≥ c`; `None` when the result
    /// has empty interior.
    pub fn clip(&self, a: &[Rational], c: &Rational) -> Result<Option<Polytope>> {
        match self.dim {
            1 => {
                let (lo, hi) = (&self.vertices[0][0], &self.vertices[1][0]);
                let s = &a[0];
                if s.is_zero() {
                    return Ok(if c.is_positive() { None } else { Some(self.clone()) });
                }
                let t = c / s;
                let (nlo, nhi) = if s.is_positive() {
                    (lo.max(&t).clone(), hi.clone())
                } else {
                    (lo.clone(), hi.min(&t).clone())
                };
                Ok(if nlo < nhi { Some(Self::segment(nlo, nhi)) } else { None })
            }
            2 => {
                let clipped = clip_polygon(&self.vertices, a, c);
                if clipped.len() < 3 || polygon_area_centroid(&clipped).0.is_zero() {
                    return Ok(None);
                }
                Ok(Some(Self::from_vertices(&clipped)?))
            }
            d => Err(Error::UnsupportedDimension { dim: d, what: "clipping" }),
        }
    }

    /// Image under `x ↦ T x + shift` for an invertible integer matrix `T`,
    /// with the boundary weights carried along to the image facets.
    pub fn transform(
        &self,
        sigma: &BoundaryMeasure,
        t: &[Vec<i64>],
        shift: &[Rational],
    ) -> Result<(Polytope, BoundaryMeasure)> {
        sigma.check(self)?;
        let map = |v: &Point| -> Point {
            t.iter()
                .zip(shift)
                .map(|(row, s)| dot_int(row, v) + s)
                .collect()
        };
        let image: Vec<Point> = self.vertices.iter().map(map).collect();
        let out = Self::from_vertices(&image)?;
        let mut weights = Vec::with_capacity(out.facets.len());
        for j in 0..out.facets.len() {
            let on_j: Vec<Point> = out.facet_vertices(j).into_iter().cloned().collect();
            let k = (0..self.facets.len())
                .find(|&k| {
                    let img: Vec<Point> = self.facet_vertices(k).into_iter().map(map).collect();
                    img.len() == on_j.len() && img.iter().all(|p| on_j.contains(p))
                })
                .ok_or_else(|| Error::Degenerate("transform is not invertible".into()))?;
            weights.push(sigma.weights[k].clone());
        }
        Ok((out, BoundaryMeasure { weights }))
    }

    /// Euclidean diameter (largest vertex distance), in floating point.
    pub fn diameter(&self) -> f64 {
        let pts: Vec<Vec<f64>> = self
            .vertices
            .iter()
            .map(|v| v.iter().map(rational::to_f64).collect())
            .collect();
        let mut best = 0.0f64;
        for (i, p) in pts.iter().enumerate() {
            for q in &pts[i + 1..] {
                let d: f64 = p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum();
                best = best.max(d.sqrt());
            }
        }
        best
    }

    /// Range of the linear form `⟨a, x⟩` over the polytope.
    pub fn linear_range(&self, a: &[Rational]) -> (Rational, Rational) {
        let vals: Vec<Rational> = self.vertices.iter().map(|v| dot(a, v)).collect();
        (
            vals.iter().min().unwrap().clone(),
            vals.iter().max().unwrap().clone(),
        )
    }

    /// Axis-aligned box description `(lo, hi)` if the polytope is a segment or
    /// rectangle, together with the facet index for each `(axis, side)`.
    pub fn as_box(&self) -> Option<BoxShape> {
        if self.dim > 2 || self.facets.len() != 2 * self.dim {
            return None;
        }
        let mut lo = vec![Rational::zero(); self.dim];
        let mut hi = vec![Rational::zero(); self.dim];
        let mut facet_of = vec![[usize::MAX; 2]; self.dim];
        for (k, f) in self.facets.iter().enumerate() {
            let nz: Vec<usize> = (0..self.dim).filter(|&i| f.normal[i] != 0).collect();
            if nz.len() != 1 {
                return None;
            }
            let axis = nz[0];
            match f.normal[axis] {
                1 => {
                    lo[axis] = f.offset.clone();
                    facet_of[axis][0] = k;
                }
                -1 => {
                    hi[axis] = -f.offset.clone();
                    facet_of[axis][1] = k;
                }
                _ => return None,
            }
        }
        if facet_of.iter().any(|s| s.contains(&usize::MAX)) {
            return None;
        }
        Some(BoxShape { lo, hi, facet_of })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxShape {
    pub lo: Vec<Rational>,
    pub hi: Vec<Rational>,
    /// `facet_of[axis][0]` is the facet `x_axis = lo`, `[1]` the facet `x_axis = hi`.
    pub facet_of: Vec<[usize; 2]>,
}

fn cross(o: &Point, a: &Point, b: &Point) -> Rational {
    (&a[0] - &o[0]) * (&b[1] - &o[1]) - (&a[1] - &o[1]) * (&b[0] - &o[0])
}

/// Andrew's monotone chain; counterclockwise, collinear points dropped,
/// starting at the lexicographically smallest point.
fn convex_hull_2d(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && !cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p).is_positive() {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Point> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && !cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p).is_positive() {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Inward facet of the counterclockwise edge `p → q`.
fn edge_facet(p: &Point, q: &Point) -> Facet {
    let dx = &q[0] - &p[0];
    let dy = &q[1] - &p[1];
    let (normal, _) = primitive_direction(&[-dy, dx]).expect("edge of positive length");
    let offset = dot_int(&normal, p);
    Facet { normal, offset }
}

/// Lattice length of the segment `p → q` lying on a line with primitive normal `ν`.
pub(crate) fn lattice_length(p: &Point, q: &Point, normal: &[i64]) -> Rational {
    // The primitive lattice direction along the line is (ν₂, −ν₁).
    let (a, b) = (normal[0], normal[1]);
    let t = if b != 0 {
        (&q[0] - &p[0]) / int(b)
    } else {
        (&q[1] - &p[1]) / int(-a)
    };
    t.abs()
}

/// Exact area and centroid of a counterclockwise polygon.
pub(crate) fn polygon_area_centroid(vs: &[Point]) -> (Rational, Point) {
    let m = vs.len();
    let mut twice_area = Rational::zero();
    let mut cx = Rational::zero();
    let mut cy = Rational::zero();
    for i in 0..m {
        let (p, q) = (&vs[i], &vs[(i + 1) % m]);
        let c = &p[0] * &q[1] - &q[0] * &p[1];
        cx += (&p[0] + &q[0]) * &c;
        cy += (&p[1] + &q[1]) * &c;
        twice_area += c;
    }
    if twice_area.is_zero() {
        return (Rational::zero(), vec![Rational::zero(), Rational::zero()]);
    }
    let six_area = &twice_area * int(3);
    let area = twice_area / int(2);
    (area, vec![cx / &six_area, cy / six_area])
}

/// Sutherland–Hodgman against one half-space `⟨a, x⟩ ≥ c`.
pub(crate) fn clip_polygon(vs: &[Point], a: &[Rational], c: &Rational) -> Vec<Point> {
    let m = vs.len();
    let val: Vec<Rational> = vs.iter().map(|v| dot(a, v) - c).collect();
    let mut out = Vec::with_capacity(m + 1);
    for i in 0..m {
        let j = (i + 1) % m;
        let (p, q) = (&vs[i], &vs[j]);
        let (vp, vq) = (&val[i], &val[j]);
        if !vp.is_negative() {
            out.push(p.clone());
        }
        if (vp.is_negative() && vq.is_positive()) || (vp.is_positive() && vq.is_negative()) {
            let t = vp / (vp - vq);
            out.push(p.iter().zip(q).map(|(x, y)| x + (y - x) * &t).collect());
        }
    }
    out.dedup();
    if out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

fn enumerate_vertices(dim: usize, facets: &[Facet]) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    let m = facets.len();
    let mut idx: Vec<usize> = (0..dim).collect();
    if m < dim {
        return out;
    }
    loop {
        let a: Vec<Vec<Rational>> = idx
            .iter()
            .map(|&i| facets[i].normal.iter().map(|&x| int(x)).collect())
            .collect();
        let b: Vec<Rational> = idx.iter().map(|&i| facets[i].offset.clone()).collect();
        if let Some(x) = rational::solve_exact(a, b) {
            if facets.iter().all(|f| !f.eval(&x).is_negative()) && !out.contains(&x) {
                out.push(x);
            }
        }
        // next combination
        let mut k = dim;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if idx[k] < m - dim + k {
                idx[k] += 1;
                for j in k + 1..dim {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn rank(rows: &[Vec<Rational>]) -> usize {
    let mut a: Vec<Vec<Rational>> = rows.to_vec();
    let cols = a.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        for i in 0..a.len() {
            if i != r && !a[i][c].is_zero() {
                let f = &a[i][c] / &a[r][c];
                for j in c..cols {
                    let t = &f * &a[r][j];
                    a[i][j] -= t;
                }
            }
        }
        r += 1;
    }
    r
}

fn affinely_spans(k: usize, pts: &[Point]) -> bool {
    if pts.len() < k + 1 {
        return false;
    }
    let diffs: Vec<Vec<Rational>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| a - b).collect())
        .collect();
    rank(&diffs) >= k
}

fn affinely_full(dim: usize, pts: &[Point]) -> bool {
    affinely_spans(dim, pts)
}

/// True if `{d : ⟨ν_k, d⟩ ≥ 0 ∀k}` contains a non-zero direction.
fn has_nontrivial_recession(dim: usize, facets: &[Facet]) -> bool {
    let normals: Vec<Vec<Rational>> = facets
        .iter()
        .map(|f| f.normal.iter().map(|&x| int(x)).collect())
        .collect();
    if rank(&normals) < dim {
        return true;
    }
    if dim == 1 {
        let pos = facets.iter().any(|f| f.normal[0] > 0);
        let neg = facets.iter().any(|f| f.normal[0] < 0);
        return !(pos && neg);
    }
    // Extreme rays of a pointed cone: kernels of (dim−1)-subsets of normals.
    let m = facets.len();
    let mut idx: Vec<usize> = (0..dim - 1).collect();
    loop {
        if let Some(d) = kernel_direction(&idx.iter().map(|&i| normals[i].clone()).collect::<Vec<_>>(), dim) {
            for sign in [1i64, -1] {
                let dd: Vec<Rational> = d.iter().map(|x| x * int(sign)).collect();
                if normals.iter().all(|n| !dot(n, &dd).is_negative()) {
                    return true;
                }
            }
        }
        let mut k = dim - 1;
        loop {
            if k == 0 {
                return false;
            }
            k -= 1;
            if idx[k] < m - (dim - 1) + k {
                idx[k] += 1;
                for j in k + 1..dim - 1 {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// A generator of the kernel of a (dim−1)×dim matrix of rank dim−1.
fn kernel_direction(rows: &[Vec<Rational>], dim: usize) -> Option<Vec<Rational>> {
    if rank(rows) != dim - 1 {
        return None;
    }
    // Try each unit completion row until the system is solvable.
    for j in 0..dim {
        let mut a = rows.to_vec();
        let mut e = vec![Rational::zero(); dim];
        e[j] = Rational::one();
        a.push(e);
        let mut b = vec![Rational::zero(); dim - 1];
        b.push(Rational::one());
        if let Some(x) = rational::solve_exact(a, b) {
            return Some(x);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn pts(v: &[(i64, i64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| vec![int(x), int(y)]).collect()
    }

    #[test]
    fn unit_square_from_vertices() {
        let p = Polytope::from_vertices(&pts(&[(0, 0), (1, 0), (0, 1), (1, 1)])).unwrap();
        assert_eq!(p.facets().len(), 4);
        assert_eq!(p.vertices().len(), 4);
        for f in p.facets() {
            assert_eq!(rational::gcd_slice(&f.normal), 1);
        }
        assert!(p.is_delzant());
    }

    #[test]
    fn trapezoid_normals() {
        let p = Polytope::from_vertices(&pts(&[(0, 0), (2, 0), (1, 1), (0, 1)])).unwrap();
        let normals: Vec<Vec<i64>> = p.facets().iter().map(|f| f.normal.clone()).collect();
        assert_eq!(normals, vec![vec![0, 1], vec![-1, -1], vec![0, -1], vec![1, 0]]);
        assert_eq!(p.facets()[1].offset, int(-2));
    }

    #[test]
    fn collinear_points_rejected() {
        let err = Polytope::from_vertices(&pts(&[(0, 0), (1, 0), (2, 0)])).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn delzant_triangles() {
        let cp2 = Polytope::from_vertices(&pts(&[(0, 0), (2, 0), (0, 2)])).unwrap();
        assert!(cp2.is_delzant());
        let bad = Polytope::from_vertices(&pts(&[(0, 0), (1, 0), (0, 2)])).unwrap();
        assert!(!bad.is_delzant());
    }

    #[test]
    fn measures_of_square_and_segments() {
        let sq = Polytope::from_vertices(&pts(&[(0, 0), (1, 0), (0, 1), (1, 1)])).unwrap();
        let m = sq.measures(&BoundaryMeasure::uniform(4)).unwrap();
        assert_eq!(m.volume, int(1));
        assert_eq!(m.boundary_volume, int(4));
        assert_eq!(m.a, int(4));
        assert_eq!(m.centroid, vec![ratio(1, 2), ratio(1, 2)]);
        assert_eq!(m.boundary_centroid, vec![ratio(1, 2), ratio(1, 2)]);

        let seg = Polytope::from_vertices(&[vec![int(0)], vec![int(1)]]).unwrap();
        let m = seg.measures(&BoundaryMeasure::uniform(2)).unwrap();
        assert_eq!((m.volume.clone(), m.boundary_volume.clone(), m.a.clone()), (int(1), int(2), int(2)));
        let w = BoundaryMeasure::new(vec![int(1), int(2)]).unwrap();
        let m = seg.measures(&w).unwrap();
        assert_eq!(m.a, int(3));
        assert_eq!(m.centroid, vec![ratio(1, 2)]);
        assert_eq!(m.boundary_centroid, vec![ratio(2, 3)]);
    }

    #[test]
    fn lattice_normalised_edge_lengths() {
        let tri = Polytope::from_vertices(&pts(&[(0, 0), (2, 0), (0, 2)])).unwrap();
        let k = tri.facets().iter().position(|f| f.normal == vec![-1, -1]).unwrap();
        assert_eq!(tri.facet_lattice_volume(k).unwrap(), int(2));
        let sq = Polytope::from_vertices(&pts(&[(0, 0), (1, 0), (0, 1), (1, 1)])).unwrap();
        for k in 0..4 {
            assert_eq!(sq.facet_lattice_volume(k).unwrap(), int(1));
        }
    }

    #[test]
    fn clipping_examples() {
        let sq = Polytope::from_vertices(&pts(&[(0, 0), (1, 0), (0, 1), (1, 1)])).unwrap();
        let half = sq.clip(&[int(1), int(0)], &ratio(1, 2)).unwrap().unwrap();
        assert_eq!(half.volume().unwrap(), ratio(1, 2));
        assert_eq!(half.linear_range(&[int(1), int(0)]), (ratio(1, 2), int(1)));
        assert!(sq.clip(&[int(1), int(0)], &int(2)).unwrap().is_none());

        let trap = Polytope::from_vertices(&pts(&[(0, 0), (2, 0), (1, 1), (0, 1)])).unwrap();
        let cut = trap.clip(&[int(-1), int(0)], &int(-1)).unwrap().unwrap();
        assert_eq!(cut.volume().unwrap(), int(1));
        assert_eq!(cut.vertices(), sq.vertices());
    }

    #[test]
    fn facets_round_trip() {
        let trap = Polytope::from_vertices(&pts(&[(0, 0), (2, 0), (1, 1), (0, 1)])).unwrap();
        let mut shuffled = trap.facets().to_vec();
        shuffled.reverse();
        let (q, map) = Polytope::from_facets(2, &shuffled).unwrap();
        assert_eq!(q, trap);
        assert_eq!(map, vec![3, 2, 1, 0]);
    }

    #[test]
    fn from_facets_rejects_bad_systems() {
        let non_prim = [Facet::new(vec![2, 0], int(0))];
        assert!(matches!(
            Polytope::from_facets(2, &non_prim),
            Err(Error::NonPrimitiveNormal { gcd: 2, .. })
        ));
        let open = [Facet::new(vec![1, 0], int(0)), Facet::new(vec![0, 1], int(0))];
        assert!(Polytope::from_facets(2, &open).is_err());
        let redundant = [
            Facet::new(vec![1, 0], int(0)),
            Facet::new(vec![0, 1], int(0)),
            Facet::new(vec![-1, 0], int(-1)),
            Facet::new(vec![0, -1], int(-1)),
            Facet::new(vec![-1, 0], int(-5)),
        ];
        assert!(Polytope::from_facets(2, &redundant).is_err());
    }

    #[test]
    fn cube_from_facets_in_three_dimensions() {
        let mut fs = Vec::new();
        for i in 0..3 {
            let mut e = vec![0; 3];
            e[i] = 1;
            fs.push(Facet::new(e.clone(), int(0)));
            e[i] = -1;
            fs.push(Facet::new(e, int(-1)));
        }
        let (cube, _) = Polytope::from_facets(3, &fs).unwrap();
        assert_eq!(cube.vertices().len(), 8);
        assert!(cube.is_delzant());

        let open = [
            Facet::new(vec![1, 0, 0], int(0)),
            Facet::new(vec![-1, 0, 0], int(-1)),
            Facet::new(vec![0, 1, 0], int(0)),
            Facet::new(vec![0, -1, 0], int(-1)),
            Facet::new(vec![0, 0, 1], int(0)),
            Facet::new(vec![-1, -1, 1], int(-1)),
        ];
        assert!(Polytope::from_facets(3, &open).is_err());
    }

    #[test]
    fn box_detection() {
        let sq = Polytope::from_vertices(&pts(&[(0, 0), (2, 0), (0, 1), (2, 1)])).unwrap();
        let b = sq.as_box().unwrap();
        assert_eq!(b.hi, vec![int(2), int(1)]);
        let trap = Polytope::from_vertices(&pts(&[(0, 0), (2, 0), (1, 1), (0, 1)])).unwrap();
        assert!(trap.as_box().is_none());
    }
}
