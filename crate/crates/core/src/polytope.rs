//! Convex polytopes in dimensions one through four, held in vertex and
//! half-space form at the same time.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{affine_dim, combinations, cross, lex_cmp, norm_inf, rank, to_f64_vec};
use crate::lp::{LinearProgram, LpError, LpOutcome};
use crate::scalar::Scalar;

pub const MAX_DIM: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("points span an affine subspace of dimension {found}, expected {expected}")]
    DegenerateInput { found: usize, expected: usize },
    #[error("origin is not an interior point")]
    OriginNotInterior,
    #[error("{point:?} is not a vertex")]
    NotAVertex { point: Vec<f64> },
    #[error("half-spaces do not describe a bounded polytope")]
    Unbounded,
    #[error("half-spaces describe an empty set")]
    Empty,
    #[error("dimension {0} is outside the supported range 1..=4")]
    UnsupportedDimension(usize),
    #[error("expected a vector of length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vertex {point:?} violates a supplied half-space")]
    Inconsistent { point: Vec<f64> },
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// `normal . x <= offset`, with `normal` of unit length.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace<T: Scalar> {
    pub normal: DVector<T>,
    pub offset: T,
}

impl<T: Scalar> Halfspace<T> {
    /// Signed violation `normal . x - offset`.
    pub fn eval(&self, x: &DVector<T>) -> T {
        self.normal.dot(x) - self.offset
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    Interior,
    Boundary,
    Outside,
}

#[derive(Clone, Debug)]
pub struct TangentCone<T: Scalar> {
    pub vertex: DVector<T>,
    /// Indices of the facets through the vertex.
    pub facets: Vec<usize>,
    pub normals: Vec<DVector<T>>,
}

impl<T: Scalar> TangentCone<T> {
    pub fn contains(&self, y: &DVector<T>, tol: T) -> bool {
        self.normals.iter().all(|h| h.dot(y) <= tol)
    }

    /// Membership in the interior `C°(v)`.
    pub fn contains_strictly(&self, y: &DVector<T>, tol: T) -> bool {
        self.normals.iter().all(|h| h.dot(y) < -tol)
    }
}

#[derive(Clone, Debug)]
pub struct Triangulation<T: Scalar> {
    /// `points[0]` is the origin; the rest are the polytope's vertices.
    pub points: Vec<DVector<T>>,
    pub simplices: Vec<Vec<usize>>,
}

impl<T: Scalar> Triangulation<T> {
    pub fn simplex_points(&self, i: usize) -> Vec<&DVector<T>> {
        self.simplices[i].iter().map(|&k| &self.points[k]).collect()
    }

    pub fn simplex_volume(&self, i: usize) -> T {
        simplex_volume(&self.simplex_points(i))
    }

    pub fn volume(&self) -> T {
        (0..self.simplices.len())
            .map(|i| self.simplex_volume(i))
            .fold(T::zero(), |a, b| a + b)
    }
}

/// Volume of the simplex spanned by `n + 1` points in `R^n`.
pub fn simplex_volume<T: Scalar>(points: &[&DVector<T>]) -> T {
    let n = points[0].len();
    let mut m = DMatrix::zeros(n, n);
    for (j, p) in points[1..].iter().enumerate() {
        m.set_column(j, &(*p - points[0]));
    }
    let mut fact = T::one();
    for k in 2..=n {
        fact *= T::lit(k as f64);
    }
    m.determinant().abs() / fact
}

#[derive(Clone, Debug)]
pub struct Polytope<T: Scalar> {
    dim: usize,
    vertices: Vec<DVector<T>>,
    halfspaces: Vec<Halfspace<T>>,
    /// Vertex indices on each facet, aligned with `halfspaces`.
    facets: Vec<Vec<usize>>,
}

/// Convex hull of a finite point set.
pub fn hull_from_points<T: Scalar>(points: &[DVector<T>]) -> Result<Polytope<T>, GeometryError> {
    Polytope::hull(points)
}

impl<T: Scalar> Polytope<T> {
    pub fn hull(points: &[DVector<T>]) -> Result<Self, GeometryError> {
        let first = points.first().ok_or(GeometryError::Empty)?;
        let n = first.len();
        if n == 0 || n > MAX_DIM {
            return Err(GeometryError::UnsupportedDimension(n));
        }
        if let Some(p) = points.iter().find(|p| p.len() != n) {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                found: p.len(),
            });
        }
        let tols = T::tolerances();
        let refs: Vec<&DVector<T>> = points.iter().collect();
        let found = affine_dim(&refs, tols.lin).unwrap_or(0);
        if found < n {
            return Err(GeometryError::DegenerateInput { found, expected: n });
        }
        let scale = coordinate_scale(points);
        let tol = tols.geo * scale;
        let mut pts: Vec<DVector<T>> = Vec::with_capacity(points.len());
        for p in points {
            if pts.iter().all(|q| norm_inf(&(p - q)) > tol) {
                pts.push(p.clone());
            }
        }
        pts.sort_by(lex_cmp);

        let poly = match n {
            1 => hull_1d(&pts),
            2 => hull_2d(&pts, tol, scale),
            _ => hull_nd(&pts, tol),
        };
        Ok(poly)
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn from_box(lo: &[T], hi: &[T]) -> Result<Self, GeometryError> {
        if lo.len() != hi.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        let n = lo.len();
        let corners: Vec<DVector<T>> = (0..1usize << n)
            .map(|mask| {
                DVector::from_iterator(
                    n,
                    (0..n).map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] }),
                )
            })
            .collect();
        Self::hull(&corners)
    }

    /// Polytope `{x : h_i . x <= c_i}`; normals need not be unit length.
    pub fn from_halfspaces(dim: usize, raw: &[(DVector<T>, T)]) -> Result<Self, GeometryError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(GeometryError::UnsupportedDimension(dim));
        }
        let tols = T::tolerances();
        let mut hs = Vec::with_capacity(raw.len());
        for (h, c) in raw {
            if h.len() != dim {
                return Err(GeometryError::DimensionMismatch {
                    expected: dim,
                    found: h.len(),
                });
            }
            let norm = h.norm();
            if norm <= tols.pivot {
                if *c < T::zero() {
                    return Err(GeometryError::Empty);
                }
                continue;
            }
            hs.push(Halfspace {
                normal: h / norm,
                offset: *c / norm,
            });
        }
        for axis in 0..2 * dim {
            let mut obj = vec![T::zero(); dim];
            obj[axis / 2] = if axis % 2 == 0 { T::one() } else { -T::one() };
            let mut lp = LinearProgram::new(dim);
            lp.maximize(obj);
            for h in &hs {
                lp.add_le(h.normal.iter().copied().collect(), h.offset);
            }
            match lp.solve(&tols)? {
                LpOutcome::Optimal(_) => {}
                LpOutcome::Infeasible => return Err(GeometryError::Empty),
                LpOutcome::Unbounded => return Err(GeometryError::Unbounded),
            }
        }
        let scale = hs
            .iter()
            .fold(T::one(), |acc, h| acc.max(h.offset.abs()));
        let tol = tols.geo * scale;
        let mut candidates = Vec::new();
        for combo in combinations(hs.len(), dim) {
            let mut m = DMatrix::zeros(dim, dim);
            let mut rhs = DVector::zeros(dim);
            for (r, &i) in combo.iter().enumerate() {
                m.set_row(r, &hs[i].normal.transpose());
                rhs[r] = hs[i].offset;
            }
            if rank(&m, tols.lin) < dim {
                continue;
            }
            let Some(x) = m.lu().solve(&rhs) else {
                continue;
            };
            if hs.iter().all(|h| h.eval(&x) <= tol) {
                candidates.push(x);
            }
        }
        if candidates.is_empty() {
            return Err(GeometryError::Empty);
        }
        Self::hull(&candidates)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[DVector<T>] {
        &self.vertices
    }

    pub fn halfspaces(&self) -> &[Halfspace<T>] {
        &self.halfspaces
    }

    pub fn facets(&self) -> &[Vec<usize>] {
        &self.facets
    }

    /// Absolute tolerance used for incidence and membership on this polytope.
    pub fn tolerance(&self) -> T {
        T::tolerances().geo * coordinate_scale(&self.vertices)
    }

    pub fn vertex_index(&self, v: &DVector<T>) -> Option<usize> {
        let tol = self.tolerance() * T::lit(10.0);
        self.vertices
            .iter()
            .position(|w| w.len() == v.len() && norm_inf(&(w - v)) <= tol)
    }

    pub fn contains(&self, x: &DVector<T>, tol: T) -> Membership {
        let worst = self
            .halfspaces
            .iter()
            .map(|h| h.eval(x))
            .fold(T::min_value().unwrap_or(-T::one()), |a, b| a.max(b));
        if worst < -tol {
            Membership::Interior
        } else if worst <= tol {
            Membership::Boundary
        } else {
            Membership::Outside
        }
    }

    /// `contains` with the polytope's own tolerance.
    pub fn membership(&self, x: &DVector<T>) -> Membership {
        self.contains(x, self.tolerance())
    }

    pub fn tangent_cone(&self, v: &DVector<T>) -> Result<TangentCone<T>, GeometryError> {
        let idx = self.vertex_index(v).ok_or_else(|| GeometryError::NotAVertex {
            point: to_f64_vec(v),
        })?;
        Ok(self.tangent_cone_at(idx))
    }

    pub fn tangent_cone_at(&self, index: usize) -> TangentCone<T> {
        let v = &self.vertices[index];
        let tol = self.tolerance();
        let facets: Vec<usize> = self
            .halfspaces
            .iter()
            .enumerate()
            .filter(|(_, h)| h.eval(v).abs() <= tol * T::one().max(h.offset.abs()))
            .map(|(i, _)| i)
            .collect();
        let normals = facets
            .iter()
            .map(|&i| self.halfspaces[i].normal.clone())
            .collect();
        TangentCone {
            vertex: v.clone(),
            facets,
            normals,
        }
    }

    pub fn is_simplicial(&self) -> bool {
        self.facets.iter().all(|f| f.len() == self.dim)
    }

    pub fn origin_is_interior(&self) -> bool {
        let tol = self.tolerance();
        self.halfspaces.iter().all(|h| h.offset > tol)
    }

    /// Facet functionals `n_i` with `X = {x : n_i . x <= 1}`.
    pub fn normalized_normals(&self) -> Result<Vec<DVector<T>>, GeometryError> {
        if !self.origin_is_interior() {
            return Err(GeometryError::OriginNotInterior);
        }
        Ok(self
            .halfspaces
            .iter()
            .map(|h| &h.normal / h.offset)
            .collect())
    }

    /// Fan triangulation with the origin as a common apex.
    pub fn triangulate_with_origin(&self) -> Result<Triangulation<T>, GeometryError> {
        if !self.origin_is_interior() {
            return Err(GeometryError::OriginNotInterior);
        }
        let mut points = Vec::with_capacity(self.vertices.len() + 1);
        points.push(DVector::zeros(self.dim));
        points.extend(self.vertices.iter().cloned());
        let mut simplices = Vec::new();
        for facet in &self.facets {
            for piece in self.triangulate_face(facet, self.dim - 1) {
                let mut s = Vec::with_capacity(self.dim + 1);
                s.push(0);
                s.extend(piece.iter().map(|&k| k + 1));
                simplices.push(s);
            }
        }
        Ok(Triangulation { points, simplices })
    }

    /// Pulling triangulation of a `d`-dimensional face from its
    /// lexicographically smallest vertex.
    fn triangulate_face(&self, face: &[usize], d: usize) -> Vec<Vec<usize>> {
        if face.len() == d + 1 {
            return vec![face.to_vec()];
        }
        let apex = *face
            .iter()
            .min_by(|&&a, &&b| lex_cmp(&self.vertices[a], &self.vertices[b]))
            .expect("faces are non-empty");
        let lin = T::tolerances().lin;
        let mut subfaces: Vec<Vec<usize>> = Vec::new();
        for facet in &self.facets {
            let sub: Vec<usize> = face.iter().copied().filter(|k| facet.contains(k)).collect();
            if sub.len() < d || sub.len() == face.len() || sub.contains(&apex) {
                continue;
            }
            let refs: Vec<&DVector<T>> = sub.iter().map(|&k| &self.vertices[k]).collect();
            if affine_dim(&refs, lin) != Some(d - 1) || subfaces.contains(&sub) {
                continue;
            }
            subfaces.push(sub);
        }
        let mut out = Vec::new();
        for sub in subfaces {
            for piece in self.triangulate_face(&sub, d - 1) {
                let mut s = Vec::with_capacity(d + 1);
                s.push(apex);
                s.extend(piece);
                out.push(s);
            }
        }
        out
    }

    /// `lambda X`.
    pub fn scale(&self, lambda: T) -> Self {
        Self {
            dim: self.dim,
            vertices: self.vertices.iter().map(|v| v * lambda).collect(),
            halfspaces: self
                .halfspaces
                .iter()
                .map(|h| Halfspace {
                    normal: h.normal.clone(),
                    offset: h.offset * lambda,
                })
                .collect(),
            facets: self.facets.clone(),
        }
    }

    /// `X + d`.
    pub fn translate(&self, d: &DVector<T>) -> Self {
        Self {
            dim: self.dim,
            vertices: self.vertices.iter().map(|v| v + d).collect(),
            halfspaces: self
                .halfspaces
                .iter()
                .map(|h| Halfspace {
                    normal: h.normal.clone(),
                    offset: h.offset + h.normal.dot(d),
                })
                .collect(),
            facets: self.facets.clone(),
        }
    }

    /// Largest `lambda` with `lambda X` inside `outer`.
    pub fn max_inscribed_scale(&self, outer: &Self) -> Result<T, GeometryError> {
        if !self.origin_is_interior() || !outer.origin_is_interior() {
            return Err(GeometryError::OriginNotInterior);
        }
        let mut worst = T::zero();
        for v in &self.vertices {
            for h in &outer.halfspaces {
                worst = worst.max(h.normal.dot(v) / h.offset);
            }
        }
        Ok(if worst > T::zero() {
            T::one() / worst
        } else {
            T::max_value().unwrap_or(T::one())
        })
    }

    pub fn bounding_box(&self) -> (DVector<T>, DVector<T>) {
        let mut lo = self.vertices[0].clone();
        let mut hi = self.vertices[0].clone();
        for v in &self.vertices[1..] {
            for i in 0..self.dim {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        (lo, hi)
    }

    /// Rejection sampling from the bounding box; returns points strictly inside.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<DVector<T>> {
        let (lo, hi) = self.bounding_box();
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let x = DVector::from_iterator(
                self.dim,
                (0..self.dim).map(|i| lo[i] + (hi[i] - lo[i]) * T::lit(rng.random::<f64>())),
            );
            if self.membership(&x) == Membership::Interior {
                out.push(x);
            }
        }
        out
    }

    /// Hausdorff-free comparison of vertex sets up to ordering.
    pub fn same_vertices(&self, other: &Self, tol: T) -> bool {
        self.vertices.len() == other.vertices.len()
            && self
                .vertices
                .iter()
                .all(|v| other.vertices.iter().any(|w| norm_inf(&(v - w)) <= tol))
    }
}

fn coordinate_scale<T: Scalar>(points: &[DVector<T>]) -> T {
    points
        .iter()
        .fold(T::one(), |acc, p| acc.max(norm_inf(p)))
}

fn hull_1d<T: Scalar>(pts: &[DVector<T>]) -> Polytope<T> {
    let lo = pts[0].clone();
    let hi = pts[pts.len() - 1].clone();
    Polytope {
        dim: 1,
        halfspaces: vec![
            Halfspace {
                normal: DVector::from_element(1, -T::one()),
                offset: -lo[0],
            },
            Halfspace {
                normal: DVector::from_element(1, T::one()),
                offset: hi[0],
            },
        ],
        vertices: vec![lo, hi],
        facets: vec![vec![0], vec![1]],
    }
}

fn turn<T: Scalar>(o: &DVector<T>, a: &DVector<T>, b: &DVector<T>) -> T {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Monotone chain; vertices come out counter-clockwise starting from the
/// lexicographically smallest one, collinear points dropped.
fn hull_2d<T: Scalar>(pts: &[DVector<T>], tol: T, scale: T) -> Polytope<T> {
    let area_tol = tol * scale;
    let mut chain: Vec<DVector<T>> = Vec::with_capacity(2 * pts.len());
    for p in pts {
        while chain.len() >= 2 && turn(&chain[chain.len() - 2], &chain[chain.len() - 1], p) <= area_tol {
            chain.pop();
        }
        chain.push(p.clone());
    }
    let lower_len = chain.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while chain.len() >= lower_len
            && turn(&chain[chain.len() - 2], &chain[chain.len() - 1], p) <= area_tol
        {
            chain.pop();
        }
        chain.push(p.clone());
    }
    chain.pop();
    let k = chain.len();
    let mut halfspaces = Vec::with_capacity(k);
    let mut facets = Vec::with_capacity(k);
    for i in 0..k {
        let j = (i + 1) % k;
        let d = &chain[j] - &chain[i];
        let normal = DVector::from_vec(vec![d[1], -d[0]]).normalize();
        let offset = normal.dot(&chain[i]);
        halfspaces.push(Halfspace { normal, offset });
        facets.push(vec![i, j]);
    }
    Polytope {
        dim: 2,
        vertices: chain,
        halfspaces,
        facets,
    }
}

/// Facet enumeration over `n`-subsets of the points. Quadratic-ish in the
/// number of subsets, which is fine at the sizes this crate targets.
fn hull_nd<T: Scalar>(pts: &[DVector<T>], tol: T) -> Polytope<T> {
    let n = pts[0].len();
    let lin = T::tolerances().lin;
    let mut planes: Vec<(Halfspace<T>, Vec<usize>)> = Vec::new();
    for combo in combinations(pts.len(), n) {
        let mut rows = DMatrix::zeros(n - 1, n);
        let mut row_scale = T::one();
        for (r, &i) in combo[1..].iter().enumerate() {
            let d = &pts[i] - &pts[combo[0]];
            row_scale *= d.norm();
            rows.set_row(r, &d.transpose());
        }
        let raw = cross(&rows);
        let norm = raw.norm();
        if norm <= lin * row_scale || norm <= T::zero() {
            continue;
        }
        let mut normal = raw / norm;
        let mut offset = normal.dot(&pts[combo[0]]);
        let side: Vec<T> = pts.iter().map(|p| normal.dot(p) - offset).collect();
        let max = side.iter().copied().fold(-T::one() / T::zero(), |a, b| a.max(b));
        let min = side.iter().copied().fold(T::one() / T::zero(), |a, b| a.min(b));
        if max > tol {
            if min < -tol {
                continue;
            }
            normal = -normal;
            offset = -offset;
        }
        let incident: Vec<usize> = (0..pts.len()).filter(|&i| side[i].abs() <= tol).collect();
        if planes.iter().any(|(_, inc)| *inc == incident) {
            continue;
        }
        planes.push((Halfspace { normal, offset }, incident));
    }

    // Extreme points: incident facet normals span R^n.
    let mut keep: Vec<usize> = Vec::new();
    for i in 0..pts.len() {
        let normals: Vec<&DVector<T>> = planes
            .iter()
            .filter(|(_, inc)| inc.contains(&i))
            .map(|(h, _)| &h.normal)
            .collect();
        if normals.len() < n {
            continue;
        }
        let mut m = DMatrix::zeros(normals.len(), n);
        for (r, h) in normals.iter().enumerate() {
            m.set_row(r, &h.transpose());
        }
        if rank(&m, lin) == n {
            keep.push(i);
        }
    }
    let remap = |i: usize| keep.iter().position(|&k| k == i);
    let vertices: Vec<DVector<T>> = keep.iter().map(|&i| pts[i].clone()).collect();
    let mut halfspaces = Vec::with_capacity(planes.len());
    let mut facets = Vec::with_capacity(planes.len());
    for (h, inc) in planes {
        let mut f: Vec<usize> = inc.into_iter().filter_map(remap).collect();
        f.sort_unstable();
        halfspaces.push(h);
        facets.push(f);
    }
    Polytope {
        dim: n,
        vertices,
        halfspaces,
        facets,
    }
}

impl<T: Scalar> PartialEq for Polytope<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.vertices == other.vertices
            && self.halfspaces == other.halfspaces
            && self.facets == other.facets
    }
}

/// Orders vertices lexicographically; used for stable comparisons in tests
/// and serialized output.
pub fn sorted_vertices<T: Scalar>(p: &Polytope<T>) -> Vec<DVector<T>> {
    let mut v = p.vertices().to_vec();
    v.sort_by(lex_cmp);
    v
}
