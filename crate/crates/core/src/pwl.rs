//! Continuous piecewise-linear feedback on an origin fan of the region,
//! together with the max-of-facets Lyapunov function it decreases.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ibc::{IbcError, InputSet};
use crate::linalg::to_f64_vec;
use crate::polytope::{GeometryError, Polytope, Triangulation};
use crate::scalar::Scalar;
use crate::system::LinearSystem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PwlError {
    #[error("no admissible control at vertex {vertex:?}")]
    AssignmentFails { vertex: Vec<f64> },
    #[error("simplex {index} is degenerate")]
    DegenerateSimplex { index: usize },
    #[error("simplex {index} needs an affine offset of size {offset:e}")]
    NonLinearGain { index: usize, offset: f64 },
    #[error("{point:?} lies outside the triangulated region")]
    OutsideDomain { point: Vec<f64> },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Ibc(#[from] IbcError),
}

/// Control values for each vertex of `x`, in vertex order.
///
/// Equilibrium vertices get the input that holds them at rest, the rest get
/// the input maximizing the strict invariance margin.
pub fn assign_vertex_controls<T: Scalar>(
    sys: &LinearSystem<T>,
    x: &Polytope<T>,
    inputs: &InputSet<T>,
) -> Result<Vec<DVector<T>>, PwlError> {
    let tol = T::tolerances().lp;
    let mut out = Vec::with_capacity(x.vertices().len());
    for v in x.vertices() {
        let fail = || PwlError::AssignmentFails { vertex: to_f64_vec(v) };
        if sys.is_equilibrium(v) {
            let u = sys.holding_input(v);
            if !inputs.contains(&u, tol) {
                return Err(fail());
            }
            out.push(u);
            continue;
        }
        let rec = crate::ibc::invariance_lp(sys, x, v, inputs, true)?;
        if !rec.feasible {
            return Err(fail());
        }
        out.push(inputs.clip(&rec.input()));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct PwlController<T: Scalar> {
    triangulation: Triangulation<T>,
    /// One `m x n` gain per simplex.
    gains: Vec<DMatrix<T>>,
    /// Inverse of the matrix whose columns are a simplex's non-origin vertices.
    locators: Vec<DMatrix<T>>,
    /// Indexed like `triangulation.points`; entry 0 is the origin.
    vertex_controls: Vec<DVector<T>>,
    normals: Vec<DVector<T>>,
}

pub fn build_pwl<T: Scalar>(
    sys: &LinearSystem<T>,
    x: &Polytope<T>,
    inputs: &InputSet<T>,
) -> Result<PwlController<T>, PwlError> {
    let controls = assign_vertex_controls(sys, x, inputs)?;
    PwlController::from_vertex_controls(x, &controls)
}

impl<T: Scalar> PwlController<T> {
    pub fn from_vertex_controls(x: &Polytope<T>, controls: &[DVector<T>]) -> Result<Self, PwlError> {
        let triangulation = x.triangulate_with_origin()?;
        let normals = x.normalized_normals()?;
        let n = x.dim();
        let m = controls.first().map_or(0, |u| u.len());
        let mut vertex_controls = Vec::with_capacity(controls.len() + 1);
        vertex_controls.push(DVector::zeros(m));
        vertex_controls.extend(controls.iter().cloned());
        let tols = T::tolerances();
        let mut gains = Vec::with_capacity(triangulation.simplices.len());
        let mut locators = Vec::with_capacity(triangulation.simplices.len());
        for (index, simplex) in triangulation.simplices.iter().enumerate() {
            let mut vbar = DMatrix::zeros(n + 1, n + 1);
            let mut wbar = DMatrix::zeros(n + 1, m);
            for (r, &k) in simplex.iter().enumerate() {
                let p = &triangulation.points[k];
                for c in 0..n {
                    vbar[(r, c)] = p[c];
                }
                vbar[(r, n)] = T::one();
                wbar.set_row(r, &vertex_controls[k].transpose());
            }
            let lu = vbar.lu();
            let sol = lu.solve(&wbar).ok_or(PwlError::DegenerateSimplex { index })?;
            let offset = sol.row(n).norm();
            let scale = T::one().max(wbar.norm());
            if offset > tols.lin * scale {
                return Err(PwlError::NonLinearGain {
                    index,
                    offset: offset.to_f64_lossy(),
                });
            }
            gains.push(sol.rows(0, n).transpose());
            let mut cols = DMatrix::zeros(n, n);
            for (c, &k) in simplex[1..].iter().enumerate() {
                cols.set_column(c, &triangulation.points[k]);
            }
            locators.push(cols.try_inverse().ok_or(PwlError::DegenerateSimplex { index })?);
        }
        Ok(Self {
            triangulation,
            gains,
            locators,
            vertex_controls,
            normals,
        })
    }

    pub fn triangulation(&self) -> &Triangulation<T> {
        &self.triangulation
    }

    pub fn gains(&self) -> &[DMatrix<T>] {
        &self.gains
    }

    pub fn vertex_controls(&self) -> &[DVector<T>] {
        &self.vertex_controls
    }

    pub fn normals(&self) -> &[DVector<T>] {
        &self.normals
    }

    pub fn input_dim(&self) -> usize {
        self.vertex_controls[0].len()
    }

    /// Index of the first simplex whose barycentric coordinates of `x` are
    /// all at least `-tol`.
    pub fn locate(&self, x: &DVector<T>, tol: T) -> Option<usize> {
        self.locators.iter().position(|inv| {
            let lam = inv * x;
            let rest = T::one() - lam.sum();
            rest >= -tol && lam.iter().all(|&l| l >= -tol)
        })
    }

    /// Index of the first fan cone containing `x`, ignoring the outer facet.
    pub fn locate_cone(&self, x: &DVector<T>, tol: T) -> Option<usize> {
        self.locators
            .iter()
            .position(|inv| (inv * x).iter().all(|&l| l >= -tol))
    }

    pub fn eval(&self, x: &DVector<T>) -> Result<DVector<T>, PwlError> {
        let i = self
            .locate(x, T::tolerances().geo)
            .ok_or_else(|| PwlError::OutsideDomain { point: to_f64_vec(x) })?;
        Ok(&self.gains[i] * x)
    }

    /// The positively homogeneous extension `u(x) = V(x) u(x / V(x))`,
    /// defined everywhere.
    pub fn eval_extended(&self, x: &DVector<T>) -> DVector<T> {
        match self.locate_cone(x, T::tolerances().geo) {
            Some(i) => &self.gains[i] * x,
            None => DVector::zeros(self.input_dim()),
        }
    }

    pub fn lyapunov(&self, x: &DVector<T>) -> T {
        lyapunov_v(&self.normals, x)
    }

    /// Upper Dini derivative of the Lyapunov function along the closed loop.
    pub fn dini_derivative(&self, sys: &LinearSystem<T>, x: &DVector<T>) -> Result<T, PwlError> {
        let u = self.eval(x)?;
        let f = sys.field(x, &u);
        Ok(dini_along(&self.normals, x, &f))
    }
}

/// `max_i n_i . x`.
pub fn lyapunov_v<T: Scalar>(normals: &[DVector<T>], x: &DVector<T>) -> T {
    normals
        .iter()
        .map(|n| n.dot(x))
        .fold(T::min_value().unwrap_or(-T::one()), |a, b| a.max(b))
}

/// `max_{i in I(x)} n_i . f` over the active set of the max.
pub fn dini_along<T: Scalar>(normals: &[DVector<T>], x: &DVector<T>, f: &DVector<T>) -> T {
    let v = lyapunov_v(normals, x);
    let act = T::tolerances().act;
    normals
        .iter()
        .filter(|n| (n.dot(x) - v).abs() <= act)
        .map(|n| n.dot(f))
        .fold(T::min_value().unwrap_or(-T::one()), |a, b| a.max(b))
}

/// Sampled values of the Lyapunov function and its Dini derivative.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LyapunovScan<T: Scalar> {
    pub points: Vec<Vec<T>>,
    pub values: Vec<T>,
    pub derivatives: Vec<T>,
    /// Largest derivative seen.
    pub worst: T,
}

pub fn scan<T: Scalar>(
    sys: &LinearSystem<T>,
    ctrl: &PwlController<T>,
    points: &[DVector<T>],
) -> Result<LyapunovScan<T>, PwlError> {
    let mut out = LyapunovScan {
        points: Vec::with_capacity(points.len()),
        values: Vec::with_capacity(points.len()),
        derivatives: Vec::with_capacity(points.len()),
        worst: T::min_value().unwrap_or(-T::one()),
    };
    for x in points {
        let d = ctrl.dini_derivative(sys, x)?;
        out.points.push(x.iter().copied().collect());
        out.values.push(ctrl.lyapunov(x));
        out.derivatives.push(d);
        out.worst = out.worst.max(d);
    }
    Ok(out)
}
