//! Linear and affine control systems `x' = Ax + Bu (+ a)`, the equilibrium
//! subspace `O = {x : Ax in Im B}` and the `O + Im B` splitting.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{lstsq, null_space, projector, range_basis, rank, singular_values};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("matrix shapes disagree: {0}")]
    Shape(String),
    #[error("B has rank {rank}, expected full column rank {m}")]
    InputRankDeficient { rank: usize, m: usize },
    #[error("offset is not in Im A + Im B (residual {residual:e})")]
    NoShiftExists { residual: f64 },
    #[error("O + Im B has dimension {rank}, expected {n}")]
    DecompositionFails { rank: usize, n: usize },
    #[error("system is not controllable")]
    NotControllable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AffineSystem<T: Scalar> {
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    pub offset: DVector<T>,
}

/// `A x_bar + a = B w`; the linear system runs in `x - x_bar` with input `u + w`.
#[derive(Clone, Debug, PartialEq)]
pub struct Shift<T: Scalar> {
    pub x_bar: DVector<T>,
    pub w: DVector<T>,
}

#[derive(Clone, Debug)]
pub struct LinearSystem<T: Scalar> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    shift: Shift<T>,
    input_range: DMatrix<T>,
    equilibria: DMatrix<T>,
}

impl<T: Scalar> AffineSystem<T> {
    pub fn new(a: DMatrix<T>, b: DMatrix<T>, offset: DVector<T>) -> Result<Self, SystemError> {
        check_shapes(&a, &b)?;
        if offset.len() != a.nrows() {
            return Err(SystemError::Shape(format!(
                "offset has length {}, A is {}x{}",
                offset.len(),
                a.nrows(),
                a.ncols()
            )));
        }
        Ok(Self { a, b, offset })
    }

    /// Moves the offset into the input by a state shift of minimal norm.
    pub fn shift_to_linear(&self) -> Result<LinearSystem<T>, SystemError> {
        let n = self.a.nrows();
        let m = self.b.ncols();
        let mut stacked = DMatrix::zeros(n, n + m);
        stacked.view_mut((0, 0), (n, n)).copy_from(&self.a);
        stacked.view_mut((0, n), (n, m)).copy_from(&(-&self.b));
        let rhs = -&self.offset;
        let tols = T::tolerances();
        let sol = lstsq(&stacked, &rhs, tols.lin);
        let residual = (&stacked * &sol - &rhs).norm();
        let scale = T::one().max(self.offset.norm());
        if residual > tols.lin.sqrt() * scale {
            return Err(SystemError::NoShiftExists {
                residual: residual.to_f64_lossy(),
            });
        }
        let shift = Shift {
            x_bar: sol.rows(0, n).into_owned(),
            w: sol.rows(n, m).into_owned(),
        };
        let mut sys = LinearSystem::new(self.a.clone(), self.b.clone())?;
        sys.shift = shift;
        Ok(sys)
    }
}

fn check_shapes<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<(), SystemError> {
    if !a.is_square() {
        return Err(SystemError::Shape(format!(
            "A must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.nrows() != a.nrows() {
        return Err(SystemError::Shape(format!(
            "B has {} rows, A has {}",
            b.nrows(),
            a.nrows()
        )));
    }
    if b.ncols() == 0 || b.ncols() > a.nrows() {
        return Err(SystemError::Shape(format!(
            "B must have between 1 and {} columns, got {}",
            a.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

impl<T: Scalar> LinearSystem<T> {
    pub fn new(a: DMatrix<T>, b: DMatrix<T>) -> Result<Self, SystemError> {
        check_shapes(&a, &b)?;
        let tols = T::tolerances();
        let m = b.ncols();
        let r = rank(&b, tols.lin);
        if r < m {
            return Err(SystemError::InputRankDeficient { rank: r, m });
        }
        let n = a.nrows();
        let input_range = range_basis(&b, tols.lin);
        let residual = (DMatrix::identity(n, n) - projector(&input_range)) * &a;
        let a_scale = singular_values(&a).first().copied().unwrap_or(T::zero());
        let equilibria = null_space(&residual, tols.lin * T::one().max(a_scale));
        Ok(Self {
            shift: Shift {
                x_bar: DVector::zeros(n),
                w: DVector::zeros(m),
            },
            a,
            b,
            input_range,
            equilibria,
        })
    }

    /// The `n`-fold chain of double integrators, one input per axis.
    pub fn double_integrator(axes: usize) -> Self {
        let n = 2 * axes;
        let mut a = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, axes);
        for k in 0..axes {
            a[(2 * k, 2 * k + 1)] = T::one();
            b[(2 * k + 1, k)] = T::one();
        }
        Self::new(a, b).expect("double integrator is well formed")
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }

    pub fn shift(&self) -> &Shift<T> {
        &self.shift
    }

    pub fn field(&self, x: &DVector<T>, u: &DVector<T>) -> DVector<T> {
        &self.a * x + &self.b * u
    }

    pub fn kalman_matrix(&self) -> DMatrix<T> {
        let (n, m) = (self.n(), self.m());
        let mut k = DMatrix::zeros(n, n * m);
        let mut block = self.b.clone();
        for i in 0..n {
            k.view_mut((0, i * m), (n, m)).copy_from(&block);
            block = &self.a * block;
        }
        k
    }

    pub fn is_controllable(&self) -> bool {
        rank(&self.kalman_matrix(), T::tolerances().lin) == self.n()
    }

    /// Orthonormal basis of `Im B`.
    pub fn input_range(&self) -> &DMatrix<T> {
        &self.input_range
    }

    /// Orthonormal basis of `O`.
    pub fn equilibrium_set(&self) -> &DMatrix<T> {
        &self.equilibria
    }

    pub fn distance_to_equilibria(&self, x: &DVector<T>) -> T {
        let q = &self.equilibria;
        (x - q * (q.transpose() * x)).norm()
    }

    pub fn is_equilibrium(&self, x: &DVector<T>) -> bool {
        self.distance_to_equilibria(x) <= T::tolerances().lin * (T::one() + x.norm())
    }

    /// Least-squares input with `Bu = -Ax`; exact when `x` is in `O`.
    pub fn holding_input(&self, x: &DVector<T>) -> DVector<T> {
        lstsq(&self.b, &(-(&self.a * x)), T::tolerances().lin)
    }

    /// Basis `[b_1 .. b_m o_{m+1} .. o_n]` with the `o`'s taken from `O`.
    pub fn decompose(&self) -> Result<Decomposition<T>, SystemError> {
        let (n, m) = (self.n(), self.m());
        let tols = T::tolerances();
        let o = &self.equilibria;
        let mut stacked = DMatrix::zeros(n, m + o.ncols());
        stacked.view_mut((0, 0), (n, m)).copy_from(&self.input_range);
        stacked.view_mut((0, m), (n, o.ncols())).copy_from(o);
        let r = rank(&stacked, tols.lin);
        if r < n {
            return Err(SystemError::DecompositionFails { rank: r, n });
        }
        let residual = (DMatrix::identity(n, n) - projector(&self.input_range)) * o;
        let (_, right) = crate::linalg::svd_right(&residual);
        let mut t = DMatrix::zeros(n, n);
        t.view_mut((0, 0), (n, m)).copy_from(&self.b);
        let mut o_cols = Vec::with_capacity(n - m);
        for k in 0..n - m {
            let mut col = o * right.column(k);
            let pivot = col
                .iter()
                .copied()
                .fold(T::zero(), |acc, v| if v.abs() > acc.abs() { v } else { acc });
            if pivot < T::zero() {
                col = -col;
            }
            t.set_column(m + k, &col);
            o_cols.push(col);
        }
        let t_inv = t
            .clone()
            .try_inverse()
            .ok_or(SystemError::DecompositionFails { rank: n - 1, n })?;
        let mut t_o = t.clone();
        for j in 0..m {
            t_o.set_column(j, &DVector::zeros(n));
        }
        let b_cols = (0..m).map(|j| self.b.column(j).into_owned()).collect();
        Ok(Decomposition {
            b_basis: b_cols,
            o_complement: o_cols,
            t,
            t_o,
            t_inv,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Decomposition<T: Scalar> {
    pub b_basis: Vec<DVector<T>>,
    pub o_complement: Vec<DVector<T>>,
    pub t: DMatrix<T>,
    pub t_o: DMatrix<T>,
    pub t_inv: DMatrix<T>,
}

impl<T: Scalar> Decomposition<T> {
    /// `T_O T^{-1} x`: the `O` part of `x` along `Im B`.
    pub fn project(&self, x: &DVector<T>) -> DVector<T> {
        &self.t_o * (&self.t_inv * x)
    }

    pub fn condition_number(&self) -> T {
        let s = singular_values(&self.t);
        match (s.first(), s.last()) {
            (Some(&hi), Some(&lo)) if lo > T::zero() => hi / lo,
            _ => T::max_value().unwrap_or(T::one()),
        }
    }
}
