//! Dense two-phase simplex for the tiny margin-maximization programs that
//! certify vertex conditions.
//!
//! Programs are stated over free or box-bounded variables with `<=`, `>=`
//! and `=` rows and are always maximized. Bland's rule is used for both
//! entering and leaving choices, which rules out cycling on the degenerate
//! vertices these problems tend to have.

use thiserror::Error;

use crate::scalar::{Scalar, Tolerances};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint<T> {
    pub coeffs: Vec<T>,
    pub relation: Relation,
    pub rhs: T,
}

/// `maximize c.x` subject to linear rows and per-variable bounds.
#[derive(Clone, Debug)]
pub struct LinearProgram<T> {
    objective: Vec<T>,
    constraints: Vec<Constraint<T>>,
    lower: Vec<Option<T>>,
    upper: Vec<Option<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution<T> {
    pub x: Vec<T>,
    pub objective: T,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<T> {
    Optimal(LpSolution<T>),
    Infeasible,
    Unbounded,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("simplex did not converge within {0} pivots")]
    IterationLimit(usize),
    #[error("non-finite coefficient in linear program")]
    NonFinite,
}

impl<T: Scalar> LinearProgram<T> {
    /// A program over `n` free variables with a zero objective.
    pub fn new(n: usize) -> Self {
        Self {
            objective: vec![T::zero(); n],
            constraints: Vec::new(),
            lower: vec![None; n],
            upper: vec![None; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn maximize(&mut self, coeffs: Vec<T>) -> &mut Self {
        assert_eq!(coeffs.len(), self.num_vars());
        self.objective = coeffs;
        self
    }

    pub fn add(&mut self, coeffs: Vec<T>, relation: Relation, rhs: T) -> &mut Self {
        assert_eq!(coeffs.len(), self.num_vars());
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self
    }

    pub fn add_le(&mut self, coeffs: Vec<T>, rhs: T) -> &mut Self {
        self.add(coeffs, Relation::Le, rhs)
    }

    pub fn bound(&mut self, var: usize, lower: Option<T>, upper: Option<T>) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    pub fn constraints(&self) -> &[Constraint<T>] {
        &self.constraints
    }

    /// Solves the program.
    pub fn solve(&self, tol: &Tolerances<T>) -> Result<LpOutcome<T>, LpError> {
        if self
            .objective
            .iter()
            .chain(self.constraints.iter().flat_map(|c| c.coeffs.iter().chain([&c.rhs])))
            .any(|v| !v.is_finite())
        {
            return Err(LpError::NonFinite);
        }
        Standard::build(self).solve(tol)
    }
}

/// How an original variable is written in terms of non-negative columns.
#[derive(Clone, Debug)]
struct VarMap<T> {
    offset: T,
    cols: Vec<(usize, T)>,
}

/// Standard-form tableau.
struct Standard<T> {
    maps: Vec<VarMap<T>>,
    objective: Vec<T>,
    /// Rows over non-negative structural columns, `rhs >= 0` after normalization.
    rows: Vec<(Vec<T>, Relation, T)>,
    n_struct: usize,
}

impl<T: Scalar> Standard<T> {
    fn build(lp: &LinearProgram<T>) -> Self {
        let mut maps = Vec::with_capacity(lp.num_vars());
        let mut n_struct = 0;
        let mut extra_rows: Vec<(usize, T)> = Vec::new();
        for j in 0..lp.num_vars() {
            match (lp.lower[j], lp.upper[j]) {
                (Some(lo), hi) => {
                    let col = n_struct;
                    n_struct += 1;
                    if let Some(hi) = hi {
                        extra_rows.push((col, hi - lo));
                    }
                    maps.push(VarMap {
                        offset: lo,
                        cols: vec![(col, T::one())],
                    });
                }
                (None, Some(hi)) => {
                    let col = n_struct;
                    n_struct += 1;
                    maps.push(VarMap {
                        offset: hi,
                        cols: vec![(col, -T::one())],
                    });
                }
                (None, None) => {
                    let col = n_struct;
                    n_struct += 2;
                    maps.push(VarMap {
                        offset: T::zero(),
                        cols: vec![(col, T::one()), (col + 1, -T::one())],
                    });
                }
            }
        }

        let mut objective = vec![T::zero(); n_struct];
        for (j, map) in maps.iter().enumerate() {
            for &(col, sign) in &map.cols {
                objective[col] += sign * lp.objective[j];
            }
        }

        let mut rows = Vec::with_capacity(lp.constraints.len() + extra_rows.len());
        for c in &lp.constraints {
            let mut coeffs = vec![T::zero(); n_struct];
            let mut rhs = c.rhs;
            for (j, map) in maps.iter().enumerate() {
                let a = c.coeffs[j];
                if a == T::zero() {
                    continue;
                }
                rhs -= a * map.offset;
                for &(col, sign) in &map.cols {
                    coeffs[col] += a * sign;
                }
            }
            rows.push((coeffs, c.relation, rhs));
        }
        for (col, width) in extra_rows {
            let mut coeffs = vec![T::zero(); n_struct];
            coeffs[col] = T::one();
            rows.push((coeffs, Relation::Le, width));
        }
        for row in &mut rows {
            if row.2 < T::zero() {
                for v in row.0.iter_mut() {
                    *v = -*v;
                }
                row.2 = -row.2;
                row.1 = match row.1 {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }
        Self {
            maps,
            objective,
            rows,
            n_struct,
        }
    }

    fn solve(self, tol: &Tolerances<T>) -> Result<LpOutcome<T>, LpError> {
        let m = self.rows.len();
        let n_slack = self
            .rows
            .iter()
            .filter(|r| r.1 != Relation::Eq)
            .count();
        let n_art = self
            .rows
            .iter()
            .filter(|r| r.1 != Relation::Le)
            .count();
        let n_cols = self.n_struct + n_slack + n_art;
        let art_start = self.n_struct + n_slack;

        let mut tab = Tableau {
            a: vec![vec![T::zero(); n_cols + 1]; m],
            basis: vec![0; m],
            pivot_tol: tol.pivot,
        };
        let mut slack = self.n_struct;
        let mut art = art_start;
        let mut rhs_scale = T::one();
        for (i, (coeffs, rel, rhs)) in self.rows.iter().enumerate() {
            tab.a[i][..self.n_struct].copy_from_slice(coeffs);
            tab.a[i][n_cols] = *rhs;
            rhs_scale = rhs_scale.max(rhs.abs());
            match rel {
                Relation::Le => {
                    tab.a[i][slack] = T::one();
                    tab.basis[i] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    tab.a[i][slack] = -T::one();
                    slack += 1;
                    tab.a[i][art] = T::one();
                    tab.basis[i] = art;
                    art += 1;
                }
                Relation::Eq => {
                    tab.a[i][art] = T::one();
                    tab.basis[i] = art;
                    art += 1;
                }
            }
        }

        let limit = 1000 + 50 * (m + n_cols);
        if n_art > 0 {
            let mut cost = vec![T::zero(); n_cols];
            for c in cost.iter_mut().skip(art_start) {
                *c = -T::one();
            }
            match tab.run(&cost, n_cols, limit)? {
                Phase::Optimal => {}
                Phase::Unbounded => unreachable!("phase one objective is bounded above by zero"),
            }
            let infeasibility: T = tab
                .basis
                .iter()
                .enumerate()
                .filter(|(_, &b)| b >= art_start)
                .map(|(i, _)| tab.a[i][n_cols])
                .fold(T::zero(), |a, b| a + b);
            let feas_tol = tol.pivot * T::lit(100.0) * rhs_scale;
            if infeasibility > feas_tol {
                return Ok(LpOutcome::Infeasible);
            }
            // Drive zero-valued artificials out of the basis; drop redundant rows.
            let mut i = 0;
            while i < tab.a.len() {
                if tab.basis[i] >= art_start {
                    let col = (0..art_start).find(|&j| tab.a[i][j].abs() > tab.pivot_tol);
                    match col {
                        Some(j) => {
                            tab.pivot(i, j);
                            i += 1;
                        }
                        None => {
                            tab.a.remove(i);
                            tab.basis.remove(i);
                        }
                    }
                } else {
                    i += 1;
                }
            }
        }

        let mut cost = vec![T::zero(); n_cols];
        cost[..self.n_struct].copy_from_slice(&self.objective);
        match tab.run(&cost, art_start, limit)? {
            Phase::Unbounded => return Ok(LpOutcome::Unbounded),
            Phase::Optimal => {}
        }

        let mut y = vec![T::zero(); n_cols];
        for (i, &b) in tab.basis.iter().enumerate() {
            y[b] = tab.a[i][n_cols];
        }
        let x: Vec<T> = self
            .maps
            .iter()
            .map(|map| {
                map.cols
                    .iter()
                    .fold(map.offset, |acc, &(col, sign)| acc + sign * y[col])
            })
            .collect();
        let objective = self.original_objective(&x);
        Ok(LpOutcome::Optimal(LpSolution { x, objective }))
    }

    fn original_objective(&self, x: &[T]) -> T {
        self.maps
            .iter()
            .zip(x)
            .fold(T::zero(), |acc, (map, &xj)| {
                let (col, sign) = map.cols[0];
                acc + self.objective[col] * sign * xj
            })
    }
}

enum Phase {
    Optimal,
    Unbounded,
}

struct Tableau<T> {
    a: Vec<Vec<T>>,
    basis: Vec<usize>,
    pivot_tol: T,
}

impl<T: Scalar> Tableau<T> {
    fn rhs_col(&self) -> usize {
        self.a.first().map_or(0, |r| r.len() - 1)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.rhs_col() + 1;
        let p = self.a[row][col];
        for k in 0..width {
            self.a[row][k] /= p;
        }
        let pivot_row = self.a[row].clone();
        for (i, r) in self.a.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f == T::zero() {
                continue;
            }
            for k in 0..width {
                r[k] -= f * pivot_row[k];
            }
            r[col] = T::zero();
        }
        self.basis[row] = col;
    }

    /// Maximizes `cost . y` over columns `< allowed`.
    fn run(&mut self, cost: &[T], allowed: usize, limit: usize) -> Result<Phase, LpError> {
        let rhs = self.rhs_col();
        for _ in 0..limit {
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let mut reduced = cost[j];
                for (i, &b) in self.basis.iter().enumerate() {
                    reduced -= cost[b] * self.a[i][j];
                }
                reduced > self.pivot_tol
            });
            let Some(j) = entering else {
                return Ok(Phase::Optimal);
            };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.a.len() {
                let coef = self.a[i][j];
                if coef <= self.pivot_tol {
                    continue;
                }
                let ratio = self.a[i][rhs] / coef;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match leave {
                None => return Ok(Phase::Unbounded),
                Some((i, _)) => self.pivot(i, j),
            }
        }
        Err(LpError::IterationLimit(limit))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances<f64> {
        f64::tolerances()
    }

    fn optimal(o: LpOutcome<f64>) -> LpSolution<f64> {
        match o {
            LpOutcome::Optimal(s) => s,
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18, x,y >= 0 -> (2,6), 36
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![3.0, 5.0])
            .add_le(vec![1.0, 0.0], 4.0)
            .add_le(vec![0.0, 2.0], 12.0)
            .add_le(vec![3.0, 2.0], 18.0)
            .bound(0, Some(0.0), None)
            .bound(1, Some(0.0), None);
        let s = optimal(lp.solve(&tol()).unwrap());
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
        assert!((s.objective - 36.0).abs() < 1e-9);
    }

    #[test]
    fn free_variables_and_equalities() {
        // max -x - y s.t. x + y = -3, x - y >= 1, x,y free, bounded by |.| <= 10
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![-1.0, 0.0])
            .add(vec![1.0, 1.0], Relation::Eq, -3.0)
            .add(vec![1.0, -1.0], Relation::Ge, 1.0)
            .bound(0, Some(-10.0), Some(10.0))
            .bound(1, Some(-10.0), Some(10.0));
        let s = optimal(lp.solve(&tol()).unwrap());
        // x + y = -3, x - y >= 1 -> x >= -1; maximize -x -> x = -1, y = -2
        assert!((s.x[0] + 1.0).abs() < 1e-9 && (s.x[1] + 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        let mut lp = LinearProgram::new(1);
        lp.maximize(vec![1.0])
            .add_le(vec![1.0], -1.0)
            .add(vec![1.0], Relation::Ge, 1.0);
        assert_eq!(lp.solve(&tol()).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![1.0, 0.0]).add_le(vec![0.0, 1.0], 1.0);
        assert_eq!(lp.solve(&tol()).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn upper_only_bound() {
        let mut lp = LinearProgram::new(1);
        lp.maximize(vec![1.0]).bound(0, None, Some(2.5));
        let s = optimal(lp.solve(&tol()).unwrap());
        assert!((s.x[0] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // Several constraints active at the optimum (0, 0)... then up to (1,1).
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![1.0, 1.0])
            .add_le(vec![1.0, -1.0], 0.0)
            .add_le(vec![-1.0, 1.0], 0.0)
            .add_le(vec![1.0, 1.0], 2.0)
            .add_le(vec![2.0, 2.0], 4.0)
            .bound(0, Some(0.0), None)
            .bound(1, Some(0.0), None);
        let s = optimal(lp.solve(&tol()).unwrap());
        assert!((s.objective - 2.0).abs() < 1e-9);
        assert!((s.x[0] - s.x[1]).abs() < 1e-9);
    }

    #[test]
    fn works_in_single_precision() {
        let mut lp = LinearProgram::<f32>::new(2);
        lp.maximize(vec![3.0, 5.0])
            .add_le(vec![1.0, 0.0], 4.0)
            .add_le(vec![0.0, 2.0], 12.0)
            .add_le(vec![3.0, 2.0], 18.0)
            .bound(0, Some(0.0), None)
            .bound(1, Some(0.0), None);
        match lp.solve(&f32::tolerances()).unwrap() {
            LpOutcome::Optimal(s) => assert!((s.objective - 36.0).abs() < 1e-3),
            other => panic!("{other:?}"),
        }
    }
}
