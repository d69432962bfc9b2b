//! Small dense linear-algebra helpers on top of `nalgebra`.
//!
//! Everything here works on matrices with a handful of rows and columns, so
//! clarity wins over blocking or in-place tricks.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Scalar;

/// Singular values of `m` in descending order together with the matching
/// right singular vectors (as columns of the returned matrix, `n x n`).
///
/// Wide matrices are padded with zero rows so that the full right basis is
/// always available.
pub fn svd_right<T: Scalar>(m: &DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let (r, c) = m.shape();
    if c == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let padded = if r < c {
        let mut p = DMatrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut v = DMatrix::zeros(c, c);
    for (col, &i) in order.iter().enumerate() {
        for k in 0..c {
            v[(k, col)] = v_t[(i, k)];
        }
    }
    (values, v)
}

/// Singular values in descending order.
pub fn singular_values<T: Scalar>(m: &DMatrix<T>) -> Vec<T> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<T> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Numerical rank with cutoff `rel_tol * sigma_max`.
pub fn rank<T: Scalar>(m: &DMatrix<T>, rel_tol: T) -> usize {
    let s = singular_values(m);
    match s.first() {
        None => 0,
        Some(&max) if max <= T::zero() => 0,
        Some(&max) => s.iter().filter(|&&v| v > rel_tol * max).count(),
    }
}

/// Orthonormal basis (as columns) of the null space of `m`, using an
/// absolute cutoff on the singular values.
pub fn null_space<T: Scalar>(m: &DMatrix<T>, abs_tol: T) -> DMatrix<T> {
    let (values, v) = svd_right(m);
    let n = m.ncols();
    let kept: Vec<usize> = (0..n)
        .filter(|&i| values.get(i).is_none_or(|&s| s <= abs_tol))
        .collect();
    let mut out = DMatrix::zeros(n, kept.len());
    for (j, &i) in kept.iter().enumerate() {
        out.set_column(j, &v.column(i));
    }
    out
}

/// Orthonormal basis (as columns) of the column space of `m`.
pub fn range_basis<T: Scalar>(m: &DMatrix<T>, rel_tol: T) -> DMatrix<T> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return DMatrix::zeros(r, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested left singular vectors");
    let max = svd
        .singular_values
        .iter()
        .copied()
        .fold(T::zero(), |a, b| a.max(b));
    let mut cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| max > T::zero() && svd.singular_values[i] > rel_tol * max)
        .collect();
    cols.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = DMatrix::zeros(r, cols.len());
    for (j, &i) in cols.iter().enumerate() {
        out.set_column(j, &u.column(i));
    }
    out
}

/// Orthogonal projector onto the span of the orthonormal columns of `q`.
pub fn projector<T: Scalar>(q: &DMatrix<T>) -> DMatrix<T> {
    q * q.transpose()
}

/// Minimum-norm least-squares solution of `m x = b`.
pub fn lstsq<T: Scalar>(m: &DMatrix<T>, b: &DVector<T>, rel_tol: T) -> DVector<T> {
    if m.ncols() == 0 {
        return DVector::zeros(0);
    }
    let s = singular_values(m);
    let cutoff = s.first().copied().unwrap_or(T::zero()) * rel_tol;
    let svd = m.clone().svd(true, true);
    svd.solve(b, cutoff)
        .unwrap_or_else(|_| DVector::zeros(m.ncols()))
}

/// Affine dimension of a point set (`-1` is reported as `None` for the empty set).
pub fn affine_dim<T: Scalar>(points: &[&DVector<T>], rel_tol: T) -> Option<usize> {
    let first = points.first()?;
    let n = first.len();
    if points.len() == 1 {
        return Some(0);
    }
    let mut diffs = DMatrix::zeros(points.len() - 1, n);
    for (i, p) in points[1..].iter().enumerate() {
        let d = *p - *first;
        diffs.set_row(i, &d.transpose());
    }
    Some(rank(&diffs, rel_tol))
}

/// Generalized cross product: a vector orthogonal to the `n-1` rows of `rows`
/// (an `(n-1) x n` matrix), with magnitude equal to the `(n-1)`-volume they span.
pub fn cross<T: Scalar>(rows: &DMatrix<T>) -> DVector<T> {
    let n = rows.ncols();
    debug_assert_eq!(rows.nrows() + 1, n);
    let mut out = DVector::zeros(n);
    for i in 0..n {
        let minor = rows.clone().remove_column(i);
        let det = if minor.nrows() == 0 {
            T::one()
        } else {
            minor.determinant()
        };
        out[i] = if i % 2 == 0 { det } else { -det };
    }
    out
}

/// Builds a vector of scalars from `f64` literals.
pub fn vector<T: Scalar>(values: &[f64]) -> DVector<T> {
    DVector::from_iterator(values.len(), values.iter().map(|&v| T::lit(v)))
}

/// Builds a row-major matrix of scalars from `f64` literals.
pub fn matrix<T: Scalar>(rows: usize, cols: usize, values: &[f64]) -> DMatrix<T> {
    assert_eq!(values.len(), rows * cols);
    DMatrix::from_row_iterator(rows, cols, values.iter().map(|&v| T::lit(v)))
}

/// Lossy conversion for reporting.
pub fn to_f64_vec<T: Scalar>(v: &DVector<T>) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

/// All `k`-element index subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Lexicographic comparison of two vectors.
pub fn lex_cmp<T: Scalar>(a: &DVector<T>, b: &DVector<T>) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Infinity norm of a vector.
pub fn norm_inf<T: Scalar>(v: &DVector<T>) -> T {
    v.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}
