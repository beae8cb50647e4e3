//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Real;

/// Symmetric part `(m + mᵀ)/2`.
pub fn sym<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
pub fn sym_eigen<T: Real>(m: &DMatrix<T>) -> (DVector<T>, DMatrix<T>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let e = sym(m).symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].partial_cmp(&e.eigenvalues[b]).unwrap());
    let vals = DVector::from_iterator(n, idx.iter().map(|&i| e.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (j, &i) in idx.iter().enumerate() {
        vecs.set_column(j, &e.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Smallest eigenvalue of the symmetric part and a unit eigenvector.
pub fn min_eig<T: Real>(m: &DMatrix<T>) -> Option<(T, DVector<T>)> {
    if m.nrows() == 0 {
        return None;
    }
    let (vals, vecs) = sym_eigen(m);
    Some((vals[0], vecs.column(0).into_owned()))
}

pub fn singular_values<T: Real>(m: &DMatrix<T>) -> DVector<T> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DVector::zeros(0);
    }
    m.clone().svd(false, false).singular_values
}

/// Spectral norm; zero for empty matrices.
pub fn op_norm<T: Real>(m: &DMatrix<T>) -> T {
    singular_values(m).iter().fold(T::zero(), |a, &s| a.max(s))
}

fn rank_threshold<T: Real>(sv: &DVector<T>, rel: T) -> T {
    let smax = sv.iter().fold(T::zero(), |a, &s| a.max(s));
    (rel * smax).max(T::tol(1e-13))
}

/// Numerical rank with relative tolerance `rel·σ_max`.
pub fn rank<T: Real>(m: &DMatrix<T>, rel: T) -> usize {
    let sv = singular_values(m);
    let thr = rank_threshold(&sv, rel);
    sv.iter().filter(|&&s| s > thr).count()
}

/// Orthonormal basis (as columns) of the null space of `m` (a `k × n` matrix).
pub fn null_space<T: Real>(m: &DMatrix<T>, n: usize, rel: T) -> DMatrix<T> {
    if m.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let rows = m.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let thr = rank_threshold(&svd.singular_values, rel);
    let cols: Vec<DVector<T>> = (0..n)
        .filter(|&i| svd.singular_values[i] <= thr)
        .map(|i| vt.row(i).transpose())
        .collect();
    columns(n, &cols)
}

/// Orthonormal basis of the span of the columns of `m`.
pub fn range_basis<T: Real>(m: &DMatrix<T>, rel: T) -> DMatrix<T> {
    let n = m.nrows();
    if m.ncols() == 0 || n == 0 {
        return DMatrix::zeros(n, 0);
    }
    let cols = m.ncols().max(n);
    let mut padded = DMatrix::zeros(n, cols);
    padded.view_mut((0, 0), (n, m.ncols())).copy_from(m);
    let svd = padded.svd(true, false);
    let u = svd.u.expect("u requested");
    let thr = rank_threshold(&svd.singular_values, rel);
    let keep: Vec<DVector<T>> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > thr)
        .map(|i| u.column(i).into_owned())
        .collect();
    columns(n, &keep)
}

/// Stack column vectors into an `n × k` matrix.
pub fn columns<T: Real>(n: usize, cols: &[DVector<T>]) -> DMatrix<T> {
    let mut out = DMatrix::zeros(n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

/// Stack row vectors into a `k × n` matrix.
pub fn rows<T: Real>(n: usize, rows: &[DVector<T>]) -> DMatrix<T> {
    let mut out = DMatrix::zeros(rows.len(), n);
    for (i, r) in rows.iter().enumerate() {
        out.set_row(i, &r.transpose());
    }
    out
}

/// Select a subset of rows.
pub fn select_rows<T: Real>(m: &DMatrix<T>, idx: &[usize]) -> DMatrix<T> {
    let mut out = DMatrix::zeros(idx.len(), m.ncols());
    for (k, &i) in idx.iter().enumerate() {
        out.set_row(k, &m.row(i));
    }
    out
}

pub fn select_entries<T: Real>(v: &DVector<T>, idx: &[usize]) -> DVector<T> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

/// Minimum-norm least-squares solution via SVD.
pub fn lstsq<T: Real>(a: &DMatrix<T>, b: &DVector<T>) -> DVector<T> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    if a.nrows() == 0 {
        return DVector::zeros(a.ncols());
    }
    let svd = a.clone().svd(true, true);
    let thr = rank_threshold(&svd.singular_values, T::tol(1e-12));
    svd.solve(b, thr).unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

/// Nonnegative least squares `min ‖Ax − b‖, x ≥ 0` (Lawson–Hanson).
pub fn nnls<T: Real>(a: &DMatrix<T>, b: &DVector<T>) -> DVector<T> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    if n == 0 {
        return x;
    }
    let tol = T::tol(1e-12) * (T::one() + a.norm() * b.norm());
    let mut passive = vec![false; n];
    let max_outer = 3 * n + 10;
    for _ in 0..max_outer {
        let w = a.transpose() * (b - a * &x);
        let cand = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap());
        let Some(j) = cand else { break };
        passive[j] = true;
        for _ in 0..(3 * n + 10) {
            let p: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let ap = column_subset(a, &p);
            let zp = lstsq(&ap, b);
            if zp.iter().all(|&z| z > T::zero()) {
                x.fill(T::zero());
                for (k, &i) in p.iter().enumerate() {
                    x[i] = zp[k];
                }
                break;
            }
            let mut alpha = T::one();
            for (k, &i) in p.iter().enumerate() {
                if zp[k] <= T::zero() {
                    let d = x[i] - zp[k];
                    if d > T::zero() {
                        alpha = alpha.min(x[i] / d);
                    }
                }
            }
            for (k, &i) in p.iter().enumerate() {
                let xi = x[i];
                x[i] = xi + alpha * (zp[k] - xi);
            }
            for &i in &p {
                if x[i] <= T::tol(1e-15) {
                    x[i] = T::zero();
                    passive[i] = false;
                }
            }
        }
    }
    x
}

pub fn column_subset<T: Real>(a: &DMatrix<T>, idx: &[usize]) -> DMatrix<T> {
    let mut out = DMatrix::zeros(a.nrows(), idx.len());
    for (k, &j) in idx.iter().enumerate() {
        out.set_column(k, &a.column(j));
    }
    out
}

/// Euclidean distance from `y` to the cone generated by the columns of `gens`.
pub fn dist_to_cone<T: Real>(gens: &DMatrix<T>, y: &DVector<T>) -> T {
    if gens.ncols() == 0 {
        return y.norm();
    }
    let mu = nnls(gens, y);
    (gens * mu - y).norm()
}

pub fn to_dvec<T: Real>(v: &[f64]) -> DVector<T> {
    DVector::from_iterator(v.len(), v.iter().map(|&x| T::lit(x)))
}

pub fn to_dmat<T: Real>(rows_: &[Vec<f64>], ncols: usize) -> DMatrix<T> {
    DMatrix::from_fn(rows_.len(), ncols, |i, j| T::lit(rows_[i][j]))
}
