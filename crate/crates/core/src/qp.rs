//! Dense strictly convex QP by the Goldfarb–Idnani dual active-set method.
//!
//! Solves `min ½xᵀGx + aᵀx` subject to `E x = e` and `C x ≤ d`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct QpSolution<T: Real> {
    pub x: DVector<T>,
    /// Multipliers for `E x = e` in `Gx + a + Eᵀν + Cᵀμ = 0`.
    pub nu: DVector<T>,
    /// Multipliers for `C x ≤ d`, nonnegative.
    pub mu: DVector<T>,
    pub active: Vec<usize>,
    pub iterations: usize,
}

#[derive(Clone)]
struct Act<T: Real> {
    /// Index into equalities (`eq = true`) or inequalities.
    idx: usize,
    eq: bool,
    normal: DVector<T>,
    sign: T,
}

struct Factor<T: Real> {
    j1: DMatrix<T>,
    j2: DMatrix<T>,
    r: DMatrix<T>,
}

fn factor<T: Real>(linv: &DMatrix<T>, act: &[Act<T>], n: usize) -> Factor<T> {
    let q = act.len();
    if q == 0 {
        return Factor { j1: DMatrix::zeros(n, 0), j2: linv.transpose(), r: DMatrix::zeros(0, 0) };
    }
    let mut nm = DMatrix::zeros(n, q);
    for (k, a) in act.iter().enumerate() {
        nm.set_column(k, &a.normal);
    }
    let b = linv * nm;
    let qr = b.clone().qr();
    let q1 = qr.q();
    let r = qr.r();
    let q2 = linalg::null_space(&b.transpose(), n, T::tol(1e-12));
    Factor { j1: linv.transpose() * q1, j2: linv.transpose() * q2, r }
}

fn upper_solve<T: Real>(r: &DMatrix<T>, y: &DVector<T>) -> DVector<T> {
    if r.nrows() == 0 {
        return DVector::zeros(0);
    }
    r.solve_upper_triangular(y).unwrap_or_else(|| linalg::lstsq(r, y))
}

/// Solve the QP. `g` must be symmetric positive definite.
pub fn solve<T: Real>(
    g: &DMatrix<T>,
    a: &DVector<T>,
    e_mat: &DMatrix<T>,
    e_rhs: &DVector<T>,
    c_mat: &DMatrix<T>,
    d_rhs: &DVector<T>,
) -> Result<QpSolution<T>> {
    let n = g.nrows();
    let meq = e_mat.nrows();
    let mi = c_mat.nrows();
    if g.ncols() != n || a.len() != n || (meq > 0 && e_mat.ncols() != n) || (mi > 0 && c_mat.ncols() != n) {
        return Err(Error::Shape("qp dimensions".into()));
    }
    let chol = linalg::sym(g)
        .cholesky()
        .ok_or_else(|| Error::Numerical("QP Hessian is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let mut x = -chol.solve(a);
    let mut act: Vec<Act<T>> = Vec::new();
    let mut u: Vec<T> = Vec::new();
    let mut fac = factor(&linv, &act, n);
    let scale = T::one() + a.norm() + c_mat.norm() + e_mat.norm() + d_rhs.norm() + e_rhs.norm();
    let tol = T::tol(1e-11) * scale;
    let mut skipped_eq = vec![false; meq];
    let max_iter = 50 * (n + meq + mi + 1);
    let mut iters = 0;

    loop {
        // choose the next constraint to add
        let mut pick: Option<(Act<T>, T)> = None;
        for i in 0..meq {
            if skipped_eq[i] || act.iter().any(|a| a.eq && a.idx == i) {
                continue;
            }
            let c = e_mat.row(i).transpose();
            let s = c.dot(&x) - e_rhs[i];
            let sign = if s > T::zero() { -T::one() } else { T::one() };
            pick = Some((Act { idx: i, eq: true, normal: c * sign, sign }, e_rhs[i] * sign));
            break;
        }
        if pick.is_none() {
            let mut worst = -tol;
            for i in 0..mi {
                if act.iter().any(|a| !a.eq && a.idx == i) {
                    continue;
                }
                let s = d_rhs[i] - c_mat.row(i).transpose().dot(&x);
                if s < worst {
                    worst = s;
                    let c = -c_mat.row(i).transpose();
                    pick = Some((Act { idx: i, eq: false, normal: c, sign: T::one() }, -d_rhs[i]));
                }
            }
        }
        let Some((p, bp)) = pick else { break };
        let mut up = T::zero();
        loop {
            iters += 1;
            if iters > max_iter {
                return Err(Error::IterationLimit("quadratic program"));
            }
            let z = &fac.j2 * (fac.j2.transpose() * &p.normal);
            let r = upper_solve(&fac.r, &(fac.j1.transpose() * &p.normal));
            let mut t1 = T::INF;
            let mut k_drop = None;
            for (k, a) in act.iter().enumerate() {
                if !a.eq && r[k] > T::tol(1e-14) {
                    let t = u[k] / r[k];
                    if t < t1 {
                        t1 = t;
                        k_drop = Some(k);
                    }
                }
            }
            let sp = p.normal.dot(&x) - bp;
            let zn = z.dot(&p.normal);
            let znorm = z.norm();
            let mut t2 = T::INF;
            if znorm > T::tol(1e-13) * (T::one() + p.normal.norm()) && zn > T::zero() {
                t2 = (-sp / zn).max(T::zero());
            }
            if t2 == T::INF && t1 == T::INF {
                if p.eq && sp.abs() <= tol {
                    // redundant equality
                    skipped_eq[p.idx] = true;
                    break;
                }
                return Err(Error::Infeasible);
            }
            if t2 == T::INF {
                for k in 0..act.len() {
                    u[k] -= t1 * r[k];
                }
                up += t1;
                let k = k_drop.unwrap();
                act.remove(k);
                u.remove(k);
                fac = factor(&linv, &act, n);
                continue;
            }
            let t = t1.min(t2);
            x += &z * t;
            for k in 0..act.len() {
                u[k] -= t * r[k];
            }
            up += t;
            if t2 <= t1 {
                act.push(p.clone());
                u.push(up);
                fac = factor(&linv, &act, n);
                break;
            } else {
                let k = k_drop.unwrap();
                act.remove(k);
                u.remove(k);
                fac = factor(&linv, &act, n);
            }
        }
    }

    let mut nu = DVector::zeros(meq);
    let mut mu = DVector::zeros(mi);
    let mut active = Vec::new();
    for (k, a) in act.iter().enumerate() {
        if a.eq {
            nu[a.idx] = -u[k] * a.sign;
        } else {
            mu[a.idx] = u[k].max(T::zero());
            active.push(a.idx);
        }
    }
    active.sort_unstable();
    Ok(QpSolution { x, nu, mu, active, iterations: iters })
}

/// KKT residual of a QP solution (stationarity, primal feasibility, complementarity).
pub fn kkt_residual<T: Real>(
    g: &DMatrix<T>,
    a: &DVector<T>,
    e_mat: &DMatrix<T>,
    e_rhs: &DVector<T>,
    c_mat: &DMatrix<T>,
    d_rhs: &DVector<T>,
    sol: &QpSolution<T>,
) -> T {
    let mut stat = g * &sol.x + a;
    let mut res = T::zero();
    if e_mat.nrows() > 0 {
        stat += e_mat.transpose() * &sol.nu;
        res = res.max((e_mat * &sol.x - e_rhs).amax());
    }
    if c_mat.nrows() > 0 {
        stat += c_mat.transpose() * &sol.mu;
        let slack = c_mat * &sol.x - d_rhs;
        for i in 0..slack.len() {
            res = res.max(slack[i].max(T::zero()));
            res = res.max((slack[i] * sol.mu[i]).abs());
            res = res.max((-sol.mu[i]).max(T::zero()));
        }
    }
    res.max(stat.amax())
}
