//! Sampled outer limit of critical cones along `gph N_C` near a reference pair.

use nalgebra::{DMatrix, DVector};

use super::{PolyCone, Polyhedron, ACTIVE_TOL};
use crate::combinatorics;
use crate::error::{Error, Result};
use crate::linalg;
use crate::lp::{self, LpStatus};
use crate::scalar::Real;

/// A graph point `(x, v)` of `N_C` near the reference, with its critical cone.
#[derive(Debug, Clone)]
pub struct GraphSample<T: Real> {
    pub x: DVector<T>,
    pub v: DVector<T>,
    pub cone: PolyCone<T>,
    pub face: Vec<usize>,
    pub support: Vec<usize>,
}

/// Point with active set exactly `face ⊆ I(x̄)` within `eps` of `x̄`.
pub fn face_point<T: Real>(c: &Polyhedron<T>, xbar: &DVector<T>, active: &[usize], face: &[usize], eps: T) -> Option<DVector<T>> {
    let n = c.dim();
    let others: Vec<usize> = active.iter().filter(|i| !face.contains(i)).cloned().collect();
    // variables (w, t): maximize t
    let nv = n + 1;
    let mut obj = DVector::zeros(nv);
    obj[n] = T::one();
    let rows = others.len() + 2 * n + 1;
    let mut ub = DMatrix::zeros(rows, nv);
    let mut rhs = DVector::zeros(rows);
    for (k, &i) in others.iter().enumerate() {
        for j in 0..n {
            ub[(k, j)] = c.g()[(i, j)];
        }
        ub[(k, n)] = T::one();
    }
    let off = others.len();
    for j in 0..n {
        ub[(off + 2 * j, j)] = T::one();
        rhs[off + 2 * j] = eps;
        ub[(off + 2 * j + 1, j)] = -T::one();
        rhs[off + 2 * j + 1] = eps;
    }
    ub[(rows - 1, n)] = T::one();
    rhs[rows - 1] = eps;
    let mut eq = DMatrix::zeros(face.len(), nv);
    for (k, &i) in face.iter().enumerate() {
        for j in 0..n {
            eq[(k, j)] = c.g()[(i, j)];
        }
    }
    match lp::maximize(&obj, &ub, &rhs, &eq, &DVector::zeros(face.len())) {
        LpStatus::Optimal { x, value } if value > T::tol(1e-12) * (T::one() + eps) || others.is_empty() => {
            Some(xbar + x.rows(0, n).into_owned())
        }
        _ => None,
    }
}

/// Collect critical cones at graph points `(x_k, v_k)` within `eps` of `(x̄, v̂)`, one per
/// combinatorial type (face of `C` near `x̄`, multiplier support).
pub fn sampled_critical_cones<T: Real>(
    c: &Polyhedron<T>,
    xbar: &DVector<T>,
    vhat: &DVector<T>,
    eps: T,
) -> Result<Vec<GraphSample<T>>> {
    let active = c.active_set(xbar, T::tol(ACTIVE_TOL));
    if active.len() > 12 {
        return Err(Error::SizeLimit(format!("{} active rows", active.len())));
    }
    if c.normal_residual(xbar, vhat) > T::tol(1e-9) * (T::one() + vhat.norm()) {
        return Err(Error::OffGraph("v̂ is not normal to C at x̄".into()));
    }
    let mut out = Vec::new();
    for face in combinatorics::power_set(&active) {
        let Some(xk) = face_point(c, xbar, &active, &face, eps) else { continue };
        for support in combinatorics::power_set(&face) {
            let gp = linalg::select_rows(c.g(), &support).transpose();
            let mu = linalg::nnls(&gp, vhat);
            let res = (&gp * &mu - vhat).norm();
            if res > T::tol(1e-9) * (T::one() + vhat.norm()) {
                continue;
            }
            let mu = mu.map(|m| m + eps);
            let vk = if support.is_empty() { DVector::zeros(c.dim()) } else { &gp * mu };
            let cone = c.critical_cone(&xk, &vk)?;
            out.push(GraphSample { x: xk.clone(), v: vk, cone, face: face.clone(), support });
        }
    }
    Ok(out)
}

/// Oracle membership: `w` lies (up to `tol`, after normalization) in some sampled cone.
pub fn oracle_contains<T: Real>(samples: &[GraphSample<T>], w: &DVector<T>, tol: T) -> Result<bool> {
    let nw = w.norm();
    if nw == T::zero() {
        return Ok(true);
    }
    let u = w / nw;
    for s in samples {
        let p = s.cone.project(&u)?;
        if (p - &u).norm() <= tol {
            return Ok(true);
        }
    }
    Ok(false)
}
