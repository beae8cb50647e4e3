//! Cone limits along `gph N_C` and the positive-definiteness tests for polyhedral PVIs.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::PvsInstance;
use crate::polyhedra::{PolyCone, Polyhedron};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitMode {
    Weak,
    Strong,
}

#[derive(Debug, Clone)]
pub struct ConeLimit<T: Real> {
    /// a subspace in the polyhedral case (lineality only)
    pub h: PolyCone<T>,
    pub mode: LimitMode,
    /// the weak and strong limits coincide in finite dimensions; the weak mode is an alias
    pub note: &'static str,
}

const FINITE_DIM_NOTE: &str = "finite dimension: weak and strong limits coincide";

/// `H = K − K` with `K = 𝒦_C(x̄, v̂)`.
pub fn cone_limit_polyhedral<T: Real>(c: &Polyhedron<T>, xbar: &DVector<T>, vhat: &DVector<T>, mode: LimitMode) -> Result<ConeLimit<T>> {
    let k = c.critical_cone(xbar, vhat).map_err(|e| match e {
        Error::NotNormal(r) => Error::OffGraph(format!("v̂ is not normal at x̄ (residual {r:.3e})")),
        Error::NotInSet(r) => Error::OffGraph(format!("x̄ is not in C (violation {r:.3e})")),
        other => other,
    })?;
    Ok(ConeLimit { h: k.difference_span(), mode, note: FINITE_DIM_NOTE })
}

/// `H = {u : u_i v̂_i = 0}` for a box; coordinates with `a_i = b_i` are pinned as well.
pub fn cone_limit_box<T: Real>(a: &DVector<T>, b: &DVector<T>, xbar: &DVector<T>, vhat: &DVector<T>, mode: LimitMode) -> Result<ConeLimit<T>> {
    let n = a.len();
    let tol = T::tol(1e-9);
    let mut free = Vec::new();
    for i in 0..n {
        super::coderivative::classify(a[i], b[i], xbar[i], vhat[i], tol)?;
        let pinned = vhat[i].abs() > tol || (a[i].is_finite_val() && a[i] == b[i]);
        if !pinned {
            let mut e = DVector::zeros(n);
            e[i] = T::one();
            free.push(e);
        }
    }
    Ok(ConeLimit { h: PolyCone::subspace(&linalg::columns(n, &free), n), mode, note: FINITE_DIM_NOTE })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PviVariant {
    /// `span T_C(x̄) ∩ {v̂}⊥`
    Closure,
    /// `𝒦 − 𝒦`
    CriticalSpan,
}

#[derive(Debug, Clone, Serialize)]
pub struct PviReport<T: Real> {
    pub variant: PviVariant,
    pub holds: bool,
    /// `λ_min` of `sym Q` on the test subspace (`+∞` on `{0}`)
    #[serde(serialize_with = "crate::report::real")]
    pub min_eigenvalue: T,
    pub subspace_dim: usize,
    pub witness: Option<Vec<T>>,
    pub note: &'static str,
}

/// Orthonormal basis of the test subspace.
pub fn pvi_subspace<T: Real>(c: &Polyhedron<T>, xbar: &DVector<T>, vhat: &DVector<T>, variant: PviVariant) -> Result<DMatrix<T>> {
    let n = c.dim();
    match variant {
        PviVariant::CriticalSpan => Ok(cone_limit_polyhedral(c, xbar, vhat, LimitMode::Strong)?.h.span_basis()),
        PviVariant::Closure => {
            let b = c.tangent_cone(xbar)?.span_basis();
            if b.ncols() == 0 {
                return Ok(DMatrix::zeros(n, 0));
            }
            let row = DMatrix::from_row_slice(1, n, vhat.as_slice()) * &b;
            let z = linalg::null_space(&row, b.ncols(), T::tol(1e-10));
            Ok(linalg::range_basis(&(b * z), T::tol(1e-10)))
        }
    }
}

/// Positive definiteness of `sym ∇ₓf = sym Q` on the chosen test subspace at the reference.
pub fn pvi_positive_definiteness<T: Real>(inst: &PvsInstance<T>, variant: PviVariant) -> Result<PviReport<T>> {
    if !inst.potential.is_indicator() {
        return Err(Error::Unsupported("test needs an indicator potential".into()));
    }
    let r = &inst.reference;
    let c = inst
        .set_at(&r.p)?
        .ok_or_else(|| Error::Unsupported("test needs a polyhedral set".into()))?;
    let z = pvi_subspace(&c, &r.x, &inst.v_hat(), variant)?;
    let note = "for polyhedral sets in finite dimensions both variants and full stability are equivalent";
    if z.ncols() == 0 {
        return Ok(PviReport { variant, holds: true, min_eigenvalue: T::INF, subspace_dim: 0, witness: None, note });
    }
    let h = z.transpose() * linalg::sym(&inst.base.q) * &z;
    let (val, vec) = linalg::min_eig(&h).expect("nonempty");
    let holds = val > T::tol(1e-9);
    let witness = if holds { None } else { Some((&z * vec).iter().cloned().collect()) };
    Ok(PviReport { variant, holds, min_eigenvalue: val, subspace_dim: z.ncols(), witness, note })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn orthant_limit() {
        let c = Polyhedron::<f64>::nonneg_orthant(2);
        let h = cone_limit_polyhedral(&c, &v(&[0.0, 0.0]), &v(&[-1.0, 0.0]), LimitMode::Strong).unwrap();
        assert!(h.h.contains(&v(&[0.0, 2.0]), 1e-9) && h.h.contains(&v(&[0.0, -2.0]), 1e-9));
        assert!(!h.h.contains(&v(&[1.0, 0.0]), 1e-9));
        let whole = cone_limit_polyhedral(&c, &v(&[1.0, 1.0]), &v(&[0.0, 0.0]), LimitMode::Weak).unwrap();
        assert_eq!(whole.h.span_dim(), 2);
    }

    #[test]
    fn box_limit_matches() {
        let (a, b) = (v(&[0.0, 0.0]), v(&[1.0, 1.0]));
        let hb = cone_limit_box(&a, &b, &v(&[0.5, 0.0]), &v(&[0.0, -1.0]), LimitMode::Strong).unwrap();
        assert!(hb.h.contains(&v(&[1.0, 0.0]), 1e-9) && !hb.h.contains(&v(&[0.0, 1.0]), 1e-9));
        let pinned = cone_limit_box(&a, &b, &v(&[0.0, 1.0]), &v(&[-1.0, 2.0]), LimitMode::Strong).unwrap();
        assert!(pinned.h.is_zero());
    }
}
