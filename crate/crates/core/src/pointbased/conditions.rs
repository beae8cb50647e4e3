//! Pointbased second-order conditions for box-type potentials.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::coderivative::{classify, piece_domain, CoderivativeKind, Domain, IntervalPiece};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{BoxSet, Potential, PvsInstance};
use crate::polyhedra::curvature::min_quadratic_on_cone;
use crate::scalar::Real;

/// `inf { ⟨Hw, w⟩ + ⟨z, w⟩ : z ∈ D*N_box(x, u)(w), ‖w‖ = 1 }`.
#[derive(Debug, Clone, Serialize)]
pub struct BoxCurvature<T: Real> {
    /// `+∞` when only `w = 0` is admissible, `−∞` when some branch is unbounded
    #[serde(serialize_with = "crate::report::real")]
    pub value: T,
    #[serde(serialize_with = "crate::report::opt_reals")]
    pub direction: Option<Vec<T>>,
    pub pieces: Vec<IntervalPiece>,
}

/// Pieces of `gph N_box(p)` at `(x, u)` coordinate by coordinate.
pub fn box_pieces<T: Real>(bx: &BoxSet<T>, p: &DVector<T>, x: &DVector<T>, u: &DVector<T>) -> Result<Vec<IntervalPiece>> {
    let (lo, hi) = bx.bounds_at(p);
    (0..x.len()).map(|i| classify(lo[i], hi[i], x[i], u[i], T::tol(1e-9))).collect()
}

/// Minimize `⟨Hw, w⟩ + inf⟨z, w⟩` by branches: each coordinate restricts the sign of
/// `w_i` to where its coderivative is nonempty.
pub fn box_curvature<T: Real>(h: &DMatrix<T>, pieces: &[IntervalPiece], kind: CoderivativeKind) -> Result<BoxCurvature<T>> {
    let n = pieces.len();
    let mut eq = Vec::new();
    let mut ineq = Vec::new();
    for (i, &pc) in pieces.iter().enumerate() {
        let (dom, unbounded) = piece_domain(pc, kind);
        if unbounded {
            let mut w = vec![T::zero(); n];
            w[i] = T::one();
            return Ok(BoxCurvature { value: -T::INF, direction: Some(w), pieces: pieces.to_vec() });
        }
        let e = || {
            let mut r = DVector::zeros(n);
            r[i] = T::one();
            r
        };
        match dom {
            Domain::Free => {}
            Domain::Zero => eq.push(e()),
            Domain::NonPos => ineq.push(e()),
            Domain::NonNeg => ineq.push(-e()),
        }
    }
    let res = min_quadratic_on_cone(h, &linalg::rows(n, &eq), &linalg::rows(n, &ineq))?;
    Ok(match res {
        None => BoxCurvature { value: T::INF, direction: None, pieces: pieces.to_vec() },
        Some(m) => BoxCurvature { value: m.value, direction: Some(m.direction.iter().cloned().collect()), pieces: pieces.to_vec() },
    })
}

fn box_of<T: Real>(g: &Potential<T>) -> Result<&BoxSet<T>> {
    g.as_box().ok_or_else(|| Error::Unsupported(format!("{} is not a box-type potential", g.kind())))
}

/// `u = v̂ − W x̄`: the normal-cone part of `v̂`.
fn normal_part<T: Real>(inst: &PvsInstance<T>) -> DVector<T> {
    let vhat = inst.v_hat();
    match inst.potential.quadratic() {
        Some(w) => vhat - w * &inst.reference.x,
        None => vhat,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MorReport<T: Real> {
    pub holds: bool,
    /// nonzero `z` with `(0, z) ∈ D*∂ₓg(x̄, p̄, v̂)(0)`
    pub witness: Option<Vec<T>>,
    pub pieces: Vec<IntervalPiece>,
}

/// `(0, z) ∈ D*∂ₓg(x̄, p̄, v̂)(0) ⟹ z = 0` for `C(p) = [a + S_a p, b + S_b p]`.
///
/// Locally `gph ∂ₓg = {(x, p, u) : (x − S p, u) ∈ gph N_[a,b]}` coordinatewise with `S` the
/// shift of the bound that is active, so coderivative elements are `(η, −Sᵀη)` with
/// `η_i ∈ Z_i(w_i)`. At `w = 0` the x-part `η` must vanish, which forces `z = −Sᵀη = 0`.
pub fn check_mor_condition<T: Real>(inst: &PvsInstance<T>) -> Result<MorReport<T>> {
    let bx = box_of(&inst.potential)?;
    let r = &inst.reference;
    let pieces = box_pieces(bx, &r.p, &r.x, &normal_part(inst))?;
    let l = inst.l();
    let row = |s: &Option<DMatrix<T>>, i: usize| -> DVector<T> {
        s.as_ref().map_or_else(|| DVector::zeros(l), |m| m.row(i).transpose())
    };
    let mut z = DVector::<T>::zeros(l);
    for (i, &pc) in pieces.iter().enumerate() {
        let s_i = match pc {
            IntervalPiece::Interior => continue,
            IntervalPiece::LowerCorner | IntervalPiece::LowerRay => row(&bx.lower_shift, i),
            IntervalPiece::UpperCorner | IntervalPiece::UpperRay => row(&bx.upper_shift, i),
            IntervalPiece::Degenerate => {
                let (a, b) = (row(&bx.lower_shift, i), row(&bx.upper_shift, i));
                if (&a - &b).amax() > T::tol(1e-12) {
                    return Err(Error::Unsupported(format!("coordinate {i}: degenerate bounds moving at different rates")));
                }
                a
            }
        };
        let zset = super::coderivative::piece_table(pc, T::zero(), CoderivativeKind::Limiting);
        if !zset.contains(T::zero()) {
            continue;
        }
        // the x-component of the dual pair is η_i itself, required to be 0
        let eta_i = T::zero();
        z -= s_i * eta_i;
    }
    let holds = z.amax() <= T::tol(1e-12);
    Ok(MorReport { holds, witness: if holds { None } else { Some(z.iter().cloned().collect()) }, pieces })
}

#[derive(Debug, Clone, Serialize)]
pub struct PointbasedReport<T: Real> {
    pub holds: bool,
    pub curvature: BoxCurvature<T>,
    pub mor: MorReport<T>,
}

/// `⟨Qw, w⟩ + ⟨z, w⟩ > 0` for all `w ≠ 0`, `z ∈ D*∂ₓg(x̄, p̄, v̂)(w)`, together with the
/// parametric condition on `p`.
pub fn check_pointbased_lipschitz<T: Real>(inst: &PvsInstance<T>) -> Result<PointbasedReport<T>> {
    let bx = box_of(&inst.potential)?;
    let r = &inst.reference;
    let pieces = box_pieces(bx, &r.p, &r.x, &normal_part(inst))?;
    let mut h = inst.base.q.clone();
    if let Some(w) = inst.potential.quadratic() {
        h += w;
    }
    let curvature = box_curvature(&h, &pieces, CoderivativeKind::Limiting)?;
    let mor = check_mor_condition(inst)?;
    let positive = curvature.value > T::tol(1e-9);
    Ok(PointbasedReport { holds: positive && mor.holds, curvature, mor })
}

/// `τ₀ = inf ⟨z, w⟩/‖w‖²` over `z ∈ (D*∂g)(x̄, v̂)(w)` for `g = δ_box + ½xᵀWx`.
pub fn tau0_box<T: Real>(g: &Potential<T>, p: &DVector<T>, x: &DVector<T>, vhat: &DVector<T>) -> Result<BoxCurvature<T>> {
    let bx = box_of(g)?;
    let n = x.len();
    let w = g.quadratic().cloned().unwrap_or_else(|| DMatrix::zeros(n, n));
    let u = vhat - &w * x;
    let pieces = box_pieces(bx, p, x, &u)?;
    box_curvature(&w, &pieces, CoderivativeKind::Limiting)
}
