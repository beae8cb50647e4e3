use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::polyhedra::{Polyhedron, ACTIVE_TOL};
use crate::qp;
use crate::scalar::Real;

/// Box `[a + S_a p, b + S_b p]` with infinite bounds allowed.
#[derive(Debug, Clone)]
pub struct BoxSet<T: Real> {
    pub lower: DVector<T>,
    pub upper: DVector<T>,
    pub lower_shift: Option<DMatrix<T>>,
    pub upper_shift: Option<DMatrix<T>>,
}

impl<T: Real> BoxSet<T> {
    pub fn fixed(lower: DVector<T>, upper: DVector<T>) -> Self {
        BoxSet { lower, upper, lower_shift: None, upper_shift: None }
    }

    /// Same shift applied to both bounds: `C(p) = box + Sp`.
    pub fn shifted(lower: DVector<T>, upper: DVector<T>, s: DMatrix<T>) -> Self {
        BoxSet { lower, upper, lower_shift: Some(s.clone()), upper_shift: Some(s) }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn has_shift(&self) -> bool {
        let nz = |s: &Option<DMatrix<T>>| s.as_ref().map_or(false, |m| m.iter().any(|v| *v != T::zero()));
        nz(&self.lower_shift) || nz(&self.upper_shift)
    }

    pub fn bounds_at(&self, p: &DVector<T>) -> (DVector<T>, DVector<T>) {
        let shift = |base: &DVector<T>, s: &Option<DMatrix<T>>| match s {
            Some(m) if m.ncols() == p.len() && p.len() > 0 => {
                let sp = m * p;
                DVector::from_fn(base.len(), |i, _| if base[i].is_finite_val() { base[i] + sp[i] } else { base[i] })
            }
            _ => base.clone(),
        };
        (shift(&self.lower, &self.lower_shift), shift(&self.upper, &self.upper_shift))
    }
}

/// `φ(x, p) = ½xᵀAx + bᵀx + gᵀp + d`.
#[derive(Debug, Clone)]
pub struct SmoothConstraint<T: Real> {
    pub a: DMatrix<T>,
    pub b: DVector<T>,
    pub g: DVector<T>,
    pub d: T,
}

impl<T: Real> SmoothConstraint<T> {
    pub fn affine(b: DVector<T>, g: DVector<T>, d: T) -> Self {
        let n = b.len();
        SmoothConstraint { a: DMatrix::zeros(n, n), b, g, d }
    }

    pub fn value(&self, x: &DVector<T>, p: &DVector<T>) -> T {
        let half = T::lit(0.5);
        let gp = if self.g.len() == p.len() && p.len() > 0 { self.g.dot(p) } else { T::zero() };
        half * x.dot(&(&self.a * x)) + self.b.dot(x) + gp + self.d
    }

    pub fn grad(&self, x: &DVector<T>) -> DVector<T> {
        &self.a * x + &self.b
    }

    pub fn is_affine(&self) -> bool {
        self.a.iter().all(|v| *v == T::zero())
    }
}

/// The potential `g(x, p)`.
#[derive(Debug, Clone)]
pub enum Potential<T: Real> {
    /// `δ_C`, `C = {x : Gx ≤ h}`
    IndicatorPolyhedron(Polyhedron<T>),
    /// `C(p) = {x : Ax ≤ p, x ≥ 0}`
    IndicatorAffineQvi { a: DMatrix<T> },
    IndicatorBox(BoxSet<T>),
    /// `δ_C + ½xᵀWx`
    QuadraticPlusIndicator { w: DMatrix<T>, inner: Box<Potential<T>> },
    /// `δ_{C(p)}`, `C(p) = {x : φ_i(x, p) ≤ 0}`
    SmoothIneq(Vec<SmoothConstraint<T>>),
}

impl<T: Real> Potential<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            Potential::IndicatorPolyhedron(_) => "indicator_polyhedron",
            Potential::IndicatorAffineQvi { .. } => "indicator_affine_qvi",
            Potential::IndicatorBox(_) => "indicator_box",
            Potential::QuadraticPlusIndicator { .. } => "quadratic_plus_indicator",
            Potential::SmoothIneq(_) => "smooth_ineq",
        }
    }

    /// The quadratic part `W`, if any.
    pub fn quadratic(&self) -> Option<&DMatrix<T>> {
        match self {
            Potential::QuadraticPlusIndicator { w, .. } => Some(w),
            _ => None,
        }
    }

    /// The indicator part (self for pure indicators).
    pub fn indicator(&self) -> &Potential<T> {
        match self {
            Potential::QuadraticPlusIndicator { inner, .. } => inner.indicator(),
            other => other,
        }
    }

    pub fn is_indicator(&self) -> bool {
        !matches!(self, Potential::QuadraticPlusIndicator { .. })
    }

    pub fn as_box(&self) -> Option<&BoxSet<T>> {
        match self.indicator() {
            Potential::IndicatorBox(b) => Some(b),
            _ => None,
        }
    }

    pub fn depends_on_p(&self) -> bool {
        match self {
            Potential::IndicatorPolyhedron(_) => false,
            Potential::IndicatorAffineQvi { .. } => true,
            Potential::IndicatorBox(b) => b.has_shift(),
            Potential::QuadraticPlusIndicator { inner, .. } => inner.depends_on_p(),
            Potential::SmoothIneq(cs) => cs.iter().any(|c| c.g.iter().any(|v| *v != T::zero())),
        }
    }

    /// Whether `g(·, p)` is convex.
    pub fn is_convex(&self) -> bool {
        let psd = |m: &DMatrix<T>| linalg::min_eig(m).map_or(true, |(v, _)| v >= -T::tol(1e-12));
        match self {
            Potential::QuadraticPlusIndicator { w, inner } => psd(w) && inner.is_convex(),
            Potential::SmoothIneq(cs) => cs.iter().all(|c| psd(&c.a)),
            _ => true,
        }
    }

    /// `C(p)` when it is polyhedral.
    pub fn set_at(&self, p: &DVector<T>, n: usize) -> Result<Option<Polyhedron<T>>> {
        match self {
            Potential::IndicatorPolyhedron(c) => Ok(Some(c.clone())),
            Potential::IndicatorAffineQvi { a } => {
                let d = a.nrows();
                if p.len() != d {
                    return Err(Error::Shape(format!("p has length {}, A has {d} rows", p.len())));
                }
                let mut g = DMatrix::zeros(d + n, n);
                g.view_mut((0, 0), (d, n)).copy_from(a);
                g.view_mut((d, 0), (n, n)).copy_from(&(-DMatrix::<T>::identity(n, n)));
                let mut h = DVector::zeros(d + n);
                h.rows_mut(0, d).copy_from(p);
                Ok(Some(Polyhedron::new(g, h)?))
            }
            Potential::IndicatorBox(b) => {
                let (lo, hi) = b.bounds_at(p);
                Ok(Some(Polyhedron::from_box(&lo, &hi)?))
            }
            Potential::QuadraticPlusIndicator { inner, .. } => inner.set_at(p, n),
            Potential::SmoothIneq(cs) => {
                if !cs.iter().all(|c| c.is_affine()) {
                    return Ok(None);
                }
                let rows: Vec<DVector<T>> = cs.iter().map(|c| c.b.clone()).collect();
                let h = DVector::from_iterator(cs.len(), cs.iter().map(|c| -(c.value(&DVector::zeros(n), p))));
                Ok(Some(Polyhedron::new(linalg::rows(n, &rows), h)?))
            }
        }
    }

    /// `max(0, max_i g-constraint violation)` of `x` for `C(p)`.
    pub fn violation(&self, x: &DVector<T>, p: &DVector<T>) -> Result<T> {
        match self.indicator() {
            Potential::SmoothIneq(cs) => {
                Ok(cs.iter().map(|c| c.value(x, p)).fold(T::zero(), |a, b| a.max(b)))
            }
            ind => Ok(ind.set_at(p, x.len())?.expect("polyhedral").violation(x)),
        }
    }

    /// Active constraints of the indicator part at `(x, p)` and the corresponding gradients (as rows).
    pub fn active_gradients(&self, x: &DVector<T>, p: &DVector<T>) -> Result<(Vec<usize>, DMatrix<T>)> {
        let n = x.len();
        let tol = T::tol(ACTIVE_TOL);
        match self.indicator() {
            Potential::SmoothIneq(cs) => {
                let act: Vec<usize> = (0..cs.len()).filter(|&i| cs[i].value(x, p).abs() <= tol).collect();
                let rows: Vec<DVector<T>> = act.iter().map(|&i| cs[i].grad(x)).collect();
                Ok((act, linalg::rows(n, &rows)))
            }
            ind => {
                let c = ind.set_at(p, n)?.expect("polyhedral");
                let act = c.active_set(x, tol);
                let g = linalg::select_rows(c.g(), &act);
                Ok((act, g))
            }
        }
    }

    /// `g(x, p)`, `+∞` outside the domain.
    pub fn value(&self, x: &DVector<T>, p: &DVector<T>) -> Result<T> {
        if self.violation(x, p)? > T::tol(1e-9) {
            return Ok(T::INF);
        }
        Ok(match self.quadratic() {
            Some(w) => T::lit(0.5) * x.dot(&(w * x)),
            None => T::zero(),
        })
    }

    /// Residual of `v ∈ ∂ₓg(x, p)`: set violation plus distance of `v − Wx` to the normal cone.
    pub fn subgradient_residual(&self, x: &DVector<T>, p: &DVector<T>, v: &DVector<T>) -> Result<T> {
        let viol = self.violation(x, p)?;
        let u = match self.quadratic() {
            Some(w) => v - w * x,
            None => v.clone(),
        };
        let (_, grads) = self.active_gradients(x, p)?;
        let dist = linalg::dist_to_cone(&grads.transpose(), &u);
        Ok(viol.max(dist))
    }

    /// Projection onto `C(p)`; exact for polyhedral sets, sequential linearization otherwise.
    pub fn project(&self, y: &DVector<T>, p: &DVector<T>) -> Result<DVector<T>> {
        let n = y.len();
        if let Some(c) = self.indicator().set_at(p, n)? {
            return c.project(y);
        }
        self.project_face(y, p, &[])
    }

    /// Projection onto `{x ∈ C(p) : constraint rows in `face` hold with equality}`.
    /// Row indices refer to the rows of `set_at(p)` (or the constraint list for smooth systems).
    pub fn project_face(&self, y: &DVector<T>, p: &DVector<T>, face: &[usize]) -> Result<DVector<T>> {
        let n = y.len();
        let eye = DMatrix::identity(n, n);
        if let Some(c) = self.indicator().set_at(p, n)? {
            let e = linalg::select_rows(c.g(), face);
            let eh = linalg::select_entries(c.h(), face);
            return Ok(qp::solve(&eye, &(-y), &e, &eh, c.g(), c.h())?.x);
        }
        let Potential::SmoothIneq(cs) = self.indicator() else { unreachable!() };
        let others: Vec<usize> = (0..cs.len()).filter(|i| !face.contains(i)).collect();
        let mut x = y.clone();
        for _ in 0..200 {
            // linearize at x: φ(x) + ∇φ(x)ᵀ(z − x) ≤ 0 (= 0 on the face)
            let lin = |idx: &[usize]| {
                let rows: Vec<DVector<T>> = idx.iter().map(|&i| cs[i].grad(&x)).collect();
                let h = DVector::from_iterator(
                    idx.len(),
                    idx.iter().zip(&rows).map(|(&i, r)| r.dot(&x) - cs[i].value(&x, p)),
                );
                (linalg::rows(n, &rows), h)
            };
            let (ge, he) = lin(face);
            let (gi, hi) = lin(&others);
            let sol = qp::solve(&eye, &(-y), &ge, &he, &gi, &hi)?;
            let step = (&sol.x - &x).norm();
            x = sol.x;
            if step <= T::tol(1e-11) * (T::one() + x.norm()) {
                return Ok(x);
            }
        }
        Err(Error::IterationLimit("nonlinear projection"))
    }
}

/// How a threshold of prox-regularity was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Estimated,
}

/// Prox-parameter `r` together with the threshold `ℛ` it must exceed.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PotentialConstants<T: Real> {
    #[serde(serialize_with = "crate::report::real")]
    pub r: T,
    #[serde(serialize_with = "crate::report::real")]
    pub threshold: T,
    pub provenance: Provenance,
}

impl<T: Real> PotentialConstants<T> {
    pub fn new(r: T, threshold: T, provenance: Provenance) -> Result<Self> {
        if !(r > T::zero()) || threshold < T::zero() {
            return Err(Error::OutOfRange(format!("r = {} must be positive, threshold = {} nonnegative", r.f64(), threshold.f64())));
        }
        if provenance == Provenance::ClosedForm && r <= threshold {
            return Err(Error::OutOfRange(format!("r = {} must exceed the threshold {}", r.f64(), threshold.f64())));
        }
        Ok(PotentialConstants { r, threshold, provenance })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn orthant_membership() {
        let g = Potential::IndicatorBox(BoxSet::fixed(v(&[0.0, 0.0]), v(&[f64::INFINITY, f64::INFINITY])));
        let p = v(&[]);
        assert_eq!(g.subgradient_residual(&v(&[0.0, 1.0]), &p, &v(&[-1.0, 0.0])).unwrap(), 0.0);
        assert_relative_eq!(g.subgradient_residual(&v(&[0.0, 1.0]), &p, &v(&[-1.0, 0.5])).unwrap(), 0.5);
        assert_eq!(g.value(&v(&[-1.0, 0.0]), &p).unwrap(), f64::INFINITY);
    }

    #[test]
    fn quadratic_sum_rule() {
        let inner = Potential::IndicatorPolyhedron(Polyhedron::nonneg_orthant(2));
        let g = Potential::QuadraticPlusIndicator { w: -DMatrix::identity(2, 2), inner: Box::new(inner) };
        // v = u − x with u ∈ N(x)
        let x = v(&[0.0, 0.3]);
        assert!(g.subgradient_residual(&x, &v(&[]), &v(&[-0.7, -0.3])).unwrap() < 1e-12);
        assert!(!g.is_convex());
        assert_relative_eq!(g.value(&x, &v(&[])).unwrap(), -0.045, epsilon = 1e-15);
    }

    #[test]
    fn shifted_box_and_qvi_sets() {
        let b = BoxSet { lower: v(&[0.0]), upper: v(&[1.0]), lower_shift: None, upper_shift: Some(DMatrix::from_element(1, 1, 1.0)) };
        let (lo, hi) = b.bounds_at(&v(&[0.2]));
        assert_eq!((lo[0], hi[0]), (0.0, 1.2));
        let q = Potential::IndicatorAffineQvi { a: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]) };
        let c = q.set_at(&v(&[1.0]), 2).unwrap().unwrap();
        assert!(c.contains(&v(&[0.5, 0.5]), 1e-12));
        assert!(!c.contains(&v(&[1.0, 0.5]), 1e-12));
        assert!(q.depends_on_p());
    }

    #[test]
    fn nonlinear_projection_onto_disc() {
        // x₁² + x₂² − 1 ≤ 0
        let c = SmoothConstraint { a: DMatrix::identity(2, 2) * 2.0, b: v(&[0.0, 0.0]), g: v(&[]), d: -1.0 };
        let g = Potential::SmoothIneq(vec![c]);
        assert!(g.set_at(&v(&[]), 2).unwrap().is_none());
        let x = g.project(&v(&[3.0, 4.0]), &v(&[])).unwrap();
        assert_relative_eq!(x, v(&[0.6, 0.8]), epsilon = 1e-9);
    }
}
