//! Convex polyhedra `{x : Gx ≤ h}` and their cone geometry.

mod cone;
pub mod curvature;
pub mod hausdorff;
pub mod limits;

pub use cone::{pointed_rays_bruteforce, Face, PolyCone, FACE_LIMIT};
pub use hausdorff::{hausdorff_local, HausdorffMode, LocalHausdorff};

use nalgebra::{DMatrix, DVector};

use crate::combinatorics;
use crate::error::{Error, Result};
use crate::linalg;
use crate::lp;
use crate::qp;
use crate::scalar::Real;

/// Active-constraint tolerance for `I(x)`.
pub const ACTIVE_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Polyhedron<T: Real> {
    g: DMatrix<T>,
    h: DVector<T>,
}

impl<T: Real> Polyhedron<T> {
    /// Construct, certifying nonemptiness by a feasibility LP.
    pub fn new(g: DMatrix<T>, h: DVector<T>) -> Result<Self> {
        if g.nrows() != h.len() {
            return Err(Error::Shape(format!("G has {} rows but h has {}", g.nrows(), h.len())));
        }
        let n = g.ncols();
        if g.nrows() > 0 && lp::feasible_point(&g, &h, &DMatrix::zeros(0, n), &DVector::zeros(0), n).is_none() {
            return Err(Error::Infeasible);
        }
        Ok(Polyhedron { g, h })
    }

    pub fn whole(n: usize) -> Self {
        Polyhedron { g: DMatrix::zeros(0, n), h: DVector::zeros(0) }
    }

    pub fn nonneg_orthant(n: usize) -> Self {
        Polyhedron { g: -DMatrix::identity(n, n), h: DVector::zeros(n) }
    }

    /// Box `[a, b]` with infinite bounds dropped.
    pub fn from_box(a: &DVector<T>, b: &DVector<T>) -> Result<Self> {
        let n = a.len();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for i in 0..n {
            if a[i].is_finite_val() {
                let mut r = DVector::zeros(n);
                r[i] = -T::one();
                rows.push(r);
                rhs.push(-a[i]);
            }
            if b[i].is_finite_val() {
                let mut r = DVector::zeros(n);
                r[i] = T::one();
                rows.push(r);
                rhs.push(b[i]);
            }
        }
        if (0..n).any(|i| a[i] > b[i]) {
            return Err(Error::Infeasible);
        }
        Ok(Polyhedron { g: linalg::rows(n, &rows), h: DVector::from_vec(rhs) })
    }

    pub fn dim(&self) -> usize {
        self.g.ncols()
    }

    pub fn g(&self) -> &DMatrix<T> {
        &self.g
    }

    pub fn h(&self) -> &DVector<T> {
        &self.h
    }

    pub fn n_rows(&self) -> usize {
        self.g.nrows()
    }

    /// `max(0, max_i (Gx − h)_i)`.
    pub fn violation(&self, x: &DVector<T>) -> T {
        if self.g.nrows() == 0 {
            return T::zero();
        }
        (&self.g * x - &self.h).max().max(T::zero())
    }

    pub fn contains(&self, x: &DVector<T>, tol: T) -> bool {
        self.violation(x) <= tol
    }

    pub fn active_set(&self, x: &DVector<T>, tol: T) -> Vec<usize> {
        if self.g.nrows() == 0 {
            return Vec::new();
        }
        let s = &self.g * x - &self.h;
        (0..s.len()).filter(|&i| s[i].abs() <= tol).collect()
    }

    fn check_member(&self, x: &DVector<T>) -> Result<()> {
        let viol = self.violation(x);
        if viol > T::tol(1e-9) {
            return Err(Error::NotInSet(viol.f64()));
        }
        Ok(())
    }

    /// Euclidean projection with its KKT multipliers.
    pub fn project_kkt(&self, x: &DVector<T>) -> Result<(DVector<T>, DVector<T>)> {
        let n = self.dim();
        if self.g.nrows() == 0 {
            return Ok((x.clone(), DVector::zeros(0)));
        }
        let sol = qp::solve(
            &DMatrix::identity(n, n),
            &(-x),
            &DMatrix::zeros(0, n),
            &DVector::zeros(0),
            &self.g,
            &self.h,
        )?;
        Ok((sol.x, sol.mu))
    }

    pub fn project(&self, x: &DVector<T>) -> Result<DVector<T>> {
        Ok(self.project_kkt(x)?.0)
    }

    pub fn tangent_cone(&self, x: &DVector<T>) -> Result<PolyCone<T>> {
        self.check_member(x)?;
        let act = self.active_set(x, T::tol(ACTIVE_TOL));
        Ok(PolyCone::from_inequalities(linalg::select_rows(&self.g, &act), DMatrix::zeros(0, self.dim()), self.dim()))
    }

    pub fn normal_cone(&self, x: &DVector<T>) -> Result<PolyCone<T>> {
        self.check_member(x)?;
        let act = self.active_set(x, T::tol(ACTIVE_TOL));
        let gens: Vec<DVector<T>> = act.iter().map(|&i| self.g.row(i).transpose()).collect();
        Ok(PolyCone::from_generators(&gens, &[], self.dim()))
    }

    /// Distance from `v` to `N_C(x)`.
    pub fn normal_residual(&self, x: &DVector<T>, v: &DVector<T>) -> T {
        let act = self.active_set(x, T::tol(ACTIVE_TOL));
        let gens = linalg::select_rows(&self.g, &act).transpose();
        linalg::dist_to_cone(&gens, v)
    }

    /// `T_C(x) ∩ {v}⊥`.
    pub fn critical_cone(&self, x: &DVector<T>, v: &DVector<T>) -> Result<PolyCone<T>> {
        self.check_member(x)?;
        let res = self.normal_residual(x, v);
        if res > T::tol(1e-9) * (T::one() + v.norm()) {
            return Err(Error::NotNormal(res.f64()));
        }
        let act = self.active_set(x, T::tol(ACTIVE_TOL));
        let n = self.dim();
        let e = if v.norm() > T::zero() { DMatrix::from_row_slice(1, n, v.as_slice()) } else { DMatrix::zeros(0, n) };
        Ok(PolyCone::from_inequalities(linalg::select_rows(&self.g, &act), e, n))
    }

    /// Intersection with the box `center ± radius`.
    pub fn intersect_box(&self, center: &DVector<T>, radius: T) -> Result<Polyhedron<T>> {
        let n = self.dim();
        let lo = center.map(|c| c - radius);
        let hi = center.map(|c| c + radius);
        let b = Polyhedron::from_box(&lo, &hi)?;
        let g = cone::stack(&self.g, &b.g, n);
        let mut h = DVector::zeros(self.h.len() + b.h.len());
        h.rows_mut(0, self.h.len()).copy_from(&self.h);
        h.rows_mut(self.h.len(), b.h.len()).copy_from(&b.h);
        Polyhedron::new(g, h)
    }

    /// Vertices by enumerating `n`-subsets of rows.
    pub fn vertices(&self) -> Vec<DVector<T>> {
        let n = self.dim();
        let s = self.n_rows();
        let mut out: Vec<DVector<T>> = Vec::new();
        if n == 0 {
            return vec![DVector::zeros(0)];
        }
        for subset in combinatorics::subsets_of_size(s, n) {
            let a = linalg::select_rows(&self.g, &subset);
            let b = linalg::select_entries(&self.h, &subset);
            let Some(inv) = a.clone().try_inverse() else { continue };
            if linalg::rank(&a, T::tol(1e-10)) < n {
                continue;
            }
            let x = inv * b;
            if self.violation(&x) <= T::tol(1e-9) * (T::one() + x.norm())
                && !out.iter().any(|o| (o - &x).norm() <= T::tol(1e-9) * (T::one() + x.norm()))
            {
                out.push(x);
            }
        }
        out
    }

    /// Edges between vertices (pairs sharing `n − 1` independent active rows).
    pub fn edges(&self, verts: &[DVector<T>]) -> Vec<(usize, usize)> {
        let n = self.dim();
        let tol = T::tol(1e-8);
        let acts: Vec<Vec<usize>> = verts.iter().map(|v| self.active_set(v, tol)).collect();
        let mut out = Vec::new();
        for i in 0..verts.len() {
            for j in i + 1..verts.len() {
                let common: Vec<usize> = acts[i].iter().filter(|k| acts[j].contains(k)).cloned().collect();
                if n >= 1 && linalg::rank(&linalg::select_rows(&self.g, &common), T::tol(1e-10)) + 1 == n {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Largest `t ≥ 0` with `from + t·dir ∈ C` (infinite if unbounded).
    pub fn ray_exit(&self, from: &DVector<T>, dir: &DVector<T>) -> T {
        let mut t = T::INF;
        for i in 0..self.n_rows() {
            let a = self.g.row(i).transpose();
            let ad = a.dot(dir);
            if ad > T::tol(1e-14) {
                let slack = (self.h[i] - a.dot(from)).max(T::zero());
                t = t.min(slack / ad);
            }
        }
        t
    }
}
