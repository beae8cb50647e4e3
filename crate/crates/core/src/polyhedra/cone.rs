//! Polyhedral cones in both inequality and generator form.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::lp::{self, LpStatus};
use crate::scalar::Real;

/// `{w : E w = 0, M w ≤ 0}` together with its generators
/// `cone(rays) + span(lineality)`.
#[derive(Debug, Clone)]
pub struct PolyCone<T: Real> {
    pub n: usize,
    /// rows of `M`
    pub ineq: DMatrix<T>,
    /// rows of `E`
    pub eq: DMatrix<T>,
    /// extreme rays of the pointed part, unit length
    pub rays: Vec<DVector<T>>,
    /// orthonormal basis of the lineality space (columns)
    pub lineality: DMatrix<T>,
}

/// A face given by the inequality rows that hold with equality on it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Face {
    pub equality: Vec<usize>,
    pub inequality: Vec<usize>,
}

pub const FACE_LIMIT: usize = 20;

fn rel_tol<T: Real>() -> T {
    T::tol(1e-9)
}

fn normalize<T: Real>(v: DVector<T>) -> DVector<T> {
    let nv = v.norm();
    if nv > T::zero() {
        v / nv
    } else {
        v
    }
}

fn dedupe<T: Real>(mut rays: Vec<DVector<T>>) -> Vec<DVector<T>> {
    let mut out: Vec<DVector<T>> = Vec::new();
    rays.retain(|r| r.norm() > T::tol(1e-12));
    for r in rays {
        let r = normalize(r);
        if !out.iter().any(|o| (o - &r).norm() < T::tol(1e-8)) {
            out.push(r);
        }
    }
    out
}

impl<T: Real> PolyCone<T> {
    /// Build from inequality form, computing generators by double description.
    pub fn from_inequalities(m: DMatrix<T>, e: DMatrix<T>, n: usize) -> Self {
        let m = if m.nrows() == 0 { DMatrix::zeros(0, n) } else { m };
        let e = if e.nrows() == 0 { DMatrix::zeros(0, n) } else { e };
        let stacked = stack(&e, &m, n);
        let lineality = linalg::null_space(&stacked, n, rel_tol());
        let rays = pointed_rays_dd(&m, &e, &lineality, n);
        PolyCone { n, ineq: m, eq: e, rays, lineality }
    }

    /// Build from generators `cone(gens) + span(lin)`.
    pub fn from_generators(gens: &[DVector<T>], lin: &[DVector<T>], n: usize) -> Self {
        // polar of the generated cone is {y : gᵀy ≤ 0, lᵀy = 0}
        let polar = PolyCone::from_inequalities(linalg::rows(n, gens), linalg::rows(n, lin), n);
        let m = linalg::rows(n, &polar.rays);
        let e = polar.lineality.transpose();
        PolyCone::from_inequalities(m, e, n)
    }

    /// The linear subspace spanned by the columns of `basis`.
    pub fn subspace(basis: &DMatrix<T>, n: usize) -> Self {
        let b = linalg::range_basis(basis, rel_tol());
        let comp = linalg::null_space(&b.transpose(), n, rel_tol());
        PolyCone { n, ineq: DMatrix::zeros(0, n), eq: comp.transpose(), rays: Vec::new(), lineality: b }
    }

    pub fn whole(n: usize) -> Self {
        PolyCone::subspace(&DMatrix::identity(n, n), n)
    }

    pub fn zero(n: usize) -> Self {
        PolyCone::subspace(&DMatrix::zeros(n, 0), n)
    }

    pub fn is_subspace(&self) -> bool {
        self.rays.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.rays.is_empty() && self.lineality.ncols() == 0
    }

    /// Dimension of the linear span of the cone.
    pub fn span_dim(&self) -> usize {
        self.span_basis().ncols()
    }

    /// Orthonormal basis of `K − K = span K`.
    pub fn span_basis(&self) -> DMatrix<T> {
        let mut cols: Vec<DVector<T>> = self.rays.clone();
        for j in 0..self.lineality.ncols() {
            cols.push(self.lineality.column(j).into_owned());
        }
        linalg::range_basis(&linalg::columns(self.n, &cols), rel_tol())
    }

    /// Membership via the inequality representation.
    pub fn contains(&self, w: &DVector<T>, tol: T) -> bool {
        let scale = T::one() + w.norm();
        let t = tol * scale;
        (self.eq.nrows() == 0 || (&self.eq * w).amax() <= t)
            && (self.ineq.nrows() == 0 || (&self.ineq * w).max() <= t)
    }

    /// Distance from `w` to the cone via the generator representation.
    pub fn dist_generators(&self, w: &DVector<T>) -> T {
        let mut cols: Vec<DVector<T>> = self.rays.clone();
        for j in 0..self.lineality.ncols() {
            let c = self.lineality.column(j).into_owned();
            cols.push(-&c);
            cols.push(c);
        }
        linalg::dist_to_cone(&linalg::columns(self.n, &cols), w)
    }

    pub fn contains_generators(&self, w: &DVector<T>, tol: T) -> bool {
        self.dist_generators(w) <= tol * (T::one() + w.norm())
    }

    /// Membership of `w` in the polar cone.
    pub fn polar_contains(&self, y: &DVector<T>, tol: T) -> bool {
        let t = tol * (T::one() + y.norm());
        self.rays.iter().all(|r| r.dot(y) <= t)
            && (0..self.lineality.ncols()).all(|j| self.lineality.column(j).dot(y).abs() <= t)
    }

    /// `K − K` as a subspace cone.
    pub fn difference_span(&self) -> PolyCone<T> {
        PolyCone::subspace(&self.span_basis(), self.n)
    }

    /// Euclidean projection onto the cone.
    pub fn project(&self, w: &DVector<T>) -> Result<DVector<T>> {
        let g = DMatrix::identity(self.n, self.n);
        let sol = crate::qp::solve(
            &g,
            &(-w),
            &self.eq,
            &DVector::zeros(self.eq.nrows()),
            &self.ineq,
            &DVector::zeros(self.ineq.nrows()),
        )?;
        Ok(sol.x)
    }

    /// Enumerate all faces of the cone (inequality form with at most [`FACE_LIMIT`] rows).
    pub fn faces(&self) -> Result<Vec<Face>> {
        let s = self.ineq.nrows();
        if s > FACE_LIMIT {
            return Err(Error::SizeLimit(format!("{s} inequalities exceed the face-enumeration limit {FACE_LIMIT}")));
        }
        let root = self.closure(&[]);
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut stack = vec![root];
        while let Some(f) = stack.pop() {
            if !seen.insert(f.clone()) {
                continue;
            }
            for i in 0..s {
                if f.contains(&i) {
                    continue;
                }
                let mut g = f.clone();
                g.push(i);
                let c = self.closure(&g);
                if !seen.contains(&c) {
                    stack.push(c);
                }
            }
        }
        Ok(seen
            .into_iter()
            .map(|eqs| {
                let ineqs = (0..s).filter(|i| !eqs.contains(i)).collect();
                Face { equality: eqs, inequality: ineqs }
            })
            .collect())
    }

    /// Rows that vanish on the whole face `{w ∈ K : M_S w = 0}`.
    fn closure(&self, set: &[usize]) -> Vec<usize> {
        let s = self.ineq.nrows();
        let n = self.n;
        let fixed = linalg::select_rows(&self.ineq, set);
        let e = stack(&self.eq, &fixed, n);
        let mut out: Vec<usize> = set.to_vec();
        for j in 0..s {
            if set.contains(&j) {
                continue;
            }
            let a = self.ineq.row(j).transpose();
            // maximize −aᵀw subject to w in the face and −aᵀw ≤ 1
            let mut ub = DMatrix::zeros(s + 1, n);
            ub.view_mut((0, 0), (s, n)).copy_from(&self.ineq);
            ub.set_row(s, &(-&a).transpose());
            let mut rhs = DVector::zeros(s + 1);
            rhs[s] = T::one();
            let st = lp::maximize(&(-&a), &ub, &rhs, &e, &DVector::zeros(e.nrows()));
            let strict = match st {
                LpStatus::Optimal { value, .. } => value > T::tol(1e-9),
                LpStatus::Unbounded => true,
                LpStatus::Infeasible => false,
            };
            if !strict {
                out.push(j);
            }
        }
        out.sort_unstable();
        out
    }

    /// Face count from ray incidences (intersection closure of the row ray-sets).
    pub fn face_count_from_rays(&self) -> usize {
        let s = self.ineq.nrows();
        let tol = T::tol(1e-8);
        let all: BTreeSet<usize> = (0..self.rays.len()).collect();
        let mut family: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
        family.insert(all);
        let row_sets: Vec<BTreeSet<usize>> = (0..s)
            .map(|i| {
                let a = self.ineq.row(i).transpose();
                (0..self.rays.len()).filter(|&k| a.dot(&self.rays[k]).abs() <= tol).collect()
            })
            .collect();
        loop {
            let mut added = false;
            let current: Vec<BTreeSet<usize>> = family.iter().cloned().collect();
            for f in &current {
                for r in &row_sets {
                    let inter: BTreeSet<usize> = f.intersection(r).cloned().collect();
                    if family.insert(inter) {
                        added = true;
                    }
                }
            }
            if !added {
                break;
            }
        }
        family.len()
    }
}

pub(crate) fn stack<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, n: usize) -> DMatrix<T> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), n);
    if a.nrows() > 0 {
        out.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    }
    if b.nrows() > 0 {
        out.view_mut((a.nrows(), 0), (b.nrows(), n)).copy_from(b);
    }
    out
}

/// Extreme rays of `{w ∈ L⊥ : E w = 0, M w ≤ 0}` by the double-description method.
fn pointed_rays_dd<T: Real>(m: &DMatrix<T>, e: &DMatrix<T>, lin: &DMatrix<T>, n: usize) -> Vec<DVector<T>> {
    // work in coordinates of S = null(E) ∩ L⊥
    let cons = stack(e, &lin.transpose(), n);
    let basis = linalg::null_space(&cons, n, rel_tol());
    let k = basis.ncols();
    if k == 0 {
        return Vec::new();
    }
    let mp = m * &basis; // rows in R^k
    let s = mp.nrows();
    let tol = T::tol(1e-10);
    // pick k independent rows to start with a simplicial cone
    let mut chosen: Vec<usize> = Vec::new();
    for i in 0..s {
        let mut trial = chosen.clone();
        trial.push(i);
        if linalg::rank(&linalg::select_rows(&mp, &trial), rel_tol()) == trial.len() {
            chosen = trial;
            if chosen.len() == k {
                break;
            }
        }
    }
    if chosen.len() < k {
        // cannot happen when the lineality is factored out; fall back to no rays
        return Vec::new();
    }
    let b = linalg::select_rows(&mp, &chosen);
    let binv = match b.clone().try_inverse() {
        Some(x) => x,
        None => return Vec::new(),
    };
    let mut rays: Vec<DVector<T>> = (0..k).map(|j| normalize(-binv.column(j).into_owned())).collect();
    let mut processed: Vec<usize> = chosen.clone();
    for i in 0..s {
        if chosen.contains(&i) {
            continue;
        }
        let a = mp.row(i).transpose();
        let vals: Vec<T> = rays.iter().map(|r| a.dot(r)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&j| vals[j] > tol).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&j| vals[j] < -tol).collect();
        let mut next: Vec<DVector<T>> = (0..rays.len()).filter(|&j| vals[j] <= tol).map(|j| rays[j].clone()).collect();
        let proc_rows = linalg::select_rows(&mp, &processed);
        for &pj in &pos {
            for &nj in &neg {
                // adjacency: common active processed rows have rank k − 2
                let common: Vec<usize> = (0..processed.len())
                    .filter(|&t| {
                        let r = proc_rows.row(t).transpose();
                        r.dot(&rays[pj]).abs() <= tol && r.dot(&rays[nj]).abs() <= tol
                    })
                    .collect();
                let rk = if common.is_empty() { 0 } else { linalg::rank(&linalg::select_rows(&proc_rows, &common), rel_tol()) };
                if k >= 2 && rk + 2 == k || k < 2 {
                    let nr = &rays[pj] * (-vals[nj]) + &rays[nj] * vals[pj];
                    if nr.norm() > T::tol(1e-12) {
                        next.push(normalize(nr));
                    }
                }
            }
        }
        rays = dedupe(next);
        processed.push(i);
    }
    dedupe(rays.into_iter().map(|r| &basis * r).collect())
}

/// Brute-force extreme rays (all (k−1)-subsets); used to cross-check double description.
pub fn pointed_rays_bruteforce<T: Real>(c: &PolyCone<T>) -> Vec<DVector<T>> {
    let n = c.n;
    let cons = stack(&c.eq, &c.lineality.transpose(), n);
    let basis = linalg::null_space(&cons, n, rel_tol());
    let k = basis.ncols();
    if k == 0 {
        return Vec::new();
    }
    let mp = &c.ineq * &basis;
    let s = mp.nrows();
    let mut out = Vec::new();
    for subset in crate::combinatorics::subsets_of_size(s, k - 1) {
        let rowsm = linalg::select_rows(&mp, &subset);
        let ns = if subset.is_empty() { DMatrix::identity(k, k) } else { linalg::null_space(&rowsm, k, rel_tol()) };
        if ns.ncols() != 1 {
            continue;
        }
        let d = ns.column(0).into_owned();
        for cand in [d.clone(), -d] {
            if s == 0 || (&mp * &cand).max() <= T::tol(1e-10) {
                out.push(&basis * cand);
            }
        }
    }
    dedupe(out)
}
