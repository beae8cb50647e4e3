//! Certificates for parametric variational conditions over `C(p) = {x : φᵢ(x, p) ≤ 0}`:
//! constraint qualifications, multiplier polytopes, GSSOSC, GUSOSC and the bordered
//! determinant probe.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::combinatorics;
use crate::error::{Error, Result};
use crate::linalg;
use crate::lp::{self, LpStatus};
use crate::model::{Potential, PvsInstance, SmoothConstraint};
use crate::polyhedra::curvature::min_quadratic_on_cone;
use crate::prox::{self, GraphSampler};
use crate::report;
use crate::sampling::{self, stacked_norm, uniform_ball};
use crate::scalar::Real;

/// `|φᵢ| ≤ ACTIVE_TOL` defines `I(x, p)`.
pub const ACTIVE_TOL: f64 = 1e-8;
/// Largest active set handled by subset enumeration.
pub const SUBSET_LIMIT: usize = 12;
pub const MFCQ_TOL: f64 = 1e-8;
pub const GSSOSC_TOL: f64 = 1e-9;
pub const GUSOSC_TOL: f64 = 1e-6;
pub const VERTEX_TOL: f64 = 1e-9;
/// Interior multipliers checked by GSSOSC besides the vertices.
pub const INTERIOR_MULTIPLIERS: usize = 100;

fn constraints<T: Real>(g: &Potential<T>) -> Result<&[SmoothConstraint<T>]> {
    match g.indicator() {
        Potential::SmoothIneq(cs) => Ok(cs),
        other => Err(Error::Unsupported(format!("{} is not a smooth inequality system", other.kind()))),
    }
}

fn grads<T: Real>(cs: &[SmoothConstraint<T>], x: &DVector<T>, idx: &[usize]) -> DMatrix<T> {
    linalg::rows(x.len(), &idx.iter().map(|&i| cs[i].grad(x)).collect::<Vec<_>>())
}

#[derive(Debug, Clone, Serialize)]
pub struct ActiveSet<T: Real> {
    /// `I(x, p)`
    pub indices: Vec<usize>,
    #[serde(serialize_with = "report::reals")]
    pub values: Vec<T>,
}

impl<T: Real> ActiveSet<T> {
    /// `I₊(x, p, λ) = {i ∈ I : λᵢ > tol}`.
    pub fn strict(&self, lambda: &DVector<T>) -> Vec<usize> {
        self.indices.iter().copied().filter(|&i| lambda[i] > T::tol(VERTEX_TOL)).collect()
    }
}

pub fn active_set<T: Real>(g: &Potential<T>, x: &DVector<T>, p: &DVector<T>) -> Result<ActiveSet<T>> {
    let cs = constraints(g)?;
    let values: Vec<T> = cs.iter().map(|c| c.value(x, p)).collect();
    let tol = T::tol(ACTIVE_TOL);
    let worst = values.iter().fold(T::zero(), |a, &b| a.max(b));
    if worst > tol {
        return Err(Error::NotInSet(worst.f64()));
    }
    let indices = (0..cs.len()).filter(|&i| values[i].abs() <= tol).collect();
    Ok(ActiveSet { indices, values })
}

#[derive(Debug, Clone, Serialize)]
pub struct MfcqReport<T: Real> {
    pub holds: bool,
    #[serde(serialize_with = "report::opt_vec")]
    pub witness: Option<DVector<T>>,
    /// optimal `t`; `+∞` when `I = ∅`
    #[serde(serialize_with = "report::real")]
    pub margin: T,
}

/// `max t` s.t. `⟨∇ₓφᵢ, d⟩ ≤ −t` (`i ∈ I`), `‖d‖_∞ ≤ 1`.
pub fn mfcq_check<T: Real>(g: &Potential<T>, x: &DVector<T>, p: &DVector<T>) -> Result<MfcqReport<T>> {
    let cs = constraints(g)?;
    let act = active_set(g, x, p)?;
    let n = x.len();
    if act.indices.is_empty() {
        return Ok(MfcqReport { holds: true, witness: Some(DVector::zeros(n)), margin: T::INF });
    }
    let a = grads(cs, x, &act.indices);
    let k = a.nrows();
    let mut a_ub = DMatrix::zeros(k + 2 * n, n + 1);
    let mut b_ub = DVector::zeros(k + 2 * n);
    a_ub.view_mut((0, 0), (k, n)).copy_from(&a);
    for i in 0..k {
        a_ub[(i, n)] = T::one();
    }
    for j in 0..n {
        a_ub[(k + j, j)] = T::one();
        a_ub[(k + n + j, j)] = -T::one();
        b_ub[k + j] = T::one();
        b_ub[k + n + j] = T::one();
    }
    let mut c = DVector::zeros(n + 1);
    c[n] = T::one();
    match lp::maximize(&c, &a_ub, &b_ub, &DMatrix::zeros(0, n + 1), &DVector::zeros(0)) {
        LpStatus::Optimal { x: z, value } => Ok(MfcqReport {
            holds: value > T::tol(MFCQ_TOL),
            witness: Some(z.rows(0, n).into_owned()),
            margin: value,
        }),
        _ => Err(Error::Numerical("MFCQ linear program failed".into())),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LicqReport {
    pub holds: bool,
    pub rank: usize,
    pub active: usize,
}

pub fn licq_check<T: Real>(g: &Potential<T>, x: &DVector<T>, p: &DVector<T>) -> Result<LicqReport> {
    let cs = constraints(g)?;
    let act = active_set(g, x, p)?;
    let k = act.indices.len();
    let rank = if k == 0 { 0 } else { linalg::rank(&grads(cs, x, &act.indices), T::tol(1e-9)) };
    Ok(LicqReport { holds: rank == k, rank, active: k })
}

#[derive(Debug, Clone, Serialize)]
pub struct CrcqReport {
    pub holds: bool,
    /// a subset whose gradient rank varies, with the ranks seen
    pub failing_subset: Option<Vec<usize>>,
    pub ranks_seen: Option<(usize, usize)>,
    pub samples: usize,
    pub subsets: usize,
}

/// Rank constancy of `{∇ₓφᵢ(x, p) : i ∈ J}` for every `J ⊆ I(x̄, p̄)` over samples in `B_δ(x̄, p̄)`.
pub fn crcq_check<T: Real>(g: &Potential<T>, x: &DVector<T>, p: &DVector<T>, delta: T, count: usize, seed: u64) -> Result<CrcqReport> {
    let cs = constraints(g)?;
    let act = active_set(g, x, p)?;
    if act.indices.len() > SUBSET_LIMIT {
        return Err(Error::SizeLimit(format!("|I| = {} exceeds {SUBSET_LIMIT}", act.indices.len())));
    }
    let subsets: Vec<Vec<usize>> = combinatorics::power_set(&act.indices).into_iter().filter(|s| !s.is_empty()).collect();
    let rank_of = |y: &DVector<T>, s: &[usize]| linalg::rank(&grads(cs, y, s), T::tol(1e-9));
    let base: Vec<usize> = subsets.iter().map(|s| rank_of(x, s)).collect();
    let n = x.len();
    let points = sampling::par_indexed(count, seed, |_, rng| {
        let z: DVector<T> = uniform_ball(rng, n + p.len(), delta);
        x + z.rows(0, n)
    });
    for (k, s) in subsets.iter().enumerate() {
        for y in &points {
            let r = rank_of(y, s);
            if r != base[k] {
                return Ok(CrcqReport {
                    holds: false,
                    failing_subset: Some(s.clone()),
                    ranks_seen: Some((base[k], r)),
                    samples: points.len(),
                    subsets: subsets.len(),
                });
            }
        }
    }
    Ok(CrcqReport { holds: true, failing_subset: None, ranks_seen: None, samples: points.len(), subsets: subsets.len() })
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplierPolytope<T: Real> {
    /// rows `∇ₓφ_Iᵀ` restricted to the active columns: `A λ_I = w`
    #[serde(serialize_with = "report::mat")]
    pub equality: DMatrix<T>,
    #[serde(serialize_with = "report::vec")]
    pub rhs: DVector<T>,
    pub active: Vec<usize>,
    #[serde(serialize_with = "report::vecs")]
    pub vertices: Vec<DVector<T>>,
    pub bounded: bool,
    /// `max` stationarity residual over the vertices
    #[serde(serialize_with = "report::real")]
    pub max_residual: T,
}

impl<T: Real> MultiplierPolytope<T> {
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// `∇ₓL(x, p, q, λ) = Q + Σ λᵢ ∇²φᵢ`.
pub fn lagrangian_hessian<T: Real>(inst: &PvsInstance<T>, lambda: &DVector<T>) -> Result<DMatrix<T>> {
    let cs = constraints(&inst.potential)?;
    let mut h = linalg::sym(&inst.base.q);
    if let Some(w) = inst.potential.quadratic() {
        h += linalg::sym(w);
    }
    for (i, c) in cs.iter().enumerate() {
        if lambda[i] != T::zero() {
            h += linalg::sym(&c.a) * lambda[i];
        }
    }
    Ok(h)
}

/// `Λ(x, p, q, v) = {λ ≥ 0 : v = f + Σλᵢ∇ₓφᵢ, λᵢ = 0 off I}` with its vertices.
pub fn multipliers<T: Real>(inst: &PvsInstance<T>, x: &DVector<T>, p: &DVector<T>, q: &DVector<T>, v: &DVector<T>) -> Result<MultiplierPolytope<T>> {
    let g = &inst.potential;
    let cs = constraints(g)?;
    let s = cs.len();
    let act = active_set(g, x, p)?;
    let k = act.indices.len();
    if k > SUBSET_LIMIT {
        return Err(Error::SizeLimit(format!("|I| = {k} exceeds {SUBSET_LIMIT}")));
    }
    let mut w = v - inst.evaluate_base(x, p, q)?;
    if let Some(wq) = g.quadratic() {
        w -= wq * x;
    }
    let a = grads(cs, x, &act.indices).transpose();
    let scale = T::one() + w.amax() + a.amax();
    let tol = T::tol(VERTEX_TOL) * scale;
    let mut vertices: Vec<DVector<T>> = Vec::new();
    let mut max_residual = T::zero();
    if w.amax() <= tol {
        vertices.push(DVector::zeros(s));
    }
    let rank = if k == 0 { 0 } else { linalg::rank(&a, T::tol(1e-10)) };
    for size in 1..=rank {
        for sub in combinatorics::subsets_of_size(k, size) {
            let cols = linalg::column_subset(&a, &sub);
            if linalg::rank(&cols, T::tol(1e-10)) < size {
                continue;
            }
            let lam_s = linalg::lstsq(&cols, &w);
            let res = (&cols * &lam_s - &w).amax();
            if res > tol || lam_s.iter().any(|&l| l < -T::tol(1e-12)) {
                continue;
            }
            let mut lam = DVector::zeros(s);
            for (j, &c) in sub.iter().enumerate() {
                lam[act.indices[c]] = lam_s[j].max(T::zero());
            }
            if !vertices.iter().any(|u| (u - &lam).amax() <= tol) {
                max_residual = max_residual.max(res);
                vertices.push(lam);
            }
        }
    }
    // recession direction d ≥ 0, A d = 0, d ≠ 0
    let bounded = if k == 0 {
        true
    } else {
        let mut a_ub = DMatrix::zeros(2 * k, k);
        let mut b_ub = DVector::zeros(2 * k);
        for j in 0..k {
            a_ub[(j, j)] = -T::one();
            a_ub[(k + j, j)] = T::one();
            b_ub[k + j] = T::one();
        }
        match lp::maximize(&DVector::from_element(k, T::one()), &a_ub, &b_ub, &a, &DVector::zeros(a.nrows())) {
            LpStatus::Optimal { value, .. } => value <= T::tol(1e-9),
            _ => true,
        }
    };
    Ok(MultiplierPolytope { equality: a, rhs: w, active: act.indices, vertices, bounded, max_residual })
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplierCurvature<T: Real> {
    #[serde(serialize_with = "report::vec")]
    pub lambda: DVector<T>,
    pub strict: Vec<usize>,
    pub vertex: bool,
    /// `min uᵀH(λ)u` on the unit sphere of the test set; `+∞` when it is `{0}`
    #[serde(serialize_with = "report::real")]
    pub min_curvature: T,
    #[serde(serialize_with = "report::opt_vec")]
    pub direction: Option<DVector<T>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GssoscReport<T: Real> {
    pub holds: bool,
    pub checked: Vec<MultiplierCurvature<T>>,
    /// first failing multiplier, if any
    pub failing: Option<MultiplierCurvature<T>>,
    pub note: &'static str,
}

fn subspace_curvature<T: Real>(h: &DMatrix<T>, eq: &DMatrix<T>, n: usize) -> (T, Option<DVector<T>>) {
    let z = linalg::null_space(eq, n, T::tol(1e-10));
    if z.ncols() == 0 {
        return (T::INF, None);
    }
    let (val, y) = linalg::min_eig(&(z.transpose() * h * &z)).expect("nonempty");
    (val, Some(&z * y))
}

fn convex_combinations<T: Real>(vertices: &[DVector<T>], count: usize, seed: u64) -> Vec<DVector<T>> {
    if vertices.len() < 2 {
        return Vec::new();
    }
    sampling::par_indexed(count, seed, |_, rng| {
        let w: Vec<f64> = (0..vertices.len()).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
        let total: f64 = w.iter().sum();
        vertices.iter().zip(&w).fold(DVector::zeros(vertices[0].len()), |acc, (v, &wi)| acc + v * T::lit(wi / total))
    })
}

/// `⟨u, ∇ₓL(λ)u⟩ > 0` for `u ≠ 0` with `⟨∇ₓφᵢ, u⟩ = 0` on `I₊(λ)`, for all `λ ∈ Λ` at the reference.
pub fn gssosc_check<T: Real>(inst: &PvsInstance<T>, seed: u64) -> Result<GssoscReport<T>> {
    let r = &inst.reference;
    let cs = constraints(&inst.potential)?;
    let poly = multipliers(inst, &r.x, &r.p, &r.q, &r.v)?;
    if poly.is_empty() {
        return Err(Error::Precondition("empty multiplier set".into()));
    }
    if !poly.bounded {
        return Err(Error::Precondition("unbounded multiplier set".into()));
    }
    let act = active_set(&inst.potential, &r.x, &r.p)?;
    let n = inst.n();
    let interior = convex_combinations(&poly.vertices, INTERIOR_MULTIPLIERS, seed);
    let mut checked = Vec::new();
    for (lam, vertex) in poly.vertices.iter().map(|l| (l, true)).chain(interior.iter().map(|l| (l, false))) {
        let strict = act.strict(lam);
        let h = lagrangian_hessian(inst, lam)?;
        let (min_curvature, direction) = subspace_curvature(&h, &grads(cs, &r.x, &strict), n);
        checked.push(MultiplierCurvature { lambda: lam.clone(), strict, vertex, min_curvature, direction });
    }
    let failing = checked.iter().find(|c| !(c.min_curvature > T::tol(GSSOSC_TOL))).cloned();
    Ok(GssoscReport {
        holds: failing.is_none(),
        checked,
        failing,
        note: "vertices and sampled interior multipliers are checked; supports of interior points contain a vertex support",
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GusoscSample<T: Real> {
    #[serde(serialize_with = "report::vec")]
    pub x: DVector<T>,
    #[serde(serialize_with = "report::vec")]
    pub p: DVector<T>,
    #[serde(serialize_with = "report::vec")]
    pub q: DVector<T>,
    #[serde(serialize_with = "report::vec")]
    pub v: DVector<T>,
    pub worst: MultiplierCurvature<T>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GusoscReport<T: Real> {
    pub holds: bool,
    /// `min ⟨∇ₓL(λ)u, u⟩` over samples, vertex multipliers and unit cone directions
    #[serde(serialize_with = "report::real")]
    pub ell_best: T,
    pub samples: usize,
    pub witness: Option<GusoscSample<T>>,
    pub eta: f64,
    pub seed: u64,
}

fn cone_curvature<T: Real>(inst: &PvsInstance<T>, x: &DVector<T>, act: &ActiveSet<T>, lam: &DVector<T>) -> Result<MultiplierCurvature<T>> {
    let cs = constraints(&inst.potential)?;
    let strict = act.strict(lam);
    let rest: Vec<usize> = act.indices.iter().copied().filter(|i| !strict.contains(i)).collect();
    let h = lagrangian_hessian(inst, lam)?;
    let eq = grads(cs, x, &strict);
    let ineq = -grads(cs, x, &rest);
    let m = min_quadratic_on_cone(&h, &eq, &ineq)?;
    let (min_curvature, direction) = match m {
        Some(c) => (c.value, Some(c.direction)),
        None => (T::INF, None),
    };
    Ok(MultiplierCurvature { lambda: lam.clone(), strict, vertex: true, min_curvature, direction })
}

/// Worst curvature over the vertex multipliers at one point of `gph Ψ`.
fn sample_curvature<T: Real>(inst: &PvsInstance<T>, x: &DVector<T>, p: &DVector<T>, q: &DVector<T>, v: &DVector<T>) -> Result<Option<MultiplierCurvature<T>>> {
    let poly = multipliers(inst, x, p, q, v)?;
    let act = active_set(&inst.potential, x, p)?;
    let mut worst: Option<MultiplierCurvature<T>> = None;
    for lam in &poly.vertices {
        let c = cone_curvature(inst, x, &act, lam)?;
        if worst.as_ref().map_or(true, |w| c.min_curvature < w.min_curvature) {
            worst = Some(c);
        }
    }
    Ok(worst)
}

/// Uniform curvature on the complementarity cones over `gph Ψ ∩ B_η(x̄, p̄, q̄, v̄)`.
///
/// The reference itself is sample 0; further points come from faces through the
/// reference multiplier support.
pub fn gusosc_check<T: Real>(inst: &PvsInstance<T>, eta: T, count: usize, seed: u64) -> Result<GusoscReport<T>> {
    let r = &inst.reference;
    let mf = mfcq_check(&inst.potential, &r.x, &r.p)?;
    if !mf.holds {
        return Err(Error::Precondition("MFCQ fails at the reference".into()));
    }
    let center = prox::reference_sample(inst)?;
    let sampler = GraphSampler::new(&inst.potential, &center, eta)?;
    let third = eta / T::lit(3.0);
    let m = inst.m();
    let drawn = sampling::par_indexed(count, seed, |i, rng| -> Result<Option<GusoscSample<T>>> {
        let wrap = |e: Error| Error::Sample { index: i, source: Box::new(e) };
        let (x, p, q, v) = if i == 0 {
            (r.x.clone(), r.p.clone(), r.q.clone(), r.v.clone())
        } else {
            let Some(s) = sampler.draw_until(rng, None, 50).map_err(wrap)? else { return Ok(None) };
            let q = &r.q + uniform_ball(rng, m, third);
            let v = inst.evaluate_base(&s.x, &s.p, &q).map_err(wrap)? + &s.v;
            if stacked_norm(&[&(&s.x - &r.x), &(&s.p - &r.p), &(&q - &r.q), &(&v - &r.v)]) > eta {
                return Ok(None);
            }
            (s.x, s.p, q, v)
        };
        let Some(worst) = sample_curvature(inst, &x, &p, &q, &v).map_err(wrap)? else { return Ok(None) };
        Ok(Some(GusoscSample { x, p, q, v, worst }))
    });
    let mut best: Option<GusoscSample<T>> = None;
    let mut samples = 0;
    for d in drawn {
        if let Some(s) = d? {
            samples += 1;
            if best.as_ref().map_or(true, |b| s.worst.min_curvature < b.worst.min_curvature) {
                best = Some(s);
            }
        }
    }
    let ell_best = best.as_ref().map_or(T::INF, |b| b.worst.min_curvature);
    let holds = ell_best > T::tol(GUSOSC_TOL);
    Ok(GusoscReport { holds, ell_best, samples, witness: if holds { None } else { best }, eta: eta.f64(), seed })
}

#[derive(Debug, Clone, Serialize)]
pub struct BorderedDeterminant<T: Real> {
    pub rows: Vec<usize>,
    #[serde(serialize_with = "report::real")]
    pub det: T,
    /// Hadamard bound used to scale the zero test
    #[serde(serialize_with = "report::real")]
    pub scale: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScocReport<T: Real> {
    #[serde(serialize_with = "report::vec")]
    pub lambda: DVector<T>,
    pub determinants: Vec<BorderedDeterminant<T>>,
    pub any_zero: bool,
}

/// `det [[∇ₓL(λ), ∇φ_Jᵀ], [−∇φ_J, 0]]` for each maximal independent `J ⊆ I₊(λ)`.
pub fn scoc_bordered_determinant<T: Real>(inst: &PvsInstance<T>, lambda: &DVector<T>) -> Result<ScocReport<T>> {
    let r = &inst.reference;
    let cs = constraints(&inst.potential)?;
    let act = active_set(&inst.potential, &r.x, &r.p)?;
    let strict = act.strict(lambda);
    let h = lagrangian_hessian(inst, lambda)?;
    let n = inst.n();
    let subsets: Vec<Vec<usize>> = if strict.is_empty() {
        vec![Vec::new()]
    } else {
        let all = grads(cs, &r.x, &strict);
        let rank = linalg::rank(&all, T::tol(1e-9));
        if rank == 0 {
            return Err(Error::Precondition("no independent subset of active gradients".into()));
        }
        combinatorics::subsets_of_size(strict.len(), rank)
            .into_iter()
            .map(|s| s.into_iter().map(|i| strict[i]).collect::<Vec<_>>())
            .filter(|s| linalg::rank(&grads(cs, &r.x, s), T::tol(1e-9)) == s.len())
            .collect()
    };
    let mut determinants = Vec::new();
    for rows in subsets {
        let aj = grads(cs, &r.x, &rows);
        let k = rows.len();
        let mut m = DMatrix::zeros(n + k, n + k);
        m.view_mut((0, 0), (n, n)).copy_from(&h);
        m.view_mut((0, n), (n, k)).copy_from(&aj.transpose());
        m.view_mut((n, 0), (k, n)).copy_from(&(-&aj));
        let scale = (0..n + k).map(|j| m.column(j).norm()).fold(T::one(), |a, c| a * c.max(T::one()));
        determinants.push(BorderedDeterminant { rows, det: m.determinant(), scale });
    }
    let any_zero = determinants.iter().any(|d| d.det.abs() <= T::tol(1e-9) * d.scale);
    Ok(ScocReport { lambda: lambda.clone(), determinants, any_zero })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    FullyStable,
    NotCertified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteVerdict {
    FullyStable,
    NotCertified,
    Inapplicable,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CertifyOptions {
    pub eta: f64,
    pub samples: usize,
    pub seed: u64,
    /// radius of the CRCQ neighbourhood
    pub crcq_delta: f64,
    pub crcq_samples: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { eta: prox::DEFAULT_ETA, samples: 500, seed: 42, crcq_delta: 1e-2, crcq_samples: 200 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport<T: Real> {
    pub verdict: Verdict,
    pub active: ActiveSet<T>,
    pub mfcq: MfcqReport<T>,
    pub licq: LicqReport,
    pub crcq: CrcqReport,
    pub multipliers: MultiplierPolytope<T>,
    pub gssosc: Option<GssoscReport<T>>,
    pub gusosc: Option<GusoscReport<T>>,
    pub scoc: Vec<ScocReport<T>>,
    pub scoc_det_zero: bool,
    /// MFCQ ∧ CRCQ ∧ GUSOSC
    pub gusosc_route: RouteVerdict,
    /// LICQ ∧ GSSOSC, applicable under LICQ
    pub gssosc_route: RouteVerdict,
    /// both routes applicable and different: a software error
    pub routes_disagree: bool,
    pub options: CertifyOptions,
}

/// All checks at the reference and the verdict `MFCQ ∧ CRCQ ∧ GUSOSC`.
pub fn certify_full_stability<T: Real>(inst: &PvsInstance<T>, opts: &CertifyOptions) -> Result<CertificateReport<T>> {
    let r = &inst.reference;
    let g = &inst.potential;
    let active = active_set(g, &r.x, &r.p)?;
    let mfcq = mfcq_check(g, &r.x, &r.p)?;
    let licq = licq_check(g, &r.x, &r.p)?;
    let crcq = crcq_check(g, &r.x, &r.p, T::lit(opts.crcq_delta), opts.crcq_samples, opts.seed)?;
    let multipliers = multipliers(inst, &r.x, &r.p, &r.q, &r.v)?;
    let gssosc = match gssosc_check(inst, opts.seed) {
        Ok(rep) => Some(rep),
        Err(Error::Precondition(_)) => None,
        Err(e) => return Err(e),
    };
    let gusosc = if mfcq.holds { Some(gusosc_check(inst, T::lit(opts.eta), opts.samples, opts.seed)?) } else { None };
    let mut scoc = Vec::new();
    for lam in &multipliers.vertices {
        match scoc_bordered_determinant(inst, lam) {
            Ok(rep) => scoc.push(rep),
            Err(Error::Precondition(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let scoc_det_zero = scoc.iter().any(|s| s.any_zero);
    let gus_ok = mfcq.holds && crcq.holds && gusosc.as_ref().is_some_and(|u| u.holds);
    let gusosc_route = if gus_ok { RouteVerdict::FullyStable } else { RouteVerdict::NotCertified };
    let gssosc_route = if !licq.holds {
        RouteVerdict::Inapplicable
    } else if gssosc.as_ref().is_some_and(|s| s.holds) {
        RouteVerdict::FullyStable
    } else {
        RouteVerdict::NotCertified
    };
    let routes_disagree = gssosc_route != RouteVerdict::Inapplicable && gssosc_route != gusosc_route;
    Ok(CertificateReport {
        verdict: if gus_ok { Verdict::FullyStable } else { Verdict::NotCertified },
        active,
        mfcq,
        licq,
        crcq,
        multipliers,
        gssosc,
        gusosc,
        scoc,
        scoc_det_zero,
        gusosc_route,
        gssosc_route,
        routes_disagree,
        options: *opts,
    })
}
