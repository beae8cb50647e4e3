//! Proximal mappings, sampling of `gph ∂ₓg`, and threshold-of-prox-regularity calculators.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{Potential, PotentialConstants, Provenance, PvsInstance};
use crate::pointbased::tau0_box;
use crate::polyhedra::ACTIVE_TOL;
use crate::qp;
use crate::sampling::{self, stacked_norm, uniform_ball};
use crate::scalar::Real;

/// Floor on `‖x₁ − x₂‖` for pairs entering the hypomonotonicity quotient.
pub const PAIR_FLOOR: f64 = 1e-6;
pub const DEFAULT_ETA: f64 = 1e-2;

#[derive(Debug, Clone)]
pub struct ProxQuery<T: Real> {
    pub lambda: T,
    pub v: DVector<T>,
    pub p: DVector<T>,
}

/// The localized solution `x` of `v ∈ x + λ∂ₓg(x, p)`.
///
/// `threshold` is the class's threshold `ℛ` when known; `λℛ < 1` is then enforced.
pub fn prox_map<T: Real>(g: &Potential<T>, q: &ProxQuery<T>, threshold: Option<T>) -> Result<DVector<T>> {
    let lambda = q.lambda;
    if !(lambda > T::zero()) || !lambda.is_finite_val() {
        return Err(Error::OutOfRange(format!("λ = {} must be positive", lambda.f64())));
    }
    if let Some(r) = threshold {
        if lambda * r >= T::one() {
            return Err(Error::OutOfRange(format!("λ = {} is not below 1/ℛ = {}", lambda.f64(), (T::one() / r).f64())));
        }
    }
    let n = q.v.len();
    match g.quadratic() {
        None => g.project(&q.v, &q.p),
        Some(w) => {
            // argmin ½‖x − v‖² + λ·½xᵀWx over C(p)
            let h = DMatrix::identity(n, n) + w * lambda;
            let (m, _) = linalg::min_eig(&h).expect("nonempty");
            if m <= T::tol(1e-12) {
                return Err(Error::Precondition(format!(
                    "I + λW is not positive definite (λ_min = {:.3e}); λ must stay below 1/ℛ",
                    m.f64()
                )));
            }
            let c = g
                .set_at(&q.p, n)?
                .ok_or_else(|| Error::Unsupported("quadratic part over a nonlinear set".into()))?;
            let sol = qp::solve(&h, &(-&q.v), &DMatrix::zeros(0, n), &DVector::zeros(0), c.g(), c.h())?;
            Ok(sol.x)
        }
    }
}

/// A point `(x, p, v)` of `gph ∂ₓg` with its membership residual.
#[derive(Debug, Clone, Serialize)]
pub struct SubgradientSample<T: Real> {
    #[serde(serialize_with = "crate::report::vec")]
    pub x: DVector<T>,
    #[serde(serialize_with = "crate::report::vec")]
    pub p: DVector<T>,
    #[serde(serialize_with = "crate::report::vec")]
    pub v: DVector<T>,
    #[serde(serialize_with = "crate::report::real")]
    pub residual: T,
}

impl<T: Real> SubgradientSample<T> {
    pub fn new(g: &Potential<T>, x: DVector<T>, p: DVector<T>, v: DVector<T>) -> Result<Self> {
        let residual = g.subgradient_residual(&x, &p, &v)?;
        Ok(SubgradientSample { x, p, v, residual })
    }
}

/// Generator of `gph ∂ₓg ∩ B_η(x̄, p̄, v̂)` from the face/normal parameterization:
/// a face through the reference multiplier support, a point on it, and a nonnegative
/// combination of its active gradients.
pub struct GraphSampler<'a, T: Real> {
    g: &'a Potential<T>,
    center: &'a SubgradientSample<T>,
    eta: T,
    active: Vec<usize>,
    mu_bar: DVector<T>,
    support: Vec<usize>,
}

impl<'a, T: Real> GraphSampler<'a, T> {
    pub fn new(g: &'a Potential<T>, center: &'a SubgradientSample<T>, eta: T) -> Result<Self> {
        if !(eta > T::zero()) {
            return Err(Error::OutOfRange("η must be positive".into()));
        }
        let res = g.subgradient_residual(&center.x, &center.p, &center.v)?;
        if res > T::tol(1e-9) {
            return Err(Error::OffGraph(format!("center residual {:.3e}", res.f64())));
        }
        let (active, grads) = g.active_gradients(&center.x, &center.p)?;
        let u = match g.quadratic() {
            Some(w) => &center.v - w * &center.x,
            None => center.v.clone(),
        };
        let mu_bar = if active.is_empty() { DVector::zeros(0) } else { linalg::nnls(&grads.transpose(), &u) };
        let support = (0..active.len()).filter(|&k| mu_bar[k] > T::tol(ACTIVE_TOL)).map(|k| active[k]).collect();
        Ok(GraphSampler { g, center, eta, active, mu_bar, support })
    }

    fn gradient_rows(&self, x: &DVector<T>, p: &DVector<T>, idx: &[usize]) -> Result<DMatrix<T>> {
        let n = x.len();
        match self.g.indicator() {
            Potential::SmoothIneq(cs) => Ok(linalg::rows(n, &idx.iter().map(|&i| cs[i].grad(x)).collect::<Vec<_>>())),
            ind => Ok(linalg::select_rows(ind.set_at(p, n)?.expect("polyhedral").g(), idx)),
        }
    }

    /// One attempt; `None` when the draw leaves the ball or the face is empty.
    pub fn draw(&self, rng: &mut impl Rng, p_fixed: Option<&DVector<T>>) -> Result<Option<SubgradientSample<T>>> {
        let c = self.center;
        let third = self.eta / T::lit(3.0);
        let p = match p_fixed {
            Some(p) => p.clone(),
            None => &c.p + uniform_ball(rng, c.p.len(), third),
        };
        let mut face = self.support.clone();
        for &i in &self.active {
            if !face.contains(&i) && rng.gen_bool(0.5) {
                face.push(i);
            }
        }
        face.sort_unstable();
        let y = &c.x + uniform_ball(rng, c.x.len(), third);
        let x = match self.g.project_face(&y, &p, &face) {
            Ok(x) => x,
            Err(Error::Infeasible) | Err(Error::IterationLimit(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let mut u = DVector::zeros(x.len());
        if !face.is_empty() {
            let gj = self.gradient_rows(&x, &p, &face)?;
            let scale = T::one().max(linalg::op_norm(&gj));
            let xi = uniform_ball(rng, face.len(), third) / scale;
            let mu = DVector::from_fn(face.len(), |k, _| {
                let base = self.active.iter().position(|&a| a == face[k]).map_or(T::zero(), |pos| self.mu_bar[pos]);
                (base + xi[k]).max(T::zero())
            });
            u = gj.transpose() * mu;
        }
        let v = match self.g.quadratic() {
            Some(w) => u + w * &x,
            None => u,
        };
        if stacked_norm(&[&(&x - &c.x), &(&p - &c.p), &(&v - &c.v)]) > self.eta {
            return Ok(None);
        }
        Ok(Some(SubgradientSample::new(self.g, x, p, v)?))
    }

    /// Up to `attempts` draws from `rng`; the first accepted sample.
    pub fn draw_until(&self, rng: &mut impl Rng, p_fixed: Option<&DVector<T>>, attempts: usize) -> Result<Option<SubgradientSample<T>>> {
        for _ in 0..attempts {
            if let Some(s) = self.draw(rng, p_fixed)? {
                return Ok(Some(s));
            }
        }
        Ok(None)
    }
}

const ATTEMPTS: usize = 50;

/// Samples of `gph ∂ₓg ∩ B_η(center)`; sample `i` uses stream `i` of `seed`.
pub fn sample_subdifferential_graph<T: Real>(
    g: &Potential<T>,
    center: &SubgradientSample<T>,
    eta: T,
    count: usize,
    seed: u64,
) -> Result<Vec<SubgradientSample<T>>> {
    let sampler = GraphSampler::new(g, center, eta)?;
    let drawn = sampling::par_indexed(count, seed, |_, rng| sampler.draw_until(rng, None, ATTEMPTS));
    let mut out = Vec::with_capacity(count);
    for d in drawn {
        if let Some(s) = d? {
            out.push(s);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMethod {
    HypomonotoneSampling,
    PointbasedCoderivative,
    ClosedForm,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdEstimate<T: Real> {
    #[serde(serialize_with = "crate::report::real")]
    pub r_est: T,
    pub method: ThresholdMethod,
    #[serde(serialize_with = "crate::report::real")]
    pub eta: T,
    pub samples: usize,
    pub pairs: usize,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "crate::report::opt_real")]
    pub tau0: Option<T>,
}

/// `ℛ_est = max(0, sup −⟨v₁ − v₂, x₁ − x₂⟩/‖x₁ − x₂‖²)` over sampled pairs with equal `p`.
///
/// Parametric potentials are sampled on 8 fixed parameter values; pairs never mix them.
pub fn threshold_estimate_hypomonotone<T: Real>(
    g: &Potential<T>,
    center: &SubgradientSample<T>,
    eta: T,
    count: usize,
    seed: u64,
) -> Result<ThresholdEstimate<T>> {
    let sampler = GraphSampler::new(g, center, eta)?;
    let groups: Vec<DVector<T>> = if g.depends_on_p() && !center.p.is_empty() {
        (0..8u64)
            .map(|k| {
                let mut rng = sampling::stream(seed ^ 0x7072_6f78, k);
                &center.p + uniform_ball(&mut rng, center.p.len(), eta / T::lit(3.0))
            })
            .collect()
    } else {
        vec![center.p.clone()]
    };
    let drawn = sampling::par_indexed(count, seed, |i, rng| sampler.draw_until(rng, Some(&groups[i % groups.len()]), ATTEMPTS));
    let mut samples: Vec<(usize, SubgradientSample<T>)> = Vec::new();
    for (i, d) in drawn.into_iter().enumerate() {
        if let Some(s) = d? {
            samples.push((i % groups.len(), s));
        }
    }
    if samples.len() < 2 {
        return Err(Error::Precondition(format!("{} usable samples, need at least 2", samples.len())));
    }
    let floor = T::lit(PAIR_FLOOR);
    let (sup, pairs) = (0..samples.len())
        .into_par_iter()
        .map(|i| {
            let (gi, ref si) = samples[i];
            let mut best = -T::INF;
            let mut used = 0usize;
            for (gj, sj) in &samples[i + 1..] {
                if *gj != gi {
                    continue;
                }
                let dx = &si.x - &sj.x;
                let nx = dx.norm_squared();
                if nx < floor * floor {
                    continue;
                }
                used += 1;
                let q = -(&si.v - &sj.v).dot(&dx) / nx;
                best = best.max(q);
            }
            (best, used)
        })
        .reduce(|| (-T::INF, 0), |a, b| (a.0.max(b.0), a.1 + b.1));
    Ok(ThresholdEstimate {
        r_est: sup.max(T::zero()),
        method: ThresholdMethod::HypomonotoneSampling,
        eta,
        samples: samples.len(),
        pairs,
        tau0: None,
    })
}

/// `ℛ = max(0, −τ₀)` with `τ₀` computed exactly from the coderivative of `N_box`.
pub fn threshold_pointbased_box<T: Real>(g: &Potential<T>, x: &DVector<T>, vhat: &DVector<T>) -> Result<ThresholdEstimate<T>> {
    if g.as_box().is_none() {
        return Err(Error::Unsupported(format!("{} has no box inner set; use the sampling estimator", g.kind())));
    }
    if g.depends_on_p() {
        return Err(Error::Unsupported("parametric box; use the sampling estimator".into()));
    }
    let t = tau0_box(g, &DVector::zeros(0), x, vhat)?;
    Ok(ThresholdEstimate {
        r_est: (-t.value).max(T::zero()),
        method: ThresholdMethod::PointbasedCoderivative,
        eta: T::zero(),
        samples: 0,
        pairs: 0,
        tau0: Some(t.value),
    })
}

/// Options for the sampled threshold used when no closed form is available.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdOptions {
    pub eta: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions { eta: DEFAULT_ETA, samples: 2000, seed: 42 }
    }
}

pub fn reference_sample<T: Real>(inst: &PvsInstance<T>) -> Result<SubgradientSample<T>> {
    let r = &inst.reference;
    SubgradientSample::new(&inst.potential, r.x.clone(), r.p.clone(), inst.v_hat())
}

/// `ℛ` at the reference when the class gives it exactly.
pub fn closed_form_threshold<T: Real>(inst: &PvsInstance<T>) -> Result<Option<ThresholdEstimate<T>>> {
    let g = &inst.potential;
    let closed = |r: T| ThresholdEstimate { r_est: r, method: ThresholdMethod::ClosedForm, eta: T::zero(), samples: 0, pairs: 0, tau0: None };
    if g.is_indicator() && g.is_convex() {
        return Ok(Some(closed(T::zero())));
    }
    let Some(w) = g.quadratic() else { return Ok(None) };
    let r = &inst.reference;
    if g.as_box().is_some() && !g.depends_on_p() {
        return Ok(Some(threshold_pointbased_box(g, &r.x, &inst.v_hat())?));
    }
    // interior reference of a convex set: the quadratic alone decides
    if g.indicator().is_convex() {
        let (act, _) = g.active_gradients(&r.x, &r.p)?;
        if act.is_empty() {
            let (m, _) = linalg::min_eig(w).expect("nonempty");
            return Ok(Some(closed((-m).max(T::zero()))));
        }
    }
    Ok(None)
}

/// Prox-parameter `r` and threshold `ℛ` for an instance.
///
/// `r` comes from the instance config when present; otherwise `ℛ + 0.01·max(1, σ − ℛ)` for a
/// closed-form `ℛ` and `max(1.1·ℛ_est, ℛ_est + 1e-6)` for a sampled one.
pub fn potential_constants<T: Real>(inst: &PvsInstance<T>, opts: &ThresholdOptions) -> Result<(PotentialConstants<T>, ThresholdEstimate<T>)> {
    let est = match closed_form_threshold(inst)? {
        Some(e) => e,
        None => {
            let eta = T::lit(inst.config.eta.unwrap_or(opts.eta));
            threshold_estimate_hypomonotone(&inst.potential, &reference_sample(inst)?, eta, opts.samples, opts.seed)?
        }
    };
    let provenance = if est.method == ThresholdMethod::HypomonotoneSampling { Provenance::Estimated } else { Provenance::ClosedForm };
    let rr = est.r_est;
    if !rr.is_finite_val() {
        return Err(Error::Precondition("the potential is not prox-regular at the reference".into()));
    }
    let r = match inst.config.r {
        Some(r) => T::lit(r),
        None => match provenance {
            Provenance::ClosedForm => {
                let sigma = inst.strong_monotonicity_modulus();
                rr + T::lit(0.01) * T::one().max(sigma - rr)
            }
            Provenance::Estimated => (rr * T::lit(1.1)).max(rr + T::lit(1e-6)),
        },
    };
    Ok((PotentialConstants::new(r, rr, provenance)?, est))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BoxSet;
    use approx::assert_relative_eq;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    fn concave_orthant(n: usize, r: f64) -> Potential<f64> {
        let inner = Potential::IndicatorBox(BoxSet::fixed(DVector::zeros(n), DVector::from_element(n, f64::INFINITY)));
        Potential::QuadraticPlusIndicator { w: -DMatrix::identity(n, n) * r, inner: Box::new(inner) }
    }

    #[test]
    fn prox_examples() {
        let g = concave_orthant(1, 1.0);
        let q = |v: f64| ProxQuery { lambda: 0.5, v: DVector::from_element(1, v), p: v_empty() };
        assert_relative_eq!(prox_map(&g, &q(1.0), Some(1.0)).unwrap()[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(prox_map(&g, &q(-1.0), Some(1.0)).unwrap()[0], 0.0, epsilon = 1e-12);
        let bad = ProxQuery { lambda: 1.5, v: v(&[1.0]), p: v_empty() };
        assert!(matches!(prox_map(&g, &bad, None), Err(Error::Precondition(_))));
        assert!(matches!(prox_map(&g, &bad, Some(1.0)), Err(Error::OutOfRange(_))));
    }

    fn v_empty() -> DVector<f64> {
        DVector::zeros(0)
    }

    #[test]
    fn orthant_graph_samples_are_complementary() {
        let g = Potential::IndicatorBox(BoxSet::fixed(v(&[0.0, 0.0]), v(&[f64::INFINITY, f64::INFINITY])));
        let c = SubgradientSample::new(&g, v(&[0.0, 0.0]), v_empty(), v(&[0.0, 0.0])).unwrap();
        let s = sample_subdifferential_graph(&g, &c, 0.1, 200, 7).unwrap();
        assert!(s.len() > 150);
        for p in &s {
            for i in 0..2 {
                assert!(p.x[i] >= -1e-12 && p.v[i] <= 1e-12 && (p.x[i] * p.v[i]).abs() <= 1e-12);
            }
            assert!(p.residual <= 1e-9);
        }
        assert!(sample_subdifferential_graph(&g, &c, 0.1, 0, 7).unwrap().is_empty());
    }

    #[test]
    fn thresholds_of_concave_orthant() {
        let g = concave_orthant(2, 1.0);
        let c = SubgradientSample::new(&g, v(&[0.0, 0.0]), v_empty(), v(&[0.0, 0.0])).unwrap();
        let e = threshold_estimate_hypomonotone(&g, &c, 1e-2, 500, 42).unwrap();
        assert!((e.r_est - 1.0).abs() <= 0.05, "{}", e.r_est);
        let t = threshold_pointbased_box(&g, &v(&[0.0, 0.0]), &v(&[0.0, 0.0])).unwrap();
        assert_relative_eq!(t.r_est, 1.0, epsilon = 1e-12);
        let g2 = concave_orthant(2, 2.0);
        let e2 = threshold_estimate_hypomonotone(&g2, &c, 1e-2, 500, 42).unwrap();
        assert!((e2.r_est - 2.0).abs() <= 0.1);
    }

    #[test]
    fn convex_indicator_has_zero_threshold() {
        let g = Potential::IndicatorBox(BoxSet::fixed(v(&[0.0, 0.0]), v(&[1.0, 1.0])));
        let c = SubgradientSample::new(&g, v(&[0.0, 0.5]), v_empty(), v(&[-0.5, 0.0])).unwrap();
        let e = threshold_estimate_hypomonotone(&g, &c, 1e-2, 300, 1).unwrap();
        assert!(e.r_est <= 1e-9);
    }
}
