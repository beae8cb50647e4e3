//! Sampled verification of the full-stability inequalities and of the prox estimates,
//! side by side with the closed-form moduli.

use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use crate::avi::{SolutionSet, Window};
use crate::error::{Error, Result};
use crate::model::{Potential, PvsInstance};
use crate::pointbased::oracle::UnionSet;
use crate::polyhedra::{hausdorff_local, HausdorffMode, LocalHausdorff};
use crate::prox::{self, GraphSampler, ProxQuery, SubgradientSample, ThresholdOptions};
use crate::report;
use crate::sampling::{self, uniform_ball};
use crate::scalar::Real;
use crate::solver::{self, SolverConfig, SolverOverrides};

pub const DEFAULT_SAMPLES: usize = 1000;
/// Tolerance of the canonical-perturbation inequality `‖Δv − 2κΔx‖ ≤ ‖Δv‖`.
pub const CANONICAL_TOL: f64 = 1e-7;
/// Tolerance of the equivalent form `⟨Δv, Δx⟩ ≥ κ‖Δx‖²`.
pub const MONOTONE_TOL: f64 = 1e-8;
/// Contraction factors above this use face enumeration when it applies.
pub const SLOW_CONTRACTION: f64 = 0.995;
/// Default localization radius `δ` for solution windows.
pub const DEFAULT_DELTA: f64 = 0.1;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SampleConfig {
    pub eta: f64,
    pub count: usize,
    pub seed: u64,
    /// radius of the solution window `B_δ(x̄)` on the enumeration route
    pub delta: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { eta: prox::DEFAULT_ETA, count: DEFAULT_SAMPLES, seed: 42, delta: DEFAULT_DELTA }
    }
}

impl SampleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || self.count < 2 || !(self.delta > 0.0) {
            return Err(Error::OutOfRange(format!("sample config needs η > 0, δ > 0, count ≥ 2 (got {self:?})")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModuliInputs<T: Real> {
    #[serde(serialize_with = "report::real")]
    pub sigma: T,
    #[serde(serialize_with = "report::real")]
    pub lipschitz: T,
    #[serde(serialize_with = "report::real")]
    pub r: T,
    #[serde(serialize_with = "report::real")]
    pub lambda: T,
    #[serde(serialize_with = "report::real")]
    pub rho: T,
    #[serde(serialize_with = "report::real")]
    pub eta: T,
    /// modulus `ℓ` of the prox in `p`
    #[serde(serialize_with = "report::real")]
    pub prox_p_modulus: T,
}

/// `γ₁, γ₂`; `None` when the leading factor's denominator is not positive.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Gamma<T: Real> {
    #[serde(serialize_with = "report::opt_real")]
    pub gamma1: Option<T>,
    #[serde(serialize_with = "report::opt_real")]
    pub gamma2: Option<T>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoreticalModuli<T: Real> {
    pub inputs: ModuliInputs<T>,
    #[serde(serialize_with = "report::real")]
    pub kappa0: T,
    #[serde(serialize_with = "report::real")]
    pub kappa: T,
    #[serde(serialize_with = "report::real")]
    pub alpha: T,
    pub alpha_clamped: bool,
    #[serde(serialize_with = "report::real")]
    pub ell1: T,
    #[serde(serialize_with = "report::real")]
    pub ell2: T,
    /// Hölder `γ`'s with the radicand `1 + λ²L² − 2λκ`
    pub holder_kappa: Gamma<T>,
    /// Hölder `γ`'s with the radicand `1 + λ²L² − 2λσ`
    pub holder_sigma: Gamma<T>,
    pub lipschitz_kappa: Gamma<T>,
    pub lipschitz_sigma: Gamma<T>,
}

fn gammas<T: Real>(i: &ModuliInputs<T>, s: T, holder: bool) -> Gamma<T> {
    let (l, lip, r) = (i.lambda, i.lipschitz, i.r);
    let den = T::one() - r * l;
    let rad = (T::one() + l * l * lip * lip - T::lit(2.0) * l * s).max(T::zero());
    let lead = T::one() - rad.sqrt() / den;
    if !(lead > T::zero()) {
        return Gamma { gamma1: None, gamma2: None };
    }
    let root = if holder { (T::lit(2.0) * i.eta).sqrt() } else { T::one() };
    Gamma {
        gamma1: Some((l * lip * root / den + i.prox_p_modulus) / lead),
        gamma2: Some(l * lip / den / lead),
    }
}

/// `κ₀ = 1 − λr`, `κ = σ − r`, `α`, `ℓ₁ = 3 + √(9 + 4κ₀)`, `ℓ₂ = 2√(2(2ρ + λ)κ₀)` and the `γ` table.
pub fn theoretical_moduli<T: Real>(inputs: ModuliInputs<T>) -> Result<TheoreticalModuli<T>> {
    let ModuliInputs { sigma, lipschitz, r, lambda, rho, .. } = inputs;
    if !(sigma > r) {
        return Err(Error::Precondition(format!("σ = {} ≤ r = {}", sigma.f64(), r.f64())));
    }
    let f = solver::contraction_factor(lambda, sigma, lipschitz, r)?;
    if !(f.alpha < T::one()) {
        return Err(Error::Precondition(format!("α = {} ≥ 1: no contraction", f.alpha.f64())));
    }
    let kappa0 = T::one() - lambda * r;
    let four = T::lit(4.0);
    Ok(TheoreticalModuli {
        inputs,
        kappa0,
        kappa: sigma - r,
        alpha: f.alpha,
        alpha_clamped: f.clamped,
        ell1: T::lit(3.0) + (T::lit(9.0) + four * kappa0).sqrt(),
        ell2: T::lit(2.0) * (T::lit(2.0) * (T::lit(2.0) * rho + lambda) * kappa0).sqrt(),
        holder_kappa: gammas(&inputs, sigma - r, true),
        holder_sigma: gammas(&inputs, sigma, true),
        lipschitz_kappa: gammas(&inputs, sigma - r, false),
        lipschitz_sigma: gammas(&inputs, sigma, false),
    })
}

/// How solutions of perturbed systems are computed.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Route<T: Real> {
    /// contraction iteration, `σ > r`
    Contraction { config: SolverConfig<T> },
    /// face enumeration inside `B_δ(x̄)` for polyhedral indicator potentials
    Enumeration {
        #[serde(serialize_with = "report::real")]
        delta: T,
    },
}

/// `Some(x)` for the unique localized solution, `None` when it is not single-valued (or empty).
pub fn solve_localized<T: Real>(inst: &PvsInstance<T>, route: &Route<T>, v: &DVector<T>, p: &DVector<T>, q: &DVector<T>) -> Result<Option<DVector<T>>> {
    match route {
        Route::Contraction { config } => solver::solve(inst, v, p, q, config).map(|s| Some(s.x)),
        Route::Enumeration { delta } => {
            let win = Window { center: inst.reference.x.clone(), radius: *delta };
            let s = solver::solvability(inst, v, p, q, Some(&win))?;
            Ok(match s.status {
                SolutionSet::Unique => Some(s.solutions.solutions[0].x.clone()),
                _ => None,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exponent {
    Lipschitz,
    Holder,
}

#[derive(Debug, Clone, Serialize)]
pub struct CanonicalCheck<T: Real> {
    pub pairs: usize,
    /// `max (‖Δv − 2κΔx‖ − ‖Δv‖)` over pairs with equal `(p, q)`
    #[serde(serialize_with = "report::real")]
    pub max_excess: T,
    /// `min (⟨Δv, Δx⟩ − κ‖Δx‖²)`
    #[serde(serialize_with = "report::real")]
    pub min_monotone_gap: T,
    pub norm_form_holds: bool,
    pub inner_form_holds: bool,
    pub forms_agree: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModuliReport<T: Real> {
    pub exponent: Exponent,
    pub route: Route<T>,
    #[serde(serialize_with = "report::real")]
    pub kappa: T,
    /// `sigma_minus_r` or `measured` (enumeration route)
    pub kappa_source: &'static str,
    pub theory: Option<TheoreticalModuli<T>>,
    /// least `ℓ` over all sampled pairs
    #[serde(serialize_with = "report::real")]
    pub ell_est: T,
    /// least `ℓ` over pairs that differ in `p` only
    #[serde(serialize_with = "report::real")]
    pub ell_p: T,
    /// least `ℓ` over pairs that differ in `q` only
    #[serde(serialize_with = "report::real")]
    pub ell_q: T,
    /// `max (‖Δv − 2κΔx‖ − ‖Δv‖ − 2κγ₁d₁^e − 2κγ₂d₂)` with the `σ`-radicand `γ`'s; `null` without theory
    #[serde(serialize_with = "report::opt_real")]
    pub worst_theory_margin: Option<T>,
    pub canonical: CanonicalCheck<T>,
    /// `‖Δx‖ ≤ (‖Δv‖ + ℓ(d₁^e + d₂))/κ` on every pair
    pub consequence_holds: bool,
    pub single_valued: bool,
    pub pass: bool,
    pub samples: usize,
    pub seed: u64,
    pub eta: f64,
}

/// `(Δv, Δx, d₁^e, d₂)` for one comparison.
type Cmp<T> = (DVector<T>, DVector<T>, T, T);

struct PairData<T: Real> {
    full: Cmp<T>,
    p_only: Cmp<T>,
    q_only: Cmp<T>,
    canonical: Cmp<T>,
}

/// One sampled perturbation `(v, p, q)` in the stacked ball `B_η` of the reference.
fn draw_point<T: Real>(inst: &PvsInstance<T>, rng: &mut impl Rng, eta: T) -> (DVector<T>, DVector<T>, DVector<T>) {
    let (n, l, m) = (inst.n(), inst.l(), inst.m());
    let z = uniform_ball(rng, n + l + m, eta);
    let r = &inst.reference;
    (&r.v + z.rows(0, n), &r.p + z.rows(n, l), &r.q + z.rows(n + l, m))
}

/// Solution route for an instance: contraction when `σ > r`, otherwise face enumeration for
/// polyhedral indicator potentials.
///
/// A contraction slower than [`SLOW_CONTRACTION`] also falls back to enumeration when it applies.
pub fn route_for<T: Real>(inst: &PvsInstance<T>, ov: &SolverOverrides, topts: &ThresholdOptions, delta: T) -> Result<(Route<T>, Option<Error>)> {
    let polyhedral_indicator = || -> Result<bool> {
        Ok(inst.potential.is_indicator() && inst.potential.is_convex() && inst.set_at(&inst.reference.p)?.is_some())
    };
    match solver::setup(inst, ov, topts) {
        Ok(s) if s.factor.alpha > T::lit(SLOW_CONTRACTION) && polyhedral_indicator()? => Ok((
            Route::Enumeration { delta },
            Some(Error::Precondition(format!("α = {} too close to 1 for iteration", s.factor.alpha.f64()))),
        )),
        Ok(s) => Ok((Route::Contraction { config: s.config }, None)),
        Err(Error::Precondition(msg)) => {
            if polyhedral_indicator()? {
                Ok((Route::Enumeration { delta }, Some(Error::Precondition(msg))))
            } else {
                Err(Error::Precondition(msg))
            }
        }
        Err(e) => Err(e),
    }
}

fn moduli_inputs<T: Real>(inst: &PvsInstance<T>, config: &SolverConfig<T>, eta: T, prox_p_modulus: T) -> ModuliInputs<T> {
    ModuliInputs {
        sigma: config.sigma,
        lipschitz: config.lipschitz,
        r: config.r,
        lambda: config.lambda,
        rho: inst.config.rho.map_or(eta, T::lit),
        eta,
        prox_p_modulus,
    }
}

/// `ℓ` in `‖π_λ(y, p₁) − π_λ(y, p₂)‖ ≤ ℓ d(p₁, p₂)^e`, from the instance config or sampled.
pub fn prox_parameter_modulus<T: Real>(inst: &PvsInstance<T>, config: &SolverConfig<T>, exponent: Exponent, cfg: &SampleConfig) -> Result<T> {
    if let Some(m) = inst.config.prox_p_modulus {
        return Ok(T::lit(m));
    }
    if !inst.potential.depends_on_p() || inst.l() == 0 {
        return Ok(T::zero());
    }
    let eta = T::lit(cfg.eta);
    let r = &inst.reference;
    let y0 = &r.x + inst.v_hat() * config.lambda;
    let count = cfg.count.min(200);
    let vals = sampling::par_indexed(count, cfg.seed ^ 0x7072_6d6f, |_, rng| -> Result<T> {
        let y = &y0 + uniform_ball(rng, inst.n(), eta);
        let p1 = &r.p + uniform_ball(rng, inst.l(), eta);
        let p2 = &r.p + uniform_ball(rng, inst.l(), eta);
        let d = (&p1 - &p2).norm();
        if d <= T::tol(1e-12) {
            return Ok(T::zero());
        }
        let x1 = prox::prox_map(&inst.potential, &ProxQuery { lambda: config.lambda, v: y.clone(), p: p1 }, config.threshold)?;
        let x2 = prox::prox_map(&inst.potential, &ProxQuery { lambda: config.lambda, v: y, p: p2 }, config.threshold)?;
        let den = match exponent {
            Exponent::Lipschitz => d,
            Exponent::Holder => d.sqrt(),
        };
        Ok((x1 - x2).norm() / den)
    });
    let mut best = T::zero();
    for v in vals {
        best = best.max(v?);
    }
    Ok(best)
}

/// Shared sampler for the Lipschitz and Hölder verifiers.
fn verify_full_stability<T: Real>(
    inst: &PvsInstance<T>,
    cfg: &SampleConfig,
    ov: &SolverOverrides,
    topts: &ThresholdOptions,
    exponent: Exponent,
) -> Result<ModuliReport<T>> {
    cfg.validate()?;
    let eta = T::lit(cfg.eta);
    let (route, _) = route_for(inst, ov, topts, T::lit(cfg.delta))?;
    let theory = match &route {
        Route::Contraction { config } => {
            let ell = prox_parameter_modulus(inst, config, exponent, cfg)?;
            Some(theoretical_moduli(moduli_inputs(inst, config, eta, ell))?)
        }
        Route::Enumeration { .. } => None,
    };
    let pw = |d1: T| match exponent {
        Exponent::Lipschitz => d1,
        Exponent::Holder => d1.sqrt(),
    };
    let raw = sampling::par_indexed(cfg.count, cfg.seed, |i, rng| -> Result<Option<PairData<T>>> {
        let (v1, p1, q1) = draw_point(inst, rng, eta);
        let (v2, p2, q2) = draw_point(inst, rng, eta);
        let wrap = |e: Error| Error::Sample { index: i, source: Box::new(e) };
        let solve = |v: &DVector<T>, p: &DVector<T>, q: &DVector<T>| solve_localized(inst, &route, v, p, q).map_err(wrap);
        let Some(x1) = solve(&v1, &p1, &q1)? else { return Ok(None) };
        let others = [solve(&v2, &p2, &q2)?, solve(&v2, &p2, &q1)?, solve(&v2, &p1, &q2)?, solve(&v2, &p1, &q1)?];
        let [Some(x2), Some(xp), Some(xq), Some(xc)] = others else { return Ok(None) };
        let dv = &v1 - &v2;
        let cmp = |x: &DVector<T>, pa: &DVector<T>, qa: &DVector<T>| (dv.clone(), &x1 - x, pw((&p1 - pa).norm()), (&q1 - qa).norm());
        Ok(Some(PairData {
            full: cmp(&x2, &p2, &q2),
            p_only: cmp(&xp, &p2, &q1),
            q_only: cmp(&xq, &p1, &q2),
            canonical: cmp(&xc, &p1, &q1),
        }))
    });
    let mut pairs = Vec::with_capacity(raw.len());
    for r in raw {
        pairs.push(r?);
    }
    let single_valued = pairs.iter().all(Option::is_some);
    let pairs: Vec<PairData<T>> = pairs.into_iter().flatten().collect();
    let (kappa, kappa_source) = match &theory {
        Some(t) => (t.kappa, "sigma_minus_r"),
        None => (measured_kappa(&pairs), "measured"),
    };
    let excess = |c: &Cmp<T>| (&c.0 - &c.1 * (T::lit(2.0) * kappa)).norm() - c.0.norm();
    let least = |sel: &dyn Fn(&PairData<T>) -> &Cmp<T>| {
        pairs.iter().map(|d| {
            let c = sel(d);
            let e = excess(c);
            if e <= T::tol(CANONICAL_TOL) {
                T::zero()
            } else if c.2 + c.3 > T::zero() {
                e / (c.2 + c.3)
            } else {
                T::INF
            }
        })
        .fold(T::zero(), |a, b| a.max(b))
    };
    let ell_est = least(&|d| &d.full).max(least(&|d| &d.p_only)).max(least(&|d| &d.q_only));
    let ell_p = least(&|d| &d.p_only);
    let ell_q = least(&|d| &d.q_only);
    let canonical = canonical_check(&pairs, kappa);
    let consequence_holds = kappa > T::zero()
        && pairs.iter().all(|d| {
            [&d.full, &d.p_only, &d.q_only, &d.canonical]
                .iter()
                .all(|c| c.1.norm() <= (c.0.norm() + ell_est * (c.2 + c.3)) / kappa + T::tol(1e-9))
        });
    let worst_theory_margin = theory.as_ref().and_then(|t| {
        let g = match exponent {
            Exponent::Lipschitz => t.lipschitz_sigma,
            Exponent::Holder => t.holder_sigma,
        };
        let (g1, g2) = (g.gamma1?, g.gamma2?);
        let two_k = T::lit(2.0) * kappa;
        Some(
            pairs
                .iter()
                .flat_map(|d| [&d.full, &d.p_only, &d.q_only, &d.canonical])
                .map(|c| excess(c) - two_k * (g1 * c.2 + g2 * c.3))
                .fold(-T::INF, |a, b| a.max(b)),
        )
    });
    let pass = single_valued && kappa > T::zero() && ell_est.is_finite_val() && canonical.norm_form_holds && canonical.inner_form_holds;
    Ok(ModuliReport {
        exponent,
        route,
        kappa,
        kappa_source,
        theory,
        ell_est,
        ell_p,
        ell_q,
        worst_theory_margin,
        canonical,
        consequence_holds,
        single_valued,
        pass,
        samples: pairs.len(),
        seed: cfg.seed,
        eta: cfg.eta,
    })
}

/// `min ⟨Δv, Δx⟩/‖Δx‖²` over canonical pairs; `1` when every canonical `Δx` vanishes.
fn measured_kappa<T: Real>(pairs: &[PairData<T>]) -> T {
    let floor = T::tol(1e-9);
    let k = pairs
        .iter()
        .map(|d| &d.canonical)
        .filter(|c| c.1.norm() > floor)
        .map(|c| c.0.dot(&c.1) / c.1.norm_squared())
        .fold(T::INF, |a, b| a.min(b));
    if k.is_finite_val() {
        k
    } else {
        T::one()
    }
}

fn canonical_check<T: Real>(pairs: &[PairData<T>], kappa: T) -> CanonicalCheck<T> {
    let two_k = T::lit(2.0) * kappa;
    let mut max_excess = -T::INF;
    let mut min_gap = T::INF;
    for d in pairs {
        let (dv, dx) = (&d.canonical.0, &d.canonical.1);
        max_excess = max_excess.max((dv - dx * two_k).norm() - dv.norm());
        min_gap = min_gap.min(dv.dot(dx) - kappa * dx.norm_squared());
    }
    let norm_form_holds = max_excess <= T::tol(CANONICAL_TOL);
    let inner_form_holds = min_gap >= -T::tol(MONOTONE_TOL);
    CanonicalCheck {
        pairs: pairs.len(),
        max_excess,
        min_monotone_gap: min_gap,
        norm_form_holds,
        inner_form_holds,
        forms_agree: norm_form_holds == inner_form_holds,
    }
}

/// Least `ℓ` with `‖(v₁ − v₂) − 2κ(x₁ − x₂)‖ ≤ ‖v₁ − v₂‖ + ℓ(d₁ + d₂)` over sampled pairs.
pub fn verify_lipschitz_full_stability<T: Real>(inst: &PvsInstance<T>, cfg: &SampleConfig, ov: &SolverOverrides, topts: &ThresholdOptions) -> Result<ModuliReport<T>> {
    verify_full_stability(inst, cfg, ov, topts, Exponent::Lipschitz)
}

/// As [`verify_lipschitz_full_stability`] with `d₁^½` in place of `d₁`.
pub fn verify_holder_full_stability<T: Real>(inst: &PvsInstance<T>, cfg: &SampleConfig, ov: &SolverOverrides, topts: &ThresholdOptions) -> Result<ModuliReport<T>> {
    verify_full_stability(inst, cfg, ov, topts, Exponent::Holder)
}

#[derive(Debug, Clone, Serialize)]
pub struct HausdorffSample<T: Real> {
    #[serde(serialize_with = "report::vec")]
    pub v: DVector<T>,
    #[serde(serialize_with = "report::vec")]
    pub p1: DVector<T>,
    #[serde(serialize_with = "report::vec")]
    pub p2: DVector<T>,
    /// `‖π(v, p₁) − π(v, p₂)‖`
    #[serde(serialize_with = "report::real")]
    pub lhs: T,
    pub theta: LocalHausdorff<T>,
    /// `(ℓ₁θ + ℓ₂√θ)/(2(1 − λr))` at `θ + resolution`
    #[serde(serialize_with = "report::real")]
    pub bound: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProxHausdorffReport<T: Real> {
    #[serde(serialize_with = "report::real")]
    pub lambda: T,
    #[serde(serialize_with = "report::real")]
    pub r: T,
    #[serde(serialize_with = "report::real")]
    pub kappa0: T,
    #[serde(serialize_with = "report::real")]
    pub rho: T,
    #[serde(serialize_with = "report::real")]
    pub ell1: T,
    #[serde(serialize_with = "report::real")]
    pub ell2: T,
    pub samples: usize,
    /// samples whose projections left `U = B_ρ(x̄)`
    pub skipped: usize,
    pub violations: usize,
    /// `max lhs/bound` over samples with a positive bound
    #[serde(serialize_with = "report::real")]
    pub max_ratio: T,
    pub worst: Option<HausdorffSample<T>>,
    pub pass: bool,
    pub seed: u64,
    pub eta: f64,
}

/// `ℓ₁ = 3 + √(9 + 4κ₀)`, `ℓ₂ = 2√(2(2ρ + λ)κ₀)`.
pub fn ell_constants<T: Real>(kappa0: T, rho: T, lambda: T) -> (T, T) {
    let two = T::lit(2.0);
    (T::lit(3.0) + (T::lit(9.0) + T::lit(4.0) * kappa0).sqrt(), two * (two * (two * rho + lambda) * kappa0).sqrt())
}

/// `‖π(v, p₁) − π(v, p₂)‖ ≤ (ℓ₁θ + ℓ₂√θ)/(2(1 − λr))` with `θ` the local Hausdorff distance of
/// `C(p₁)` and `C(p₂)` on `U = B_ρ(x̄)`.
pub fn verify_prox_hausdorff_estimate<T: Real>(inst: &PvsInstance<T>, cfg: &SampleConfig, ov: &SolverOverrides, topts: &ThresholdOptions) -> Result<ProxHausdorffReport<T>> {
    cfg.validate()?;
    let g = &inst.potential;
    if !g.is_indicator() {
        return Err(Error::Unsupported("the projection estimate needs an indicator potential".into()));
    }
    if inst.set_at(&inst.reference.p)?.is_none() {
        return Err(Error::Unsupported("the projection estimate needs polyhedral sets".into()));
    }
    let eta = T::lit(cfg.eta);
    let rg = solver::regime(inst, ov, topts)?;
    let r = rg.constants.r;
    let lambda = match ov.lambda.or(inst.config.lambda) {
        Some(l) => T::lit(l),
        None => T::one().min(T::lit(0.9) / r),
    };
    if !(lambda * r < T::one()) {
        return Err(Error::OutOfRange(format!("λr = {} ≥ 1", (lambda * r).f64())));
    }
    let kappa0 = T::one() - lambda * r;
    let rho = inst.config.rho.map_or(eta * T::lit(3.0), T::lit);
    let (ell1, ell2) = ell_constants(kappa0, rho, lambda);
    let rf = &inst.reference;
    let y0 = &rf.x + inst.v_hat() * lambda;
    let raw = sampling::par_indexed(cfg.count, cfg.seed, |i, rng| -> Result<Option<HausdorffSample<T>>> {
        let wrap = |e: Error| Error::Sample { index: i, source: Box::new(e) };
        let v = &y0 + uniform_ball(rng, inst.n(), eta);
        let p1 = &rf.p + uniform_ball(rng, inst.l(), eta);
        let p2 = &rf.p + uniform_ball(rng, inst.l(), eta);
        let c1 = inst.set_at(&p1).map_err(wrap)?.expect("polyhedral");
        let c2 = inst.set_at(&p2).map_err(wrap)?.expect("polyhedral");
        let x1 = c1.project(&v).map_err(wrap)?;
        let x2 = c2.project(&v).map_err(wrap)?;
        if (&x1 - &rf.x).norm() > rho || (&x2 - &rf.x).norm() > rho {
            return Ok(None);
        }
        let theta = hausdorff_local(&c1, &c2, &rf.x, rho, HausdorffMode::Intersected).map_err(wrap)?;
        let th = theta.theta + theta.resolution;
        let bound = (ell1 * th + ell2 * th.sqrt()) / (T::lit(2.0) * kappa0);
        Ok(Some(HausdorffSample { v, p1, p2, lhs: (x1 - x2).norm(), theta, bound }))
    });
    let mut kept = Vec::new();
    let mut skipped = 0;
    for s in raw {
        match s? {
            Some(s) => kept.push(s),
            None => skipped += 1,
        }
    }
    let slack = T::tol(1e-12);
    let violations = kept.iter().filter(|s| s.lhs > s.bound + slack).count();
    let mut max_ratio = T::zero();
    let mut worst = None;
    for s in &kept {
        let ratio = if s.bound > T::zero() {
            s.lhs / s.bound
        } else if s.lhs > slack {
            T::INF
        } else {
            T::zero()
        };
        if ratio > max_ratio || worst.is_none() {
            max_ratio = max_ratio.max(ratio);
            worst = Some(s.clone());
        }
    }
    Ok(ProxHausdorffReport {
        lambda,
        r,
        kappa0,
        rho,
        ell1,
        ell2,
        samples: kept.len(),
        skipped,
        violations,
        max_ratio,
        worst,
        pass: violations == 0 && !kept.is_empty(),
        seed: cfg.seed,
        eta: cfg.eta,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct UsogcWitness<T: Real> {
    #[serde(serialize_with = "report::vec")]
    pub x: DVector<T>,
    #[serde(serialize_with = "report::vec")]
    pub u: DVector<T>,
    #[serde(serialize_with = "report::vec")]
    pub p: DVector<T>,
    #[serde(serialize_with = "report::vec")]
    pub v: DVector<T>,
    /// `h(x, p) − h(u, p) − ⟨v, x − u⟩ − ℓ/2‖x − u‖²`
    #[serde(serialize_with = "report::real")]
    pub gap: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct UsogcReport<T: Real> {
    #[serde(serialize_with = "report::real")]
    pub ell: T,
    pub holds: bool,
    pub samples: usize,
    #[serde(serialize_with = "report::real")]
    pub worst_gap: T,
    pub witness: Option<UsogcWitness<T>>,
    pub seed: u64,
    pub eta: f64,
}

/// `h(x, p) ≥ h(u, p) + ⟨v, x − u⟩ + ℓ/2‖x − u‖²` on sampled `(u, p, v) ∈ gph ∂ₓh` and `x` near `x̄`.
pub fn verify_usogc<T: Real>(h: &Potential<T>, center: &SubgradientSample<T>, ell: T, cfg: &SampleConfig) -> Result<UsogcReport<T>> {
    cfg.validate()?;
    let eta = T::lit(cfg.eta);
    let sampler = GraphSampler::new(h, center, eta)?;
    let raw = sampling::par_indexed(cfg.count, cfg.seed, |i, rng| -> Result<Option<UsogcWitness<T>>> {
        let wrap = |e: Error| Error::Sample { index: i, source: Box::new(e) };
        let Some(s) = sampler.draw_until(rng, None, 50).map_err(wrap)? else { return Ok(None) };
        let y = &center.x + uniform_ball(rng, center.x.len(), eta);
        // alternate between raw points and points of the domain
        let x = if i % 2 == 0 { h.project(&y, &s.p).map_err(wrap)? } else { y };
        let hx = h.value(&x, &s.p).map_err(wrap)?;
        if !hx.is_finite_val() {
            return Ok(None);
        }
        let hu = h.value(&s.x, &s.p).map_err(wrap)?;
        let d = &x - &s.x;
        let gap = hx - hu - s.v.dot(&d) - ell * T::lit(0.5) * d.norm_squared();
        Ok(Some(UsogcWitness { x, u: s.x, p: s.p, v: s.v, gap }))
    });
    let mut worst: Option<UsogcWitness<T>> = None;
    let mut samples = 0;
    for r in raw {
        if let Some(w) = r? {
            samples += 1;
            if worst.as_ref().map_or(true, |b| w.gap < b.gap) {
                worst = Some(w);
            }
        }
    }
    let worst_gap = worst.as_ref().map_or(T::INF, |w| w.gap);
    let holds = worst_gap >= -T::tol(1e-9);
    Ok(UsogcReport {
        ell,
        holds,
        samples,
        worst_gap,
        witness: if holds { None } else { worst },
        seed: cfg.seed,
        eta: cfg.eta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AubinMapping {
    /// `p ↦ C(p)`
    Set,
    /// `p ↦ gph ∂ₓg(·, p)`, for box-type potentials
    SubgradientGraph,
}

#[derive(Debug, Clone, Serialize)]
pub struct AubinReport<T: Real> {
    pub mapping: AubinMapping,
    #[serde(serialize_with = "report::real")]
    pub ell_est: T,
    pub pairs: usize,
    /// a ratio above `1e6` was seen
    pub unbounded: bool,
    pub seed: u64,
    pub eta: f64,
}

const UNBOUNDED_RATIO: f64 = 1e6;

/// `max haus(F(p₁) ∩ V, F(p₂))/d(p₁, p₂)` over sampled `p₁, p₂ ∈ B_η(p̄)`.
pub fn aubin_modulus_estimate<T: Real>(inst: &PvsInstance<T>, mapping: AubinMapping, cfg: &SampleConfig) -> Result<AubinReport<T>> {
    cfg.validate()?;
    let g = &inst.potential;
    let eta = T::lit(cfg.eta);
    let rf = &inst.reference;
    let count = cfg.count;
    let ratios: Vec<Result<Option<T>>> = match mapping {
        AubinMapping::Set => {
            if inst.set_at(&rf.p)?.is_none() {
                return Err(Error::Unsupported("Aubin estimate of C(p) needs polyhedral sets".into()));
            }
            sampling::par_indexed(count, cfg.seed, |i, rng| {
                let wrap = |e: Error| Error::Sample { index: i, source: Box::new(e) };
                let p1 = &rf.p + uniform_ball(rng, inst.l(), eta);
                let p2 = &rf.p + uniform_ball(rng, inst.l(), eta);
                let d = (&p1 - &p2).norm();
                if d <= T::tol(1e-12) {
                    return Ok(None);
                }
                let c1 = inst.set_at(&p1).map_err(wrap)?.expect("polyhedral");
                let c2 = inst.set_at(&p2).map_err(wrap)?.expect("polyhedral");
                let h = hausdorff_local(&c1, &c2, &rf.x, eta, HausdorffMode::Local).map_err(wrap)?;
                Ok(Some(h.theta / d))
            })
        }
        AubinMapping::SubgradientGraph => {
            let bx = g
                .as_box()
                .ok_or_else(|| Error::Unsupported("graph Aubin estimate is implemented for box-type potentials".into()))?;
            let center = prox::reference_sample(inst)?;
            let sampler = GraphSampler::new(g, &center, eta)?;
            let window = 1.0 + 10.0 * cfg.eta + rf.x.amax().f64() + center.v.amax().f64();
            let normal_part = |x: &DVector<T>, v: &DVector<T>| match g.quadratic() {
                Some(w) => v - w * x,
                None => v.clone(),
            };
            let dist_graph = |x: &DVector<T>, u: &DVector<T>, p: &DVector<T>| {
                let (lo, hi) = bx.bounds_at(p);
                (0..x.len())
                    .map(|i| {
                        let set = UnionSet::interval_normal_graph(lo[i].f64(), hi[i].f64(), window);
                        set.dist(&DVector::from_vec(vec![x[i].f64(), u[i].f64()])).powi(2)
                    })
                    .sum::<f64>()
                    .sqrt()
            };
            sampling::par_indexed(count, cfg.seed, |i, rng| {
                let wrap = |e: Error| Error::Sample { index: i, source: Box::new(e) };
                let p1 = &rf.p + uniform_ball(rng, inst.l(), eta / T::lit(3.0));
                let p2 = &rf.p + uniform_ball(rng, inst.l(), eta / T::lit(3.0));
                let d = (&p1 - &p2).norm();
                if d <= T::tol(1e-12) {
                    return Ok(None);
                }
                let mut e = 0.0f64;
                for (pa, pb) in [(&p1, &p2), (&p2, &p1)] {
                    for _ in 0..8 {
                        if let Some(s) = sampler.draw_until(rng, Some(pa), 50).map_err(wrap)? {
                            e = e.max(dist_graph(&s.x, &normal_part(&s.x, &s.v), pb));
                        }
                    }
                }
                Ok(Some(T::lit(e) / d))
            })
        }
    };
    let mut ell = T::zero();
    let mut pairs = 0;
    for r in ratios {
        if let Some(v) = r? {
            pairs += 1;
            ell = ell.max(v);
        }
    }
    Ok(AubinReport {
        mapping,
        ell_est: ell,
        pairs,
        unbounded: ell > T::lit(UNBOUNDED_RATIO),
        seed: cfg.seed,
        eta: cfg.eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BaseMap, BoxSet, ReferencePoint};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    fn inputs(sigma: f64, l: f64, r: f64, lambda: f64, rho: f64) -> ModuliInputs<f64> {
        ModuliInputs { sigma, lipschitz: l, r, lambda, rho, eta: 1e-2, prox_p_modulus: 0.0 }
    }

    #[test]
    fn moduli_hand_values() {
        let t = theoretical_moduli(inputs(1.0, 1.0, 0.0, 1.0, 0.5)).unwrap();
        assert_relative_eq!(t.ell1, 3.0 + 13f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(t.ell2, 4.0, epsilon = 1e-12);
        assert_eq!(t.alpha, 0.0);
        assert!(theoretical_moduli(inputs(1.0, 1.0, 1.0, 0.5, 0.5)).is_err());
    }

    fn moving_box() -> PvsInstance<f64> {
        let base = BaseMap::new(v(&[0.0]), DMatrix::identity(1, 1), DMatrix::zeros(1, 1), DMatrix::from_element(1, 1, 0.5)).unwrap();
        let mut bx = BoxSet::fixed(v(&[0.0]), v(&[1.0]));
        bx.upper_shift = Some(DMatrix::identity(1, 1));
        let g = Potential::IndicatorBox(bx);
        PvsInstance::new(base, g, ReferencePoint { x: v(&[1.0]), p: v(&[0.0]), q: v(&[0.0]), v: v(&[1.0]) }).unwrap()
    }

    #[test]
    fn moving_box_aubin_and_hausdorff() {
        let inst = moving_box();
        let cfg = SampleConfig { count: 50, ..SampleConfig::default() };
        let a = aubin_modulus_estimate(&inst, AubinMapping::Set, &cfg).unwrap();
        assert!((a.ell_est - 1.0).abs() < 1e-6, "{}", a.ell_est);
        let gr = aubin_modulus_estimate(&inst, AubinMapping::SubgradientGraph, &cfg).unwrap();
        assert!(gr.ell_est > 0.3 && gr.ell_est <= 1.0 + 1e-9, "{}", gr.ell_est);
        let h = verify_prox_hausdorff_estimate(&inst, &cfg, &SolverOverrides::default(), &ThresholdOptions::default()).unwrap();
        assert!(h.pass && h.violations == 0);
    }

    #[test]
    fn usogc_examples() {
        let orth = Potential::IndicatorBox(BoxSet::fixed(v(&[0.0]), v(&[f64::INFINITY])));
        let strong = Potential::QuadraticPlusIndicator { w: DMatrix::identity(1, 1), inner: Box::new(orth.clone()) };
        let cfg = SampleConfig { count: 200, ..SampleConfig::default() };
        let c = SubgradientSample::new(&strong, v(&[0.0]), v(&[]), v(&[0.0])).unwrap();
        assert!(verify_usogc(&strong, &c, 1.0, &cfg).unwrap().holds);
        let c0 = SubgradientSample::new(&orth, v(&[0.0]), v(&[]), v(&[0.0])).unwrap();
        let bad = verify_usogc(&orth, &c0, 0.1, &cfg).unwrap();
        assert!(!bad.holds && bad.witness.is_some());
        assert!(verify_usogc(&orth, &c0, 0.0, &cfg).unwrap().holds);
    }

    #[test]
    fn scalar_projection_is_fully_stable() {
        let base = BaseMap::new(v(&[0.0]), DMatrix::identity(1, 1), DMatrix::zeros(1, 0), DMatrix::zeros(1, 0)).unwrap();
        let g = Potential::IndicatorBox(BoxSet::fixed(v(&[0.0]), v(&[f64::INFINITY])));
        let inst = PvsInstance::new(base, g, ReferencePoint { x: v(&[0.0]), p: v(&[]), q: v(&[]), v: v(&[0.0]) }).unwrap();
        let cfg = SampleConfig { count: 100, ..SampleConfig::default() };
        let rep = verify_lipschitz_full_stability(&inst, &cfg, &SolverOverrides::default(), &ThresholdOptions::default()).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.ell_est <= 1e-6);
    }
}
