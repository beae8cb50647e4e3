//! Contraction fixed-point solver `x ← π_λ(x + λv − λf(x, p, q), p)` with certified step ratios,
//! and the diagnostic probe for the regime `σ ≤ ℛ`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::avi::{self, AviSolutions, SolutionSet, Window};
use crate::error::{Error, Result};
use crate::model::{PotentialConstants, PvsInstance};
use crate::prox::{self, ProxQuery, ThresholdEstimate, ThresholdOptions};
use crate::report;
use crate::scalar::Real;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Allowed excess of a measured step ratio over `α`.
pub const RATIO_SLACK: f64 = 0.01;
/// Consecutive violating steps before divergence is declared.
pub const DIVERGENCE_STEPS: usize = 25;
pub const INCLUSION_TOL: f64 = 1e-8;

/// `min(1, 0.9/r, (σ − r)/(L² − r²))`, half of the strict bound `2(σ − r)/(L² − r²)`.
pub fn select_lambda<T: Real>(sigma: T, lip: T, r: T) -> Result<T> {
    if !(sigma > r) {
        return Err(Error::Precondition(format!(
            "σ = {} ≤ r = {}: the contraction argument is unavailable",
            sigma.f64(),
            r.f64()
        )));
    }
    if r < T::zero() {
        return Err(Error::OutOfRange("r must be nonnegative".into()));
    }
    let mut lambda = T::one();
    if r > T::zero() {
        lambda = lambda.min(T::lit(0.9) / r);
    }
    if lip > r {
        lambda = lambda.min((sigma - r) / (lip * lip - r * r));
    }
    Ok(lambda)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ContractionFactor<T: Real> {
    #[serde(serialize_with = "report::real")]
    pub alpha: T,
    /// the radicand `1 − 2λσ + λ²L²` was negative and has been clamped to 0
    pub clamped: bool,
}

/// `α = √(1 − 2λσ + λ²L²)/(1 − rλ)`.
pub fn contraction_factor<T: Real>(lambda: T, sigma: T, lip: T, r: T) -> Result<ContractionFactor<T>> {
    if !(lambda > T::zero()) || !(lambda * r < T::one()) {
        return Err(Error::OutOfRange(format!("λ = {} outside (0, 1/r)", lambda.f64())));
    }
    let rad = T::one() - T::lit(2.0) * lambda * sigma + lambda * lambda * lip * lip;
    let clamped = rad < T::zero();
    let alpha = rad.max(T::zero()).sqrt() / (T::one() - r * lambda);
    Ok(ContractionFactor { alpha, clamped })
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig<T: Real> {
    #[serde(serialize_with = "report::real")]
    pub lambda: T,
    #[serde(serialize_with = "report::real")]
    pub r: T,
    #[serde(serialize_with = "report::real")]
    pub sigma: T,
    #[serde(serialize_with = "report::real")]
    pub lipschitz: T,
    #[serde(serialize_with = "report::real")]
    pub tol: T,
    pub max_iter: usize,
    /// `ℛ`, forwarded to the prox for the `λℛ < 1` check
    #[serde(serialize_with = "report::opt_real")]
    pub threshold: Option<T>,
    #[serde(skip)]
    pub x0: Option<DVector<T>>,
    #[serde(skip)]
    pub record_trajectory: bool,
}

impl<T: Real> SolverConfig<T> {
    /// Config with `λ` from [`select_lambda`].
    pub fn new(sigma: T, lipschitz: T, r: T) -> Result<Self> {
        let lambda = select_lambda(sigma, lipschitz, r)?;
        Self::with_lambda(sigma, lipschitz, r, lambda)
    }

    pub fn with_lambda(sigma: T, lipschitz: T, r: T, lambda: T) -> Result<Self> {
        let cfg = SolverConfig {
            lambda,
            r,
            sigma,
            lipschitz,
            tol: T::lit(DEFAULT_TOL),
            max_iter: DEFAULT_MAX_ITER,
            threshold: None,
            x0: None,
            record_trajectory: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `0 < λ < 1/r` and `2(σ − r) > λ(L² − r²)`.
    pub fn validate(&self) -> Result<()> {
        let (l, r, s, lip) = (self.lambda, self.r, self.sigma, self.lipschitz);
        if !(s > r) {
            return Err(Error::Precondition(format!("σ = {} ≤ r = {}", s.f64(), r.f64())));
        }
        if !(l > T::zero()) || !(l * r < T::one()) {
            return Err(Error::OutOfRange(format!("λ = {} outside (0, 1/r)", l.f64())));
        }
        if !(T::lit(2.0) * (s - r) > l * (lip * lip - r * r)) {
            return Err(Error::OutOfRange(format!("λ = {} violates 2(σ − r) > λ(L² − r²)", l.f64())));
        }
        Ok(())
    }

    pub fn alpha(&self) -> Result<ContractionFactor<T>> {
        contraction_factor(self.lambda, self.sigma, self.lipschitz, self.r)
    }
}

/// Overrides for [`setup`]; `None` falls back to the instance config, then to defaults.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SolverOverrides {
    pub r: Option<f64>,
    pub lambda: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverSetup<T: Real> {
    pub config: SolverConfig<T>,
    pub constants: PotentialConstants<T>,
    pub threshold: ThresholdEstimate<T>,
    pub factor: ContractionFactor<T>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Regime<T: Real> {
    #[serde(serialize_with = "report::real")]
    pub sigma: T,
    #[serde(serialize_with = "report::real")]
    pub lipschitz: T,
    pub constants: PotentialConstants<T>,
    pub threshold: ThresholdEstimate<T>,
}

/// `σ`, `L`, `r`, `ℛ` of an instance without validating the contraction regime.
pub fn regime<T: Real>(inst: &PvsInstance<T>, ov: &SolverOverrides, topts: &ThresholdOptions) -> Result<Regime<T>> {
    let mut inst_cfg = inst.config;
    if ov.r.is_some() {
        inst_cfg.r = ov.r;
    }
    let view = PvsInstance { config: inst_cfg, ..inst.clone() };
    let (constants, threshold) = prox::potential_constants(&view, topts)?;
    Ok(Regime {
        sigma: inst.strong_monotonicity_modulus(),
        lipschitz: inst.lipschitz_modulus().concatenated,
        constants,
        threshold,
    })
}

/// Full solver setup with `r` and `λ` resolved; errors with `Precondition` when `σ ≤ r`.
pub fn setup<T: Real>(inst: &PvsInstance<T>, ov: &SolverOverrides, topts: &ThresholdOptions) -> Result<SolverSetup<T>> {
    let rg = regime(inst, ov, topts)?;
    let (sigma, lip, r) = (rg.sigma, rg.lipschitz, rg.constants.r);
    let mut config = match ov.lambda.or(inst.config.lambda) {
        Some(l) => SolverConfig::with_lambda(sigma, lip, r, T::lit(l))?,
        None => SolverConfig::new(sigma, lip, r)?,
    };
    if let Some(t) = ov.tol {
        config.tol = T::lit(t);
    }
    if let Some(m) = ov.max_iter {
        config.max_iter = m;
    }
    config.threshold = Some(rg.constants.threshold);
    let factor = config.alpha()?;
    Ok(SolverSetup { config, constants: rg.constants, threshold: rg.threshold, factor })
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult<T: Real> {
    #[serde(serialize_with = "report::vec")]
    pub x: DVector<T>,
    pub iterations: usize,
    /// largest per-step ratio `‖x_{k+1} − x_k‖ / ‖x_k − x_{k−1}‖`
    #[serde(serialize_with = "report::real")]
    pub measured_rate: T,
    #[serde(serialize_with = "report::real")]
    pub alpha: T,
    pub alpha_clamped: bool,
    #[serde(serialize_with = "report::real")]
    pub fixed_point_residual: T,
    #[serde(serialize_with = "report::real")]
    pub inclusion_residual: T,
    #[serde(serialize_with = "report::vecs", skip_serializing_if = "Vec::is_empty")]
    pub trajectory: Vec<DVector<T>>,
}

/// One application of `H_{(v,p,q)}`.
pub fn fixed_point_map<T: Real>(inst: &PvsInstance<T>, x: &DVector<T>, v: &DVector<T>, p: &DVector<T>, q: &DVector<T>, cfg: &SolverConfig<T>) -> Result<DVector<T>> {
    let f = inst.evaluate_base(x, p, q)?;
    let y = x + (v - f) * cfg.lambda;
    prox::prox_map(&inst.potential, &ProxQuery { lambda: cfg.lambda, v: y, p: p.clone() }, cfg.threshold)
}

/// Iterate from `x̄` (or `cfg.x0`) until `‖x_{k+1} − x_k‖ ≤ tol`; returns `x_{k+1}`.
///
/// `iterations` counts the steps before the stopping one.
pub fn solve<T: Real>(inst: &PvsInstance<T>, v: &DVector<T>, p: &DVector<T>, q: &DVector<T>, cfg: &SolverConfig<T>) -> Result<SolveResult<T>> {
    cfg.validate()?;
    let n = inst.n();
    if v.len() != n || p.len() != inst.l() || q.len() != inst.m() {
        return Err(Error::Shape(format!("(v, p, q) lengths ({}, {}, {}) vs dims ({n}, {}, {})", v.len(), p.len(), q.len(), inst.l(), inst.m())));
    }
    let ContractionFactor { alpha, clamped } = cfg.alpha()?;
    let bound = alpha + T::lit(RATIO_SLACK);
    let mut x = cfg.x0.clone().unwrap_or_else(|| inst.reference.x.clone());
    let mut trajectory = Vec::new();
    if cfg.record_trajectory {
        trajectory.push(x.clone());
    }
    let mut prev_step: Option<T> = None;
    let mut rate = T::zero();
    let mut streak = 0;
    // ratios are meaningless once steps are at rounding level
    let floor = T::tol(1e-13) * (T::one() + x.amax());
    for k in 0..cfg.max_iter {
        let next = fixed_point_map(inst, &x, v, p, q, cfg)?;
        let step = (&next - &x).norm();
        if let Some(ps) = prev_step {
            if ps > floor && step > floor {
                let ratio = step / ps;
                rate = rate.max(ratio);
                if ratio > bound {
                    streak += 1;
                    if streak >= DIVERGENCE_STEPS {
                        return Err(Error::Diverged { ratio: ratio.f64(), alpha: alpha.f64(), steps: streak });
                    }
                } else {
                    streak = 0;
                }
            }
        }
        x = next;
        if cfg.record_trajectory {
            trajectory.push(x.clone());
        }
        if step <= cfg.tol {
            let inclusion_residual = inst.inclusion_residual(&x, v, p, q)?;
            return Ok(SolveResult {
                x,
                iterations: k,
                measured_rate: rate,
                alpha,
                alpha_clamped: clamped,
                fixed_point_residual: step,
                inclusion_residual,
                trajectory,
            });
        }
        prev_step = Some(step);
    }
    Err(Error::IterationLimit("contraction solver"))
}

#[derive(Debug, Clone, Serialize)]
pub struct EmptinessWitness<T: Real> {
    /// `w = v − c − Bp − Dq`, the required normal component
    #[serde(serialize_with = "report::vec")]
    pub rhs: DVector<T>,
    /// `−w = c + Bp + Dq − v`
    #[serde(serialize_with = "report::vec")]
    pub neg_rhs: DVector<T>,
    /// `y` with `⟨y, gᵢ⟩ ≤ 0` for every row and `⟨y, w⟩ > 0`
    #[serde(serialize_with = "report::vec")]
    pub separating: DVector<T>,
    #[serde(serialize_with = "report::real")]
    pub distance_to_normal_cone: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct Solvability<T: Real> {
    pub status: SolutionSet,
    pub method: &'static str,
    pub solutions: AviSolutions<T>,
    pub witness: Option<EmptinessWitness<T>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FailureProbe<T: Real> {
    /// true when `σ ≤ r` and contraction was refused
    pub applies: bool,
    pub regime: Regime<T>,
    pub message: String,
    pub solvability: Option<Solvability<T>>,
}

/// Affine-VI data `(M, w, C)` for `v ∈ f(x, p, q) + ∂ₓg(x, p)` with a polyhedral potential.
pub fn affine_system<T: Real>(inst: &PvsInstance<T>, v: &DVector<T>, p: &DVector<T>, q: &DVector<T>) -> Result<(DMatrix<T>, DVector<T>, crate::polyhedra::Polyhedron<T>)> {
    let g = &inst.potential;
    let c = inst
        .set_at(p)?
        .ok_or_else(|| Error::Unsupported(format!("{} is not polyhedral", g.kind())))?;
    let mut m = inst.base.q.clone();
    if let Some(w) = g.quadratic() {
        m += w;
    }
    let w = v - inst.evaluate_base(&DVector::zeros(inst.n()), p, q)?;
    Ok((m, w, c))
}

/// Solvability of the inclusion by face enumeration, optionally within a window.
pub fn solvability<T: Real>(inst: &PvsInstance<T>, v: &DVector<T>, p: &DVector<T>, q: &DVector<T>, win: Option<&Window<T>>) -> Result<Solvability<T>> {
    let (m, w, c) = affine_system(inst, v, p, q)?;
    let solutions = avi::solve_avi(&m, &w, &c, win)?;
    let witness = if solutions.status == SolutionSet::Empty && m.amax() <= T::tol(1e-12) {
        avi::cone_separation(c.g(), &w).map(|y| EmptinessWitness {
            neg_rhs: -&w,
            distance_to_normal_cone: y.norm(),
            rhs: w.clone(),
            separating: y,
        })
    } else {
        None
    };
    Ok(Solvability { status: solutions.status, method: "face-enumeration", solutions, witness })
}

/// Diagnostic for `σ ≤ ℛ`: refuses contraction and probes solvability directly.
pub fn solve_certified_failure_probe<T: Real>(
    inst: &PvsInstance<T>,
    v: &DVector<T>,
    p: &DVector<T>,
    q: &DVector<T>,
    ov: &SolverOverrides,
    topts: &ThresholdOptions,
) -> Result<FailureProbe<T>> {
    let rg = regime(inst, ov, topts)?;
    let (sigma, r) = (rg.sigma, rg.constants.r);
    if sigma > r {
        return Ok(FailureProbe {
            applies: false,
            message: format!("σ = {} > r = {}: use solve", sigma.f64(), r.f64()),
            regime: rg,
            solvability: None,
        });
    }
    let solvability = match solvability(inst, v, p, q, None) {
        Ok(s) => Some(s),
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    let message = format!(
        "σ = {} ≤ r = {} (ℛ = {}): contraction refused; a single-valued localization is not guaranteed",
        sigma.f64(),
        r.f64(),
        rg.constants.threshold.f64()
    );
    Ok(FailureProbe { applies: true, regime: rg, message, solvability })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BaseMap, BoxSet, Potential, ReferencePoint};
    use approx::assert_relative_eq;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    fn scalar_orthant() -> PvsInstance<f64> {
        let base = BaseMap::new(v(&[0.0]), DMatrix::identity(1, 1), DMatrix::zeros(1, 0), DMatrix::zeros(1, 0)).unwrap();
        let g = Potential::IndicatorBox(BoxSet::fixed(v(&[0.0]), v(&[f64::INFINITY])));
        PvsInstance::new(base, g, ReferencePoint { x: v(&[0.0]), p: v(&[]), q: v(&[]), v: v(&[0.0]) }).unwrap()
    }

    #[test]
    fn lambda_and_alpha_values() {
        assert_relative_eq!(select_lambda(1.0, 2.0, 0.0).unwrap(), 0.25);
        assert_relative_eq!(select_lambda(1.0, 1.0, 0.0).unwrap(), 1.0);
        assert!(select_lambda(0.5, 1.0, 0.5).is_err());
        assert_relative_eq!(contraction_factor(1.0, 1.0, 1.0, 0.0).unwrap().alpha, 0.0);
        assert_relative_eq!(contraction_factor(0.25, 1.0, 2.0, 0.0).unwrap().alpha, 0.75f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(contraction_factor(0.5, 1.0, 2.0, 0.0).unwrap().alpha, 1.0);
        assert!(SolverConfig::with_lambda(1.0, 2.0, 0.0, 0.5).is_err());
        assert!(contraction_factor(1.0, 2.0, 1.0, 0.0).unwrap().clamped);
    }

    #[test]
    fn scalar_projection_solves() {
        let inst = scalar_orthant();
        let cfg = SolverConfig::new(1.0, 1.0, 0.0).unwrap();
        let s = solve(&inst, &v(&[0.7]), &v(&[]), &v(&[]), &cfg).unwrap();
        assert_relative_eq!(s.x[0], 0.7);
        assert_eq!(s.iterations, 1);
        assert_eq!(s.alpha, 0.0);
        let s2 = solve(&inst, &v(&[-0.3]), &v(&[]), &v(&[]), &cfg).unwrap();
        assert_eq!(s2.x[0], 0.0);
        assert!(s2.inclusion_residual <= 1e-12);
    }
}
