//! Acceptance suite: one PASS/FAIL line per criterion; exits nonzero when any fails.

mod common;

use std::time::Instant;

use common::{dv, fixture, licq_pvc, normal_at, polyhedron_through_origin, pvi_polyhedral, quadratic_box};
use nalgebra::DVector;

use pvstab::avi::SolutionSet;
use pvstab::linalg;
use pvstab::model::{BoxSet, Potential};
use pvstab::pointbased::coderivative::{coderivative_interval, CoderivativeKind};
use pvstab::pointbased::oracle::{interval_grid, interval_oracle};
use pvstab::pointbased::{self, cone_limit_polyhedral, LimitMode, PviVariant};
use pvstab::polyhedra::limits::{oracle_contains, sampled_critical_cones};
use pvstab::polyhedra::Polyhedron;
use pvstab::prox::{self, SubgradientSample, ThresholdOptions};
use pvstab::pvc::{self, CertifyOptions, RouteVerdict, Verdict};
use pvstab::sampling::{gaussian, stream, uniform_ball};
use pvstab::solver::{self, SolverOverrides};
use pvstab::stability::{self, SampleConfig};

type Outcome = Result<String, String>;

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let inst = fixture("curvature.json");
    let rep = pvc::certify_full_stability(&inst, &CertifyOptions { eta: 1e-2, samples: 500, ..Default::default() }).map_err(err)?;
    check(rep.mfcq.holds && rep.mfcq.margin >= 1.0 - 1e-9, format!("MFCQ margin {}", rep.mfcq.margin))?;
    check(!rep.licq.holds, "LICQ holds")?;
    check(rep.crcq.holds, "CRCQ fails")?;
    for end in [[0.375, 0.625, 0.0, 0.0], [0.0, 0.25, 0.375, 0.375]] {
        check(rep.multipliers.vertices.iter().any(|u| (u - dv(&end)).amax() <= 1e-9), format!("endpoint {end:?} missing"))?;
    }
    let gss = rep.gssosc.as_ref().ok_or("GSSOSC not evaluated")?;
    let at = gss
        .checked
        .iter()
        .find(|c| (&c.lambda - dv(&[0.375, 0.625, 0.0, 0.0])).amax() <= 1e-9)
        .ok_or("vertex (3/8,5/8,0,0) not checked")?;
    check(!gss.holds && at.min_curvature.abs() <= 1e-9, format!("curvature at vertex {}", at.min_curvature))?;
    let det = rep
        .scoc
        .iter()
        .find(|s| (&s.lambda - dv(&[0.375, 0.625, 0.0, 0.0])).amax() <= 1e-9)
        .and_then(|s| s.determinants.iter().find(|d| d.rows == vec![0, 1]))
        .ok_or("bordered determinant for J = {1,2} missing")?;
    check(det.det.abs() <= 1e-9, format!("det = {}", det.det))?;
    let gus = rep.gusosc.as_ref().ok_or("GUSOSC not evaluated")?;
    check(gus.holds && gus.ell_best >= 1e-3, format!("ℓ_best = {}", gus.ell_best))?;
    check(rep.verdict == Verdict::FullyStable, "verdict")?;
    let secs = t.elapsed().as_secs_f64();
    check(secs <= 10.0, format!("runtime {secs:.2} s"))?;
    Ok(format!("ℓ_best = {}, |det| = {:.1e}, {secs:.2} s", gus.ell_best, det.det.abs()))
}

fn criterion_2() -> Outcome {
    let inst = fixture("aqvi1.json");
    let st = solver::setup(&inst, &SolverOverrides::default(), &ThresholdOptions::default()).map_err(err)?;
    let mut cfg = st.config.clone();
    check(cfg.sigma == 1.0 && cfg.lipschitz <= 2.0 && cfg.r == 1e-6, "instance constants")?;
    let alpha = st.factor.alpha;
    let r = &inst.reference;
    let mut sols: Vec<DVector<f64>> = Vec::new();
    let mut worst = 0.0f64;
    for k in 0..10 {
        let mut rng = stream(2024, k);
        cfg.x0 = Some(&r.x + uniform_ball::<f64>(&mut rng, 2, 2.0));
        let res = solver::solve(&inst, &r.v, &r.p, &r.q, &cfg).map_err(err)?;
        worst = worst.max(res.measured_rate);
        check(res.inclusion_residual <= 1e-8, format!("residual {}", res.inclusion_residual))?;
        sols.push(res.x);
    }
    check(worst <= alpha + 0.01, format!("rate {worst} > α + 0.01 = {}", alpha + 0.01))?;
    let spread = sols.iter().map(|s| (s - &sols[0]).norm()).fold(0.0, f64::max);
    check(spread <= 10.0 * cfg.tol, format!("starts disagree by {spread}"))?;
    cfg.x0 = None;
    let t = Instant::now();
    for k in 0..100 {
        let mut rng = stream(2025, k);
        let p = &r.p + uniform_ball::<f64>(&mut rng, 1, 1e-2);
        solver::solve(&inst, &r.v, &p, &r.q, &cfg).map_err(err)?;
    }
    let secs = t.elapsed().as_secs_f64();
    check(secs <= 5.0, format!("100 solves took {secs:.2} s"))?;
    Ok(format!("rate {worst:.4} ≤ α + 0.01 = {:.4}; 100 solves {secs:.3} s", alpha + 0.01))
}

fn criterion_3() -> Outcome {
    let ov = SolverOverrides::default();
    let topts = ThresholdOptions::default();
    let cfg = SampleConfig { eta: 1e-2, count: 1000, ..Default::default() };
    let aq = fixture("aqvi1.json");
    let rep = stability::verify_lipschitz_full_stability(&aq, &cfg, &ov, &topts).map_err(err)?;
    let kappa = rep.theory.as_ref().map(|t| t.inputs.sigma - t.inputs.r).ok_or("no theory")?;
    check(rep.ell_est.is_finite(), "ℓ not finite")?;
    check(rep.canonical.max_excess <= 1e-7 && rep.canonical.norm_form_holds, format!("canonical excess {}", rep.canonical.max_excess))?;
    check((rep.kappa - kappa).abs() <= 1e-15, "κ ≠ σ − r")?;
    check(rep.pass, "aqvi1 report fails")?;
    let st = stability::verify_lipschitz_full_stability(&fixture("orthant_stable.json"), &cfg, &ov, &topts).map_err(err)?;
    check(st.pass && st.canonical.max_excess <= 1e-7 && st.ell_est.is_finite(), "σ = 2 variant fails")?;
    let un = fixture("orthant_unstable.json");
    let probe = solver::solve_certified_failure_probe(&un, &dv(&[0.0, 0.0]), &dv(&[-0.1, -0.1]), &dv(&[0.0, 0.0]), &ov, &topts).map_err(err)?;
    let solv = probe.solvability.as_ref().ok_or("no solvability probe")?;
    check(probe.applies && solv.status == SolutionSet::Empty, "probe did not find S = ∅")?;
    let w = solv.witness.as_ref().ok_or("no emptiness witness")?;
    // p + q − v ∉ R²₊ and y separates it from the normal cones
    check(w.neg_rhs.iter().any(|&t| t < 0.0) && w.separating.dot(&w.rhs) > 0.0, "witness inconsistent")?;
    Ok(format!("aqvi1 ℓ_est = {:.4}, canonical excess {:.1e}; σ ≤ r probe: S = ∅ with witness", rep.ell_est, rep.canonical.max_excess))
}

fn criterion_4() -> Outcome {
    let ex = fixture("orthant_stable.json");
    let center = prox::reference_sample(&ex).map_err(err)?;
    let est = prox::threshold_estimate_hypomonotone(&ex.potential, &center, 1e-2, 10_000, 42).map_err(err)?;
    check((0.95..=1.05).contains(&est.r_est), format!("R_est = {}", est.r_est))?;
    let convex = Potential::IndicatorPolyhedron(Polyhedron::<f64>::nonneg_orthant(3));
    let c = SubgradientSample::new(&convex, dv(&[0.0, 0.0, 0.5]), dv(&[]), dv(&[-1.0, -0.5, 0.0])).map_err(err)?;
    let conv = prox::threshold_estimate_hypomonotone(&convex, &c, 1e-2, 2000, 42).map_err(err)?;
    check(conv.r_est <= 1e-6, format!("convex R_est = {}", conv.r_est))?;
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let (g, x, vhat) = quadratic_box(seed);
        let exact = prox::threshold_pointbased_box(&g, &x, &vhat).map_err(err)?.r_est;
        let center = SubgradientSample::new(&g, x, dv(&[]), vhat).map_err(err)?;
        let sampled = prox::threshold_estimate_hypomonotone(&g, &center, 1e-2, 3000, seed).map_err(err)?.r_est;
        let scale = exact.max(sampled);
        let rel = if scale > 1e-6 { (exact - sampled).abs() / scale } else { 0.0 };
        worst = worst.max(rel);
        check(rel <= 0.05, format!("fixture {seed}: pointbased {exact} vs sampled {sampled}"))?;
    }
    for seed in 0..10 {
        let mut rng = stream(seed, 99);
        let w = common::sym_with_spectrum(&mut rng, 2, -2.0, 2.0);
        let g = Potential::QuadraticPlusIndicator {
            w: w.clone(),
            inner: Box::new(Potential::IndicatorBox(BoxSet::fixed(dv(&[-1.0, -1.0]), dv(&[1.0, 1.0])))),
        };
        let x = dv(&[0.2, -0.1]);
        let got = prox::threshold_pointbased_box(&g, &x, &(&w * &x)).map_err(err)?.r_est;
        let (m, _) = linalg::min_eig(&w).ok_or("eigen")?;
        check(got == (-m).max(0.0), format!("interior {got} vs {}", (-m).max(0.0)))?;
    }
    Ok(format!("R_est = {:.4}; convex {:.1e}; box agreement worst {:.2}%", est.r_est, conv.r_est, 100.0 * worst))
}

fn criterion_5() -> Outcome {
    let mut total = 0;
    for seed in 0..20u64 {
        let mut rng = stream(seed, 3);
        let (c, active) = polyhedron_through_origin(&mut rng);
        let x = DVector::zeros(3);
        let v = normal_at(&mut rng, &c, &active);
        let h = cone_limit_polyhedral(&c, &x, &v, LimitMode::Strong).map_err(err)?.h;
        let samples = sampled_critical_cones(&c, &x, &v, 1e-3).map_err(err)?;
        let basis = h.span_basis();
        for k in 0..100 {
            let w = if k % 2 == 0 && basis.ncols() > 0 { &basis * gaussian::<f64>(&mut rng, basis.ncols()) } else { gaussian(&mut rng, 3) };
            if h.contains(&w, 1e-7) != oracle_contains(&samples, &w, 1e-6).map_err(err)? {
                total += 1;
            }
        }
    }
    check(total == 0, format!("{total} disagreements"))?;
    Ok("20 polyhedra × 100 probes, 0 disagreements".into())
}

fn criterion_6() -> Outcome {
    let inst = fixture("box_moving.json");
    let cfg = SampleConfig { count: 500, ..Default::default() };
    let rep = stability::verify_prox_hausdorff_estimate(&inst, &cfg, &SolverOverrides::default(), &ThresholdOptions::default()).map_err(err)?;
    let (l1, l2) = stability::ell_constants(rep.kappa0, rep.rho, rep.lambda);
    check(rep.ell1 == l1 && rep.ell2 == l2, "ℓ constants")?;
    check(rep.violations == 0 && rep.pass, format!("{} violations", rep.violations))?;
    Ok(format!("{} samples ({} skipped), max lhs/bound {:.3}", rep.samples, rep.skipped, rep.max_ratio))
}

fn criterion_7() -> Outcome {
    let inf = f64::INFINITY;
    let mut points = 0;
    for (a, b) in [(0.0, 1.0), (0.0, inf), (-inf, 0.0)] {
        for (x, u) in interval_grid(a, b) {
            for w in [-1.0, -0.25, 0.0, 0.25, 1.0] {
                let reg = coderivative_interval(a, b, x, u, w, CoderivativeKind::Regular).map_err(err)?;
                let lim = coderivative_interval(a, b, x, u, w, CoderivativeKind::Limiting).map_err(err)?;
                check(reg == interval_oracle(a, b, x, u, w, CoderivativeKind::Regular), format!("regular [{a},{b}] at ({x},{u}), w = {w}"))?;
                check(lim == interval_oracle(a, b, x, u, w, CoderivativeKind::Limiting), format!("limiting [{a},{b}] at ({x},{u}), w = {w}"))?;
                check(reg.is_subset(lim), format!("regular ⊄ limiting at ({x},{u})"))?;
                points += 1;
            }
        }
    }
    Ok(format!("{points} table entries match"))
}

fn criterion_8() -> Outcome {
    let mut stable = 0;
    for seed in 0..20 {
        let inst = licq_pvc(1000 + seed);
        let rep = pvc::certify_full_stability(&inst, &CertifyOptions { samples: 300, ..Default::default() }).map_err(err)?;
        check(rep.licq.holds, format!("instance {seed} lost LICQ"))?;
        let gss = pvc::gssosc_check(&inst, 42).map_err(err)?;
        let gss_verdict = if gss.holds { RouteVerdict::FullyStable } else { RouteVerdict::NotCertified };
        check(!rep.routes_disagree && gss_verdict == rep.gusosc_route, format!("instance {seed}: GSSOSC {} vs {:?}", gss.holds, rep.verdict))?;
        if rep.verdict == Verdict::FullyStable {
            stable += 1;
        }
    }
    Ok(format!("20 instances agree ({stable} fully stable)"))
}

fn criterion_9() -> Outcome {
    let cfg = SampleConfig { count: 200, ..Default::default() };
    let mut implied = 0;
    for seed in 0..20 {
        let inst = pvi_polyhedral(seed);
        let closure = pointbased::pvi_positive_definiteness(&inst, PviVariant::Closure).map_err(err)?;
        let span = pointbased::pvi_positive_definiteness(&inst, PviVariant::CriticalSpan).map_err(err)?;
        check(!closure.holds || span.holds, format!("instance {seed}: closure test holds without the span test"))?;
        if span.holds {
            let rep = stability::verify_lipschitz_full_stability(&inst, &cfg, &SolverOverrides::default(), &ThresholdOptions::default()).map_err(err)?;
            check(rep.pass, format!("instance {seed}: sampled inequality fails"))?;
            implied += 1;
        }
    }
    Ok(format!("{implied}/20 instances positive definite, all pass"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("curvature example certificate", criterion_1),
        ("contraction solver certification", criterion_2),
        ("full-stability inequality", criterion_3),
        ("threshold calculators", criterion_4),
        ("cone identity", criterion_5),
        ("Hausdorff prox estimate", criterion_6),
        ("coderivative tables", criterion_7),
        ("cross-route consistency", criterion_8),
        ("polyhedral PVI pointbased", criterion_9),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(msg) => println!("criterion {}: PASS  {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} passed in {:.1} s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
