//! Subcommand implementations for the `pvstab` binary.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::{json, Value};

use pvstab::model::{load_instance, PvsInstance};
use pvstab::pointbased::{self, LimitMode, PviVariant};
use pvstab::polyhedra::PolyCone;
use pvstab::prox::{self, ThresholdOptions};
use pvstab::pvc::{self, CertifyOptions, Verdict};
use pvstab::solver::{self, SolverOverrides};
use pvstab::stability::{self, SampleConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
/// A negative but well-formed outcome: failure probe, not certified, check failed.
pub const EXIT_NEGATIVE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pvstab", version, about = "Solve and certify parametric variational systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve v ∈ f(x,p,q) + ∂g(x,p) by the contraction iteration
    Solve(SolveArgs),
    /// Full-stability certificate for smooth inequality constraints
    CertifyPvc(Common),
    /// Positive-definiteness tests for polyhedral variational inequalities
    CertifyPvi(Common),
    /// Theoretical and sampled stability moduli
    Moduli(Common),
    /// Prox-boundedness threshold estimates
    Threshold(Common),
    /// Critical cone, its span and the cone limit at the reference
    Cones(Common),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub jobs: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// prox parameter override
    #[arg(long)]
    pub r: Option<f64>,
    /// step size override
    #[arg(long)]
    pub lambda: Option<f64>,
    /// include wall-clock time in the manifest (breaks byte-identical reruns)
    #[arg(long)]
    #[serde(skip)]
    pub record_timing: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    pub v: Option<Vec<f64>>,
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    pub p: Option<Vec<f64>>,
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    pub q: Option<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub instance: String,
    pub seed: u64,
    pub eta: Option<f64>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    pub overrides: SolverOverrides,
    pub artifact_version: &'static str,
    pub wall_clock_seconds: Option<f64>,
}

pub struct Outcome {
    pub report: Value,
    pub summary: String,
    pub exit: i32,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::CertifyPvc(_) => "certify-pvc",
            Command::CertifyPvi(_) => "certify-pvi",
            Command::Moduli(_) => "moduli",
            Command::Threshold(_) => "threshold",
            Command::Cones(_) => "cones",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Solve(s) => &s.common,
            Command::CertifyPvc(c) | Command::CertifyPvi(c) | Command::Moduli(c) | Command::Threshold(c) | Command::Cones(c) => c,
        }
    }
}

impl Common {
    fn overrides(&self) -> SolverOverrides {
        SolverOverrides { r: self.r, lambda: self.lambda, tol: self.tol, max_iter: None }
    }

    fn threshold_options(&self, inst: &PvsInstance<f64>) -> ThresholdOptions {
        let d = ThresholdOptions::default();
        ThresholdOptions { eta: self.eta.or(inst.config.eta).unwrap_or(d.eta), samples: self.samples.unwrap_or(d.samples), seed: self.seed }
    }

    fn sample_config(&self, inst: &PvsInstance<f64>) -> SampleConfig {
        let d = SampleConfig::default();
        SampleConfig { eta: self.eta.or(inst.config.eta).unwrap_or(d.eta), count: self.samples.unwrap_or(d.count), seed: self.seed, ..d }
    }
}

fn load(path: &Path) -> anyhow::Result<PvsInstance<f64>> {
    load_instance(path).with_context(|| format!("loading {}", path.display()))
}

fn vector(given: &Option<Vec<f64>>, default: &DVector<f64>, name: &str) -> anyhow::Result<DVector<f64>> {
    match given {
        None => Ok(default.clone()),
        Some(vals) if vals.len() == default.len() => Ok(DVector::from_vec(vals.clone())),
        Some(vals) => anyhow::bail!("--{name} has {} entries, expected {}", vals.len(), default.len()),
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn cone_json(c: &PolyCone<f64>) -> Value {
    json!({
        "dim": c.n,
        "inequalities": rows_of(&c.ineq),
        "equalities": rows_of(&c.eq),
        "rays": c.rays.iter().map(|r| r.as_slice().to_vec()).collect::<Vec<_>>(),
        "lineality": rows_of(&c.lineality.transpose()),
        "span_dim": c.span_dim(),
    })
}

fn to_value<S: Serialize>(s: &S) -> anyhow::Result<Value> {
    Ok(serde_json::to_value(s)?)
}

fn cmd_solve(args: &SolveArgs, inst: &PvsInstance<f64>) -> anyhow::Result<Outcome> {
    let c = &args.common;
    let r = &inst.reference;
    let v = vector(&args.v, &r.v, "v")?;
    let p = vector(&args.p, &r.p, "p")?;
    let q = vector(&args.q, &r.q, "q")?;
    let ov = c.overrides();
    let topts = c.threshold_options(inst);
    let rg = solver::regime(inst, &ov, &topts)?;
    if !(rg.sigma > rg.constants.r) {
        let probe = solver::solve_certified_failure_probe(inst, &v, &p, &q, &ov, &topts)?;
        let status = probe.solvability.as_ref().map_or("not probed".to_string(), |s| format!("{:?}", s.status));
        return Ok(Outcome {
            summary: format!("failure probe: {}; solution set: {status}", probe.message),
            report: json!({ "failure_probe": to_value(&probe)? }),
            exit: EXIT_NEGATIVE,
        });
    }
    let st = solver::setup(inst, &ov, &topts)?;
    let res = solver::solve(inst, &v, &p, &q, &st.config)?;
    Ok(Outcome {
        summary: format!(
            "converged in {} iterations, rate {:.4} (α = {:.4}), residual {:.2e}",
            res.iterations, res.measured_rate, res.alpha, res.inclusion_residual
        ),
        report: json!({ "setup": to_value(&st)?, "result": to_value(&res)? }),
        exit: EXIT_OK,
    })
}

fn cmd_certify_pvc(c: &Common, inst: &PvsInstance<f64>) -> anyhow::Result<Outcome> {
    let d = CertifyOptions::default();
    let opts = CertifyOptions { eta: c.eta.or(inst.config.eta).unwrap_or(d.eta), samples: c.samples.unwrap_or(d.samples), seed: c.seed, ..d };
    let rep = pvc::certify_full_stability(inst, &opts)?;
    let stable = rep.verdict == Verdict::FullyStable;
    let summary = format!(
        "verdict {:?}: MFCQ {} LICQ {} CRCQ {} GSSOSC {} GUSOSC {} SCOC det zero {}{}",
        rep.verdict,
        rep.mfcq.holds,
        rep.licq.holds,
        rep.crcq.holds,
        rep.gssosc.as_ref().map_or("n/a".into(), |g| g.holds.to_string()),
        rep.gusosc.as_ref().map_or("n/a".into(), |g| g.holds.to_string()),
        rep.scoc_det_zero,
        if rep.routes_disagree { " (ROUTES DISAGREE)" } else { "" },
    );
    Ok(Outcome { report: to_value(&rep)?, summary, exit: if stable { EXIT_OK } else { EXIT_NEGATIVE } })
}

fn cmd_certify_pvi(_c: &Common, inst: &PvsInstance<f64>) -> anyhow::Result<Outcome> {
    let closure = pointbased::pvi_positive_definiteness(inst, PviVariant::Closure)?;
    let span = pointbased::pvi_positive_definiteness(inst, PviVariant::CriticalSpan)?;
    let pointbased = if inst.potential.as_box().is_some() { Some(pointbased::check_pointbased_lipschitz(inst)?) } else { None };
    let implication = !closure.holds || span.holds;
    let summary = format!(
        "closure test {} (λ_min {:.4}), critical-span test {} (λ_min {:.4})",
        closure.holds, closure.min_eigenvalue, span.holds, span.min_eigenvalue
    );
    Ok(Outcome {
        report: json!({
            "closure": to_value(&closure)?,
            "critical_span": to_value(&span)?,
            "closure_implies_span": implication,
            "pointbased": pointbased.map(|p| to_value(&p)).transpose()?,
        }),
        summary,
        exit: if span.holds { EXIT_OK } else { EXIT_NEGATIVE },
    })
}

fn cmd_moduli(c: &Common, inst: &PvsInstance<f64>) -> anyhow::Result<Outcome> {
    let cfg = c.sample_config(inst);
    let ov = c.overrides();
    let topts = c.threshold_options(inst);
    let lip = stability::verify_lipschitz_full_stability(inst, &cfg, &ov, &topts)?;
    let hol = stability::verify_holder_full_stability(inst, &cfg, &ov, &topts)?;
    let theory = lip.theory.as_ref();
    let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
    let summary = format!(
        "κ = {:.4}, α = {}, γ₁ = {}, γ₂ = {}, ℓ_est = {:.4e} (ℓ_p {:.2e}, ℓ_q {:.2e}); pass {}",
        lip.kappa,
        fmt(theory.map(|t| t.alpha)),
        fmt(theory.and_then(|t| t.lipschitz_kappa.gamma1)),
        fmt(theory.and_then(|t| t.lipschitz_kappa.gamma2)),
        lip.ell_est,
        lip.ell_p,
        lip.ell_q,
        lip.pass
    );
    let pass = lip.pass;
    Ok(Outcome { report: json!({ "lipschitz": to_value(&lip)?, "holder": to_value(&hol)? }), summary, exit: if pass { EXIT_OK } else { EXIT_NEGATIVE } })
}

fn cmd_threshold(c: &Common, inst: &PvsInstance<f64>) -> anyhow::Result<Outcome> {
    let topts = c.threshold_options(inst);
    let closed = prox::closed_form_threshold(inst)?;
    let center = prox::reference_sample(inst)?;
    let sampled = prox::threshold_estimate_hypomonotone(&inst.potential, &center, topts.eta, topts.samples, topts.seed)?;
    let r = &inst.reference;
    let pointbased = if inst.potential.as_box().is_some() && !inst.potential.depends_on_p() {
        Some(prox::threshold_pointbased_box(&inst.potential, &r.x, &inst.v_hat())?)
    } else {
        None
    };
    let summary = format!(
        "R_est = {:.6} from {} pairs; closed form {}",
        sampled.r_est,
        sampled.pairs,
        closed.as_ref().map_or("none".to_string(), |t| format!("{:.6}", t.r_est))
    );
    Ok(Outcome {
        report: json!({
            "sampled": to_value(&sampled)?,
            "closed_form": closed.map(|t| to_value(&t)).transpose()?,
            "pointbased": pointbased.map(|t| to_value(&t)).transpose()?,
        }),
        summary,
        exit: EXIT_OK,
    })
}

fn cmd_cones(_c: &Common, inst: &PvsInstance<f64>) -> anyhow::Result<Outcome> {
    let r = &inst.reference;
    let set = inst
        .set_at(&r.p)?
        .with_context(|| format!("{} potential has no polyhedral set", inst.potential.kind()))?;
    let vhat = inst.v_hat();
    let k = set.critical_cone(&r.x, &vhat)?;
    let span = k.difference_span();
    let limit = pointbased::cone_limit_polyhedral(&set, &r.x, &vhat, LimitMode::Strong)?;
    let summary = format!("dim span K = {}, dim H = {}, {} extreme rays of K", k.span_dim(), limit.h.span_dim(), k.rays.len());
    Ok(Outcome {
        report: json!({
            "critical_cone": cone_json(&k),
            "critical_span": cone_json(&span),
            "cone_limit": cone_json(&limit.h),
            "note": limit.note,
        }),
        summary,
        exit: EXIT_OK,
    })
}

/// Run one subcommand and assemble its report with the manifest.
pub fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let started = Instant::now();
    let c = cli.command.common();
    let inst = load(&c.instance)?;
    let mut out = match &cli.command {
        Command::Solve(a) => cmd_solve(a, &inst)?,
        Command::CertifyPvc(c) => cmd_certify_pvc(c, &inst)?,
        Command::CertifyPvi(c) => cmd_certify_pvi(c, &inst)?,
        Command::Moduli(c) => cmd_moduli(c, &inst)?,
        Command::Threshold(c) => cmd_threshold(c, &inst)?,
        Command::Cones(c) => cmd_cones(c, &inst)?,
    };
    let manifest = RunManifest {
        command: cli.command.name(),
        instance: c.instance.display().to_string(),
        seed: c.seed,
        eta: c.eta,
        samples: c.samples,
        tol: c.tol,
        overrides: c.overrides(),
        artifact_version: env!("CARGO_PKG_VERSION"),
        wall_clock_seconds: c.record_timing.then(|| started.elapsed().as_secs_f64()),
    };
    let mut report = json!({ "manifest": to_value(&manifest)? });
    let extra = if let Command::Solve(a) = &cli.command { json!({ "v": a.v, "p": a.p, "q": a.q }) } else { Value::Null };
    report["manifest"]["inputs"] = extra;
    report["report"] = std::mem::take(&mut out.report);
    if out.exit == EXIT_NEGATIVE {
        report["exit_code"] = json!(EXIT_NEGATIVE);
    }
    out.report = report;
    Ok(out)
}

/// Apply `--jobs`, run, write the report; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    if let Some(n) = cli.command.common().jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    }
    match run(&cli) {
        Ok(out) => {
            let text = match serde_json::to_string_pretty(&out.report) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_ERROR;
                }
            };
            match &cli.command.common().out {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text + "\n") {
                        eprintln!("error: writing {}: {e}", path.display());
                        return EXIT_ERROR;
                    }
                }
                None => println!("{text}"),
            }
            eprintln!("{}", out.summary);
            out.exit
        }
        Err(e) => {
            let root = e.root_cause().to_string();
            let top = e.to_string();
            if top.contains(&root) {
                eprintln!("error: {top}");
            } else {
                eprintln!("error: {top}: {root}");
            }
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_vector_arguments_parse() {
        let cli = Cli::try_parse_from(["pvstab", "solve", "--instance", "a.json", "--p", "-0.1", "0.2", "--q", "0"]).unwrap();
        let Command::Solve(s) = &cli.command else { panic!("wrong subcommand") };
        assert_eq!(s.p.as_deref(), Some(&[-0.1, 0.2][..]));
        assert_eq!(s.common.seed, 42);
        assert!(Cli::try_parse_from(["pvstab", "cones"]).is_err());
    }

    #[test]
    fn vector_length_is_checked() {
        let d = DVector::from_vec(vec![0.0, 0.0]);
        assert!(vector(&Some(vec![1.0]), &d, "v").is_err());
        assert_eq!(vector(&None, &d, "v").unwrap(), d);
    }
}
