use pvstab::model::load_instance;
use pvstab::prox::ThresholdOptions;
use pvstab::pvc::{self, CertifyOptions, Verdict};
use pvstab::solver::{self, SolverOverrides};
use pvstab::Instance32;

fn fixture32(name: &str) -> Instance32 {
    load_instance(format!("{}/../cli/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn single_precision_solve() {
    let inst = fixture32("aqvi1.json");
    let st = solver::setup(&inst, &SolverOverrides::default(), &ThresholdOptions::default()).unwrap();
    let r = &inst.reference;
    let res = solver::solve(&inst, &r.v, &r.p, &r.q, &st.config).unwrap();
    assert!((res.x[0] - 1.0).abs() < 1e-4 && res.x[1].abs() < 1e-4);
    assert!(res.measured_rate <= st.factor.alpha + 0.01);
}

#[test]
fn single_precision_certificate() {
    let inst = fixture32("curvature.json");
    let rep = pvc::certify_full_stability(&inst, &CertifyOptions { samples: 100, ..Default::default() }).unwrap();
    assert_eq!(rep.verdict, Verdict::FullyStable);
    assert!(!rep.licq.holds);
    assert_eq!(rep.multipliers.vertices.len(), 2);
}
