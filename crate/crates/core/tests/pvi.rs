mod common;

use common::{fixture, pvi_polyhedral};

use pvstab::pointbased::{self, PviVariant};
use pvstab::prox::ThresholdOptions;
use pvstab::solver::SolverOverrides;
use pvstab::stability::{self, SampleConfig};

#[test]
fn refined_tests_on_random_polyhedral_instances() {
    let cfg = SampleConfig { count: 100, ..Default::default() };
    let mut stable = 0;
    for seed in 0..20 {
        let inst = pvi_polyhedral(seed);
        let closure = pointbased::pvi_positive_definiteness(&inst, PviVariant::Closure).unwrap();
        let span = pointbased::pvi_positive_definiteness(&inst, PviVariant::CriticalSpan).unwrap();
        assert!(!closure.holds || span.holds, "seed {seed}: closure test without span test");
        if span.holds {
            stable += 1;
            let rep = stability::verify_lipschitz_full_stability(&inst, &cfg, &SolverOverrides::default(), &ThresholdOptions::default()).unwrap();
            assert!(rep.pass, "seed {seed}: {:?}", rep.canonical);
        }
    }
    assert!(stable > 0);
}

#[test]
fn box_fixture_reports() {
    let inst = fixture("box.json");
    let span = pointbased::pvi_positive_definiteness(&inst, PviVariant::CriticalSpan).unwrap();
    assert!(span.holds);
    assert_eq!(span.subspace_dim, 1);
    let pb = pointbased::check_pointbased_lipschitz(&inst).unwrap();
    assert!(pb.holds);
}
