mod common;

use common::{normal_at, polyhedron_through_origin};
use nalgebra::DVector;
use proptest::prelude::*;

use pvstab::pointbased::coderivative::{coderivative_interval, CoderivativeKind};
use pvstab::pointbased::oracle::{interval_grid, interval_oracle};
use pvstab::pointbased::{cone_limit_polyhedral, LimitMode};
use pvstab::polyhedra::limits::{oracle_contains, sampled_critical_cones};
use pvstab::polyhedra::Polyhedron;
use pvstab::sampling::{gaussian, stream};

/// Membership probes: half drawn from `H`, half generic.
pub fn cone_identity_disagreements(seed: u64, probes: usize) -> usize {
    let mut rng = stream(seed, 3);
    let (c, active) = polyhedron_through_origin(&mut rng);
    let x = DVector::zeros(3);
    let v = normal_at(&mut rng, &c, &active);
    let h = cone_limit_polyhedral(&c, &x, &v, LimitMode::Strong).unwrap().h;
    let samples = sampled_critical_cones(&c, &x, &v, 1e-3).unwrap();
    let basis = h.span_basis();
    let mut bad = 0;
    for k in 0..probes {
        let w = if k % 2 == 0 && basis.ncols() > 0 { &basis * gaussian::<f64>(&mut rng, basis.ncols()) } else { gaussian(&mut rng, 3) };
        let face = h.contains(&w, 1e-7);
        let oracle = oracle_contains(&samples, &w, 1e-6).unwrap();
        if face != oracle {
            bad += 1;
        }
    }
    bad
}

#[test]
fn cone_identity_on_random_polyhedra() {
    for seed in 0..20 {
        assert_eq!(cone_identity_disagreements(seed, 100), 0, "seed {seed}");
    }
}

#[test]
fn coderivative_tables_match_the_graph_oracle() {
    let inf = f64::INFINITY;
    for (a, b) in [(0.0, 1.0), (0.0, inf), (-inf, 0.0)] {
        for (x, u) in interval_grid(a, b) {
            for w in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                let reg = coderivative_interval(a, b, x, u, w, CoderivativeKind::Regular).unwrap();
                let lim = coderivative_interval(a, b, x, u, w, CoderivativeKind::Limiting).unwrap();
                assert_eq!(reg, interval_oracle(a, b, x, u, w, CoderivativeKind::Regular), "[{a},{b}] ({x},{u}) w={w} regular");
                assert_eq!(lim, interval_oracle(a, b, x, u, w, CoderivativeKind::Limiting), "[{a},{b}] ({x},{u}) w={w} limiting");
                assert!(reg.is_subset(lim));
            }
        }
    }
}

proptest! {
    #[test]
    fn projection_is_nonexpansive(seed in 0u64..5000) {
        let mut rng = stream(seed, 5);
        let (c, _) = polyhedron_through_origin(&mut rng);
        let (y1, y2) = (gaussian::<f64>(&mut rng, 3), gaussian::<f64>(&mut rng, 3));
        let (p1, p2) = (c.project(&y1).unwrap(), c.project(&y2).unwrap());
        prop_assert!((&p1 - &p2).norm() <= (&y1 - &y2).norm() + 1e-9);
        prop_assert!(c.contains(&p1, 1e-9));
        // y − Π(y) is normal at Π(y)
        prop_assert!(c.normal_residual(&p1, &(&y1 - &p1)) <= 1e-7);
    }

    #[test]
    fn critical_span_contains_the_cone(seed in 0u64..5000) {
        let mut rng = stream(seed, 6);
        let (c, active) = polyhedron_through_origin(&mut rng);
        let x = DVector::zeros(3);
        let v = normal_at(&mut rng, &c, &active);
        let k = c.critical_cone(&x, &v).unwrap();
        let span = k.difference_span();
        for r in &k.rays {
            prop_assert!(span.contains(r, 1e-7));
            prop_assert!(k.contains(r, 1e-7));
        }
    }
}

#[test]
fn orthant_box_round_trip() {
    let c = Polyhedron::<f64>::from_box(&DVector::from_vec(vec![0.0, 0.0]), &DVector::from_vec(vec![1.0, 1.0])).unwrap();
    assert_eq!(c.vertices().len(), 4);
}
