use std::f64::consts::PI;

use proptest::prelude::*;
use secbeam::beamforming::{
    antenna_gain, array_factor, AngularGrid, ArrayState, SphericalDirection,
};
use secbeam::channel::secrecy_report;
use secbeam::objectives::{is_feasible, repair};
use secbeam::scenario::{generate_scenario, ElementPattern};
use secbeam::{Position3, Scenario, ScenarioSpec, Solution};

fn scenario() -> Scenario {
    let spec = ScenarioSpec {
        n_uav: 4,
        ..ScenarioSpec::desk()
    };
    generate_scenario(2, &spec).unwrap()
}

fn offsets(n: usize) -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((-60.0..60.0, -60.0..60.0, -60.0..60.0), 2 * n)
}

fn solution_from(s: &Scenario, d: &[(f64, f64, f64)], w: &[f64], u: [usize; 2]) -> Solution {
    let n = s.n_uav();
    let mut x = Solution::at_start(s);
    for i in 0..2 {
        for j in 0..n {
            let (a, b, c) = d[i * n + j];
            x.positions[i][j] = x.positions[i][j] + Position3::new(a, b, c);
            x.weights[i][j] = w[i * n + j];
        }
    }
    x.receivers = u;
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn repair_is_idempotent(
        d in offsets(4),
        w in prop::collection::vec(-0.5..1.5f64, 8),
        u0 in 0usize..6,
        u1 in 0usize..6,
    ) {
        let s = scenario();
        let once = repair(&solution_from(&s, &d, &w, [u0, u1]), &s);
        prop_assume!(once.feasible);
        prop_assert!(is_feasible(&once.solution, &s));
        let twice = repair(&once.solution, &s);
        prop_assert!(twice.feasible);
        prop_assert_eq!(twice.solution, once.solution);
    }

    #[test]
    fn known_secrecy_bounds_achievable_secrecy(
        d in offsets(4),
        w in prop::collection::vec(0.05..1.0f64, 8),
        u0 in 0usize..4,
        u1 in 0usize..4,
    ) {
        let s = scenario();
        let r = repair(&solution_from(&s, &d, &w, [u0, u1]), &s);
        prop_assume!(r.feasible);
        let rep = secrecy_report(&r.solution, &s, &AngularGrid::uniform(10.0)).unwrap();
        prop_assert!(rep.c_e <= rep.c_ke);
    }

    #[test]
    fn weight_scaling_is_homogeneous(
        pts in prop::collection::vec((0.0..30.0, 0.0..30.0, 70.0..90.0f64), 6),
        w in prop::collection::vec(0.1..1.0f64, 6),
        scale in 0.01..1.0f64,
        theta in 0.0..PI,
        phi in -PI..PI,
    ) {
        let pos: Vec<Position3> = pts.iter().map(|&(x, y, z)| Position3::new(x, y, z)).collect();
        let scaled: Vec<f64> = w.iter().map(|v| v * scale).collect();
        let a = ArrayState::new(pos.clone(), w).unwrap();
        let b = ArrayState::new(pos, scaled).unwrap();
        let d = SphericalDirection::new(theta, phi).unwrap();
        let lambda = 0.3276;
        let (fa, fb) = (array_factor(&a, d, lambda).norm(), array_factor(&b, d, lambda).norm());
        prop_assert!((fb - scale * fa).abs() <= 1e-12 * scale * fa.max(1e-3));
        let grid = AngularGrid::uniform(10.0);
        let ga = antenna_gain(&a, d, lambda, 1.0, ElementPattern::Isotropic, &grid).unwrap();
        let gb = antenna_gain(&b, d, lambda, 1.0, ElementPattern::Isotropic, &grid).unwrap();
        prop_assert!((ga - gb).abs() <= 1e-12 * ga.max(1e-3));
    }
}
