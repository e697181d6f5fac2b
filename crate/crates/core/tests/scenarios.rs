use secbeam::scenario::{condition_vector, generate_scenario};
use secbeam::ScenarioSpec;

#[test]
fn thousand_seeds_hold_every_invariant() {
    let spec = ScenarioSpec::default();
    for seed in 0..1000 {
        let s = generate_scenario(seed, &spec).unwrap();
        s.validate().unwrap();
        assert_eq!(s.n_uav(), 16);
        assert_eq!(s.known_eavesdroppers.len(), 4);
        assert_eq!(s.unknown_eavesdroppers.len(), 2);
        for (i, swarm) in s.swarm_initial_positions.iter().enumerate() {
            for (a, p) in swarm.iter().enumerate() {
                assert!(s.area_bounds[i].contains(*p));
                assert!((70.0..=120.0).contains(&p.z));
                for q in &swarm[a + 1..] {
                    assert!(p.distance(*q) >= s.d_min, "seed {seed}");
                }
            }
        }
        assert!(s.area_bounds[0].is_disjoint(&s.area_bounds[1]));
        for e in s.all_eavesdroppers() {
            assert_eq!(e.z, 0.0);
        }
        assert!(condition_vector(&s).iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn tight_area_still_places_two() {
    let spec = ScenarioSpec {
        n_uav: 2,
        area_side: 0.6,
        d_min: 0.5,
        ..ScenarioSpec::default()
    };
    let s = generate_scenario(7, &spec).unwrap();
    for sw in &s.swarm_initial_positions {
        assert_eq!(sw.len(), 2);
        assert!(sw[0].distance(sw[1]) >= 0.5);
    }
}

#[test]
fn same_seed_same_scenario() {
    let spec = ScenarioSpec::desk();
    assert_eq!(
        generate_scenario(42, &spec).unwrap(),
        generate_scenario(42, &spec).unwrap()
    );
}
