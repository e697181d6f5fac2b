//! Objectives recomputed term by term from the model definitions and
//! compared with `evaluate`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use secbeam::beamforming::AngularGrid;
use secbeam::channel::secrecy_report;
use secbeam::energy::max_range_speed;
use secbeam::objectives::{evaluate, repair};
use secbeam::scenario::generate_scenario;
use secbeam::{Position3, Scenario, ScenarioSpec, Solution};

const STEP_DEG: f64 = 10.0;

fn small_scenario(seed: u64) -> Scenario {
    let spec = ScenarioSpec {
        n_uav: 4,
        ..ScenarioSpec::desk()
    };
    generate_scenario(seed, &spec).unwrap()
}

fn random_solution(s: &Scenario, rng: &mut ChaCha8Rng) -> Solution {
    let n = s.n_uav();
    let mut x = Solution::at_start(s);
    for i in 0..2 {
        for p in x.positions[i].iter_mut() {
            *p = *p
                + Position3::new(
                    rng.random_range(-4.0..4.0),
                    rng.random_range(-4.0..4.0),
                    rng.random_range(-4.0..4.0),
                );
        }
        for w in x.weights[i].iter_mut() {
            *w = rng.random_range(0.05..1.0);
        }
        x.receivers[i] = rng.random_range(0..n);
    }
    let r = repair(&x, s);
    assert!(r.feasible);
    r.solution
}

struct Array {
    rel: Vec<Position3>,
    w: Vec<f64>,
    phase: Vec<f64>,
    k: f64,
}

impl Array {
    fn steered(pos: &[Position3], w: &[f64], center: Position3, toward: Position3, k: f64) -> Self {
        let rel: Vec<Position3> = pos.iter().map(|p| *p - center).collect();
        let phase = rel.iter().map(|r| -k * r.dot(toward)).collect();
        Array {
            rel,
            w: w.to_vec(),
            phase,
            k,
        }
    }

    fn magnitude(&self, u: Position3) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for j in 0..self.rel.len() {
            let a = self.k * self.rel[j].dot(u) + self.phase[j];
            re += self.w[j] * a.cos();
            im += self.w[j] * a.sin();
        }
        (re * re + im * im).sqrt()
    }
}

fn midpoints(step_deg: f64) -> Vec<(Position3, f64)> {
    let nt = (180.0 / step_deg).round() as usize;
    let np = (360.0 / step_deg).round() as usize;
    let dt = PI / nt as f64;
    let dp = 2.0 * PI / np as f64;
    let mut out = Vec::new();
    for a in 0..nt {
        let th = (a as f64 + 0.5) * dt;
        for b in 0..np {
            let ph = -PI + (b as f64 + 0.5) * dp;
            let u = Position3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
            out.push((u, th.sin() * dt * dp));
        }
    }
    out
}

fn unit(v: Position3) -> Position3 {
    v * (1.0 / v.norm())
}

fn snr(s: &Scenario, i: usize, gain: f64, d: f64) -> f64 {
    let c = &s.channel;
    c.tx_power[i] * c.path_loss_constant * gain * d.powf(-c.path_loss_exponent) / c.noise_power
}

fn rate(b: f64, snr: f64) -> f64 {
    b * (1.0 + snr).log2()
}

/// `(g1, g2, g3, c_e)` by direct evaluation of each model term.
fn oracle(x: &Solution, s: &Scenario) -> (f64, f64, f64, f64) {
    let ch = &s.channel;
    let k = 2.0 * PI / ch.wavelength;
    let grid = midpoints(STEP_DEG);
    let excl_cos = 1f64.to_radians().cos();
    let mut secrecy_known = [0.0; 2];
    let mut secrecy_all = [0.0; 2];
    let mut sll: f64 = 0.0;
    for i in 0..2 {
        let center = Position3::centroid(&x.positions[i]);
        let rx = x.positions[1 - i][x.receivers[i]];
        let toward = unit(rx - center);
        let a = Array::steered(&x.positions[i], &x.weights[i], center, toward, k);
        let integral: f64 = grid
            .iter()
            .map(|(u, dw)| a.magnitude(*u).powi(2) * dw)
            .sum();
        let gain = |u: Position3| 4.0 * PI * ch.efficiency * a.magnitude(u).powi(2) / integral;

        let main = a.magnitude(toward);
        let peak = grid
            .iter()
            .filter(|(u, _)| u.dot(toward) < excl_cos)
            .map(|(u, _)| a.magnitude(*u))
            .fold(0.0, f64::max);
        sll = sll.max(peak / main);

        let r_legit = rate(ch.bandwidth, snr(s, i, gain(toward), center.distance(rx)));
        let eaves_snr = |e: Position3| {
            let d = center.distance(e);
            let elev = ((center.z - e.z) / d).asin().to_degrees();
            let p_los = 1.0 / (1.0 + ch.los_b1 * (-ch.los_b2 * (elev - ch.los_b1)).exp());
            let mu = p_los * ch.mu_los + (1.0 - p_los) * ch.mu_nlos;
            snr(s, i, gain(unit(e - center)), d) / mu
        };
        let known: f64 = s.known_eavesdroppers.iter().map(|e| eaves_snr(*e)).sum();
        let unknown: f64 = s.unknown_eavesdroppers.iter().map(|e| eaves_snr(*e)).sum();
        secrecy_known[i] = r_legit - rate(ch.bandwidth, known);
        secrecy_all[i] = r_legit - rate(ch.bandwidth, known + unknown);
    }

    let e = &s.energy;
    let power = |v: f64| {
        let v0 = e.hover_induced_velocity;
        e.blade_profile_power * (1.0 + 3.0 * v * v / (e.tip_speed * e.tip_speed))
            + e.induced_power
                * ((1.0 + v.powi(4) / (4.0 * v0.powi(4))).sqrt() - v * v / (2.0 * v0 * v0)).sqrt()
            + 0.5
                * e.fuselage_drag_ratio
                * e.air_density
                * e.rotor_solidity
                * e.rotor_disc_area
                * v.powi(3)
    };
    let v = max_range_speed(e);
    let mut energy = 0.0;
    for i in 0..2 {
        for (a, b) in s.swarm_initial_positions[i].iter().zip(&x.positions[i]) {
            let d = a.distance(*b);
            if d > 0.0 {
                energy += (power(v) * d / v + e.mass * e.gravity * (b.z - a.z)).max(0.0);
            }
        }
    }
    (
        -secrecy_known[0].min(secrecy_known[1]),
        sll,
        energy,
        secrecy_all[0].min(secrecy_all[1]),
    )
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn objectives_match_direct_evaluation() {
    let grid = AngularGrid::uniform(STEP_DEG);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for seed in [3, 4, 5] {
        let s = small_scenario(seed);
        for _ in 0..4 {
            let x = random_solution(&s, &mut rng);
            let got = evaluate(&x, &s, &grid).unwrap();
            let sec = secrecy_report(&x, &s, &grid).unwrap();
            let (g1, g2, g3, c_e) = oracle(&x, &s);
            assert!(
                close(got.neg_secrecy, g1, 1e-9),
                "g1 {} vs {g1}",
                got.neg_secrecy
            );
            assert!(close(got.sidelobe, g2, 1e-9), "g2 {} vs {g2}", got.sidelobe);
            assert!(close(got.energy, g3, 1e-9), "g3 {} vs {g3}", got.energy);
            assert!(close(sec.c_e, c_e, 1e-9), "C_E {} vs {c_e}", sec.c_e);
        }
    }
}

#[test]
fn start_positions_cost_nothing() {
    let s = small_scenario(9);
    let x = Solution::at_start(&s);
    let g = evaluate(&x, &s, &AngularGrid::uniform(STEP_DEG)).unwrap();
    assert_eq!(g.energy, 0.0);
}

#[test]
fn frozen_reference_values() {
    let s = small_scenario(12);
    let x = Solution::at_start(&s);
    let g = evaluate(&x, &s, &AngularGrid::uniform(STEP_DEG)).unwrap();
    let want = [-650592.4076008829, 0.9932063405636145, 0.0];
    for (got, want) in g.as_array().into_iter().zip(want) {
        assert!(close(got, want, 1e-9) || got == want, "{got} vs {want}");
    }
}
