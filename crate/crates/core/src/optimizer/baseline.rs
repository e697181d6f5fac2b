use rand::Rng;

use crate::objectives::{repair, RepairOutcome, Solution};
use crate::scenario::{Position3, Scenario};

/// Smallest multiple of `λ/2` that is at least `d_min`.
pub fn laa_spacing(wavelength: f64, d_min: f64) -> f64 {
    let half = 0.5 * wavelength;
    let k = (d_min / half - 1e-12).ceil().max(1.0);
    k * half
}

/// Uniform line along `y` through each swarm's centroid at its mean
/// altitude, before clamping and repair.
pub fn laa_positions(s: &Scenario) -> [Vec<Position3>; 2] {
    let spacing = laa_spacing(s.channel.wavelength, s.d_min);
    let line = |start: &[Position3]| {
        let c = Position3::centroid(start);
        let mid = (start.len() as f64 - 1.0) / 2.0;
        (0..start.len())
            .map(|k| Position3::new(c.x, c.y + (k as f64 - mid) * spacing, c.z))
            .collect::<Vec<_>>()
    };
    [
        line(&s.swarm_initial_positions[0]),
        line(&s.swarm_initial_positions[1]),
    ]
}

/// Each swarm forms a linear array with full excitation and aims at a
/// random UAV of the other swarm.
pub fn laa_swarm_baseline<R: Rng + ?Sized>(s: &Scenario, rng: &mut R) -> RepairOutcome {
    let n = s.n_uav();
    let x = Solution {
        positions: laa_positions(s),
        weights: [vec![1.0; n], vec![1.0; n]],
        receivers: [rng.random_range(0..n), rng.random_range(0..n)],
    };
    repair(&x, s)
}
