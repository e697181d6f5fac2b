use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::objectives::{repair, RepairOutcome, Solution};
use crate::scenario::{Position3, Scenario};

/// Stepwise growth of the ant-lion shrink ratio
/// `I(t) = 1 + 10^w · t / t_max`, where `w` is the exponent of the last
/// threshold that `t / t_max` has exceeded (`I = 1` before the first one).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShrinkSchedule {
    pub thresholds: Vec<f64>,
    pub exponents: Vec<f64>,
}

impl Default for ShrinkSchedule {
    fn default() -> Self {
        Self {
            thresholds: vec![0.1, 0.5, 0.75, 0.9, 0.95],
            exponents: vec![1.0, 2.0, 3.0, 4.0, 5.0],
        }
    }
}

impl ShrinkSchedule {
    pub fn ratio(&self, t: usize, t_max: usize) -> f64 {
        let r = t as f64 / t_max.max(1) as f64;
        let mut w = None;
        for (th, e) in self.thresholds.iter().zip(&self.exponents) {
            if r > *th {
                w = Some(*e);
            }
        }
        match w {
            Some(w) => 1.0 + 10f64.powf(w) * r,
            None => 1.0,
        }
    }

    pub fn is_monotone(&self) -> bool {
        self.thresholds.len() == self.exponents.len()
            && self.thresholds.windows(2).all(|p| p[0] < p[1])
            && self.exponents.windows(2).all(|p| p[0] <= p[1])
            && self.exponents.iter().all(|e| e.is_finite())
    }
}

/// Value at step `t` of a `±1` random walk of `len` steps (with a leading
/// zero), min-max mapped onto `[lo, hi]`.
pub fn bounded_walk<R: Rng + ?Sized>(len: usize, t: usize, lo: f64, hi: f64, rng: &mut R) -> f64 {
    let (mut pos, mut min, mut max, mut at_t) = (0i64, 0i64, 0i64, 0i64);
    let mut bits = 0u64;
    for k in 0..len {
        if k % 64 == 0 {
            bits = rng.random();
        }
        pos += if bits & 1 == 1 { 1 } else { -1 };
        bits >>= 1;
        min = min.min(pos);
        max = max.max(pos);
        if k + 1 == t {
            at_t = pos;
        }
    }
    if max == min {
        return 0.5 * (lo + hi);
    }
    lo + (at_t - min) as f64 * (hi - lo) / (max - min) as f64
}

/// One draw of the elite/inertia/random receiver rule for a single swarm.
pub fn integer_update_one(
    u_elite: usize,
    u_own: usize,
    n_uav: usize,
    r: f64,
    rng: &mut (impl Rng + ?Sized),
) -> usize {
    if r < 1.0 / 3.0 {
        u_elite
    } else if r < 2.0 / 3.0 {
        u_own
    } else {
        rng.random_range(0..n_uav)
    }
}

/// Receiver update, drawn independently for each swarm.
pub fn integer_update<R: Rng + ?Sized>(
    u_elite: [usize; 2],
    u_own: [usize; 2],
    n_uav: usize,
    rng: &mut R,
) -> [usize; 2] {
    let mut out = [0; 2];
    for i in 0..2 {
        let r = rng.random::<f64>();
        out[i] = integer_update_one(u_elite[i], u_own[i], n_uav, r, rng);
    }
    out
}

/// Walk guide around the elite `x_a`: each continuous coordinate follows a
/// bounded random walk on an interval of width `range / I(t)` centred on
/// the elite's value.
pub fn walk_guide<R: Rng + ?Sized>(
    x_a: &Solution,
    s: &Scenario,
    t: usize,
    t_max: usize,
    schedule: &ShrinkSchedule,
    rng: &mut R,
) -> Solution {
    let ratio = schedule.ratio(t, t_max);
    let len = t_max.max(1);
    let mut guide = x_a.clone();
    for i in 0..2 {
        let ext = s.area_bounds[i].extent();
        for p in &mut guide.positions[i] {
            let mut c = [p.x, p.y, p.z];
            for (v, w) in c.iter_mut().zip([ext.x, ext.y, ext.z]) {
                let half = 0.5 * w / ratio;
                *v = bounded_walk(len, t, *v - half, *v + half, rng);
            }
            *p = Position3::new(c[0], c[1], c[2]);
        }
        for w in &mut guide.weights[i] {
            let half = 0.5 / ratio;
            *w = bounded_walk(len, t, *w - half, *w + half, rng);
        }
    }
    guide
}

/// Continuous part is the mean of the walk guide and the elite, the
/// receivers follow [`integer_update`], and the result is repaired.
pub fn antlion_update<R: Rng + ?Sized>(
    x_own: &Solution,
    x_a: &Solution,
    s: &Scenario,
    t: usize,
    t_max: usize,
    schedule: &ShrinkSchedule,
    rng: &mut R,
) -> RepairOutcome {
    let guide = walk_guide(x_a, s, t, t_max, schedule, rng);
    let mut x = midpoint(&guide, x_a);
    x.receivers = integer_update(x_a.receivers, x_own.receivers, s.n_uav(), rng);
    repair(&x, s)
}

fn midpoint(a: &Solution, b: &Solution) -> Solution {
    let mut out = a.clone();
    for i in 0..2 {
        for (p, q) in out.positions[i].iter_mut().zip(&b.positions[i]) {
            *p = (*p + *q) * 0.5;
        }
        for (w, v) in out.weights[i].iter_mut().zip(&b.weights[i]) {
            *w = 0.5 * (*w + v);
        }
    }
    out
}

/// Cold-start population: candidate `n` drifts from the start positions by
/// the `n`-th value of a per-coordinate `±1` walk (candidate 0 does not
/// move), rescaled so each coordinate's largest offset equals
/// `drift_radius`. Weights are uniform and receivers uniform over the
/// opposite swarm. Returned unrepaired.
pub fn random_walk_candidates<R: Rng + ?Sized>(
    s: &Scenario,
    n: usize,
    drift_radius: f64,
    rng: &mut R,
) -> Vec<Solution> {
    let n_uav = s.n_uav();
    let mut pop: Vec<Solution> = (0..n).map(|_| Solution::at_start(s)).collect();
    if n == 0 {
        return pop;
    }
    for i in 0..2 {
        for j in 0..n_uav {
            for axis in 0..3 {
                let mut walk = vec![0.0f64; n];
                for k in 1..n {
                    let step = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    walk[k] = walk[k - 1] + step;
                }
                let peak = walk.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let scale = if peak > 0.0 { drift_radius / peak } else { 0.0 };
                for (x, w) in pop.iter_mut().zip(&walk) {
                    let p = &mut x.positions[i][j];
                    match axis {
                        0 => p.x += w * scale,
                        1 => p.y += w * scale,
                        _ => p.z += w * scale,
                    }
                }
            }
        }
    }
    for x in &mut pop {
        for i in 0..2 {
            for w in &mut x.weights[i] {
                *w = rng.random();
            }
            let u = (rng.random::<f64>() * n_uav as f64).round() as usize;
            x.receivers[i] = u.clamp(1, n_uav) - 1;
        }
    }
    pop
}

/// [`random_walk_candidates`] followed by repair.
pub fn random_walk_init<R: Rng + ?Sized>(
    s: &Scenario,
    n: usize,
    drift_radius: f64,
    rng: &mut R,
) -> Vec<RepairOutcome> {
    random_walk_candidates(s, n, drift_radius, rng)
        .iter()
        .map(|x| repair(x, s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::is_feasible;
    use crate::scenario::{generate_scenario, ScenarioSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scen() -> Scenario {
        generate_scenario(3, &ScenarioSpec::desk()).unwrap()
    }

    #[test]
    fn schedule_is_monotone() {
        let s = ShrinkSchedule::default();
        assert!(s.is_monotone());
        assert_eq!(s.ratio(0, 100), 1.0);
        assert_eq!(s.ratio(10, 100), 1.0);
        assert!((s.ratio(11, 100) - 2.1).abs() < 1e-12);
        let mut prev = 0.0;
        for t in 0..=500 {
            let r = s.ratio(t, 500);
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn walk_stays_in_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for t in 0..50 {
            let v = bounded_walk(50, t, -2.0, 3.0, &mut rng);
            assert!((-2.0..=3.0).contains(&v));
        }
        assert_eq!(bounded_walk(10, 4, 1.5, 1.5, &mut rng), 1.5);
    }

    #[test]
    fn zero_width_walk_returns_elite() {
        let s = scen();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x_a = repair(&random_walk_candidates(&s, 3, 2.0, &mut rng)[2], &s).solution;
        // a huge shrink ratio collapses the interval onto the elite
        let sched = ShrinkSchedule {
            thresholds: vec![0.0],
            exponents: vec![300.0],
        };
        let out = antlion_update(&x_a, &x_a, &s, 5, 10, &sched, &mut rng);
        for i in 0..2 {
            for (p, q) in out.solution.positions[i].iter().zip(&x_a.positions[i]) {
                assert!(p.distance(*q) < 1e-9);
            }
            for (w, v) in out.solution.weights[i].iter().zip(&x_a.weights[i]) {
                assert!((w - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn integer_branches() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(integer_update_one(3, 5, 8, 0.1, &mut rng), 3);
        assert_eq!(integer_update_one(3, 5, 8, 0.5, &mut rng), 5);
        for _ in 0..100 {
            assert!(integer_update_one(3, 5, 8, 0.9, &mut rng) < 8);
        }
    }

    #[test]
    fn drift_bounds_and_determinism() {
        let s = scen();
        let a = random_walk_candidates(&s, 20, 5.0, &mut ChaCha8Rng::seed_from_u64(2));
        let b = random_walk_candidates(&s, 20, 5.0, &mut ChaCha8Rng::seed_from_u64(2));
        assert_eq!(a, b);
        assert_eq!(a[0].positions, s.swarm_initial_positions);
        for x in &a {
            for i in 0..2 {
                for (p, q) in x.positions[i].iter().zip(&s.swarm_initial_positions[i]) {
                    let d = *p - *q;
                    assert!(
                        d.x.abs() <= 5.0 + 1e-12
                            && d.y.abs() <= 5.0 + 1e-12
                            && d.z.abs() <= 5.0 + 1e-12
                    );
                }
                assert!(x.receivers[i] < s.n_uav());
            }
        }
    }

    #[test]
    fn zero_drift_stays_home() {
        let s = scen();
        for out in random_walk_init(&s, 6, 0.0, &mut ChaCha8Rng::seed_from_u64(4)) {
            assert!(out.feasible);
            assert_eq!(out.solution.positions, s.swarm_initial_positions);
        }
    }

    #[test]
    fn updates_stay_feasible() {
        let s = scen();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pop: Vec<Solution> = random_walk_init(&s, 10, 5.0, &mut rng)
            .into_iter()
            .map(|o| o.solution)
            .collect();
        let sched = ShrinkSchedule::default();
        for k in 0..2000 {
            let t = k % 50;
            let out = antlion_update(
                &pop[k % 10],
                &pop[(k * 7) % 10],
                &s,
                t,
                50,
                &sched,
                &mut rng,
            );
            assert!(out.feasible && is_feasible(&out.solution, &s));
        }
    }
}
