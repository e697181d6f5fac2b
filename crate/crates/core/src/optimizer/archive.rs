use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{ObjectiveVector, Solution};

/// `a` dominates `b`: no worse in every objective, strictly better in one.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    let (a, b) = (a.as_array(), b.as_array());
    let mut strict = false;
    for o in 0..3 {
        if a[o] > b[o] {
            return false;
        }
        strict |= a[o] < b[o];
    }
    strict
}

/// Work counters for the archive maintenance steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub dominance_checks: u64,
    /// Per-objective sort and gap computations during crowding, counted
    /// per entry touched.
    pub crowding_steps: u64,
}

impl OpCounts {
    pub fn total(&self) -> u64 {
        self.dominance_checks + self.crowding_steps
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub solution: Solution,
    pub objectives: ObjectiveVector,
}

/// Bounded set of mutually non-dominated, feasible solutions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoArchive {
    pub entries: Vec<ArchiveEntry>,
    pub capacity: usize,
}

/// Indices of the entries not dominated by any other entry, in input order.
pub fn nondominated_indices(points: &[ObjectiveVector], ops: &mut OpCounts) -> Vec<usize> {
    let mut keep = Vec::with_capacity(points.len());
    'outer: for (i, p) in points.iter().enumerate() {
        for (j, q) in points.iter().enumerate() {
            if i != j {
                ops.dominance_checks += 1;
                if dominates(q, p) {
                    continue 'outer;
                }
            }
        }
        keep.push(i);
    }
    keep
}

/// Crowding distance of each point: the sum over objectives of the
/// normalized gap between its two neighbours in that objective. The
/// extremes of each objective get infinity.
pub fn crowding_distances(points: &[ObjectiveVector], ops: &mut OpCounts) -> Vec<f64> {
    let n = points.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut order: Vec<usize> = (0..n).collect();
    for o in 0..3 {
        let val = |i: usize| points[i].as_array()[o];
        order.sort_by(|&a, &b| val(a).total_cmp(&val(b)).then(a.cmp(&b)));
        ops.crowding_steps += n as u64;
        let (lo, hi) = (val(order[0]), val(order[n - 1]));
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for k in 1..n - 1 {
            dist[order[k]] += (val(order[k + 1]) - val(order[k - 1])) / range;
        }
    }
    dist
}

/// Roulette weight of each entry: one plus the number of entries that are
/// strictly more crowded, so the least crowded entries weigh the most.
pub fn crowding_rank_weights(points: &[ObjectiveVector], ops: &mut OpCounts) -> Vec<f64> {
    let d = crowding_distances(points, ops);
    let mut sorted = d.clone();
    sorted.sort_by(f64::total_cmp);
    d.iter()
        .map(|x| 1.0 + sorted.partition_point(|y| y.total_cmp(x).is_lt()) as f64)
        .collect()
}

/// Index drawn with probability proportional to `weights`.
pub fn roulette_wheel<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let total: f64 = weights.iter().sum();
    if weights.is_empty() || !(total > 0.0) {
        return Err(Error::EmptyArchive);
    }
    let r = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if r < acc {
            return Ok(i);
        }
    }
    Ok(weights.len() - 1)
}

/// Best entry on `g1`, ties broken by smaller `g3`, then smaller `g2`.
pub fn best_g1_index(points: &[ObjectiveVector]) -> Option<usize> {
    (0..points.len()).min_by(|&a, &b| {
        let (p, q) = (&points[a], &points[b]);
        p.neg_secrecy
            .total_cmp(&q.neg_secrecy)
            .then(p.energy.total_cmp(&q.energy))
            .then(p.sidelobe.total_cmp(&q.sidelobe))
            .then(a.cmp(&b))
    })
}

/// Weights of the threshold filter applied to the archive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterWeights {
    pub delta: [f64; 3],
}

impl Default for FilterWeights {
    fn default() -> Self {
        Self { delta: [0.8; 3] }
    }
}

impl ParetoArchive {
    pub fn new(capacity: usize) -> Self {
        Self {
            entries: Vec::new(),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn objectives(&self) -> Vec<ObjectiveVector> {
        self.entries.iter().map(|e| e.objectives).collect()
    }

    /// Merges `pop` and keeps the non-dominated subset. No truncation.
    pub fn merge(&mut self, pop: impl IntoIterator<Item = ArchiveEntry>, ops: &mut OpCounts) {
        let mut all = std::mem::take(&mut self.entries);
        all.extend(pop);
        let points: Vec<ObjectiveVector> = all.iter().map(|e| e.objectives).collect();
        let keep = nondominated_indices(&points, ops);
        let mut keep_iter = keep.into_iter().peekable();
        self.entries = all
            .into_iter()
            .enumerate()
            .filter_map(|(i, e)| {
                if keep_iter.peek() == Some(&i) {
                    keep_iter.next();
                    Some(e)
                } else {
                    None
                }
            })
            .collect();
    }

    /// Evicts the most crowded entry until the archive fits. Crowding ties
    /// evict the entry with the larger `g1` first, so the `g1` optimum stays.
    pub fn truncate(&mut self, ops: &mut OpCounts) {
        while self.entries.len() > self.capacity {
            let points = self.objectives();
            let d = crowding_distances(&points, ops);
            let victim = (0..points.len())
                .min_by(|&a, &b| {
                    d[a].total_cmp(&d[b])
                        .then(points[b].neg_secrecy.total_cmp(&points[a].neg_secrecy))
                        .then(b.cmp(&a))
                })
                .expect("archive over capacity is non-empty");
            self.entries.remove(victim);
        }
    }

    /// Dominance merge followed by crowding truncation.
    pub fn update(&mut self, pop: impl IntoIterator<Item = ArchiveEntry>, ops: &mut OpCounts) {
        self.merge(pop, ops);
        self.truncate(ops);
    }

    /// Threshold filter for iteration `t`. Only the objective `t mod 3` is
    /// active. For `g1` and `g2` (in dB) the threshold is `δ × best`, which
    /// only makes sense for a negative best, so the filter is skipped
    /// otherwise. For `g3` the threshold is `δ3 × worst`. The best entry of
    /// the active objective and the `g1` optimum always survive.
    pub fn sorting_filter(&mut self, t: usize, w: &FilterWeights) {
        let points = self.objectives();
        let Some(g1_best) = best_g1_index(&points) else {
            return;
        };
        let o = t % 3;
        let key = |p: &ObjectiveVector| match o {
            0 => p.neg_secrecy,
            1 => p.f2_db(),
            _ => p.energy,
        };
        let values: Vec<f64> = points.iter().map(key).collect();
        let active_best = (0..values.len())
            .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)))
            .expect("non-empty");
        let zeta = if o == 2 {
            w.delta[2] * values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        } else {
            let best = values[active_best];
            if !(best < 0.0) {
                return;
            }
            w.delta[o] * best
        };
        let mut i = 0;
        self.entries.retain(|_| {
            let keep = i == g1_best || i == active_best || !(values[i] > zeta);
            i += 1;
            keep
        });
    }

    /// Roulette selection weighted by crowding rank.
    pub fn roulette_select<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        ops: &mut OpCounts,
    ) -> Result<&ArchiveEntry> {
        if self.entries.is_empty() {
            return Err(Error::EmptyArchive);
        }
        let w = crowding_rank_weights(&self.objectives(), ops);
        Ok(&self.entries[roulette_wheel(&w, rng)?])
    }

    /// Per-objective best values `(min g1, min g2, min g3)`.
    pub fn best_values(&self) -> Option<[f64; 3]> {
        if self.entries.is_empty() {
            return None;
        }
        let mut best = [f64::INFINITY; 3];
        for e in &self.entries {
            for (b, v) in best.iter_mut().zip(e.objectives.as_array()) {
                *b = b.min(v);
            }
        }
        Some(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ov(a: f64, b: f64, c: f64) -> ObjectiveVector {
        ObjectiveVector::new(a, b, c)
    }

    fn dummy() -> Solution {
        Solution {
            positions: [vec![], vec![]],
            weights: [vec![], vec![]],
            receivers: [0, 0],
        }
    }

    fn entries(points: &[ObjectiveVector]) -> Vec<ArchiveEntry> {
        points
            .iter()
            .map(|&objectives| ArchiveEntry {
                solution: dummy(),
                objectives,
            })
            .collect()
    }

    #[test]
    fn dominance_cases() {
        assert!(dominates(&ov(1.0, 1.0, 1.0), &ov(2.0, 2.0, 2.0)));
        assert!(!dominates(&ov(1.0, 2.0, 0.0), &ov(2.0, 1.0, 0.0)));
        assert!(!dominates(&ov(2.0, 1.0, 0.0), &ov(1.0, 2.0, 0.0)));
        assert!(!dominates(&ov(1.0, 1.0, 1.0), &ov(1.0, 1.0, 1.0)));
    }

    #[test]
    fn incomparable_population_is_kept() {
        let pts: Vec<_> = (0..6).map(|i| ov(i as f64, 5.0 - i as f64, 1.0)).collect();
        let mut a = ParetoArchive::new(10);
        a.update(entries(&pts), &mut OpCounts::default());
        assert_eq!(a.objectives(), pts);
    }

    #[test]
    fn truncation_keeps_extremes() {
        let pts: Vec<_> = (0..10)
            .map(|i| ov(i as f64, 9.0 - i as f64, 0.5 * i as f64 % 2.0))
            .collect();
        let mut a = ParetoArchive::new(5);
        a.update(entries(&pts), &mut OpCounts::default());
        assert_eq!(a.len(), 5);
        let got = a.objectives();
        assert!(got.contains(&pts[0]) && got.contains(&pts[9]));
    }

    #[test]
    fn hand_worked_filter() {
        let mut a = ParetoArchive::new(10);
        a.entries = entries(&[ov(-2.0e6, 0.5, 10.0), ov(-1.5e6, 0.4, 5.0)]);
        a.sorting_filter(0, &FilterWeights::default());
        assert_eq!(a.objectives(), vec![ov(-2.0e6, 0.5, 10.0)]);
    }

    #[test]
    fn filter_uses_active_objective_only() {
        let pts = [
            ov(-2.0e6, 0.9, 1.0),
            ov(-1.0e6, 0.5, 100.0),
            ov(-1.9e6, 0.8, 50.0),
        ];
        let mut a = ParetoArchive::new(10);
        a.entries = entries(&pts);
        // g3: ζ3 = 80, so the 100 J entry goes
        a.sorting_filter(5, &FilterWeights::default());
        assert_eq!(a.objectives(), vec![pts[0], pts[2]]);
    }

    #[test]
    fn filter_skips_nonnegative_best() {
        let pts = [ov(1.0, 0.5, 1.0), ov(2.0, 0.4, 1.0)];
        let mut a = ParetoArchive::new(10);
        a.entries = entries(&pts);
        a.sorting_filter(3, &FilterWeights::default());
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn g1_optimum_survives_other_filters() {
        let pts = [ov(-3.0e6, 0.99, 500.0), ov(-1.0e6, 0.1, 1.0)];
        for t in 0..3 {
            let mut a = ParetoArchive::new(10);
            a.entries = entries(&pts);
            a.sorting_filter(t, &FilterWeights { delta: [0.5; 3] });
            assert!(a.objectives().contains(&pts[0]), "t = {t}");
        }
    }

    #[test]
    fn roulette_three_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut hits = [0usize; 2];
        let n = 100_000;
        for _ in 0..n {
            hits[roulette_wheel(&[3.0, 1.0], &mut rng).unwrap()] += 1;
        }
        let ratio = hits[0] as f64 / hits[1] as f64;
        assert!((ratio / 3.0 - 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn roulette_single_and_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut a = ParetoArchive::new(3);
        let mut ops = OpCounts::default();
        assert!(matches!(
            a.roulette_select(&mut rng, &mut ops),
            Err(Error::EmptyArchive)
        ));
        a.entries = entries(&[ov(1.0, 1.0, 1.0)]);
        for _ in 0..10 {
            assert_eq!(
                a.roulette_select(&mut rng, &mut ops).unwrap().objectives,
                ov(1.0, 1.0, 1.0)
            );
        }
    }

    #[test]
    fn less_crowded_weighs_more() {
        let pts = [
            ov(0.0, 3.0, 0.0),
            ov(1.0, 2.0, 0.0),
            ov(1.1, 1.9, 0.0),
            ov(3.0, 0.0, 0.0),
        ];
        let w = crowding_rank_weights(&pts, &mut OpCounts::default());
        assert!(w[0] > w[1] && w[3] > w[2]);
    }
}
