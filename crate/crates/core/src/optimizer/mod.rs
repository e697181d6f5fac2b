//! Pareto archive, the ant lion evolution loop with the sorting filter and
//! the integer receiver update, the random-walk initializer and the two
//! baselines (vanilla MOALO and a linear array per swarm).

mod archive;
mod baseline;
mod operators;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamforming::AngularGrid;
use crate::error::{Error, Result};
use crate::objectives::{evaluate, ObjectiveVector, RepairOutcome, Solution};
use crate::rng::{stream, Purpose};
use crate::scenario::Scenario;

pub use archive::{
    best_g1_index, crowding_distances, crowding_rank_weights, dominates, nondominated_indices,
    roulette_wheel, ArchiveEntry, FilterWeights, OpCounts, ParetoArchive,
};
pub use baseline::{laa_positions, laa_spacing, laa_swarm_baseline};
pub use operators::{
    antlion_update, bounded_walk, integer_update, integer_update_one, random_walk_candidates,
    random_walk_init, walk_guide, ShrinkSchedule,
};

/// Early stop once one archive entry meets all three bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopThresholds {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    /// N
    pub population: usize,
    pub max_iterations: usize,
    /// N_Arc; defaults to the population size.
    pub archive_capacity: Option<usize>,
    pub filter: FilterWeights,
    /// Apply the sorting filter each iteration (off for vanilla MOALO).
    pub sorting_filter: bool,
    pub shrink: ShrinkSchedule,
    /// Largest per-coordinate offset of the random-walk initializer, m.
    pub drift_radius: f64,
    pub seed: u64,
    pub stop: Option<StopThresholds>,
    pub grid: AngularGrid,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population: 50,
            max_iterations: 500,
            archive_capacity: None,
            filter: FilterWeights::default(),
            sorting_filter: true,
            shrink: ShrinkSchedule::default(),
            drift_radius: 5.0,
            seed: 1,
            stop: None,
            grid: AngularGrid::standard(),
        }
    }
}

impl EvolutionConfig {
    /// Reduced setting used by the desk-scale experiments.
    pub fn desk() -> Self {
        Self {
            population: 30,
            max_iterations: 100,
            grid: AngularGrid::desk(),
            ..Self::default()
        }
    }

    pub fn capacity(&self) -> usize {
        self.archive_capacity.unwrap_or(self.population)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.population < 2 {
            return bad("population must be at least 2");
        }
        if self.max_iterations < 1 {
            return bad("max_iterations must be at least 1");
        }
        if self.capacity() < 1 {
            return bad("archive capacity must be positive");
        }
        if self.filter.delta.iter().any(|d| !(0.0..=1.0).contains(d)) {
            return bad("filter weights must lie in [0, 1]");
        }
        if !self.shrink.is_monotone() {
            return bad(
                "shrink schedule must have increasing thresholds and non-decreasing exponents",
            );
        }
        if !(self.drift_radius >= 0.0 && self.drift_radius.is_finite()) {
            return bad("drift_radius must be a non-negative number");
        }
        self.grid.validate()
    }
}

/// One row of the convergence trace, taken after the archive update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub best_g1: f64,
    pub best_g2: f64,
    pub best_g3: f64,
    pub archive_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub archive: ParetoArchive,
    pub trace: Vec<TraceRow>,
    pub ops: OpCounts,
    pub evaluations: usize,
    pub stopped_early: bool,
}

/// Cold-start population from the random-walk initializer.
pub fn cold_population(s: &Scenario, cfg: &EvolutionConfig) -> Vec<RepairOutcome> {
    let mut rng = stream(cfg.seed, Purpose::Init, 0, 0);
    random_walk_init(s, cfg.population, cfg.drift_radius, &mut rng)
}

fn evaluate_population(
    pop: &[RepairOutcome],
    s: &Scenario,
    grid: &AngularGrid,
) -> Result<Vec<Option<ObjectiveVector>>> {
    pop.par_iter()
        .map(|c| {
            if c.feasible {
                evaluate(&c.solution, s, grid).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect()
}

/// Evolution loop. Infeasible candidates never enter the archive. `init`
/// is resized to `cfg.population` by cycling if its length differs.
pub fn run(s: &Scenario, cfg: &EvolutionConfig, init: Vec<RepairOutcome>) -> Result<RunOutput> {
    cfg.validate()?;
    if init.is_empty() {
        return Err(Error::InvalidConfig("initial population is empty".into()));
    }
    let n = cfg.population;
    let mut pop: Vec<RepairOutcome> = init.iter().cycle().take(n).cloned().collect();
    let mut archive = ParetoArchive::new(cfg.capacity());
    let mut ops = OpCounts::default();
    let mut trace = Vec::with_capacity(cfg.max_iterations);
    let mut evaluations = 0;
    let mut stopped_early = false;
    for t in 0..cfg.max_iterations {
        let objs = evaluate_population(&pop, s, &cfg.grid)?;
        evaluations += pop.iter().filter(|c| c.feasible).count();
        let fresh = pop.iter().zip(objs).filter_map(|(c, o)| {
            o.map(|objectives| ArchiveEntry {
                solution: c.solution.clone(),
                objectives,
            })
        });
        archive.merge(fresh, &mut ops);
        if cfg.sorting_filter {
            archive.sorting_filter(t, &cfg.filter);
        }
        archive.truncate(&mut ops);
        let best = archive.best_values().ok_or(Error::EmptyArchive)?;
        trace.push(TraceRow {
            t,
            best_g1: best[0],
            best_g2: best[1],
            best_g3: best[2],
            archive_size: archive.len(),
        });
        if let Some(th) = cfg.stop {
            let met = archive.entries.iter().any(|e| {
                let o = e.objectives;
                o.neg_secrecy <= th.g1 && o.sidelobe <= th.g2 && o.energy <= th.g3
            });
            if met {
                stopped_early = true;
                break;
            }
        }
        if t + 1 == cfg.max_iterations {
            break;
        }
        let weights = crowding_rank_weights(&archive.objectives(), &mut ops);
        pop = pop
            .par_iter()
            .enumerate()
            .map(|(k, own)| {
                let mut rng = stream(cfg.seed, Purpose::Update, t as u64, k as u64);
                let elite = &archive.entries[roulette_wheel(&weights, &mut rng)?].solution;
                Ok(antlion_update(
                    &own.solution,
                    elite,
                    s,
                    t,
                    cfg.max_iterations,
                    &cfg.shrink,
                    &mut rng,
                ))
            })
            .collect::<Result<_>>()?;
    }
    Ok(RunOutput {
        archive,
        trace,
        ops,
        evaluations,
        stopped_early,
    })
}

/// The evolution loop without the sorting filter.
pub fn vanilla_moalo_run(
    s: &Scenario,
    cfg: &EvolutionConfig,
    init: Vec<RepairOutcome>,
) -> Result<RunOutput> {
    let cfg = EvolutionConfig {
        sorting_filter: false,
        ..cfg.clone()
    };
    run(s, &cfg, init)
}

/// Feasible solutions of a population with their objectives.
pub fn evaluated(pop: &[Solution], s: &Scenario, grid: &AngularGrid) -> Result<Vec<ArchiveEntry>> {
    pop.par_iter()
        .map(|x| {
            Ok(ArchiveEntry {
                solution: x.clone(),
                objectives: evaluate(x, s, grid)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_scenario, ScenarioSpec};

    fn tiny() -> (Scenario, EvolutionConfig) {
        let s = generate_scenario(
            11,
            &ScenarioSpec {
                n_uav: 4,
                ..ScenarioSpec::desk()
            },
        )
        .unwrap();
        let cfg = EvolutionConfig {
            population: 4,
            max_iterations: 1,
            grid: AngularGrid::uniform(10.0).refined(2.0, 0.2),
            ..EvolutionConfig::desk()
        };
        (s, cfg)
    }

    #[test]
    fn single_iteration_keeps_nondominated_init() {
        let (s, cfg) = tiny();
        let init = cold_population(&s, &cfg);
        let out = vanilla_moalo_run(&s, &cfg, init.clone()).unwrap();
        let pts: Vec<ObjectiveVector> = init
            .iter()
            .map(|c| evaluate(&c.solution, &s, &cfg.grid).unwrap())
            .collect();
        let keep = nondominated_indices(&pts, &mut OpCounts::default());
        let want: Vec<ObjectiveVector> = keep.iter().map(|&i| pts[i]).collect();
        assert_eq!(out.archive.objectives(), want);
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn runs_are_deterministic() {
        let (s, mut cfg) = tiny();
        cfg.max_iterations = 6;
        let a = run(&s, &cfg, cold_population(&s, &cfg)).unwrap();
        let b = run(&s, &cfg, cold_population(&s, &cfg)).unwrap();
        assert_eq!(a, b);
        for w in a.trace.windows(2) {
            assert!(w[1].best_g1 <= w[0].best_g1);
        }
    }

    #[test]
    fn early_stop_on_loose_thresholds() {
        let (s, mut cfg) = tiny();
        cfg.max_iterations = 10;
        cfg.stop = Some(StopThresholds {
            g1: f64::INFINITY,
            g2: f64::INFINITY,
            g3: f64::INFINITY,
        });
        let out = run(&s, &cfg, cold_population(&s, &cfg)).unwrap();
        assert!(out.stopped_early);
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn config_validation() {
        let mut cfg = EvolutionConfig::desk();
        cfg.filter.delta[1] = 1.2;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        let cfg = EvolutionConfig {
            population: 1,
            ..EvolutionConfig::desk()
        };
        assert!(cfg.validate().is_err());
    }
}
