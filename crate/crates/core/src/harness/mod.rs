//! Benchmark campaigns, robustness studies and result files.

mod config;
mod emit;
mod hypervolume;
mod robustness;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::{assess_link, LinkSetup, SecrecyReport};
use crate::cvae::{generate_population, CvaeModel};
use crate::error::{Error, Result};
use crate::objectives::{ObjectiveVector, RepairOutcome, Solution};
use crate::optimizer::{
    best_g1_index, cold_population, evaluated, laa_swarm_baseline, run, vanilla_moalo_run,
    ArchiveEntry, EvolutionConfig, OpCounts, ParetoArchive, RunOutput, TraceRow,
};
use crate::rng::{derive_seed, stream, Purpose};
use crate::scenario::{generate_scenario, Scenario, ScenarioSpec};

pub use config::{
    load_config, save_config, training_archives, ExperimentConfig, RobustnessPlan, TrainingPlan,
    CONFIG_FORMAT, CONFIG_VERSION,
};
pub use emit::{
    load_results, write_archive_csv, write_meta, write_results_json, write_summary_csv,
    write_trace_csvs, RESULTS_FORMAT, RESULTS_VERSION,
};
pub use hypervolume::{hypervolume, reference_point};
pub use robustness::{
    perturb_and_reevaluate, phase_error_variance, robustness_study, Perturbation, PerturbationKind,
    PerturbedReport, StudySummary,
};

/// Iteration share of warm runs under `--paper-ratio` (200 of 500).
pub const WARM_ITERATION_RATIO: f64 = 0.4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    GensiCold,
    GensiWarm,
    Moalo,
    Laa,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::GensiCold,
        Algorithm::GensiWarm,
        Algorithm::Moalo,
        Algorithm::Laa,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::GensiCold => "gensi-cold",
            Algorithm::GensiWarm => "gensi-warm",
            Algorithm::Moalo => "moalo",
            Algorithm::Laa => "laa",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub scenario: ScenarioSpec,
    pub scenario_seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub evolution: EvolutionConfig,
    /// Iteration budget of warm runs relative to `evolution.max_iterations`.
    pub warm_iteration_ratio: Option<f64>,
    /// Share of the warm population drawn from the model; the remainder
    /// comes from the random-walk initializer.
    pub warm_mix: f64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioSpec::desk(),
            scenario_seeds: (1..=10).collect(),
            algorithms: vec![Algorithm::GensiCold, Algorithm::Moalo, Algorithm::Laa],
            evolution: EvolutionConfig::desk(),
            warm_iteration_ratio: None,
            warm_mix: 1.0,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.evolution.validate()?;
        if let Some(r) = self.warm_iteration_ratio {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::InvalidConfig(
                    "warm_iteration_ratio must be in (0, 1]".into(),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.warm_mix) {
            return Err(Error::InvalidConfig("warm_mix must be in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn needs_model(&self) -> bool {
        self.algorithms.contains(&Algorithm::GensiWarm)
    }

    /// Iterations of a warm run.
    pub fn warm_iterations(&self) -> usize {
        let t = self.evolution.max_iterations;
        match self.warm_iteration_ratio {
            Some(r) => ((r * t as f64).round() as usize).max(1),
            None => t,
        }
    }
}

/// Archive entry in both objective forms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchivePoint {
    pub objectives: ObjectiveVector,
    pub f1_bps: f64,
    pub f2_db: f64,
    pub f3_j: f64,
    pub solution: Solution,
}

impl ArchivePoint {
    pub fn new(e: &ArchiveEntry) -> Self {
        Self {
            objectives: e.objectives,
            f1_bps: e.objectives.f1_bps(),
            f2_db: e.objectives.f2_db(),
            f3_j: e.objectives.f3_joules(),
            solution: e.solution.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub index: usize,
    pub algorithm: Algorithm,
    pub scenario_seed: u64,
    /// Configuration the run actually used.
    pub config: EvolutionConfig,
    pub trace: Vec<TraceRow>,
    pub archive: Vec<ArchivePoint>,
    /// Position of the selected solution in `archive`.
    pub selected_index: usize,
    pub selected: ArchivePoint,
    /// Secrecy of the selected solution including the unknown eavesdroppers.
    pub secrecy: SecrecyReport,
    pub evaluations: usize,
    pub ops: OpCounts,
    pub hypervolume: f64,
    pub reference: ObjectiveVector,
}

/// Timing kept out of the records so result files stay reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub index: usize,
    pub algorithm: Algorithm,
    pub scenario_seed: u64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub records: Vec<RunRecord>,
    pub timings: Vec<RunTiming>,
}

/// Entry with the best `g1`; ties go to the smaller `g3`, then `g2`.
pub fn select_final(entries: &[ArchiveEntry]) -> Result<usize> {
    let objs: Vec<ObjectiveVector> = entries.iter().map(|e| e.objectives).collect();
    best_g1_index(&objs).ok_or(Error::EmptyArchive)
}

/// Warm-start population: `round(mix · N)` model samples, the rest cold.
pub fn warm_population(
    m: &CvaeModel,
    s: &Scenario,
    cfg: &EvolutionConfig,
    mix: f64,
) -> Result<Vec<RepairOutcome>> {
    let n = cfg.population;
    let k = ((mix * n as f64).round() as usize).min(n);
    let mut pop = generate_population(m, s, k, &mut stream(cfg.seed, Purpose::Generation, 0, 0))?;
    pop.extend(cold_population(s, cfg).into_iter().take(n - k));
    Ok(pop)
}

/// Output of one algorithm on one scenario, before the campaign-wide
/// hypervolume is known.
pub struct SingleRun {
    pub config: EvolutionConfig,
    pub output: RunOutput,
}

/// Runs `algo` on `s`. `cfg.seed` is used as given.
pub fn run_algorithm(
    algo: Algorithm,
    s: &Scenario,
    cfg: &EvolutionConfig,
    model: Option<&CvaeModel>,
    warm_iterations: usize,
    warm_mix: f64,
) -> Result<SingleRun> {
    match algo {
        Algorithm::GensiCold => Ok(SingleRun {
            config: cfg.clone(),
            output: run(s, cfg, cold_population(s, cfg))?,
        }),
        Algorithm::Moalo => {
            let config = EvolutionConfig {
                sorting_filter: false,
                ..cfg.clone()
            };
            let output = vanilla_moalo_run(s, &config, cold_population(s, &config))?;
            Ok(SingleRun { config, output })
        }
        Algorithm::GensiWarm => {
            let m = model.ok_or_else(|| {
                Error::CheckpointIncompatible("warm start requires a trained model".into())
            })?;
            m.check_scenario(s)
                .map_err(|e| Error::CheckpointIncompatible(e.to_string()))?;
            let config = EvolutionConfig {
                max_iterations: warm_iterations,
                ..cfg.clone()
            };
            let init = warm_population(m, s, &config, warm_mix)?;
            if init.iter().all(|c| !c.feasible) {
                return Err(Error::InfeasibleInput);
            }
            let output = run(s, &config, init)?;
            Ok(SingleRun { config, output })
        }
        Algorithm::Laa => {
            let out = laa_swarm_baseline(s, &mut stream(cfg.seed, Purpose::Baseline, 0, 0));
            if !out.feasible {
                return Err(Error::InfeasibleInput);
            }
            let entries = evaluated(&[out.solution], s, &cfg.grid)?;
            let mut archive = ParetoArchive::new(1);
            let mut ops = OpCounts::default();
            archive.merge(entries, &mut ops);
            let config = EvolutionConfig {
                max_iterations: 0,
                ..cfg.clone()
            };
            Ok(SingleRun {
                config,
                output: RunOutput {
                    archive,
                    trace: Vec::new(),
                    ops,
                    evaluations: 1,
                    stopped_early: false,
                },
            })
        }
    }
}

/// Full secrecy report (known and unknown eavesdroppers) of a solution.
pub fn full_secrecy(x: &Solution, s: &Scenario, cfg: &EvolutionConfig) -> Result<SecrecyReport> {
    Ok(assess_link(&LinkSetup::from_solution(x, s)?, s, &cfg.grid)?.secrecy)
}

struct Pending {
    algorithm: Algorithm,
    scenario_seed: u64,
    single: SingleRun,
    selected: usize,
    secrecy: SecrecyReport,
}

fn run_pending(
    s: &Scenario,
    cfg: &CampaignConfig,
    model: Option<&CvaeModel>,
    pending: &mut Vec<Pending>,
    timings: &mut Vec<RunTiming>,
) -> Result<()> {
    let run_cfg = EvolutionConfig {
        seed: derive_seed(cfg.evolution.seed, s.rng_seed),
        ..cfg.evolution.clone()
    };
    for &algo in &cfg.algorithms {
        let started = Instant::now();
        let single = run_algorithm(
            algo,
            s,
            &run_cfg,
            model,
            cfg.warm_iterations(),
            cfg.warm_mix,
        )?;
        timings.push(RunTiming {
            index: pending.len(),
            algorithm: algo,
            scenario_seed: s.rng_seed,
            wall_time_s: started.elapsed().as_secs_f64(),
        });
        let selected = select_final(&single.output.archive.entries)?;
        let secrecy = full_secrecy(
            &single.output.archive.entries[selected].solution,
            s,
            &run_cfg,
        )?;
        pending.push(Pending {
            algorithm: algo,
            scenario_seed: s.rng_seed,
            single,
            selected,
            secrecy,
        });
    }
    Ok(())
}

fn finish(pending: Vec<Pending>, timings: Vec<RunTiming>) -> Result<Campaign> {
    let Some(reference) = reference_point(pending.iter().flat_map(|p| {
        p.single
            .output
            .archive
            .entries
            .iter()
            .map(|e| &e.objectives)
    })) else {
        return Ok(Campaign::default());
    };
    let records = pending
        .into_iter()
        .enumerate()
        .map(|(index, p)| {
            let archive = &p.single.output.archive;
            Ok(RunRecord {
                index,
                algorithm: p.algorithm,
                scenario_seed: p.scenario_seed,
                config: p.single.config,
                trace: p.single.output.trace,
                archive: archive.entries.iter().map(ArchivePoint::new).collect(),
                selected_index: p.selected,
                selected: ArchivePoint::new(&archive.entries[p.selected]),
                secrecy: p.secrecy,
                evaluations: p.single.output.evaluations,
                ops: p.single.output.ops,
                hypervolume: hypervolume(&archive.objectives(), &reference)?,
                reference,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Campaign { records, timings })
}

fn check_model(cfg: &CampaignConfig, model: Option<&CvaeModel>) -> Result<()> {
    cfg.validate()?;
    if cfg.needs_model() && model.is_none() {
        return Err(Error::CheckpointIncompatible(
            "warm start requires a trained model".into(),
        ));
    }
    Ok(())
}

/// One record per (scenario, algorithm), ordered scenario-major. Each run
/// seeds itself from `cfg.evolution.seed` and the scenario seed, so every
/// algorithm starts from the same cold population on a given scenario.
/// The hypervolume reference is the campaign-wide nadir pushed outward by
/// [`reference_point`].
pub fn run_campaign(cfg: &CampaignConfig, model: Option<&CvaeModel>) -> Result<Campaign> {
    check_model(cfg, model)?;
    let mut pending = Vec::new();
    let mut timings = Vec::new();
    if !cfg.algorithms.is_empty() {
        for &seed in &cfg.scenario_seeds {
            let s = generate_scenario(seed, &cfg.scenario)?;
            run_pending(&s, cfg, model, &mut pending, &mut timings)?;
        }
    }
    finish(pending, timings)
}

/// [`run_campaign`] on a single given scenario; `cfg.scenario` and
/// `cfg.scenario_seeds` are ignored.
pub fn run_on_scenario(
    s: &Scenario,
    cfg: &CampaignConfig,
    model: Option<&CvaeModel>,
) -> Result<Campaign> {
    check_model(cfg, model)?;
    s.validate()?;
    let mut pending = Vec::new();
    let mut timings = Vec::new();
    run_pending(s, cfg, model, &mut pending, &mut timings)?;
    finish(pending, timings)
}
