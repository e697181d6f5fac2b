use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use secbeam::beamforming::{sample_pattern, AngularGrid};
use secbeam::channel::LinkSetup;
use secbeam::cvae::{build_dataset, load_checkpoint, save_checkpoint, train, TrainingSet};
use secbeam::harness::{
    load_config, load_results, robustness_study, run_campaign, run_on_scenario, save_config,
    training_archives, write_archive_csv, write_meta, write_results_json, write_summary_csv,
    write_trace_csvs, Algorithm, Campaign, ExperimentConfig, RunRecord, WARM_ITERATION_RATIO,
};
use secbeam::objectives::{is_feasible, load_solution, save_solution};
use secbeam::scenario::{generate_scenario, load_scenario, save_scenario, Preset, ScenarioSpec};
use secbeam::Error;

#[derive(Parser)]
#[command(
    name = "secbeam",
    version,
    about = "Secure collaborative beamforming for two UAV swarms"
)]
struct Cli {
    /// Worker threads (default: one per core). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scenario files.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
    /// Optimize one scenario with one algorithm.
    Optimize(OptimizeArgs),
    /// Build the training set from cold runs and train the CVAE.
    TrainCvae(TrainArgs),
    /// Run every configured algorithm on every configured scenario.
    Campaign(CampaignArgs),
    /// Monte-Carlo perturbation study of a solution.
    Robustness(RobustnessArgs),
    /// Beam patterns.
    #[command(subcommand)]
    Beam(BeamCmd),
    /// Summarize a results file.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum ScenarioCmd {
    /// Generate a scenario from a seed.
    Gen(GenArgs),
}

#[derive(Subcommand)]
enum BeamCmd {
    /// Sample the array pattern of one swarm.
    Pattern(PatternArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    n_uav: usize,
    #[arg(long, default_value_t = 4)]
    n_eaves_known: usize,
    #[arg(long, default_value_t = 2)]
    n_eaves_unknown: usize,
    /// Distance between the two area centers, m.
    #[arg(long, default_value_t = 5000.0)]
    separation: f64,
    #[arg(long, default_value = "urban-default")]
    preset: Preset,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "gensi-cold")]
    algo: Algorithm,
    /// CVAE checkpoint, required by gensi-warm.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Overrides the evolution seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    /// Warm runs get 40% of the iteration budget.
    #[arg(long = "paper-ratio")]
    short_warm: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Train on a saved training set instead of running the optimizer.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Also save the training set here.
    #[arg(long)]
    save_dataset: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch loss curve (CSV).
    #[arg(long)]
    loss_out: Option<PathBuf>,
}

#[derive(Args)]
struct CampaignArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long = "paper-ratio")]
    short_warm: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RobustnessArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// JSON summary; a CSV with the same stem is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PatternArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    /// 1 or 2.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    swarm: u8,
    /// Sampling step, degrees.
    #[arg(long, default_value_t = 2.0)]
    step: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn config_or_default(path: Option<&Path>) -> Result<ExperimentConfig> {
    Ok(match path {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    })
}

fn write_campaign(c: &Campaign, cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    save_config(cfg, dir.join("config.json"))?;
    write_results_json(&c.records, dir.join("results.json"))?;
    write_archive_csv(&c.records, dir.join("archive.csv"))?;
    write_summary_csv(&c.records, dir.join("summary.csv"))?;
    write_trace_csvs(&c.records, dir)?;
    write_meta(&c.timings, dir.join("results.meta.json"))?;
    Ok(())
}

fn print_records(records: &[RunRecord]) {
    for r in records {
        println!(
            "{:>3} {:<10} seed {:<6} f1 {:.4e} bps  f2 {:7.3} dB  f3 {:.4e} J  archive {}",
            r.index,
            r.algorithm,
            r.scenario_seed,
            r.selected.f1_bps,
            r.selected.f2_db,
            r.selected.f3_j,
            r.archive.len()
        );
    }
}

fn scenario_gen(a: GenArgs) -> Result<()> {
    let spec = ScenarioSpec {
        n_uav: a.n_uav,
        n_eaves_known: a.n_eaves_known,
        n_eaves_unknown: a.n_eaves_unknown,
        swarm_separation: a.separation,
        preset: a.preset,
        ..ScenarioSpec::default()
    };
    let s = generate_scenario(a.seed, &spec)?;
    save_scenario(&s, &a.out)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn optimize(a: OptimizeArgs) -> Result<()> {
    let mut cfg = config_or_default(a.config.as_deref())?;
    let c = &mut cfg.campaign;
    c.algorithms = vec![a.algo];
    if let Some(seed) = a.seed {
        c.evolution.seed = seed;
    }
    if let Some(t) = a.iterations {
        c.evolution.max_iterations = t;
    }
    if let Some(n) = a.population {
        c.evolution.population = n;
    }
    if a.short_warm {
        c.warm_iteration_ratio = Some(WARM_ITERATION_RATIO);
    }
    cfg.validate()?;
    let s = load_scenario(&a.scenario)?;
    let model = a.checkpoint.as_deref().map(load_checkpoint).transpose()?;
    let campaign = run_on_scenario(&s, &cfg.campaign, model.as_ref())?;
    write_campaign(&campaign, &cfg, &a.out_dir)?;
    if let Some(r) = campaign.records.first() {
        save_solution(&r.selected.solution, a.out_dir.join("solution.json"))?;
    }
    print_records(&campaign.records);
    Ok(())
}

fn train_cvae(a: TrainArgs) -> Result<()> {
    let cfg = config_or_default(a.config.as_deref())?;
    let ds: TrainingSet = match &a.dataset {
        Some(p) => serde_json::from_str(
            &fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        )
        .map_err(|e| Error::MalformedFile(format!("{}: {e}", p.display())))?,
        None => build_dataset(&training_archives(&cfg)?)?,
    };
    if let Some(p) = &a.save_dataset {
        fs::write(p, serde_json::to_string(&ds)?)
            .with_context(|| format!("writing {}", p.display()))?;
    }
    let (model, curve) = train(&ds, &cfg.training.train)?;
    save_checkpoint(&model, &a.out)?;
    if let Some(p) = &a.loss_out {
        let mut w = csv::Writer::from_path(p)?;
        w.write_record(["epoch", "beta", "total", "recon", "kl"])?;
        for e in &curve {
            w.write_record([
                e.epoch.to_string(),
                e.beta.to_string(),
                e.total.to_string(),
                e.recon.to_string(),
                e.kl.to_string(),
            ])?;
        }
        w.flush()?;
    }
    if let (Some(first), Some(last)) = (curve.first(), curve.last()) {
        println!(
            "{} samples, loss {:.5} -> {:.5} over {} epochs",
            ds.len(),
            first.total,
            last.total,
            curve.len()
        );
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

fn campaign(a: CampaignArgs) -> Result<()> {
    let mut cfg = config_or_default(a.config.as_deref())?;
    if a.short_warm {
        cfg.campaign.warm_iteration_ratio = Some(WARM_ITERATION_RATIO);
    }
    cfg.validate()?;
    let model = a.checkpoint.as_deref().map(load_checkpoint).transpose()?;
    let c = run_campaign(&cfg.campaign, model.as_ref())?;
    write_campaign(&c, &cfg, &a.out_dir)?;
    print_records(&c.records);
    Ok(())
}

fn robustness(a: RobustnessArgs) -> Result<()> {
    let mut cfg = config_or_default(a.config.as_deref())?;
    if let Some(t) = a.trials {
        cfg.robustness.trials = t;
    }
    cfg.validate()?;
    let s = load_scenario(&a.scenario)?;
    let x = load_solution(&a.solution)?;
    if !is_feasible(&x, &s) {
        return Err(Error::InfeasibleInput.into());
    }
    let rows = robustness_study(
        &x,
        &s,
        &cfg.robustness.settings,
        cfg.robustness.trials,
        &cfg.campaign.evolution.grid,
    )?;
    fs::write(&a.out, serde_json::to_string_pretty(&rows)?)
        .with_context(|| format!("writing {}", a.out.display()))?;
    let mut w = csv::Writer::from_path(a.out.with_extension("csv"))?;
    w.write_record([
        "setting",
        "trials",
        "nominal f1 [bps]",
        "nominal f2 [dB]",
        "mean degradation f1 [bps]",
        "mean degradation f2 [dB]",
        "mean |delta f1| [bps]",
        "mean |delta f2| [dB]",
    ])?;
    for r in &rows {
        w.write_record([
            r.label.clone(),
            r.trials.to_string(),
            r.nominal_f1_bps.to_string(),
            r.nominal_f2_db.to_string(),
            r.mean_degradation_f1_bps.to_string(),
            r.mean_degradation_f2_db.to_string(),
            r.mean_abs_delta_f1_bps.to_string(),
            r.mean_abs_delta_f2_db.to_string(),
        ])?;
        println!(
            "{:<18} |df1| {:.4e} bps  |df2| {:.4} dB",
            r.label, r.mean_abs_delta_f1_bps, r.mean_abs_delta_f2_db
        );
    }
    w.flush()?;
    Ok(())
}

fn beam_pattern(a: PatternArgs) -> Result<()> {
    if !(a.step > 0.0 && a.step <= 90.0) {
        return Err(Error::InvalidConfig("--step must be in (0, 90] degrees".into()).into());
    }
    let s = load_scenario(&a.scenario)?;
    let x = load_solution(&a.solution)?;
    if !is_feasible(&x, &s) {
        return Err(Error::InfeasibleInput.into());
    }
    let setup = LinkSetup::from_solution(&x, &s)?;
    let array = &setup.arrays[usize::from(a.swarm - 1)];
    let grid = AngularGrid::uniform(a.step);
    let samples = sample_pattern(
        array,
        s.channel.wavelength,
        s.channel.efficiency,
        s.channel.element_pattern,
        &grid,
    )?;
    let mut w = csv::Writer::from_path(&a.out)?;
    w.write_record(["theta [deg]", "phi [deg]", "|AF|", "gain [dBi]"])?;
    for p in &samples {
        w.write_record([
            p.theta.to_degrees().to_string(),
            p.phi.to_degrees().to_string(),
            p.magnitude.to_string(),
            (10.0 * p.gain.log10()).to_string(),
        ])?;
    }
    w.flush()?;
    println!("wrote {} samples to {}", samples.len(), a.out.display());
    Ok(())
}

#[derive(Default)]
struct Tally {
    runs: usize,
    f1: f64,
    f2: f64,
    f3: f64,
    hv: f64,
    cold_f1_wins: usize,
    cold_f3_wins: usize,
    paired: usize,
}

fn report(a: ReportArgs) -> Result<()> {
    let records = load_results(&a.results)?;
    let cold: BTreeMap<u64, &RunRecord> = records
        .iter()
        .filter(|r| r.algorithm == Algorithm::GensiCold)
        .map(|r| (r.scenario_seed, r))
        .collect();
    let mut by_algo: BTreeMap<&str, Tally> = BTreeMap::new();
    for r in &records {
        let t = by_algo.entry(r.algorithm.id()).or_default();
        t.runs += 1;
        t.f1 += r.selected.f1_bps;
        t.f2 += r.selected.f2_db;
        t.f3 += r.selected.f3_j;
        t.hv += r.hypervolume;
        if r.algorithm != Algorithm::GensiCold {
            if let Some(c) = cold.get(&r.scenario_seed) {
                t.paired += 1;
                t.cold_f1_wins += usize::from(c.selected.f1_bps > r.selected.f1_bps);
                t.cold_f3_wins += usize::from(c.selected.f3_j < r.selected.f3_j);
            }
        }
    }
    let header = [
        "algorithm",
        "runs",
        "mean f1 [bps]",
        "mean f2 [dB]",
        "mean f3 [J]",
        "mean hypervolume",
        "gensi-cold f1 wins",
        "gensi-cold f3 wins",
        "paired runs",
    ];
    let rows: Vec<[String; 9]> = by_algo
        .iter()
        .map(|(id, t)| {
            let n = t.runs as f64;
            [
                id.to_string(),
                t.runs.to_string(),
                (t.f1 / n).to_string(),
                (t.f2 / n).to_string(),
                (t.f3 / n).to_string(),
                (t.hv / n).to_string(),
                t.cold_f1_wins.to_string(),
                t.cold_f3_wins.to_string(),
                t.paired.to_string(),
            ]
        })
        .collect();
    for ((id, t), _) in by_algo.iter().zip(&rows) {
        let n = t.runs as f64;
        println!(
            "{id:<10} runs {:>3}  f1 {:.4e} bps  f2 {:7.3} dB  f3 {:.4e} J  cold wins f1 {}/{} f3 {}/{}",
            t.runs,
            t.f1 / n,
            t.f2 / n,
            t.f3 / n,
            t.cold_f1_wins,
            t.paired,
            t.cold_f3_wins,
            t.paired
        );
    }
    if let Some(out) = &a.out {
        let mut w = csv::Writer::from_path(out)?;
        w.write_record(header)?;
        for row in &rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::InvalidConfig(_)) => 2,
        Some(Error::InfeasibleInput | Error::PlacementBudgetExhausted { .. }) => 3,
        Some(Error::CheckpointIncompatible(_)) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.cmd {
        Command::Scenario(ScenarioCmd::Gen(a)) => scenario_gen(a),
        Command::Optimize(a) => optimize(a),
        Command::TrainCvae(a) => train_cvae(a),
        Command::Campaign(a) => campaign(a),
        Command::Robustness(a) => robustness(a),
        Command::Beam(BeamCmd::Pattern(a)) => beam_pattern(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
