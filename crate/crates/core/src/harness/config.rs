use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CampaignConfig, Perturbation, PerturbationKind};
use crate::cvae::TrainConfig;
use crate::error::{Error, Result};
use crate::optimizer::{cold_population, run, EvolutionConfig, ParetoArchive};
use crate::rng::derive_seed;
use crate::scenario::{generate_scenario, write_json, Scenario};

pub const CONFIG_FORMAT: &str = "secbeam-config";
pub const CONFIG_VERSION: u64 = 1;

/// Instances whose cold-start archives make up the CVAE training set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingPlan {
    pub scenario_seeds: Vec<u64>,
    pub train: TrainConfig,
}

impl Default for TrainingPlan {
    fn default() -> Self {
        Self {
            scenario_seeds: (1000..1050).collect(),
            train: TrainConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobustnessPlan {
    pub trials: usize,
    pub settings: Vec<Perturbation>,
}

impl Default for RobustnessPlan {
    fn default() -> Self {
        let mut settings = vec![Perturbation::phase_sync_default(1)];
        settings.extend([16, 32, 64].map(|order| Perturbation {
            kind: PerturbationKind::CsiPsk { order },
            seed: 1,
        }));
        settings.extend([0.5, 1.0, 2.0].map(|max_drift| Perturbation {
            kind: PerturbationKind::Jitter { max_drift },
            seed: 1,
        }));
        Self {
            trials: 100,
            settings,
        }
    }
}

/// Everything a CLI verb may need; unspecified fields take defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub campaign: CampaignConfig,
    pub training: TrainingPlan,
    pub robustness: RobustnessPlan,
}

#[derive(Serialize, Deserialize)]
struct ConfigFile {
    format: String,
    version: u64,
    #[serde(flatten)]
    config: ExperimentConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.campaign.validate()?;
        self.training.train.validate()?;
        if self.robustness.trials == 0 {
            return Err(Error::InvalidConfig(
                "robustness.trials must be positive".into(),
            ));
        }
        self.robustness
            .settings
            .iter()
            .try_for_each(Perturbation::validate)
    }
}

pub fn save_config(cfg: &ExperimentConfig, path: impl AsRef<Path>) -> Result<()> {
    write_json(
        path.as_ref(),
        &ConfigFile {
            format: CONFIG_FORMAT.into(),
            version: CONFIG_VERSION,
            config: cfg.clone(),
        },
    )
}

/// Reads and validates a config file. Parse and range errors surface as
/// [`Error::InvalidConfig`].
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ConfigFile = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    if file.format != CONFIG_FORMAT {
        return Err(Error::InvalidConfig(format!(
            "not a config file: format '{}'",
            file.format
        )));
    }
    if file.version != CONFIG_VERSION {
        return Err(Error::InvalidConfig(format!(
            "config version {} unsupported (expected {CONFIG_VERSION})",
            file.version
        )));
    }
    file.config.validate()?;
    Ok(file.config)
}

/// Cold GenSI archives on the training instances, ready for
/// [`crate::cvae::build_dataset`].
pub fn training_archives(cfg: &ExperimentConfig) -> Result<Vec<(Scenario, ParetoArchive)>> {
    let c = &cfg.campaign;
    cfg.training
        .scenario_seeds
        .iter()
        .map(|&seed| {
            let s = generate_scenario(seed, &c.scenario)?;
            let evo = EvolutionConfig {
                seed: derive_seed(c.evolution.seed, seed),
                ..c.evolution.clone()
            };
            let out = run(&s, &evo, cold_population(&s, &evo))?;
            Ok((s, out.archive))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_partial_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cfg.json");
        let cfg = ExperimentConfig::default();
        save_config(&cfg, &p).unwrap();
        assert_eq!(load_config(&p).unwrap(), cfg);

        fs::write(
            &p,
            r#"{"format":"secbeam-config","version":1,"campaign":{"scenario_seeds":[4]}}"#,
        )
        .unwrap();
        let c = load_config(&p).unwrap();
        assert_eq!(c.campaign.scenario_seeds, vec![4]);
        assert_eq!(c.training, TrainingPlan::default());
    }

    #[test]
    fn bad_values_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cfg.json");
        for body in [
            r#"{"format":"secbeam-config","version":1,"campaign":{"evolution":{"population":0}}}"#,
            r#"{"format":"secbeam-config","version":2}"#,
            r#"{"format":"secbeam-config","version":1,"campaign":{"algorithms":["nsga"]}}"#,
            r#"{"format":"other","version":1}"#,
            r#"not json"#,
        ] {
            fs::write(&p, body).unwrap();
            assert!(
                matches!(load_config(&p), Err(Error::InvalidConfig(_))),
                "{body}"
            );
        }
    }
}
