//! Secure distributed collaborative beamforming for two UAV swarms.
//!
//! Each swarm acts as a virtual antenna array that beams toward a receiver
//! chosen in the other swarm while colluding ground eavesdroppers listen in.
//! The crate evaluates the three-objective problem (known secrecy capacity,
//! peak sidelobe ratio and repositioning energy) and solves it with an
//! enhanced multi-objective ant lion optimizer that can be warm-started
//! from a conditional variational autoencoder.
//!
//! Module map:
//!
//! * [`scenario`]: problem instances, presets and the scenario file format
//! * [`beamforming`]: array factor, directive gain, sidelobe ratio
//! * [`channel`]: A2A rates, eavesdropper SNR, MRC collusion, secrecy
//! * [`energy`]: rotary-wing propulsion power and leg energy
//! * [`objectives`]: solutions, objective evaluation and constraint repair
//! * [`optimizer`]: Pareto archive, ant lion evolution, initializers, baselines
//! * [`cvae`]: the conditional VAE used for warm starts
//! * [`harness`]: campaigns, robustness studies, hypervolume, result files

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamforming;
pub mod channel;
pub mod cvae;
pub mod energy;
pub mod error;
pub mod harness;
pub mod objectives;
pub mod optimizer;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
pub use objectives::{ObjectiveVector, Solution};
pub use optimizer::{EvolutionConfig, ParetoArchive};
pub use scenario::{Position3, Scenario, ScenarioSpec};
