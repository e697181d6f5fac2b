use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamforming::{ratio_to_db, AngularGrid};
use crate::channel::{assess_link, LinkAssessment, LinkSetup, SecrecyReport};
use crate::error::{Error, Result};
use crate::objectives::{repair, Solution};
use crate::rng::{stream, Purpose};
use crate::scenario::{Position3, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationKind {
    /// Oscillator phase drift over `delta_t` seconds at angular carrier
    /// `omega_c` with clock noise coefficients `q1` (s^1/2) and `q2` (s^-1/2).
    PhaseSync {
        delta_t: f64,
        omega_c: f64,
        q1: f64,
        q2: f64,
    },
    /// Steering phases quantized to an `order`-point PSK codebook.
    CsiPsk { order: u32 },
    /// Uniform per-coordinate position drift up to `max_drift` m.
    Jitter { max_drift: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    #[serde(flatten)]
    pub kind: PerturbationKind,
    pub seed: u64,
}

impl Perturbation {
    /// Clock noise figures of a typical crystal oscillator, 1 ms between
    /// synchronization rounds, carrier 915 MHz.
    pub fn phase_sync_default(seed: u64) -> Self {
        Self {
            kind: PerturbationKind::PhaseSync {
                delta_t: 1e-3,
                omega_c: 2.0 * PI * 915e6,
                q1: 8.47e-22f64.sqrt(),
                q2: 5.51e-18f64.sqrt(),
            },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            PerturbationKind::PhaseSync {
                delta_t,
                omega_c,
                q1,
                q2,
            } => {
                [delta_t, omega_c].iter().all(|v| *v > 0.0 && v.is_finite())
                    && [q1, q2].iter().all(|v| *v >= 0.0 && v.is_finite())
            }
            PerturbationKind::CsiPsk { order } => order >= 2 && order.is_power_of_two(),
            PerturbationKind::Jitter { max_drift } => max_drift > 0.0 && max_drift.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "bad perturbation parameters: {:?}",
                self.kind
            )))
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            PerturbationKind::PhaseSync { delta_t, .. } => format!("phase_sync dt={delta_t}"),
            PerturbationKind::CsiPsk { order } => format!("csi_psk {order}"),
            PerturbationKind::Jitter { max_drift } => format!("jitter {max_drift} m"),
        }
    }
}

/// `ζ² = ω_c² (q1² ΔT + q2² ΔT³ / 3)`.
pub fn phase_error_variance(omega_c: f64, q1: f64, q2: f64, delta_t: f64) -> f64 {
    omega_c * omega_c * (q1 * q1 * delta_t + q2 * q2 * delta_t.powi(3) / 3.0)
}

/// Nearest point of an `order`-PSK grid rotated by `offset`.
pub fn quantize_phase(phi: f64, order: u32, offset: f64) -> f64 {
    let step = 2.0 * PI / order as f64;
    offset + ((phi - offset) / step).round() * step
}

/// Perturbed link quality of one trial and its change from nominal.
/// Degradations are positive when the perturbation hurts: `f1` drops or
/// the sidelobe level rises.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbedReport {
    pub trial: u64,
    pub secrecy: SecrecyReport,
    pub f1_bps: f64,
    pub f2_db: f64,
    pub degradation_f1_bps: f64,
    pub degradation_f2_db: f64,
}

fn f1_f2(a: &LinkAssessment) -> (f64, f64) {
    (
        a.secrecy.c_ke,
        ratio_to_db(a.sidelobe_ratio[0].max(a.sidelobe_ratio[1])),
    )
}

fn jittered(x: &Solution, s: &Scenario, max_drift: f64, rng: &mut impl Rng) -> Solution {
    let mut y = x.clone();
    for swarm in &mut y.positions {
        for p in swarm.iter_mut() {
            let mut u = || rng.random_range(-1.0..=1.0) * max_drift;
            *p = *p + Position3::new(u(), u(), u());
        }
    }
    // a boxed-in repair still returns the best effort, which is used as is
    repair(&y, s).solution
}

fn perturbed_link(
    x: &Solution,
    s: &Scenario,
    p: &Perturbation,
    trial: u64,
    grid: &AngularGrid,
) -> Result<LinkAssessment> {
    let mut rng = stream(p.seed, Purpose::Perturbation, trial, 0);
    let setup = match p.kind {
        PerturbationKind::PhaseSync {
            delta_t,
            omega_c,
            q1,
            q2,
        } => {
            let sd = phase_error_variance(omega_c, q1, q2, delta_t).sqrt();
            let noise = Normal::new(0.0, sd).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let mut setup = LinkSetup::from_solution(x, s)?;
            for a in &mut setup.arrays {
                for ph in &mut a.initial_phases {
                    *ph += noise.sample(&mut rng);
                }
            }
            setup
        }
        PerturbationKind::CsiPsk { order } => {
            let offset = rng.random_range(0.0..2.0 * PI / order as f64);
            let mut setup = LinkSetup::from_solution(x, s)?;
            for a in &mut setup.arrays {
                for ph in &mut a.initial_phases {
                    *ph = quantize_phase(*ph, order, offset);
                }
            }
            setup
        }
        PerturbationKind::Jitter { max_drift } => {
            LinkSetup::from_solution(&jittered(x, s, max_drift, &mut rng), s)?
        }
    };
    assess_link(&setup, s, grid)
}

/// One Monte-Carlo trial of `p` on a copy of `x`.
pub fn perturb_and_reevaluate(
    x: &Solution,
    s: &Scenario,
    p: &Perturbation,
    trial: u64,
    grid: &AngularGrid,
) -> Result<PerturbedReport> {
    p.validate()?;
    let (f1_0, f2_0) = f1_f2(&assess_link(&LinkSetup::from_solution(x, s)?, s, grid)?);
    let link = perturbed_link(x, s, p, trial, grid)?;
    let (f1, f2) = f1_f2(&link);
    Ok(PerturbedReport {
        trial,
        secrecy: link.secrecy,
        f1_bps: f1,
        f2_db: f2,
        degradation_f1_bps: f1_0 - f1,
        degradation_f2_db: f2 - f2_0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub label: String,
    pub perturbation: Perturbation,
    pub trials: usize,
    pub nominal_f1_bps: f64,
    pub nominal_f2_db: f64,
    pub mean_degradation_f1_bps: f64,
    pub mean_degradation_f2_db: f64,
    pub mean_abs_delta_f1_bps: f64,
    pub mean_abs_delta_f2_db: f64,
}

/// `trials` Monte-Carlo trials per setting. Trial `k` of every setting
/// draws from the same stream, so settings of one kind are compared on
/// paired samples.
pub fn robustness_study(
    x: &Solution,
    s: &Scenario,
    settings: &[Perturbation],
    trials: usize,
    grid: &AngularGrid,
) -> Result<Vec<StudySummary>> {
    let (f1_0, f2_0) = f1_f2(&assess_link(&LinkSetup::from_solution(x, s)?, s, grid)?);
    settings
        .iter()
        .map(|p| {
            p.validate()?;
            let links: Vec<LinkAssessment> = (0..trials as u64)
                .into_par_iter()
                .map(|k| perturbed_link(x, s, p, k, grid))
                .collect::<Result<_>>()?;
            let n = trials.max(1) as f64;
            let (mut d1, mut d2, mut a1, mut a2) = (0.0, 0.0, 0.0, 0.0);
            for l in &links {
                let (f1, f2) = f1_f2(l);
                d1 += f1_0 - f1;
                d2 += f2 - f2_0;
                a1 += (f1 - f1_0).abs();
                a2 += (f2 - f2_0).abs();
            }
            Ok(StudySummary {
                label: p.label(),
                perturbation: *p,
                trials,
                nominal_f1_bps: f1_0,
                nominal_f2_db: f2_0,
                mean_degradation_f1_bps: d1 / n,
                mean_degradation_f2_db: d2 / n,
                mean_abs_delta_f1_bps: a1 / n,
                mean_abs_delta_f2_db: a2 / n,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::random_walk_init;
    use crate::scenario::{generate_scenario, ScenarioSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (Scenario, Solution, AngularGrid) {
        let s = generate_scenario(
            21,
            &ScenarioSpec {
                n_uav: 4,
                ..ScenarioSpec::desk()
            },
        )
        .unwrap();
        let x = random_walk_init(&s, 3, 3.0, &mut ChaCha8Rng::seed_from_u64(1))[2]
            .solution
            .clone();
        (s, x, AngularGrid::uniform(10.0).refined(2.0, 0.2))
    }

    #[test]
    fn variance_formula() {
        let v = phase_error_variance(2.0, 3.0, 5.0, 0.5);
        assert!((v - 4.0 * (9.0 * 0.5 + 25.0 * 0.125 / 3.0)).abs() < 1e-12);
        assert_eq!(phase_error_variance(1e9, 0.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn zero_variance_reproduces_nominal() {
        let (s, x, grid) = setup();
        let p = Perturbation {
            kind: PerturbationKind::PhaseSync {
                delta_t: 1e-3,
                omega_c: 1e9,
                q1: 0.0,
                q2: 0.0,
            },
            seed: 4,
        };
        let nominal = assess_link(&LinkSetup::from_solution(&x, &s).unwrap(), &s, &grid).unwrap();
        let r = perturb_and_reevaluate(&x, &s, &p, 0, &grid).unwrap();
        assert_eq!(r.secrecy, nominal.secrecy);
        assert_eq!(r.degradation_f1_bps, 0.0);
        assert_eq!(r.degradation_f2_db, 0.0);
    }

    #[test]
    fn psk_error_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for order in [16, 32, 64] {
            for _ in 0..1000 {
                let phi = rng.random_range(-50.0..50.0);
                let off = rng.random_range(0.0..1.0);
                let q = quantize_phase(phi, order, off);
                assert!((q - phi).abs() <= PI / order as f64 + 1e-12);
            }
        }
    }

    #[test]
    fn study_leaves_solution_untouched() {
        let (s, x, grid) = setup();
        let before = x.clone();
        let settings = [
            Perturbation {
                kind: PerturbationKind::Jitter { max_drift: 1.0 },
                seed: 9,
            },
            Perturbation {
                kind: PerturbationKind::CsiPsk { order: 16 },
                seed: 9,
            },
        ];
        let a = robustness_study(&x, &s, &settings, 5, &grid).unwrap();
        let b = robustness_study(&x, &s, &settings, 5, &grid).unwrap();
        assert_eq!(x, before);
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.mean_abs_delta_f1_bps >= 0.0));
    }

    #[test]
    fn invalid_parameters() {
        let bad = [
            PerturbationKind::CsiPsk { order: 24 },
            PerturbationKind::Jitter { max_drift: 0.0 },
            PerturbationKind::PhaseSync {
                delta_t: -1.0,
                omega_c: 1.0,
                q1: 1.0,
                q2: 1.0,
            },
        ];
        for kind in bad {
            assert!(Perturbation { kind, seed: 0 }.validate().is_err());
        }
    }
}
