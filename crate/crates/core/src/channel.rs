//! A2A link rates, eavesdropper SNR under probabilistic LoS, MRC collusion
//! and the two minimum two-way secrecy capacities.

use serde::{Deserialize, Serialize};

use crate::beamforming::{direction_and_distance, AngularGrid, ArrayState, PatternSurvey};
use crate::error::Result;
use crate::objectives::Solution;
use crate::scenario::{AngleUnit, ChannelParams, Position3, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// m
    pub distance: f64,
    /// linear
    pub gain: f64,
    /// linear
    pub snr: f64,
    /// bps
    pub rate: f64,
}

/// Secrecy summary of one solution, both directions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecrecyReport {
    /// Legitimate rate of array 1 → swarm 2 and array 2 → swarm 1, bps.
    pub r_a2a: [f64; 2],
    /// Colluded rate of the known eavesdroppers per direction, bps.
    pub r_eaves_known: [f64; 2],
    /// Colluded rate of all eavesdroppers per direction, bps.
    pub r_eaves_all: [f64; 2],
    /// Minimum two-way known secrecy capacity, bps.
    pub c_ke: f64,
    /// Minimum two-way achievable secrecy capacity (known ∪ unknown), bps.
    pub c_e: f64,
}

fn snr_unfaded(tx_power: f64, gain: f64, distance: f64, p: &ChannelParams) -> f64 {
    tx_power * p.path_loss_constant * gain * distance.powf(-p.path_loss_exponent) / p.noise_power
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// `B log2(1 + P K0 G d^-α / σ²)`.
pub fn a2a_rate(tx_power: f64, gain: f64, distance: f64, p: &ChannelParams) -> f64 {
    p.bandwidth * log2_1p(snr_unfaded(tx_power, gain, distance, p))
}

/// Logistic LoS probability. `elevation` is in the unit the constants were
/// calibrated in.
pub fn los_probability(elevation: f64, b1: f64, b2: f64) -> f64 {
    1.0 / (1.0 + b1 * (-b2 * (elevation - b1)).exp())
}

/// Elevation of `from` as seen from the ground point `to`, in `unit`.
pub fn elevation_angle(from: Position3, to: Position3, unit: AngleUnit) -> f64 {
    let d = from.distance(to);
    let rad = ((from.z - to.z) / d).clamp(-1.0, 1.0).asin();
    match unit {
        AngleUnit::Degrees => rad.to_degrees(),
        AngleUnit::Radians => rad,
    }
}

/// SNR of one eavesdropper with the expected LoS/NLoS attenuation.
pub fn eavesdropper_snr(
    tx_power: f64,
    gain: f64,
    distance: f64,
    elevation: f64,
    p: &ChannelParams,
) -> f64 {
    let p_los = los_probability(elevation, p.los_b1, p.los_b2);
    let attenuation = p_los * p.mu_los + (1.0 - p_los) * p.mu_nlos;
    snr_unfaded(tx_power, gain, distance, p) / attenuation
}

/// MRC-combined SNR (plain sum).
pub fn combined_snr(snrs: &[f64]) -> f64 {
    snrs.iter().fold(0.0, |acc, s| acc + s)
}

/// Rate of MRC-colluding eavesdroppers.
pub fn colluded_rate(snrs: &[f64], bandwidth: f64) -> f64 {
    bandwidth * log2_1p(combined_snr(snrs))
}

/// Both transmitting arrays and the receiver each one aims at.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkSetup {
    pub arrays: [ArrayState; 2],
    /// Receiver of array `i` (a UAV of the other swarm).
    pub receivers: [Position3; 2],
}

impl LinkSetup {
    /// Arrays built from the solution with phases aligned at the receivers.
    pub fn from_solution(x: &Solution, s: &Scenario) -> Result<Self> {
        let mut setup = Self::unsteered(x)?;
        setup.steer(s.channel.wavelength)?;
        Ok(setup)
    }

    /// Arrays with zero initial phases.
    pub fn unsteered(x: &Solution) -> Result<Self> {
        let arrays = [
            ArrayState::new(x.positions[0].clone(), x.weights[0].clone())?,
            ArrayState::new(x.positions[1].clone(), x.weights[1].clone())?,
        ];
        let receivers = [
            x.positions[1][x.receivers[0]],
            x.positions[0][x.receivers[1]],
        ];
        Ok(Self { arrays, receivers })
    }

    /// Re-aligns the phases of both arrays at their receivers.
    pub fn steer(&mut self, wavelength: f64) -> Result<()> {
        for i in 0..2 {
            let (dir, _) = direction_and_distance(self.arrays[i].center, self.receivers[i])?;
            self.arrays[i].steer(dir, wavelength);
        }
        Ok(())
    }
}

/// Everything the objectives need from the radio side.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkAssessment {
    pub secrecy: SecrecyReport,
    pub a2a: [LinkBudget; 2],
    /// Peak sidelobe ratio of each array (linear).
    pub sidelobe_ratio: [f64; 2],
}

/// Evaluates both directions of the link. One pattern survey per array
/// supplies the gain integral for the legitimate and all eavesdropper
/// directions as well as the sidelobe peak.
pub fn assess_link(setup: &LinkSetup, s: &Scenario, grid: &AngularGrid) -> Result<LinkAssessment> {
    let p = &s.channel;
    let n_known = s.known_eavesdroppers.len();
    let eaves = s.all_eavesdroppers();
    let mut a2a = [LinkBudget {
        distance: 0.0,
        gain: 0.0,
        snr: 0.0,
        rate: 0.0,
    }; 2];
    let mut r_known = [0.0; 2];
    let mut r_all = [0.0; 2];
    let mut sll = [0.0; 2];
    for i in 0..2 {
        let array = &setup.arrays[i];
        let compiled = array.compile(p.wavelength);
        let (dir, distance) = direction_and_distance(array.center, setup.receivers[i])?;
        let survey = PatternSurvey::run_compiled(
            &compiled,
            dir,
            p.element_pattern,
            grid,
            grid.sidelobe_exclusion,
        );
        sll[i] = survey.sidelobe_ratio()?;
        let gain = survey.gain_from_magnitude(
            survey.target_magnitude,
            dir,
            p.element_pattern,
            p.efficiency,
        )?;
        let snr = snr_unfaded(p.tx_power[i], gain, distance, p);
        a2a[i] = LinkBudget {
            distance,
            gain,
            snr,
            rate: a2a_rate(p.tx_power[i], gain, distance, p),
        };

        let mut snrs = Vec::with_capacity(eaves.len());
        for e in &eaves {
            let (edir, ed) = direction_and_distance(array.center, *e)?;
            let mag = compiled.af(edir.unit_vector()).norm();
            let g = survey.gain_from_magnitude(mag, edir, p.element_pattern, p.efficiency)?;
            let elev = elevation_angle(array.center, *e, p.los_angle_unit);
            snrs.push(eavesdropper_snr(p.tx_power[i], g, ed, elev, p));
        }
        r_known[i] = colluded_rate(&snrs[..n_known], p.bandwidth);
        r_all[i] = colluded_rate(&snrs, p.bandwidth);
    }
    let c_ke = (a2a[0].rate - r_known[0]).min(a2a[1].rate - r_known[1]);
    let c_e = (a2a[0].rate - r_all[0]).min(a2a[1].rate - r_all[1]);
    Ok(LinkAssessment {
        secrecy: SecrecyReport {
            r_a2a: [a2a[0].rate, a2a[1].rate],
            r_eaves_known: r_known,
            r_eaves_all: r_all,
            c_ke,
            c_e,
        },
        a2a,
        sidelobe_ratio: sll,
    })
}

/// Secrecy report of a solution (phases aligned at the receivers).
pub fn secrecy_report(x: &Solution, s: &Scenario, grid: &AngularGrid) -> Result<SecrecyReport> {
    Ok(assess_link(&LinkSetup::from_solution(x, s)?, s, grid)?.secrecy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> ChannelParams {
        ChannelParams::urban_default(915e6)
    }

    #[test]
    fn zero_gain_gives_zero_rate() {
        assert_eq!(a2a_rate(1.0, 0.0, 100.0, &params()), 0.0);
    }

    #[test]
    fn unit_snr_gives_bandwidth() {
        let p = params();
        let d: f64 = 1000.0;
        // pick the power that makes the SNR exactly one
        let tx = p.noise_power / (p.path_loss_constant * d.powf(-p.path_loss_exponent));
        assert!((a2a_rate(tx, 1.0, d, &p) - 1e6).abs() < 1e-6);
    }

    #[test]
    fn rate_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let mut p = params();
            p.path_loss_exponent = 1.0 + 3.0 * rng.random::<f64>();
            let (tx, g, d) = (
                rng.random::<f64>(),
                10.0 * rng.random::<f64>(),
                10.0 + 5000.0 * rng.random::<f64>(),
            );
            let snr = tx * p.path_loss_constant * g / d.powf(p.path_loss_exponent) / p.noise_power;
            let want = p.bandwidth * (snr.ln_1p() / std::f64::consts::LN_2);
            let got = a2a_rate(tx, g, d, &p);
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn los_probability_cases() {
        let p = los_probability(9.61, 9.61, 0.16);
        assert!((p - 1.0 / 10.61).abs() < 1e-15);
        assert!((p - 0.09425).abs() < 5e-6);
        let mut prev = 0.0;
        for k in 0..90 {
            let q = los_probability(k as f64, 9.61, 0.16);
            assert!(q > prev);
            prev = q;
        }
        for th in [0.0, 10.0, 45.0, 90.0] {
            assert_eq!(los_probability(th, 0.0, 0.16), 1.0);
        }
    }

    #[test]
    fn eavesdropper_snr_reductions() {
        let mut p = params();
        p.mu_los = 1.0;
        p.mu_nlos = 1.0;
        let plain = 0.5 * p.path_loss_constant * 2.0 * 300f64.powf(-2.0) / p.noise_power;
        assert!((eavesdropper_snr(0.5, 2.0, 300.0, 20.0, &p) - plain).abs() <= 1e-12 * plain);

        let mut p = params();
        p.los_b1 = 0.0; // P_LoS = 1
        let want = 0.5 * p.path_loss_constant * 2.0 * 300f64.powf(-2.0) / p.mu_los / p.noise_power;
        assert!((eavesdropper_snr(0.5, 2.0, 300.0, 20.0, &p) - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn collusion_sums_snrs() {
        assert!((colluded_rate(&[3.0], 1e6) - 2e6).abs() < 1e-6);
        assert_eq!(colluded_rate(&[0.0, 0.0, 0.0], 1e6), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let snrs: Vec<f64> = (0..5).map(|_| rng.random::<f64>() * 10.0).collect();
        let mut acc = 0.0;
        for s in &snrs {
            acc += s;
        }
        assert_eq!(combined_snr(&snrs), acc);
    }
}
