//! Rotary-wing propulsion power and repositioning energy.
//!
//! Each UAV flies a straight leg from its start position to its assigned
//! position at the maximum-range speed, starting and ending at rest, so the
//! kinetic term of the 3D energy model vanishes. Descents would give a
//! negative potential term; per-leg energy is clamped at zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{EnergyParams, Position3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlightLeg {
    pub start: Position3,
    pub end: Position3,
    /// m/s
    pub cruise_speed: f64,
}

/// Propulsion power at horizontal speed `v`, W.
pub fn propulsion_power(v: f64, e: &EnergyParams) -> f64 {
    let v2 = v * v;
    let v0_2 = e.hover_induced_velocity * e.hover_induced_velocity;
    let blade = e.blade_profile_power * (1.0 + 3.0 * v2 / (e.tip_speed * e.tip_speed));
    let induced =
        e.induced_power * ((1.0 + v2 * v2 / (4.0 * v0_2 * v0_2)).sqrt() - v2 / (2.0 * v0_2)).sqrt();
    let parasite =
        0.5 * e.fuselage_drag_ratio * e.air_density * e.rotor_solidity * e.rotor_disc_area * v2 * v;
    blade + induced + parasite
}

/// Speed minimizing energy per meter, `P(v)/v`, by golden-section search
/// on `[0.1, v_tip]`.
pub fn max_range_speed(e: &EnergyParams) -> f64 {
    let cost = |v: f64| propulsion_power(v, e) / v;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.1, e.tip_speed);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (cost(c), cost(d));
    while b - a > 1e-5 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = cost(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = cost(d);
        }
    }
    0.5 * (a + b)
}

/// Unclamped terms of a rest-to-rest leg: `(propulsion, kinetic, potential)`.
pub fn leg_energy_terms(leg: &FlightLeg, e: &EnergyParams) -> Result<(f64, f64, f64)> {
    let dist = leg.start.distance(leg.end);
    if dist == 0.0 {
        return Ok((0.0, 0.0, 0.0));
    }
    if !(leg.cruise_speed > 0.0) {
        return Err(Error::ZeroSpeed);
    }
    let propulsion = propulsion_power(leg.cruise_speed, e) * dist / leg.cruise_speed;
    // v(0) = v(T) = 0
    let kinetic = 0.0;
    let potential = e.mass * e.gravity * (leg.end.z - leg.start.z);
    Ok((propulsion, kinetic, potential))
}

/// Energy of one leg, J, clamped at zero.
pub fn leg_energy(leg: &FlightLeg, e: &EnergyParams) -> Result<f64> {
    let (p, k, g) = leg_energy_terms(leg, e)?;
    Ok((p + k + g).max(0.0))
}

/// Total energy to move every UAV from `from[j]` to `to[j]` at `speed`.
pub fn repositioning_energy(
    from: &[Position3],
    to: &[Position3],
    speed: f64,
    e: &EnergyParams,
) -> Result<f64> {
    from.iter().zip(to).try_fold(0.0, |acc, (&start, &end)| {
        Ok(acc
            + leg_energy(
                &FlightLeg {
                    start,
                    end,
                    cruise_speed: speed,
                },
                e,
            )?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> EnergyParams {
        EnergyParams::default()
    }

    #[test]
    fn hover_power_is_blade_plus_induced() {
        let e = defaults();
        assert_eq!(
            propulsion_power(0.0, &e),
            e.blade_profile_power + e.induced_power
        );
    }

    #[test]
    fn power_matches_scalar_formula() {
        let e = defaults();
        for v in [0.5, 4.03 * 2f64.sqrt(), 10.0, 17.3, 33.0, 80.0] {
            let want = 79.86 * (1.0 + 3.0 * v * v / (120.0 * 120.0))
                + 88.63
                    * ((1.0 + v.powi(4) / (4.0 * 4.03f64.powi(4))).sqrt()
                        - v * v / (2.0 * 4.03 * 4.03))
                        .sqrt()
                + 0.5 * 0.6 * 1.225 * 0.05 * 0.503 * v.powi(3);
            let got = propulsion_power(v, &e);
            assert!((got - want).abs() <= 1e-12 * want, "{v}: {got} vs {want}");
        }
    }

    #[test]
    fn parasite_term_dominates_at_speed() {
        let e = defaults();
        let parasite = |v: f64| 0.5 * 0.6 * 1.225 * 0.05 * 0.503 * v * v * v;
        // the cubic term's share of P grows monotonically with speed
        let mut prev_share = 0.0;
        let mut prev_ratio = 0.0;
        for v in [30.0, 60.0, 120.0, 240.0, 480.0] {
            let share = parasite(v) / propulsion_power(v, &e);
            let ratio = propulsion_power(2.0 * v, &e) / propulsion_power(v, &e);
            assert!(share > prev_share && ratio > prev_ratio, "{v}");
            prev_share = share;
            prev_ratio = ratio;
            if v >= 120.0 {
                assert!((ratio - 8.0).abs() / 8.0 < 0.05, "{v}: {ratio}");
            }
        }
    }

    #[test]
    fn max_range_speed_is_stationary() {
        let e = defaults();
        let v = max_range_speed(&e);
        assert!(v > 0.1 && v < e.tip_speed);
        let cost = |v: f64| propulsion_power(v, &e) / v;
        let h = 1e-3;
        let slope = (cost(v + h) - cost(v - h)) / (2.0 * h);
        assert!(slope.abs() < 1e-3, "slope {slope} at {v}");
        for k in 0..1000 {
            let u = 0.1 + (e.tip_speed - 0.1) * k as f64 / 999.0;
            assert!(cost(v) <= cost(u) + 1e-12);
        }
    }

    #[test]
    fn legs() {
        let e = defaults();
        let v = max_range_speed(&e);
        let p = Position3::new(1.0, 2.0, 80.0);
        let stay = FlightLeg {
            start: p,
            end: p,
            cruise_speed: v,
        };
        assert_eq!(leg_energy(&stay, &e).unwrap(), 0.0);

        let climb = FlightLeg {
            start: p,
            end: p + Position3::new(0.0, 0.0, 10.0),
            cruise_speed: v,
        };
        let (prop, kin, pot) = leg_energy_terms(&climb, &e).unwrap();
        assert_eq!(kin, 0.0);
        assert!((pot - 196.0).abs() < 1e-9);
        assert!((leg_energy(&climb, &e).unwrap() - (prop + 196.0)).abs() < 1e-9);

        let descent = FlightLeg {
            start: p,
            end: p - Position3::new(0.0, 0.0, 10.0),
            cruise_speed: v,
        };
        let (prop, _, pot) = leg_energy_terms(&descent, &e).unwrap();
        assert!((pot + 196.0).abs() < 1e-9);
        // a 10 m descent at v* costs less propulsion than it releases
        assert!(prop < 196.0);
        assert_eq!(leg_energy(&descent, &e).unwrap(), 0.0);

        let stuck = FlightLeg {
            start: p,
            end: p + Position3::new(1.0, 0.0, 0.0),
            cruise_speed: 0.0,
        };
        assert!(matches!(leg_energy(&stuck, &e), Err(Error::ZeroSpeed)));
    }
}
