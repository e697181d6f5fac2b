//! Problem instances: swarm start positions, reachable areas, eavesdroppers
//! and the channel/energy constants, plus the versioned scenario file.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub const SCENARIO_FORMAT: &str = "secbeam-scenario";
pub const SCENARIO_VERSION: u64 = 1;

/// Maximum rejection samples per placed point.
const PLACEMENT_ATTEMPTS: usize = 100_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Position3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Arithmetic mean of a non-empty point set.
    pub fn centroid(points: &[Position3]) -> Position3 {
        let n = points.len().max(1) as f64;
        let sum = points.iter().fold(Position3::default(), |acc, &p| acc + p);
        sum * (1.0 / n)
    }
}

impl Add for Position3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Position3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Position3 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Axis-aligned reachable region of one swarm; `min.z..max.z` is the
/// altitude range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaBox {
    pub min: Position3,
    pub max: Position3,
}

impl AreaBox {
    pub fn contains(&self, p: Position3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    pub fn clamp(&self, p: Position3) -> Position3 {
        Position3::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
            p.z.clamp(self.min.z, self.max.z),
        )
    }

    pub fn extent(&self) -> Position3 {
        self.max - self.min
    }

    pub fn center(&self) -> Position3 {
        (self.min + self.max) * 0.5
    }

    pub fn is_disjoint(&self, other: &AreaBox) -> bool {
        self.max.x < other.min.x
            || other.max.x < self.min.x
            || self.max.y < other.min.y
            || other.max.y < self.min.y
            || self.max.z < other.min.z
            || other.max.z < self.min.z
    }

    /// Affine map of `p` onto the unit cube (degenerate axes map to 0).
    pub fn normalize(&self, p: Position3) -> Position3 {
        let e = self.extent();
        let f = |v: f64, lo: f64, w: f64| if w > 0.0 { (v - lo) / w } else { 0.0 };
        Position3::new(
            f(p.x, self.min.x, e.x),
            f(p.y, self.min.y, e.y),
            f(p.z, self.min.z, e.z),
        )
    }

    pub fn denormalize(&self, u: Position3) -> Position3 {
        let e = self.extent();
        Position3::new(
            self.min.x + u.x * e.x,
            self.min.y + u.y * e.y,
            self.min.z + u.z * e.z,
        )
    }

    fn sample(&self, rng: &mut impl Rng) -> Position3 {
        let e = self.extent();
        Position3::new(
            self.min.x + rng.random::<f64>() * e.x,
            self.min.y + rng.random::<f64>() * e.y,
            self.min.z + rng.random::<f64>() * e.z,
        )
    }
}

/// Angle unit in which the LoS logistic constants are calibrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleUnit {
    Degrees,
    Radians,
}

/// Magnitude of one element's far-field pattern.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ElementPattern {
    /// w(θ, φ) = 1.
    Isotropic,
    /// Short vertical dipole, w(θ, φ) = |sin θ|.
    ShortDipole,
}

impl ElementPattern {
    #[inline]
    pub fn magnitude(&self, cos_theta: f64) -> f64 {
        match self {
            ElementPattern::Isotropic => 1.0,
            ElementPattern::ShortDipole => (1.0 - cos_theta * cos_theta).max(0.0).sqrt(),
        }
    }
}

/// Link-budget constants shared by both transmit directions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Carrier wavelength λ, m.
    pub wavelength: f64,
    /// Bandwidth B, Hz.
    pub bandwidth: f64,
    /// Total transmit power of each swarm, W.
    pub tx_power: [f64; 2],
    /// Path-loss constant K0.
    pub path_loss_constant: f64,
    /// Path-loss exponent α.
    pub path_loss_exponent: f64,
    /// Noise power σ², W.
    pub noise_power: f64,
    pub los_b1: f64,
    pub los_b2: f64,
    pub los_angle_unit: AngleUnit,
    /// Linear attenuation of LoS links.
    pub mu_los: f64,
    /// Linear attenuation of NLoS links.
    pub mu_nlos: f64,
    /// Array efficiency η.
    pub efficiency: f64,
    pub element_pattern: ElementPattern,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

impl ChannelParams {
    /// The "urban-default" preset. None of these constants are published
    /// alongside the model; they are conventional urban air-to-ground values
    /// and every field may be overridden.
    pub fn urban_default(carrier_hz: f64) -> Self {
        let wavelength = SPEED_OF_LIGHT / carrier_hz;
        Self {
            wavelength,
            bandwidth: 1e6,
            tx_power: [0.1, 0.1],
            // free-space loss at the 1 m reference distance
            path_loss_constant: (wavelength / (4.0 * PI)).powi(2),
            path_loss_exponent: 2.0,
            noise_power: dbm_to_watts(-90.0),
            los_b1: 9.61,
            los_b2: 0.16,
            los_angle_unit: AngleUnit::Degrees,
            mu_los: db_to_linear(1.0),
            mu_nlos: db_to_linear(20.0),
            efficiency: 1.0,
            element_pattern: ElementPattern::Isotropic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wavelength", self.wavelength),
            ("bandwidth", self.bandwidth),
            ("tx_power[0]", self.tx_power[0]),
            ("tx_power[1]", self.tx_power[1]),
            ("path_loss_constant", self.path_loss_constant),
            ("noise_power", self.noise_power),
            ("mu_los", self.mu_los),
            ("mu_nlos", self.mu_nlos),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvariantViolation(format!(
                    "channel.{name} must be > 0"
                )));
            }
        }
        if !(self.path_loss_exponent >= 1.0) {
            return Err(Error::InvariantViolation(
                "channel.path_loss_exponent must be >= 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::InvariantViolation(
                "channel.efficiency must lie in [0, 1]".into(),
            ));
        }
        if !(self.los_b1.is_finite() && self.los_b2.is_finite()) {
            return Err(Error::InvariantViolation(
                "LoS constants must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Rotary-wing propulsion constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    /// Blade profile power P_B, W.
    pub blade_profile_power: f64,
    /// Induced power P_I, W.
    pub induced_power: f64,
    /// Rotor tip speed, m/s.
    pub tip_speed: f64,
    /// Mean rotor induced velocity in hover, m/s.
    pub hover_induced_velocity: f64,
    pub fuselage_drag_ratio: f64,
    pub rotor_solidity: f64,
    /// Air density, kg/m³.
    pub air_density: f64,
    /// Rotor disc area, m².
    pub rotor_disc_area: f64,
    /// Airframe mass, kg.
    pub mass: f64,
    /// Gravitational acceleration, m/s².
    pub gravity: f64,
}

impl Default for EnergyParams {
    /// Standard rotary-wing parameter set from the UAV energy literature.
    fn default() -> Self {
        Self {
            blade_profile_power: 79.86,
            induced_power: 88.63,
            tip_speed: 120.0,
            hover_induced_velocity: 4.03,
            fuselage_drag_ratio: 0.6,
            rotor_solidity: 0.05,
            air_density: 1.225,
            rotor_disc_area: 0.503,
            mass: 2.0,
            gravity: 9.8,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.blade_profile_power,
            self.induced_power,
            self.tip_speed,
            self.hover_induced_velocity,
            self.fuselage_drag_ratio,
            self.rotor_solidity,
            self.air_density,
            self.rotor_disc_area,
            self.mass,
            self.gravity,
        ];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvariantViolation(
                "energy parameters must be strictly positive".into(),
            ))
        }
    }
}

/// Named parameter presets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    #[default]
    UrbanDefault,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "urban-default" => Ok(Preset::UrbanDefault),
            other => Err(Error::InvalidConfig(format!("unknown preset `{other}`"))),
        }
    }
}

/// A complete problem instance. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// P^r: start positions of both swarms, `N_U` each.
    pub swarm_initial_positions: [Vec<Position3>; 2],
    pub area_bounds: [AreaBox; 2],
    pub known_eavesdroppers: Vec<Position3>,
    /// Only used for post-hoc evaluation; never seen by the optimizer.
    pub unknown_eavesdroppers: Vec<Position3>,
    pub channel: ChannelParams,
    pub energy: EnergyParams,
    pub d_min: f64,
    pub rng_seed: u64,
}

impl Scenario {
    pub fn n_uav(&self) -> usize {
        self.swarm_initial_positions[0].len()
    }

    pub fn n_known(&self) -> usize {
        self.known_eavesdroppers.len()
    }

    /// Known and unknown eavesdroppers together.
    pub fn all_eavesdroppers(&self) -> Vec<Position3> {
        self.known_eavesdroppers
            .iter()
            .chain(&self.unknown_eavesdroppers)
            .copied()
            .collect()
    }

    /// Copy of the scenario with `unknown_eavesdroppers` emptied; this is
    /// the optimizer-visible view.
    pub fn known_view(&self) -> Scenario {
        Scenario {
            unknown_eavesdroppers: Vec::new(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvariantViolation(m));
        let n = self.swarm_initial_positions[0].len();
        if n < 2 || self.swarm_initial_positions[1].len() != n {
            return fail("both swarms need the same size N_U >= 2".into());
        }
        if !(self.d_min >= 0.0 && self.d_min.is_finite()) {
            return fail("d_min must be finite and non-negative".into());
        }
        for b in &self.area_bounds {
            if !(b.min.is_finite() && b.max.is_finite())
                || b.min.x > b.max.x
                || b.min.y > b.max.y
                || b.min.z > b.max.z
            {
                return fail("area box bounds are inverted or non-finite".into());
            }
            if b.min.z < 0.0 {
                return fail("area boxes must lie above ground".into());
            }
        }
        if !self.area_bounds[0].is_disjoint(&self.area_bounds[1]) {
            return fail("swarm areas overlap".into());
        }
        for (i, swarm) in self.swarm_initial_positions.iter().enumerate() {
            for (j, p) in swarm.iter().enumerate() {
                if !p.is_finite() || !self.area_bounds[i].contains(*p) {
                    return fail(format!(
                        "initial position {j} of swarm {i} lies outside its area"
                    ));
                }
            }
            if let Some((a, b, d)) = closest_violation(swarm, self.d_min) {
                return fail(format!(
                    "swarm {i}: UAVs {a} and {b} are {d:.4} m apart (d_min = {})",
                    self.d_min
                ));
            }
        }
        for e in self
            .known_eavesdroppers
            .iter()
            .chain(&self.unknown_eavesdroppers)
        {
            if !e.is_finite() || e.z != 0.0 {
                return fail("eavesdroppers must be finite ground points (z = 0)".into());
            }
        }
        if self
            .known_eavesdroppers
            .iter()
            .any(|k| self.unknown_eavesdroppers.contains(k))
        {
            return fail("known and unknown eavesdropper sets intersect".into());
        }
        self.channel.validate()?;
        self.energy.validate()?;
        Ok(())
    }
}

/// Closest pair `(a, b, distance)` with distance below `d_min`, if any.
pub(crate) fn closest_violation(points: &[Position3], d_min: f64) -> Option<(usize, usize, f64)> {
    let mut worst: Option<(usize, usize, f64)> = None;
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            let d = points[a].distance(points[b]);
            if d < d_min && worst.is_none_or(|(_, _, w)| d < w) {
                worst = Some((a, b, d));
            }
        }
    }
    worst
}

/// Parameters for [`generate_scenario`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub n_uav: usize,
    pub n_eaves_known: usize,
    pub n_eaves_unknown: usize,
    /// Distance between the two area centers, m.
    pub swarm_separation: f64,
    /// Side of each square area, m.
    pub area_side: f64,
    /// Altitude range `[low, high]`, m.
    pub altitude_range: [f64; 2],
    pub d_min: f64,
    /// Carrier frequency, Hz.
    pub carrier_frequency: f64,
    pub preset: Preset,
    /// Radius of the eavesdropper disc centered between the areas, m.
    pub eaves_mid_radius: f64,
    /// Radius of the eavesdropper disc around each area, m.
    pub eaves_surround_radius: f64,
    /// Minimum horizontal distance of any eavesdropper from an area center, m.
    pub eaves_standoff: f64,
    /// Total transmit power per swarm, W (overrides the preset).
    pub tx_power: Option<f64>,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            n_uav: 16,
            n_eaves_known: 4,
            n_eaves_unknown: 2,
            swarm_separation: 5000.0,
            area_side: 100.0,
            altitude_range: [70.0, 120.0],
            d_min: 0.5,
            carrier_frequency: 915e6,
            preset: Preset::UrbanDefault,
            eaves_mid_radius: 1500.0,
            eaves_surround_radius: 600.0,
            eaves_standoff: 150.0,
            tx_power: None,
        }
    }
}

impl ScenarioSpec {
    /// Reduced instance used by the desk-scale benchmarks.
    pub fn desk() -> Self {
        Self {
            n_uav: 8,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.n_uav < 2 {
            return bad("n_uav must be >= 2");
        }
        if !(self.area_side > 0.0) {
            return bad("area_side must be positive");
        }
        if !(self.swarm_separation > self.area_side) {
            return bad("swarm_separation must exceed area_side so the areas are disjoint");
        }
        let [lo, hi] = self.altitude_range;
        if !(lo >= 0.0 && hi >= lo) {
            return bad("altitude_range must satisfy 0 <= low <= high");
        }
        if !(self.d_min >= 0.0) || !(self.carrier_frequency > 0.0) {
            return bad("d_min must be >= 0 and carrier_frequency > 0");
        }
        if !(self.eaves_mid_radius >= 0.0
            && self.eaves_surround_radius >= 0.0
            && self.eaves_standoff >= 0.0)
        {
            return bad("eavesdropper radii must be non-negative");
        }
        Ok(())
    }
}

/// Builds a scenario deterministically from `(seed, spec)`.
///
/// Area 1 spans `[0, side]²` and area 2 is shifted along +x by the
/// separation. Start positions are uniform in each box subject to `d_min`.
/// Each eavesdropper picks one of three ground discs (between the areas,
/// or around either area) uniformly and is rejected while it sits closer
/// than the standoff to an area center.
pub fn generate_scenario(seed: u64, spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let side = spec.area_side;
    let [lo, hi] = spec.altitude_range;
    let area = |x0: f64| AreaBox {
        min: Position3::new(x0, 0.0, lo),
        max: Position3::new(x0 + side, side, hi),
    };
    let area_bounds = [area(0.0), area(spec.swarm_separation)];

    let mut rng = rng::stream(seed, Purpose::Scenario, 0, 0);
    let mut swarms: [Vec<Position3>; 2] = [Vec::new(), Vec::new()];
    for (i, swarm) in swarms.iter_mut().enumerate() {
        for _ in 0..spec.n_uav {
            let mut placed = false;
            for _ in 0..PLACEMENT_ATTEMPTS {
                let p = area_bounds[i].sample(&mut rng);
                if swarm.iter().all(|q| q.distance(p) >= spec.d_min) {
                    swarm.push(p);
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(Error::PlacementBudgetExhausted {
                    what: "UAV start position",
                    attempts: PLACEMENT_ATTEMPTS,
                });
            }
        }
    }

    let centers = [area_bounds[0].center(), area_bounds[1].center()];
    let mid = (centers[0] + centers[1]) * 0.5;
    let mut eaves = Vec::with_capacity(spec.n_eaves_known + spec.n_eaves_unknown);
    for _ in 0..spec.n_eaves_known + spec.n_eaves_unknown {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let (c, r) = match rng.random_range(0..3u32) {
                0 => (mid, spec.eaves_mid_radius),
                k => (centers[k as usize - 1], spec.eaves_surround_radius),
            };
            // uniform over the disc
            let rho = r * rng.random::<f64>().sqrt();
            let ang = 2.0 * PI * rng.random::<f64>();
            let p = Position3::new(c.x + rho * ang.cos(), c.y + rho * ang.sin(), 0.0);
            let clear = centers.iter().all(|a| {
                let dx = p.x - a.x;
                let dy = p.y - a.y;
                (dx * dx + dy * dy).sqrt() >= spec.eaves_standoff
            });
            if clear && !eaves.contains(&p) {
                eaves.push(p);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::PlacementBudgetExhausted {
                what: "eavesdropper",
                attempts: PLACEMENT_ATTEMPTS,
            });
        }
    }
    let unknown = eaves.split_off(spec.n_eaves_known);

    let mut channel = match spec.preset {
        Preset::UrbanDefault => ChannelParams::urban_default(spec.carrier_frequency),
    };
    if let Some(p) = spec.tx_power {
        channel.tx_power = [p, p];
    }
    let s = Scenario {
        swarm_initial_positions: swarms,
        area_bounds,
        known_eavesdroppers: eaves,
        unknown_eavesdroppers: unknown,
        channel,
        energy: EnergyParams::default(),
        d_min: spec.d_min,
        rng_seed: seed,
    };
    s.validate()?;
    Ok(s)
}

/// Length of [`condition_vector`] for a given instance size.
pub fn condition_dim(n_uav: usize, n_known: usize) -> usize {
    3 * 2 * n_uav + 2 * n_known
}

/// Environment factors for the generative model, normalized to `[0, 1]`.
///
/// Layout: swarm 1 start positions `(x, y, z)` by UAV, then swarm 2, then
/// the known eavesdroppers' `(x, y)`. UAV coordinates are normalized by
/// their own area box. Eavesdropper coordinates are normalized by the
/// bounding rectangle of both areas grown by the eavesdropper span
/// [`eaves_frame`], and clamped to `[0, 1]`.
pub fn condition_vector(s: &Scenario) -> Vec<f64> {
    let mut out = Vec::with_capacity(condition_dim(s.n_uav(), s.n_known()));
    for (i, swarm) in s.swarm_initial_positions.iter().enumerate() {
        for p in swarm {
            let u = s.area_bounds[i].normalize(*p);
            out.extend([u.x, u.y, u.z]);
        }
    }
    let frame = eaves_frame(s);
    for e in &s.known_eavesdroppers {
        let u = frame.normalize(*e);
        out.extend([u.x.clamp(0.0, 1.0), u.y.clamp(0.0, 1.0)]);
    }
    out
}

/// Inverse of [`condition_vector`]: start positions and known eavesdroppers.
pub fn decode_condition(s: &Scenario, c: &[f64]) -> Result<([Vec<Position3>; 2], Vec<Position3>)> {
    let expected = condition_dim(s.n_uav(), s.n_known());
    if c.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: c.len(),
        });
    }
    let n = s.n_uav();
    let mut swarms: [Vec<Position3>; 2] = [Vec::new(), Vec::new()];
    for (i, swarm) in swarms.iter_mut().enumerate() {
        for j in 0..n {
            let k = 3 * (i * n + j);
            swarm.push(s.area_bounds[i].denormalize(Position3::new(c[k], c[k + 1], c[k + 2])));
        }
    }
    let frame = eaves_frame(s);
    let eaves = c[6 * n..]
        .chunks(2)
        .map(|xy| {
            let p = frame.denormalize(Position3::new(xy[0], xy[1], 0.0));
            Position3::new(p.x, p.y, 0.0)
        })
        .collect();
    Ok((swarms, eaves))
}

/// Ground rectangle used to normalize eavesdropper coordinates: the hull
/// of both areas grown by half the center separation on every side.
pub fn eaves_frame(s: &Scenario) -> AreaBox {
    let [a, b] = &s.area_bounds;
    let sep = a.center().distance(b.center());
    let margin = 0.5 * sep;
    AreaBox {
        min: Position3::new(
            a.min.x.min(b.min.x) - margin,
            a.min.y.min(b.min.y) - margin,
            0.0,
        ),
        max: Position3::new(
            a.max.x.max(b.max.x) + margin,
            a.max.y.max(b.max.y) + margin,
            0.0,
        ),
    }
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    format: String,
    version: u64,
    units: serde_json::Value,
    scenario: Scenario,
}

fn scenario_units() -> serde_json::Value {
    serde_json::json!({
        "position": "m",
        "d_min": "m",
        "wavelength": "m",
        "bandwidth": "Hz",
        "tx_power": "W",
        "noise_power": "W",
        "mu_los": "linear",
        "mu_nlos": "linear",
        "los_b1_b2": "per channel.los_angle_unit",
        "energy.power": "W",
        "energy.speed": "m/s",
        "energy.air_density": "kg/m^3",
        "energy.rotor_disc_area": "m^2",
        "energy.mass": "kg",
        "energy.gravity": "m/s^2"
    })
}

/// Reads a versioned envelope, checking `format` and `version` before
/// touching the payload.
pub(crate) fn read_envelope(
    path: &Path,
    format: &'static str,
    version: u64,
) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::MalformedFile(format!("{}: {e}", path.display())))?;
    let found_format = value.get("format").and_then(|v| v.as_str());
    if found_format != Some(format) {
        return Err(Error::MalformedFile(format!(
            "{}: expected format `{format}`, found {:?}",
            path.display(),
            found_format
        )));
    }
    let found = value
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::MalformedFile(format!("{}: missing version", path.display())))?;
    if found != version {
        return Err(Error::SchemaVersion {
            format,
            found,
            expected: version,
        });
    }
    Ok(value)
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn save_scenario(s: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let file = ScenarioFile {
        format: SCENARIO_FORMAT.into(),
        version: SCENARIO_VERSION,
        units: scenario_units(),
        scenario: s.clone(),
    };
    write_json(path.as_ref(), &file)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let value = read_envelope(path, SCENARIO_FORMAT, SCENARIO_VERSION)?;
    let file: ScenarioFile = serde_json::from_value(value)
        .map_err(|e| Error::MalformedFile(format!("{}: {e}", path.display())))?;
    file.scenario.validate()?;
    Ok(file.scenario)
}
