//! Virtual antenna array patterns.
//!
//! Element coordinates are taken relative to the array centroid, so the
//! directions used everywhere else ("from the center of the swarm") match
//! the phase reference of the array factor. Relative coordinates change the
//! array factor only by a global phase, leaving |AF| untouched.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{ElementPattern, Position3};

/// Polar angle `theta` from +z in `[0, π]`, azimuth `phi` from +x in `[-π, π]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalDirection {
    pub theta: f64,
    pub phi: f64,
}

impl SphericalDirection {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) || !(-PI..=PI).contains(&phi) {
            return Err(Error::InvariantViolation(format!(
                "direction out of range: theta = {theta}, phi = {phi}"
            )));
        }
        Ok(Self { theta, phi })
    }

    pub fn unit_vector(self) -> Position3 {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Position3::new(st * cp, st * sp, ct)
    }

    /// Direction of a non-zero vector.
    pub fn from_vector(v: Position3) -> Result<Self> {
        let r = v.norm();
        if !(r > 0.0) {
            return Err(Error::CoincidentPoints);
        }
        let theta = (v.z / r).clamp(-1.0, 1.0).acos();
        let phi = v.y.atan2(v.x);
        Ok(Self { theta, phi })
    }

    /// Great-circle angle to another direction.
    pub fn angle_to(self, other: SphericalDirection) -> f64 {
        self.unit_vector()
            .dot(other.unit_vector())
            .clamp(-1.0, 1.0)
            .acos()
    }
}

/// Direction and Euclidean distance from `from` to `to`.
pub fn direction_and_distance(from: Position3, to: Position3) -> Result<(SphericalDirection, f64)> {
    let v = to - from;
    let d = v.norm();
    Ok((SphericalDirection::from_vector(v)?, d))
}

/// One virtual antenna array: element positions, excitation weights and
/// initial phases. `center` is always the centroid of the elements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayState {
    pub element_positions: Vec<Position3>,
    pub weights: Vec<f64>,
    pub initial_phases: Vec<f64>,
    pub center: Position3,
}

impl ArrayState {
    /// Array with zero initial phases.
    pub fn new(element_positions: Vec<Position3>, weights: Vec<f64>) -> Result<Self> {
        let n = element_positions.len();
        Self::with_phases(element_positions, weights, vec![0.0; n])
    }

    pub fn with_phases(
        element_positions: Vec<Position3>,
        weights: Vec<f64>,
        initial_phases: Vec<f64>,
    ) -> Result<Self> {
        let n = element_positions.len();
        if n == 0 || weights.len() != n || initial_phases.len() != n {
            return Err(Error::InvariantViolation(format!(
                "array lengths differ: {} positions, {} weights, {} phases",
                n,
                weights.len(),
                initial_phases.len()
            )));
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::InvariantViolation(
                "excitation weights must lie in [0, 1]".into(),
            ));
        }
        if initial_phases.iter().any(|p| !p.is_finite())
            || element_positions.iter().any(|p| !p.is_finite())
        {
            return Err(Error::InvariantViolation("non-finite array state".into()));
        }
        let center = Position3::centroid(&element_positions);
        Ok(Self {
            element_positions,
            weights,
            initial_phases,
            center,
        })
    }

    pub fn len(&self) -> usize {
        self.element_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.element_positions.is_empty()
    }

    /// Phases that make every element arrive in phase along `toward`.
    pub fn alignment_phases(&self, toward: SphericalDirection, wavelength: f64) -> Vec<f64> {
        let k = 2.0 * PI / wavelength;
        let u = toward.unit_vector();
        self.element_positions
            .iter()
            .map(|p| -k * (*p - self.center).dot(u))
            .collect()
    }

    /// Sets [`Self::alignment_phases`] as the initial phases.
    pub fn steer(&mut self, toward: SphericalDirection, wavelength: f64) {
        self.initial_phases = self.alignment_phases(toward, wavelength);
    }

    pub(crate) fn compile(&self, wavelength: f64) -> CompiledArray {
        let k = 2.0 * PI / wavelength;
        let mut kr = Vec::with_capacity(self.len());
        let mut w = Vec::with_capacity(self.len());
        let mut phase = Vec::with_capacity(self.len());
        for ((p, &wj), &ph) in self
            .element_positions
            .iter()
            .zip(&self.weights)
            .zip(&self.initial_phases)
        {
            // silent elements contribute nothing
            if wj == 0.0 {
                continue;
            }
            kr.push((*p - self.center) * k);
            w.push(wj);
            phase.push(ph);
        }
        CompiledArray { kr, w, phase }
    }
}

/// Array with wavenumber-scaled relative coordinates, ready for fast
/// evaluation along unit vectors.
pub(crate) struct CompiledArray {
    kr: Vec<Position3>,
    w: Vec<f64>,
    phase: Vec<f64>,
}

impl CompiledArray {
    #[inline]
    pub(crate) fn af(&self, u: Position3) -> Complex64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for ((kr, &w), &ph) in self.kr.iter().zip(&self.w).zip(&self.phase) {
            let (s, c) = (kr.x * u.x + kr.y * u.y + kr.z * u.z + ph).sin_cos();
            re += w * c;
            im += w * s;
        }
        Complex64::new(re, im)
    }

    #[inline]
    pub(crate) fn af_norm_sqr(&self, u: Position3) -> f64 {
        self.af(u).norm_sqr()
    }
}

/// Array factor of `a` along `d`.
///
/// Path differences are carried in two-part arithmetic and reduced modulo a
/// whole wavelength before the trig calls, so large apertures keep full
/// precision. The pattern integrals use the plain single-pass sum.
pub fn array_factor(a: &ArrayState, d: SphericalDirection, wavelength: f64) -> Complex64 {
    let u = d.unit_vector();
    let mut af = Complex64::new(0.0, 0.0);
    for ((p, &w), &ph) in a
        .element_positions
        .iter()
        .zip(&a.weights)
        .zip(&a.initial_phases)
    {
        let (hi, lo) = path_cycles(*p, a.center, u, wavelength);
        let frac = (hi - hi.round()) + lo;
        af += Complex64::from_polar(w, 2.0 * PI * frac + ph);
    }
    af
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `(p - c)·u / λ` as an unevaluated sum `hi + lo`.
fn path_cycles(p: Position3, c: Position3, u: Position3, wavelength: f64) -> (f64, f64) {
    let (mut hi, mut lo) = (0.0, 0.0);
    for (pi, ci, ui) in [(p.x, c.x, u.x), (p.y, c.y, u.y), (p.z, c.z, u.z)] {
        let (d, de) = two_sum(pi, -ci);
        let prod = d * ui;
        let err = d.mul_add(ui, -prod);
        let (s, e) = two_sum(hi, prod);
        hi = s;
        lo += e + err + de * ui;
    }
    let (hi, e) = two_sum(hi, lo);
    let q = hi / wavelength;
    let rem = (-q).mul_add(wavelength, hi) + e;
    (q, rem / wavelength)
}

/// Fine sampling cap around the evaluated target direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementWindow {
    /// Cap half-angle, rad.
    pub half_angle: f64,
    /// Sampling resolution inside the cap, rad.
    pub resolution: f64,
}

/// Discretization of the sphere for the gain integral and the sidelobe
/// search. Coarse cells are sampled at their midpoints; the optional cap
/// around the target is sampled in local polar rings and replaces the
/// coarse cells whose midpoints fall inside it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularGrid {
    pub theta_step: f64,
    pub phi_step: f64,
    pub refinement: Option<RefinementWindow>,
    /// Half-angle of the mainlobe cone excluded from the sidelobe search, rad.
    #[serde(default = "default_exclusion")]
    pub sidelobe_exclusion: f64,
}

fn default_exclusion() -> f64 {
    1f64.to_radians()
}

impl AngularGrid {
    /// Uniform grid with `step_deg` in both angles and no refinement.
    pub fn uniform(step_deg: f64) -> Self {
        let s = step_deg.to_radians();
        Self {
            theta_step: s,
            phi_step: s,
            refinement: None,
            sidelobe_exclusion: default_exclusion(),
        }
    }

    /// 1° coarse grid with a 2° cap at 0.05°.
    pub fn standard() -> Self {
        Self::uniform(1.0).refined(2.0, 0.05)
    }

    /// 5° coarse grid with a 2° cap at 0.1°, used at desk scale.
    pub fn desk() -> Self {
        Self::uniform(5.0).refined(2.0, 0.1)
    }

    pub fn refined(mut self, half_angle_deg: f64, resolution_deg: f64) -> Self {
        self.refinement = Some(RefinementWindow {
            half_angle: half_angle_deg.to_radians(),
            resolution: resolution_deg.to_radians(),
        });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_step > 0.0 && self.phi_step > 0.0 && self.sidelobe_exclusion >= 0.0) {
            return Err(Error::InvalidConfig(
                "grid resolutions must be positive".into(),
            ));
        }
        if let Some(r) = self.refinement {
            if !(r.resolution > 0.0 && r.half_angle > r.resolution) {
                return Err(Error::InvalidConfig(
                    "refinement half-angle must exceed its resolution".into(),
                ));
            }
        }
        Ok(())
    }

    fn coarse_counts(&self) -> (usize, usize) {
        let nt = ((PI / self.theta_step).round() as usize).max(1);
        let np = ((2.0 * PI / self.phi_step).round() as usize).max(1);
        (nt, np)
    }

    /// Midpoint `(theta, phi)` of every coarse cell, row-major in theta.
    pub fn coarse_midpoints(&self) -> Vec<SphericalDirection> {
        let (nt, np) = self.coarse_counts();
        let dt = PI / nt as f64;
        let dp = 2.0 * PI / np as f64;
        let mut out = Vec::with_capacity(nt * np);
        for i in 0..nt {
            let theta = (i as f64 + 0.5) * dt;
            for j in 0..np {
                let phi = -PI + (j as f64 + 0.5) * dp;
                out.push(SphericalDirection { theta, phi });
            }
        }
        out
    }

    /// Visits every quadrature sample as `(unit vector, cos θ, solid-angle
    /// weight, angle-to-target test)`. `beyond(c)` is true when the sample
    /// lies farther than the angle whose cosine is `c` from the target.
    fn visit(
        &self,
        target: Position3,
        mut f: impl FnMut(Position3, f64, f64, &dyn Fn(f64) -> bool),
    ) {
        let (nt, np) = self.coarse_counts();
        let dt = PI / nt as f64;
        let dp = 2.0 * PI / np as f64;
        let cap_cos = self.refinement.map(|r| r.half_angle.cos());
        let phis: Vec<(f64, f64)> = (0..np)
            .map(|j| (-PI + (j as f64 + 0.5) * dp).sin_cos())
            .collect();
        for i in 0..nt {
            let (st, ct) = ((i as f64 + 0.5) * dt).sin_cos();
            let weight = st * dt * dp;
            for &(sp, cp) in &phis {
                let u = Position3::new(st * cp, st * sp, ct);
                let cos_to_target = u.dot(target);
                if cap_cos.is_some_and(|c| cos_to_target > c) {
                    continue;
                }
                f(u, ct, weight, &|c| cos_to_target < c);
            }
        }
        let Some(r) = self.refinement else {
            return;
        };
        let (e1, e2) = orthonormal_pair(target);
        let n_alpha = ((r.half_angle / r.resolution).ceil() as usize).max(1);
        let da = r.half_angle / n_alpha as f64;
        for i in 0..n_alpha {
            let alpha = (i as f64 + 0.5) * da;
            let (sa, ca) = alpha.sin_cos();
            let n_beta = ((2.0 * PI * sa / r.resolution).ceil() as usize).max(8);
            let db = 2.0 * PI / n_beta as f64;
            let weight = sa * da * db;
            for j in 0..n_beta {
                let (sb, cb) = ((j as f64 + 0.5) * db).sin_cos();
                let u = target * ca + (e1 * cb + e2 * sb) * sa;
                f(u, u.z, weight, &|c| ca < c);
            }
        }
    }
}

impl Default for AngularGrid {
    fn default() -> Self {
        Self::standard()
    }
}

fn orthonormal_pair(t: Position3) -> (Position3, Position3) {
    // pick the axis least aligned with t
    let a = if t.x.abs() <= t.y.abs() && t.x.abs() <= t.z.abs() {
        Position3::new(1.0, 0.0, 0.0)
    } else if t.y.abs() <= t.z.abs() {
        Position3::new(0.0, 1.0, 0.0)
    } else {
        Position3::new(0.0, 0.0, 1.0)
    };
    let e1 = cross(t, a);
    let e1 = e1 * (1.0 / e1.norm());
    let e2 = cross(t, e1);
    (e1, e2)
}

fn cross(a: Position3, b: Position3) -> Position3 {
    Position3::new(
        a.y * b.z - a.z * b.y,
        a.z * b.x - a.x * b.z,
        a.x * b.y - a.y * b.x,
    )
}

/// One pass over the grid for a given target: the pattern integral
/// (denominator of the directive gain) and the largest |AF| outside the
/// mainlobe exclusion cone.
#[derive(Clone, Debug)]
pub struct PatternSurvey {
    /// ∬ |AF|² w² sin θ dθ dφ.
    pub integral: f64,
    /// |AF| toward the target.
    pub target_magnitude: f64,
    /// max |AF| over samples outside the exclusion cone.
    pub peak_sidelobe: f64,
}

impl PatternSurvey {
    pub fn run(
        a: &ArrayState,
        target: SphericalDirection,
        wavelength: f64,
        pattern: ElementPattern,
        grid: &AngularGrid,
        exclusion_half_angle: f64,
    ) -> Self {
        let compiled = a.compile(wavelength);
        Self::run_compiled(&compiled, target, pattern, grid, exclusion_half_angle)
    }

    pub(crate) fn run_compiled(
        compiled: &CompiledArray,
        target: SphericalDirection,
        pattern: ElementPattern,
        grid: &AngularGrid,
        exclusion_half_angle: f64,
    ) -> Self {
        let t = target.unit_vector();
        let excl_cos = exclusion_half_angle.cos();
        let mut integral = 0.0;
        let mut peak2: f64 = 0.0;
        grid.visit(t, |u, ct, weight, beyond| {
            let m2 = compiled.af_norm_sqr(u);
            let w = pattern.magnitude(ct);
            integral += m2 * w * w * weight;
            if m2 > peak2 && beyond(excl_cos) {
                peak2 = m2;
            }
        });
        Self {
            integral,
            target_magnitude: compiled.af(t).norm(),
            peak_sidelobe: peak2.sqrt(),
        }
    }

    /// Directive gain toward `d` given this survey's integral.
    pub(crate) fn gain_from_magnitude(
        &self,
        magnitude: f64,
        d: SphericalDirection,
        pattern: ElementPattern,
        efficiency: f64,
    ) -> Result<f64> {
        if !(self.integral > 0.0) {
            return Err(Error::DegenerateArray);
        }
        let w = pattern.magnitude(d.theta.cos());
        Ok(4.0 * PI * magnitude * magnitude * w * w * efficiency / self.integral)
    }

    /// `peak_sidelobe / target_magnitude`.
    pub fn sidelobe_ratio(&self) -> Result<f64> {
        if !(self.target_magnitude > 0.0) {
            return Err(Error::DegenerateArray);
        }
        Ok(self.peak_sidelobe / self.target_magnitude)
    }
}

/// Directive gain of `a` toward `target` (linear).
pub fn antenna_gain(
    a: &ArrayState,
    target: SphericalDirection,
    wavelength: f64,
    efficiency: f64,
    pattern: ElementPattern,
    grid: &AngularGrid,
) -> Result<f64> {
    let compiled = a.compile(wavelength);
    let survey = PatternSurvey::run_compiled(&compiled, target, pattern, grid, 0.0);
    survey.gain_from_magnitude(survey.target_magnitude, target, pattern, efficiency)
}

/// Largest |AF| outside the cone of `exclusion_half_angle` around `target`,
/// relative to |AF(target)|.
pub fn max_sidelobe_ratio(
    a: &ArrayState,
    target: SphericalDirection,
    wavelength: f64,
    grid: &AngularGrid,
    exclusion_half_angle: f64,
) -> Result<f64> {
    PatternSurvey::run(
        a,
        target,
        wavelength,
        ElementPattern::Isotropic,
        grid,
        exclusion_half_angle,
    )
    .sidelobe_ratio()
}

/// Linear amplitude ratio to dB.
pub fn ratio_to_db(ratio: f64) -> f64 {
    20.0 * ratio.log10()
}

/// Row of a sampled beam pattern.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PatternSample {
    pub theta: f64,
    pub phi: f64,
    pub magnitude: f64,
    pub gain: f64,
}

/// |AF| and directive gain at every coarse midpoint of `grid`.
pub fn sample_pattern(
    a: &ArrayState,
    wavelength: f64,
    efficiency: f64,
    pattern: ElementPattern,
    grid: &AngularGrid,
) -> Result<Vec<PatternSample>> {
    let compiled = a.compile(wavelength);
    let flat = AngularGrid {
        refinement: None,
        ..*grid
    };
    let survey = PatternSurvey::run_compiled(
        &compiled,
        SphericalDirection {
            theta: FRAC_PI_2,
            phi: 0.0,
        },
        pattern,
        &flat,
        0.0,
    );
    flat.coarse_midpoints()
        .into_iter()
        .map(|d| {
            let magnitude = compiled.af(d.unit_vector()).norm();
            Ok(PatternSample {
                theta: d.theta,
                phi: d.phi,
                magnitude,
                gain: survey.gain_from_magnitude(magnitude, d, pattern, efficiency)?,
            })
        })
        .collect()
}
