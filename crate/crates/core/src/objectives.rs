//! Decision variables, the three objectives in minimization form and the
//! constraint repair operator.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::beamforming::{ratio_to_db, AngularGrid};
use crate::channel::{assess_link, LinkAssessment, LinkSetup};
use crate::energy::{max_range_speed, repositioning_energy};
use crate::error::{Error, Result};
use crate::scenario::{closest_violation, read_envelope, write_json, AreaBox, Position3, Scenario};

pub const SOLUTION_FORMAT: &str = "secbeam-solution";
pub const SOLUTION_VERSION: u64 = 1;

/// Push-apart moves allowed per UAV before a solution is declared infeasible.
const REPAIR_MOVES_PER_UAV: usize = 200;
const REPAIR_EPS: f64 = 1e-9;

/// `X = {P, Ω, u}`.
///
/// `receivers[i]` is the 0-based index, inside swarm `1 - i`, of the UAV
/// that array `i` transmits to. The selected receiver keeps transmitting
/// as an element of its own array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub positions: [Vec<Position3>; 2],
    pub weights: [Vec<f64>; 2],
    pub receivers: [usize; 2],
}

impl Solution {
    /// Every UAV stays at its start position with full excitation.
    pub fn at_start(s: &Scenario) -> Self {
        let n = s.n_uav();
        Self {
            positions: s.swarm_initial_positions.clone(),
            weights: [vec![1.0; n], vec![1.0; n]],
            receivers: [0, 0],
        }
    }

    pub fn n_uav(&self) -> usize {
        self.positions[0].len()
    }

    fn has_shape(&self, n: usize) -> bool {
        self.positions.iter().all(|p| p.len() == n) && self.weights.iter().all(|w| w.len() == n)
    }
}

/// Constraint check for box, weight, receiver and separation limits.
pub fn is_feasible(x: &Solution, s: &Scenario) -> bool {
    let n = s.n_uav();
    if !x.has_shape(n) || x.receivers.iter().any(|&u| u >= n) {
        return false;
    }
    for i in 0..2 {
        if x.positions[i]
            .iter()
            .any(|p| !p.is_finite() || !s.area_bounds[i].contains(*p))
        {
            return false;
        }
        if x.weights[i].iter().any(|w| !(0.0..=1.0).contains(w)) {
            return false;
        }
        if closest_violation(&x.positions[i], s.d_min).is_some() {
            return false;
        }
    }
    true
}

/// Result of [`repair`]. Infeasible solutions are kept so callers can
/// inspect them, but the optimizer treats them as dominated by every
/// feasible one.
#[derive(Clone, Debug, PartialEq)]
pub struct RepairOutcome {
    pub solution: Solution,
    pub feasible: bool,
}

/// Clamps positions, weights and receiver indices into range, then pushes
/// apart the closest pair that violates `d_min` until none remains or the
/// move budget runs out.
pub fn repair(x: &Solution, s: &Scenario) -> RepairOutcome {
    let n = s.n_uav();
    let mut y = x.clone();
    if !y.has_shape(n) {
        return RepairOutcome {
            solution: y,
            feasible: false,
        };
    }
    for i in 0..2 {
        let area = &s.area_bounds[i];
        for (p, start) in y.positions[i].iter_mut().zip(&s.swarm_initial_positions[i]) {
            if !p.is_finite() {
                *p = *start;
            }
            *p = area.clamp(*p);
        }
        for w in &mut y.weights[i] {
            *w = if w.is_nan() { 0.0 } else { w.clamp(0.0, 1.0) };
        }
        y.receivers[i] = y.receivers[i].min(n - 1);
    }
    let mut feasible = true;
    for i in 0..2 {
        feasible &= separate(&mut y.positions[i], &s.area_bounds[i], s.d_min);
    }
    RepairOutcome {
        solution: y,
        feasible,
    }
}

fn separate(points: &mut [Position3], area: &AreaBox, d_min: f64) -> bool {
    let budget = REPAIR_MOVES_PER_UAV * points.len();
    for _ in 0..budget {
        let Some((a, b, d)) = closest_violation(points, d_min) else {
            return true;
        };
        let step = (d_min - d) / 2.0 + REPAIR_EPS;
        let axis = if d > 0.0 {
            (points[b] - points[a]) * (1.0 / d)
        } else {
            Position3::new(1.0, 0.0, 0.0)
        };
        let fallbacks = [
            axis,
            Position3::new(1.0, 0.0, 0.0),
            Position3::new(0.0, 1.0, 0.0),
            Position3::new(0.0, 0.0, 1.0),
        ];
        let (pa, pb) = (points[a], points[b]);
        let mut best = (pa, pb, d);
        for (k, dir) in fallbacks.iter().enumerate() {
            // off-axis fallbacks need the full separation
            let s = if k == 0 {
                step
            } else {
                d_min / 2.0 + REPAIR_EPS
            };
            for sign in [1.0, -1.0] {
                let na = area.clamp(pa - *dir * (s * sign));
                let nb = area.clamp(pb + *dir * (s * sign));
                let nd = na.distance(nb);
                if nd > best.2 {
                    best = (na, nb, nd);
                }
                if nd >= d_min {
                    break;
                }
            }
            if best.2 >= d_min {
                break;
            }
        }
        if best.2 <= d {
            // boxed in along every axis
            return false;
        }
        points[a] = best.0;
        points[b] = best.1;
    }
    closest_violation(points, d_min).is_none()
}

/// `F = {-f1, f2, f3}`, all minimized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    /// g1 = −C_KE, bps.
    #[serde(rename = "g1")]
    pub neg_secrecy: f64,
    /// g2 = max over both arrays of the peak sidelobe ratio (linear).
    #[serde(rename = "g2")]
    pub sidelobe: f64,
    /// g3 = total repositioning energy, J.
    #[serde(rename = "g3")]
    pub energy: f64,
}

impl ObjectiveVector {
    pub const fn new(g1: f64, g2: f64, g3: f64) -> Self {
        Self {
            neg_secrecy: g1,
            sidelobe: g2,
            energy: g3,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.neg_secrecy, self.sidelobe, self.energy]
    }

    pub fn from_array(g: [f64; 3]) -> Self {
        Self::new(g[0], g[1], g[2])
    }

    /// Known secrecy capacity, bps.
    pub fn f1_bps(&self) -> f64 {
        -self.neg_secrecy
    }

    /// Peak sidelobe level, dB.
    pub fn f2_db(&self) -> f64 {
        ratio_to_db(self.sidelobe)
    }

    pub fn f3_joules(&self) -> f64 {
        self.energy
    }
}

/// Objectives together with the radio-side details they were built from.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub objectives: ObjectiveVector,
    pub link: LinkAssessment,
}

/// Objectives of a feasible solution.
pub fn evaluate(x: &Solution, s: &Scenario, grid: &AngularGrid) -> Result<ObjectiveVector> {
    Ok(evaluate_detailed(x, s, grid)?.objectives)
}

pub fn evaluate_detailed(x: &Solution, s: &Scenario, grid: &AngularGrid) -> Result<Evaluation> {
    if !is_feasible(x, s) {
        return Err(Error::InfeasibleInput);
    }
    let setup = LinkSetup::from_solution(x, s)?;
    let link = assess_link(&setup, s, grid)?;
    Ok(Evaluation {
        objectives: ObjectiveVector::new(
            -link.secrecy.c_ke,
            link.sidelobe_ratio[0].max(link.sidelobe_ratio[1]),
            swarm_energy(x, s)?,
        ),
        link,
    })
}

/// Energy for both swarms to fly from `P^r` to `x.positions`.
pub fn swarm_energy(x: &Solution, s: &Scenario) -> Result<f64> {
    let v = max_range_speed(&s.energy);
    let mut total = 0.0;
    for i in 0..2 {
        total +=
            repositioning_energy(&s.swarm_initial_positions[i], &x.positions[i], v, &s.energy)?;
    }
    Ok(total)
}

#[derive(Serialize, Deserialize)]
struct SolutionFile {
    format: String,
    version: u64,
    units: serde_json::Value,
    solution: Solution,
}

pub fn save_solution(x: &Solution, path: impl AsRef<Path>) -> Result<()> {
    write_json(
        path.as_ref(),
        &SolutionFile {
            format: SOLUTION_FORMAT.into(),
            version: SOLUTION_VERSION,
            units: serde_json::json!({
                "positions": "m",
                "weights": "linear, [0, 1]",
                "receivers": "0-based UAV index in the opposite swarm"
            }),
            solution: x.clone(),
        },
    )
}

pub fn load_solution(path: impl AsRef<Path>) -> Result<Solution> {
    let path = path.as_ref();
    let value = read_envelope(path, SOLUTION_FORMAT, SOLUTION_VERSION)?;
    let file: SolutionFile = serde_json::from_value(value)
        .map_err(|e| Error::MalformedFile(format!("{}: {e}", path.display())))?;
    Ok(file.solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_scenario, ScenarioSpec};

    fn small() -> Scenario {
        generate_scenario(
            21,
            &ScenarioSpec {
                n_uav: 4,
                ..ScenarioSpec::desk()
            },
        )
        .unwrap()
    }

    #[test]
    fn staying_put_costs_nothing() {
        let s = small();
        let mut x = Solution::at_start(&s);
        x.weights = [vec![0.3, 0.9, 0.5, 1.0], vec![1.0, 0.2, 0.7, 0.4]];
        x.receivers = [2, 1];
        let f = evaluate(&x, &s, &AngularGrid::desk()).unwrap();
        assert_eq!(f.energy, 0.0);
    }

    #[test]
    fn single_active_elements_give_flat_sidelobes() {
        let s = small();
        let mut x = Solution::at_start(&s);
        x.weights = [vec![0.0, 0.0, 1.0, 0.0], vec![0.6, 0.0, 0.0, 0.0]];
        let f = evaluate(&x, &s, &AngularGrid::desk()).unwrap();
        assert!((f.sidelobe - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unrepaired_input_is_refused() {
        let s = small();
        let mut x = Solution::at_start(&s);
        x.weights[0][0] = 1.5;
        assert!(matches!(
            evaluate(&x, &s, &AngularGrid::desk()),
            Err(Error::InfeasibleInput)
        ));
    }

    #[test]
    fn push_apart_close_pair() {
        let mut s = small();
        s.d_min = 0.5;
        let mut x = Solution::at_start(&s);
        let p = s.area_bounds[0].center();
        x.positions[0][0] = p;
        x.positions[0][1] = p + Position3::new(0.3, 0.0, 0.0);
        let out = repair(&x, &s);
        assert!(out.feasible);
        let (a, b) = (out.solution.positions[0][0], out.solution.positions[0][1]);
        assert!(a.distance(b) >= 0.5);
        assert!(s.area_bounds[0].contains(a) && s.area_bounds[0].contains(b));
    }

    #[test]
    fn coincident_pair_in_corner() {
        let s = small();
        let mut x = Solution::at_start(&s);
        x.positions[1][0] = s.area_bounds[1].max;
        x.positions[1][3] = s.area_bounds[1].max;
        let out = repair(&x, &s);
        assert!(out.feasible);
        assert!(is_feasible(&out.solution, &s));
    }

    #[test]
    fn feasible_input_is_a_fixed_point() {
        let s = small();
        let mut x = Solution::at_start(&s);
        x.weights = [vec![0.1, 0.2, 0.3, 0.4], vec![0.5, 0.6, 0.7, 0.8]];
        let out = repair(&x, &s);
        assert!(out.feasible);
        assert_eq!(out.solution, x);
    }

    #[test]
    fn clamps_weights_and_receivers() {
        let s = small();
        let mut x = Solution::at_start(&s);
        x.weights[0][2] = 1.7;
        x.weights[1][0] = -0.2;
        x.receivers = [9, 3];
        let out = repair(&x, &s);
        assert_eq!(out.solution.weights[0][2], 1.0);
        assert_eq!(out.solution.weights[1][0], 0.0);
        assert_eq!(out.solution.receivers, [3, 3]);
    }

    #[test]
    fn overcrowded_box_is_infeasible() {
        let mut s = small();
        s.area_bounds[0].max = s.area_bounds[0].min + Position3::new(0.2, 0.2, 0.0);
        let mut x = Solution::at_start(&s);
        for p in &mut x.positions[0] {
            *p = s.area_bounds[0].min;
        }
        assert!(!repair(&x, &s).feasible);
    }

    #[test]
    fn solution_file_round_trip() {
        let s = small();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.json");
        let mut x = Solution::at_start(&s);
        x.weights[0][1] = 0.123456789012345;
        x.receivers = [1, 2];
        save_solution(&x, &path).unwrap();
        assert_eq!(load_solution(&path).unwrap(), x);
    }
}
