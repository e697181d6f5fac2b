use crate::error::{Error, Result};
use crate::objectives::ObjectiveVector;

/// Exact hypervolume dominated by `points` and bounded by `reference`,
/// computed by slicing along the third objective and sweeping each slice in
/// two dimensions. Every point must be strictly better than `reference` in
/// every objective.
pub fn hypervolume(points: &[ObjectiveVector], reference: &ObjectiveVector) -> Result<f64> {
    let r = reference.as_array();
    let pts: Vec<[f64; 3]> = points.iter().map(|p| p.as_array()).collect();
    if pts.iter().any(|p| (0..3).any(|o| !(p[o] < r[o]))) {
        return Err(Error::ReferenceDominated);
    }
    let mut by_g3 = pts.clone();
    by_g3.sort_by(|a, b| a[2].total_cmp(&b[2]));
    let mut volume = 0.0;
    let mut active: Vec<[f64; 2]> = Vec::with_capacity(by_g3.len());
    for (k, p) in by_g3.iter().enumerate() {
        active.push([p[0], p[1]]);
        let next = by_g3.get(k + 1).map_or(r[2], |q| q[2]);
        let depth = next - p[2];
        if depth > 0.0 {
            volume += area_2d(&mut active, [r[0], r[1]]) * depth;
        }
    }
    Ok(volume)
}

fn area_2d(points: &mut [[f64; 2]], r: [f64; 2]) -> f64 {
    points.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut floor = r[1];
    for p in points.iter() {
        if p[1] < floor {
            area += (r[0] - p[0]) * (floor - p[1]);
            floor = p[1];
        }
    }
    area
}

/// Reference point for a group of archives: the nadir of all entries pushed
/// outward by a tenth of the larger of its magnitude and the objective's
/// range (at least 1e-9), so every entry is strictly inside.
pub fn reference_point<'a>(
    points: impl IntoIterator<Item = &'a ObjectiveVector>,
) -> Option<ObjectiveVector> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    let mut any = false;
    for p in points {
        any = true;
        for (o, v) in p.as_array().into_iter().enumerate() {
            lo[o] = lo[o].min(v);
            hi[o] = hi[o].max(v);
        }
    }
    if !any {
        return None;
    }
    let mut r = [0.0; 3];
    for o in 0..3 {
        let margin = (0.1 * hi[o].abs()).max(0.1 * (hi[o] - lo[o])).max(1e-9);
        r[o] = hi[o] + margin;
    }
    Some(ObjectiveVector::from_array(r))
}
