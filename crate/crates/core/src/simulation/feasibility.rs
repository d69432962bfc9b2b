//! Whether a periodic reference stays inside the per-axis safe regions.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::polytope::Membership;
use crate::robots::SafeProfile;

/// Sampled `(t, position, velocity)` for each axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisReference {
    pub times: Vec<f64>,
    /// `[axis][sample] = (position, velocity)`.
    pub axes: Vec<Vec<(f64, f64)>>,
}

/// One period of a circle of `radius` traversed at `frequency` Hz.
pub fn circle_reference(radius: f64, frequency: f64, samples_per_period: usize) -> AxisReference {
    let w = 2.0 * PI * frequency;
    let times: Vec<f64> = (0..samples_per_period)
        .map(|k| k as f64 / (samples_per_period as f64 * frequency))
        .collect();
    let x = times.iter().map(|&t| (radius * (w * t).cos(), -radius * w * (w * t).sin())).collect();
    let y = times.iter().map(|&t| (radius * (w * t).sin(), radius * w * (w * t).cos())).collect();
    AxisReference { times, axes: vec![x, y] }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// `(axis, sample index, time)` of the first sample outside its region.
    pub first_violation: Option<(usize, usize, f64)>,
    pub peak_speed: f64,
}

pub fn reference_feasibility(profiles: &[&SafeProfile<f64>], reference: &AxisReference) -> FeasibilityReport {
    let mut first = None;
    for (k, &t) in reference.times.iter().enumerate() {
        let bad = profiles.iter().zip(&reference.axes).position(|(prof, axis)| {
            let (p, v) = axis[k];
            prof.membership(&DVector::from_vec(vec![p, v])) == Membership::Outside
        });
        if let Some(axis) = bad {
            first = Some((axis, k, t));
            break;
        }
    }
    let peak_speed = (0..reference.times.len())
        .map(|k| reference.axes.iter().map(|a| a[k].1 * a[k].1).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    FeasibilityReport {
        feasible: first.is_none(),
        first_violation: first,
        peak_speed,
    }
}
