//! Planar quadrotor tracking a reference while a second vehicle crosses its
//! path; the per-axis safe speed profiles are rebuilt at every tick.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{rk4_step, Sample, SimError, Trajectory};
use crate::ibc::default_lambda_grid;
use crate::polytope::Membership;
use crate::robots::{safe_speed_profile, AxisSpec, QuadrotorParams, SafeProfile};

/// Time-stamped obstacle positions, linearly interpolated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstacleTrace {
    pub times: Vec<f64>,
    pub positions: Vec<[f64; 2]>,
}

impl ObstacleTrace {
    pub fn new(times: Vec<f64>, positions: Vec<[f64; 2]>) -> Result<Self, SimError> {
        if times.is_empty() || times.len() != positions.len() {
            return Err(SimError::Scenario("obstacle trace needs matching, nonempty columns".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SimError::Scenario("obstacle time stamps must increase".into()));
        }
        Ok(Self { times, positions })
    }

    /// `x = amplitude cos(2 pi f t)`, `y = 0`, sampled at `rate` Hz.
    pub fn sinusoid(amplitude: f64, frequency: f64, rate: f64, duration: f64) -> Self {
        let count = (duration * rate).ceil() as usize + 1;
        let times: Vec<f64> = (0..count).map(|k| k as f64 / rate).collect();
        let positions = times
            .iter()
            .map(|&t| [amplitude * (2.0 * PI * frequency * t).cos(), 0.0])
            .collect();
        Self { times, positions }
    }

    /// Constant position.
    pub fn parked(at: [f64; 2], duration: f64) -> Self {
        Self {
            times: vec![0.0, duration.max(1.0)],
            positions: vec![at, at],
        }
    }

    fn last_index(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    pub fn position_at(&self, t: f64) -> [f64; 2] {
        let k = self.last_index(t);
        if k + 1 >= self.times.len() || t <= self.times[0] {
            return self.positions[k];
        }
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        let (a, b) = (self.positions[k], self.positions[k + 1]);
        [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]
    }

    /// Finite difference of the last two samples at or before `t`.
    pub fn velocity_at(&self, t: f64) -> [f64; 2] {
        let k = self.last_index(t);
        if k == 0 {
            return [0.0, 0.0];
        }
        let dt = self.times[k] - self.times[k - 1];
        let (a, b) = (self.positions[k - 1], self.positions[k]);
        [(b[0] - a[0]) / dt, (b[1] - a[1]) / dt]
    }

    /// Segment swept over `horizon` seconds at constant velocity.
    pub fn corridor(&self, t: f64, horizon: f64) -> ([f64; 2], [f64; 2]) {
        let p = self.position_at(t);
        let v = self.velocity_at(t);
        (p, [p[0] + v[0] * horizon, p[1] + v[1] * horizon])
    }
}

/// `p_i(t) = center_i - amplitude_i cos(2 pi f t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EgoReference {
    pub center: [f64; 2],
    pub amplitude: [f64; 2],
    pub frequency: f64,
}

impl EgoReference {
    pub fn position(&self, t: f64) -> [f64; 2] {
        let c = (2.0 * PI * self.frequency * t).cos();
        [self.center[0] - self.amplitude[0] * c, self.center[1] - self.amplitude[1] * c]
    }

    pub fn velocity(&self, t: f64) -> [f64; 2] {
        let w = 2.0 * PI * self.frequency;
        let s = (w * t).sin();
        [self.amplitude[0] * w * s, self.amplitude[1] * w * s]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AvoidanceOptions {
    pub params: QuadrotorParams<f64>,
    pub safety_radius: f64,
    /// Clearance kept beyond the safety radius when shrinking bounds.
    pub slack: f64,
    /// Extra distance at which a predicted corridor counts as a threat.
    pub trigger_margin: f64,
    pub prediction: f64,
    /// Replanning ticks per second.
    pub rate: f64,
    pub substeps: usize,
    pub horizon: f64,
    pub kp: f64,
    pub kd: f64,
    /// Level above which the safety feedback overrides tracking.
    pub gate: f64,
    /// Fraction of the braking budget given to speed on a shrunk axis.
    pub shrunk_speed_fraction: f64,
    pub replanning: bool,
}

impl Default for AvoidanceOptions {
    fn default() -> Self {
        Self {
            params: QuadrotorParams::default(),
            safety_radius: 0.64,
            slack: 0.2,
            trigger_margin: 1.0,
            prediction: 1.0,
            rate: 70.0,
            substeps: 10,
            horizon: 20.0,
            kp: 4.0,
            kd: 4.0,
            gate: 0.9,
            shrunk_speed_fraction: 0.5,
            replanning: true,
        }
    }
}

impl AvoidanceOptions {
    fn full_spec(&self) -> AxisSpec<f64> {
        let p = &self.params;
        AxisSpec {
            pos: p.position,
            vel: p.velocity,
            input: [-p.v_limit, p.v_limit],
            alpha: None,
        }
    }

    fn shrunk_spec(&self, lo: f64, hi: f64) -> AxisSpec<f64> {
        let p = &self.params;
        let h = (hi - lo) / 2.0;
        let cap = (self.shrunk_speed_fraction * p.v_limit * h).sqrt();
        AxisSpec {
            pos: [lo, hi],
            vel: [p.velocity[0].max(-cap), p.velocity[1].min(cap)],
            input: [-p.v_limit, p.v_limit],
            alpha: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AvoidanceOutcome {
    /// States `(x, y, x', y')`, inputs `(v1, v2)`.
    pub trajectory: Trajectory<f64>,
    pub obstacle: Vec<[f64; 2]>,
    pub distances: Vec<f64>,
    pub min_distance: f64,
    /// Wall time of each tick that rebuilt a profile, in seconds.
    pub rebuild_seconds: Vec<f64>,
    /// Ticks at which some axis ran with shrunk bounds.
    pub shrunk_ticks: usize,
}

impl AvoidanceOutcome {
    pub fn median_rebuild_seconds(&self) -> Option<f64> {
        if self.rebuild_seconds.is_empty() {
            return None;
        }
        let mut v = self.rebuild_seconds.clone();
        v.sort_by(f64::total_cmp);
        Some(v[v.len() / 2])
    }
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let s = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((p[0] - a[0] - s * d[0]).powi(2) + (p[1] - a[1] - s * d[1]).powi(2)).sqrt()
}

struct Candidate {
    profile: SafeProfile<f64>,
    slack: f64,
}

fn axis_state(s: &DVector<f64>, axis: usize) -> DVector<f64> {
    DVector::from_vec(vec![s[axis], s[axis + 2]])
}

/// Runs the scenario; with replanning off the full-range profiles stay
/// active throughout.
pub fn obstacle_avoidance_run(
    reference: &EgoReference,
    obstacle: &ObstacleTrace,
    opts: &AvoidanceOptions,
) -> Result<AvoidanceOutcome, SimError> {
    if opts.rate <= 0.0 || opts.substeps == 0 {
        return Err(SimError::BadStep(opts.rate));
    }
    let grid = default_lambda_grid::<f64>();
    let full = safe_speed_profile(&opts.full_spec(), &grid)?;
    let quad = opts.params.clone();
    let lim = quad.v_limit;
    let exclusion = opts.safety_radius + opts.slack;
    let dt = 1.0 / (opts.rate * opts.substeps as f64);
    let ticks = (opts.horizon * opts.rate).round() as usize;
    let field = |s: &DVector<f64>, v: &DVector<f64>| quad.linearized_dynamics(s, v);

    let r0 = reference.position(0.0);
    let rv0 = reference.velocity(0.0);
    let mut state = DVector::from_vec(vec![r0[0], r0[1], rv0[0], rv0[1]]);
    let mut active = [full.clone(), full.clone()];
    let mut shrunk: [bool; 2] = [false, false];
    let mut sticky: Option<usize> = None;

    let mut traj = Trajectory::new(dt, "profile-gated pd", if opts.replanning { "avoid" } else { "avoid-no-replan" });
    let mut out = AvoidanceOutcome {
        trajectory: Trajectory::new(dt, "", ""),
        obstacle: Vec::new(),
        distances: Vec::new(),
        min_distance: f64::INFINITY,
        rebuild_seconds: Vec::new(),
        shrunk_ticks: 0,
    };

    for tick in 0..ticks {
        let t_tick = tick as f64 / opts.rate;
        if opts.replanning {
            let ego = [state[0], state[1]];
            let (a, b) = obstacle.corridor(t_tick, opts.prediction);
            if segment_distance(ego, a, b) < exclusion + opts.trigger_margin {
                let started = Instant::now();
                let mut cands: [Option<Candidate>; 2] = [None, None];
                for (axis, slot) in cands.iter_mut().enumerate() {
                    let (cmin, cmax) = (a[axis].min(b[axis]), a[axis].max(b[axis]));
                    let [lo0, hi0] = opts.params.position;
                    let e = state[axis];
                    let (lo, hi, slack) = if e <= (cmin + cmax) / 2.0 {
                        let hi = hi0.min(cmin - exclusion);
                        (lo0, hi, hi - e)
                    } else {
                        let lo = lo0.max(cmax + exclusion);
                        (lo, hi0, e - lo)
                    };
                    if slack <= 0.0 || hi - lo <= 2.0 * opts.slack {
                        continue;
                    }
                    let Ok(profile) = safe_speed_profile(&opts.shrunk_spec(lo, hi), &grid) else {
                        continue;
                    };
                    if profile.membership(&axis_state(&state, axis)) != Membership::Outside {
                        *slot = Some(Candidate { profile, slack });
                    }
                }
                out.rebuild_seconds.push(started.elapsed().as_secs_f64());
                let pick = match sticky {
                    Some(axis) if cands[axis].is_some() => Some(axis),
                    _ => (0..2)
                        .filter(|&i| cands[i].is_some())
                        .max_by(|&i, &j| cands[i].as_ref().unwrap().slack.total_cmp(&cands[j].as_ref().unwrap().slack)),
                };
                let Some(axis) = pick else {
                    return Err(SimError::ReplanInfeasible {
                        tick,
                        reason: format!("ego at ({:.3}, {:.3}), corridor from {a:?} to {b:?}", ego[0], ego[1]),
                    });
                };
                active[axis] = cands[axis].take().unwrap().profile;
                shrunk[axis] = true;
                sticky = Some(axis);
                let other = 1 - axis;
                if shrunk[other] && full.membership(&axis_state(&state, other)) != Membership::Outside {
                    active[other] = full.clone();
                    shrunk[other] = false;
                }
            } else {
                for axis in 0..2 {
                    if shrunk[axis] && full.membership(&axis_state(&state, axis)) != Membership::Outside {
                        active[axis] = full.clone();
                        shrunk[axis] = false;
                    }
                }
                if !shrunk.iter().any(|&s| s) {
                    sticky = None;
                }
            }
            if shrunk.iter().any(|&s| s) {
                out.shrunk_ticks += 1;
            }
        }

        for sub in 0..opts.substeps {
            let t = t_tick + sub as f64 * dt;
            let rp = reference.position(t);
            let rv = reference.velocity(t);
            let mut v = DVector::zeros(2);
            let mut level = 0.0f64;
            let mut violation = false;
            for axis in 0..2 {
                let s = axis_state(&state, axis);
                let lv = active[axis].level(&s);
                level = level.max(lv);
                violation |= active[axis].membership(&s) == Membership::Outside;
                v[axis] = if lv >= opts.gate {
                    active[axis]
                        .control(&s)
                        .unwrap_or_else(|_| active[axis].control_extended(&s))
                } else {
                    opts.kp * (rp[axis] - state[axis]) + opts.kd * (rv[axis] - state[axis + 2])
                }
                .clamp(-lim, lim);
            }
            let o = obstacle.position_at(t);
            let dist = ((state[0] - o[0]).powi(2) + (state[1] - o[1]).powi(2)).sqrt();
            out.min_distance = out.min_distance.min(dist);
            out.distances.push(dist);
            out.obstacle.push(o);
            let next = rk4_step(&field, &state, &v, dt);
            traj.samples.push(Sample {
                t,
                x: state,
                u: v,
                v: Some(level),
                violation,
            });
            state = next;
        }
    }
    out.trajectory = traj;
    Ok(out)
}

/// Ego tracks a y-axis sinusoid while the obstacle tracks an x-axis one at
/// the same frequency, so the two meet at the origin.
pub fn crossing_scenario(frequency: f64, replanning: bool) -> (EgoReference, ObstacleTrace, AvoidanceOptions) {
    let opts = AvoidanceOptions {
        replanning,
        ..Default::default()
    };
    let reference = EgoReference {
        center: [0.0, 0.0],
        amplitude: [0.0, 1.5],
        frequency,
    };
    let trace = ObstacleTrace::sinusoid(1.5, frequency, opts.rate, opts.horizon + opts.prediction);
    (reference, trace, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_interpolation_and_velocity() {
        let tr = ObstacleTrace::new(vec![0.0, 1.0, 2.0], vec![[0.0, 0.0], [1.0, 2.0], [1.0, 2.0]]).unwrap();
        assert_eq!(tr.position_at(0.5), [0.5, 1.0]);
        assert_eq!(tr.position_at(5.0), [1.0, 2.0]);
        assert_eq!(tr.velocity_at(1.5), [1.0, 2.0]);
        assert_eq!(tr.velocity_at(0.2), [0.0, 0.0]);
        assert!(ObstacleTrace::new(vec![0.0, 0.0], vec![[0.0; 2]; 2]).is_err());
    }

    #[test]
    fn segment_distance_cases() {
        assert_eq!(segment_distance([0.0, 1.0], [-1.0, 0.0], [1.0, 0.0]), 1.0);
        assert_eq!(segment_distance([3.0, 0.0], [-1.0, 0.0], [1.0, 0.0]), 2.0);
        assert_eq!(segment_distance([0.0, 2.0], [0.0, 0.0], [0.0, 0.0]), 2.0);
    }

    #[test]
    fn reference_kinematics() {
        let r = EgoReference {
            center: [0.0, 0.0],
            amplitude: [0.0, 1.5],
            frequency: 0.1,
        };
        assert_eq!(r.position(0.0), [0.0, -1.5]);
        assert!(r.position(2.5)[1].abs() < 1e-12);
        assert!((r.velocity(2.5)[1] - 1.5 * 0.2 * PI).abs() < 1e-12);
    }
}
