//! Unicycle point-to-point mission: safe deceleration through the
//! linearized per-axis profiles, then stop, turn and drive at low speed.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{steps_for, BoxMonitor, SimError, Stepper, Trajectory};
use crate::linalg::to_f64_vec;
use crate::polytope::Membership;
use crate::robots::unicycle::{cartesian, dynamics, fblin};
use crate::robots::{SafeProfile, UnicycleParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissionPhase {
    Decelerate,
    Brake,
    Rotate,
    Drive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MissionOptions {
    pub params: UnicycleParams<f64>,
    pub dt: f64,
    pub horizon: f64,
    /// Speed limit while driving to the goal.
    pub cruise_speed: f64,
    /// Braking deceleration assumed by the speed reference.
    pub approach_decel: f64,
    pub speed_gain: f64,
    /// Slope of the speed reference near the goal.
    pub approach_gain: f64,
}

impl Default for MissionOptions {
    fn default() -> Self {
        Self {
            params: UnicycleParams::default(),
            dt: 1e-3,
            horizon: 40.0,
            cruise_speed: 5.0,
            approach_decel: 2.0,
            speed_gain: 4.0,
            approach_gain: 1.0,
        }
    }
}

impl MissionOptions {
    fn monitor(&self) -> BoxMonitor<f64> {
        let p = &self.params;
        BoxMonitor {
            lo: DVector::from_vec(vec![p.position[0], p.position[0], p.velocity[0], p.velocity[0]]),
            hi: DVector::from_vec(vec![p.position[1], p.position[1], p.velocity[1], p.velocity[1]]),
            map: cartesian::<f64>,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MissionOutcome {
    pub trajectory: Trajectory<f64>,
    /// Start time of each phase that ran.
    pub phases: Vec<(MissionPhase, f64)>,
}

fn wrap(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let a = (angle + PI).rem_euclid(2.0 * PI) - PI;
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

type PhasePolicy<'p> = dyn FnMut(f64, &DVector<f64>) -> Result<DVector<f64>, SimError> + 'p;

fn axis_state(c: &DVector<f64>, axis: usize) -> DVector<f64> {
    DVector::from_vec(vec![c[axis], c[axis + 2]])
}

/// Drives `x0` to rest at `xf`'s position. States are
/// `(x1, x2, heading, speed)`.
pub fn unicycle_mission(
    profiles: [&SafeProfile<f64>; 2],
    x0: &DVector<f64>,
    xf: &DVector<f64>,
    opts: &MissionOptions,
) -> Result<MissionOutcome, SimError> {
    let c0 = cartesian(x0);
    for axis in 0..2 {
        if profiles[axis].membership(&axis_state(&c0, axis)) == Membership::Outside {
            return Err(SimError::Scenario(format!("axis {axis} of the start lies outside its profile")));
        }
        if profiles[axis].membership(&DVector::from_vec(vec![xf[axis], 0.0])) != Membership::Interior {
            return Err(SimError::Scenario(format!("axis {axis} of the goal lies outside its profile")));
        }
    }
    let p = &opts.params;
    let dt = opts.dt;
    let monitor = opts.monitor();
    let stepper = Stepper::new(dt, &monitor)?;
    let total = steps_for(opts.horizon, dt);
    let field = |x: &DVector<f64>, u: &DVector<f64>| dynamics(x, u);
    let mut traj = Trajectory::new(dt, "pwl+scripted", "unicycle_mission");
    let mut phases = Vec::new();
    let mut t = 0.0;
    let mut x = x0.clone();

    let fail = |phase: &str, t: f64, x: &DVector<f64>| SimError::SteeringFailed {
        phase: phase.into(),
        t,
        state: to_f64_vec(x),
    };

    let mut run_phase = |phase: MissionPhase,
                         traj: &mut Trajectory<f64>,
                         t: &mut f64,
                         x: &mut DVector<f64>,
                         policy: &mut PhasePolicy,
                         done: &dyn Fn(&DVector<f64>) -> bool|
     -> Result<bool, SimError> {
        let used = traj.len().saturating_sub(1);
        let budget = total.saturating_sub(used);
        if done(x) {
            return Ok(true);
        }
        phases.push((phase, *t));
        let samples = stepper.run(&field, policy, *t, x, budget, |_, s| done(s))?;
        let mut seg = Trajectory::new(dt, "", "");
        seg.samples = samples;
        let last = seg.samples.last().expect("nonempty").clone();
        traj.append(seg);
        *t = last.t;
        *x = last.x;
        Ok(done(x))
    };

    let cutoff = p.cutoff;
    let mut decel = |t: f64, s: &DVector<f64>| {
        let c = cartesian(s);
        let mut v = DVector::zeros(2);
        for axis in 0..2 {
            v[axis] = profiles[axis]
                .control(&axis_state(&c, axis))
                .map_err(|e| SimError::policy(t, s, e))?;
        }
        Ok(fblin(s, &v, cutoff)?)
    };
    traj.samples.push(stepper_sample(&monitor, 0.0, x.clone()));
    if !run_phase(MissionPhase::Decelerate, &mut traj, &mut t, &mut x, &mut decel, &|s| s[3].abs() < cutoff)? {
        return Err(fail("decelerate", t, &x));
    }

    let accel = p.accel_limit;
    let mut brake = |_: f64, s: &DVector<f64>| {
        let u1 = -s[3].signum() * accel.min(s[3].abs() / dt);
        Ok(DVector::from_vec(vec![u1, 0.0]))
    };
    if !run_phase(MissionPhase::Brake, &mut traj, &mut t, &mut x, &mut brake, &|s| s[3].abs() <= 1e-12)? {
        return Err(fail("brake", t, &x));
    }

    let goal = DVector::from_vec(vec![xf[0], xf[1]]);
    let offset = DVector::from_vec(vec![goal[0] - x[0], goal[1] - x[1]]);
    if offset.norm() > 1e-12 {
        let heading = offset[1].atan2(offset[0]);
        let steer = p.steer_limit;
        let mut rotate = |_: f64, s: &DVector<f64>| {
            let err = wrap(heading - s[2]);
            Ok(DVector::from_vec(vec![0.0, (err / dt).clamp(-steer, steer)]))
        };
        let aligned = move |s: &DVector<f64>| wrap(heading - s[2]).abs() <= 1e-12;
        if !run_phase(MissionPhase::Rotate, &mut traj, &mut t, &mut x, &mut rotate, &aligned)? {
            return Err(fail("rotate", t, &x));
        }

        let (sh, ch) = heading.sin_cos();
        let mut drive = |_: f64, s: &DVector<f64>| {
            let r = (goal[0] - s[0]) * ch + (goal[1] - s[1]) * sh;
            let target = r.signum()
                * opts
                    .cruise_speed
                    .min((2.0 * opts.approach_decel * r.abs()).sqrt())
                    .min(opts.approach_gain * r.abs());
            let u1 = (opts.speed_gain * (target - s[3])).clamp(-opts.cruise_speed, opts.cruise_speed);
            Ok(DVector::from_vec(vec![u1.clamp(-accel, accel), 0.0]))
        };
        run_phase(MissionPhase::Drive, &mut traj, &mut t, &mut x, &mut drive, &|_| false)?;
    }
    Ok(MissionOutcome {
        trajectory: traj,
        phases,
    })
}

fn stepper_sample(monitor: &BoxMonitor<f64>, t: f64, x: DVector<f64>) -> super::Sample<f64> {
    use super::Monitor;
    super::Sample {
        t,
        violation: monitor.violated(&x),
        v: None,
        u: DVector::zeros(2),
        x,
    }
}

/// Per-axis PD tracking of `xf`'s position through the linearizing law,
/// with the speed held away from zero inside the law.
pub fn unicycle_pd_baseline(x0: &DVector<f64>, xf: &DVector<f64>, kp: f64, kd: f64, opts: &MissionOptions) -> Result<Trajectory<f64>, SimError> {
    let p = &opts.params;
    let monitor = opts.monitor();
    let stepper = Stepper::new(opts.dt, &monitor)?;
    let field = |x: &DVector<f64>, u: &DVector<f64>| dynamics(x, u);
    let lim = p.v_limit;
    let policy = |_: f64, s: &DVector<f64>| {
        let c = cartesian(s);
        let v = DVector::from_vec(vec![
            (kp * (xf[0] - c[0]) - kd * c[2]).clamp(-lim, lim),
            (kp * (xf[1] - c[1]) - kd * c[3]).clamp(-lim, lim),
        ]);
        let mut reg = s.clone();
        let sign = if s[3] < 0.0 { -1.0 } else { 1.0 };
        reg[3] = sign * s[3].abs().max(p.cutoff);
        Ok(fblin(&reg, &v, p.cutoff)?)
    };
    let samples = stepper.run(&field, policy, 0.0, x0, steps_for(opts.horizon, opts.dt), |_, _| false)?;
    let mut traj = Trajectory::new(opts.dt, format!("pd(kp={kp},kd={kd})"), "unicycle_mission");
    traj.samples = samples;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ibc::default_lambda_grid;
    use crate::robots::{safe_speed_profile, AxisSpec};

    #[test]
    fn wrap_range() {
        assert!((wrap(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap(-PI) - PI).abs() < 1e-12);
        assert_eq!(wrap(0.3), 0.3);
    }

    #[test]
    fn already_at_goal() {
        let spec = AxisSpec::symmetric(30.0, 7.0, 5.0, Some(1.5));
        let prof = safe_speed_profile(&spec, &default_lambda_grid()).unwrap();
        let x0 = DVector::from_vec(vec![3.0, -4.0, 0.2, 0.0]);
        let opts = MissionOptions {
            horizon: 1.0,
            ..Default::default()
        };
        let out = unicycle_mission([&prof, &prof], &x0, &x0, &opts).unwrap();
        assert!(out.phases.is_empty());
        assert_eq!(out.trajectory.violations(), 0);
        assert_eq!(out.trajectory.final_state().unwrap(), &x0);
    }
}
