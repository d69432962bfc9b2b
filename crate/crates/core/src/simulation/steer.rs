//! Two-phase steering: PWL deceleration toward the equilibria, then an
//! open-loop minimum-energy transfer.

use nalgebra::DVector;

use super::{steps_for, Monitor, RegionMonitor, SimError, Stepper, Trajectory};
use crate::gramian::gramian_steering;
use crate::linalg::to_f64_vec;
use crate::polytope::{Membership, Polytope};
use crate::pwl::PwlController;
use crate::scalar::Scalar;
use crate::system::LinearSystem;

#[derive(Clone, Debug, PartialEq)]
pub struct SteerOptions<T: Scalar> {
    pub dt: T,
    /// Distance to the equilibrium set at which the open-loop phase starts.
    pub switch_distance: T,
}

impl<T: Scalar> Default for SteerOptions<T> {
    fn default() -> Self {
        Self {
            dt: T::lit(1e-3),
            switch_distance: T::lit(0.05),
        }
    }
}

/// Open-loop input for the step starting at `t`, sampled at the step
/// midpoint.
fn held<T: Scalar>(plan: &crate::gramian::GramianSteering<T>, t: T, dt: T) -> DVector<T> {
    plan.input(t + dt / T::lit(2.0))
}

/// Steers `x0` to `xf` by `tf`, integrating `plant` (which takes the
/// linearized input) and flagging samples outside `region`.
#[allow(clippy::too_many_arguments)]
pub fn safe_steer<T, F>(
    sys: &LinearSystem<T>,
    plant: &F,
    region: &Polytope<T>,
    ctrl: &PwlController<T>,
    x0: &DVector<T>,
    xf: &DVector<T>,
    tf: T,
    opts: &SteerOptions<T>,
) -> Result<Trajectory<T>, SimError>
where
    T: Scalar,
    F: Fn(&DVector<T>, &DVector<T>) -> DVector<T> + ?Sized,
{
    for p in [x0, xf] {
        if region.membership(p) != Membership::Interior {
            return Err(SimError::Scenario(format!("{:?} is not interior to the region", to_f64_vec(p))));
        }
    }
    let monitor = RegionMonitor::new(region, Some(ctrl));
    let stepper = Stepper::new(opts.dt, &monitor)?;
    let total = steps_for(tf, opts.dt);
    let decel = stepper.run(
        plant,
        |t, x| ctrl.eval(x).map_err(|e| SimError::policy(t, x, e)),
        T::zero(),
        x0,
        total,
        |_, x| sys.distance_to_equilibria(x) <= opts.switch_distance,
    )?;
    let mut traj = Trajectory::new(opts.dt, "pwl+gramian", "safe_steer");
    traj.samples = decel;
    let handover = traj.samples.last().cloned().expect("at least one sample");
    if sys.distance_to_equilibria(&handover.x) > opts.switch_distance {
        return Err(SimError::SteeringFailed {
            phase: "decelerate".into(),
            t: handover.t.to_f64_lossy(),
            state: to_f64_vec(&handover.x),
        });
    }
    let used = traj.len() - 1;
    let remaining = total - used;
    let span = opts.dt * T::lit(remaining as f64);
    let plan = gramian_steering(sys, &handover.x, xf, span)?;
    let t1 = handover.t;
    let transfer = stepper.run(plant, |t, _| Ok(held(&plan, t - t1, opts.dt)), t1, &handover.x, remaining, |_, _| false)?;
    let mut tail = Trajectory::new(opts.dt, "gramian", "safe_steer");
    tail.samples = transfer;
    traj.append(tail);
    if let Some(s) = traj.first_violation() {
        return Err(SimError::SteeringFailed {
            phase: "transfer".into(),
            t: s.t.to_f64_lossy(),
            state: to_f64_vec(&s.x),
        });
    }
    Ok(traj)
}

/// Open-loop minimum-energy transfer from `x0` to `xf` with no deceleration
/// phase; samples leaving `monitor`'s region are flagged, not rejected.
pub fn gramian_run<T, F>(
    sys: &LinearSystem<T>,
    plant: &F,
    monitor: &dyn Monitor<T>,
    x0: &DVector<T>,
    xf: &DVector<T>,
    tf: T,
    dt: T,
) -> Result<Trajectory<T>, SimError>
where
    T: Scalar,
    F: Fn(&DVector<T>, &DVector<T>) -> DVector<T> + ?Sized,
{
    let plan = gramian_steering(sys, x0, xf, tf)?;
    let stepper = Stepper::new(dt, monitor)?;
    let samples = stepper.run(plant, |t, _| Ok(held(&plan, t, dt)), T::zero(), x0, steps_for(tf, dt), |_, _| false)?;
    let mut traj = Trajectory::new(dt, "gramian", "gramian_run");
    traj.samples = samples;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ibc::{construct_ibc_polytope, InputSet};
    use crate::linalg::vector;
    use crate::pwl::build_pwl;

    fn hexagon() -> (LinearSystem<f64>, Polytope<f64>, PwlController<f64>) {
        let sys = LinearSystem::double_integrator(1);
        let p = Polytope::from_box(&[-0.8, -1.0], &[0.8, 1.0]).unwrap();
        let x = construct_ibc_polytope(&sys, &p, 1.25).unwrap();
        let c = build_pwl(&sys, &x, &InputSet::Unbounded).unwrap();
        (sys, x, c)
    }

    #[test]
    fn steer_across_the_hexagon() {
        let (sys, x, c) = hexagon();
        let plant = |s: &DVector<f64>, u: &DVector<f64>| sys.field(s, u);
        let xf = vector(&[-0.5, 0.0]);
        let tr = safe_steer(&sys, &plant, &x, &c, &vector(&[0.7, 0.9]), &xf, 8.0, &SteerOptions::default()).unwrap();
        assert_eq!(tr.violations(), 0);
        assert!((tr.final_state().unwrap() - xf).norm() < 1e-3);
        assert!((tr.final_time() - 8.0).abs() < 1e-9);
    }

    #[test]
    fn trivial_maneuver() {
        let (sys, x, c) = hexagon();
        let plant = |s: &DVector<f64>, u: &DVector<f64>| sys.field(s, u);
        let p = vector(&[0.01, 0.0]);
        let tr = safe_steer(&sys, &plant, &x, &c, &p, &p, 1.0, &SteerOptions::default()).unwrap();
        assert_eq!(tr.violations(), 0);
        assert!((tr.final_state().unwrap() - &p).norm() < 1e-9);
    }

    #[test]
    fn endpoints_must_be_interior() {
        let (sys, x, c) = hexagon();
        let plant = |s: &DVector<f64>, u: &DVector<f64>| sys.field(s, u);
        let err = safe_steer(&sys, &plant, &x, &c, &vector(&[1.0, 0.0]), &vector(&[0.0, 0.0]), 1.0, &SteerOptions::default());
        assert!(matches!(err, Err(SimError::Scenario(_))));
    }
}
