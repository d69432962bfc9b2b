//! Fixed-step closed-loop integration and the robot scenarios.

mod feasibility;
mod mission;
mod obstacle;
mod steer;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gramian::GramianError;
use crate::linalg::to_f64_vec;
use crate::polytope::{Membership, Polytope};
use crate::pwl::PwlController;
use crate::robots::{ProfileError, RobotError};
use crate::scalar::Scalar;

pub use feasibility::{circle_reference, reference_feasibility, AxisReference, FeasibilityReport};
pub use mission::{unicycle_mission, unicycle_pd_baseline, MissionOptions, MissionOutcome, MissionPhase};
pub use obstacle::{
    crossing_scenario, obstacle_avoidance_run, AvoidanceOutcome, AvoidanceOptions, EgoReference, ObstacleTrace,
};
pub use steer::{gramian_run, safe_steer, SteerOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("time step must be positive, got {0}")]
    BadStep(f64),
    #[error("policy undefined at t = {t} for state {state:?}: {reason}")]
    PolicyDomain { t: f64, state: Vec<f64>, reason: String },
    #[error("steering failed during {phase} at t = {t}, state {state:?}")]
    SteeringFailed { phase: String, t: f64, state: Vec<f64> },
    #[error("no safe region contains the state at tick {tick}: {reason}")]
    ReplanInfeasible { tick: usize, reason: String },
    #[error("scenario inputs are inconsistent: {0}")]
    Scenario(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Gramian(#[from] GramianError),
    #[error(transparent)]
    Robot(#[from] RobotError),
}

impl SimError {
    pub fn policy<T: Scalar>(t: T, x: &DVector<T>, reason: impl ToString) -> Self {
        SimError::PolicyDomain {
            t: t.to_f64_lossy(),
            state: to_f64_vec(x),
            reason: reason.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Sample<T: Scalar> {
    pub t: T,
    pub x: DVector<T>,
    /// Input held over the step starting at `t`.
    pub u: DVector<T>,
    /// Lyapunov level, when the monitor defines one.
    pub v: Option<T>,
    pub violation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Trajectory<T: Scalar> {
    pub samples: Vec<Sample<T>>,
    pub dt: T,
    pub policy: String,
    pub scenario: String,
}

impl<T: Scalar> Trajectory<T> {
    pub fn new(dt: T, policy: impl Into<String>, scenario: impl Into<String>) -> Self {
        Self {
            samples: Vec::new(),
            dt,
            policy: policy.into(),
            scenario: scenario.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first_state(&self) -> Option<&DVector<T>> {
        self.samples.first().map(|s| &s.x)
    }

    pub fn final_state(&self) -> Option<&DVector<T>> {
        self.samples.last().map(|s| &s.x)
    }

    pub fn final_time(&self) -> T {
        self.samples.last().map_or(T::zero(), |s| s.t)
    }

    pub fn violations(&self) -> usize {
        self.samples.iter().filter(|s| s.violation).count()
    }

    pub fn first_violation(&self) -> Option<&Sample<T>> {
        self.samples.iter().find(|s| s.violation)
    }

    /// Largest one-step increase of the recorded level.
    pub fn max_level_increase(&self) -> T {
        self.samples
            .windows(2)
            .filter_map(|w| Some(w[1].v? - w[0].v?))
            .fold(T::min_value().unwrap_or(-T::one()), |a, b| a.max(b))
    }

    /// Appends `next`, whose first sample replaces this trajectory's last one.
    pub fn append(&mut self, next: Trajectory<T>) {
        if !self.samples.is_empty() && !next.samples.is_empty() {
            self.samples.pop();
        }
        self.samples.extend(next.samples);
    }
}

/// Decides the violation flag and level recorded with each sample.
pub trait Monitor<T: Scalar> {
    fn violated(&self, x: &DVector<T>) -> bool;

    fn level(&self, _x: &DVector<T>) -> Option<T> {
        None
    }
}

/// Records nothing.
pub struct NoMonitor;

impl<T: Scalar> Monitor<T> for NoMonitor {
    fn violated(&self, _x: &DVector<T>) -> bool {
        false
    }
}

/// Membership in a polytope, with the PWL Lyapunov level when a controller
/// is attached.
pub struct RegionMonitor<'a, T: Scalar> {
    pub region: &'a Polytope<T>,
    pub controller: Option<&'a PwlController<T>>,
}

impl<'a, T: Scalar> RegionMonitor<'a, T> {
    pub fn new(region: &'a Polytope<T>, controller: Option<&'a PwlController<T>>) -> Self {
        Self { region, controller }
    }
}

impl<T: Scalar> Monitor<T> for RegionMonitor<'_, T> {
    fn violated(&self, x: &DVector<T>) -> bool {
        self.region.membership(x) == Membership::Outside
    }

    fn level(&self, x: &DVector<T>) -> Option<T> {
        self.controller.map(|c| c.lyapunov(x))
    }
}

/// Box bounds on `map(x)`.
pub struct BoxMonitor<T: Scalar> {
    pub lo: DVector<T>,
    pub hi: DVector<T>,
    pub map: fn(&DVector<T>) -> DVector<T>,
}

impl<T: Scalar> Monitor<T> for BoxMonitor<T> {
    fn violated(&self, x: &DVector<T>) -> bool {
        let y = (self.map)(x);
        let tol = T::tolerances().geo;
        y.iter()
            .zip(self.lo.iter().zip(self.hi.iter()))
            .any(|(&v, (&lo, &hi))| v < lo - tol || v > hi + tol)
    }
}

/// One classical RK4 step with the input held constant.
pub fn rk4_step<T, F>(field: &F, x: &DVector<T>, u: &DVector<T>, dt: T) -> DVector<T>
where
    T: Scalar,
    F: Fn(&DVector<T>, &DVector<T>) -> DVector<T> + ?Sized,
{
    let half = dt / T::lit(2.0);
    let k1 = field(x, u);
    let k2 = field(&(x + &k1 * half), u);
    let k3 = field(&(x + &k2 * half), u);
    let k4 = field(&(x + &k3 * dt), u);
    x + (k1 + k2 * T::lit(2.0) + k3 * T::lit(2.0) + k4) * (dt / T::lit(6.0))
}

/// Step-by-step driver shared by every scenario.
pub struct Stepper<'a, T: Scalar> {
    pub dt: T,
    pub monitor: &'a dyn Monitor<T>,
}

impl<'a, T: Scalar> Stepper<'a, T> {
    pub fn new(dt: T, monitor: &'a dyn Monitor<T>) -> Result<Self, SimError> {
        if dt.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) {
            return Err(SimError::BadStep(dt.to_f64_lossy()));
        }
        Ok(Self { dt, monitor })
    }

    fn sample(&self, t: T, x: DVector<T>, u: DVector<T>) -> Sample<T> {
        Sample {
            t,
            violation: self.monitor.violated(&x),
            v: self.monitor.level(&x),
            x,
            u,
        }
    }

    /// Runs from `(t0, x0)` for at most `steps` steps, stopping early once
    /// `stop` holds at a step's start state.
    pub fn run<F, P, S>(
        &self,
        field: &F,
        mut policy: P,
        t0: T,
        x0: &DVector<T>,
        steps: usize,
        mut stop: S,
    ) -> Result<Vec<Sample<T>>, SimError>
    where
        F: Fn(&DVector<T>, &DVector<T>) -> DVector<T> + ?Sized,
        P: FnMut(T, &DVector<T>) -> Result<DVector<T>, SimError>,
        S: FnMut(T, &DVector<T>) -> bool,
    {
        let mut out = Vec::with_capacity(steps + 1);
        let mut x = x0.clone();
        let mut last_u: Option<DVector<T>> = None;
        for k in 0..steps {
            let t = t0 + self.dt * T::lit(k as f64);
            if stop(t, &x) {
                let u = last_u.take().unwrap_or_else(|| DVector::zeros(0));
                out.push(self.sample(t, x, u));
                return Ok(out);
            }
            let u = policy(t, &x)?;
            let next = rk4_step(field, &x, &u, self.dt);
            last_u = Some(u.clone());
            out.push(self.sample(t, x, u));
            x = next;
        }
        let t = t0 + self.dt * T::lit(steps as f64);
        let u = last_u.unwrap_or_else(|| DVector::zeros(0));
        out.push(self.sample(t, x, u));
        Ok(out)
    }
}

/// Fixed-step RK4 with zero-order hold over `[0, horizon]`.
pub fn integrate<T, F, P>(
    field: &F,
    policy: P,
    x0: &DVector<T>,
    dt: T,
    horizon: T,
    monitor: &dyn Monitor<T>,
) -> Result<Trajectory<T>, SimError>
where
    T: Scalar,
    F: Fn(&DVector<T>, &DVector<T>) -> DVector<T> + ?Sized,
    P: FnMut(T, &DVector<T>) -> Result<DVector<T>, SimError>,
{
    let stepper = Stepper::new(dt, monitor)?;
    let steps = steps_for(horizon, dt);
    let samples = stepper.run(field, policy, T::zero(), x0, steps, |_, _| false)?;
    let mut traj = Trajectory::new(dt, "custom", "custom");
    traj.samples = samples;
    Ok(traj)
}

pub(crate) fn steps_for<T: Scalar>(horizon: T, dt: T) -> usize {
    (horizon / dt).round().to_usize().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ibc::{construct_ibc_polytope, InputSet};
    use crate::linalg::vector;
    use crate::pwl::build_pwl;
    use crate::system::LinearSystem;

    #[test]
    fn zero_field_is_constant() {
        let field = |_: &DVector<f64>, _: &DVector<f64>| DVector::zeros(2);
        let x0 = vector(&[0.3, -0.2]);
        let tr = integrate(&field, |_, _| Ok(DVector::zeros(1)), &x0, 0.1, 1.0, &NoMonitor).unwrap();
        assert_eq!(tr.len(), 11);
        assert!(tr.samples.iter().all(|s| s.x == x0));
    }

    #[test]
    fn harmonic_oscillator_period() {
        let field = |x: &DVector<f64>, _: &DVector<f64>| vector(&[x[1], -x[0]]);
        let x0 = vector(&[1.0, 0.0]);
        let dt = 1e-3;
        let steps = (2.0 * std::f64::consts::PI / dt).round() as usize;
        let stepper = Stepper::new(dt, &NoMonitor).unwrap();
        let mut x = x0.clone();
        for _ in 0..steps {
            x = rk4_step(&field, &x, &DVector::zeros(0), dt);
        }
        let t_end = steps as f64 * dt;
        let exact = vector(&[t_end.cos(), -t_end.sin()]);
        assert!((x - exact).norm() < 1e-6);
        assert!(stepper.run(&field, |_, _| Ok(DVector::zeros(0)), 0.0, &x0, 3, |_, _| false).is_ok());
    }

    #[test]
    fn pwl_loop_stays_inside_hexagon() {
        let sys = LinearSystem::<f64>::double_integrator(1);
        let p = Polytope::from_box(&[-0.8, -1.0], &[0.8, 1.0]).unwrap();
        let x = construct_ibc_polytope(&sys, &p, 1.25).unwrap();
        let ctrl = build_pwl(&sys, &x, &InputSet::Unbounded).unwrap();
        let mon = RegionMonitor::new(&x, Some(&ctrl));
        let field = |x: &DVector<f64>, u: &DVector<f64>| sys.field(x, u);
        let policy = |t: f64, s: &DVector<f64>| ctrl.eval(s).map_err(|e| SimError::policy(t, s, e));
        let tr = integrate(&field, policy, &vector(&[0.79, 0.99]), 1e-3, 10.0, &mon).unwrap();
        assert_eq!(tr.violations(), 0);
        assert!(tr.max_level_increase() <= 1e-6);
    }

    #[test]
    fn policy_errors_carry_the_state() {
        let field = |x: &DVector<f64>, _: &DVector<f64>| x.clone();
        let err = integrate(
            &field,
            |t, x: &DVector<f64>| {
                if x[0] > 1.5 {
                    Err(SimError::policy(t, x, "left domain"))
                } else {
                    Ok(DVector::zeros(0))
                }
            },
            &vector(&[1.0]),
            0.01,
            2.0,
            &NoMonitor,
        )
        .unwrap_err();
        match err {
            SimError::PolicyDomain { state, .. } => assert!(state[0] > 1.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_step_rejected() {
        let field = |x: &DVector<f64>, _: &DVector<f64>| x.clone();
        assert!(matches!(
            integrate(&field, |_, _| Ok(DVector::zeros(0)), &vector(&[1.0]), 0.0, 1.0, &NoMonitor),
            Err(SimError::BadStep(_))
        ));
    }
}
