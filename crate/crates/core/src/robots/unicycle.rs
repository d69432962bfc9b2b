//! Unicycle with acceleration and steering-rate inputs.
//!
//! State is `(x1, x2, heading, speed)`; outputs are the Cartesian positions.

use nalgebra::DVector;

use super::RobotError;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct UnicycleParams<T: Scalar> {
    pub accel_limit: T,
    pub steer_limit: T,
    /// Bound on each linearized input `v_i`.
    pub v_limit: T,
    /// Smallest `|speed|` at which the linearizing law is used.
    pub cutoff: T,
    pub position: [T; 2],
    pub velocity: [T; 2],
}

impl<T: Scalar> Default for UnicycleParams<T> {
    fn default() -> Self {
        Self {
            accel_limit: T::lit(10.0),
            steer_limit: T::lit(5.0),
            v_limit: T::lit(5.0),
            cutoff: T::lit(2.0).sqrt(),
            position: [T::lit(-30.0), T::lit(30.0)],
            velocity: [T::lit(-7.0), T::lit(7.0)],
        }
    }
}

pub fn dynamics<T: Scalar>(x: &DVector<T>, u: &DVector<T>) -> DVector<T> {
    DVector::from_vec(vec![x[3] * x[2].cos(), x[3] * x[2].sin(), u[1], u[0]])
}

/// Inputs `(u1, u2)` realizing `x1'' = v1`, `x2'' = v2`.
pub fn fblin<T: Scalar>(x: &DVector<T>, v: &DVector<T>, cutoff: T) -> Result<DVector<T>, RobotError> {
    let speed = x[3];
    if speed.abs() < cutoff || speed == T::zero() {
        return Err(RobotError::SingularLinearization {
            speed: speed.to_f64_lossy(),
            cutoff: cutoff.to_f64_lossy(),
        });
    }
    let (s, c) = x[2].sin_cos();
    Ok(DVector::from_vec(vec![
        c * v[0] + s * v[1],
        (c * v[1] - s * v[0]) / speed,
    ]))
}

/// `(x1, x2, x1', x2')`.
pub fn cartesian<T: Scalar>(x: &DVector<T>) -> DVector<T> {
    let (s, c) = x[2].sin_cos();
    DVector::from_vec(vec![x[0], x[1], x[3] * c, x[3] * s])
}

/// Inverse of [`cartesian`]; a state at rest gets heading `heading_at_rest`.
pub fn from_cartesian<T: Scalar>(p: &DVector<T>, heading_at_rest: T) -> DVector<T> {
    let speed = (p[2] * p[2] + p[3] * p[3]).sqrt();
    let heading = if speed > T::zero() {
        p[3].atan2(p[2])
    } else {
        heading_at_rest
    };
    DVector::from_vec(vec![p[0], p[1], heading, speed])
}
