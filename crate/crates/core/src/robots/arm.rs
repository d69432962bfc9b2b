//! Single-link arm `I theta'' = -m g l sin(theta) + tau`.

use nalgebra::DVector;

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct ArmParams<T: Scalar> {
    pub inertia: T,
    pub mass: T,
    pub length: T,
    pub gravity: T,
    pub torque_limit: T,
    pub angle: [T; 2],
    pub rate: [T; 2],
}

impl<T: Scalar> Default for ArmParams<T> {
    fn default() -> Self {
        let half_pi = T::frac_pi_2();
        Self {
            inertia: T::one(),
            mass: T::one(),
            length: T::lit(0.5),
            gravity: T::lit(10.0),
            torque_limit: T::lit(10.0),
            angle: [-half_pi, half_pi],
            rate: [-T::one(), T::one()],
        }
    }
}

impl<T: Scalar> ArmParams<T> {
    fn gravity_torque(&self, theta: T) -> T {
        self.mass * self.gravity * self.length * theta.sin()
    }

    /// `(theta, theta')' ` under torque `tau`.
    pub fn dynamics(&self, x: &DVector<T>, tau: T) -> DVector<T> {
        DVector::from_vec(vec![x[1], (tau - self.gravity_torque(x[0])) / self.inertia])
    }

    /// Torque giving `theta'' = u`.
    pub fn fblin(&self, x: &DVector<T>, u: T) -> T {
        self.gravity_torque(x[0]) + self.inertia * u
    }

    /// Worst-case torque for `|u| <= u_max`.
    pub fn torque_bound(&self, u_max: T) -> T {
        self.mass * self.gravity * self.length + self.inertia * u_max
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn torque_examples() {
        let p = ArmParams::<f64>::default();
        let tau = p.fblin(&DVector::from_vec(vec![PI / 2.0, 0.0]), 5.0);
        assert!((tau - 10.0).abs() < 1e-12);
        assert_eq!(p.fblin(&DVector::from_vec(vec![0.0, 0.0]), 0.0), 0.0);
        assert!((p.torque_bound(3.0) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn linearized_acceleration_is_exact() {
        let p = ArmParams::<f64>::default();
        let x = DVector::from_vec(vec![0.7, -0.3]);
        let d = p.dynamics(&x, p.fblin(&x, 1.25));
        assert!((d[1] - 1.25).abs() < 1e-12);
    }
}
