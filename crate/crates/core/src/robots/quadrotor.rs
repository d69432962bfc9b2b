//! Planar translational quadrotor model at fixed altitude and zero yaw.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadrotorParams<T: Scalar> {
    pub gravity: T,
    /// Limit on both commanded roll and pitch.
    pub angle_limit: T,
    /// Bound on each linearized acceleration input.
    pub v_limit: T,
    pub position: [T; 2],
    pub velocity: [T; 2],
    pub hover_height: T,
}

impl<T: Scalar> Default for QuadrotorParams<T> {
    fn default() -> Self {
        Self {
            gravity: T::lit(9.81),
            angle_limit: T::lit(0.32),
            v_limit: T::lit(3.247),
            position: [T::lit(-2.0), T::lit(2.0)],
            velocity: [T::lit(-2.0), T::lit(2.0)],
            hover_height: T::lit(1.5),
        }
    }
}

impl<T: Scalar> QuadrotorParams<T> {
    /// Largest `|v|` for which the pitch command stays within the angle limit.
    pub fn derived_v_bound(&self) -> T {
        self.gravity * self.angle_limit.tan()
    }

    /// `(x, y, x', y')'` under pitch `theta` and roll `phi`.
    pub fn dynamics(&self, s: &DVector<T>, theta: T, phi: T) -> DVector<T> {
        let g = self.gravity;
        DVector::from_vec(vec![s[2], s[3], g * theta.tan(), -g * phi.tan() / theta.cos()])
    }

    /// Desired `(theta, phi)` producing accelerations `(v1, v2)`.
    pub fn angle_map(&self, v1: T, v2: T) -> (T, T) {
        let theta = (v1 / self.gravity).atan();
        let phi = (-v2 * theta.cos() / self.gravity).atan();
        (theta, phi)
    }

    /// Dynamics driven through the angle map, with the inputs clipped to the
    /// declared `v` box.
    pub fn linearized_dynamics(&self, s: &DVector<T>, v: &DVector<T>) -> DVector<T> {
        let lim = self.v_limit;
        let (theta, phi) = self.angle_map(v[0].max(-lim).min(lim), v[1].max(-lim).min(lim));
        self.dynamics(s, theta, phi)
    }
}

/// Body-to-world rotation for ZYX Euler angles.
pub fn rotation_zyx<T: Scalar>(phi: T, theta: T, psi: T) -> DMatrix<T> {
    let (sf, cf) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = psi.sin_cos();
    DMatrix::from_row_slice(
        3,
        3,
        &[
            ct * cp,
            sf * st * cp - cf * sp,
            cf * st * cp + sf * sp,
            ct * sp,
            sf * st * sp + cf * cp,
            cf * st * sp - sf * cp,
            -st,
            sf * ct,
            cf * ct,
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_limit_at_declared_bound() {
        let p = QuadrotorParams::<f64>::default();
        let (theta, _) = p.angle_map(3.247, 0.0);
        assert!((theta - 0.31964).abs() < 1e-5);
        assert!(theta <= 0.32);
        assert!(p.v_limit <= p.derived_v_bound());
        assert_eq!(p.angle_map(0.0, 0.0), (0.0, 0.0));
    }

    #[test]
    fn angle_map_inverts_dynamics() {
        let p = QuadrotorParams::<f64>::default();
        let s = DVector::from_vec(vec![0.0, 0.0, 0.0, 0.0]);
        let (t, f) = p.angle_map(1.3, -2.9);
        let d = p.dynamics(&s, t, f);
        assert!((d[2] - 1.3).abs() < 1e-12 && (d[3] + 2.9).abs() < 1e-12);
    }

    #[test]
    fn rotation_is_orthonormal() {
        let r = rotation_zyx(0.1, -0.2, 0.7);
        assert!((&r * r.transpose() - DMatrix::identity(3, 3)).norm() < 1e-12);
        assert!((r.determinant() - 1.0f64).abs() < 1e-12);
    }
}
