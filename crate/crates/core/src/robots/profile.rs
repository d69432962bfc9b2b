//! Safe speed profiles: IBC regions in the position-velocity plane of one
//! double-integrator axis, with the PWL feedback that keeps them invariant.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ibc::{construct_ibc_polytope, passes_strict, rescale_velocity_axes, strict_margin, IbcError, InputSet};
use crate::polytope::{Membership, Polytope};
use crate::pwl::{build_pwl, PwlController, PwlError};
use crate::scalar::Scalar;
use crate::system::LinearSystem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("invalid axis specification: {0}")]
    Invalid(String),
    #[error(transparent)]
    Ibc(#[from] IbcError),
    #[error(transparent)]
    Pwl(#[from] PwlError),
}

/// Position, velocity and input limits for one axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", deny_unknown_fields)]
pub struct AxisSpec<T: Scalar> {
    pub pos: [T; 2],
    pub vel: [T; 2],
    pub input: [T; 2],
    /// Extension factor; chosen from the strict-margin rule when absent.
    #[serde(default)]
    pub alpha: Option<T>,
}

impl<T: Scalar> AxisSpec<T> {
    pub fn symmetric(pos: T, vel: T, input: T, alpha: Option<T>) -> Self {
        Self {
            pos: [-pos, pos],
            vel: [-vel, vel],
            input: [-input, input],
            alpha,
        }
    }

    fn validate(&self) -> Result<(), ProfileError> {
        let ok = |b: &[T; 2], zero_inside: bool| b[0] < b[1] && (!zero_inside || (b[0] < T::zero() && b[1] > T::zero()));
        if !ok(&self.pos, false) {
            return Err(ProfileError::Invalid("position bounds must satisfy lo < hi".into()));
        }
        if !ok(&self.vel, true) {
            return Err(ProfileError::Invalid("velocity bounds must contain 0 in their interior".into()));
        }
        if !ok(&self.input, true) {
            return Err(ProfileError::Invalid("input bounds must contain 0 in their interior".into()));
        }
        if let Some(a) = self.alpha {
            if a <= T::one() {
                return Err(IbcError::AlphaTooSmall { alpha: a.to_f64_lossy() }.into());
            }
        }
        Ok(())
    }

    pub fn center(&self) -> T {
        (self.pos[0] + self.pos[1]) / T::lit(2.0)
    }

    pub fn half_width(&self) -> T {
        (self.pos[1] - self.pos[0]) / T::lit(2.0)
    }

    /// The facet joining `(a, v_max)` to `(h, 0)` is strictly invariant
    /// under the weakest braking input iff `a < h - v_max^2 / u_min`; the
    /// default box keeps 90% of that reach.
    pub fn default_alpha(&self) -> Result<T, ProfileError> {
        let h = self.half_width();
        let v = self.vel[0].abs().max(self.vel[1].abs());
        let u = self.input[0].abs().min(self.input[1].abs());
        let reach = h - v * v / u;
        if reach <= T::zero() {
            return Err(ProfileError::Invalid(format!(
                "speed {v} cannot be shed within half-width {h} at acceleration {u}"
            )));
        }
        Ok(h / (T::lit(0.9) * reach))
    }

    pub fn alpha_or_default(&self) -> Result<T, ProfileError> {
        match self.alpha {
            Some(a) => Ok(a),
            None => self.default_alpha(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SafeProfile<T: Scalar> {
    pub spec: AxisSpec<T>,
    pub alpha: T,
    /// Velocity scale applied to the non-equilibrium vertices.
    pub lambda: T,
    /// Smallest strict LP margin over the non-equilibrium vertices.
    pub margin: T,
    /// Region in world coordinates.
    pub region: Polytope<T>,
    /// Region centred on the position midpoint, where the controller lives.
    pub local_region: Polytope<T>,
    pub controller: PwlController<T>,
    offset: DVector<T>,
}

impl<T: Scalar> SafeProfile<T> {
    pub fn to_local(&self, x: &DVector<T>) -> DVector<T> {
        x - &self.offset
    }

    pub fn membership(&self, x: &DVector<T>) -> Membership {
        self.region.membership(x)
    }

    /// Feedback at a world-coordinate state inside the region.
    pub fn control(&self, x: &DVector<T>) -> Result<T, PwlError> {
        Ok(self.controller.eval(&self.to_local(x))?[0])
    }

    /// Feedback extended homogeneously outside the region.
    pub fn control_extended(&self, x: &DVector<T>) -> T {
        self.controller.eval_extended(&self.to_local(x))[0]
    }

    /// Lyapunov level `V`; 1 on the boundary.
    pub fn level(&self, x: &DVector<T>) -> T {
        self.controller.lyapunov(&self.to_local(x))
    }
}

/// Builds the region and feedback for one axis.
pub fn safe_speed_profile<T: Scalar>(spec: &AxisSpec<T>, grid: &[T]) -> Result<SafeProfile<T>, ProfileError> {
    spec.validate()?;
    let alpha = spec.alpha_or_default()?;
    let sys = LinearSystem::<T>::double_integrator(1);
    let c = spec.center();
    let xb = spec.half_width() / alpha;
    let p = Polytope::from_box(&[-xb, spec.vel[0]], &[xb, spec.vel[1]]).map_err(IbcError::from)?;
    let x = construct_ibc_polytope(&sys, &p, alpha)?;
    let inputs = InputSet::Box {
        lo: DVector::from_element(1, spec.input[0]),
        hi: DVector::from_element(1, spec.input[1]),
    };
    let (local, lambda) = if passes_strict(&sys, &x, &inputs)? {
        (x, T::one())
    } else {
        rescale_velocity_axes(&sys, &x, &inputs, &[1], grid)?
    };
    let margin = strict_margin(&sys, &local, &inputs)?;
    let controller = build_pwl(&sys, &local, &inputs)?;
    let offset = DVector::from_vec(vec![c, T::zero()]);
    Ok(SafeProfile {
        spec: spec.clone(),
        alpha,
        lambda,
        margin,
        region: local.translate(&offset),
        local_region: local,
        controller,
        offset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ibc::default_lambda_grid;
    use crate::linalg::vector;
    use std::f64::consts::PI;

    #[test]
    fn arm_axis_needs_no_rescale_with_strong_motor() {
        let spec = AxisSpec::symmetric(PI / 2.0, 1.0, 5.0, Some(1.2));
        let prof = safe_speed_profile(&spec, &default_lambda_grid()).unwrap();
        assert_eq!(prof.lambda, 1.0);
        assert!(prof.region.vertex_index(&vector(&[PI / 2.0, 0.0])).is_some());
        assert!(prof.region.vertex_index(&vector(&[5.0 * PI / 12.0, 1.0])).is_some());
    }

    #[test]
    fn unicycle_axis_is_marginally_strict() {
        let spec = AxisSpec::symmetric(30.0, 7.0, 5.0, Some(1.5));
        let prof = safe_speed_profile(&spec, &default_lambda_grid()).unwrap();
        assert_eq!(prof.lambda, 1.0);
        // 7*7 + 10*u < 0 at u = -5, normalized by |(7, 10)|.
        let closed_form = 1.0 / (49.0f64 + 100.0).sqrt();
        assert!((prof.margin - closed_form).abs() < 1e-9);
    }

    #[test]
    fn offset_axes_are_translated() {
        let spec = AxisSpec {
            pos: [1.0, 5.0],
            vel: [-1.0, 1.0],
            input: [-3.0, 3.0],
            alpha: Some(1.25),
        };
        let prof = safe_speed_profile(&spec, &default_lambda_grid()).unwrap();
        assert!(prof.region.vertex_index(&vector(&[5.0, 0.0])).is_some());
        assert!(prof.control(&vector::<f64>(&[3.0, 0.0])).unwrap().abs() < 1e-12);
        assert!((prof.level(&vector::<f64>(&[5.0, 0.0])) - 1.0f64).abs() < 1e-12);
    }

    #[test]
    fn default_alpha_rule() {
        let spec = AxisSpec::symmetric(2.0, 2.0, 3.247, None);
        let a = spec.default_alpha().unwrap();
        let reach = 2.0 - 4.0 / 3.247;
        assert!((a - 2.0f64 / (0.9 * reach)).abs() < 1e-12);
        assert!(safe_speed_profile(&spec, &default_lambda_grid()).unwrap().margin > 1e-7);
        let hopeless = AxisSpec::symmetric(1.0, 5.0, 1.0, None);
        assert!(matches!(hopeless.default_alpha(), Err(ProfileError::Invalid(_))));
    }
}
