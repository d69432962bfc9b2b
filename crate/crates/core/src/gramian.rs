//! Minimum-energy open-loop transfer between two states over a fixed horizon.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::singular_values;
use crate::scalar::Scalar;
use crate::system::LinearSystem;

/// Simpson panels used for the Gramian integral.
pub const PANELS: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GramianError {
    #[error("system is not controllable")]
    NotControllable,
    #[error("controllability Gramian is ill conditioned (sigma_min / sigma_max = {ratio:e})")]
    SingularGramian { ratio: f64 },
    #[error("horizon must be positive, got {0}")]
    BadHorizon(f64),
}

/// `W(t_f) = int_0^t_f e^{As} B B^T e^{A^T s} ds` by composite Simpson.
pub fn controllability_gramian<T: Scalar>(sys: &LinearSystem<T>, tf: T) -> DMatrix<T> {
    let n = sys.n();
    let h = tf / T::lit(PANELS as f64);
    let step = (sys.a() * h).exp();
    let bbt = sys.b() * sys.b().transpose();
    let mut phi = DMatrix::identity(n, n);
    let mut w = DMatrix::zeros(n, n);
    for k in 0..=PANELS {
        let weight = if k == 0 || k == PANELS {
            T::one()
        } else if k % 2 == 1 {
            T::lit(4.0)
        } else {
            T::lit(2.0)
        };
        w += (&phi * &bbt * phi.transpose()) * weight;
        phi = &step * phi;
    }
    w * (h / T::lit(3.0))
}

#[derive(Clone, Debug)]
pub struct GramianSteering<T: Scalar> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    tf: T,
    /// `W^{-1} (x_f - e^{A t_f} x_0)`.
    costate: DVector<T>,
}

/// Open-loop input driving `x0` to `xf` in time `tf`.
pub fn gramian_steering<T: Scalar>(
    sys: &LinearSystem<T>,
    x0: &DVector<T>,
    xf: &DVector<T>,
    tf: T,
) -> Result<GramianSteering<T>, GramianError> {
    if tf <= T::zero() {
        return Err(GramianError::BadHorizon(tf.to_f64_lossy()));
    }
    if !sys.is_controllable() {
        return Err(GramianError::NotControllable);
    }
    let w = controllability_gramian(sys, tf);
    let s = singular_values(&w);
    let ratio = match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if hi > T::zero() => lo / hi,
        _ => T::zero(),
    };
    if ratio < T::tolerances().lin {
        return Err(GramianError::SingularGramian {
            ratio: ratio.to_f64_lossy(),
        });
    }
    let drift = (sys.a() * tf).exp() * x0;
    let costate = w
        .lu()
        .solve(&(xf - drift))
        .ok_or(GramianError::SingularGramian {
            ratio: ratio.to_f64_lossy(),
        })?;
    Ok(GramianSteering {
        a: sys.a().clone(),
        b: sys.b().clone(),
        tf,
        costate,
    })
}

impl<T: Scalar> GramianSteering<T> {
    pub fn horizon(&self) -> T {
        self.tf
    }

    /// `u(t) = B^T e^{A^T (t_f - t)} W^{-1} (x_f - e^{A t_f} x_0)`; zero past the horizon.
    pub fn input(&self, t: T) -> DVector<T> {
        if t > self.tf {
            return DVector::zeros(self.b.ncols());
        }
        let e = (self.a.transpose() * (self.tf - t)).exp();
        self.b.transpose() * (e * &self.costate)
    }

    /// `(t, u(t))` on a uniform grid including both ends.
    pub fn sample(&self, dt: T) -> Vec<(T, DVector<T>)> {
        let steps = (self.tf / dt).round().to_usize().unwrap_or(0);
        (0..=steps)
            .map(|k| {
                let t = dt * T::lit(k as f64);
                (t, self.input(t))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector;

    #[test]
    fn double_integrator_gramian_closed_form() {
        let sys = LinearSystem::<f64>::double_integrator(1);
        let w = controllability_gramian(&sys, 2.0);
        // [[t^3/3, t^2/2], [t^2/2, t]]
        assert!((w[(0, 0)] - 8.0 / 3.0).abs() < 1e-9);
        assert!((w[(0, 1)] - 2.0).abs() < 1e-9);
        assert!((w[(1, 1)] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn rest_to_rest_is_silent() {
        let sys = LinearSystem::<f64>::double_integrator(1);
        let z = vector(&[0.0, 0.0]);
        let g = gramian_steering(&sys, &z, &z, 3.0).unwrap();
        assert!(g.sample(0.5).iter().all(|(_, u)| u.norm() == 0.0));
    }

    #[test]
    fn uncontrollable_rejected() {
        let sys = LinearSystem::<f64>::new(
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
        )
        .unwrap();
        let z = vector(&[0.0, 0.0]);
        assert_eq!(
            gramian_steering(&sys, &z, &z, 1.0).unwrap_err(),
            GramianError::NotControllable
        );
    }
}
