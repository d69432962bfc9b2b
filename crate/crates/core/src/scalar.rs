//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the geometry, LP and feedback code is written against.
///
/// Implemented for `f32` and `f64`. Each implementation carries its own
/// tolerance table since the cutoffs that separate "zero" from "non-zero"
/// depend on the available precision.
pub trait Scalar:
    RealField
    + Copy
    + FromPrimitive
    + ToPrimitive
    + Serialize
    + DeserializeOwned
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Default tolerance table for this precision.
    fn tolerances() -> Tolerances<Self>;

    /// Converts an `f64` literal. Every `f64` is representable (possibly
    /// rounded) in the supported types, so this never fails.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal fits the scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Numeric cutoffs used throughout the crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T> {
    /// Incidence and membership tests on normalized geometric data.
    pub geo: T,
    /// Rank decisions, relative to the largest singular value.
    pub lin: T,
    /// Margin separating strict from marginal LP feasibility.
    pub lp: T,
    /// Active-set selection for the max-of-linear Lyapunov function.
    pub act: T,
    /// Smallest admissible simplex pivot.
    pub pivot: T,
}

impl Scalar for f64 {
    fn tolerances() -> Tolerances<f64> {
        Tolerances {
            geo: 1e-9,
            lin: 1e-8,
            lp: 1e-7,
            act: 1e-6,
            pivot: 1e-11,
        }
    }
}

impl Scalar for f32 {
    fn tolerances() -> Tolerances<f32> {
        Tolerances {
            geo: 1e-4,
            lin: 1e-4,
            lp: 1e-4,
            act: 1e-3,
            pivot: 1e-6,
        }
    }
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        T::tolerances()
    }
}
