//! Construction and verification of in-block controllable polytopes for
//! affine control systems, piecewise-linear safety feedback on those
//! polytopes, and the robot scenarios built on top of them.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the bottom of this file fix the precision for callers that do
//! not care.

pub mod error;
pub mod gramian;
pub mod ibc;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod polytope;
pub mod pwl;
pub mod robots;
pub mod scalar;
pub mod simulation;
pub mod system;

pub use error::Error;
pub use ibc::{check_ibc, construct_ibc_polytope, IbcCertificate, InputSet, Verdict};
pub use polytope::{hull_from_points, Membership, Polytope};
pub use pwl::PwlController;
pub use robots::{safe_speed_profile, AxisSpec, SafeProfile};
pub use scalar::{Scalar, Tolerances};
pub use simulation::Trajectory;
pub use system::{AffineSystem, Decomposition, LinearSystem};

pub type Polytope64 = Polytope<f64>;
pub type Polytope32 = Polytope<f32>;
pub type LinearSystem64 = LinearSystem<f64>;
pub type LinearSystem32 = LinearSystem<f32>;
pub type PwlController64 = PwlController<f64>;
pub type PwlController32 = PwlController<f32>;
pub type InputSet64 = InputSet<f64>;
pub type IbcCertificate64 = IbcCertificate<f64>;
pub type SafeProfile64 = SafeProfile<f64>;
pub type Trajectory64 = Trajectory<f64>;
