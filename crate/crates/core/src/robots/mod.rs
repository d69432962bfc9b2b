//! Plant models from the robotics case studies and the per-axis safe speed
//! profiles built for their feedback-linearized double integrators.

pub mod arm;
pub mod profile;
pub mod quadrotor;
pub mod unicycle;

use thiserror::Error;

pub use arm::ArmParams;
pub use profile::{safe_speed_profile, AxisSpec, ProfileError, SafeProfile};
pub use quadrotor::QuadrotorParams;
pub use unicycle::UnicycleParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RobotError {
    #[error("feedback linearization is singular at speed {speed} (cutoff {cutoff})")]
    SingularLinearization { speed: f64, cutoff: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}
