//! Crate-wide error type.

use thiserror::Error;

use crate::gramian::GramianError;
use crate::ibc::IbcError;
use crate::lp::LpError;
use crate::polytope::GeometryError;
use crate::io::IoError;
use crate::pwl::PwlError;
use crate::robots::{ProfileError, RobotError};
use crate::simulation::SimError;
use crate::system::SystemError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Ibc(#[from] IbcError),
    #[error(transparent)]
    Pwl(#[from] PwlError),
    #[error(transparent)]
    Gramian(#[from] GramianError),
    #[error(transparent)]
    Robot(#[from] RobotError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] IoError),
}
