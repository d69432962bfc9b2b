use std::fmt;

use ibckit::gramian::GramianError;
use ibckit::ibc::IbcError;
use ibckit::io::IoError;
use ibckit::pwl::PwlError;
use ibckit::robots::ProfileError;
use ibckit::simulation::SimError;
use ibckit::system::SystemError;

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub mod code {
    pub const IO: u8 = 1;
    pub const SCHEMA: u8 = 2;
    pub const SYSTEM: u8 = 3;
    pub const GEOMETRY: u8 = 4;
    pub const LP: u8 = 5;
    pub const IBC: u8 = 6;
    pub const PWL: u8 = 7;
    pub const GRAMIAN: u8 = 8;
    pub const PROFILE: u8 = 9;
    pub const SIMULATION: u8 = 10;
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn schema(message: impl Into<String>) -> Self {
        Self::new(code::SCHEMA, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(code::IO, e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::schema(e.to_string())
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        let code = match &e {
            IoError::Schema(_) | IoError::Json(_) | IoError::Csv(_) => code::SCHEMA,
            IoError::Io(_) => code::IO,
            IoError::Geometry(_) => code::GEOMETRY,
            IoError::System(_) => code::SYSTEM,
        };
        Self::new(code, e.to_string())
    }
}

impl From<SystemError> for CliError {
    fn from(e: SystemError) -> Self {
        Self::new(code::SYSTEM, e.to_string())
    }
}

impl From<IbcError> for CliError {
    fn from(e: IbcError) -> Self {
        let code = match &e {
            IbcError::Geometry(_) => code::GEOMETRY,
            IbcError::System(_) => code::SYSTEM,
            IbcError::Lp(_) => code::LP,
            _ => code::IBC,
        };
        Self::new(code, e.to_string())
    }
}

impl From<PwlError> for CliError {
    fn from(e: PwlError) -> Self {
        match e {
            PwlError::Ibc(inner) => inner.into(),
            PwlError::Geometry(_) => Self::new(code::GEOMETRY, e.to_string()),
            _ => Self::new(code::PWL, e.to_string()),
        }
    }
}

impl From<GramianError> for CliError {
    fn from(e: GramianError) -> Self {
        Self::new(code::GRAMIAN, e.to_string())
    }
}

impl From<ProfileError> for CliError {
    fn from(e: ProfileError) -> Self {
        match e {
            ProfileError::Ibc(inner) => inner.into(),
            ProfileError::Pwl(inner) => inner.into(),
            ProfileError::Invalid(_) => Self::new(code::PROFILE, e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Profile(inner) => inner.into(),
            SimError::Gramian(inner) => inner.into(),
            SimError::Scenario(_) | SimError::BadStep(_) => Self::schema(e.to_string()),
            _ => Self::new(code::SIMULATION, e.to_string()),
        }
    }
}
