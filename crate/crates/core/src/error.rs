use std::io;

use crate::lattice::Cell;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("distance must be odd and within 3..=25, got {0}")]
    InvalidDistance(usize),
    #[error("cell {0} is not a data qubit of this layout")]
    NotDataCell(Cell),
    #[error("cell {0} is not a measurement qubit of this layout")]
    NotMeasurementCell(Cell),
    #[error("operands belong to layouts of different size")]
    LayoutMismatch,
    #[error("residual has a nontrivial syndrome")]
    NontrivialSyndrome,
    #[error("syndrome stack is empty")]
    EmptyStack,
    #[error("invalid label code {0}")]
    InvalidLabel(u8),
    #[error("invalid probability {name}={value}: must lie in [0, 1)")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matching instance too large for enumeration: {0} defects")]
    TooLarge(usize),
    #[error("coordinate {0} does not belong to the requested stabilizer species")]
    WrongSpecies(Cell),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    /// True for failures caused by bad input rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Format(_))
    }
}
