use thiserror::Error;

use crate::lattice::AxialCoord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("vertices {0} and {1} are not adjacent")]
    InvalidEdge(AxialCoord, AxialCoord),

    #[error("equal headings do not form a conflict geometry")]
    NonConflictGeometry,

    #[error("invalid traffic configuration: {0}")]
    InvalidConfiguration(String),

    #[error("fuel capacity must be at least 1")]
    ZeroFuel,

    #[error("simulation fault at t={time}: {reason}")]
    SimulationFault { time: u32, reason: String },

    #[error("horizon {horizon} is below the lower bound {lower_bound}")]
    HorizonTooShort { horizon: u32, lower_bound: u32 },

    #[error("requested {requested} aircraft but the lattice has only {available} vertices")]
    TooManyAircraft { requested: usize, available: usize },

    #[error("no configuration satisfies the generator constraints")]
    EmptyFeasibleSet,

    #[error("cannot summarize: {0}")]
    Summary(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
