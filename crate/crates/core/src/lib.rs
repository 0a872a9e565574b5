//! Multi-aircraft deconfliction on hexagonal-lattice airspace.
//!
//! Three resolution techniques share one discrete-time engine:
//! [`implicit`] right-of-way rules, [`collaborative`] per-step priority
//! negotiation and [`strategic`] full-horizon exact optimization.

pub mod collaborative;
pub mod error;
pub mod harness;
pub mod implicit;
pub mod lattice;
pub mod oracle;
pub mod scenarios;
pub mod sim;
pub mod strategic;
pub mod verify;

pub use error::{Error, Result};
pub use harness::{Algorithm, MetricsRecord, SummaryRow};
pub use lattice::{AxialCoord, EdgeId, Heading, HexLattice};
pub use sim::{
    AircraftState, FlightPlan, MoveCommand, Resolver, ScenarioOutcome, SeparationEvent, Termination,
    TrafficConfiguration,
};
