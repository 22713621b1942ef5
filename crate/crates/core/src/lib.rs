//! Bi-level day-ahead scheduling of an isolated microgrid with renewables
//! and price-responsive EV charging.
//!
//! The upper level dispatches microturbines and storage under a
//! chance-constrained spinning reserve and is searched by JAYA
//! ([`jaya`], [`upper`]). The lower level is a linear program for the EV
//! fleet solved by a primal-dual interior-point method ([`lower`], [`ipm`]).
//! [`coordinator`] couples the two through real-time pricing.

pub mod coordinator;
pub mod error;
pub mod fleet;
pub mod ipm;
pub mod jaya;
pub mod lower;
pub mod quadrature;
pub mod scenario;
pub mod seq;
pub mod stochastic;
pub mod upper;

pub use error::{Error, Result};
pub use coordinator::{Instance, IterationRecord, PriceProfile, Study};
pub use fleet::{EvParams, EvSession, OvernightRule};
pub use lower::{ChargingPlan, Station};
pub use scenario::Scenario;
pub use seq::ProbSequence;
pub use stochastic::{FleetModel, PdfSpec, PeriodForecast};
pub use upper::{EssParams, MtUnit, UpperSchedule};

/// Number of one-hour scheduling periods in a day.
pub const HORIZON: usize = 24;
