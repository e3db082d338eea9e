//! Exactly solvable Allee-effect model for rate-induced tipping.

pub mod calibrate;
pub mod cli;
pub mod error;
pub mod exact;
pub mod integrators;
pub mod io;
pub mod optimize;
pub mod quadrature;
pub mod scenarios;
pub mod schedules;
pub mod studies;
pub mod tipping;

pub use error::{AlleeError, Result};
pub use exact::{ExtinctionReport, ModelParams};
pub use schedules::{AlleeSchedule, Direction};
