//! Annual quasi-static time-series simulation of a transmission grid.
//!
//! The simulator chains AC power-flow solutions over a year of load, wind
//! and intertie profiles. Each time-step is applied in bounded increments;
//! after every increment a rule-based virtual operator restores the
//! supply–demand balance, keeps generating units near their optimal
//! operating points, maintains AGC reserve and controls voltages with
//! discrete devices. Storage units smooth zonal wind output with a
//! threshold policy. Weekly segments can run in parallel, and an analyzer
//! turns the recorded states into planning metrics.

pub mod analyzer;
pub mod cases;
pub mod engine;
pub mod ess;
pub mod error;
pub mod io;
pub mod network;
pub mod operator;
pub mod powerflow;
pub mod profiles;
pub mod scheduler;
pub mod state;

pub use error::*;
