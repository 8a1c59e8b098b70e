//! Reserve-capacity bidding for a stochastic flexible portfolio under a
//! day-level availability requirement (bids must be deliverable on at least
//! `1 - epsilon` of days).
//!
//! Pipeline: [`fleet`] simulates consumption, [`scenarios`] turns it into a
//! sample set, [`bidding`] solves the distributionally robust joint
//! chance-constrained bidding MILP, [`evaluation`] audits schedules on any
//! set of days and [`tuner`] grid-searches `(epsilon, theta)` for the
//! system operator.

pub mod bidding;
pub mod error;
pub mod evaluation;
pub mod fleet;
pub mod io;
pub mod scenarios;
pub mod tuner;

pub use error::CoreError;

pub const MINUTES_PER_HOUR: usize = 60;
pub const HOURS_PER_DAY: usize = 24;
pub const MINUTES_PER_DAY: usize = MINUTES_PER_HOUR * HOURS_PER_DAY;
