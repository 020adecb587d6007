//! Battery-characteristics modeling and single-node lifetime simulation for
//! low-power wireless sensor nodes.
//!
//! Four areas are covered:
//!
//! - [`energy`]: node power and energy accounting
//! - [`battery`]: analytic battery models (Peukert lifetime law,
//!   rate-capacity reduction, relaxation recovery, self-discharge)
//! - [`polyfit`]: polynomial discharge-curve fitting, evaluation, threshold
//!   search, and published coefficient presets
//! - [`load`] and [`sim`]: resistive-load power analysis and discrete-time
//!   duty-cycle simulation
//!
//! Units are fixed crate-wide: power in milliwatts, energy in
//! milliwatt-hours, time in hours, current in milliamperes, capacity in
//! milliampere-hours, voltage in volts, resistance in ohms.
//!
//! The `parallel` feature (on by default) backs the batch entry points in
//! [`batch`] with a rayon thread pool; disabling it falls back to sequential
//! execution with identical results.

pub mod batch;
pub mod battery;
pub mod energy;
mod error;
pub mod load;
pub mod polyfit;
pub mod sim;

pub use error::{Error, Result};

pub use battery::{BatterySpec, RelaxationModel};
pub use polyfit::{DischargeCurve, DischargeSample, Preset};
pub use sim::{simulate, DutyCycleProfile, Lifetime, PowerSource, SimConfig, SimTrace};
