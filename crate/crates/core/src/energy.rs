//! Node power and energy accounting.
//!
//! Power is carried in milliwatts, energy in milliwatt-hours and time in
//! hours. Charge-domain quantities (mAh) live in [`crate::battery`] and
//! [`crate::sim`]; the two domains are bridged only where a voltage is
//! available, in the simulator.

use crate::error::{ensure_non_negative, ensure_positive, Result};

/// Per-state power draw of one node, in milliwatts.
///
/// Total consumption is the sum of the transmit, receive, sleep and idle
/// contributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBreakdown {
    tx_mw: f64,
    rx_mw: f64,
    sleep_mw: f64,
    idle_mw: f64,
}

impl PowerBreakdown {
    /// All four draws must be finite and non-negative.
    pub fn new(tx_mw: f64, rx_mw: f64, sleep_mw: f64, idle_mw: f64) -> Result<Self> {
        ensure_non_negative("tx_mw", tx_mw)?;
        ensure_non_negative("rx_mw", rx_mw)?;
        ensure_non_negative("sleep_mw", sleep_mw)?;
        ensure_non_negative("idle_mw", idle_mw)?;
        Ok(Self {
            tx_mw,
            rx_mw,
            sleep_mw,
            idle_mw,
        })
    }

    pub fn tx_mw(&self) -> f64 {
        self.tx_mw
    }

    pub fn rx_mw(&self) -> f64 {
        self.rx_mw
    }

    pub fn sleep_mw(&self) -> f64 {
        self.sleep_mw
    }

    pub fn idle_mw(&self) -> f64 {
        self.idle_mw
    }

    /// Total power consumption: the four-term sum.
    ///
    /// Summed in ascending order so the result is bit-identical under any
    /// permutation of the four draws.
    pub fn total_mw(&self) -> f64 {
        let mut draws = [self.tx_mw, self.rx_mw, self.sleep_mw, self.idle_mw];
        draws.sort_by(|a, b| a.partial_cmp(b).expect("draws are finite"));
        draws.iter().sum()
    }
}

/// Initial versus consumed energy of one battery, in milliwatt-hours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLedger {
    initial_mwh: f64,
    consumed_mwh: f64,
}

impl EnergyLedger {
    pub fn new(initial_mwh: f64, consumed_mwh: f64) -> Result<Self> {
        ensure_non_negative("initial_mwh", initial_mwh)?;
        ensure_non_negative("consumed_mwh", consumed_mwh)?;
        Ok(Self {
            initial_mwh,
            consumed_mwh,
        })
    }

    pub fn initial_mwh(&self) -> f64 {
        self.initial_mwh
    }

    pub fn consumed_mwh(&self) -> f64 {
        self.consumed_mwh
    }

    /// Energy left in the battery, clamped at zero: a battery cannot hold
    /// negative energy. The raw difference is available through
    /// [`EnergyLedger::unclamped_residual_mwh`].
    pub fn residual_mwh(&self) -> f64 {
        (self.initial_mwh - self.consumed_mwh).max(0.0)
    }

    /// Initial minus consumed without the zero clamp; negative values mean
    /// the ledger recorded more consumption than the battery held.
    pub fn unclamped_residual_mwh(&self) -> f64 {
        self.initial_mwh - self.consumed_mwh
    }
}

/// Energy drawn by a constant power over an interval: `power_mw * hours`.
pub fn energy_consumed(power_mw: f64, hours: f64) -> Result<f64> {
    ensure_non_negative("power_mw", power_mw)?;
    ensure_non_negative("hours", hours)?;
    Ok(power_mw * hours)
}

/// Average power that spends `energy_mwh` over `hours`. Inverse of
/// [`energy_consumed`] up to floating rounding.
pub fn power_from_energy(energy_mwh: f64, hours: f64) -> Result<f64> {
    ensure_non_negative("energy_mwh", energy_mwh)?;
    ensure_positive("hours", hours)?;
    Ok(energy_mwh / hours)
}
