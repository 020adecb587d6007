//! Analytic battery models: Peukert lifetime, rate-capacity reduction,
//! relaxation recovery and self-discharge.
//!
//! The lifetime law is applied literally in mAh and mA units, matching how
//! coin-cell vendors tabulate capacity. Under that convention the exponent
//! acts directly on the numeric current value, so for sub-milliampere loads
//! a larger exponent *lengthens* the computed lifetime; see
//! [`rate_factor_from_peukert`] for where this is clamped.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};

pub const HOURS_PER_YEAR: f64 = 8760.0;

/// Coin cells are characterized with exponents between 1 and 1.3; larger
/// values are accepted but flagged.
pub const TYPICAL_PEUKERT_MAX: f64 = 1.3;

/// Annual shelf loss of an unloaded coin cell, as documented by
/// manufacturer data sheets (under 1% per year).
pub const DEFAULT_SELF_DISCHARGE_ANNUAL: f64 = 0.01;

fn one() -> f64 {
    1.0
}

fn default_self_discharge() -> f64 {
    DEFAULT_SELF_DISCHARGE_ANNUAL
}

/// Static parameters of one battery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatterySpec {
    /// Rated capacity in milliampere-hours.
    pub capacity_mah: f64,
    /// Nominal terminal voltage in volts.
    pub nominal_voltage: f64,
    /// Lifetime-law exponent; 1 means capacity is rate-independent.
    #[serde(default = "one")]
    pub peukert_exponent: f64,
    /// Fraction of capacity lost per year on the shelf, in [0, 1).
    #[serde(default = "default_self_discharge")]
    pub self_discharge_annual: f64,
}

impl BatterySpec {
    /// A spec with the nominal exponent (1) and default shelf loss.
    pub fn new(capacity_mah: f64, nominal_voltage: f64) -> Result<Self> {
        let spec = Self {
            capacity_mah,
            nominal_voltage,
            peukert_exponent: 1.0,
            self_discharge_annual: DEFAULT_SELF_DISCHARGE_ANNUAL,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_peukert_exponent(mut self, n: f64) -> Result<Self> {
        self.peukert_exponent = n;
        self.validate()?;
        Ok(self)
    }

    pub fn with_self_discharge_annual(mut self, fraction: f64) -> Result<Self> {
        self.self_discharge_annual = fraction;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("capacity_mah", self.capacity_mah)?;
        ensure_positive("nominal_voltage", self.nominal_voltage)?;
        ensure_finite("peukert_exponent", self.peukert_exponent)?;
        if self.peukert_exponent < 1.0 {
            return Err(Error::Domain(format!(
                "peukert_exponent must be >= 1, got {}",
                self.peukert_exponent
            )));
        }
        ensure_non_negative("self_discharge_annual", self.self_discharge_annual)?;
        if self.self_discharge_annual >= 1.0 {
            return Err(Error::Domain(format!(
                "self_discharge_annual must be < 1, got {}",
                self.self_discharge_annual
            )));
        }
        Ok(())
    }

    /// True when the exponent sits outside the range typical for coin cells.
    pub fn exponent_above_typical(&self) -> bool {
        self.peukert_exponent > TYPICAL_PEUKERT_MAX
    }
}

/// Battery lifetime in hours under a constant load: `capacity / load^n`,
/// with capacity in mAh and current in mA.
///
/// With `n = 1` this degenerates to the linear `capacity / load` and is
/// computed exactly in that form.
pub fn peukert_lifetime(capacity_mah: f64, load_ma: f64, peukert_exponent: f64) -> Result<f64> {
    ensure_positive("capacity_mah", capacity_mah)?;
    ensure_positive("load_ma", load_ma)?;
    ensure_finite("peukert_exponent", peukert_exponent)?;
    if peukert_exponent < 1.0 {
        return Err(Error::Domain(format!(
            "peukert_exponent must be >= 1, got {peukert_exponent}"
        )));
    }
    if peukert_exponent == 1.0 {
        Ok(capacity_mah / load_ma)
    } else {
        Ok(capacity_mah / load_ma.powf(peukert_exponent))
    }
}

/// Ratio of effective capacity to maximum capacity under a given discharge
/// rate, constrained to (0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateCapacityModel {
    k: f64,
}

impl RateCapacityModel {
    pub fn new(k: f64) -> Result<Self> {
        ensure_finite("k", k)?;
        if k <= 0.0 || k > 1.0 {
            return Err(Error::Domain(format!("k must be in (0, 1], got {k}")));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Deliverable capacity after the rate reduction: `k * capacity`.
    pub fn effective_capacity_mah(&self, capacity_mah: f64) -> f64 {
        self.k * capacity_mah
    }
}

/// Result of [`rate_factor_from_peukert`]: the factor plus whether the
/// literal power law had to be clamped back into (0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFactor {
    pub model: RateCapacityModel,
    pub clamped: bool,
}

/// Bridges the lifetime exponent to the rate-capacity factor, `k = I^(1-n)`,
/// so that `effective_capacity(C, k) / I` equals `peukert_lifetime(C, I, n)`
/// whenever no clamp fires.
///
/// Under the literal mAh/mA convention, loads below 1 mA push `I^(1-n)`
/// above one; `k` is a reduction ratio, so such values are clamped to 1 and
/// flagged.
pub fn rate_factor_from_peukert(load_ma: f64, n: f64) -> Result<RateFactor> {
    ensure_positive("load_ma", load_ma)?;
    ensure_finite("n", n)?;
    if n < 1.0 {
        return Err(Error::Domain(format!("n must be >= 1, got {n}")));
    }
    let literal = if n == 1.0 {
        1.0
    } else {
        load_ma.powf(1.0 - n)
    };
    if literal > 1.0 {
        Ok(RateFactor {
            model: RateCapacityModel::new(1.0)?,
            clamped: true,
        })
    } else {
        Ok(RateFactor {
            model: RateCapacityModel::new(literal)?,
            clamped: false,
        })
    }
}

fn relaxation_default_fraction() -> f64 {
    0.1
}

fn relaxation_default_time_constant() -> f64 {
    10.0
}

/// Exponential recovery of charge that became unavailable during high-rate
/// discharge. Two parameters: how much of the pool can come back, and how
/// fast it does.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationModel {
    /// Fraction of drain diverted to the unavailable pool while active, and
    /// the asymptotic share of that pool recovered at rest. In [0, 1].
    #[serde(default = "relaxation_default_fraction")]
    pub recoverable_fraction: f64,
    /// Time constant of the recovery exponential, in hours.
    #[serde(default = "relaxation_default_time_constant")]
    pub recovery_time_constant_h: f64,
}

impl Default for RelaxationModel {
    fn default() -> Self {
        Self {
            recoverable_fraction: relaxation_default_fraction(),
            recovery_time_constant_h: relaxation_default_time_constant(),
        }
    }
}

impl RelaxationModel {
    pub fn new(recoverable_fraction: f64, recovery_time_constant_h: f64) -> Result<Self> {
        let model = Self {
            recoverable_fraction,
            recovery_time_constant_h,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("recoverable_fraction", self.recoverable_fraction)?;
        if !(0.0..=1.0).contains(&self.recoverable_fraction) {
            return Err(Error::Domain(format!(
                "recoverable_fraction must be in [0, 1], got {}",
                self.recoverable_fraction
            )));
        }
        ensure_positive("recovery_time_constant_h", self.recovery_time_constant_h)?;
        Ok(())
    }

    /// Charge recovered from an unavailable pool after `idle_hours` at rest:
    /// `fraction * pool * (1 - exp(-idle/tau))`. Monotone in idle time and
    /// bounded above by `fraction * pool`.
    pub fn recovered_mah(&self, unavailable_mah: f64, idle_hours: f64) -> f64 {
        let pool = unavailable_mah.max(0.0);
        let idle = idle_hours.max(0.0);
        // 1 - exp(-x) via exp_m1 keeps precision for short idle intervals
        let rise = -(-(idle / self.recovery_time_constant_h)).exp_m1();
        self.recoverable_fraction * pool * rise
    }
}

/// Residual capacity of an unloaded battery after `elapsed_hours` of shelf
/// time. Compounds so that exactly one year loses exactly `annual_fraction`:
/// `capacity * (1 - annual_fraction)^(elapsed/8760)`.
pub fn self_discharge_residual(
    capacity_mah: f64,
    elapsed_hours: f64,
    annual_fraction: f64,
) -> f64 {
    capacity_mah * (1.0 - annual_fraction).powf(elapsed_hours / HOURS_PER_YEAR)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_rel(actual: f64, expected: f64, tol: f64) {
        let err = (actual - expected).abs() / expected.abs().max(1e-300);
        assert!(
            err <= tol,
            "actual {actual} vs expected {expected}: relative error {err} > {tol}"
        );
    }

    #[test]
    fn lifetime_matches_coin_cell_characterization() {
        // 220 mAh at 0.248 mA total draw, nominal exponent
        let t = peukert_lifetime(220.0, 0.248, 1.0).unwrap();
        assert_rel(t, 887.0967741935484, 1e-15);
        assert!((t - 887.1).abs() < 0.05);
    }

    #[test]
    fn lifetime_at_unit_rate_is_one_hour() {
        for c in [0.5, 220.0, 3000.0] {
            assert_eq!(peukert_lifetime(c, c, 1.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn lifetime_with_raised_exponent() {
        let t = peukert_lifetime(220.0, 0.248, 1.3).unwrap();
        assert_rel(t, 1347.83117026056, 1e-12);
    }

    #[test]
    fn lifetime_rejects_bad_inputs() {
        assert!(peukert_lifetime(220.0, 0.0, 1.0).is_err());
        assert!(peukert_lifetime(220.0, -1.0, 1.0).is_err());
        assert!(peukert_lifetime(220.0, 1.0, 0.9).is_err());
        assert!(peukert_lifetime(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn effective_capacity_scales_by_k() {
        assert_eq!(
            RateCapacityModel::new(1.0).unwrap().effective_capacity_mah(220.0),
            220.0
        );
        assert_eq!(
            RateCapacityModel::new(0.8).unwrap().effective_capacity_mah(220.0),
            176.0
        );
        assert_eq!(
            RateCapacityModel::new(0.5).unwrap().effective_capacity_mah(100.0),
            50.0
        );
    }

    #[test]
    fn rate_factor_nominal_exponent_is_identity() {
        for load in [0.01, 0.248, 2.0, 50.0] {
            let f = rate_factor_from_peukert(load, 1.0).unwrap();
            assert_eq!(f.model.k(), 1.0);
            assert!(!f.clamped);
        }
    }

    #[test]
    fn rate_factor_above_one_milliamp() {
        let f = rate_factor_from_peukert(2.0, 1.3).unwrap();
        assert_rel(f.model.k(), 0.8122523963562355, 1e-14);
        assert!(!f.clamped);
    }

    #[test]
    fn rate_factor_clamps_sub_milliamp_loads() {
        // literal value 0.248^(-0.3) ~ 1.519 exceeds one
        let f = rate_factor_from_peukert(0.248, 1.3).unwrap();
        assert_eq!(f.model.k(), 1.0);
        assert!(f.clamped);
    }

    #[test]
    fn rate_factor_consistent_with_lifetime() {
        for (c, i, n) in [(220.0, 2.0, 1.3), (100.0, 10.0, 1.25), (3000.0, 1.5, 1.1)] {
            let f = rate_factor_from_peukert(i, n).unwrap();
            assert!(!f.clamped);
            let via_factor = f.model.effective_capacity_mah(c) / i;
            let direct = peukert_lifetime(c, i, n).unwrap();
            assert_rel(via_factor, direct, 1e-12);
        }
    }

    #[test]
    fn relaxation_recovery_examples() {
        let m = RelaxationModel::new(0.2, 10.0).unwrap();
        assert_eq!(m.recovered_mah(10.0, 0.0), 0.0);
        assert_rel(m.recovered_mah(10.0, 10.0), 1.2642411176571153, 1e-14);
        // asymptote
        assert_rel(m.recovered_mah(10.0, f64::INFINITY), 2.0, 1e-15);
        // never exceeds the recoverable share
        assert!(m.recovered_mah(10.0, 1e9) <= 0.2 * 10.0 + 1e-12);
    }

    #[test]
    fn self_discharge_compounds_to_annual_fraction() {
        assert_eq!(self_discharge_residual(220.0, 0.0, 0.01), 220.0);
        assert_rel(self_discharge_residual(220.0, 8760.0, 0.01), 217.8, 1e-12);
        assert_rel(
            self_discharge_residual(220.0, 4380.0, 0.01),
            218.89723616345639,
            1e-12,
        );
    }

    #[test]
    fn spec_flags_unusual_exponents_and_rejects_invalid_fields() {
        let spec = BatterySpec::new(220.0, 3.0).unwrap();
        assert!(!spec.exponent_above_typical());
        let spec = spec.with_peukert_exponent(1.4).unwrap();
        assert!(spec.exponent_above_typical());
        assert!(BatterySpec::new(0.0, 3.0).is_err());
        assert!(BatterySpec::new(220.0, 3.0)
            .unwrap()
            .with_peukert_exponent(0.5)
            .is_err());
        assert!(BatterySpec::new(220.0, 3.0)
            .unwrap()
            .with_self_discharge_annual(1.0)
            .is_err());
    }
}
