//! Resistive-load power relationships: dissipated power, drawn current,
//! power-versus-time series under a discharge curve, and load sweeps.

use crate::batch;
use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::polyfit::DischargeCurve;

/// A purely resistive load across the battery terminals.
///
/// Stored in ohms; kilo-ohm user input is converted once at ingestion via
/// [`LoadProfile::from_kilo_ohms`]. Open-circuit operation is represented by
/// omitting the load entirely, not by an infinite resistance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadProfile {
    resistance_ohms: f64,
}

impl LoadProfile {
    pub fn new(resistance_ohms: f64) -> Result<Self> {
        ensure_positive("resistance_ohms", resistance_ohms)?;
        Ok(Self { resistance_ohms })
    }

    pub fn from_kilo_ohms(kohm: f64) -> Result<Self> {
        Self::new(kohm * 1000.0)
    }

    pub fn resistance_ohms(&self) -> f64 {
        self.resistance_ohms
    }
}

/// Power dissipated in a resistive load, `v^2 / r`, in milliwatts.
pub fn instantaneous_power_mw(v_volts: f64, r_ohms: f64) -> Result<f64> {
    ensure_finite("v_volts", v_volts)?;
    ensure_positive("r_ohms", r_ohms)?;
    Ok(v_volts * v_volts / r_ohms * 1000.0)
}

/// Current drawn by a resistive load, `v / r`, in milliamperes.
pub fn current_draw_ma(v_volts: f64, r_ohms: f64) -> Result<f64> {
    ensure_finite("v_volts", v_volts)?;
    ensure_positive("r_ohms", r_ohms)?;
    Ok(v_volts / r_ohms * 1000.0)
}

/// One point of a power-versus-time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPoint {
    pub t_hours: f64,
    pub p_mw: f64,
    /// True when the time lay outside the voltage curve's fit domain.
    pub extrapolated: bool,
}

/// Power over time for one load, with strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    points: Vec<PowerPoint>,
    label: String,
}

impl PowerSeries {
    pub fn points(&self) -> &[PowerPoint] {
        &self.points
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn ensure_strictly_increasing(grid: &[f64]) -> Result<()> {
    for (i, t) in grid.iter().enumerate() {
        ensure_finite(&format!("t_grid[{i}]"), *t)?;
    }
    if let Some(w) = grid.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::Domain(format!(
            "t_grid must be strictly increasing, found {} before {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Power drawn from the fitted voltage curve by a resistive load, one point
/// per grid time. Grid times must be strictly increasing; points outside
/// the curve's fit domain are computed but flagged.
pub fn power_curve(curve: &DischargeCurve, r_ohms: f64, t_grid: &[f64]) -> Result<PowerSeries> {
    ensure_positive("r_ohms", r_ohms)?;
    ensure_strictly_increasing(t_grid)?;
    let points = batch::map_fine(t_grid, |&t| {
        let s = curve.sample(t);
        PowerPoint {
            t_hours: t,
            p_mw: s.v_volts * s.v_volts / r_ohms * 1000.0,
            extrapolated: s.extrapolated,
        }
    });
    Ok(PowerSeries {
        points,
        label: format!("{r_ohms} ohm"),
    })
}

/// One point of a fixed-voltage load sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub r_ohms: f64,
    pub p_mw: f64,
}

/// Dissipated power at a fixed voltage across a set of loads.
pub fn load_sweep(v_volts: f64, r_ohms: &[f64]) -> Result<Vec<SweepPoint>> {
    ensure_finite("v_volts", v_volts)?;
    for (i, r) in r_ohms.iter().enumerate() {
        ensure_positive(&format!("r_ohms[{i}]"), *r)?;
    }
    Ok(batch::map_fine(r_ohms, |&r| SweepPoint {
        r_ohms: r,
        p_mw: v_volts * v_volts / r * 1000.0,
    }))
}
