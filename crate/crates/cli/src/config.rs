//! The versioned JSON configuration schema for `battkit simulate`.
//!
//! Top level: `schema` (must be 1), `battery`, exactly one of `duty_cycle`
//! or `load`, plus optional `sim`, `relaxation` and `voltage_map` sections.
//! Unknown keys are rejected by name. Loads are given in kilo-ohms and
//! converted to ohms once, here. Curve references inside the config resolve
//! relative to the config file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use battkit::battery::{BatterySpec, RelaxationModel};
use battkit::load::LoadProfile;
use battkit::polyfit::{self, DischargeCurve};
use battkit::sim::{
    DutyCycleProfile, PowerSource, SimConfig, VoltageMap, VoltageSource, DEFAULT_HORIZON_H,
    DEFAULT_TIMESTEP_H,
};

use crate::{data_error, CliError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema: u32,
    pub battery: BatterySpec,
    #[serde(default)]
    pub duty_cycle: Option<DutyCycleProfile>,
    #[serde(default)]
    pub load: Option<LoadSection>,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub relaxation: Option<RelaxationModel>,
    #[serde(default)]
    pub voltage_map: Option<VoltageMapSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSection {
    /// Load resistance in kilo-ohms.
    pub kohm: f64,
    pub voltage: VoltageSourceRef,
}

/// Voltage source for resistive mode: a pinned value, a preset name, or a
/// curve JSON file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum VoltageSourceRef {
    Constant(f64),
    Preset(String),
    CurveFile(PathBuf),
}

/// Reference to a discharge curve: a preset name or a curve JSON file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum CurveRef {
    Preset(String),
    CurveFile(PathBuf),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoltageMapSection {
    pub curve: CurveRef,
    /// Discharge current the referenced curve was measured at, mA.
    pub reference_current_ma: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_timestep")]
    pub timestep_h: f64,
    #[serde(default = "default_horizon")]
    pub horizon_h: f64,
    #[serde(default)]
    pub cutoff_voltage: Option<f64>,
    #[serde(default)]
    pub peukert: bool,
    #[serde(default)]
    pub relaxation: bool,
    #[serde(default)]
    pub self_discharge: bool,
}

fn default_timestep() -> f64 {
    DEFAULT_TIMESTEP_H
}

fn default_horizon() -> f64 {
    DEFAULT_HORIZON_H
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            timestep_h: default_timestep(),
            horizon_h: default_horizon(),
            cutoff_voltage: None,
            peukert: false,
            relaxation: false,
            self_discharge: false,
        }
    }
}

/// Reads a fitted-curve JSON file and re-validates its invariants.
pub fn read_curve_file(path: &Path) -> Result<DischargeCurve, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let curve: DischargeCurve = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    curve.validate().map_err(data_error)?;
    Ok(curve)
}

fn resolve_curve(reference: &CurveRef, base_dir: &Path) -> Result<DischargeCurve, CliError> {
    match reference {
        CurveRef::Preset(name) => polyfit::preset(name).map_err(data_error),
        CurveRef::CurveFile(path) => read_curve_file(&base_dir.join(path)),
    }
}

/// Parses and validates a config file into a runnable [`SimConfig`].
pub fn load_sim_config(path: &Path) -> Result<SimConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let file: ConfigFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
    build_sim_config(file, base_dir)
}

/// Turns a parsed config into a validated [`SimConfig`].
pub fn build_sim_config(file: ConfigFile, base_dir: &Path) -> Result<SimConfig, CliError> {
    if file.schema != SCHEMA_VERSION {
        return Err(CliError::Data(format!(
            "unsupported schema version {}, expected {SCHEMA_VERSION}",
            file.schema
        )));
    }
    file.battery.validate().map_err(data_error)?;

    let source = match (&file.duty_cycle, &file.load) {
        (Some(profile), None) => {
            profile.validate().map_err(data_error)?;
            let voltage_map = match &file.voltage_map {
                Some(section) => {
                    let curve = resolve_curve(&section.curve, base_dir)?;
                    Some(
                        VoltageMap::new(curve, section.reference_current_ma)
                            .map_err(data_error)?,
                    )
                }
                None => None,
            };
            PowerSource::DutyCycle {
                profile: *profile,
                voltage_map,
            }
        }
        (None, Some(load)) => {
            if file.voltage_map.is_some() {
                return Err(CliError::Data(
                    "`voltage_map` applies only to duty-cycle mode".into(),
                ));
            }
            let profile = LoadProfile::from_kilo_ohms(load.kohm).map_err(data_error)?;
            let voltage = match &load.voltage {
                VoltageSourceRef::Constant(v) => VoltageSource::Constant(*v),
                VoltageSourceRef::Preset(name) => {
                    VoltageSource::Curve(polyfit::preset(name).map_err(data_error)?)
                }
                VoltageSourceRef::CurveFile(path) => {
                    VoltageSource::Curve(read_curve_file(&base_dir.join(path))?)
                }
            };
            PowerSource::Resistive {
                load: profile,
                voltage,
            }
        }
        _ => {
            return Err(CliError::Data(
                "config must set exactly one of `duty_cycle` or `load`".into(),
            ))
        }
    };

    let mut config = SimConfig::new(file.battery, source).map_err(data_error)?;
    // apply in an order that keeps timestep <= horizon valid throughout
    if file.sim.timestep_h <= DEFAULT_HORIZON_H {
        config = config
            .with_timestep(file.sim.timestep_h)
            .and_then(|c| c.with_horizon(file.sim.horizon_h))
            .map_err(data_error)?;
    } else {
        config = config
            .with_horizon(file.sim.horizon_h)
            .and_then(|c| c.with_timestep(file.sim.timestep_h))
            .map_err(data_error)?;
    }
    if let Some(cutoff) = file.sim.cutoff_voltage {
        config = config.with_cutoff_voltage(cutoff).map_err(data_error)?;
    }
    config = config.with_peukert(file.sim.peukert);
    if file.sim.relaxation {
        let model = file.relaxation.unwrap_or_default();
        config = config.with_relaxation(model).map_err(data_error)?;
    }
    config = config.with_self_discharge(file.sim.self_discharge);
    Ok(config)
}
