//! Discrete-time simulation of a single node draining its battery through a
//! duty cycle or a resistive load, with optional rate-capacity (Peukert)
//! coupling, relaxation recovery, and self-discharge.
//!
//! The stepping scheme is explicit forward integration: within each step the
//! four duty states run back to back, weighted by their time fractions, and
//! drains use start-of-step voltages. Rate-capacity coupling scales the
//! drain by the inverse of [`rate_factor_from_peukert`], so a
//! constant-current run reproduces [`peukert_lifetime`] exactly wherever the
//! factor is not clamped.

use serde::{Deserialize, Serialize};

use crate::battery::{
    rate_factor_from_peukert, BatterySpec, RelaxationModel, HOURS_PER_YEAR,
};
#[allow(unused_imports)]
use crate::battery::peukert_lifetime; // doc link
use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};
use crate::load::LoadProfile;
use crate::polyfit::DischargeCurve;

pub const DEFAULT_TIMESTEP_H: f64 = 0.1;
pub const DEFAULT_HORIZON_H: f64 = 10_000.0;

/// Duty-cycle state fractions must sum to one within this tolerance.
pub const FRACTION_SUM_TOL: f64 = 1e-9;

/// Per-state currents and time fractions of the node's duty cycle.
///
/// Fractions are dimensionless shares of each timestep and must sum to one.
/// Omitted fields deserialize as zero, so a constant-current profile only
/// needs `tx_current_ma` and `fraction_tx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DutyCycleProfile {
    pub tx_current_ma: f64,
    pub rx_current_ma: f64,
    pub sleep_current_ma: f64,
    pub idle_current_ma: f64,
    pub fraction_tx: f64,
    pub fraction_rx: f64,
    pub fraction_sleep: f64,
    pub fraction_idle: f64,
}

impl Default for DutyCycleProfile {
    fn default() -> Self {
        Self {
            tx_current_ma: 0.0,
            rx_current_ma: 0.0,
            sleep_current_ma: 0.0,
            idle_current_ma: 0.0,
            fraction_tx: 0.0,
            fraction_rx: 0.0,
            fraction_sleep: 0.0,
            fraction_idle: 0.0,
        }
    }
}

impl DutyCycleProfile {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        tx_current_ma: f64,
        rx_current_ma: f64,
        sleep_current_ma: f64,
        idle_current_ma: f64,
        fraction_tx: f64,
        fraction_rx: f64,
        fraction_sleep: f64,
        fraction_idle: f64,
    ) -> Result<Self> {
        let profile = Self {
            tx_current_ma,
            rx_current_ma,
            sleep_current_ma,
            idle_current_ma,
            fraction_tx,
            fraction_rx,
            fraction_sleep,
            fraction_idle,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// A profile that draws `current_ma` continuously (all time in tx).
    pub fn constant_current(current_ma: f64) -> Result<Self> {
        Self::new(current_ma, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("tx_current_ma", self.tx_current_ma)?;
        ensure_non_negative("rx_current_ma", self.rx_current_ma)?;
        ensure_non_negative("sleep_current_ma", self.sleep_current_ma)?;
        ensure_non_negative("idle_current_ma", self.idle_current_ma)?;
        ensure_non_negative("fraction_tx", self.fraction_tx)?;
        ensure_non_negative("fraction_rx", self.fraction_rx)?;
        ensure_non_negative("fraction_sleep", self.fraction_sleep)?;
        ensure_non_negative("fraction_idle", self.fraction_idle)?;
        let sum = self.fraction_tx + self.fraction_rx + self.fraction_sleep + self.fraction_idle;
        if (sum - 1.0).abs() > FRACTION_SUM_TOL {
            return Err(Error::Domain(format!(
                "state fractions must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }

    /// Time-weighted mean current over one duty cycle.
    pub fn average_current_ma(&self) -> f64 {
        self.fraction_tx * self.tx_current_ma
            + self.fraction_rx * self.rx_current_ma
            + self.fraction_sleep * self.sleep_current_ma
            + self.fraction_idle * self.idle_current_ma
    }

    fn currents(&self) -> [f64; 4] {
        [
            self.tx_current_ma,
            self.rx_current_ma,
            self.sleep_current_ma,
            self.idle_current_ma,
        ]
    }

    fn fractions(&self) -> [f64; 4] {
        [
            self.fraction_tx,
            self.fraction_rx,
            self.fraction_sleep,
            self.fraction_idle,
        ]
    }

    /// State with the largest time share; ties go to the earlier state in
    /// tx, rx, sleep, idle order. Used to label trace records.
    fn dominant_state(&self) -> StateLabel {
        const ORDER: [StateLabel; 4] = [
            StateLabel::Tx,
            StateLabel::Rx,
            StateLabel::Sleep,
            StateLabel::Idle,
        ];
        let fractions = self.fractions();
        let mut best = 0;
        for i in 1..4 {
            if fractions[i] > fractions[best] {
                best = i;
            }
        }
        ORDER[best]
    }
}

/// What a trace record says the node was doing during the step. Duty-cycle
/// steps interleave all four states and are labeled by the dominant one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StateLabel {
    Tx,
    Rx,
    Sleep,
    Idle,
    /// Resistive-load operation.
    Load,
}

impl StateLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            StateLabel::Tx => "tx",
            StateLabel::Rx => "rx",
            StateLabel::Sleep => "sleep",
            StateLabel::Idle => "idle",
            StateLabel::Load => "load",
        }
    }
}

/// Terminal voltage source for resistive-load simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum VoltageSource {
    /// An ideal source pinned at this voltage.
    Constant(f64),
    /// Voltage follows a fitted discharge curve over wall-clock time.
    Curve(DischargeCurve),
}

impl VoltageSource {
    fn validate(&self) -> Result<()> {
        match self {
            VoltageSource::Constant(v) => ensure_non_negative("constant voltage", *v),
            VoltageSource::Curve(c) => c.validate(),
        }
    }
}

/// Optional state-of-charge-to-voltage map for duty-cycle runs: the curve is
/// evaluated at the elapsed time scaled by (average current / reference
/// current), the current the curve was measured at. Without a map the
/// simulator reports no voltage in duty-cycle mode.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageMap {
    curve: DischargeCurve,
    reference_current_ma: f64,
}

impl VoltageMap {
    pub fn new(curve: DischargeCurve, reference_current_ma: f64) -> Result<Self> {
        curve.validate()?;
        ensure_positive("reference_current_ma", reference_current_ma)?;
        Ok(Self {
            curve,
            reference_current_ma,
        })
    }

    fn voltage_at(&self, t_hours: f64, average_current_ma: f64) -> f64 {
        let equivalent = t_hours * average_current_ma / self.reference_current_ma;
        self.curve.evaluate(equivalent)
    }
}

/// What drains the battery.
#[derive(Debug, Clone, PartialEq)]
pub enum PowerSource {
    DutyCycle {
        profile: DutyCycleProfile,
        voltage_map: Option<VoltageMap>,
    },
    Resistive {
        load: LoadProfile,
        voltage: VoltageSource,
    },
}

impl PowerSource {
    pub fn duty_cycle(profile: DutyCycleProfile) -> Self {
        PowerSource::DutyCycle {
            profile,
            voltage_map: None,
        }
    }

    pub fn resistive(load: LoadProfile, voltage: VoltageSource) -> Self {
        PowerSource::Resistive { load, voltage }
    }

    fn validate(&self) -> Result<()> {
        match self {
            PowerSource::DutyCycle { profile, .. } => profile.validate(),
            PowerSource::Resistive { voltage, .. } => voltage.validate(),
        }
    }
}

/// Validated simulation configuration. Invalid combinations are rejected at
/// construction so that [`simulate`] itself cannot fail.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    battery: BatterySpec,
    source: PowerSource,
    timestep_h: f64,
    horizon_h: f64,
    cutoff_voltage: Option<f64>,
    peukert_enabled: bool,
    relaxation: Option<RelaxationModel>,
    self_discharge_enabled: bool,
}

impl SimConfig {
    /// Defaults: 0.1 h timestep, 10000 h horizon, no cutoff, all effects off.
    pub fn new(battery: BatterySpec, source: PowerSource) -> Result<Self> {
        battery.validate()?;
        source.validate()?;
        Ok(Self {
            battery,
            source,
            timestep_h: DEFAULT_TIMESTEP_H,
            horizon_h: DEFAULT_HORIZON_H,
            cutoff_voltage: None,
            peukert_enabled: false,
            relaxation: None,
            self_discharge_enabled: false,
        })
    }

    pub fn with_timestep(mut self, hours: f64) -> Result<Self> {
        ensure_positive("timestep_h", hours)?;
        if hours > self.horizon_h {
            return Err(Error::Domain(format!(
                "timestep_h {hours} exceeds horizon_h {}",
                self.horizon_h
            )));
        }
        self.timestep_h = hours;
        Ok(self)
    }

    pub fn with_horizon(mut self, hours: f64) -> Result<Self> {
        ensure_positive("horizon_h", hours)?;
        if hours < self.timestep_h {
            return Err(Error::Domain(format!(
                "horizon_h {hours} is shorter than timestep_h {}",
                self.timestep_h
            )));
        }
        self.horizon_h = hours;
        Ok(self)
    }

    pub fn with_cutoff_voltage(mut self, volts: f64) -> Result<Self> {
        ensure_finite("cutoff_voltage", volts)?;
        self.cutoff_voltage = Some(volts);
        Ok(self)
    }

    pub fn with_peukert(mut self, enabled: bool) -> Self {
        self.peukert_enabled = enabled;
        self
    }

    pub fn with_relaxation(mut self, model: RelaxationModel) -> Result<Self> {
        model.validate()?;
        self.relaxation = Some(model);
        Ok(self)
    }

    pub fn with_self_discharge(mut self, enabled: bool) -> Self {
        self.self_discharge_enabled = enabled;
        self
    }

    pub fn battery(&self) -> &BatterySpec {
        &self.battery
    }

    pub fn source(&self) -> &PowerSource {
        &self.source
    }

    pub fn timestep_h(&self) -> f64 {
        self.timestep_h
    }

    pub fn horizon_h(&self) -> f64 {
        self.horizon_h
    }

    pub fn cutoff_voltage(&self) -> Option<f64> {
        self.cutoff_voltage
    }

    pub fn peukert_enabled(&self) -> bool {
        self.peukert_enabled
    }

    pub fn relaxation(&self) -> Option<&RelaxationModel> {
        self.relaxation.as_ref()
    }

    pub fn self_discharge_enabled(&self) -> bool {
        self.self_discharge_enabled
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Residual capacity reached zero.
    Exhausted,
    /// Reported voltage dropped to or below the configured cutoff.
    CutoffReached,
    /// The run reached the time horizon with the battery still alive.
    Horizon,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Exhausted => "exhausted",
            Termination::CutoffReached => "cutoff_reached",
            Termination::Horizon => "horizon",
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One time-stamped record of a run. Times advance by the configured
/// timestep; the record after a mid-step exhaustion still lands on the grid
/// with residual zero, while the trace's termination time carries the
/// interpolated instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t_hours: f64,
    pub residual_mah: f64,
    pub voltage_v: Option<f64>,
    pub state: StateLabel,
    pub unavailable_mah: f64,
}

/// Charge and energy bookkeeping over the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimDiagnostics {
    /// Charge delivered to the load.
    pub drained_mah: f64,
    /// Charge parked in the relaxation pool at the end of the run.
    pub unavailable_mah: f64,
    /// Charge lost to shelf self-discharge.
    pub self_discharge_mah: f64,
    /// Initial capacity minus everything removed, without the zero clamp
    /// applied to the per-record residual.
    pub unclamped_residual_mah: f64,
    /// Energy delivered, integrated as voltage x current x time; present
    /// only when the run had a voltage to bridge the charge domain with.
    pub delivered_energy_mwh: Option<f64>,
}

/// Result of [`simulate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimTrace {
    records: Vec<TraceRecord>,
    termination: Termination,
    termination_time_h: f64,
    diagnostics: SimDiagnostics,
}

impl SimTrace {
    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    /// When the run stopped. For exhaustion this is the interpolated
    /// instant within the final step, not the grid time.
    pub fn termination_time_h(&self) -> f64 {
        self.termination_time_h
    }

    pub fn diagnostics(&self) -> &SimDiagnostics {
        &self.diagnostics
    }

    /// Battery lifetime: the termination time when the battery died, or a
    /// censoring marker when the run only ran out of horizon.
    pub fn lifetime(&self) -> Lifetime {
        match self.termination {
            Termination::Exhausted | Termination::CutoffReached => {
                Lifetime::Reached(self.termination_time_h)
            }
            Termination::Horizon => Lifetime::Censored {
                horizon_h: self.termination_time_h,
            },
        }
    }
}

/// Lifetime read off a trace; censored when the horizon cut the run short.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lifetime {
    Reached(f64),
    Censored { horizon_h: f64 },
}

// Charge buckets; drained + residual + unavailable + shelf_loss stays equal
// to the initial capacity throughout the run.
struct Buckets {
    residual: f64,
    drained: f64,
    unavailable: f64,
    shelf_loss: f64,
}

impl Buckets {
    fn drain(&mut self, amount: f64, divert_fraction: f64) {
        self.residual -= amount;
        if divert_fraction > 0.0 {
            let diverted = divert_fraction * amount;
            self.unavailable += diverted;
            self.drained += amount - diverted;
        } else {
            self.drained += amount;
        }
    }

    fn recover(&mut self, amount: f64) {
        self.unavailable -= amount;
        self.residual += amount;
    }
}

struct Phase {
    current_ma: f64,
    duration_h: f64,
    active: bool,
    drain_scale: f64,
}

fn drain_scale(current_ma: f64, exponent: f64, peukert_enabled: bool) -> f64 {
    if !peukert_enabled || current_ma <= 0.0 || exponent == 1.0 {
        return 1.0;
    }
    let factor = rate_factor_from_peukert(current_ma, exponent)
        .expect("validated config yields a valid rate factor");
    1.0 / factor.model.k()
}

/// Runs the configured scenario to exhaustion, cutoff, or horizon.
pub fn simulate(config: &SimConfig) -> SimTrace {
    let dt = config.timestep_h;
    let n_steps = (config.horizon_h / dt + 1e-9).floor() as u64;
    let exponent = config.battery.peukert_exponent;
    let divert_fraction = config
        .relaxation
        .map(|m| m.recoverable_fraction)
        .unwrap_or(0.0);
    let step_retention = if config.self_discharge_enabled {
        (1.0 - config.battery.self_discharge_annual).powf(dt / HOURS_PER_YEAR)
    } else {
        1.0
    };

    let mut buckets = Buckets {
        residual: config.battery.capacity_mah,
        drained: 0.0,
        unavailable: 0.0,
        shelf_loss: 0.0,
    };
    let mut delivered_mwh = 0.0;

    // per-state duty phases are step-invariant; resistive mode recomputes
    // its single phase from the start-of-step voltage
    let (duty, label) = match &config.source {
        PowerSource::DutyCycle { profile, .. } => (Some(profile), profile.dominant_state()),
        PowerSource::Resistive { .. } => (None, StateLabel::Load),
    };
    let average_current = duty.map(|p| p.average_current_ma()).unwrap_or(0.0);

    let voltage_at = |t: f64| -> Option<f64> {
        match &config.source {
            PowerSource::DutyCycle { voltage_map, .. } => voltage_map
                .as_ref()
                .map(|m| m.voltage_at(t, average_current)),
            PowerSource::Resistive { voltage, .. } => Some(match voltage {
                VoltageSource::Constant(v) => *v,
                VoltageSource::Curve(c) => c.evaluate(t),
            }),
        }
    };
    let voltage_known = voltage_at(0.0).is_some();

    let mut records = Vec::with_capacity((n_steps as usize).saturating_add(1).min(1 << 20));
    records.push(TraceRecord {
        t_hours: 0.0,
        residual_mah: buckets.residual,
        voltage_v: voltage_at(0.0),
        state: label,
        unavailable_mah: 0.0,
    });

    let finalize = |records: Vec<TraceRecord>,
                    termination: Termination,
                    time: f64,
                    buckets: &Buckets,
                    delivered_mwh: f64| {
        SimTrace {
            records,
            termination,
            termination_time_h: time,
            diagnostics: SimDiagnostics {
                drained_mah: buckets.drained,
                unavailable_mah: buckets.unavailable,
                self_discharge_mah: buckets.shelf_loss,
                unclamped_residual_mah: config.battery.capacity_mah
                    - buckets.drained
                    - buckets.unavailable
                    - buckets.shelf_loss,
                delivered_energy_mwh: voltage_known.then_some(delivered_mwh),
            },
        }
    };

    if let (Some(cutoff), Some(v0)) = (config.cutoff_voltage, voltage_at(0.0)) {
        if v0 <= cutoff {
            return finalize(records, Termination::CutoffReached, 0.0, &buckets, 0.0);
        }
    }

    for k in 0..n_steps {
        let t0 = k as f64 * dt;
        let t1 = (k + 1) as f64 * dt;
        let v0 = voltage_at(t0);

        let phases: Vec<Phase> = match &config.source {
            PowerSource::DutyCycle { profile, .. } => {
                let currents = profile.currents();
                let fractions = profile.fractions();
                (0..4)
                    .filter(|&i| fractions[i] > 0.0)
                    .map(|i| Phase {
                        current_ma: currents[i],
                        duration_h: fractions[i] * dt,
                        active: i < 2,
                        drain_scale: drain_scale(currents[i], exponent, config.peukert_enabled),
                    })
                    .collect()
            }
            PowerSource::Resistive { load, .. } => {
                // a load cannot push charge back into the battery
                let v = v0.expect("resistive source always has a voltage").max(0.0);
                let current = v / load.resistance_ohms() * 1000.0;
                vec![Phase {
                    current_ma: current,
                    duration_h: dt,
                    active: true,
                    drain_scale: drain_scale(current, exponent, config.peukert_enabled),
                }]
            }
        };

        let mut phase_start = t0;
        for phase in &phases {
            let rate = phase.current_ma * phase.drain_scale; // mAh per hour
            if rate > 0.0 {
                let need = rate * phase.duration_h;
                if need >= buckets.residual {
                    let elapsed = buckets.residual / rate;
                    let divert = if phase.active { divert_fraction } else { 0.0 };
                    let amount = buckets.residual;
                    buckets.drain(amount, divert);
                    buckets.residual = 0.0;
                    if let Some(v) = v0 {
                        delivered_mwh += v.max(0.0) * phase.current_ma * elapsed;
                    }
                    records.push(TraceRecord {
                        t_hours: t1,
                        residual_mah: 0.0,
                        voltage_v: voltage_at(t1),
                        state: label,
                        unavailable_mah: buckets.unavailable,
                    });
                    return finalize(
                        records,
                        Termination::Exhausted,
                        phase_start + elapsed,
                        &buckets,
                        delivered_mwh,
                    );
                }
                let divert = if phase.active { divert_fraction } else { 0.0 };
                buckets.drain(need, divert);
                if let Some(v) = v0 {
                    delivered_mwh += v.max(0.0) * phase.current_ma * phase.duration_h;
                }
            }
            if !phase.active {
                if let Some(model) = &config.relaxation {
                    let recovered = model.recovered_mah(buckets.unavailable, phase.duration_h);
                    buckets.recover(recovered);
                }
            }
            phase_start += phase.duration_h;
        }

        if step_retention < 1.0 {
            let loss = buckets.residual * (1.0 - step_retention);
            buckets.residual -= loss;
            buckets.shelf_loss += loss;
        }

        let v1 = voltage_at(t1);
        records.push(TraceRecord {
            t_hours: t1,
            residual_mah: buckets.residual,
            voltage_v: v1,
            state: label,
            unavailable_mah: buckets.unavailable,
        });

        if let (Some(cutoff), Some(v)) = (config.cutoff_voltage, v1) {
            if v <= cutoff {
                return finalize(
                    records,
                    Termination::CutoffReached,
                    t1,
                    &buckets,
                    delivered_mwh,
                );
            }
        }
    }

    let end = n_steps as f64 * dt;
    finalize(records, Termination::Horizon, end, &buckets, delivered_mwh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyfit::Preset;

    fn battery_220() -> BatterySpec {
        BatterySpec::new(220.0, 3.0).unwrap()
    }

    fn constant_current_config(capacity_mah: f64, current_ma: f64, dt: f64) -> SimConfig {
        let battery = BatterySpec::new(capacity_mah, 3.0).unwrap();
        let profile = DutyCycleProfile::constant_current(current_ma).unwrap();
        SimConfig::new(battery, PowerSource::duty_cycle(profile))
            .unwrap()
            .with_timestep(dt)
            .unwrap()
    }

    #[test]
    fn average_current_examples() {
        let p = DutyCycleProfile::new(0.2, 0.2, 0.048, 0.048, 0.25, 0.25, 0.25, 0.25).unwrap();
        assert!((p.average_current_ma() - 0.124).abs() < 1e-15);
        // aggregate profile: total 0.248 mA active the whole time
        let p = DutyCycleProfile::constant_current(0.248).unwrap();
        assert_eq!(p.average_current_ma(), 0.248);
        let p = DutyCycleProfile::new(0.0, 0.0, 0.0, 0.0, 0.25, 0.25, 0.25, 0.25).unwrap();
        assert_eq!(p.average_current_ma(), 0.0);
    }

    #[test]
    fn profile_rejects_bad_fractions() {
        assert!(DutyCycleProfile::new(0.2, 0.2, 0.0, 0.0, 0.5, 0.4, 0.0, 0.0).is_err());
        assert!(DutyCycleProfile::new(0.2, 0.2, 0.0, 0.0, -0.5, 1.5, 0.0, 0.0).is_err());
        assert!(DutyCycleProfile::new(-0.2, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn coin_cell_duty_cycle_lifetime() {
        let trace = simulate(&constant_current_config(220.0, 0.248, 0.1));
        assert_eq!(trace.termination(), Termination::Exhausted);
        let t = trace.termination_time_h();
        assert!((t - 887.0967741935484).abs() < 0.1, "got {t}");
        match trace.lifetime() {
            Lifetime::Reached(h) => assert!((h - 887.1).abs() < 0.1),
            other => panic!("expected reached lifetime, got {other:?}"),
        }
    }

    #[test]
    fn zero_current_runs_to_horizon() {
        let profile = DutyCycleProfile::new(0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0).unwrap();
        let config = SimConfig::new(battery_220(), PowerSource::duty_cycle(profile))
            .unwrap()
            .with_horizon(1000.0)
            .unwrap()
            .with_timestep(1.0)
            .unwrap();
        let trace = simulate(&config);
        assert_eq!(trace.termination(), Termination::Horizon);
        assert_eq!(trace.termination_time_h(), 1000.0);
        assert!(trace.records().iter().all(|r| r.residual_mah == 220.0));
        assert!(matches!(
            trace.lifetime(),
            Lifetime::Censored { horizon_h } if horizon_h == 1000.0
        ));
    }

    #[test]
    fn unit_rate_drain_exhausts_in_one_hour() {
        let trace = simulate(&constant_current_config(220.0, 220.0, 0.01));
        assert_eq!(trace.termination(), Termination::Exhausted);
        assert!((trace.termination_time_h() - 1.0).abs() < 0.01);
    }

    #[test]
    fn trace_times_step_by_the_timestep() {
        let trace = simulate(&constant_current_config(1.0, 0.5, 0.25));
        let times: Vec<f64> = trace.records().iter().map(|r| r.t_hours).collect();
        for (i, t) in times.iter().enumerate() {
            assert!((t - 0.25 * i as f64).abs() < 1e-12);
        }
        assert_eq!(trace.termination_time_h(), 2.0);
    }

    #[test]
    fn simulated_lifetime_matches_analytic_law_with_peukert() {
        // above 1 mA the rate factor is not clamped, so the simulated
        // lifetime reproduces the analytic power law
        for (c, i, n) in [(220.0, 2.0, 1.3), (100.0, 5.0, 1.2), (40.0, 1.5, 1.05)] {
            let battery = BatterySpec::new(c, 3.0)
                .unwrap()
                .with_peukert_exponent(n)
                .unwrap();
            let profile = DutyCycleProfile::constant_current(i).unwrap();
            let config = SimConfig::new(battery, PowerSource::duty_cycle(profile))
                .unwrap()
                .with_timestep(0.05)
                .unwrap()
                .with_peukert(true);
            let trace = simulate(&config);
            let analytic = crate::battery::peukert_lifetime(c, i, n).unwrap();
            assert_eq!(trace.termination(), Termination::Exhausted);
            assert!(
                (trace.termination_time_h() - analytic).abs() <= 0.05,
                "C={c} I={i} n={n}: {} vs {analytic}",
                trace.termination_time_h()
            );
        }
    }

    #[test]
    fn clamped_peukert_falls_back_to_linear_drain() {
        // sub-milliampere load: the literal power law would lengthen life,
        // the clamp keeps the linear rate
        let battery = battery_220().with_peukert_exponent(1.3).unwrap();
        let profile = DutyCycleProfile::constant_current(0.248).unwrap();
        let config = SimConfig::new(battery, PowerSource::duty_cycle(profile))
            .unwrap()
            .with_peukert(true);
        let trace = simulate(&config);
        assert!((trace.termination_time_h() - 220.0 / 0.248).abs() < 0.1);
    }

    #[test]
    fn residual_is_monotone_without_relaxation() {
        let profile = DutyCycleProfile::new(2.0, 1.0, 0.01, 0.05, 0.3, 0.2, 0.3, 0.2).unwrap();
        let config = SimConfig::new(battery_220(), PowerSource::duty_cycle(profile))
            .unwrap()
            .with_horizon(400.0)
            .unwrap();
        let trace = simulate(&config);
        let records = trace.records();
        for w in records.windows(2) {
            assert!(w[1].residual_mah <= w[0].residual_mah);
        }
    }

    #[test]
    fn relaxation_conserves_charge() {
        let profile = DutyCycleProfile::new(2.0, 1.0, 0.01, 0.05, 0.3, 0.2, 0.3, 0.2).unwrap();
        let config = SimConfig::new(
            BatterySpec::new(1000.0, 3.0).unwrap(),
            PowerSource::duty_cycle(profile),
        )
        .unwrap()
        .with_horizon(1000.0)
        .unwrap()
        .with_relaxation(RelaxationModel::default())
        .unwrap();
        let trace = simulate(&config);
        assert_eq!(trace.termination(), Termination::Horizon);
        let d = trace.diagnostics();
        let last = trace.records().last().unwrap();
        let total = d.drained_mah + d.unavailable_mah + last.residual_mah;
        assert!(
            (total - 1000.0).abs() < 1e-9 * trace.records().len() as f64,
            "total {total}"
        );
        assert!(d.drained_mah <= 1000.0);
    }

    #[test]
    fn relaxation_extends_duty_cycle_lifetime() {
        let profile = DutyCycleProfile::new(8.0, 0.0, 0.0, 0.0, 0.4, 0.0, 0.6, 0.0).unwrap();
        let battery = BatterySpec::new(50.0, 3.0).unwrap();
        let base = SimConfig::new(battery, PowerSource::duty_cycle(profile)).unwrap();
        let plain = simulate(&base);
        let relaxed = simulate(
            &base
                .clone()
                .with_relaxation(RelaxationModel::new(0.2, 0.5).unwrap())
                .unwrap(),
        );
        assert_eq!(plain.termination(), Termination::Exhausted);
        assert_eq!(relaxed.termination(), Termination::Exhausted);
        assert!(relaxed.termination_time_h() > plain.termination_time_h());
    }

    #[test]
    fn self_discharge_alone_loses_the_annual_fraction() {
        let profile = DutyCycleProfile::new(0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0).unwrap();
        let battery = battery_220().with_self_discharge_annual(0.01).unwrap();
        let config = SimConfig::new(battery, PowerSource::duty_cycle(profile))
            .unwrap()
            .with_timestep(1.0)
            .unwrap()
            .with_horizon(HOURS_PER_YEAR)
            .unwrap()
            .with_self_discharge(true);
        let trace = simulate(&config);
        assert_eq!(trace.termination(), Termination::Horizon);
        let last = trace.records().last().unwrap();
        let kept = last.residual_mah / 220.0;
        assert!((kept - 0.99).abs() < 1e-4, "kept {kept}");
        let d = trace.diagnostics();
        assert!((d.self_discharge_mah - 2.2).abs() < 1e-3);
        assert_eq!(d.drained_mah, 0.0);
    }

    #[test]
    fn self_discharge_never_lengthens_lifetime() {
        let base = constant_current_config(50.0, 0.5, 0.1);
        let plain = simulate(&base);
        let with_sd = simulate(&base.clone().with_self_discharge(true));
        assert!(with_sd.termination_time_h() <= plain.termination_time_h());
    }

    #[test]
    fn resistive_lifetime_scales_linearly_with_resistance() {
        let make = |r_ohms: f64| {
            SimConfig::new(
                battery_220(),
                PowerSource::resistive(
                    LoadProfile::new(r_ohms).unwrap(),
                    VoltageSource::Constant(3.3),
                ),
            )
            .unwrap()
            .with_timestep(0.1)
            .unwrap()
        };
        let t_7k5 = simulate(&make(7500.0)).termination_time_h();
        let t_15k = simulate(&make(15000.0)).termination_time_h();
        assert!((t_7k5 - 500.0).abs() < 0.1, "got {t_7k5}");
        assert!((t_15k - 1000.0).abs() < 0.1, "got {t_15k}");
        assert!((t_15k - 2.0 * t_7k5).abs() <= 0.1);
    }

    #[test]
    fn cutoff_terminates_on_curve_voltage() {
        let config = SimConfig::new(
            battery_220(),
            PowerSource::resistive(
                LoadProfile::new(15000.0).unwrap(),
                VoltageSource::Curve(Preset::Farnell15k.curve()),
            ),
        )
        .unwrap()
        .with_timestep(0.5)
        .unwrap()
        .with_horizon(1200.0)
        .unwrap()
        .with_cutoff_voltage(2.0)
        .unwrap();
        let trace = simulate(&config);
        assert_eq!(trace.termination(), Termination::CutoffReached);
        // the published curve crosses 2.0 V near 1047.3 h
        assert!((trace.termination_time_h() - 1047.3).abs() < 1.0);
        let last = trace.records().last().unwrap();
        assert!(last.voltage_v.unwrap() <= 2.0);
        assert_eq!(last.state, StateLabel::Load);
    }

    #[test]
    fn constant_voltage_above_cutoff_censors() {
        let config = SimConfig::new(
            BatterySpec::new(5000.0, 3.3).unwrap(),
            PowerSource::resistive(
                LoadProfile::new(15000.0).unwrap(),
                VoltageSource::Constant(3.3),
            ),
        )
        .unwrap()
        .with_horizon(100.0)
        .unwrap()
        .with_cutoff_voltage(2.0)
        .unwrap();
        let trace = simulate(&config);
        assert_eq!(trace.termination(), Termination::Horizon);
        assert!(matches!(trace.lifetime(), Lifetime::Censored { .. }));
    }

    #[test]
    fn duty_cycle_reports_voltage_only_with_a_map() {
        let profile = DutyCycleProfile::constant_current(0.22).unwrap();
        let bare = SimConfig::new(battery_220(), PowerSource::duty_cycle(profile))
            .unwrap()
            .with_horizon(10.0)
            .unwrap();
        assert!(simulate(&bare)
            .records()
            .iter()
            .all(|r| r.voltage_v.is_none()));

        let map = VoltageMap::new(Preset::Farnell15k.curve(), 0.22).unwrap();
        let mapped = SimConfig::new(
            battery_220(),
            PowerSource::DutyCycle {
                profile,
                voltage_map: Some(map),
            },
        )
        .unwrap()
        .with_horizon(10.0)
        .unwrap();
        let trace = simulate(&mapped);
        // reference current equals the draw, so the map follows wall time
        let r = &trace.records()[1];
        let expected = Preset::Farnell15k.curve().evaluate(r.t_hours);
        assert!((r.voltage_v.unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn exhaustion_wins_a_same_step_tie_with_cutoff() {
        // battery dies within the very first step while the curve voltage
        // is also below the cutoff from t = 0 onwards
        let curve = DischargeCurve::from_coeffs(vec![3.3, -3.0], 0.0, 1.0).unwrap();
        let config = SimConfig::new(
            BatterySpec::new(0.001, 3.0).unwrap(),
            PowerSource::resistive(LoadProfile::new(10.0).unwrap(), VoltageSource::Curve(curve)),
        )
        .unwrap()
        .with_timestep(0.5)
        .unwrap()
        .with_horizon(1.0)
        .unwrap()
        .with_cutoff_voltage(2.0)
        .unwrap();
        let trace = simulate(&config);
        assert_eq!(trace.termination(), Termination::Exhausted);
    }

    #[test]
    fn halving_the_timestep_moves_lifetime_less_than_one_step() {
        let coarse = constant_current_config(30.0, 0.7, 0.8);
        let fine = constant_current_config(30.0, 0.7, 0.4);
        let t_coarse = simulate(&coarse).termination_time_h();
        let t_fine = simulate(&fine).termination_time_h();
        assert!((t_coarse - t_fine).abs() <= 0.8);
    }

    #[test]
    fn config_validation_errors() {
        let profile = DutyCycleProfile::constant_current(1.0).unwrap();
        let config = SimConfig::new(battery_220(), PowerSource::duty_cycle(profile)).unwrap();
        assert!(config.clone().with_timestep(0.0).is_err());
        assert!(config.clone().with_timestep(20000.0).is_err());
        assert!(config.clone().with_horizon(0.01).is_err());
        assert!(config.with_cutoff_voltage(f64::NAN).is_err());
    }
}
