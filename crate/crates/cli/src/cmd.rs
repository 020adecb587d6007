//! Subcommand definitions and execution.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use battkit::battery::peukert_lifetime;
use battkit::load::{load_sweep, power_curve};
use battkit::polyfit::{self, fit, time_to_voltage, DischargeCurve};
use battkit::sim::{simulate, Lifetime};

use crate::config::{load_sim_config, read_curve_file};
use crate::csvio;
use crate::{data_error, usage_error, CliError};

#[derive(Debug, Parser)]
#[command(
    name = "battkit",
    version,
    about = "Battery discharge modeling and node-lifetime simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a polynomial discharge curve to measured samples; prints the RMSE
    Fit {
        /// Input CSV with header `t_hours,v_volts` or `t_seconds,v_volts`
        #[arg(long)]
        input: PathBuf,
        /// Polynomial degree
        #[arg(long, default_value_t = 4)]
        degree: usize,
        /// Where to write the fitted-curve JSON
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a discharge curve at one time or over a grid
    Eval {
        /// Curve JSON produced by `fit`
        #[arg(long, conflicts_with = "preset")]
        curve: Option<PathBuf>,
        /// Published preset: freescale_1s, farnell_15k, farnell_7k5
        #[arg(long)]
        preset: Option<String>,
        /// Single evaluation time in hours; prints the voltage
        #[arg(long, conflicts_with = "grid")]
        at: Option<f64>,
        /// Evaluation grid `T0:T1:STEP` in hours; emits a series
        #[arg(long)]
        grid: Option<String>,
        /// Series destination (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
    /// Find when a curve declines to a voltage; "no crossing" is a valid answer
    Threshold {
        #[arg(long, conflicts_with = "preset")]
        curve: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Threshold voltage in volts
        #[arg(long)]
        voltage: f64,
        /// Search range `T0:T1` in hours
        #[arg(long)]
        range: String,
        /// Emit `{"crossing": <hours or null>}` instead of plain text
        #[arg(long)]
        json: bool,
    },
    /// Analytic battery lifetime: capacity / current^exponent
    Lifetime {
        /// Battery capacity in mAh
        #[arg(long)]
        capacity: f64,
        /// Load current in mA
        #[arg(long)]
        current: f64,
        /// Lifetime-law exponent (1 = rate-independent capacity)
        #[arg(long, default_value_t = 1.0)]
        exponent: f64,
    },
    /// Resistive-load power: over time for a curve, or swept over loads at a fixed voltage
    Power {
        /// Curve JSON for curve mode
        #[arg(long, conflicts_with = "preset")]
        curve: Option<PathBuf>,
        /// Preset name for curve mode
        #[arg(long)]
        preset: Option<String>,
        /// Load in kilo-ohms (curve mode)
        #[arg(long)]
        load_kohm: Option<f64>,
        /// Time grid `T0:T1:STEP` in hours (curve mode)
        #[arg(long)]
        grid: Option<String>,
        /// Fixed source voltage in volts (sweep mode)
        #[arg(long)]
        volts: Option<f64>,
        /// Comma-separated loads in kilo-ohms (sweep mode)
        #[arg(long, value_delimiter = ',')]
        loads_kohm: Option<Vec<f64>>,
        /// Series destination (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
    /// Simulate a configured node until exhaustion, cutoff, or horizon
    Simulate {
        /// JSON config file (schema documented in the README)
        #[arg(long)]
        config: PathBuf,
        /// Where to write the trace
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit { input, degree, out } => run_fit(&input, degree, &out),
        Command::Eval {
            curve,
            preset,
            at,
            grid,
            out,
            format,
        } => run_eval(curve.as_deref(), preset.as_deref(), at, grid.as_deref(), out.as_deref(), format),
        Command::Threshold {
            curve,
            preset,
            voltage,
            range,
            json,
        } => run_threshold(curve.as_deref(), preset.as_deref(), voltage, &range, json),
        Command::Lifetime {
            capacity,
            current,
            exponent,
        } => run_lifetime(capacity, current, exponent),
        Command::Power {
            curve,
            preset,
            load_kohm,
            grid,
            volts,
            loads_kohm,
            out,
            format,
        } => run_power(
            curve.as_deref(),
            preset.as_deref(),
            load_kohm,
            grid.as_deref(),
            volts,
            loads_kohm,
            out.as_deref(),
            format,
        ),
        Command::Simulate {
            config,
            out,
            format,
        } => run_simulate(&config, &out, format),
    }
}

/// Loads the curve named by `--curve` or `--preset`; exactly one must be
/// given. Unknown preset names are usage errors listing the valid names.
fn resolve_curve_arg(
    curve: Option<&Path>,
    preset: Option<&str>,
) -> Result<DischargeCurve, CliError> {
    match (curve, preset) {
        (Some(path), None) => read_curve_file(path),
        (None, Some(name)) => polyfit::preset(name).map_err(usage_error),
        _ => Err(CliError::Usage(
            "exactly one of --curve or --preset is required".into(),
        )),
    }
}

/// Parses `T0:T1:STEP` into an inclusive grid of hours.
fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [t0, t1, step] = parts.as_slice() else {
        return Err(CliError::Usage(format!(
            "grid `{spec}` must be T0:T1:STEP"
        )));
    };
    let t0: f64 = parse_flag_number("grid start", t0)?;
    let t1: f64 = parse_flag_number("grid end", t1)?;
    let step: f64 = parse_flag_number("grid step", step)?;
    if !step.is_finite() || step <= 0.0 {
        return Err(CliError::Usage(format!("grid step must be > 0, got {step}")));
    }
    if !t0.is_finite() || !t1.is_finite() || t1 < t0 {
        return Err(CliError::Usage(format!(
            "grid range [{t0}, {t1}] must be finite with T0 <= T1"
        )));
    }
    let mut grid = Vec::new();
    for k in 0.. {
        let t = t0 + k as f64 * step;
        if t > t1 + step * 1e-9 {
            break;
        }
        grid.push(t);
    }
    Ok(grid)
}

fn parse_range(spec: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi] = parts.as_slice() else {
        return Err(CliError::Usage(format!("range `{spec}` must be T0:T1")));
    };
    Ok((
        parse_flag_number("range start", lo)?,
        parse_flag_number("range end", hi)?,
    ))
}

fn parse_flag_number(what: &str, raw: &str) -> Result<f64, CliError> {
    raw.parse()
        .map_err(|_| CliError::Usage(format!("{what}: malformed number `{raw}`")))
}

fn write_output(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, contents)
            .map_err(|e| CliError::Data(format!("{}: {e}", p.display()))),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn warn_extrapolation(curve: &DischargeCurve, times: &[f64]) {
    let outside = times.iter().filter(|&&t| curve.is_extrapolation(t)).count();
    if outside > 0 {
        let (lo, hi) = curve.domain();
        eprintln!(
            "warning: {outside} evaluation time(s) lie outside the fit domain [{lo}, {hi}]"
        );
    }
}

fn run_fit(input: &Path, degree: usize, out: &Path) -> Result<(), CliError> {
    let file = fs::File::open(input)
        .map_err(|e| CliError::Data(format!("{}: {e}", input.display())))?;
    let samples = csvio::parse_discharge_csv(BufReader::new(file))?;
    let curve = fit(&samples, degree).map_err(data_error)?;
    let json = serde_json::to_string_pretty(&curve)
        .expect("curve serialization cannot fail");
    fs::write(out, json + "\n").map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    println!("{}", curve.rmse().expect("fit populates rmse"));
    Ok(())
}

fn run_eval(
    curve: Option<&Path>,
    preset: Option<&str>,
    at: Option<f64>,
    grid: Option<&str>,
    out: Option<&Path>,
    format: OutputFormat,
) -> Result<(), CliError> {
    let curve = resolve_curve_arg(curve, preset)?;
    match (at, grid) {
        (Some(t), None) => {
            if !t.is_finite() {
                return Err(CliError::Usage(format!("--at must be finite, got {t}")));
            }
            warn_extrapolation(&curve, &[t]);
            println!("{}", curve.evaluate(t));
            Ok(())
        }
        (None, Some(spec)) => {
            let grid = parse_grid(spec)?;
            warn_extrapolation(&curve, &grid);
            let rows: Vec<(f64, f64)> = curve
                .sample_grid(&grid)
                .iter()
                .map(|s| (s.t_hours, s.v_volts))
                .collect();
            let text = match format {
                OutputFormat::Csv => csvio::xy_csv("t_hours", "v_volts", &rows),
                OutputFormat::Json => csvio::xy_json(&rows),
            };
            write_output(out, &text)
        }
        _ => Err(CliError::Usage(
            "exactly one of --at or --grid is required".into(),
        )),
    }
}

fn run_threshold(
    curve: Option<&Path>,
    preset: Option<&str>,
    voltage: f64,
    range: &str,
    json: bool,
) -> Result<(), CliError> {
    let curve = resolve_curve_arg(curve, preset)?;
    let (t_lo, t_hi) = parse_range(range)?;
    let crossing = time_to_voltage(&curve, voltage, t_lo, t_hi).map_err(usage_error)?;
    match (json, crossing) {
        (true, Some(t)) => println!("{{\"crossing\":{t}}}"),
        (true, None) => println!("{{\"crossing\":null}}"),
        (false, Some(t)) => println!("{t}"),
        (false, None) => println!("no crossing"),
    }
    Ok(())
}

fn run_lifetime(capacity: f64, current: f64, exponent: f64) -> Result<(), CliError> {
    let hours = peukert_lifetime(capacity, current, exponent).map_err(usage_error)?;
    println!("{hours:.2}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_power(
    curve: Option<&Path>,
    preset: Option<&str>,
    load_kohm: Option<f64>,
    grid: Option<&str>,
    volts: Option<f64>,
    loads_kohm: Option<Vec<f64>>,
    out: Option<&Path>,
    format: OutputFormat,
) -> Result<(), CliError> {
    let curve_mode = curve.is_some() || preset.is_some() || load_kohm.is_some() || grid.is_some();
    let sweep_mode = volts.is_some() || loads_kohm.is_some();
    match (curve_mode, sweep_mode) {
        (true, false) => {
            let curve = resolve_curve_arg(curve, preset)?;
            let kohm = load_kohm
                .ok_or_else(|| CliError::Usage("--load-kohm is required in curve mode".into()))?;
            let spec = grid
                .ok_or_else(|| CliError::Usage("--grid is required in curve mode".into()))?;
            let grid = parse_grid(spec)?;
            warn_extrapolation(&curve, &grid);
            let series = power_curve(&curve, kohm * 1000.0, &grid).map_err(usage_error)?;
            let rows: Vec<(f64, f64)> = series
                .points()
                .iter()
                .map(|p| (p.t_hours, p.p_mw))
                .collect();
            let text = match format {
                OutputFormat::Csv => csvio::xy_csv("t_hours", "p_mw", &rows),
                OutputFormat::Json => csvio::xy_json(&rows),
            };
            write_output(out, &text)
        }
        (false, true) => {
            let v = volts
                .ok_or_else(|| CliError::Usage("--volts is required in sweep mode".into()))?;
            let kohms = loads_kohm
                .ok_or_else(|| CliError::Usage("--loads-kohm is required in sweep mode".into()))?;
            let ohms: Vec<f64> = kohms.iter().map(|k| k * 1000.0).collect();
            let sweep = load_sweep(v, &ohms).map_err(usage_error)?;
            let rows: Vec<(f64, f64)> = sweep.iter().map(|p| (p.r_ohms, p.p_mw)).collect();
            let text = match format {
                OutputFormat::Csv => csvio::xy_csv("r_ohms", "p_mw", &rows),
                OutputFormat::Json => csvio::xy_json(&rows),
            };
            write_output(out, &text)
        }
        _ => Err(CliError::Usage(
            "use either curve mode (--curve/--preset --load-kohm --grid) \
             or sweep mode (--volts --loads-kohm)"
                .into(),
        )),
    }
}

fn run_simulate(config: &Path, out: &Path, format: OutputFormat) -> Result<(), CliError> {
    let config = load_sim_config(config)?;
    let trace = simulate(&config);
    let text = match format {
        OutputFormat::Csv => csvio::trace_to_csv(&trace),
        OutputFormat::Json => {
            serde_json::to_string(&trace).expect("trace serialization cannot fail") + "\n"
        }
    };
    fs::write(out, text).map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    println!("termination: {}", trace.termination());
    match trace.lifetime() {
        Lifetime::Reached(hours) => println!("lifetime_h: {hours}"),
        Lifetime::Censored { horizon_h } => {
            println!("lifetime_h: censored (ran to horizon {horizon_h} h)")
        }
    }
    Ok(())
}
