//! CSV parsing and CSV/JSON emission.
//!
//! Floats are printed with Rust's shortest round-trip representation, so an
//! emit/parse cycle reproduces every value bit-exactly.

use std::fmt::Write as _;
use std::io::BufRead;

use battkit::polyfit::DischargeSample;
use battkit::sim::SimTrace;

use crate::CliError;

pub const HEADER_HOURS: &str = "t_hours,v_volts";
pub const HEADER_SECONDS: &str = "t_seconds,v_volts";
pub const TRACE_HEADER: &str = "t_hours,residual_mah,voltage_v,state";

/// Reads discharge samples from CSV. The header picks the time unit; a
/// `t_seconds` column is converted to hours on ingestion. Sample order is
/// preserved and does not have to be sorted.
pub fn parse_discharge_csv<R: BufRead>(reader: R) -> Result<Vec<DischargeSample>, CliError> {
    let mut seconds = false;
    let mut saw_header = false;
    let mut samples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line =
            line.map_err(|e| CliError::Data(format!("line {line_no}: read failed: {e}")))?;
        let line = line.trim_end_matches('\r');
        if !saw_header {
            match line {
                HEADER_HOURS => seconds = false,
                HEADER_SECONDS => seconds = true,
                other => {
                    return Err(CliError::Data(format!(
                        "unknown header `{other}`: expected `{HEADER_HOURS}` or `{HEADER_SECONDS}`"
                    )))
                }
            }
            saw_header = true;
            continue;
        }
        let mut fields = line.split(',');
        let (Some(t_raw), Some(v_raw), None) = (fields.next(), fields.next(), fields.next())
        else {
            return Err(CliError::Data(format!(
                "line {line_no}: expected 2 comma-separated fields"
            )));
        };
        let t: f64 = t_raw.parse().map_err(|_| {
            CliError::Data(format!("line {line_no}: malformed number `{t_raw}`"))
        })?;
        let v: f64 = v_raw.parse().map_err(|_| {
            CliError::Data(format!("line {line_no}: malformed number `{v_raw}`"))
        })?;
        let t = if seconds { t / 3600.0 } else { t };
        let sample = DischargeSample::new(t, v)
            .map_err(|e| CliError::Data(format!("line {line_no}: {e}")))?;
        samples.push(sample);
    }
    if !saw_header {
        return Err(CliError::Data("empty input: missing header".into()));
    }
    if samples.is_empty() {
        return Err(CliError::Data("no data rows after the header".into()));
    }
    Ok(samples)
}

pub fn samples_to_csv(samples: &[DischargeSample]) -> String {
    let mut out = String::from(HEADER_HOURS);
    out.push('\n');
    for s in samples {
        writeln!(out, "{},{}", s.t_hours, s.v_volts).expect("string write");
    }
    out
}

/// Two-column CSV with the given header names.
pub fn xy_csv(x_name: &str, y_name: &str, rows: &[(f64, f64)]) -> String {
    let mut out = format!("{x_name},{y_name}\n");
    for (x, y) in rows {
        writeln!(out, "{x},{y}").expect("string write");
    }
    out
}

/// JSON array of `[x, y]` pairs, e.g. `[[0,3.292]]`.
pub fn xy_json(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("[");
    for (i, (x, y)) in rows.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "[{x},{y}]").expect("string write");
    }
    out.push_str("]\n");
    out
}

/// Trace CSV, one record per line; the voltage column is empty when the run
/// had no voltage to report.
pub fn trace_to_csv(trace: &SimTrace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in trace.records() {
        match r.voltage_v {
            Some(v) => writeln!(
                out,
                "{},{},{},{}",
                r.t_hours,
                r.residual_mah,
                v,
                r.state.as_str()
            ),
            None => writeln!(
                out,
                "{},{},,{}",
                r.t_hours,
                r.residual_mah,
                r.state.as_str()
            ),
        }
        .expect("string write");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn parses_hour_and_second_headers() {
        let samples = parse_discharge_csv(Cursor::new("t_hours,v_volts\n0,3.292\n")).unwrap();
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].t_hours, 0.0);
        assert_eq!(samples[0].v_volts, 3.292);

        let samples = parse_discharge_csv(Cursor::new("t_seconds,v_volts\n3600,3.0\n")).unwrap();
        assert_eq!(samples[0].t_hours, 1.0);
        assert_eq!(samples[0].v_volts, 3.0);
    }

    #[test]
    fn reports_malformed_rows_with_line_numbers() {
        let err = parse_discharge_csv(Cursor::new("t_hours,v_volts\nabc,3.0\n")).unwrap_err();
        assert!(err.to_string().contains("line 2: malformed number"), "{err}");

        let err =
            parse_discharge_csv(Cursor::new("t_hours,v_volts\n0,3.0\n1,2.9,9\n")).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn rejects_unknown_header_and_empty_files() {
        let err = parse_discharge_csv(Cursor::new("time,volts\n0,3.0\n")).unwrap_err();
        assert!(err.to_string().contains("`time,volts`"), "{err}");
        assert!(parse_discharge_csv(Cursor::new("")).is_err());
        assert!(parse_discharge_csv(Cursor::new("t_hours,v_volts\n")).is_err());
    }

    #[test]
    fn rejects_non_finite_and_negative_times() {
        assert!(parse_discharge_csv(Cursor::new("t_hours,v_volts\nNaN,3.0\n")).is_err());
        assert!(parse_discharge_csv(Cursor::new("t_hours,v_volts\n-1,3.0\n")).is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let samples = vec![
            DischargeSample::new(0.0, 3.292).unwrap(),
            DischargeSample::new(1.0 / 3.0, 2.0 / 7.0).unwrap(),
            DischargeSample::new(1050.0, 1.983765625).unwrap(),
        ];
        let text = samples_to_csv(&samples);
        let back = parse_discharge_csv(Cursor::new(text.as_bytes())).unwrap();
        assert_eq!(samples, back);
    }

    #[test]
    fn json_series_uses_plain_float_display() {
        assert_eq!(xy_json(&[(0.0, 3.292)]), "[[0,3.292]]\n");
        assert_eq!(xy_json(&[]), "[]\n");
    }
}
