//! Polynomial modeling of battery discharge curves: least-squares fitting of
//! measured (time, voltage) samples, evaluation, fit quality, threshold
//! crossing search, and published coefficient presets.
//!
//! A raw degree-4 Vandermonde system over hundreds of hours is
//! catastrophically ill-conditioned, so [`fit`] maps time onto [-1, 1] over
//! the sample range, solves there, and expands the coefficients back into
//! hour units. That keeps noiseless quartic round-trips accurate to better
//! than 1e-6 relative per coefficient.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::batch;
use crate::error::{ensure_finite, Error, Result};

/// Step of the coarse bracketing scan used by [`time_to_voltage`], in hours.
pub const THRESHOLD_SCAN_STEP_H: f64 = 1.0;

/// Absolute tolerance of the bisection refinement in [`time_to_voltage`],
/// in hours.
pub const THRESHOLD_BISECT_TOL_H: f64 = 1e-3;

/// One measured (time, voltage) point of a discharge run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DischargeSample {
    pub t_hours: f64,
    pub v_volts: f64,
}

impl DischargeSample {
    /// Time must be finite and non-negative, voltage finite.
    pub fn new(t_hours: f64, v_volts: f64) -> Result<Self> {
        ensure_finite("t_hours", t_hours)?;
        if t_hours < 0.0 {
            return Err(Error::Domain(format!(
                "t_hours must be >= 0, got {t_hours}"
            )));
        }
        ensure_finite("v_volts", v_volts)?;
        Ok(Self { t_hours, v_volts })
    }
}

/// A voltage-versus-time polynomial, with coefficients in ascending powers
/// of time (volts per hour^i) and the time range the fit is valid over.
///
/// `rmse` is populated by [`fit`] and absent on [`preset`] curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DischargeCurve {
    degree: usize,
    coeffs: Vec<f64>,
    t_min: f64,
    t_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rmse: Option<f64>,
}

/// A curve value together with where it was taken and whether the time lay
/// outside the fit domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoltageSample {
    pub t_hours: f64,
    pub v_volts: f64,
    pub extrapolated: bool,
}

impl DischargeCurve {
    /// Builds a curve from ascending-power coefficients and a fit domain.
    pub fn from_coeffs(coeffs: Vec<f64>, t_min: f64, t_max: f64) -> Result<Self> {
        let curve = Self {
            degree: coeffs.len().saturating_sub(1),
            coeffs,
            t_min,
            t_max,
            rmse: None,
        };
        curve.validate()?;
        Ok(curve)
    }

    /// Re-checks the struct invariants; call this after deserializing.
    pub fn validate(&self) -> Result<()> {
        if self.coeffs.is_empty() {
            return Err(Error::Domain("coeffs must not be empty".into()));
        }
        if self.coeffs.len() != self.degree + 1 {
            return Err(Error::Domain(format!(
                "degree {} needs {} coefficients, got {}",
                self.degree,
                self.degree + 1,
                self.coeffs.len()
            )));
        }
        for (i, c) in self.coeffs.iter().enumerate() {
            ensure_finite(&format!("coeffs[{i}]"), *c)?;
        }
        ensure_finite("t_min", self.t_min)?;
        ensure_finite("t_max", self.t_max)?;
        if self.t_min > self.t_max {
            return Err(Error::InvalidRange {
                lo: self.t_min,
                hi: self.t_max,
            });
        }
        if let Some(rmse) = self.rmse {
            if !rmse.is_finite() || rmse < 0.0 {
                return Err(Error::Domain(format!("rmse must be >= 0, got {rmse}")));
            }
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficients in ascending powers of time.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// The time range the fit is valid over, in hours.
    pub fn domain(&self) -> (f64, f64) {
        (self.t_min, self.t_max)
    }

    pub fn rmse(&self) -> Option<f64> {
        self.rmse
    }

    pub(crate) fn with_rmse(mut self, rmse: f64) -> Self {
        self.rmse = Some(rmse);
        self
    }

    /// Polynomial value at `t_hours`, by nested (Horner) evaluation.
    pub fn evaluate(&self, t_hours: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * t_hours + c)
    }

    /// Whether `t_hours` lies outside the fit domain. Evaluation is still
    /// permitted there, but quartics diverge quickly past their data.
    pub fn is_extrapolation(&self, t_hours: f64) -> bool {
        t_hours < self.t_min || t_hours > self.t_max
    }

    /// [`DischargeCurve::evaluate`] plus the extrapolation flag.
    pub fn sample(&self, t_hours: f64) -> VoltageSample {
        VoltageSample {
            t_hours,
            v_volts: self.evaluate(t_hours),
            extrapolated: self.is_extrapolation(t_hours),
        }
    }

    /// Evaluates the curve over a whole grid. Runs on the rayon pool when
    /// the `parallel` feature is enabled.
    pub fn sample_grid(&self, t_grid: &[f64]) -> Vec<VoltageSample> {
        batch::map_fine(t_grid, |&t| self.sample(t))
    }
}

/// Least-squares fit of `samples` to a polynomial of the given degree.
///
/// Needs at least `degree + 1` samples with distinct times. Solves on a
/// normalized time variable via SVD and reports coefficients back in hour
/// units, with the training RMSE attached to the returned curve.
pub fn fit(samples: &[DischargeSample], degree: usize) -> Result<DischargeCurve> {
    let needed = degree + 1;
    if samples.len() < needed {
        return Err(Error::InsufficientSamples {
            degree,
            needed,
            got: samples.len(),
        });
    }
    for s in samples {
        // samples may have been built directly; re-check the invariants
        DischargeSample::new(s.t_hours, s.v_volts)?;
    }

    let mut times: Vec<f64> = samples.iter().map(|s| s.t_hours).collect();
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    let distinct = 1 + times.windows(2).filter(|w| w[0] != w[1]).count();
    if distinct < needed {
        return Err(Error::RankDeficient(format!(
            "{distinct} distinct time value(s) cannot determine a degree-{degree} \
             polynomial (need {needed})"
        )));
    }
    let t_min = times[0];
    let t_max = times[times.len() - 1];

    // map t to u in [-1, 1]: u = (t - mid) / half
    let mid = 0.5 * (t_min + t_max);
    let half = 0.5 * (t_max - t_min);
    let to_u = |t: f64| if half > 0.0 { (t - mid) / half } else { 0.0 };

    let rows = samples.len();
    let mut design = DMatrix::zeros(rows, needed);
    for (r, s) in samples.iter().enumerate() {
        let u = to_u(s.t_hours);
        let mut p = 1.0;
        for c in 0..needed {
            design[(r, c)] = p;
            p *= u;
        }
    }
    let rhs = DVector::from_iterator(rows, samples.iter().map(|s| s.v_volts));

    let svd = design.svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = max_sv * rows.max(needed) as f64 * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    if rank < needed {
        return Err(Error::RankDeficient(format!(
            "time grid yields a numerically singular system (rank {rank} of {needed})"
        )));
    }
    let solution = svd
        .solve(&rhs, eps)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;

    // expand q(u) = sum c_j u^j back to powers of t, with u = a*t + b
    let (a, b) = if half > 0.0 {
        (1.0 / half, -mid / half)
    } else {
        (0.0, 0.0)
    };
    let mut coeffs = vec![0.0; needed];
    let mut pow = vec![0.0; needed]; // (a*t + b)^j, ascending powers of t
    pow[0] = 1.0;
    for (j, &cj) in solution.iter().enumerate() {
        if j > 0 {
            for i in (1..=j).rev() {
                pow[i] = pow[i] * b + pow[i - 1] * a;
            }
            pow[0] *= b;
        }
        for i in 0..=j {
            coeffs[i] += cj * pow[i];
        }
    }

    let curve = DischargeCurve::from_coeffs(coeffs, t_min, t_max)?;
    let err = rmse(&curve, samples)?;
    Ok(curve.with_rmse(err))
}

/// Root-mean-square residual of `samples` against `curve`.
pub fn rmse(curve: &DischargeCurve, samples: &[DischargeSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let sse: f64 = samples
        .iter()
        .map(|s| {
            let r = s.v_volts - curve.evaluate(s.t_hours);
            r * r
        })
        .sum();
    Ok((sse / samples.len() as f64).sqrt())
}

/// Earliest time in `[t_lo, t_hi]` where the curve declines to or below
/// `v_threshold`, or `None` when no downward crossing exists in the range.
///
/// A 1-hour scan brackets the first downward crossing and bisection refines
/// it to 1e-3 h; the returned time always satisfies the threshold. A curve
/// sitting exactly at the threshold at `t_lo` crosses immediately, but a
/// threshold strictly above the whole curve is reported as no crossing: the
/// voltage never declines *to* it.
pub fn time_to_voltage(
    curve: &DischargeCurve,
    v_threshold: f64,
    t_lo: f64,
    t_hi: f64,
) -> Result<Option<f64>> {
    ensure_finite("v_threshold", v_threshold)?;
    if !t_lo.is_finite() || !t_hi.is_finite() || t_lo >= t_hi {
        return Err(Error::InvalidRange { lo: t_lo, hi: t_hi });
    }
    let below = |t: f64| curve.evaluate(t) <= v_threshold;
    let v0 = curve.evaluate(t_lo);
    if v0 == v_threshold {
        return Ok(Some(t_lo));
    }
    // `prev` tracks the latest scan point above the threshold; a crossing
    // needs such a point before it, so a curve that starts strictly below
    // keeps scanning until it first rises above the level.
    let mut prev = (v0 > v_threshold).then_some(t_lo);
    for k in 1.. {
        let t = (t_lo + k as f64 * THRESHOLD_SCAN_STEP_H).min(t_hi);
        if below(t) {
            if let Some(above) = prev {
                let (mut lo, mut hi) = (above, t);
                while hi - lo > THRESHOLD_BISECT_TOL_H {
                    let m = 0.5 * (lo + hi);
                    if below(m) {
                        hi = m;
                    } else {
                        lo = m;
                    }
                }
                return Ok(Some(hi));
            }
        } else {
            prev = Some(t);
        }
        if t >= t_hi {
            break;
        }
    }
    Ok(None)
}

const PRESET_DOMAIN: (f64, f64) = (0.0, 1200.0);

const FREESCALE_1S: [f64; 5] = [3.16, 0.00309, 1.125e-5, -1.36e-8, 4.255e-12];
const FARNELL_15K: [f64; 5] = [3.292, -0.0012, -2.464e-6, 8.92e-9, -6.3e-12];
const FARNELL_7K5: [f64; 5] = [3.292, -0.0015, 1.32e-5, 4.63e-9, -4.17e-11];

/// Published quartic coefficient sets for coin-cell discharge data:
/// a 1 s transmission-interval characterization and two resistive-load
/// characterizations (15 kOhm and 7.5 kOhm).
///
/// The sets are stored verbatim as published. Note that `freescale_1s` and
/// `farnell_7k5` rise over part of the domain, so threshold searches
/// against them can legitimately report no crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Freescale1s,
    Farnell15k,
    Farnell7k5,
}

/// Valid preset names, for error messages and help text.
pub const PRESET_NAMES: &str = "freescale_1s, farnell_15k, farnell_7k5";

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Freescale1s, Preset::Farnell15k, Preset::Farnell7k5];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Freescale1s => "freescale_1s",
            Preset::Farnell15k => "farnell_15k",
            Preset::Farnell7k5 => "farnell_7k5",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::UnknownPreset {
                name: name.to_string(),
                valid: PRESET_NAMES,
            })
    }

    pub fn curve(self) -> DischargeCurve {
        let coeffs = match self {
            Preset::Freescale1s => FREESCALE_1S,
            Preset::Farnell15k => FARNELL_15K,
            Preset::Farnell7k5 => FARNELL_7K5,
        };
        DischargeCurve::from_coeffs(coeffs.to_vec(), PRESET_DOMAIN.0, PRESET_DOMAIN.1)
            .expect("preset coefficients are valid")
    }
}

/// Looks up a published coefficient set by name.
pub fn preset(name: &str) -> Result<DischargeCurve> {
    Preset::from_name(name).map(Preset::curve)
}
