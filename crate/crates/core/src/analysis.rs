//! Quantify decay from energy traces: least-squares rate fits and the
//! exponential-bound check behind a certificate.

use crate::error::{Error, Result};
use crate::wavesim::EnergyTrace;

/// Energies at or below this floor are excluded from log fitting.
pub const ENERGY_FLOOR: f64 = 1e-30;

/// Minimum usable samples for a rate fit.
pub const MIN_FIT_SAMPLES: usize = 10;

/// Default start of the fit window; the bound is uniform in time but rate
/// fitting is cleanest past the initial transient.
pub const DEFAULT_FIT_START: f64 = 1.0;

/// Outcome of checking a trace against its certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    DecayCertified,
    BoundViolated,
    GrowthDetected,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::DecayCertified => "decay_certified",
            Verdict::BoundViolated => "bound_violated",
            Verdict::GrowthDetected => "growth_detected",
        };
        f.write_str(s)
    }
}

/// Comparison of an energy trace against `E(0) exp(-2 alpha_star t)`.
///
/// `fitted_slope` is the raw least-squares slope `s` of `log E_total` over
/// the fit window and `fitted_rate` is `-s/2` (directly comparable to
/// `alpha_star`); both are absent when too few positive samples fall in the
/// window.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub alpha_star: f64,
    pub fitted_slope: Option<f64>,
    pub fitted_rate: Option<f64>,
    pub bound_satisfied: bool,
    pub max_bound_ratio: f64,
    pub fit_window: (f64, f64),
    pub verdict: Verdict,
}

/// Raw least-squares slope of `log E_total` against `t` over the window.
///
/// Samples with `E_total <=` [`ENERGY_FLOOR`] are excluded; fewer than
/// [`MIN_FIT_SAMPLES`] usable samples is an error.
pub fn fit_log_slope(trace: &EnergyTrace, window: (f64, f64)) -> Result<f64> {
    let (t_lo, t_hi) = window;
    let pts: Vec<(f64, f64)> = trace
        .samples()
        .iter()
        .filter(|s| s.t >= t_lo && s.t <= t_hi && s.total > ENERGY_FLOOR)
        .map(|s| (s.t, s.total.ln()))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples {
            available: pts.len(),
            needed: MIN_FIT_SAMPLES,
        });
    }
    let n = pts.len() as f64;
    let t_mean = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, y) in &pts {
        num += (t - t_mean) * (y - y_mean);
        den += (t - t_mean) * (t - t_mean);
    }
    if den == 0.0 {
        return Err(Error::InsufficientSamples {
            available: 1,
            needed: MIN_FIT_SAMPLES,
        });
    }
    Ok(num / den)
}

/// Empirical decay rate `-slope/2`, on the same scale as `alpha_star`.
pub fn fit_decay_rate(trace: &EnergyTrace, window: (f64, f64)) -> Result<f64> {
    fit_log_slope(trace, window).map(|s| -0.5 * s)
}

/// Check the Gronwall bound with the default fit window
/// `[min(1, t_end), t_end]`.
pub fn check_bound(trace: &EnergyTrace, alpha_star: f64, tol: f64) -> Result<DecayReport> {
    let t_end = trace
        .samples()
        .last()
        .map(|s| s.t)
        .ok_or(Error::EmptyTrace)?;
    let lo = if t_end > DEFAULT_FIT_START {
        DEFAULT_FIT_START
    } else {
        0.0
    };
    check_bound_with_window(trace, alpha_star, tol, (lo, t_end))
}

/// Check `E(t) <= E(0) exp(-2 alpha_star t) (1 + tol)` at every sample.
///
/// The reference `E(0)` is the trace's own first sample (the analytic
/// initial-data prefactor is the caller's to compare). The verdict is
/// `DecayCertified` when the bound holds, otherwise `GrowthDetected` when
/// the final energy exceeds the initial one, otherwise `BoundViolated`.
pub fn check_bound_with_window(
    trace: &EnergyTrace,
    alpha_star: f64,
    tol: f64,
    fit_window: (f64, f64),
) -> Result<DecayReport> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    if !(alpha_star >= 0.0) || !alpha_star.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "alpha_star must be nonnegative and finite, got {alpha_star}"
        )));
    }
    if !(tol >= 0.0) || !tol.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "tol must be nonnegative and finite, got {tol}"
        )));
    }
    let samples = trace.samples();
    if samples[0].t != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "trace must start at t = 0, got {}",
            samples[0].t
        )));
    }
    let e0 = samples[0].total;
    let mut max_ratio: f64 = 0.0;
    for s in samples {
        let envelope = e0 * (-2.0 * alpha_star * s.t).exp();
        let ratio = if envelope > 0.0 {
            s.total / envelope
        } else if s.total == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        max_ratio = max_ratio.max(ratio);
    }
    let bound_satisfied = max_ratio <= 1.0 + tol;
    let verdict = if bound_satisfied {
        Verdict::DecayCertified
    } else if samples[samples.len() - 1].total > e0 {
        Verdict::GrowthDetected
    } else {
        Verdict::BoundViolated
    };
    let slope = fit_log_slope(trace, fit_window).ok();
    Ok(DecayReport {
        alpha_star,
        fitted_slope: slope,
        fitted_rate: slope.map(|s| -0.5 * s),
        bound_satisfied,
        max_bound_ratio: max_ratio,
        fit_window,
        verdict,
    })
}
