//! Time-dependent pseudo R² for a predicted cumulative incidence function.
//!
//! Two working outcomes turn the improper CIF of the cause of interest into a
//! proper target:
//!
//! - **horizon**: the restricted event time `Y^(1,τ)`, equal to the event time
//!   for a cause-of-interest event at or before `τ` and to `τ` otherwise; its
//!   predicted mean is `∫₀^τ (1 − F*(u|x)) du`.
//! - **point**: the indicator `ξ^(1,τ) = I(Y ≤ τ, D = cause)`, predicted by
//!   `F*(τ|x)`.
//!
//! The outcome is regressed on the prediction by weighted least squares with
//! IPCW weights. `R²` is the weighted share of outcome variance explained by
//! the calibrated prediction, `L²` the share of the raw prediction's squared
//! error that remains after calibration, and the pseudo R² is their product.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::censoring::{censoring_survival, ipcw_from_parts, DegeneratePolicy};
use crate::data::{CompetingRisksRecord, Dataset, PredictionSet};
use crate::error::{Error, Result};
use crate::step::StepFunction;
use crate::sum::csum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Interval `[0, τ)` via the restricted event time.
    Horizon,
    /// Single time point `τ` via the event indicator.
    Point,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "horizon" => Ok(Variant::Horizon),
            "point" => Ok(Variant::Point),
            other => Err(Error::InvalidParameter(format!(
                "unknown variant {other:?} (expected horizon or point)"
            ))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Horizon => "horizon",
            Variant::Point => "point",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkingOutcome {
    pub value: f64,
    /// True iff the subject is uncensored.
    pub observed: bool,
}

/// Restricted event time `Y^(1,τ)`.
///
/// Censored records carry `min(time, τ)`; they always get zero weight.
pub fn working_time(record: &CompetingRisksRecord, tau: f64, cause: u32) -> WorkingOutcome {
    working_time_raw(record.time, record.event, tau, cause)
}

#[inline]
pub fn working_time_raw(time: f64, event: u32, tau: f64, cause: u32) -> WorkingOutcome {
    if event == 0 {
        return WorkingOutcome {
            value: time.min(tau),
            observed: false,
        };
    }
    let value = if time <= tau && event == cause { time } else { tau };
    WorkingOutcome {
        value,
        observed: true,
    }
}

/// Event indicator `ξ^(1,τ) = I(T ≤ τ, event = cause)`.
pub fn event_indicator(record: &CompetingRisksRecord, tau: f64, cause: u32) -> WorkingOutcome {
    event_indicator_raw(record.time, record.event, tau, cause)
}

#[inline]
pub fn event_indicator_raw(time: f64, event: u32, tau: f64, cause: u32) -> WorkingOutcome {
    WorkingOutcome {
        value: if time <= tau && event == cause { 1.0 } else { 0.0 },
        observed: event != 0,
    }
}

/// Predicted mean of `Y^(1,τ)`: `τ − ∫₀^τ F*(u) du`, exact for a step curve.
pub fn restricted_mean(cif: &StepFunction, tau: f64) -> f64 {
    cif.integrate_map(tau, |v| 1.0 - v)
}

/// Weighted least-squares line `y ≈ intercept + slope · x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFit {
    pub intercept: f64,
    pub slope: f64,
    /// The predictor had zero weighted variance; slope is 0.
    pub degenerate: bool,
}

impl CalibrationFit {
    #[inline]
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Closed-form weighted least squares of `y` on `x`.
///
/// Weights need not be normalized; only their ratios matter.
pub fn weighted_linear_fit(x: &[f64], y: &[f64], w: &[f64]) -> Result<CalibrationFit> {
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::LengthMismatch(format!(
            "x {}, y {}, w {}",
            x.len(),
            y.len(),
            w.len()
        )));
    }
    if w.iter().any(|&wi| wi < 0.0 || !wi.is_finite()) {
        return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
    }
    let total = csum(w.iter().copied());
    if !(total > 0.0) {
        return Err(Error::ZeroWeights);
    }
    let xbar = csum(x.iter().zip(w).map(|(xi, wi)| xi * wi)) / total;
    let ybar = csum(y.iter().zip(w).map(|(yi, wi)| yi * wi)) / total;

    let mut first = None;
    let mut constant = true;
    let mut xmax = 0.0f64;
    for (&xi, &wi) in x.iter().zip(w) {
        if wi > 0.0 {
            xmax = xmax.max(xi.abs());
            match first {
                None => first = Some(xi),
                Some(f) if f != xi => constant = false,
                _ => {}
            }
        }
    }
    let sxx = csum(x.iter().zip(w).map(|(xi, wi)| wi * (xi - xbar).powi(2))) / total;
    let tiny = (1e-14 * xmax).powi(2);
    if constant || sxx <= tiny {
        return Ok(CalibrationFit {
            intercept: ybar,
            slope: 0.0,
            degenerate: true,
        });
    }
    let sxy = csum(
        x.iter()
            .zip(y)
            .zip(w)
            .map(|((xi, yi), wi)| wi * (xi - xbar) * (yi - ybar)),
    ) / total;
    let slope = sxy / sxx;
    Ok(CalibrationFit {
        intercept: ybar - slope * xbar,
        slope,
        degenerate: false,
    })
}

/// R², L² and their product from weighted outcome/prediction pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct R2Decomposition {
    pub r2: f64,
    pub l2: f64,
    pub pseudo_r2: f64,
    pub fit: CalibrationFit,
}

/// The weighted variance and prediction-error decompositions shared by both
/// variants. `w` must sum to one.
pub fn weighted_r2(outcome: &[f64], predicted: &[f64], w: &[f64]) -> Result<R2Decomposition> {
    let fit = weighted_linear_fit(predicted, outcome, w)?;
    let ybar = csum(outcome.iter().zip(w).map(|(y, wi)| y * wi));

    let mut first = None;
    let mut constant = true;
    let mut ymax = 0.0f64;
    for (&y, &wi) in outcome.iter().zip(w) {
        if wi > 0.0 {
            ymax = ymax.max(y.abs());
            match first {
                None => first = Some(y),
                Some(f) if f != y => constant = false,
                _ => {}
            }
        }
    }
    let total_ss = csum(outcome.iter().zip(w).map(|(y, wi)| wi * (y - ybar).powi(2)));
    if constant || total_ss <= (1e-14 * ymax).powi(2) {
        return Err(Error::DegenerateOutcome);
    }

    let explained = csum(
        predicted
            .iter()
            .zip(w)
            .map(|(&m, wi)| wi * (fit.predict(m) - ybar).powi(2)),
    );
    let resid_cal = csum(
        outcome
            .iter()
            .zip(predicted)
            .zip(w)
            .map(|((&y, &m), wi)| wi * (y - fit.predict(m)).powi(2)),
    );
    let resid_raw = csum(
        outcome
            .iter()
            .zip(predicted)
            .zip(w)
            .map(|((&y, &m), wi)| wi * (y - m).powi(2)),
    );
    let second_moment = csum(outcome.iter().zip(w).map(|(y, wi)| wi * y * y));

    let r2 = (explained / total_ss).clamp(0.0, 1.0);
    let l2 = if resid_raw <= 1e-24 * second_moment.max(f64::MIN_POSITIVE) {
        1.0
    } else {
        (resid_cal / resid_raw).clamp(0.0, 1.0)
    };
    Ok(R2Decomposition {
        r2,
        l2,
        pseudo_r2: r2 * l2,
        fit,
    })
}

/// Outcome of a sample pseudo R² evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub tau: f64,
    pub cause: u32,
    pub variant: Variant,
    pub r2: f64,
    pub l2: f64,
    pub pseudo_r2: f64,
    pub calibration_intercept: f64,
    pub calibration_slope: f64,
    pub n_total: usize,
    pub n_uncensored: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub baselines: BTreeMap<String, f64>,
}

/// Working outcomes and predictions for index-aligned inputs.
pub fn working_pairs(
    times: &[f64],
    events: &[u32],
    curves: &[&StepFunction],
    tau: f64,
    cause: u32,
    variant: Variant,
) -> (Vec<f64>, Vec<f64>) {
    times
        .iter()
        .zip(events)
        .zip(curves)
        .map(|((&t, &e), curve)| match variant {
            Variant::Horizon => (working_time_raw(t, e, tau, cause).value, restricted_mean(curve, tau)),
            Variant::Point => (event_indicator_raw(t, e, tau, cause).value, curve.eval(tau)),
        })
        .unzip()
}

/// Full sample pipeline over index-aligned slices: censoring KM, IPCW
/// weights, working outcomes, calibration and the R²/L² decomposition.
pub fn pseudo_r2_from_parts(
    times: &[f64],
    events: &[u32],
    curves: &[&StepFunction],
    tau: f64,
    cause: u32,
    variant: Variant,
    policy: DegeneratePolicy,
) -> Result<MetricReport> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    if times.len() != curves.len() {
        return Err(Error::LengthMismatch(format!(
            "{} subjects vs {} curves",
            times.len(),
            curves.len()
        )));
    }
    let g = censoring_survival(times, events);
    let (w, _) = ipcw_from_parts(times, events, &g, policy)?;
    let (y, m) = working_pairs(times, events, curves, tau, cause, variant);
    let dec = weighted_r2(&y, &m, &w)?;
    Ok(MetricReport {
        tau,
        cause,
        variant,
        r2: dec.r2,
        l2: dec.l2,
        pseudo_r2: dec.pseudo_r2,
        calibration_intercept: dec.fit.intercept,
        calibration_slope: dec.fit.slope,
        n_total: times.len(),
        n_uncensored: events.iter().filter(|&&e| e != 0).count(),
        baselines: BTreeMap::new(),
    })
}

pub fn pseudo_r2(
    dataset: &Dataset,
    predictions: &PredictionSet,
    tau: f64,
    cause: u32,
    variant: Variant,
) -> Result<MetricReport> {
    let curves = predictions.align(dataset)?;
    pseudo_r2_from_parts(
        &dataset.times(),
        &dataset.events(),
        &curves,
        tau,
        cause,
        variant,
        DegeneratePolicy::Error,
    )
}

pub fn pseudo_r2_horizon(
    dataset: &Dataset,
    predictions: &PredictionSet,
    tau: f64,
    cause: u32,
) -> Result<MetricReport> {
    pseudo_r2(dataset, predictions, tau, cause, Variant::Horizon)
}

pub fn pseudo_r2_point(
    dataset: &Dataset,
    predictions: &PredictionSet,
    tau: f64,
    cause: u32,
) -> Result<MetricReport> {
    pseudo_r2(dataset, predictions, tau, cause, Variant::Point)
}
