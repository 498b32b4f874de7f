//! Population-level quantities approximated on large simulated samples.

use rayon::prelude::*;

use crate::baselines::{baselines_from_parts, event_time_quantile, BaselineValues};
use crate::censoring::DegeneratePolicy;
use crate::error::{Error, Result};
use crate::pseudo_r2::{event_indicator_raw, pseudo_r2_from_parts, working_time_raw, MetricReport, Variant};
use crate::rng::derive_seed;
use crate::simulator::{
    generate_uncensored, CifProvider, SimScenario, SimulatedData, DEFAULT_LAMBDA2_MC, DEFAULT_LAMBDA2_TOL,
};
use crate::step::StepFunction;
use crate::sum::csum;

/// Mean and sample standard deviation over replicates, with the raw values.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationEstimate {
    pub mean: f64,
    pub sd: f64,
    pub values: Vec<f64>,
}

impl PopulationEstimate {
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = csum(values.iter().copied()) / n;
        let sd = if values.len() > 1 {
            (csum(values.iter().map(|v| (v - mean).powi(2))) / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, sd, values }
    }
}

/// `scenario` with `λ₂` solved at the default tolerance if it is unset.
pub fn resolved(scenario: &SimScenario) -> Result<SimScenario> {
    Ok(scenario.resolve_lambda2(DEFAULT_LAMBDA2_MC, DEFAULT_LAMBDA2_TOL)?.0)
}

/// Predicted curves for every simulated subject, in subject order.
pub fn provider_curves(data: &SimulatedData, provider: &dyn CifProvider) -> Vec<StepFunction> {
    data.covariates.par_iter().map(|x| provider.curve(x)).collect()
}

/// Sample pseudo R² of `provider` on simulated (possibly censored) data.
pub fn evaluate_simulated(
    data: &SimulatedData,
    curves: &[StepFunction],
    tau: f64,
    cause: u32,
    variant: Variant,
) -> Result<MetricReport> {
    let refs: Vec<&StepFunction> = curves.iter().collect();
    pseudo_r2_from_parts(
        &data.observed_times(),
        &data.observed_events(),
        &refs,
        tau,
        cause,
        variant,
        DegeneratePolicy::Error,
    )
}

pub fn baselines_simulated(
    data: &SimulatedData,
    curves: &[StepFunction],
    tau: f64,
    cause: u32,
    grid_count: usize,
) -> Result<BaselineValues> {
    let refs: Vec<&StepFunction> = curves.iter().collect();
    baselines_from_parts(&data.observed_times(), &data.observed_events(), &refs, tau, cause, grid_count)
}

/// Uncensored test sample `rep` of a population run.
pub fn test_sample(scenario: &SimScenario, n_test: usize, seed: u64, rep: usize) -> Result<SimulatedData> {
    let sc = SimScenario {
        n: n_test,
        seed: derive_seed(seed, rep as u64),
        censor_rate: 0.0,
        ..scenario.clone()
    };
    generate_uncensored(&sc)
}

/// Averages the sample pseudo R² over `reps` uncensored datasets of size
/// `n_test`. Replicate `r` uses seed `derive_seed(seed, r)`.
pub fn population_pseudo_r2(
    scenario: &SimScenario,
    provider: &dyn CifProvider,
    tau: f64,
    variant: Variant,
    n_test: usize,
    reps: usize,
    seed: u64,
) -> Result<PopulationEstimate> {
    if n_test < 2 || reps == 0 {
        return Err(Error::InvalidParameter("n_test must be >= 2 and reps >= 1".into()));
    }
    let sc = resolved(scenario)?;
    let values = (0..reps)
        .into_par_iter()
        .map(|r| {
            let data = test_sample(&sc, n_test, seed, r)?;
            let curves = provider_curves(&data, provider);
            Ok(evaluate_simulated(&data, &curves, tau, 1, variant)?.pseudo_r2)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(PopulationEstimate::from_values(values))
}

/// `τ` as the `q`-quantile of event times in an uncensored reference sample.
pub fn reference_tau(scenario: &SimScenario, q: f64, n_ref: usize, seed: u64) -> Result<f64> {
    let sc = resolved(scenario)?;
    let data = test_sample(&sc, n_ref, derive_seed(seed, u64::MAX), 0)?;
    event_time_quantile(&data.event_time, &data.cause, q)
}

/// `var(E[W | X]) / var(W)` by Monte Carlo over `n_mc` subjects, with
/// `E[W | X]` from the closed-form CIF. For the point variant `var(W)` is
/// the Bernoulli variance `p̄(1 − p̄)`.
pub fn nonparametric_r2_benchmark(
    scenario: &SimScenario,
    tau: f64,
    variant: Variant,
    n_mc: usize,
    seed: u64,
) -> Result<f64> {
    if !(tau > 0.0) || n_mc < 2 {
        return Err(Error::InvalidParameter("tau must be positive and n_mc >= 2".into()));
    }
    let sc = SimScenario {
        n: n_mc,
        seed,
        censor_rate: 0.0,
        ..resolved(scenario)?
    };
    let model = sc.model()?;
    let data = generate_uncensored(&sc)?;
    let (m, w): (Vec<f64>, Vec<f64>) = (0..n_mc)
        .into_par_iter()
        .map(|i| {
            let x = &data.covariates[i];
            let (t, d) = (data.event_time[i], data.cause[i]);
            match variant {
                Variant::Horizon => (model.restricted_mean(x, tau), working_time_raw(t, d, tau, 1).value),
                Variant::Point => (model.cif(1, tau, x), event_indicator_raw(t, d, tau, 1).value),
            }
        })
        .unzip();
    let var_m = variance(&m);
    let var_w = match variant {
        Variant::Horizon => variance(&w),
        Variant::Point => {
            let p = csum(m.iter().copied()) / n_mc as f64;
            p * (1.0 - p)
        }
    };
    if !(var_w > 0.0) {
        return Err(Error::DegenerateOutcome);
    }
    Ok(var_m / var_w)
}

fn variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = csum(x.iter().copied()) / n;
    csum(x.iter().map(|v| (v - mean).powi(2))) / n
}
