//! Kaplan–Meier estimate of the censoring survivor function and IPCW weights.

use crate::data::{survival_order, Dataset};
use crate::error::{Error, Result};
use crate::step::StepFunction;
use crate::sum::csum;

/// What to do with an uncensored subject whose `Ĝ(T−)` is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegeneratePolicy {
    #[default]
    Error,
    Drop,
}

/// Normalized inverse-probability-of-censoring weights.
#[derive(Debug, Clone, PartialEq)]
pub struct IpcwWeights {
    pub weights: Vec<f64>,
    pub uncensored: Vec<bool>,
    /// Ids of uncensored subjects excluded because `Ĝ(T−) = 0`.
    pub dropped: Vec<String>,
}

/// Reverse product-limit estimate of `G(c) = P(C > c)`.
///
/// Censorings (`event == 0`) are the events of this estimator. At tied times
/// the observed events leave the risk set before censorings are counted.
pub fn censoring_survival(times: &[f64], events: &[u32]) -> StepFunction {
    let n = times.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| survival_order(times[a], events[a], times[b], events[b]));

    let mut grid = Vec::new();
    let mut values = Vec::new();
    let mut at_risk = n;
    let mut surv = 1.0;
    let mut i = 0;
    while i < n {
        let t = times[order[i]];
        let mut cens = 0usize;
        let mut evts = 0usize;
        while i < n && times[order[i]] == t {
            if events[order[i]] == 0 {
                cens += 1;
            } else {
                evts += 1;
            }
            i += 1;
        }
        if cens > 0 {
            let risk = at_risk - evts;
            surv *= 1.0 - cens as f64 / risk as f64;
            grid.push(t);
            values.push(surv);
        }
        at_risk -= cens + evts;
    }
    StepFunction::survival(grid, values).expect("product-limit curve is a valid survivor function")
}

pub fn km_censoring_survival(dataset: &Dataset) -> StepFunction {
    censoring_survival(&dataset.times(), &dataset.events())
}

/// Normalized weights `δ_i / Ĝ(T_i−)` over index-aligned slices.
///
/// Returns the weights and the indices dropped under [`DegeneratePolicy::Drop`].
pub fn ipcw_from_parts(
    times: &[f64],
    events: &[u32],
    g: &StepFunction,
    policy: DegeneratePolicy,
) -> Result<(Vec<f64>, Vec<usize>)> {
    ipcw_core(times, events, g, policy, |i| format!("#{i}"))
}

fn ipcw_core(
    times: &[f64],
    events: &[u32],
    g: &StepFunction,
    policy: DegeneratePolicy,
    label: impl Fn(usize) -> String,
) -> Result<(Vec<f64>, Vec<usize>)> {
    if times.len() != events.len() {
        return Err(Error::LengthMismatch(format!(
            "{} times vs {} events",
            times.len(),
            events.len()
        )));
    }
    let mut dropped = Vec::new();
    let mut raw = Vec::with_capacity(times.len());
    for (i, (&t, &e)) in times.iter().zip(events).enumerate() {
        if e == 0 {
            raw.push(0.0);
            continue;
        }
        let g_left = g.left_limit(t);
        if g_left > 0.0 {
            raw.push(1.0 / g_left);
        } else {
            match policy {
                DegeneratePolicy::Error => return Err(Error::ZeroCensoringSurvival(label(i))),
                DegeneratePolicy::Drop => {
                    dropped.push(i);
                    raw.push(0.0);
                }
            }
        }
    }
    let total = csum(raw.iter().copied());
    if !(total > 0.0) {
        return Err(Error::NoUsableEvents);
    }
    Ok((raw.into_iter().map(|w| w / total).collect(), dropped))
}

/// IPCW weights for a dataset, in record order.
pub fn ipcw_weights(dataset: &Dataset, g: &StepFunction, policy: DegeneratePolicy) -> Result<IpcwWeights> {
    let records = dataset.records();
    let (weights, dropped) = ipcw_core(&dataset.times(), &dataset.events(), g, policy, |i| {
        records[i].id.clone()
    })?;
    Ok(IpcwWeights {
        weights,
        uncensored: records.iter().map(|r| r.is_uncensored()).collect(),
        dropped: dropped.into_iter().map(|i| records[i].id.clone()).collect(),
    })
}
