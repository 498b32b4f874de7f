//! Percentile bootstrap intervals for the sample pseudo R².

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::censoring::DegeneratePolicy;
use crate::data::{Dataset, PredictionSet};
use crate::error::{Error, Result};
use crate::pseudo_r2::{pseudo_r2_from_parts, Variant};
use crate::rng::{derive_seed, substream, DOMAIN_BOOTSTRAP};
use crate::step::StepFunction;

pub const MIN_RESAMPLES: usize = 100;
/// Largest tolerated fraction of failed resamples.
pub const MAX_FAILURE_RATE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInterval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub resamples: usize,
    pub failures: usize,
}

/// Linear interpolation between order statistics (`sorted` ascending).
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Subject indices of resample `b`.
pub fn resample_indices(n: usize, seed: u64, b: usize) -> Vec<usize> {
    let mut rng = substream(derive_seed(seed, b as u64), DOMAIN_BOOTSTRAP, 0, 0);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Resamples subjects with replacement and reruns the whole pipeline,
/// censoring estimate included, on each resample.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_from_parts(
    times: &[f64],
    events: &[u32],
    curves: &[&StepFunction],
    tau: f64,
    cause: u32,
    variant: Variant,
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapInterval> {
    if resamples < MIN_RESAMPLES {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_RESAMPLES} resamples required, got {resamples}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("level must lie in (0, 1), got {level}")));
    }
    let policy = DegeneratePolicy::Error;
    let estimate = pseudo_r2_from_parts(times, events, curves, tau, cause, variant, policy)?.pseudo_r2;
    let n = times.len();
    let stats: Vec<Option<f64>> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let idx = resample_indices(n, seed, b);
            let t: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
            let e: Vec<u32> = idx.iter().map(|&i| events[i]).collect();
            let c: Vec<&StepFunction> = idx.iter().map(|&i| curves[i]).collect();
            pseudo_r2_from_parts(&t, &e, &c, tau, cause, variant, policy)
                .ok()
                .map(|r| r.pseudo_r2)
        })
        .collect();
    let mut ok: Vec<f64> = stats.into_iter().flatten().collect();
    let failures = resamples - ok.len();
    if failures as f64 > MAX_FAILURE_RATE * resamples as f64 {
        return Err(Error::BootstrapFailures {
            failed: failures,
            total: resamples,
        });
    }
    ok.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Ok(BootstrapInterval {
        estimate,
        lower: percentile(&ok, alpha),
        upper: percentile(&ok, 1.0 - alpha),
        level,
        resamples,
        failures,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn bootstrap_ci(
    dataset: &Dataset,
    predictions: &PredictionSet,
    tau: f64,
    cause: u32,
    variant: Variant,
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapInterval> {
    let curves = predictions.align(dataset)?;
    bootstrap_from_parts(
        &dataset.times(),
        &dataset.events(),
        &curves,
        tau,
        cause,
        variant,
        resamples,
        level,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&x, 0.0), 1.0);
        assert_eq!(percentile(&x, 1.0), 5.0);
        assert_eq!(percentile(&x, 0.5), 3.0);
        assert!((percentile(&x, 0.1) - 1.4).abs() < 1e-15);
    }

    #[test]
    fn resample_indices_are_seeded() {
        assert_eq!(resample_indices(50, 3, 7), resample_indices(50, 3, 7));
        assert_ne!(resample_indices(50, 3, 7), resample_indices(50, 3, 8));
        assert!(resample_indices(50, 3, 7).iter().all(|&i| i < 50));
    }

    #[test]
    fn rejects_bad_configuration() {
        let c = StepFunction::cif(vec![1.0], vec![0.5]).unwrap();
        let curves = [&c, &c];
        let t = [1.0, 2.0];
        let e = [1, 2];
        assert!(bootstrap_from_parts(&t, &e, &curves, 1.5, 1, Variant::Point, 50, 0.95, 1).is_err());
        assert!(bootstrap_from_parts(&t, &e, &curves, 1.5, 1, Variant::Point, 200, 1.5, 1).is_err());
    }

    #[test]
    fn sparse_events_fail_resamples() {
        let grid = vec![1.0, 2.0, 3.0];
        let curves: Vec<StepFunction> = (0..10)
            .map(|i| StepFunction::cif(grid.clone(), vec![0.1, 0.2 + 0.01 * i as f64, 0.5]).unwrap())
            .collect();
        let refs: Vec<&StepFunction> = curves.iter().collect();
        let times: Vec<f64> = (1..=10).map(|i| i as f64 * 0.5).collect();
        let mut events = vec![0u32; 10];
        events[3] = 1;
        let one = bootstrap_from_parts(&times, &events, &refs, 3.0, 1, Variant::Horizon, 200, 0.95, 1);
        assert!(matches!(one, Err(Error::DegenerateOutcome)));
        // Two events: the estimate exists but most resamples miss one of them.
        events[1] = 2;
        let two = bootstrap_from_parts(&times, &events, &refs, 3.0, 1, Variant::Horizon, 200, 0.95, 1);
        assert!(matches!(two, Err(Error::BootstrapFailures { .. })), "{two:?}");
    }
}
