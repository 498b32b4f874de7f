//! IPCW comparison metrics: Brier score, truncated cause-specific C-index and
//! cumulative/dynamic time-dependent AUC, plus quantile-grid averaging.

use crate::censoring::censoring_survival;
use crate::data::{Dataset, PredictionSet};
use crate::error::{Error, Result};
use crate::step::StepFunction;
use crate::sum::{csum, CompensatedSum};

pub const DEFAULT_GRID_COUNT: usize = 10;

/// Lower empirical quantile: the order statistic at `floor(q·(n−1))`.
pub fn lower_quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = (q * (sorted.len() - 1) as f64 + 1e-9).floor() as usize;
    sorted[pos.min(sorted.len() - 1)]
}

/// Lower empirical `q`-quantile of the uncensored observed times.
pub fn event_time_quantile(times: &[f64], events: &[u32], q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidParameter(format!("quantile must lie in (0, 1], got {q}")));
    }
    let mut ev: Vec<f64> = times
        .iter()
        .zip(events)
        .filter(|(_, &e)| e != 0)
        .map(|(&t, _)| t)
        .collect();
    if ev.is_empty() {
        return Err(Error::NoUsableEvents);
    }
    ev.sort_by(f64::total_cmp);
    Ok(lower_quantile(&ev, q))
}

/// Evaluation times at evenly spaced quantiles `k / (count + 1)`,
/// `k = 1..=count`, of the observed event times.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileGrid {
    pub count: usize,
    pub times: Vec<f64>,
}

impl QuantileGrid {
    pub fn from_event_times(times: &[f64], events: &[u32], count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("quantile grid needs count >= 1".into()));
        }
        let mut ev: Vec<f64> = times
            .iter()
            .zip(events)
            .filter(|(_, &e)| e != 0)
            .map(|(&t, _)| t)
            .collect();
        if ev.is_empty() {
            return Err(Error::NoUsableEvents);
        }
        ev.sort_by(f64::total_cmp);
        let times = (1..=count)
            .map(|k| lower_quantile(&ev, k as f64 / (count + 1) as f64))
            .collect();
        Ok(Self { count, times })
    }

    pub fn for_dataset(dataset: &Dataset, count: usize) -> Result<Self> {
        Self::from_event_times(&dataset.times(), &dataset.events(), count)
    }
}

/// Index-aligned data with its censoring survivor curve precomputed.
pub struct CensoredSample<'a> {
    times: &'a [f64],
    events: &'a [u32],
    g: StepFunction,
    g_left: Vec<f64>,
}

impl<'a> CensoredSample<'a> {
    pub fn new(times: &'a [f64], events: &'a [u32]) -> Result<Self> {
        if times.len() != events.len() {
            return Err(Error::LengthMismatch(format!(
                "{} times vs {} events",
                times.len(),
                events.len()
            )));
        }
        let g = censoring_survival(times, events);
        let g_left = times.iter().map(|&t| g.left_limit(t)).collect();
        Ok(Self {
            times,
            events,
            g,
            g_left,
        })
    }

    pub fn censoring(&self) -> &StepFunction {
        &self.g
    }

    /// IPCW Brier score at `t` for predicted probabilities `pred[i] = F*(t|X_i)`.
    ///
    /// Cause-of-interest events by `t` score `(1 − F*)²`, competing events by
    /// `t` score `F*²`, both weighted `1/Ĝ(T−)`; subjects still at risk after
    /// `t` score `F*²` weighted `1/Ĝ(t)`. Censored-before-`t` subjects add 0.
    pub fn brier_at(&self, pred: &[f64], t: f64, cause: u32) -> Result<f64> {
        let g_t = self.g.eval(t);
        if !(g_t > 0.0) {
            return Err(Error::NoCensoringSupport(t));
        }
        let mut acc = CompensatedSum::new();
        for i in 0..self.times.len() {
            let (ti, ei, p) = (self.times[i], self.events[i], pred[i]);
            if ti <= t {
                if ei == 0 {
                    continue;
                }
                let gl = self.g_left[i];
                if !(gl > 0.0) {
                    continue;
                }
                let resid = if ei == cause { 1.0 - p } else { p };
                acc.add(resid * resid / gl);
            } else {
                acc.add(p * p / g_t);
            }
        }
        Ok(acc.value() / self.times.len() as f64)
    }

    /// Cumulative-case / dynamic-control AUC at `t`. Ties count one half.
    pub fn auc_at(&self, pred: &[f64], t: f64, cause: u32) -> Result<f64> {
        let mut controls: Vec<f64> = Vec::new();
        let mut cases: Vec<(f64, f64)> = Vec::new();
        for i in 0..self.times.len() {
            if self.times[i] > t {
                controls.push(pred[i]);
            } else if self.events[i] == cause && self.g_left[i] > 0.0 {
                cases.push((pred[i], 1.0 / self.g_left[i]));
            }
        }
        if controls.is_empty() || cases.is_empty() {
            return Err(Error::NoCasesOrControls(t));
        }
        // Controls share the weight 1/Ĝ(t), which cancels.
        controls.sort_by(f64::total_cmp);
        let n_ctrl = controls.len() as f64;
        let mut num = CompensatedSum::new();
        let mut den = CompensatedSum::new();
        for (s, w) in cases {
            let below = controls.partition_point(|&c| c < s);
            let not_above = controls.partition_point(|&c| c <= s);
            let score = below as f64 + 0.5 * (not_above - below) as f64;
            num.add(w * score);
            den.add(w * n_ctrl);
        }
        Ok(num.value() / den.value())
    }

    /// Truncated cause-specific concordance.
    ///
    /// Comparable pairs are `(i, j)` with `event_i = cause`, `T_i < T_j` and
    /// `T_i < τ`, weighted `Ĝ(T_i−)⁻²`; concordant when `score_i > score_j`,
    /// ties in score count one half.
    pub fn cindex(&self, scores: &[f64], tau: f64, cause: u32) -> Result<f64> {
        let n = self.times.len();
        if scores.len() != n {
            return Err(Error::LengthMismatch(format!("{} scores vs {n} subjects", scores.len())));
        }
        // Rank scores for the Fenwick tree.
        let mut sorted_scores = scores.to_vec();
        sorted_scores.sort_by(f64::total_cmp);
        sorted_scores.dedup();
        let rank = |s: f64| sorted_scores.partition_point(|&v| v < s);

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| self.times[b].total_cmp(&self.times[a]));

        let mut tree = Fenwick::new(sorted_scores.len());
        let mut inserted = 0usize;
        let mut num = CompensatedSum::new();
        let mut den = CompensatedSum::new();
        let mut k = 0;
        while k < n {
            let t = self.times[order[k]];
            let mut end = k;
            while end < n && self.times[order[end]] == t {
                end += 1;
            }
            // Tree holds exactly the subjects with T > t.
            for &i in &order[k..end] {
                if self.events[i] != cause || !(t < tau) || inserted == 0 {
                    continue;
                }
                let gl = self.g_left[i];
                if !(gl > 0.0) {
                    continue;
                }
                let w = 1.0 / (gl * gl);
                let r = rank(scores[i]);
                let less = tree.prefix(r);
                let equal = tree.prefix(r + 1) - less;
                num.add(w * (less as f64 + 0.5 * equal as f64));
                den.add(w * inserted as f64);
            }
            for &i in &order[k..end] {
                tree.add(rank(scores[i]));
                inserted += 1;
            }
            k = end;
        }
        let den = den.value();
        if !(den > 0.0) {
            return Err(Error::NoComparablePairs);
        }
        Ok(num.value() / den)
    }
}

struct Fenwick {
    counts: Vec<usize>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Self { counts: vec![0; n + 1] }
    }

    fn add(&mut self, idx: usize) {
        let mut i = idx + 1;
        while i < self.counts.len() {
            self.counts[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Count of inserted ranks `< idx`.
    fn prefix(&self, idx: usize) -> usize {
        let mut i = idx;
        let mut s = 0;
        while i > 0 {
            s += self.counts[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

fn predictions_at(curves: &[&StepFunction], t: f64) -> Vec<f64> {
    curves.iter().map(|c| c.eval(t)).collect()
}

pub fn brier_score_at(dataset: &Dataset, predictions: &PredictionSet, t: f64, cause: u32) -> Result<f64> {
    check_time(t)?;
    let curves = predictions.align(dataset)?;
    let (times, events) = (dataset.times(), dataset.events());
    CensoredSample::new(&times, &events)?.brier_at(&predictions_at(&curves, t), t, cause)
}

pub fn brier_average(
    dataset: &Dataset,
    predictions: &PredictionSet,
    grid: &QuantileGrid,
    cause: u32,
) -> Result<f64> {
    let curves = predictions.align(dataset)?;
    let (times, events) = (dataset.times(), dataset.events());
    let sample = CensoredSample::new(&times, &events)?;
    grid_mean(grid, |t| sample.brier_at(&predictions_at(&curves, t), t, cause))
}

pub fn cindex_competing(dataset: &Dataset, risk_scores: &[f64], tau: f64, cause: u32) -> Result<f64> {
    check_time(tau)?;
    let (times, events) = (dataset.times(), dataset.events());
    CensoredSample::new(&times, &events)?.cindex(risk_scores, tau, cause)
}

/// C-index with `F*(τ|X)` as the risk score.
pub fn cindex_from_predictions(
    dataset: &Dataset,
    predictions: &PredictionSet,
    tau: f64,
    cause: u32,
) -> Result<f64> {
    let curves = predictions.align(dataset)?;
    cindex_competing(dataset, &predictions_at(&curves, tau), tau, cause)
}

pub fn auc_timedep_at(dataset: &Dataset, predictions: &PredictionSet, t: f64, cause: u32) -> Result<f64> {
    check_time(t)?;
    let curves = predictions.align(dataset)?;
    let (times, events) = (dataset.times(), dataset.events());
    CensoredSample::new(&times, &events)?.auc_at(&predictions_at(&curves, t), t, cause)
}

pub fn auc_average(
    dataset: &Dataset,
    predictions: &PredictionSet,
    grid: &QuantileGrid,
    cause: u32,
) -> Result<f64> {
    let curves = predictions.align(dataset)?;
    let (times, events) = (dataset.times(), dataset.events());
    let sample = CensoredSample::new(&times, &events)?;
    grid_mean(grid, |t| sample.auc_at(&predictions_at(&curves, t), t, cause))
}

/// Brier, AUC (both grid-averaged) and C-index for index-aligned inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineValues {
    pub brier: f64,
    pub auc: f64,
    pub cindex: f64,
}

pub fn baselines_from_parts(
    times: &[f64],
    events: &[u32],
    curves: &[&StepFunction],
    tau: f64,
    cause: u32,
    grid_count: usize,
) -> Result<BaselineValues> {
    let sample = CensoredSample::new(times, events)?;
    let grid = QuantileGrid::from_event_times(times, events, grid_count)?;
    let brier = grid_mean(&grid, |t| sample.brier_at(&predictions_at(curves, t), t, cause))?;
    let auc = grid_mean(&grid, |t| sample.auc_at(&predictions_at(curves, t), t, cause))?;
    let cindex = sample.cindex(&predictions_at(curves, tau), tau, cause)?;
    Ok(BaselineValues { brier, auc, cindex })
}

fn grid_mean(grid: &QuantileGrid, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    if grid.times.is_empty() {
        return Err(Error::InvalidParameter("empty evaluation grid".into()));
    }
    let vals = grid.times.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
    Ok(csum(vals.iter().copied()) / vals.len() as f64)
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("evaluation time must be positive, got {t}")))
    }
}
