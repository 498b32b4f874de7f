//! Competing-risks records, validated datasets and prediction sets.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::step::{Monotone, StepFunction};

/// One subject: observed time `T = min(Y, C)`, event code `Δ = D·δ` and
/// optional covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetingRisksRecord {
    pub id: String,
    pub time: f64,
    /// 0 = censored, k >= 1 = cause k.
    pub event: u32,
    pub covariates: Option<Vec<f64>>,
}

impl CompetingRisksRecord {
    pub fn new(id: impl Into<String>, time: f64, event: u32) -> Self {
        Self {
            id: id.into(),
            time,
            event,
            covariates: None,
        }
    }

    pub fn with_covariates(mut self, x: Vec<f64>) -> Self {
        self.covariates = Some(x);
        self
    }

    /// `δ`: true for an observed event of any cause.
    pub fn is_uncensored(&self) -> bool {
        self.event != 0
    }
}

/// Time order with events before censorings at tied times.
pub fn survival_order(t_a: f64, e_a: u32, t_b: f64, e_b: u32) -> Ordering {
    t_a.total_cmp(&t_b)
        .then_with(|| (e_a == 0).cmp(&(e_b == 0)))
}

/// Sorts records stably by time, events before censorings at ties.
pub fn sort_records(records: &mut [CompetingRisksRecord]) {
    records.sort_by(|a, b| survival_order(a.time, a.event, b.time, b.event));
}

/// A validated, time-sorted collection of records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<CompetingRisksRecord>,
    causes: u32,
    covariate_dim: Option<usize>,
}

/// Checks every record and returns the sorted dataset.
pub fn validate_dataset(mut records: Vec<CompetingRisksRecord>, causes: u32) -> Result<Dataset> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if causes == 0 {
        return Err(Error::InvalidParameter("cause count must be >= 1".into()));
    }
    let covariate_dim = records[0].covariates.as_ref().map(Vec::len);
    let mut seen = HashSet::with_capacity(records.len());
    for r in &records {
        if !(r.time > 0.0) || !r.time.is_finite() {
            return Err(Error::NonpositiveTime {
                id: r.id.clone(),
                time: r.time,
            });
        }
        if r.event > causes {
            return Err(Error::EventOutOfRange {
                id: r.id.clone(),
                event: r.event,
                causes,
            });
        }
        let dim = r.covariates.as_ref().map(Vec::len);
        if dim != covariate_dim {
            return Err(Error::RaggedCovariates {
                id: r.id.clone(),
                expected: covariate_dim.unwrap_or(0),
                found: dim.unwrap_or(0),
            });
        }
        if !seen.insert(r.id.as_str()) {
            return Err(Error::DuplicateId(r.id.clone()));
        }
    }
    sort_records(&mut records);
    Ok(Dataset {
        records,
        causes,
        covariate_dim,
    })
}

impl Dataset {
    pub fn new(records: Vec<CompetingRisksRecord>, causes: u32) -> Result<Self> {
        validate_dataset(records, causes)
    }

    pub fn records(&self) -> &[CompetingRisksRecord] {
        &self.records
    }

    pub fn causes(&self) -> u32 {
        self.causes
    }

    pub fn covariate_dim(&self) -> Option<usize> {
        self.covariate_dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.time).collect()
    }

    pub fn events(&self) -> Vec<u32> {
        self.records.iter().map(|r| r.event).collect()
    }

    pub fn n_uncensored(&self) -> usize {
        self.records.iter().filter(|r| r.is_uncensored()).count()
    }

    pub fn censored_fraction(&self) -> f64 {
        1.0 - self.n_uncensored() as f64 / self.len() as f64
    }

    /// Observed times of uncensored records (any cause), ascending.
    pub fn event_times(&self) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.is_uncensored())
            .map(|r| r.time)
            .collect()
    }
}

/// Predicted CIF curves for one cause, keyed by subject id.
#[derive(Debug, Clone, Default)]
pub struct PredictionSet {
    pub cause: u32,
    curves: HashMap<String, StepFunction>,
}

impl PredictionSet {
    pub fn new(cause: u32) -> Self {
        Self {
            cause,
            curves: HashMap::new(),
        }
    }

    /// Inserts a curve; it must be a CIF (anchor 0, nondecreasing, in [0, 1]).
    pub fn insert(&mut self, id: impl Into<String>, curve: StepFunction) -> Result<()> {
        let id = id.into();
        if curve.shape() != Monotone::NonDecreasing || curve.anchor() != 0.0 {
            return Err(Error::InvalidStepFunction(format!(
                "prediction for {id} is not a CIF curve"
            )));
        }
        self.curves.insert(id, curve);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&StepFunction> {
        self.curves.get(id)
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &StepFunction)> {
        self.curves.iter()
    }

    /// Curves in dataset record order; fails on the first uncovered subject.
    pub fn align<'a>(&'a self, dataset: &Dataset) -> Result<Vec<&'a StepFunction>> {
        dataset
            .records()
            .iter()
            .map(|r| {
                self.curves
                    .get(&r.id)
                    .ok_or_else(|| Error::MissingPrediction(r.id.clone()))
            })
            .collect()
    }

    /// Applies `g` to every curve value, e.g. a monotone transform.
    pub fn map_values(&self, g: impl Fn(f64) -> f64 + Copy) -> Result<Self> {
        let mut out = PredictionSet::new(self.cause);
        for (id, c) in &self.curves {
            out.insert(id.clone(), c.map_values(g)?)?;
        }
        Ok(out)
    }
}
