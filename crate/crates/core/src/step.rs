//! Right-continuous piecewise-constant functions of time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape constraint checked at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Monotone {
    Free,
    /// Cumulative incidence: nondecreasing, values in [0, 1].
    NonDecreasing,
    /// Survival curve: nonincreasing, values in [0, 1].
    NonIncreasing,
}

/// `f(t) = values[j]` for the largest `grid[j] <= t`, and `anchor` before the
/// first knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
    anchor: f64,
    shape: Monotone,
}

impl StepFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, anchor: f64, shape: Monotone) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidStepFunction(format!(
                "grid has {} points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if let Some(t) = grid.iter().find(|t| !t.is_finite() || **t <= 0.0) {
            return Err(Error::InvalidStepFunction(format!(
                "grid point {t} is not a positive finite time"
            )));
        }
        if let Some(w) = grid.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidStepFunction(format!(
                "grid not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        if !anchor.is_finite() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidStepFunction("non-finite value".into()));
        }
        if shape != Monotone::Free {
            let all = std::iter::once(anchor).chain(values.iter().copied());
            if all.clone().any(|v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidStepFunction(
                    "monotone curve value outside [0, 1]".into(),
                ));
            }
            let seq: Vec<f64> = all.collect();
            let ok = match shape {
                Monotone::NonDecreasing => seq.windows(2).all(|w| w[0] <= w[1]),
                Monotone::NonIncreasing => seq.windows(2).all(|w| w[0] >= w[1]),
                Monotone::Free => true,
            };
            if !ok {
                return Err(Error::InvalidStepFunction(format!(
                    "values violate {shape:?} constraint"
                )));
            }
        }
        Ok(Self {
            grid,
            values,
            anchor,
            shape,
        })
    }

    /// A predicted CIF: anchor 0, nondecreasing, in [0, 1].
    pub fn cif(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values, 0.0, Monotone::NonDecreasing)
    }

    /// A survivor curve: anchor 1, nonincreasing, in [0, 1].
    pub fn survival(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values, 1.0, Monotone::NonIncreasing)
    }

    pub fn constant(value: f64) -> Self {
        Self {
            grid: Vec::new(),
            values: Vec::new(),
            anchor: value,
            shape: Monotone::Free,
        }
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn shape(&self) -> Monotone {
        self.shape
    }

    /// Right-continuous evaluation.
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.grid.partition_point(|&g| g <= t);
        if k == 0 {
            self.anchor
        } else {
            self.values[k - 1]
        }
    }

    /// Left limit `f(t-)`.
    pub fn left_limit(&self, t: f64) -> f64 {
        let k = self.grid.partition_point(|&g| g < t);
        if k == 0 {
            self.anchor
        } else {
            self.values[k - 1]
        }
    }

    /// Exact `∫₀^tau g(f(u)) du` over the pieces of `f`.
    pub fn integrate_map(&self, tau: f64, g: impl Fn(f64) -> f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        let mut acc = crate::sum::CompensatedSum::new();
        let mut left = 0.0;
        let mut level = self.anchor;
        for (&t, &v) in self.grid.iter().zip(&self.values) {
            if t >= tau {
                break;
            }
            acc.add(g(level) * (t - left));
            left = t;
            level = v;
        }
        acc.add(g(level) * (tau - left));
        acc.value()
    }

    /// `∫₀^tau f(u) du`.
    pub fn integral(&self, tau: f64) -> f64 {
        self.integrate_map(tau, |v| v)
    }

    /// Applies `g` pointwise to the anchor and every value.
    pub fn map_values(&self, g: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.grid.clone(),
            self.values.iter().map(|&v| g(v)).collect(),
            g(self.anchor),
            self.shape,
        )
    }
}
