//! Time-dependent pseudo R² for predicted cumulative incidence functions
//! under right-censored competing risks, with IPCW Brier, C-index and AUC
//! baselines and a cause-specific Weibull simulator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bootstrap;
pub mod censoring;
pub mod data;
pub mod error;
pub mod io;
pub mod population;
pub mod pseudo_r2;
pub mod replicate;
pub mod rng;
pub mod simulator;
pub mod step;
pub mod sum;

pub use bootstrap::{bootstrap_ci, BootstrapInterval};
pub use censoring::{censoring_survival, ipcw_weights, km_censoring_survival, DegeneratePolicy, IpcwWeights};
pub use data::{validate_dataset, CompetingRisksRecord, Dataset, PredictionSet};
pub use error::{Error, Result};
pub use population::{nonparametric_r2_benchmark, population_pseudo_r2, PopulationEstimate};
pub use pseudo_r2::{pseudo_r2, pseudo_r2_horizon, pseudo_r2_point, MetricReport, Variant};
pub use simulator::{SimScenario, WeibullCauseModel};
pub use step::{Monotone, StepFunction};
