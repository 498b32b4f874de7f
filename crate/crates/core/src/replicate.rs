//! Simulation-study drivers producing long-format result rows.
//!
//! Replicate 0 carries scenario-level quantities (solved `λ₂`, `τ`,
//! benchmark); replicates `1..=reps` carry per-sample metrics.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::LongRow;
use crate::population::{
    baselines_simulated, evaluate_simulated, nonparametric_r2_benchmark, provider_curves, test_sample,
    PopulationEstimate,
};
use crate::pseudo_r2::Variant;
use crate::rng::{derive_seed, DOMAIN_CENSORING};
use crate::simulator::{
    attach_censoring, cif_provider, quantile_time_grid, solve_lambda2, ModelCifProvider, ProviderVariant,
    SimScenario, SimulatedData,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Fig1,
    Fig2,
    Fig5,
    Supp,
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(Self::Fig1),
            "fig2" => Ok(Self::Fig2),
            "fig5" => Ok(Self::Fig5),
            "supp" => Ok(Self::Supp),
            _ => Err(Error::InvalidParameter(format!(
                "unknown experiment '{s}' (expected fig1, fig2, fig5 or supp)"
            ))),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Fig1 => "fig1",
            Self::Fig2 => "fig2",
            Self::Fig5 => "fig5",
            Self::Supp => "supp",
        })
    }
}

pub const BETA_GRID: [f64; 4] = [0.5, 0.75, 1.0, 1.5];
pub const P_GRID: [f64; 11] = [0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.7, 0.9, 0.95, 0.99];
pub const V_GRID: [f64; 6] = [0.5, 0.75, 1.0, 3.0, 5.0, 10.0];
pub const CENSOR_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 0.9];
pub const N_GRID: [usize; 3] = [100, 500, 3000];
pub const FIG5_P_GRID: [f64; 2] = [0.3, 0.7];
pub const FIG5_TAU_GRID: [f64; 2] = [0.5, 0.9];
/// Fixed error scale of the misspecified log-linear provider.
pub const DISTORTED_SIGMA: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateConfig {
    pub reps: usize,
    pub seed: u64,
    /// Size of each uncensored population test sample.
    pub n_test: usize,
    /// Time points of the Brier / AUC quantile grid.
    pub grid_count: usize,
    /// Monte Carlo size of the benchmark; 0 skips it.
    pub benchmark_mc: usize,
    /// Uncensored samples averaged for the sample-study population value.
    pub population_reps: usize,
    pub lambda2_mc: usize,
    pub lambda2_tol: f64,
    /// Knots of the predicted curves.
    pub curve_points: usize,
}

impl Default for ReplicateConfig {
    fn default() -> Self {
        Self {
            reps: 100,
            seed: 1,
            n_test: 5000,
            grid_count: crate::baselines::DEFAULT_GRID_COUNT,
            benchmark_mc: 200_000,
            population_reps: 5,
            lambda2_mc: 100_000,
            lambda2_tol: 1e-4,
            curve_points: 500,
        }
    }
}

/// A scenario with `λ₂` solved, its `τ` and the true-model provider.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    pub key: String,
    pub scenario: SimScenario,
    pub tau: f64,
    pub achieved_p: Option<f64>,
    pub grid: Vec<f64>,
}

impl PreparedScenario {
    pub fn provider(&self, variant: &ProviderVariant) -> Result<ModelCifProvider> {
        cif_provider(&self.scenario, variant, self.grid.clone())
    }

    fn header_rows(&self) -> Vec<LongRow> {
        let mut rows = vec![
            LongRow::new(&self.key, 0, "lambda2", self.scenario.lambda2.unwrap_or(f64::NAN)),
            LongRow::new(&self.key, 0, "tau", self.tau),
        ];
        if let Some(p) = self.achieved_p {
            rows.push(LongRow::new(&self.key, 0, "p_achieved", p));
        }
        rows
    }
}

/// Solves `λ₂`, builds the curve grid and resolves `τ` as the `tau_q`
/// quantile of event times in an uncensored reference sample of `n_test`.
pub fn prepare(key: impl Into<String>, scenario: &SimScenario, tau_q: f64, cfg: &ReplicateConfig) -> Result<PreparedScenario> {
    let key = key.into();
    let mut sc = scenario.clone();
    let mut achieved_p = None;
    if sc.lambda2.is_none() {
        let sol = solve_lambda2(&sc, cfg.lambda2_mc, cfg.lambda2_tol)?;
        sc.lambda2 = Some(sol.lambda2);
        sc.p_target = None;
        achieved_p = Some(sol.achieved);
    }
    sc.validate()?;
    let model = sc.model()?;
    let ref_seed = derive_seed(sc.seed, 0x7265_6665);
    let grid = quantile_time_grid(&model, sc.covariate_dim, cfg.curve_points, cfg.n_test.max(1000), ref_seed)?;
    let reference = test_sample(&sc, cfg.n_test, ref_seed, 1)?;
    let tau = crate::baselines::event_time_quantile(&reference.event_time, &reference.cause, tau_q)?;
    Ok(PreparedScenario {
        key,
        scenario: sc,
        tau,
        achieved_p,
        grid,
    })
}

/// Per-replicate metrics of each provider on shared uncensored test samples.
/// Row keys are `{key}` for a single provider and `{key}/{name}` otherwise.
/// A replicate whose metrics cannot be computed yields a `failed` (or
/// `baselines_failed`) row instead of values.
pub fn population_rows(
    prep: &PreparedScenario,
    providers: &[(&str, ModelCifProvider)],
    variant: Variant,
    with_baselines: bool,
    cfg: &ReplicateConfig,
) -> Result<Vec<LongRow>> {
    let key_of = |name: &str| {
        if providers.len() == 1 {
            prep.key.clone()
        } else {
            format!("{}/{}", prep.key, name)
        }
    };
    let mut rows = Vec::new();
    for (name, _) in providers {
        let mut head = prep.header_rows();
        for r in &mut head {
            r.scenario_key = key_of(name);
        }
        rows.extend(head);
    }
    if cfg.benchmark_mc > 0 {
        let bench = nonparametric_r2_benchmark(&prep.scenario, prep.tau, variant, cfg.benchmark_mc, derive_seed(cfg.seed, 0x626e))?;
        for (name, _) in providers {
            rows.push(LongRow::new(key_of(name), 0, "rho2_np", bench));
        }
    }
    let per_rep: Vec<Vec<LongRow>> = (1..=cfg.reps)
        .into_par_iter()
        .map(|r| -> Result<Vec<LongRow>> {
            let data = test_sample(&prep.scenario, cfg.n_test, cfg.seed, r)?;
            let mut out = Vec::new();
            for (name, provider) in providers {
                let key = key_of(name);
                let curves = provider_curves(&data, provider);
                match evaluate_simulated(&data, &curves, prep.tau, 1, variant) {
                    Ok(rep) => {
                        out.push(LongRow::new(&key, r, "pseudo_r2", rep.pseudo_r2));
                        out.push(LongRow::new(&key, r, "r2", rep.r2));
                        out.push(LongRow::new(&key, r, "l2", rep.l2));
                    }
                    Err(_) => out.push(LongRow::new(&key, r, "failed", 1.0)),
                }
                if with_baselines {
                    match baselines_simulated(&data, &curves, prep.tau, 1, cfg.grid_count) {
                        Ok(b) => {
                            out.push(LongRow::new(&key, r, "brier", b.brier));
                            out.push(LongRow::new(&key, r, "auc", b.auc));
                            out.push(LongRow::new(&key, r, "cindex", b.cindex));
                        }
                        Err(_) => out.push(LongRow::new(&key, r, "baselines_failed", 1.0)),
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    rows.extend(per_rep.into_iter().flatten());
    Ok(rows)
}

/// One-at-a-time sweeps of `β₁`, `p` and `v` around `base`.
pub fn sweep_scenarios(prefix: &str, base: &SimScenario) -> Vec<(String, SimScenario)> {
    let mut out = Vec::new();
    for b in BETA_GRID {
        out.push((format!("{prefix}/beta1={b}"), base.clone().with_beta_scale(b)));
    }
    for p in P_GRID {
        out.push((
            format!("{prefix}/p={p}"),
            SimScenario {
                p_target: Some(p),
                lambda2: None,
                ..base.clone()
            },
        ));
    }
    for v in V_GRID {
        out.push((format!("{prefix}/v={v}"), SimScenario { v, ..base.clone() }));
    }
    out
}

fn sweep(prefix: &str, variant: Variant, tau_q: f64, cfg: &ReplicateConfig) -> Result<Vec<LongRow>> {
    let base = SimScenario {
        seed: cfg.seed,
        ..SimScenario::default()
    };
    let mut rows = Vec::new();
    for (key, sc) in sweep_scenarios(prefix, &base) {
        let prep = prepare(key, &sc, tau_q, cfg)?;
        let full = prep.provider(&ProviderVariant::Full)?;
        rows.extend(population_rows(&prep, &[("full", full)], variant, true, cfg)?);
    }
    Ok(rows)
}

/// Full, one-covariate, fixed-scale and fixed-scale one-covariate providers.
pub fn model_menu(prep: &PreparedScenario) -> Result<Vec<(&'static str, ModelCifProvider)>> {
    let distorted = prep.scenario.model()?.with_fixed_scale(DISTORTED_SIGMA)?;
    let distorted_reduced = distorted.reduced(&[1])?;
    Ok(vec![
        ("full", prep.provider(&ProviderVariant::Full)?),
        ("reduced", prep.provider(&ProviderVariant::Reduced(vec![1]))?),
        ("sigma5", prep.provider(&ProviderVariant::Distorted(distorted))?),
        ("sigma5-reduced", prep.provider(&ProviderVariant::Distorted(distorted_reduced))?),
    ])
}

fn fig2(cfg: &ReplicateConfig) -> Result<Vec<LongRow>> {
    let base = SimScenario {
        seed: cfg.seed,
        ..SimScenario::default()
    };
    let prep = prepare("fig2", &base, 1.0, cfg)?;
    let menu = model_menu(&prep)?;
    population_rows(&prep, &menu, Variant::Horizon, true, cfg)
}

/// Population value of the sample study: mean sample pseudo R² of the true
/// model over `population_reps` uncensored samples of size `n_test`.
pub fn population_value(prep: &PreparedScenario, variant: Variant, cfg: &ReplicateConfig) -> Result<PopulationEstimate> {
    let provider = prep.provider(&ProviderVariant::Full)?;
    let seed = derive_seed(cfg.seed, 0x0070_6f70);
    let values = (0..cfg.population_reps.max(1))
        .into_par_iter()
        .map(|r| {
            let data = test_sample(&prep.scenario, cfg.n_test, seed, r)?;
            let curves = provider_curves(&data, &provider);
            Ok(evaluate_simulated(&data, &curves, prep.tau, 1, variant)?.pseudo_r2)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(PopulationEstimate::from_values(values))
}

/// Censored sample `rep` of size `n` at rate `censor_rate`.
pub fn censored_sample(prep: &PreparedScenario, n: usize, censor_rate: f64, seed: u64, rep: usize) -> Result<SimulatedData> {
    let data = test_sample(&prep.scenario, n, seed, rep)?;
    let (data, _) = attach_censoring(&data, censor_rate, derive_seed(derive_seed(seed, rep as u64), DOMAIN_CENSORING))?;
    Ok(data)
}

/// Estimation errors of the sample pseudo R² for every `(n, censoring)`
/// pair under one prepared scenario. Failed replicates yield a `failed` row.
pub fn sample_study_rows(
    prep: &PreparedScenario,
    ns: &[usize],
    censor_rates: &[f64],
    cfg: &ReplicateConfig,
) -> Result<Vec<LongRow>> {
    let pop = population_value(prep, Variant::Horizon, cfg)?;
    let provider = prep.provider(&ProviderVariant::Full)?;
    let mut rows = Vec::new();
    for &n in ns {
        for &c in censor_rates {
            let key = format!("{}/n={n}/censor={c}", prep.key);
            rows.extend(prep.header_rows().into_iter().map(|mut r| {
                r.scenario_key = key.clone();
                r
            }));
            rows.push(LongRow::new(&key, 0, "population", pop.mean));
            let seed = derive_seed(cfg.seed, (n as u64) << 8 | (c * 100.0).round() as u64);
            let per_rep: Vec<Vec<LongRow>> = (1..=cfg.reps)
                .into_par_iter()
                .map(|r| {
                    let outcome = censored_sample(prep, n, c, seed, r).and_then(|data| {
                        let curves = provider_curves(&data, &provider);
                        evaluate_simulated(&data, &curves, prep.tau, 1, Variant::Horizon)
                            .map(|rep| (rep, data.censored_fraction()))
                    });
                    match outcome {
                        Ok((rep, cf)) => vec![
                            LongRow::new(&key, r, "pseudo_r2", rep.pseudo_r2),
                            LongRow::new(&key, r, "error", rep.pseudo_r2 - pop.mean),
                            LongRow::new(&key, r, "censored_fraction", cf),
                        ],
                        Err(_) => vec![LongRow::new(&key, r, "failed", 1.0)],
                    }
                })
                .collect();
            rows.extend(per_rep.into_iter().flatten());
        }
    }
    Ok(rows)
}

fn fig5(cfg: &ReplicateConfig) -> Result<Vec<LongRow>> {
    let mut rows = Vec::new();
    for p in FIG5_P_GRID {
        for q in FIG5_TAU_GRID {
            let sc = SimScenario {
                p_target: Some(p),
                lambda2: None,
                seed: cfg.seed,
                ..SimScenario::default()
            };
            let prep = prepare(format!("fig5/p={p}/tau_q={q}"), &sc, q, cfg)?;
            rows.extend(sample_study_rows(&prep, &N_GRID, &CENSOR_GRID, cfg)?);
        }
    }
    Ok(rows)
}

pub fn run_experiment(experiment: Experiment, cfg: &ReplicateConfig) -> Result<Vec<LongRow>> {
    if cfg.reps == 0 || cfg.n_test < 100 {
        return Err(Error::InvalidParameter("reps must be >= 1 and n_test >= 100".into()));
    }
    match experiment {
        Experiment::Fig1 => sweep("fig1", Variant::Horizon, 1.0, cfg),
        Experiment::Fig2 => fig2(cfg),
        Experiment::Fig5 => fig5(cfg),
        Experiment::Supp => sweep("supp", Variant::Point, 0.5, cfg),
    }
}

/// Mean of `metric` over replicates `>= 1` of `key`.
pub fn replicate_mean(rows: &[LongRow], key: &str, metric: &str) -> Option<f64> {
    let v: Vec<f64> = rows
        .iter()
        .filter(|r| r.replicate >= 1 && r.scenario_key == key && r.metric == metric)
        .map(|r| r.value)
        .collect();
    (!v.is_empty()).then(|| crate::sum::csum(v.iter().copied()) / v.len() as f64)
}
