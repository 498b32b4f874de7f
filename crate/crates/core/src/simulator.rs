//! Competing-risks data from two cause-specific Weibull hazards.
//!
//! Cause `k` has hazard `h_k(t; x) = v λ_k^v t^{v−1} exp(xᵀβ_k)` and cumulative
//! hazard `H_k(t; x) = a_k(x) t^v` with `a_k(x) = λ_k^v exp(xᵀβ_k)`. Because
//! both causes share the shape `v`, the cumulative incidence has the closed
//! form `F_k(t; x) = a_k / (a₁ + a₂) · (1 − exp(−(a₁ + a₂) t^v))`.
//!
//! Latent times are drawn by inverse transform, the observed pair is the
//! earlier of the two, and censoring is log-normal with its location chosen
//! on the realized sample to hit a target censored fraction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_lr};

use crate::data::{CompetingRisksRecord, Dataset};
use crate::error::{Error, Result};
use crate::rng::{self, fill_normals, open_unit, substream};
use crate::step::StepFunction;
use crate::sum::csum;

/// Generator parameters; keys of the scenario file mirror these fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimScenario {
    pub lambda1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    pub v: f64,
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_target: Option<f64>,
    #[serde(default)]
    pub censor_rate: f64,
    pub n: usize,
    #[serde(default = "default_covariate_dim")]
    pub covariate_dim: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_covariate_dim() -> usize {
    2
}

impl Default for SimScenario {
    /// `λ₁ = 0.5`, `p = 0.7`, `β₁ = [1, 1]`, `β₂ = −0.2 β₁`, `v = 10`.
    fn default() -> Self {
        Self {
            lambda1: 0.5,
            lambda2: None,
            v: 10.0,
            beta1: vec![1.0, 1.0],
            beta2: vec![-0.2, -0.2],
            p_target: Some(0.7),
            censor_rate: 0.0,
            n: 5000,
            covariate_dim: 2,
            seed: 1,
        }
    }
}

impl SimScenario {
    /// `β₁ = scale · 1` with the default `β₂ = −0.2 β₁`.
    pub fn with_beta_scale(mut self, scale: f64) -> Self {
        self.beta1 = vec![scale; self.covariate_dim];
        self.beta2 = vec![-0.2 * scale; self.covariate_dim];
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.lambda1 > 0.0 && self.lambda1.is_finite()) {
            return bad(format!("lambda1 must be positive, got {}", self.lambda1));
        }
        if !(self.v > 0.0 && self.v.is_finite()) {
            return bad(format!("v must be positive, got {}", self.v));
        }
        if self.covariate_dim == 0 {
            return bad("covariate_dim must be >= 1".into());
        }
        if self.beta1.len() != self.covariate_dim || self.beta2.len() != self.covariate_dim {
            return bad(format!(
                "beta vectors must have length covariate_dim = {}",
                self.covariate_dim
            ));
        }
        if self.beta1.iter().chain(&self.beta2).any(|b| !b.is_finite()) {
            return bad("beta entries must be finite".into());
        }
        match (self.lambda2, self.p_target) {
            (Some(_), Some(_)) => return bad("set exactly one of lambda2 and p_target".into()),
            (None, None) => return bad("one of lambda2 or p_target is required".into()),
            (Some(l2), None) if !(l2 > 0.0 && l2.is_finite()) => {
                return bad(format!("lambda2 must be positive, got {l2}"))
            }
            (None, Some(p)) if !(p > 0.0 && p < 1.0) => {
                return bad(format!("p_target must lie in (0, 1), got {p}"))
            }
            _ => {}
        }
        if !(0.0..=0.95).contains(&self.censor_rate) {
            return bad(format!("censor_rate must lie in [0, 0.95], got {}", self.censor_rate));
        }
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        Ok(())
    }

    /// The hazard model; requires `lambda2` to be set.
    pub fn model(&self) -> Result<WeibullCauseModel> {
        let lambda2 = self.lambda2.ok_or_else(|| {
            Error::InvalidParameter("lambda2 unresolved; call resolve_lambda2 first".into())
        })?;
        Ok(WeibullCauseModel {
            lambda: [self.lambda1, lambda2],
            beta: [self.beta1.clone(), self.beta2.clone()],
            v: self.v,
        })
    }

    /// Solves `λ₂` from `p_target` when needed. The returned scenario has
    /// `lambda2` set and `p_target` cleared.
    pub fn resolve_lambda2(&self, n_mc: usize, tol: f64) -> Result<(SimScenario, Option<Lambda2Solution>)> {
        self.validate()?;
        if self.lambda2.is_some() {
            return Ok((self.clone(), None));
        }
        let sol = solve_lambda2(self, n_mc, tol)?;
        let mut out = self.clone();
        out.lambda2 = Some(sol.lambda2);
        out.p_target = None;
        Ok((out, Some(sol)))
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let sc: SimScenario = toml::from_str(s).map_err(|e| Error::Parse {
            path: "<scenario>".into(),
            line: e.span().map(|r| s[..r.start].lines().count().max(1)).unwrap_or(0),
            msg: e.message().to_string(),
        })?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }
}

/// Two cause-specific Weibull hazards with a shared shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeibullCauseModel {
    pub lambda: [f64; 2],
    pub beta: [Vec<f64>; 2],
    pub v: f64,
}

impl WeibullCauseModel {
    /// `a_k(x) = λ_k^v exp(xᵀβ_k)` for cause `k ∈ {1, 2}`.
    pub fn rate(&self, cause: u32, x: &[f64]) -> f64 {
        let k = (cause - 1) as usize;
        let lin: f64 = x.iter().zip(&self.beta[k]).map(|(a, b)| a * b).sum();
        self.lambda[k].powf(self.v) * lin.exp()
    }

    pub fn cumulative_hazard(&self, cause: u32, t: f64, x: &[f64]) -> f64 {
        self.rate(cause, x) * t.powf(self.v)
    }

    /// Closed-form `F_k(t; x)`.
    pub fn cif(&self, cause: u32, t: f64, x: &[f64]) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let a1 = self.rate(1, x);
        let a2 = self.rate(2, x);
        let a = a1 + a2;
        let ak = if cause == 1 { a1 } else { a2 };
        (ak / a) * -(-a * t.powf(self.v)).exp_m1()
    }

    /// `P(D = 1 | x) = a₁ / (a₁ + a₂)`.
    pub fn type1_probability(&self, x: &[f64]) -> f64 {
        let a1 = self.rate(1, x);
        a1 / (a1 + self.rate(2, x))
    }

    /// `E[Y^(1,τ) | x] = τ − ∫₀^τ F₁(u; x) du`, via the regularized lower
    /// incomplete gamma function.
    pub fn restricted_mean(&self, x: &[f64], tau: f64) -> f64 {
        let a1 = self.rate(1, x);
        let a = a1 + self.rate(2, x);
        let s = 1.0 / self.v;
        // ∫₀^τ exp(−a u^v) du = a^{−1/v} Γ(1/v) P(1/v, a τ^v) / v
        let surv_int = a.powf(-s) * gamma(s) * gamma_lr(s, a * tau.powf(self.v)) * s;
        tau - (a1 / a) * (tau - surv_int)
    }

    /// Same model with the named covariate coefficients zeroed for both causes.
    pub fn reduced(&self, drop_dims: &[usize]) -> Result<Self> {
        let mut out = self.clone();
        for &d in drop_dims {
            if d >= out.beta[0].len() {
                return Err(Error::InvalidParameter(format!(
                    "reduced dimension {d} out of range (covariate_dim = {})",
                    out.beta[0].len()
                )));
            }
            out.beta[0][d] = 0.0;
            out.beta[1][d] = 0.0;
        }
        Ok(out)
    }

    /// Refits the shape to `1/σ` while keeping the location structure of the
    /// equivalent log-linear model: coefficients scale by `v'/v`, scales stay.
    pub fn with_fixed_scale(&self, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        let v_new = 1.0 / sigma;
        let ratio = v_new / self.v;
        Ok(Self {
            lambda: self.lambda,
            beta: [
                self.beta[0].iter().map(|b| b * ratio).collect(),
                self.beta[1].iter().map(|b| b * ratio).collect(),
            ],
            v: v_new,
        })
    }
}

/// Inverse of the cumulative hazard at `−log u`:
/// `λ⁻¹ [−log(u) exp(−xᵀβ)]^{1/v}`.
pub fn latent_time(u: f64, x: &[f64], lambda: f64, beta: &[f64], v: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidParameter(format!("uniform draw must lie in (0, 1), got {u}")));
    }
    let lin: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
    Ok((-u.ln() * (-lin).exp()).powf(1.0 / v) / lambda)
}

/// Generated subjects with their latent quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub covariates: Vec<Vec<f64>>,
    /// `Y = min(Y₁, Y₂)`.
    pub event_time: Vec<f64>,
    /// `D ∈ {1, 2}`.
    pub cause: Vec<u32>,
    /// `C`; `+∞` when uncensored by construction.
    pub censor_time: Vec<f64>,
}

impl SimulatedData {
    pub fn len(&self) -> usize {
        self.event_time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event_time.is_empty()
    }

    /// Observed times `min(Y, C)`.
    pub fn observed_times(&self) -> Vec<f64> {
        self.event_time
            .iter()
            .zip(&self.censor_time)
            .map(|(&y, &c)| y.min(c))
            .collect()
    }

    /// Event codes; zero where `C < Y` (ties count as events).
    pub fn observed_events(&self) -> Vec<u32> {
        self.event_time
            .iter()
            .zip(&self.censor_time)
            .zip(&self.cause)
            .map(|((&y, &c), &d)| if c < y { 0 } else { d })
            .collect()
    }

    pub fn censored_fraction(&self) -> f64 {
        let cens = self.observed_events().iter().filter(|&&e| e == 0).count();
        cens as f64 / self.len() as f64
    }

    /// Subject ids are `1..=n` in generation order.
    pub fn subject_id(index: usize) -> String {
        (index + 1).to_string()
    }

    pub fn to_records(&self) -> Vec<CompetingRisksRecord> {
        let times = self.observed_times();
        let events = self.observed_events();
        (0..self.len())
            .map(|i| {
                CompetingRisksRecord::new(Self::subject_id(i), times[i], events[i])
                    .with_covariates(self.covariates[i].clone())
            })
            .collect()
    }

    pub fn to_dataset(&self) -> Result<Dataset> {
        Dataset::new(self.to_records(), 2)
    }
}

fn subject_words(dim: usize) -> u64 {
    // u64 draws: 2·ceil(dim/2) for the normals plus two uniforms; 2 words each.
    2 * (2 * dim.div_ceil(2) as u64 + 2)
}

/// Covariates and the two uniforms for subject `index`.
fn subject_draws(seed: u64, dim: usize, index: usize) -> (Vec<f64>, f64, f64) {
    let mut rng = substream(seed, rng::DOMAIN_SUBJECTS, index as u64, subject_words(dim));
    let mut x = vec![0.0; dim];
    fill_normals(&mut rng, &mut x);
    let u1 = open_unit(&mut rng);
    let u2 = open_unit(&mut rng);
    (x, u1, u2)
}

/// Draws `n` uncensored subjects.
pub fn generate_uncensored(scenario: &SimScenario) -> Result<SimulatedData> {
    let model = scenario.model()?;
    let dim = scenario.covariate_dim;
    let n = scenario.n;
    let draws = (0..n)
        .into_par_iter()
        .map(|i| {
            let (x, u1, u2) = subject_draws(scenario.seed, dim, i);
            let y1 = latent_time(u1, &x, model.lambda[0], &model.beta[0], model.v)?;
            let y2 = latent_time(u2, &x, model.lambda[1], &model.beta[1], model.v)?;
            Ok(if y1 <= y2 { (x, y1, 1) } else { (x, y2, 2) })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut data = SimulatedData {
        covariates: Vec::with_capacity(n),
        event_time: Vec::with_capacity(n),
        cause: Vec::with_capacity(n),
        censor_time: vec![f64::INFINITY; n],
    };
    for (x, y, d) in draws {
        data.covariates.push(x);
        data.event_time.push(y);
        data.cause.push(d);
    }
    Ok(data)
}

/// Result of the `λ₂` root solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Lambda2Solution {
    pub lambda2: f64,
    /// `p̂(λ₂)` at the returned value.
    pub achieved: f64,
    /// Every `(λ₂, p̂)` evaluated, in evaluation order.
    pub trace: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Lambda2Method {
    /// `p(λ₂) = E_X[a₁ / (a₁ + a₂)]` over a fixed covariate sample.
    #[default]
    Analytic,
    /// Regenerates latent times with common random numbers and counts `D = 1`.
    Regenerate,
}

pub const DEFAULT_LAMBDA2_TOL: f64 = 0.005;
pub const DEFAULT_LAMBDA2_MC: usize = 100_000;

pub fn solve_lambda2(scenario: &SimScenario, n_mc: usize, tol: f64) -> Result<Lambda2Solution> {
    solve_lambda2_with(scenario, n_mc, tol, Lambda2Method::Analytic)
}

/// Bisection on `log λ₂`. `p̂(λ₂)` is strictly decreasing in `λ₂` because the
/// same draws are reused at every candidate.
pub fn solve_lambda2_with(
    scenario: &SimScenario,
    n_mc: usize,
    tol: f64,
    method: Lambda2Method,
) -> Result<Lambda2Solution> {
    let target = scenario
        .p_target
        .ok_or_else(|| Error::InvalidParameter("p_target is required to solve lambda2".into()))?;
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidParameter(format!("p_target must lie in (0, 1), got {target}")));
    }
    if !(tol > 0.0) || n_mc == 0 {
        return Err(Error::InvalidParameter("tol must be positive and n_mc >= 1".into()));
    }
    let dim = scenario.covariate_dim;
    let v = scenario.v;
    let lambda1 = scenario.lambda1;
    let seed = rng::derive_seed(scenario.seed, rng::DOMAIN_LAMBDA2);

    // Per draw: a₁ and the λ₂-free part of a₂ (analytic), or Y₁ and the λ₂ = 1
    // latent time of cause 2 (regenerate).
    let pairs: Vec<(f64, f64)> = (0..n_mc)
        .into_par_iter()
        .map(|i| {
            let (x, u1, u2) = subject_draws(seed, dim, i);
            let lin1: f64 = x.iter().zip(&scenario.beta1).map(|(a, b)| a * b).sum();
            let lin2: f64 = x.iter().zip(&scenario.beta2).map(|(a, b)| a * b).sum();
            match method {
                Lambda2Method::Analytic => (lambda1.powf(v) * lin1.exp(), lin2.exp()),
                Lambda2Method::Regenerate => (
                    latent_time(u1, &x, lambda1, &scenario.beta1, v).unwrap(),
                    latent_time(u2, &x, 1.0, &scenario.beta2, v).unwrap(),
                ),
            }
        })
        .collect();
    let p_hat = |lambda2: f64| -> f64 {
        match method {
            Lambda2Method::Analytic => {
                let l2v = lambda2.powf(v);
                csum(pairs.iter().map(|&(a1, e2)| a1 / (a1 + l2v * e2))) / n_mc as f64
            }
            Lambda2Method::Regenerate => {
                let wins = pairs.iter().filter(|&&(y1, y2_unit)| y1 <= y2_unit / lambda2).count();
                wins as f64 / n_mc as f64
            }
        }
    };

    let mut trace = Vec::new();
    let eval = |l: f64, trace: &mut Vec<(f64, f64)>| {
        let p = p_hat(l);
        trace.push((l, p));
        p
    };

    let p0 = eval(lambda1, &mut trace);
    if (p0 - target).abs() < tol {
        return Ok(Lambda2Solution {
            lambda2: lambda1,
            achieved: p0,
            trace,
        });
    }
    // Larger λ₂ lowers p.
    let (mut lo, mut hi) = (lambda1, lambda1);
    let mut expansions = 0;
    if p0 > target {
        loop {
            hi *= 2.0;
            expansions += 1;
            if eval(hi, &mut trace) <= target {
                break;
            }
            lo = hi;
            if expansions >= 60 {
                return Err(Error::BracketFailure(format!(
                    "p({hi}) still above target {target} after 60 doublings"
                )));
            }
        }
    } else {
        loop {
            lo /= 2.0;
            expansions += 1;
            if eval(lo, &mut trace) >= target {
                break;
            }
            hi = lo;
            if expansions >= 60 {
                return Err(Error::BracketFailure(format!(
                    "p({lo}) still below target {target} after 60 halvings"
                )));
            }
        }
    }
    let mut best = *trace
        .iter()
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
        .unwrap();
    for _ in 0..200 {
        if (best.1 - target).abs() < tol {
            break;
        }
        let mid = (lo * hi).sqrt();
        let p = eval(mid, &mut trace);
        if (p - target).abs() < (best.1 - target).abs() {
            best = (mid, p);
        }
        if p > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    Ok(Lambda2Solution {
        lambda2: best.0,
        achieved: best.1,
        trace,
    })
}

/// Location `μ` and realized fraction of an [`attach_censoring`] call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensoringFit {
    pub mu: f64,
    /// Standard deviation of the log-censoring offsets.
    pub sd: f64,
    pub achieved: f64,
}

/// Log-normal censoring `C_i = exp(μ + r_i)`, `r_i ~ N(0, sd(log Y))`.
///
/// Subject `i` is censored iff `μ < log Y_i − r_i`, so the censored count is
/// a nonincreasing step function of `μ`; `μ` is placed midway between the
/// order statistics that bracket the target count.
pub fn attach_censoring(data: &SimulatedData, pi_c: f64, seed: u64) -> Result<(SimulatedData, CensoringFit)> {
    if !(0.0..=0.95).contains(&pi_c) {
        return Err(Error::InvalidParameter(format!("censoring rate must lie in [0, 0.95], got {pi_c}")));
    }
    let n = data.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut out = data.clone();
    if pi_c == 0.0 {
        out.censor_time = vec![f64::INFINITY; n];
        return Ok((
            out,
            CensoringFit {
                mu: f64::INFINITY,
                sd: 0.0,
                achieved: 0.0,
            },
        ));
    }
    let logs: Vec<f64> = data.event_time.iter().map(|y| y.ln()).collect();
    let mean = csum(logs.iter().copied()) / n as f64;
    let sd = if n > 1 {
        (csum(logs.iter().map(|l| (l - mean).powi(2))) / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let offsets: Vec<f64> = (0..n)
        .map(|i| {
            let mut rng = substream(seed, rng::DOMAIN_CENSORING, i as u64, 4);
            sd * rng::normal_pair(&mut rng).0
        })
        .collect();
    let mut thresholds: Vec<f64> = logs.iter().zip(&offsets).map(|(l, r)| l - r).collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));

    let k = ((pi_c * n as f64).round() as usize).min(n);
    let spread = (thresholds[0] - thresholds[n - 1]).abs().max(1.0);
    let mu = if k == 0 {
        thresholds[0] + spread
    } else if k == n {
        thresholds[n - 1] - spread
    } else {
        0.5 * (thresholds[k - 1] + thresholds[k])
    };
    out.censor_time = offsets.iter().map(|r| (mu + r).exp()).collect();
    let achieved = out.censored_fraction();
    if (achieved - pi_c).abs() > 0.01f64.max(1.0 / n as f64) {
        return Err(Error::UnattainableCensoring {
            target: pi_c,
            min: 0.0,
            max: 1.0,
            closest: achieved,
        });
    }
    Ok((out, CensoringFit { mu, sd, achieved }))
}

/// Everything produced for one scenario run.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub scenario: SimScenario,
    pub data: SimulatedData,
    pub lambda2: Option<Lambda2Solution>,
    pub censoring: Option<CensoringFit>,
}

/// Resolves `λ₂`, generates and attaches censoring at `scenario.censor_rate`.
pub fn simulate(scenario: &SimScenario) -> Result<SimulationOutput> {
    let (resolved, lambda2) = scenario.resolve_lambda2(DEFAULT_LAMBDA2_MC, DEFAULT_LAMBDA2_TOL)?;
    let data = generate_uncensored(&resolved)?;
    let (data, censoring) = if resolved.censor_rate > 0.0 {
        let seed = rng::derive_seed(resolved.seed, rng::DOMAIN_CENSORING);
        let (d, fit) = attach_censoring(&data, resolved.censor_rate, seed)?;
        (d, Some(fit))
    } else {
        (data, None)
    };
    Ok(SimulationOutput {
        scenario: resolved,
        data,
        lambda2,
        censoring,
    })
}

pub fn true_cif(model: &WeibullCauseModel, x: &[f64], t: f64, cause: u32) -> f64 {
    model.cif(cause, t, x)
}

/// Which analytic CIF a provider hands out.
#[derive(Debug, Clone, PartialEq)]
pub enum ProviderVariant {
    Full,
    /// Zero these covariate coefficients for both causes.
    Reduced(Vec<usize>),
    /// Evaluate the closed form under substituted parameters.
    Distorted(WeibullCauseModel),
}

/// Maps covariates to a predicted CIF.
pub trait CifProvider: Sync {
    fn curve(&self, x: &[f64]) -> StepFunction;
}

impl<F> CifProvider for F
where
    F: Fn(&[f64]) -> StepFunction + Sync,
{
    fn curve(&self, x: &[f64]) -> StepFunction {
        self(x)
    }
}

/// Closed-form CIF of a (possibly altered) model, discretized on a grid.
#[derive(Debug, Clone)]
pub struct ModelCifProvider {
    pub model: WeibullCauseModel,
    pub cause: u32,
    pub grid: Vec<f64>,
}

impl CifProvider for ModelCifProvider {
    fn curve(&self, x: &[f64]) -> StepFunction {
        let mut prev = 0.0f64;
        let values = self
            .grid
            .iter()
            .map(|&t| {
                prev = prev.max(self.model.cif(self.cause, t, x).clamp(0.0, 1.0));
                prev
            })
            .collect();
        StepFunction::cif(self.grid.clone(), values).expect("closed-form CIF is a valid curve")
    }
}

pub const DEFAULT_PROVIDER_POINTS: usize = 200;

/// `points` evenly spaced times on `(0, q99]`, where `q99` is the 99th
/// percentile of `Y` in a reference sample drawn from `model`.
pub fn default_time_grid(model: &WeibullCauseModel, dim: usize, points: usize, seed: u64) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::InvalidParameter("grid needs at least one point".into()));
    }
    let mut sc = SimScenario {
        lambda1: model.lambda[0],
        lambda2: Some(model.lambda[1]),
        v: model.v,
        beta1: model.beta[0].clone(),
        beta2: model.beta[1].clone(),
        p_target: None,
        censor_rate: 0.0,
        n: 20_000,
        covariate_dim: dim,
        seed,
    };
    sc.seed = rng::derive_seed(seed, 0x6772_6964);
    let mut y = generate_uncensored(&sc)?.event_time;
    y.sort_by(f64::total_cmp);
    let q99 = crate::baselines::lower_quantile(&y, 0.99);
    Ok((1..=points).map(|k| q99 * k as f64 / points as f64).collect())
}

/// Knots at the empirical quantiles `k / points`, `k = 1..=points`, of `Y` in
/// a reference sample of size `n_ref`, so resolution follows the event mass.
pub fn quantile_time_grid(
    model: &WeibullCauseModel,
    dim: usize,
    points: usize,
    n_ref: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if points == 0 || n_ref == 0 {
        return Err(Error::InvalidParameter("grid needs points >= 1 and n_ref >= 1".into()));
    }
    let sc = SimScenario {
        lambda1: model.lambda[0],
        lambda2: Some(model.lambda[1]),
        v: model.v,
        beta1: model.beta[0].clone(),
        beta2: model.beta[1].clone(),
        p_target: None,
        censor_rate: 0.0,
        n: n_ref,
        covariate_dim: dim,
        seed,
    };
    let mut y = generate_uncensored(&sc)?.event_time;
    y.sort_by(f64::total_cmp);
    let mut grid: Vec<f64> = (1..=points)
        .map(|k| crate::baselines::lower_quantile(&y, k as f64 / points as f64))
        .collect();
    grid.dedup();
    Ok(grid)
}

/// Builds a provider for a resolved scenario on the given grid.
pub fn cif_provider(scenario: &SimScenario, variant: &ProviderVariant, grid: Vec<f64>) -> Result<ModelCifProvider> {
    let base = scenario.model()?;
    let model = match variant {
        ProviderVariant::Full => base,
        ProviderVariant::Reduced(dims) => base.reduced(dims)?,
        ProviderVariant::Distorted(m) => {
            if m.beta[0].len() != scenario.covariate_dim || m.beta[1].len() != scenario.covariate_dim {
                return Err(Error::InvalidParameter("distorted model dimension mismatch".into()));
            }
            m.clone()
        }
    };
    Ok(ModelCifProvider {
        model,
        cause: 1,
        grid,
    })
}
