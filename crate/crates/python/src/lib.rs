//! Python bindings: step functions, IPCW weights, pseudo R², baseline
//! metrics, the bootstrap and the Weibull simulator.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use cifscore::baselines::{baselines_from_parts, event_time_quantile as quantile, DEFAULT_GRID_COUNT};
use cifscore::bootstrap::bootstrap_from_parts;
use cifscore::censoring::{censoring_survival as km_censoring, ipcw_from_parts, DegeneratePolicy};
use cifscore::population::provider_curves;
use cifscore::pseudo_r2::{pseudo_r2_from_parts, restricted_mean};
use cifscore::replicate::DISTORTED_SIGMA;
use cifscore::simulator::{
    cif_provider, default_time_grid, simulate, ProviderVariant, SimScenario, SimulationOutput, DEFAULT_PROVIDER_POINTS,
};
use cifscore::step::{Monotone, StepFunction};
use cifscore::Variant;

fn err(e: cifscore::Error) -> PyErr {
    match e {
        cifscore::Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_variant(s: &str) -> PyResult<Variant> {
    s.parse().map_err(err)
}

/// Right-continuous step function. `kind` is "cif" (nondecreasing from 0)
/// or "survival" (nonincreasing from 1).
#[pyclass(name = "StepFunction", module = "pycifscore", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyStepFunction {
    inner: StepFunction,
}

#[pymethods]
impl PyStepFunction {
    #[new]
    #[pyo3(signature = (grid, values, kind = "cif"))]
    fn new(grid: Vec<f64>, values: Vec<f64>, kind: &str) -> PyResult<Self> {
        let inner = match kind {
            "cif" => StepFunction::cif(grid, values),
            "survival" => StepFunction::survival(grid, values),
            _ => return Err(PyValueError::new_err(format!("unknown kind {kind:?} (expected cif or survival)"))),
        }
        .map_err(err)?;
        Ok(Self { inner })
    }

    fn __call__(&self, t: f64) -> f64 {
        self.inner.eval(t)
    }

    fn eval(&self, t: f64) -> f64 {
        self.inner.eval(t)
    }

    fn left_limit(&self, t: f64) -> f64 {
        self.inner.left_limit(t)
    }

    /// `∫₀^τ f(t) dt`.
    fn integral(&self, tau: f64) -> f64 {
        self.inner.integral(tau)
    }

    /// `τ − ∫₀^τ F(t) dt` for a CIF.
    fn restricted_mean(&self, tau: f64) -> f64 {
        restricted_mean(&self.inner, tau)
    }

    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.inner.grid().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner.shape() {
            Monotone::NonDecreasing => "cif",
            Monotone::NonIncreasing => "survival",
            Monotone::Free => "free",
        }
    }

    fn __len__(&self) -> usize {
        self.inner.grid().len()
    }

    fn __repr__(&self) -> String {
        format!("StepFunction(kind={:?}, knots={})", self.kind(), self.inner.grid().len())
    }
}

fn unwrap_curves(curves: &[PyRef<'_, PyStepFunction>]) -> Vec<StepFunction> {
    curves.iter().map(|c| c.inner.clone()).collect()
}

#[pyclass(name = "MetricReport", module = "pycifscore", frozen, get_all)]
struct PyMetricReport {
    tau: f64,
    cause: u32,
    variant: String,
    r2: f64,
    l2: f64,
    pseudo_r2: f64,
    calibration_intercept: f64,
    calibration_slope: f64,
    n_total: usize,
    n_uncensored: usize,
}

#[pymethods]
impl PyMetricReport {
    fn __repr__(&self) -> String {
        format!(
            "MetricReport(variant={}, tau={}, pseudo_r2={:.6}, r2={:.6}, l2={:.6})",
            self.variant, self.tau, self.pseudo_r2, self.r2, self.l2
        )
    }
}

#[pyclass(name = "Baselines", module = "pycifscore", frozen, get_all)]
struct PyBaselines {
    brier: f64,
    auc: f64,
    cindex: f64,
}

#[pymethods]
impl PyBaselines {
    fn __repr__(&self) -> String {
        format!("Baselines(brier={:.6}, auc={:.6}, cindex={:.6})", self.brier, self.auc, self.cindex)
    }
}

#[pyclass(name = "BootstrapInterval", module = "pycifscore", frozen, get_all)]
struct PyBootstrapInterval {
    estimate: f64,
    lower: f64,
    upper: f64,
    level: f64,
    resamples: usize,
    failures: usize,
}

#[pymethods]
impl PyBootstrapInterval {
    fn __repr__(&self) -> String {
        format!(
            "BootstrapInterval(estimate={:.6}, lower={:.6}, upper={:.6}, level={})",
            self.estimate, self.lower, self.upper, self.level
        )
    }
}

/// Reverse Kaplan–Meier estimate of the censoring survival `Ĝ`.
#[pyfunction]
fn censoring_survival(times: Vec<f64>, events: Vec<u32>) -> PyResult<PyStepFunction> {
    if times.len() != events.len() {
        return Err(PyValueError::new_err("times and events differ in length"));
    }
    Ok(PyStepFunction {
        inner: km_censoring(&times, &events),
    })
}

/// Normalized IPCW weights `δ/Ĝ(T−)`. With `drop=True` subjects whose
/// `Ĝ(T−)` is zero get weight 0 instead of raising.
#[pyfunction]
#[pyo3(signature = (times, events, drop = false))]
fn ipcw_weights(times: Vec<f64>, events: Vec<u32>, drop: bool) -> PyResult<Vec<f64>> {
    let g = km_censoring(&times, &events);
    let policy = if drop { DegeneratePolicy::Drop } else { DegeneratePolicy::Error };
    ipcw_from_parts(&times, &events, &g, policy).map(|(w, _)| w).map_err(err)
}

/// Lower empirical `q`-quantile of the uncensored observed times.
#[pyfunction]
fn event_time_quantile(times: Vec<f64>, events: Vec<u32>, q: f64) -> PyResult<f64> {
    quantile(&times, &events, q).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (times, events, curves, tau, cause = 1, variant = "horizon"))]
fn pseudo_r2(
    py: Python<'_>,
    times: Vec<f64>,
    events: Vec<u32>,
    curves: Vec<PyRef<'_, PyStepFunction>>,
    tau: f64,
    cause: u32,
    variant: &str,
) -> PyResult<PyMetricReport> {
    let variant = parse_variant(variant)?;
    let curves = unwrap_curves(&curves);
    let r = py
        .detach(|| {
            let refs: Vec<&StepFunction> = curves.iter().collect();
            pseudo_r2_from_parts(&times, &events, &refs, tau, cause, variant, DegeneratePolicy::Error)
        })
        .map_err(err)?;
    Ok(PyMetricReport {
        tau: r.tau,
        cause: r.cause,
        variant: r.variant.to_string(),
        r2: r.r2,
        l2: r.l2,
        pseudo_r2: r.pseudo_r2,
        calibration_intercept: r.calibration_intercept,
        calibration_slope: r.calibration_slope,
        n_total: r.n_total,
        n_uncensored: r.n_uncensored,
    })
}

/// Grid-averaged Brier and AUC plus the truncated C-index at `tau`.
#[pyfunction]
#[pyo3(signature = (times, events, curves, tau, cause = 1, grid_count = DEFAULT_GRID_COUNT))]
fn baselines(
    py: Python<'_>,
    times: Vec<f64>,
    events: Vec<u32>,
    curves: Vec<PyRef<'_, PyStepFunction>>,
    tau: f64,
    cause: u32,
    grid_count: usize,
) -> PyResult<PyBaselines> {
    let curves = unwrap_curves(&curves);
    let b = py
        .detach(|| {
            let refs: Vec<&StepFunction> = curves.iter().collect();
            baselines_from_parts(&times, &events, &refs, tau, cause, grid_count)
        })
        .map_err(err)?;
    Ok(PyBaselines {
        brier: b.brier,
        auc: b.auc,
        cindex: b.cindex,
    })
}

#[pyfunction]
#[pyo3(signature = (times, events, curves, tau, cause = 1, variant = "horizon", resamples = 200, level = 0.95, seed = 1))]
#[allow(clippy::too_many_arguments)]
fn bootstrap_ci(
    py: Python<'_>,
    times: Vec<f64>,
    events: Vec<u32>,
    curves: Vec<PyRef<'_, PyStepFunction>>,
    tau: f64,
    cause: u32,
    variant: &str,
    resamples: usize,
    level: f64,
    seed: u64,
) -> PyResult<PyBootstrapInterval> {
    let variant = parse_variant(variant)?;
    let curves = unwrap_curves(&curves);
    let b = py
        .detach(|| {
            let refs: Vec<&StepFunction> = curves.iter().collect();
            bootstrap_from_parts(&times, &events, &refs, tau, cause, variant, resamples, level, seed)
        })
        .map_err(err)?;
    Ok(PyBootstrapInterval {
        estimate: b.estimate,
        lower: b.lower,
        upper: b.upper,
        level: b.level,
        resamples: b.resamples,
        failures: b.failures,
    })
}

/// Weibull cause-specific hazards scenario. Leave `lambda2` unset to solve
/// it from `p_target`.
#[pyclass(name = "Scenario", module = "pycifscore", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: SimScenario,
}

#[pymethods]
impl PyScenario {
    #[new]
    #[pyo3(signature = (
        n = 5000, seed = 1, censor_rate = 0.0, p_target = Some(0.7), lambda1 = 0.5, lambda2 = None,
        v = 10.0, beta1 = None, beta2 = None, covariate_dim = 2
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        n: usize,
        seed: u64,
        censor_rate: f64,
        p_target: Option<f64>,
        lambda1: f64,
        lambda2: Option<f64>,
        v: f64,
        beta1: Option<Vec<f64>>,
        beta2: Option<Vec<f64>>,
        covariate_dim: usize,
    ) -> PyResult<Self> {
        let base = SimScenario {
            covariate_dim,
            ..SimScenario::default()
        }
        .with_beta_scale(1.0);
        let inner = SimScenario {
            lambda1,
            lambda2,
            v,
            beta1: beta1.unwrap_or(base.beta1),
            beta2: beta2.unwrap_or(base.beta2),
            p_target: if lambda2.is_some() { None } else { p_target },
            censor_rate,
            n,
            covariate_dim,
            seed,
        };
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let inner = SimScenario::from_toml_str(text).map_err(err)?;
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn censor_rate(&self) -> f64 {
        self.inner.censor_rate
    }

    #[getter]
    fn lambda2(&self) -> Option<f64> {
        self.inner.lambda2
    }

    #[getter]
    fn p_target(&self) -> Option<f64> {
        self.inner.p_target
    }

    /// Generates the dataset, solving `lambda2` and censoring as needed.
    fn simulate(&self, py: Python<'_>) -> PyResult<PySimulation> {
        let sc = self.inner.clone();
        let out = py.detach(|| simulate(&sc)).map_err(err)?;
        Ok(PySimulation { out })
    }

    fn __repr__(&self) -> String {
        format!("Scenario({})", self.inner.to_toml_string().trim().replace('\n', ", "))
    }
}

#[pyclass(name = "Simulation", module = "pycifscore", frozen)]
struct PySimulation {
    out: SimulationOutput,
}

#[pymethods]
impl PySimulation {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.out.data.observed_times()
    }

    #[getter]
    fn events(&self) -> Vec<u32> {
        self.out.data.observed_events()
    }

    #[getter]
    fn covariates(&self) -> Vec<Vec<f64>> {
        self.out.data.covariates.clone()
    }

    /// Resolved `lambda2`, whether given or solved.
    #[getter]
    fn lambda2(&self) -> Option<f64> {
        self.out.scenario.lambda2
    }

    /// Type-1 proportion at the solved `lambda2`; None when it was given.
    #[getter]
    fn achieved_p(&self) -> Option<f64> {
        self.out.lambda2.as_ref().map(|s| s.achieved)
    }

    #[getter]
    fn censored_fraction(&self) -> f64 {
        self.out.data.censored_fraction()
    }

    #[getter]
    fn scenario(&self) -> PyScenario {
        PyScenario {
            inner: self.out.scenario.clone(),
        }
    }

    fn __len__(&self) -> usize {
        self.out.data.len()
    }

    /// True cause-1 CIF curves per subject. `provider` is "full", "reduced"
    /// (last covariate dropped) or "sigma5" (misspecified shape).
    #[pyo3(signature = (provider = "full", points = DEFAULT_PROVIDER_POINTS))]
    fn true_cif(&self, py: Python<'_>, provider: &str, points: usize) -> PyResult<Vec<PyStepFunction>> {
        let sc = &self.out.scenario;
        let model = sc.model().map_err(err)?;
        let variant = match provider {
            "full" => ProviderVariant::Full,
            "reduced" => ProviderVariant::Reduced(vec![sc.covariate_dim - 1]),
            "sigma5" => ProviderVariant::Distorted(model.with_fixed_scale(DISTORTED_SIGMA).map_err(err)?),
            _ => {
                return Err(PyValueError::new_err(format!(
                    "unknown provider {provider:?} (expected full, reduced or sigma5)"
                )))
            }
        };
        let curves = py
            .detach(|| -> cifscore::Result<Vec<StepFunction>> {
                let grid = default_time_grid(&model, sc.covariate_dim, points, sc.seed)?;
                let p = cif_provider(sc, &variant, grid)?;
                Ok(provider_curves(&self.out.data, &p))
            })
            .map_err(err)?;
        Ok(curves.into_iter().map(|inner| PyStepFunction { inner }).collect())
    }
}

#[pymodule]
fn pycifscore(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStepFunction>()?;
    m.add_class::<PyMetricReport>()?;
    m.add_class::<PyBaselines>()?;
    m.add_class::<PyBootstrapInterval>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(censoring_survival, m)?)?;
    m.add_function(wrap_pyfunction!(ipcw_weights, m)?)?;
    m.add_function(wrap_pyfunction!(event_time_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(pseudo_r2, m)?)?;
    m.add_function(wrap_pyfunction!(baselines, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap_ci, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
