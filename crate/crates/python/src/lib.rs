//! Python bindings: domains, surrogates, the covering schedule, interval bounds,
//! the UMA/PAE learner and the experiment harness.

use std::path::PathBuf;

use dualadapt::evaluation::{self, Regime};
use dualadapt::harness;
use dualadapt::losses::{self, LossObservation, TrueLoss};
use dualadapt::meta::{self, Mode};
use dualadapt::schedule::{self, IntervalKey};
use dualadapt::{selftest, Error, ExpertFamily, Vector};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::GradientBound { .. } => {
            PyValueError::new_err(err.to_string())
        }
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

fn vector(x: Vec<f64>) -> Vector {
    Vector::from_vec(x)
}

fn list(x: &Vector) -> Vec<f64> {
    x.as_slice().to_vec()
}

fn spans(keys: Vec<IntervalKey>) -> Vec<(u64, u64)> {
    keys.into_iter().map(|k| (k.start(), k.end())).collect()
}

/// Convex feasible set: an L2 ball or an axis-aligned box, with the gradient bound `G`.
#[pyclass(name = "Domain", module = "pydualadapt", from_py_object)]
#[derive(Clone)]
struct PyDomain(dualadapt::Domain);

#[pymethods]
impl PyDomain {
    #[staticmethod]
    fn ball(center: Vec<f64>, radius: f64, gradient_bound: f64) -> PyResult<Self> {
        dualadapt::Domain::ball(center, radius, gradient_bound).map(Self).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(name = "box")]
    fn cube(lower: Vec<f64>, upper: Vec<f64>, gradient_bound: f64) -> PyResult<Self> {
        dualadapt::Domain::cube(lower, upper, gradient_bound).map(Self).map_err(to_py)
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.0.dimension()
    }

    #[getter]
    fn diameter(&self) -> f64 {
        self.0.diameter()
    }

    #[getter]
    fn gradient_bound(&self) -> f64 {
        self.0.gradient_bound()
    }

    /// `1 / (5 G D)`
    #[getter]
    fn max_learning_rate(&self) -> f64 {
        self.0.max_learning_rate()
    }

    fn center(&self) -> Vec<f64> {
        list(&self.0.center())
    }

    #[pyo3(signature = (x, tol = 1e-8))]
    fn contains(&self, x: Vec<f64>, tol: f64) -> bool {
        x.len() == self.0.dimension() && self.0.contains(&vector(x), tol)
    }

    fn project(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.project(&vector(x)).map(|p| list(&p)).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Domain({:?}, G={})", self.0.kind(), self.0.gradient_bound())
    }
}

/// One round's loss function.
#[pyclass(name = "Loss", module = "pydualadapt", frozen, from_py_object)]
#[derive(Clone)]
struct PyLoss(TrueLoss);

#[pymethods]
impl PyLoss {
    /// `<a, w>`
    #[staticmethod]
    fn linear(a: Vec<f64>) -> Self {
        Self(TrueLoss::Linear { a })
    }

    /// `(modulus / 2) ||w - center||^2`
    #[staticmethod]
    fn quadratic(center: Vec<f64>, modulus: f64) -> Self {
        Self(TrueLoss::Quadratic { center, modulus })
    }

    /// `(<feature, w> - target)^2`
    #[staticmethod]
    fn squared_error(feature: Vec<f64>, target: f64) -> Self {
        Self(TrueLoss::SquaredError { feature, target })
    }

    /// `(f(w), grad f(w))`
    fn __call__(&self, w: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
        self.0.eval(&vector(w)).map(|(v, g)| (v, list(&g))).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Loss({:?})", self.0)
    }
}

#[pyclass(name = "RoundRecord", module = "pydualadapt", get_all, frozen)]
struct PyRoundRecord {
    round: usize,
    decision: Vec<f64>,
    loss: f64,
    gradient: Vec<f64>,
    n_active_ons: usize,
    n_active_aogd: usize,
    potential: Option<f64>,
}

impl From<meta::RoundRecord> for PyRoundRecord {
    fn from(r: meta::RoundRecord) -> Self {
        Self {
            round: r.round,
            decision: list(&r.decision),
            loss: r.loss,
            gradient: list(&r.gradient),
            n_active_ons: r.n_active_ons,
            n_active_aogd: r.n_active_aogd,
            potential: r.potential,
        }
    }
}

/// The adaptive learner. `mode` is "uma" (ONS and AOGD experts) or "pae" (ONS only).
#[pyclass(name = "Learner", module = "pydualadapt")]
struct PyLearner(meta::Learner);

#[pymethods]
impl PyLearner {
    #[new]
    #[pyo3(signature = (domain, mode = "uma", audit = false))]
    fn new(domain: PyDomain, mode: &str, audit: bool) -> PyResult<Self> {
        let mode = match mode {
            "uma" => Mode::Uma,
            "pae" => Mode::Pae,
            other => return Err(PyValueError::new_err(format!("mode must be \"uma\" or \"pae\", got {other:?}"))),
        };
        let learner = meta::Learner::new(mode, domain.0);
        Ok(Self(if audit { learner.with_audit() } else { learner }))
    }

    /// The round about to be played (1-based).
    #[getter]
    fn round(&self) -> usize {
        self.0.round()
    }

    /// `(ons, aogd)` experts currently awake.
    fn active_counts(&self) -> (usize, usize) {
        (self.0.active_count(ExpertFamily::Ons), self.0.active_count(ExpertFamily::Aogd))
    }

    fn predict(&mut self) -> PyResult<Vec<f64>> {
        self.0.predict().map(|w| list(&w)).map_err(to_py)
    }

    fn observe(&mut self, loss: &PyLoss) -> PyResult<PyRoundRecord> {
        self.0.observe(&loss.0).map(|(r, _)| r.into()).map_err(to_py)
    }

    fn step(&mut self, loss: &PyLoss) -> PyResult<PyRoundRecord> {
        self.0.step(&loss.0).map(Into::into).map_err(to_py)
    }

    fn run(&mut self, py: Python<'_>, losses: Vec<PyLoss>) -> PyResult<Vec<PyRoundRecord>> {
        let losses: Vec<TrueLoss> = losses.into_iter().map(|l| l.0).collect();
        let learner = &mut self.0;
        let records = py.detach(|| learner.run(&losses)).map_err(to_py)?;
        Ok(records.into_iter().map(Into::into).collect())
    }
}

fn observation(decision: Vec<f64>, gradient: Vec<f64>) -> PyResult<LossObservation> {
    LossObservation::new(1, vector(decision), vector(gradient)).map_err(to_py)
}

/// `-eta <g, w_t - w> + eta^2 <g, w_t - w>^2`
#[pyfunction]
fn surrogate_exp(eta: f64, decision: Vec<f64>, gradient: Vec<f64>, w: Vec<f64>) -> PyResult<f64> {
    losses::surrogate_exp(eta, &observation(decision, gradient)?, &vector(w)).map_err(to_py)
}

#[pyfunction]
fn surrogate_exp_grad(eta: f64, decision: Vec<f64>, gradient: Vec<f64>, w: Vec<f64>) -> PyResult<Vec<f64>> {
    losses::surrogate_exp_grad(eta, &observation(decision, gradient)?, &vector(w)).map(|g| list(&g)).map_err(to_py)
}

/// `-eta <g, w_t - w> + eta^2 ||g||^2 ||w_t - w||^2`
#[pyfunction]
fn surrogate_sc(eta: f64, decision: Vec<f64>, gradient: Vec<f64>, w: Vec<f64>) -> PyResult<f64> {
    losses::surrogate_sc(eta, &observation(decision, gradient)?, &vector(w)).map_err(to_py)
}

#[pyfunction]
fn surrogate_sc_grad(eta: f64, decision: Vec<f64>, gradient: Vec<f64>, w: Vec<f64>) -> PyResult<Vec<f64>> {
    losses::surrogate_sc_grad(eta, &observation(decision, gradient)?, &vector(w)).map(|g| list(&g)).map_err(to_py)
}

/// Covering intervals `(start, end)` that open at round `t`.
#[pyfunction]
fn intervals_starting_at(t: u64) -> Vec<(u64, u64)> {
    spans(schedule::intervals_starting_at(t))
}

/// Covering intervals `(start, end)` that contain round `t`.
#[pyfunction]
fn intervals_containing(t: u64) -> Vec<(u64, u64)> {
    spans(schedule::intervals_containing(t))
}

#[pyfunction]
fn learning_rate_grid(n: u64, diameter: f64, gradient_bound: f64) -> PyResult<Vec<f64>> {
    schedule::learning_rate_grid(n, diameter, gradient_bound).map_err(to_py)
}

/// Partition of `[p, q]` into covering intervals, as `(left, right)` lists of spans.
#[pyfunction]
fn partition_interval(p: u64, q: u64) -> PyResult<(Vec<(u64, u64)>, Vec<(u64, u64)>)> {
    schedule::partition_interval(p, q).map(|(l, r)| (spans(l), spans(r))).map_err(to_py)
}

/// Interval bound values for `[p, q]`. Pass `alpha` for the exp-concave bound or
/// `lam` for the strongly convex one.
#[pyfunction]
#[pyo3(signature = (p, q, dimension, diameter, gradient_bound, alpha = None, lam = None))]
fn bound_values<'py>(
    py: Python<'py>,
    p: u64,
    q: u64,
    dimension: usize,
    diameter: f64,
    gradient_bound: f64,
    alpha: Option<f64>,
    lam: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let regime = match (alpha, lam) {
        (Some(_), Some(_)) => return Err(PyValueError::new_err("pass at most one of alpha and lam")),
        (Some(alpha), None) => Some(Regime::ExpConcave { alpha }),
        (None, Some(lambda)) => Some(Regime::StronglyConvex { lambda }),
        (None, None) => None,
    };
    let v = evaluation::bound_values(p, q, dimension, diameter, gradient_bound, regime).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("a", v.a)?;
    out.set_item("b", v.b)?;
    out.set_item("a_hat", v.a_hat)?;
    out.set_item("theorem1_bound", v.theorem1_bound)?;
    out.set_item("theorem2_bound", v.theorem2_bound)?;
    out.set_item("general_convex_bound", v.general_convex_bound)?;
    Ok(out)
}

/// Runs a TOML experiment config; returns `(summary text, violations, written files)`.
#[pyfunction]
#[pyo3(signature = (config, out = None, seed = None))]
fn run_experiment(py: Python<'_>, config: PathBuf, out: Option<PathBuf>, seed: Option<u64>) -> PyResult<(String, usize, Vec<String>)> {
    let mut cfg = harness::load_config(&config).map_err(to_py)?;
    if let Some(seed) = seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(dir) = out {
        cfg = cfg.with_output_dir(&dir);
    }
    let outcome = py.detach(|| harness::run_experiment(&cfg)).map_err(to_py)?;
    let files = outcome.files.iter().map(|f| f.display().to_string()).collect();
    Ok((outcome.cell.summary_text(), outcome.cell.violations(), files))
}

/// `(name, passed, detail)` for each internal check.
#[pyfunction(name = "selftest")]
fn run_selftest() -> Vec<(String, bool, String)> {
    selftest::run_all().into_iter().map(|r| (r.name.to_string(), r.passed, r.detail)).collect()
}

#[pymodule]
fn pydualadapt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDomain>()?;
    m.add_class::<PyLoss>()?;
    m.add_class::<PyLearner>()?;
    m.add_class::<PyRoundRecord>()?;
    m.add_function(wrap_pyfunction!(surrogate_exp, m)?)?;
    m.add_function(wrap_pyfunction!(surrogate_exp_grad, m)?)?;
    m.add_function(wrap_pyfunction!(surrogate_sc, m)?)?;
    m.add_function(wrap_pyfunction!(surrogate_sc_grad, m)?)?;
    m.add_function(wrap_pyfunction!(intervals_starting_at, m)?)?;
    m.add_function(wrap_pyfunction!(intervals_containing, m)?)?;
    m.add_function(wrap_pyfunction!(learning_rate_grid, m)?)?;
    m.add_function(wrap_pyfunction!(partition_interval, m)?)?;
    m.add_function(wrap_pyfunction!(bound_values, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_selftest, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
