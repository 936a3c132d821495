//! Python bindings for `sparsemm`.

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sparsemm::bench::{self, ExperimentConfig};
use sparsemm::em_lift::{self, EquivalenceOptions};
use sparsemm::mm_solver::{self, MmSolver, RegressionModel, SurrogateChoice};
use sparsemm::penalty::{PenaltySpec, DEFAULT_SCAD_A};
use sparsemm::posterior_median::{self as pm, ContinuousDist, SpikeSlabPrior};
use sparsemm::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Numerical(_) => PyArithmeticError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A penalty `p_λ(t)` scaled by `n`.
#[pyclass(name = "Penalty", module = "sparsemm_py", frozen)]
struct PyPenalty {
    inner: PenaltySpec,
}

#[pymethods]
impl PyPenalty {
    /// `family` is one of `l1`, `scad`, `log`, `quadratic`.
    #[new]
    #[pyo3(signature = (family, lam, a = DEFAULT_SCAD_A, n = 1))]
    fn new(family: &str, lam: f64, a: f64, n: usize) -> PyResult<Self> {
        PenaltySpec::from_name(family, lam, a, n).map(|inner| PyPenalty { inner }).map_err(py_err)
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda()
    }

    fn value(&self, t: f64) -> PyResult<f64> {
        self.inner.value(t).map_err(py_err)
    }

    fn derivative(&self, t: f64) -> PyResult<f64> {
        self.inner.derivative(t).map_err(py_err)
    }

    /// Right derivative, defined at zero as well.
    fn slope(&self, t: f64) -> f64 {
        self.inner.slope(t)
    }

    fn __repr__(&self) -> String {
        format!("Penalty({:?}, lam={})", self.inner.name(), self.inner.lambda())
    }
}

/// Atom at zero with mass `pi_y` plus a normal continuous component.
#[pyclass(name = "PosteriorMixture", module = "sparsemm_py", frozen)]
struct PyMixture {
    inner: pm::PosteriorMixture,
}

#[pymethods]
impl PyMixture {
    #[new]
    fn new(pi_y: f64, mean: f64, sd: f64) -> PyResult<Self> {
        let cont = ContinuousDist::normal(mean, sd).map_err(py_err)?;
        pm::PosteriorMixture::new(pi_y, cont).map(|inner| PyMixture { inner }).map_err(py_err)
    }

    /// Posterior of a spike-and-slab normal prior after observing `y ~ N(β, σ²)`.
    #[staticmethod]
    fn from_observation(pi: f64, tau: f64, y: f64, sigma: f64) -> PyResult<Self> {
        let prior = SpikeSlabPrior::normal(pi, tau).map_err(py_err)?;
        pm::marginal_posterior(&prior, y, sigma).map(|inner| PyMixture { inner }).map_err(py_err)
    }

    #[getter]
    fn pi_y(&self) -> f64 {
        self.inner.pi_y()
    }

    #[getter]
    fn odds(&self) -> f64 {
        pm::posterior_odds(&self.inner)
    }

    #[getter]
    fn delta(&self) -> f64 {
        pm::threshold_delta(&self.inner)
    }

    #[getter]
    fn continuous_mean(&self) -> f64 {
        self.inner.continuous().mean()
    }

    #[getter]
    fn continuous_sd(&self) -> f64 {
        self.inner.continuous().variance().sqrt()
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf(x)
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn variance(&self) -> f64 {
        self.inner.variance()
    }

    /// Analytic median with its branch: `{median, odds, delta, branch, sign}`.
    fn median<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = pm::median_lemma1(&self.inner);
        let d = PyDict::new(py);
        d.set_item("median", r.median)?;
        d.set_item("odds", r.odds)?;
        d.set_item("delta", r.threshold_delta)?;
        d.set_item("branch", r.branch.as_str())?;
        d.set_item("sign", r.sign_s)?;
        Ok(d)
    }

    /// Median by bisection on the mixture CDF.
    #[pyo3(signature = (tol = 1e-12))]
    fn median_oracle(&self, tol: f64) -> PyResult<f64> {
        pm::median_oracle(&self.inner, tol).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "PosteriorMixture(pi_y={}, mean={}, sd={})",
            self.inner.pi_y(),
            self.inner.continuous().mean(),
            self.inner.continuous().variance().sqrt()
        )
    }
}

/// Location-scale form of the median; raises if `odds >= delta`.
#[pyfunction]
fn median_location_scale(med_c: f64, sigma_c: f64, odds: f64, delta: f64) -> PyResult<f64> {
    pm::median_location_scale(med_c, sigma_c, sparsemm::numeric::std_normal_quantile, odds, delta).map_err(py_err)
}

/// Coordinatewise posterior medians of `y` under a common prior.
#[pyfunction]
fn threshold_vector(pi: f64, tau: f64, y: Vec<f64>, sigma: f64) -> PyResult<Vec<f64>> {
    let prior = SpikeSlabPrior::normal(pi, tau).map_err(py_err)?;
    pm::threshold_vector(&prior, &y, sigma).map(|o| o.estimates).map_err(py_err)
}

fn model_from(x: Vec<Vec<f64>>, y: Vec<f64>) -> PyResult<RegressionModel> {
    let n = x.len();
    let p = x.first().map_or(0, Vec::len);
    if x.iter().any(|row| row.len() != p) {
        return Err(PyValueError::new_err("rows of x must have equal length"));
    }
    let flat: Vec<f64> = x.into_iter().flatten().collect();
    RegressionModel::new(DMatrix::from_row_slice(n, p, &flat), DVector::from_vec(y)).map_err(py_err)
}

/// Penalized least-squares fit by MM iterations from the default initializer.
///
/// With `k` set, exactly `k` steps are taken; otherwise the iterations run to
/// convergence. Returns `{beta, support, objective_trace, steps, converged}`.
#[pyfunction]
#[pyo3(signature = (x, y, penalty = "scad", lam = 0.5, a = DEFAULT_SCAD_A, k = None, surrogate = "lla", tol = 1e-8, max_iter = 1000))]
#[allow(clippy::too_many_arguments)]
fn fit<'py>(
    py: Python<'py>,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    penalty: &str,
    lam: f64,
    a: f64,
    k: Option<usize>,
    surrogate: &str,
    tol: f64,
    max_iter: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let model = model_from(x, y)?;
    let spec = PenaltySpec::from_name(penalty, lam, a, model.n_obs()).map_err(py_err)?;
    let decomp = mm_solver::decompose_uniform(model.clone(), spec).map_err(py_err)?;
    let init = mm_solver::default_initializer(&model).map_err(py_err)?;
    let surrogate = match surrogate {
        "lla" => SurrogateChoice::Lla,
        "lqa" => SurrogateChoice::lqa(),
        other => return Err(PyValueError::new_err(format!("surrogate must be 'lla' or 'lqa', got '{other}'"))),
    };
    let solver = MmSolver { surrogate, ..MmSolver::default() };
    let result = match k {
        Some(k) => solver.k_step(&decomp, &init, k, tol),
        None => solver.iterate(&decomp, &init, tol, max_iter),
    }
    .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("beta", result.beta_hat.iter().copied().collect::<Vec<_>>())?;
    d.set_item("support", result.support.clone())?;
    d.set_item("objective_trace", result.objective_trace.clone())?;
    d.set_item("steps", result.steps_taken)?;
    d.set_item("converged", result.converged)?;
    Ok(d)
}

/// MM-as-EM report for a scalar `l1`, `log` or `quadratic` penalty.
#[pyfunction]
#[pyo3(signature = (penalty, lam = 1.0, seed = 0, tol = em_lift::DEFAULT_EQUIVALENCE_TOL))]
fn emlift<'py>(py: Python<'py>, penalty: &str, lam: f64, seed: u64, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let canon = em_lift::canonical_lift(penalty, lam).map_err(py_err)?;
    let (anchors, grid) = sparsemm::cli::emlift_points(seed);
    let u_grid: Vec<f64> = (0..=100).map(|i| 0.1 * i as f64).collect();
    let opts = EquivalenceOptions { tol, ..EquivalenceOptions::default() };
    let r = em_lift::canonical_report(&canon, &anchors, &grid, &u_grid, opts).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("latent", r.description)?;
    d.set_item("verdict", r.verdict.as_str())?;
    d.set_item("max_constant_deviation", r.max_constant_deviation)?;
    d.set_item("mgf_max_rel_error", r.mgf_max_rel_error)?;
    d.set_item("mean_identity_max_error", r.mean_identity_max_error)?;
    d.set_item("concavity_ok", r.concavity_ok)?;
    d.set_item("concavity_certificate", r.certificate.concave)?;
    d.set_item("variance_identity_max_rel_error", r.certificate.variance_identity_max_rel_error)?;
    Ok(d)
}

/// Runs a bench experiment from TOML text and returns the metrics CSV.
#[pyfunction]
fn run_bench(config_toml: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_toml_str(config_toml).map_err(py_err)?;
    bench::run_experiment(&cfg).map(|t| t.to_csv()).map_err(py_err)
}

#[pymodule]
fn sparsemm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPenalty>()?;
    m.add_class::<PyMixture>()?;
    m.add_function(wrap_pyfunction!(median_location_scale, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_vector, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(emlift, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    m.add("BENCH_CSV_HEADER", bench::CSV_HEADER)?;
    Ok(())
}
