//! Python bindings: the certificate optimizer, eigenvalue helpers, the
//! 1D simulator, and the bound checker.
//!
//! Build with `cargo build -p wavedecay-py --release` and rename
//! `libwavedecay_py.so` to `wavedecay_py.so` on the Python path (the
//! `python/smoke_test.py` script does this automatically).

// Validation uses negated comparisons (`!(x > 0.0)`) so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use wavedecay::analysis;
use wavedecay::certificate as cert;
use wavedecay::spectral;
use wavedecay::wavesim;

fn to_py_err(e: wavedecay::Error) -> PyErr {
    match e {
        wavedecay::Error::InvalidParameter(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn require_positive(name: &str, v: f64) -> PyResult<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(PyValueError::new_err(format!(
            "{name} must be positive and finite, got {v}"
        )));
    }
    Ok(())
}

/// The computed decay guarantee (eps*, eta*, alpha*) with diagnostics.
#[pyclass(frozen, name = "DecayCertificate")]
struct PyDecayCertificate {
    inner: cert::DecayCertificate,
}

#[pymethods]
impl PyDecayCertificate {
    #[getter]
    fn eps_star(&self) -> f64 {
        self.inner.eps_star
    }
    #[getter]
    fn eta_star(&self) -> f64 {
        self.inner.eta_star
    }
    #[getter]
    fn alpha_star(&self) -> f64 {
        self.inner.alpha_star
    }
    #[getter]
    fn discriminant(&self) -> f64 {
        self.inner.discriminant
    }
    #[getter]
    fn regime(&self) -> String {
        self.inner.regime.to_string()
    }
    #[getter]
    fn critical_points(&self) -> Vec<f64> {
        self.inner.critical_points.clone()
    }
    #[getter]
    fn f_at_star(&self) -> f64 {
        self.inner.f_at_star
    }
    #[getter]
    fn g_at_star(&self) -> f64 {
        self.inner.g_at_star
    }

    fn __repr__(&self) -> String {
        format!(
            "DecayCertificate(eps_star={}, eta_star={}, alpha_star={}, regime='{}')",
            self.inner.eps_star, self.inner.eta_star, self.inner.alpha_star, self.inner.regime
        )
    }
}

/// Outcome of checking a trace against the exponential bound.
#[pyclass(frozen, name = "DecayReport")]
struct PyDecayReport {
    inner: analysis::DecayReport,
}

#[pymethods]
impl PyDecayReport {
    #[getter]
    fn alpha_star(&self) -> f64 {
        self.inner.alpha_star
    }
    #[getter]
    fn fitted_slope(&self) -> Option<f64> {
        self.inner.fitted_slope
    }
    #[getter]
    fn fitted_rate(&self) -> Option<f64> {
        self.inner.fitted_rate
    }
    #[getter]
    fn bound_satisfied(&self) -> bool {
        self.inner.bound_satisfied
    }
    #[getter]
    fn max_bound_ratio(&self) -> f64 {
        self.inner.max_bound_ratio
    }
    #[getter]
    fn fit_window(&self) -> (f64, f64) {
        self.inner.fit_window
    }
    #[getter]
    fn verdict(&self) -> String {
        self.inner.verdict.to_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "DecayReport(verdict='{}', max_bound_ratio={})",
            self.inner.verdict, self.inner.max_bound_ratio
        )
    }
}

/// Compute the decay certificate for damping bounds (sigma0, sigma1) and
/// first Dirichlet eigenvalue lambda1.
#[pyfunction]
fn certificate(sigma0: f64, sigma1: f64, lambda1: f64) -> PyResult<PyDecayCertificate> {
    let bounds = cert::DampingBounds::new(sigma0, sigma1).map_err(to_py_err)?;
    let gap = cert::SpectralGap::user_supplied(lambda1).map_err(to_py_err)?;
    let inner = cert::compute_certificate(&bounds, &gap).map_err(to_py_err)?;
    Ok(PyDecayCertificate { inner })
}

/// The rate function F(eps) = sigma0/2 - sqrt((sigma0-2eps)^2 lambda1^2 +
/// eps^2 (sigma1-eps)^2 lambda1) / (2 lambda1).
#[pyfunction]
fn decay_rate(eps: f64, sigma0: f64, sigma1: f64, lambda1: f64) -> PyResult<f64> {
    cert::decay_rate(eps, sigma0, sigma1, lambda1).map_err(to_py_err)
}

/// The positive branch of the balance quadratic in eta.
#[pyfunction]
fn balanced_eta(eps: f64, sigma0: f64, sigma1: f64, lambda1: f64) -> PyResult<f64> {
    cert::balanced_eta(eps, sigma0, sigma1, lambda1).map_err(to_py_err)
}

/// Coefficient of the gradient-energy term.
#[pyfunction]
fn gradient_coeff(eps: f64, eta: f64, sigma1: f64, lambda1: f64) -> PyResult<f64> {
    cert::gradient_coeff(eps, eta, sigma1, lambda1).map_err(to_py_err)
}

/// Coefficient of the squared-velocity term.
#[pyfunction]
fn velocity_coeff(eps: f64, eta: f64, sigma0: f64, sigma1: f64) -> PyResult<f64> {
    cert::velocity_coeff(eps, eta, sigma0, sigma1).map_err(to_py_err)
}

/// The cubic whose sign equals the sign of the rate function's derivative.
#[pyfunction]
fn sign_cubic(eps: f64, sigma0: f64, sigma1: f64, lambda1: f64) -> f64 {
    cert::sign_cubic(eps, sigma0, sigma1, lambda1)
}

/// D = 3 sigma1^2 - 24 lambda1.
#[pyfunction]
fn discriminant(sigma1: f64, lambda1: f64) -> f64 {
    cert::discriminant(sigma1, lambda1)
}

/// All real critical points of the rate function, ascending.
#[pyfunction]
fn critical_points(sigma0: f64, sigma1: f64, lambda1: f64) -> PyResult<Vec<f64>> {
    require_positive("sigma0", sigma0)?;
    require_positive("sigma1", sigma1)?;
    require_positive("lambda1", lambda1)?;
    Ok(cert::critical_points(sigma0, sigma1, lambda1))
}

/// All zeros of the rate function in (0, search_limit].
#[pyfunction]
fn decay_rate_zeros(sigma0: f64, sigma1: f64, lambda1: f64, search_limit: f64) -> PyResult<Vec<f64>> {
    require_positive("sigma0", sigma0)?;
    require_positive("sigma1", sigma1)?;
    require_positive("lambda1", lambda1)?;
    if !(search_limit >= sigma1) {
        return Err(PyValueError::new_err(format!(
            "search_limit must be at least sigma1 = {sigma1}, got {search_limit}"
        )));
    }
    Ok(cert::decay_rate_zeros(sigma0, sigma1, lambda1, search_limit))
}

/// Prefactor of the decay bound from the initial-data integrals.
#[pyfunction]
fn initial_energy_bound(u0_grad_sq_integral: f64, u1_plus_eps_u0_sq_integral: f64) -> PyResult<f64> {
    cert::initial_energy_bound(u0_grad_sq_integral, u1_plus_eps_u0_sq_integral).map_err(to_py_err)
}

/// pi^2 / L^2.
#[pyfunction]
fn lambda1_interval(length: f64) -> PyResult<f64> {
    spectral::lambda1_interval(length).map_err(to_py_err)
}

/// pi^2 * sum(1/L_i^2) for a 1D or 2D box.
#[pyfunction]
fn lambda1_box(lengths: Vec<f64>) -> PyResult<f64> {
    spectral::lambda1_box(&lengths).map_err(to_py_err)
}

/// First eigenvalue of the finite-difference Dirichlet Laplacian on a
/// uniform grid with the given interior points per axis.
#[pyfunction]
fn lambda1_discrete(lengths: Vec<f64>, points: Vec<usize>) -> PyResult<f64> {
    let offsets = vec![0.0; lengths.len()];
    let domain = spectral::DomainSpec::new(lengths, offsets).map_err(to_py_err)?;
    let grid = spectral::Grid::new(domain, &points).map_err(to_py_err)?;
    spectral::lambda1_discrete(&grid).map_err(to_py_err)
}

/// Residual of the growth counterexample at (x, t); exactly zero up to rounding.
#[pyfunction]
fn counterexample_residual(x: f64, t: f64) -> PyResult<f64> {
    wavesim::counterexample_residual(x, t).map_err(to_py_err)
}

type TraceTuple = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>);

fn trace_to_tuple(trace: &wavesim::EnergyTrace) -> TraceTuple {
    let s = trace.samples();
    (
        s.iter().map(|x| x.t).collect(),
        s.iter().map(|x| x.total).collect(),
        s.iter().map(|x| x.grad).collect(),
        s.iter().map(|x| x.velocity).collect(),
    )
}

/// Integrate u_tt - u_xx + sigma u_t = 0 on (0, length) with constant
/// damping, u0 the first sine mode and u1 = 0. Returns (t, total, grad,
/// velocity) lists.
#[pyfunction]
#[pyo3(signature = (sigma, interior_points, t_end, eps_for_v, sample_every = 10, length = 1.0, cfl_factor = 0.9))]
fn simulate_constant(
    sigma: f64,
    interior_points: usize,
    t_end: f64,
    eps_for_v: f64,
    sample_every: usize,
    length: f64,
    cfl_factor: f64,
) -> PyResult<TraceTuple> {
    let domain = spectral::DomainSpec::interval(0.0, length).map_err(to_py_err)?;
    let grid = spectral::Grid::new(domain, &[interior_points]).map_err(to_py_err)?;
    let u0 = wavesim::sine_mode(&grid, &[1], 1.0).map_err(to_py_err)?;
    let u1 = vec![0.0; interior_points];
    let damping =
        wavesim::DampingSpec::with_raw_bounds(wavesim::DampingKind::Constant(sigma), sigma, sigma)
            .map_err(to_py_err)?;
    let problem =
        wavesim::WaveProblem::new(grid, damping, u0, u1, t_end, cfl_factor).map_err(to_py_err)?;
    let trace = wavesim::simulate(&problem, eps_for_v, sample_every).map_err(to_py_err)?;
    Ok(trace_to_tuple(&trace))
}

/// Energy run of the no-decay counterexample on the truncated interval.
#[pyfunction]
#[pyo3(signature = (interior_points, t_end, sample_every = 10, cfl_factor = 0.9))]
fn simulate_counterexample(
    interior_points: usize,
    t_end: f64,
    sample_every: usize,
    cfl_factor: f64,
) -> PyResult<TraceTuple> {
    let trace = wavesim::simulate_counterexample(interior_points, t_end, cfl_factor, sample_every)
        .map_err(to_py_err)?;
    Ok(trace_to_tuple(&trace))
}

fn trace_from_lists(t: Vec<f64>, total: Vec<f64>) -> PyResult<wavesim::EnergyTrace> {
    if t.len() != total.len() {
        return Err(PyValueError::new_err(format!(
            "t and energy carry different lengths: {} vs {}",
            t.len(),
            total.len()
        )));
    }
    let samples: Vec<wavesim::EnergySample> = t
        .into_iter()
        .zip(total)
        .map(|(t, e)| wavesim::EnergySample {
            t,
            total: e,
            grad: e,
            velocity: 0.0,
        })
        .collect();
    wavesim::EnergyTrace::from_samples(samples, 0.0).map_err(to_py_err)
}

/// Least-squares decay rate (-slope/2) of log(energy) over [t_lo, t_hi].
#[pyfunction]
fn fit_decay_rate(t: Vec<f64>, energy: Vec<f64>, t_lo: f64, t_hi: f64) -> PyResult<f64> {
    let trace = trace_from_lists(t, energy)?;
    analysis::fit_decay_rate(&trace, (t_lo, t_hi)).map_err(to_py_err)
}

/// Check energy(t) <= energy(0) exp(-2 alpha_star t) (1 + tol).
#[pyfunction]
fn check_bound(t: Vec<f64>, energy: Vec<f64>, alpha_star: f64, tol: f64) -> PyResult<PyDecayReport> {
    let trace = trace_from_lists(t, energy)?;
    let inner = analysis::check_bound(&trace, alpha_star, tol).map_err(to_py_err)?;
    Ok(PyDecayReport { inner })
}

#[pymodule]
fn wavedecay_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDecayCertificate>()?;
    m.add_class::<PyDecayReport>()?;
    m.add_function(wrap_pyfunction!(certificate, m)?)?;
    m.add_function(wrap_pyfunction!(decay_rate, m)?)?;
    m.add_function(wrap_pyfunction!(balanced_eta, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_coeff, m)?)?;
    m.add_function(wrap_pyfunction!(velocity_coeff, m)?)?;
    m.add_function(wrap_pyfunction!(sign_cubic, m)?)?;
    m.add_function(wrap_pyfunction!(discriminant, m)?)?;
    m.add_function(wrap_pyfunction!(critical_points, m)?)?;
    m.add_function(wrap_pyfunction!(decay_rate_zeros, m)?)?;
    m.add_function(wrap_pyfunction!(initial_energy_bound, m)?)?;
    m.add_function(wrap_pyfunction!(lambda1_interval, m)?)?;
    m.add_function(wrap_pyfunction!(lambda1_box, m)?)?;
    m.add_function(wrap_pyfunction!(lambda1_discrete, m)?)?;
    m.add_function(wrap_pyfunction!(counterexample_residual, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_constant, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_counterexample, m)?)?;
    m.add_function(wrap_pyfunction!(fit_decay_rate, m)?)?;
    m.add_function(wrap_pyfunction!(check_bound, m)?)?;
    Ok(())
}
