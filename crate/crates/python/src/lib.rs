//! Python bindings: parameters, closed-form moments, crystal couplings and
//! the stochastic estimators.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tricorr_core::analytic as an;
use tricorr_core::{
    external_moment_estimate, integrate_path as core_integrate_path, run_intracavity_experiment, EnsembleConfig, Error,
    MomentEstimate, PositivePModel, SedModel, Theory, TimeGrid,
};

create_exception!(tricorr, NonFiniteError, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NonFinite { .. } => NonFiniteError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn theory(name: &str) -> PyResult<Theory> {
    name.parse().map_err(PyValueError::new_err)
}

#[pyclass(name = "SystemParams", module = "tricorr", frozen)]
struct PySystemParams(tricorr_core::SystemParams);

#[pymethods]
impl PySystemParams {
    /// `gamma` is either one damping rate or three, one per mode.
    #[new]
    #[pyo3(signature = (g, gamma = None, epsilon = Complex64::new(1.0, 0.0), big_gamma = 1.0))]
    fn new(g: f64, gamma: Option<Vec<f64>>, epsilon: Complex64, big_gamma: f64) -> PyResult<Self> {
        let gamma = match gamma.as_deref() {
            None => [1.0; 3],
            Some(&[c]) => [c; 3],
            Some(&[a, b, c]) => [a, b, c],
            Some(other) => return Err(PyValueError::new_err(format!("gamma needs 1 or 3 values, got {}", other.len()))),
        };
        let p = tricorr_core::SystemParams::new(g, gamma, epsilon)
            .and_then(|p| p.with_big_gamma(big_gamma))
            .map_err(to_py)?;
        Ok(PySystemParams(p))
    }

    #[getter]
    fn g(&self) -> f64 {
        self.0.g
    }

    #[getter]
    fn gamma(&self) -> [f64; 3] {
        self.0.gamma
    }

    #[getter]
    fn epsilon(&self) -> Complex64 {
        self.0.epsilon
    }

    #[getter]
    fn big_gamma(&self) -> f64 {
        self.0.big_gamma
    }

    #[getter]
    fn photon_number(&self) -> f64 {
        self.0.photon_number()
    }

    fn __repr__(&self) -> String {
        format!(
            "SystemParams(g={}, gamma={:?}, epsilon={}, big_gamma={})",
            self.0.g, self.0.gamma, self.0.epsilon, self.0.big_gamma
        )
    }
}

#[pyclass(name = "PhaseAngles", module = "tricorr", frozen)]
struct PyPhaseAngles(tricorr_core::PhaseAngles);

#[pymethods]
impl PyPhaseAngles {
    #[new]
    #[pyo3(signature = (theta = [0.0; 3], theta_bar = [0.0; 3]))]
    fn new(theta: [f64; 3], theta_bar: [f64; 3]) -> PyResult<Self> {
        tricorr_core::PhaseAngles::new(theta, theta_bar).map(PyPhaseAngles).map_err(to_py)
    }

    #[getter]
    fn big_theta(&self) -> f64 {
        self.0.big_theta()
    }

    #[getter]
    fn big_phi(&self) -> f64 {
        self.0.big_phi()
    }
}

#[pyclass(name = "HomodyneParams", module = "tricorr", frozen)]
struct PyHomodyneParams(tricorr_core::HomodyneParams);

#[pymethods]
impl PyHomodyneParams {
    #[new]
    #[pyo3(signature = (e_charge = 1.0, amp = 1.0, eta = 1.0, e_lo = 1.0))]
    fn new(e_charge: f64, amp: f64, eta: f64, e_lo: f64) -> PyResult<Self> {
        tricorr_core::HomodyneParams::new(e_charge, amp, eta, e_lo).map(PyHomodyneParams).map_err(to_py)
    }

    /// Amplification 1/e, perfect detectors, E = 1e9 s^-1/2.
    #[staticmethod]
    fn realistic() -> Self {
        PyHomodyneParams(tricorr_core::HomodyneParams::realistic())
    }

    #[getter]
    fn chain_factor(&self) -> f64 {
        self.0.chain_factor()
    }
}

fn angles_or_zero(a: Option<&PyPhaseAngles>) -> tricorr_core::PhaseAngles {
    a.map(|a| a.0).unwrap_or_else(tricorr_core::PhaseAngles::zero)
}

fn homodyne_or_unit(h: Option<&PyHomodyneParams>) -> tricorr_core::HomodyneParams {
    h.map(|h| h.0).unwrap_or_else(tricorr_core::HomodyneParams::unit)
}

/// Leading-order intracavity moment M(tau) of either theory.
#[pyfunction]
#[pyo3(signature = (theory, tau, params, angles = None))]
fn intracavity_moment(theory: &str, tau: f64, params: &PySystemParams, angles: Option<&PyPhaseAngles>) -> PyResult<f64> {
    let a = angles_or_zero(angles);
    match self::theory(theory)? {
        Theory::Qm => an::qm_moment_m(tau, &params.0, &a),
        Theory::Sed => an::sed_moment_m(tau, &params.0, &a),
    }
    .map_err(to_py)
}

/// Complex triple correlation <d a1 d a2 d a3> before phase projection.
#[pyfunction]
fn intracavity_triple(theory: &str, tau: f64, params: &PySystemParams) -> PyResult<Complex64> {
    match self::theory(theory)? {
        Theory::Qm => an::qm_triple_intracavity(tau, &params.0),
        Theory::Sed => an::sed_triple_intracavity(tau, &params.0),
    }
    .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (theory, tau_f, params, homodyne = None))]
fn external_moment(theory: &str, tau_f: f64, params: &PySystemParams, homodyne: Option<&PyHomodyneParams>) -> PyResult<f64> {
    let h = homodyne_or_unit(homodyne);
    match self::theory(theory)? {
        Theory::Qm => an::qm_external(tau_f, &params.0, &h),
        Theory::Sed => an::sed_external(tau_f, &params.0, &h),
    }
    .map_err(to_py)
}

#[pyfunction]
fn signal_to_noise(n: f64, eta: f64, g: f64, tau_f: f64) -> PyResult<f64> {
    an::signal_to_noise(n, eta, g, tau_f).map_err(to_py)
}

#[pyfunction]
fn sample_size_for_snr(target: f64, eta: f64, g: f64, tau_f: f64) -> PyResult<f64> {
    an::sample_size_for_snr(target, eta, g, tau_f).map_err(to_py)
}

/// Bundled crystals with computed and published couplings.
#[pyfunction]
fn crystals(py: Python<'_>) -> PyResult<Vec<Bound<'_, PyDict>>> {
    an::crystal_presets()
        .into_iter()
        .map(|p| {
            let c = an::crystal_to_coupling(&p.spec()).map_err(to_py)?;
            let d = PyDict::new(py);
            d.set_item("name", &p.name)?;
            d.set_item("big_g", c.big_g)?;
            d.set_item("big_gamma", c.big_gamma)?;
            d.set_item("g", c.g)?;
            d.set_item("reference_g", p.reference.g)?;
            d.set_item("reference_big_gamma", p.reference.big_gamma)?;
            d.set_item("pump_amplitude", p.pump_amplitude)?;
            Ok(d)
        })
        .collect()
}

fn estimates_dict<'py>(py: Python<'py>, taus: &[f64], est: &[MomentEstimate], seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("tau", taus.to_vec())?;
    d.set_item("mean", est.iter().map(|e| e.mean).collect::<Vec<_>>())?;
    d.set_item("std_error", est.iter().map(|e| e.std_error).collect::<Vec<_>>())?;
    d.set_item("std_error_im", est.iter().map(|e| e.std_error_im).collect::<Vec<_>>())?;
    d.set_item("n_paths", est.first().map_or(0, |e| e.n_paths))?;
    d.set_item("n_batches", est.first().map_or(0, |e| e.n_batches))?;
    d.set_item("seed", seed)?;
    Ok(d)
}

/// Ensemble estimate of the intracavity moment at every `sample_interval`.
#[pyfunction]
#[pyo3(signature = (theory, params, t_end, dt = 0.0025, sample_interval = 0.05, n_paths = 10_000, n_batches = 100, seed = 0, angles = None))]
#[allow(clippy::too_many_arguments)]
fn simulate_intracavity<'py>(
    py: Python<'py>,
    theory: &str,
    params: &PySystemParams,
    t_end: f64,
    dt: f64,
    sample_interval: f64,
    n_paths: usize,
    n_batches: usize,
    seed: u64,
    angles: Option<&PyPhaseAngles>,
) -> PyResult<Bound<'py, PyDict>> {
    let th = self::theory(theory)?;
    let grid = TimeGrid::new(0.0, t_end, dt).map_err(to_py)?;
    let stride = (sample_interval / dt).round().max(1.0) as usize;
    let nodes = grid.strided_nodes(stride);
    let ens = EnsembleConfig::new(n_paths, n_batches, seed).map_err(to_py)?;
    let a = angles_or_zero(angles);
    let p = params.0;
    let res = py
        .detach(|| run_intracavity_experiment(th, &p, &a, &grid, &nodes, &ens))
        .map_err(to_py)?;
    estimates_dict(py, &res.taus(), &res.estimates, seed)
}

/// Ensemble estimate of the external third-order moment for each window.
#[pyfunction]
#[pyo3(signature = (theory, params, tau_f, dt = 0.0025, n_paths = 10_000, n_batches = 100, seed = 0, angles = None, homodyne = None))]
#[allow(clippy::too_many_arguments)]
fn simulate_external<'py>(
    py: Python<'py>,
    theory: &str,
    params: &PySystemParams,
    tau_f: Vec<f64>,
    dt: f64,
    n_paths: usize,
    n_batches: usize,
    seed: u64,
    angles: Option<&PyPhaseAngles>,
    homodyne: Option<&PyHomodyneParams>,
) -> PyResult<Bound<'py, PyDict>> {
    let th = self::theory(theory)?;
    let ens = EnsembleConfig::new(n_paths, n_batches, seed).map_err(to_py)?;
    let (a, h, p) = (angles_or_zero(angles), homodyne_or_unit(homodyne), params.0);
    let est = py
        .detach(|| external_moment_estimate(th, &p, &a, &h, &tau_f, dt, &ens))
        .map_err(to_py)?;
    estimates_dict(py, &tau_f, &est, seed)
}

/// One stochastic path: the time grid and the state at every node.
#[pyfunction]
#[pyo3(signature = (theory, params, t_end, dt = 0.0025, seed = 0, path = 0))]
fn integrate_path(
    theory: &str,
    params: &PySystemParams,
    t_end: f64,
    dt: f64,
    seed: u64,
    path: u64,
) -> PyResult<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let grid = TimeGrid::new(0.0, t_end, dt).map_err(to_py)?;
    let cfg = tricorr_core::IntegratorConfig::default();
    let times: Vec<f64> = grid.times().collect();
    let states = match self::theory(theory)? {
        Theory::Qm => core_integrate_path(&PositivePModel::new(params.0), &grid, &cfg, seed, path)
            .map_err(to_py)?
            .states()
            .iter()
            .map(|s| s.to_vec())
            .collect(),
        Theory::Sed => core_integrate_path(&SedModel::new(params.0), &grid, &cfg, seed, path)
            .map_err(to_py)?
            .states()
            .iter()
            .map(|s| s.to_vec())
            .collect(),
    };
    Ok((times, states))
}

#[pymodule]
fn tricorr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("NonFiniteError", m.py().get_type::<NonFiniteError>())?;
    m.add_class::<PySystemParams>()?;
    m.add_class::<PyPhaseAngles>()?;
    m.add_class::<PyHomodyneParams>()?;
    m.add_function(wrap_pyfunction!(intracavity_moment, m)?)?;
    m.add_function(wrap_pyfunction!(intracavity_triple, m)?)?;
    m.add_function(wrap_pyfunction!(external_moment, m)?)?;
    m.add_function(wrap_pyfunction!(signal_to_noise, m)?)?;
    m.add_function(wrap_pyfunction!(sample_size_for_snr, m)?)?;
    m.add_function(wrap_pyfunction!(crystals, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_intracavity, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_external, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_path, m)?)?;
    Ok(())
}
