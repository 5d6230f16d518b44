//! Python bindings: run configurations, the alternating solver, single inner
//! solves and the energy functionals.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::tvinpaint as tv;
use ::tvinpaint::{energy, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::EmptyMesh(_)
        | Error::InvalidRegion(_)
        | Error::AllDamaged
        | Error::Resolution { .. }
        | Error::InvalidParameter { .. }
        | Error::LengthMismatch { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_backend(name: &str) -> PyResult<tv::Backend> {
    match name {
        "fem" => Ok(tv::Backend::Fem),
        "dg" => Ok(tv::Backend::Dg),
        _ => Err(PyValueError::new_err(format!("unknown backend `{name}` (fem or dg)"))),
    }
}

fn parse_boundary(name: &str) -> PyResult<tv::BoundaryMode> {
    match name {
        "neumann" => Ok(tv::BoundaryMode::Neumann),
        "weak-dirichlet" => Ok(tv::BoundaryMode::WeakDirichlet),
        _ => Err(PyValueError::new_err(format!(
            "unknown boundary mode `{name}` (neumann or weak-dirichlet)"
        ))),
    }
}

#[pyclass(name = "Mesh", frozen)]
struct PyMesh(tv::Mesh);

#[pymethods]
impl PyMesh {
    #[new]
    fn new(n_elements: i64) -> PyResult<Self> {
        tv::build_mesh(n_elements).map(PyMesh).map_err(to_py)
    }

    #[getter]
    fn n_elements(&self) -> usize {
        self.0.n_elements()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.h()
    }

    #[getter]
    fn nodes(&self) -> Vec<f64> {
        self.0.nodes().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("Mesh(n_elements={})", self.0.n_elements())
    }
}

/// One fully specified run.
#[pyclass(name = "RunConfig")]
struct PyRunConfig(tv::RunConfig);

#[pymethods]
impl PyRunConfig {
    #[new]
    #[pyo3(signature = (
        samples, damage, lambda_tilde, *, backend = "fem", n_elements = None, epsilon = 0.01,
        alpha = None, beta = 1.0, tau = 1.0, n_max = 20, rel_tol = Some(1e-8),
        boundary = "neumann", initial_iterate = 0.0, initial_weight = 1.0
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        samples: Vec<f64>,
        damage: Vec<(f64, f64)>,
        lambda_tilde: f64,
        backend: &str,
        n_elements: Option<usize>,
        epsilon: f64,
        alpha: Option<f64>,
        beta: f64,
        tau: f64,
        n_max: usize,
        rel_tol: Option<f64>,
        boundary: &str,
        initial_iterate: f64,
        initial_weight: f64,
    ) -> PyResult<Self> {
        let config = tv::RunConfig {
            backend: parse_backend(backend)?,
            n_elements: n_elements.unwrap_or(samples.len()),
            samples,
            damage: tv::DamagedRegion::new(damage).map_err(to_py)?,
            lambda_tilde,
            params: tv::SolveParams {
                epsilon,
                alpha,
                beta,
                tau,
                n_max,
                rel_tol,
                boundary_mode: parse_boundary(boundary)?,
            },
            initial_iterate: if initial_iterate == 0.0 {
                tv::InitialIterate::Zero
            } else {
                tv::InitialIterate::Constant(initial_iterate)
            },
            initial_weight: tv::InitialWeight::Constant(initial_weight),
        };
        config.validate().map_err(to_py)?;
        Ok(PyRunConfig(config))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let config: tv::RunConfig =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        config.validate().map_err(to_py)?;
        Ok(PyRunConfig(config))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn backend(&self) -> &'static str {
        self.0.backend.name()
    }

    #[getter]
    fn n_elements(&self) -> usize {
        self.0.n_elements
    }

    #[getter]
    fn lambda_tilde(&self) -> f64 {
        self.0.lambda_tilde
    }

    /// Element-wise resampled datum and observation mask.
    fn discretize(&self) -> PyResult<(Vec<f64>, Vec<bool>)> {
        let (_, signal) = self.0.discretize().map_err(to_py)?;
        Ok((signal.g().to_vec(), signal.observed().to_vec()))
    }

    fn with_backend(&self, backend: &str) -> PyResult<Self> {
        let mut c = self.0.clone();
        c.backend = parse_backend(backend)?;
        Ok(PyRunConfig(c))
    }

    fn __repr__(&self) -> String {
        format!(
            "RunConfig(backend={:?}, n_elements={}, lambda_tilde={})",
            self.0.backend.name(),
            self.0.n_elements,
            self.0.lambda_tilde
        )
    }
}

#[pyclass(name = "Trace", frozen)]
struct PyTrace(tv::IterationTrace);

#[pymethods]
impl PyTrace {
    #[getter]
    fn backend(&self) -> &'static str {
        self.0.backend.name()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.0.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.0.iterations()
    }

    #[getter]
    fn initial_surrogate(&self) -> f64 {
        self.0.initial_surrogate
    }

    /// One dict per outer iteration.
    #[getter]
    fn records<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.0
            .records
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("n", r.n)?;
                d.set_item("total_j", r.total_j)?;
                d.set_item("surrogate", r.surrogate)?;
                d.set_item("surrogate_before_update", r.surrogate_before_update)?;
                d.set_item("fidelity", r.fidelity)?;
                d.set_item("tv", r.tv)?;
                d.set_item("iterate_change", r.iterate_change)?;
                d.set_item("weight_min", r.weight_min)?;
                d.set_item("weight_max", r.weight_max)?;
                Ok(d)
            })
            .collect()
    }

    /// Nodal values for fem, (left, right) pairs flattened per element for dg.
    #[getter]
    fn final_iterate(&self) -> Vec<f64> {
        match &self.0.final_iterate {
            tv::Function::Nodal(u) => u.values.clone(),
            tv::Function::Broken(u) => u.coeffs.clone(),
        }
    }

    #[getter]
    fn midpoint_values(&self) -> Vec<f64> {
        self.0.final_iterate.midpoint_values()
    }

    #[getter]
    fn final_weight(&self) -> Vec<f64> {
        self.0.final_weight.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.0.records.len()
    }
}

/// Run the alternating minimization to completion.
#[pyfunction]
fn run(py: Python<'_>, config: &PyRunConfig) -> PyResult<PyTrace> {
    let c = config.0.clone();
    py.detach(move || tv::run_alternating(&c))
        .map(PyTrace)
        .map_err(to_py)
}

/// Run both backends on the same configuration; returns (fem, dg).
#[pyfunction]
fn compare(py: Python<'_>, config: &PyRunConfig) -> PyResult<(PyTrace, PyTrace)> {
    let c = config.0.clone();
    let cmp = py.detach(move || tv::compare_backends(&c)).map_err(to_py)?;
    Ok((PyTrace(cmp.fem.trace), PyTrace(cmp.dg.trace)))
}

/// One inner solve for fixed element weights.
#[pyfunction]
fn solve_step(config: &PyRunConfig, weights: Vec<f64>) -> PyResult<Vec<f64>> {
    let (mesh, signal) = config.0.discretize().map_err(to_py)?;
    let w = tv::WeightField::new(weights).map_err(to_py)?;
    if w.len() != mesh.n_elements() {
        return Err(PyValueError::new_err(format!(
            "expected {} weights, got {}",
            mesh.n_elements(),
            w.len()
        )));
    }
    match config.0.backend {
        tv::Backend::Fem => tv::fem::fem_solve_step(&mesh, &w, &signal).map(|u| u.values),
        tv::Backend::Dg => tv::dg::dg_solve_step(&mesh, &w, &signal, &config.0.params).map(|u| u.coeffs),
    }
    .map_err(to_py)
}

fn function_for(config: &tv::RunConfig, values: Vec<f64>) -> PyResult<tv::Function> {
    Ok(match config.backend {
        tv::Backend::Fem => tv::NodalFunction::new(values).into(),
        tv::Backend::Dg => tv::BrokenFunction::new(values).map_err(to_py)?.into(),
    })
}

/// Fidelity, TV and total energy of `values` (laid out as for the config's
/// backend), plus the surrogate when weights are given.
#[pyfunction]
#[pyo3(signature = (config, values, weights = None))]
fn energies<'py>(
    py: Python<'py>,
    config: &PyRunConfig,
    values: Vec<f64>,
    weights: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let (mesh, signal) = config.0.discretize().map_err(to_py)?;
    let u = function_for(&config.0, values)?;
    let report = match weights {
        Some(w) => {
            let w = tv::WeightField::new(w).map_err(to_py)?;
            energy::energy_report(&u, &w, &mesh, &signal)
        }
        None => energy::tv_energy(&u, &mesh, &signal),
    }
    .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("fidelity", report.fidelity)?;
    d.set_item("tv", report.tv)?;
    d.set_item("total_j", report.total_j)?;
    d.set_item("surrogate", report.surrogate)?;
    Ok(d)
}

/// Element slopes of `values` on the config's mesh.
#[pyfunction]
fn gradients(config: &PyRunConfig, values: Vec<f64>) -> PyResult<Vec<f64>> {
    let mesh = tv::Mesh::new(config.0.n_elements).map_err(to_py)?;
    let u = function_for(&config.0, values)?;
    energy::element_gradients(&u, &mesh).map_err(to_py)
}

/// Clamped inverse-gradient weights, relaxed by `tau < 1`.
#[pyfunction]
#[pyo3(signature = (gradients, epsilon, tau = 1.0))]
fn update_weight(gradients: Vec<f64>, epsilon: f64, tau: f64) -> PyResult<Vec<f64>> {
    energy::update_weight_relaxed(&gradients, epsilon, tau)
        .map(|w| w.values().to_vec())
        .map_err(to_py)
}

#[pymodule]
#[pyo3(name = "tvinpaint")]
fn tvinpaint_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyRunConfig>()?;
    m.add_class::<PyTrace>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(solve_step, m)?)?;
    m.add_function(wrap_pyfunction!(energies, m)?)?;
    m.add_function(wrap_pyfunction!(gradients, m)?)?;
    m.add_function(wrap_pyfunction!(update_weight, m)?)?;
    Ok(())
}
