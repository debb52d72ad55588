//! Python bindings: networks, solve options, results and the verification helpers.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use radial_sweep::io::{self, AngleUnit, NetworkFormat, OutputFormat};
use radial_sweep::{Complex64, Error, ErrorKind, NetworkInput, SweepMode, SweepOptions};

fn to_py_err(err: Error) -> PyErr {
    let msg = err.to_string();
    match err.kind() {
        ErrorKind::Input => PyIOError::new_err(msg),
        ErrorKind::Validation => PyValueError::new_err(msg),
        ErrorKind::Numerical => PyRuntimeError::new_err(msg),
    }
}

/// A radial feeder description.
#[pyclass(name = "Network", frozen)]
struct PyNetwork {
    inner: NetworkInput,
}

#[pymethods]
impl PyNetwork {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        io::parse_network_json(text)
            .map(|inner| Self { inner })
            .map_err(to_py_err)
    }

    /// Read a JSON file or a CSV directory. `format` is "json" or "csv"; guessed when omitted.
    #[staticmethod]
    #[pyo3(signature = (path, format=None))]
    fn from_file(path: PathBuf, format: Option<&str>) -> PyResult<Self> {
        let format = match format {
            Some("json") => NetworkFormat::Json,
            Some("csv") => NetworkFormat::Csv,
            Some(other) => return Err(PyValueError::new_err(format!("unknown format {other:?}"))),
            None => NetworkFormat::detect(&path).unwrap_or(NetworkFormat::Json),
        };
        io::parse_network_file(&path, format)
            .map(|inner| Self { inner })
            .map_err(to_py_err)
    }

    #[getter]
    fn bus_ids(&self) -> Vec<String> {
        self.inner.buses.iter().map(|b| b.id.clone()).collect()
    }

    #[getter]
    fn branch_count(&self) -> usize {
        self.inner.branches.len()
    }

    /// Copy of this network with generation set at one bus.
    #[pyo3(signature = (bus_id, p_gen, q_gen=0.0))]
    fn with_generation(&self, bus_id: &str, p_gen: f64, q_gen: f64) -> PyResult<Self> {
        let mut inner = self.inner.clone();
        let bus = inner
            .buses
            .iter_mut()
            .find(|b| b.id == bus_id)
            .ok_or_else(|| PyValueError::new_err(format!("unknown bus {bus_id:?}")))?;
        bus.p_gen = p_gen;
        bus.q_gen = q_gen;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(buses={}, branches={})",
            self.inner.buses.len(),
            self.inner.branches.len()
        )
    }
}

#[pyclass(name = "SolveResult", frozen)]
struct PySolveResult {
    inner: radial_sweep::SolveResult,
}

#[pymethods]
impl PySolveResult {
    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn history(&self) -> Vec<f64> {
        self.inner.history.clone()
    }

    /// Bus id -> complex voltage [pu].
    #[getter]
    fn voltages(&self) -> BTreeMap<String, Complex64> {
        self.inner
            .voltages
            .iter()
            .map(|v| (v.id.clone(), v.voltage))
            .collect()
    }

    /// Bus id -> (magnitude [pu], angle [deg]).
    #[getter]
    fn polar(&self) -> BTreeMap<String, (f64, f64)> {
        self.inner
            .voltages
            .iter()
            .map(|v| (v.id.clone(), (v.magnitude, v.angle_deg)))
            .collect()
    }

    /// (from, to, current) per branch in numbering order.
    #[getter]
    fn branch_currents(&self) -> Vec<(String, String, Complex64)> {
        self.inner
            .branches
            .iter()
            .map(|b| (b.from.clone(), b.to.clone(), b.current))
            .collect()
    }

    #[getter]
    fn total_loss(&self) -> Complex64 {
        self.inner.total_loss
    }

    #[getter]
    fn source_power(&self) -> Complex64 {
        self.inner.source_power
    }

    fn to_json(&self) -> String {
        io::render_result(&self.inner, OutputFormat::Json)
    }

    #[pyo3(signature = (radians=false))]
    fn table(&self, radians: bool) -> String {
        let unit = if radians {
            AngleUnit::Radians
        } else {
            AngleUnit::Degrees
        };
        io::render_table(&self.inner, unit)
    }

    fn __repr__(&self) -> String {
        format!(
            "SolveResult(nodes={}, iterations={})",
            self.inner.voltages.len(),
            self.inner.iterations
        )
    }
}

/// Solve a network. `mode` is "two-step" or "trx".
#[pyfunction]
#[pyo3(signature = (network, epsilon=1e-4, max_iterations=100, mode="two-step", v_ref=Complex64::new(1.0, 0.0), v_min=0.2))]
fn solve(
    network: &PyNetwork,
    epsilon: f64,
    max_iterations: usize,
    mode: &str,
    v_ref: Complex64,
    v_min: f64,
) -> PyResult<PySolveResult> {
    let mode = match mode {
        "two-step" => SweepMode::TwoStep,
        "trx" => SweepMode::SingleEquationTrx,
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    let opts = SweepOptions {
        epsilon,
        max_iterations,
        mode,
        v_ref,
        v_min,
        ..SweepOptions::default()
    };
    radial_sweep::solve(&network.inner, &opts)
        .map(|inner| PySolveResult { inner })
        .map_err(to_py_err)
}

/// Kirchhoff residuals of a result: dict with max_kcl_residual, max_kvl_residual, power_mismatch.
#[pyfunction]
fn check_residuals(
    network: &PyNetwork,
    result: &PySolveResult,
) -> PyResult<BTreeMap<&'static str, f64>> {
    let report = radial_sweep::check_residuals(&network.inner, &result.inner).map_err(to_py_err)?;
    Ok(BTreeMap::from([
        ("max_kcl_residual", report.max_kcl_residual),
        ("max_kvl_residual", report.max_kvl_residual),
        ("power_mismatch", report.power_mismatch),
    ]))
}

/// Voltages from the independent nodal-admittance solver, keyed by bus id.
#[pyfunction]
#[pyo3(signature = (network, tolerance=1e-10, v_ref=Complex64::new(1.0, 0.0)))]
fn reference_solve(
    network: &PyNetwork,
    tolerance: f64,
    v_ref: Complex64,
) -> PyResult<BTreeMap<String, Complex64>> {
    let sol =
        radial_sweep::reference_solve_at(&network.inner, v_ref, tolerance).map_err(to_py_err)?;
    Ok(sol.ids.into_iter().zip(sol.voltages).collect())
}

/// Exact receiving-end voltage of a single branch, or None past the transfer limit.
#[pyfunction]
fn two_node_closed_form(v0: Complex64, z: Complex64, s: Complex64) -> Option<Complex64> {
    radial_sweep::two_node_closed_form(v0, z, s)
}

#[pymodule]
fn radialsweep(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_class::<PySolveResult>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(check_residuals, m)?)?;
    m.add_function(wrap_pyfunction!(reference_solve, m)?)?;
    m.add_function(wrap_pyfunction!(two_node_closed_form, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
