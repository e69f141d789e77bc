//! Python bindings for `qdeconv`.
//!
//! Matrices cross the boundary as nested lists of `complex` (numpy arrays work
//! as input). Structured results come back as plain dicts.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qdeconv::channel::{KrausChannel, TransferMatrix};
use qdeconv::deconvolution as dc;
use qdeconv::io::{parse_channel_spec, FamilyDoc};
use qdeconv::linalg::{CMatrix, DEFAULT_KERNEL_TOL, DEFAULT_TOL};
use qdeconv::random::DEFAULT_SEED;
use qdeconv::{quorum, random_unitary as ru, scenarios};

type Rows = Vec<Vec<Complex64>>;

fn err(e: qdeconv::Error) -> PyErr {
    match e {
        qdeconv::Error::Json(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_matrix(rows: &Rows) -> PyResult<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err(
            "matrix rows must be non-empty and of equal length",
        ));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn to_rows(m: &CMatrix) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn to_matrices(list: &[Rows]) -> PyResult<Vec<CMatrix>> {
    list.iter().map(to_matrix).collect()
}

/// `json.loads` of a serializable value.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A CPTP map given by Kraus operators.
#[pyclass(name = "Channel", module = "pyqdeconv", skip_from_py_object)]
#[derive(Clone)]
struct PyChannel {
    inner: KrausChannel,
}

#[pymethods]
impl PyChannel {
    #[new]
    #[pyo3(signature = (kraus, tol = DEFAULT_TOL))]
    fn new(kraus: Vec<Rows>, tol: f64) -> PyResult<Self> {
        let inner = KrausChannel::new(to_matrices(&kraus)?, tol).map_err(err)?;
        Ok(Self { inner })
    }

    /// Parse a channel spec document.
    #[staticmethod]
    #[pyo3(signature = (text, tol = DEFAULT_TOL))]
    fn from_json(text: &str, tol: f64) -> PyResult<Self> {
        let spec = parse_channel_spec(text.as_bytes()).map_err(err)?;
        Ok(Self {
            inner: spec.to_channel(tol).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn kraus(&self) -> Vec<Rows> {
        self.inner.kraus().iter().map(to_rows).collect()
    }

    fn apply(&self, rho: Rows) -> PyResult<Rows> {
        Ok(to_rows(&self.inner.apply(&to_matrix(&rho)?).map_err(err)?))
    }

    /// Row-major transfer matrix `sum_k A_k ⊗ conj(A_k)`.
    fn transfer(&self) -> Rows {
        to_rows(self.inner.transfer().gamma())
    }

    fn __repr__(&self) -> String {
        format!(
            "Channel(dim={}, n_kraus={})",
            self.inner.dim(),
            self.inner.kraus().len()
        )
    }
}

/// True channel together with an invertible guess.
#[pyclass(name = "GuessPair", module = "pyqdeconv")]
struct PyGuessPair {
    inner: dc::GuessPair,
}

#[pymethods]
impl PyGuessPair {
    #[new]
    fn new(phi: &PyChannel, guess: &PyChannel) -> PyResult<Self> {
        let inner = dc::GuessPair::new(phi.inner.transfer(), guess.inner.transfer()).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn modified_observable(&self, a: Rows) -> PyResult<Rows> {
        Ok(to_rows(
            &dc::modified_observable(&self.inner, &to_matrix(&a)?).map_err(err)?,
        ))
    }

    /// Ideal, experimental and deconvolved values with their deviations.
    fn evaluate<'py>(&self, py: Python<'py>, a: Rows, rho: Rows) -> PyResult<Bound<'py, PyAny>> {
        let rep = dc::evaluate(&self.inner, &to_matrix(&a)?, &to_matrix(&rho)?).map_err(err)?;
        to_py(py, &rep)
    }

    #[pyo3(signature = (kernel_tol = DEFAULT_KERNEL_TOL))]
    fn family(&self, kernel_tol: f64) -> PyResult<PyFamily> {
        let inner = dc::correctable_family(&self.inner, kernel_tol).map_err(err)?;
        Ok(PyFamily { inner })
    }

    /// Largest deconvolution error of the family over random states.
    #[pyo3(signature = (family, n_states = 100, seed = DEFAULT_SEED))]
    fn verify(&self, family: &PyFamily, n_states: usize, seed: u64) -> f64 {
        dc::verify_family(&self.inner, &family.inner, n_states, seed)
    }

    /// Shot-based estimate through the Gell-Mann quorum; `shots = 0` is exact.
    #[pyo3(signature = (a, rho, shots = 10_000, seed = DEFAULT_SEED))]
    fn estimate<'py>(&self, py: Python<'py>, a: Rows, rho: Rows, shots: u64, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let qb = quorum::quorum_basis(self.inner.dim()).map_err(err)?;
        let est = quorum::deconvolved_estimate(&self.inner, &to_matrix(&a)?, &to_matrix(&rho)?, &qb, shots, seed)
            .map_err(err)?;
        to_py(py, &est)
    }
}

/// Real span of Hermitian observables.
#[pyclass(name = "ObservableFamily", module = "pyqdeconv")]
struct PyFamily {
    inner: dc::ObservableFamily,
}

#[pymethods]
impl PyFamily {
    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.inner.n_params()
    }

    fn basis(&self) -> Vec<Rows> {
        self.inner.basis().iter().map(to_rows).collect()
    }

    fn projection_residual(&self, a: Rows) -> PyResult<f64> {
        self.inner.projection_residual(&to_matrix(&a)?).map_err(err)
    }

    #[pyo3(signature = (a, tol = 1e-9))]
    fn contains(&self, a: Rows, tol: f64) -> PyResult<bool> {
        Ok(self.inner.contains(&to_matrix(&a)?, tol))
    }

    fn span_distance(&self, other: &PyFamily) -> f64 {
        self.inner.span_distance(&other.inner)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&FamilyDoc::new(&self.inner)).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.inner.n_params()
    }

    fn __repr__(&self) -> String {
        format!(
            "ObservableFamily(dim={}, n_params={})",
            self.inner.dim(),
            self.inner.n_params()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (phi, guess, kernel_tol = DEFAULT_KERNEL_TOL))]
fn correctable_family(phi: &PyChannel, guess: &PyChannel, kernel_tol: f64) -> PyResult<PyFamily> {
    PyGuessPair::new(phi, guess)?.family(kernel_tol)
}

/// Family for a random unitary channel; the result does not depend on which
/// unitary is the guess.
#[pyfunction]
#[pyo3(signature = (unitaries, guess_index = 0, tol = DEFAULT_KERNEL_TOL))]
fn ru_family(unitaries: Vec<Rows>, guess_index: usize, tol: f64) -> PyResult<PyFamily> {
    let es = ru::UnitaryErrorSet::new(to_matrices(&unitaries)?, guess_index, DEFAULT_TOL).map_err(err)?;
    Ok(PyFamily {
        inner: ru::ru_correctable_family(&es, tol),
    })
}

/// Eigenvalues of `U2^dagger U1` and the commutant family.
#[pyfunction]
#[pyo3(signature = (u1, u2, grouping_tol = ru::DEFAULT_GROUPING_TOL))]
fn two_unitary_family(u1: Rows, u2: Rows, grouping_tol: f64) -> PyResult<(Vec<Complex64>, PyFamily)> {
    let (eig, inner) = ru::two_unitary_family(&to_matrix(&u1)?, &to_matrix(&u2)?, grouping_tol).map_err(err)?;
    Ok((eig.eigenvalues, PyFamily { inner }))
}

#[pyfunction]
#[pyo3(signature = (unitaries, tol = DEFAULT_KERNEL_TOL))]
fn commutant_family(unitaries: Vec<Rows>, tol: f64) -> PyResult<PyFamily> {
    let inner = ru::commutant_family(&to_matrices(&unitaries)?, tol).map_err(err)?;
    Ok(PyFamily { inner })
}

#[pyfunction]
fn quorum_basis(d: usize) -> PyResult<Vec<Rows>> {
    Ok(quorum::quorum_basis(d)
        .map_err(err)?
        .elements()
        .iter()
        .map(to_rows)
        .collect())
}

/// Real coefficients of a Hermitian operator on the Gell-Mann quorum.
#[pyfunction]
fn decompose(a: Rows) -> PyResult<Vec<f64>> {
    let a = to_matrix(&a)?;
    let qb = quorum::quorum_basis(a.nrows()).map_err(err)?;
    quorum::decompose(&a, &qb).map_err(err)
}

#[pyfunction]
fn list_scenarios() -> Vec<&'static str> {
    scenarios::list_scenarios()
}

/// Run a named scenario; override values may be numbers or strings.
#[pyfunction]
#[pyo3(signature = (name, overrides = None, seed = DEFAULT_SEED))]
fn run_scenario<'py>(
    py: Python<'py>,
    name: &str,
    overrides: Option<&Bound<'py, PyDict>>,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let mut map = BTreeMap::new();
    if let Some(d) = overrides {
        for (k, v) in d.iter() {
            map.insert(k.extract::<String>()?, v.str()?.to_string());
        }
    }
    let res = scenarios::run_scenario(name, &map, seed).map_err(err)?;
    to_py(py, &res)
}

/// Transfer matrix of a channel given directly as Kraus operators, without
/// the trace-preservation check.
#[pyfunction]
fn transfer_matrix(kraus: Vec<Rows>) -> PyResult<Rows> {
    let ch = KrausChannel::new_unchecked(to_matrices(&kraus)?).map_err(err)?;
    let t: TransferMatrix = ch.transfer();
    Ok(to_rows(t.gamma()))
}

#[pymodule]
fn pyqdeconv(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChannel>()?;
    m.add_class::<PyGuessPair>()?;
    m.add_class::<PyFamily>()?;
    m.add_function(wrap_pyfunction!(correctable_family, m)?)?;
    m.add_function(wrap_pyfunction!(ru_family, m)?)?;
    m.add_function(wrap_pyfunction!(two_unitary_family, m)?)?;
    m.add_function(wrap_pyfunction!(commutant_family, m)?)?;
    m.add_function(wrap_pyfunction!(quorum_basis, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(list_scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(transfer_matrix, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_round_trip() {
        let rows: Rows = vec![
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)],
            vec![Complex64::new(-3.0, 1.0), Complex64::new(4.0, 0.0)],
        ];
        let m = to_matrix(&rows).unwrap();
        assert_eq!(m[(0, 1)], Complex64::new(0.0, 2.0));
        assert_eq!(to_rows(&m), rows);
    }

    #[test]
    fn ragged_rows_rejected() {
        let rows: Rows = vec![vec![Complex64::new(1.0, 0.0)], vec![]];
        assert!(to_matrix(&rows).is_err());
        assert!(to_matrix(&Vec::new()).is_err());
    }
}
