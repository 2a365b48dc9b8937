//! Python module `guarantees`. Lotteries cross the boundary as
//! `RankLottery` objects whose `probs` are `fractions.Fraction` values;
//! reports come back as plain dicts built from the library's JSON.

use guarantee_core as core;
use guarantee_core::compose::{canonical as canonical_guarantee, enumerate_canonical, CanonicalSequence};
use guarantee_core::feasibility::{implement_at, Implementation};
use guarantee_core::protocols::{self, ProtocolSpec};
use guarantee_core::suites::{run_suite as run_named_suite, SuiteOptions};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyList;

fn err(e: core::Error) -> PyErr {
    match e {
        core::Error::Internal(_) | core::Error::Limit(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(x).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "RankLottery", frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct PyRankLottery(core::RankLottery);

#[pymethods]
impl PyRankLottery {
    /// Accepts "0,1/3,1/3,1/3,0,0" or a sequence of numbers, strings or
    /// Fractions; floats are rejected because they are not exact.
    #[new]
    fn new(value: &Bound<'_, PyAny>) -> PyResult<Self> {
        if let Ok(text) = value.extract::<String>() {
            return core::RankLottery::parse(&text).map(Self).map_err(err);
        }
        let mut parts = Vec::new();
        for item in value.try_iter()? {
            let item = item?;
            if item.is_instance_of::<pyo3::types::PyFloat>() {
                return Err(PyValueError::new_err("floats are inexact; pass a Fraction or a string"));
            }
            parts.push(item.str()?.to_string());
        }
        core::RankLottery::parse(&parts.join(",")).map(Self).map_err(err)
    }

    #[getter]
    fn p(&self) -> usize {
        self.0.p()
    }

    #[getter]
    fn probs<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        let fraction = py.import("fractions")?.getattr("Fraction")?;
        let items = self
            .0
            .probs()
            .iter()
            .map(|x| fraction.call1((x.to_string(),)))
            .collect::<PyResult<Vec<_>>>()?;
        PyList::new(py, items)
    }

    fn cumulative(&self) -> Vec<String> {
        self.0.cumulative().iter().map(|x| x.to_string()).collect()
    }

    /// Weak stochastic dominance: every cumulative sum is at most the other's.
    fn dominates(&self, other: &Self) -> PyResult<bool> {
        self.0.dominates(&other.0).map_err(err)
    }

    fn dual(&self) -> Self {
        Self(core::duality::dual(&self.0))
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("RankLottery(\"{}\")", self.0)
    }
}

#[pyclass(name = "Profile", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyProfile(core::Profile);

#[pymethods]
impl PyProfile {
    /// Worst-first orders with 1-based outcomes, agents separated by "/".
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        core::Profile::parse(text).map(Self).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn p(&self) -> usize {
        self.0.p()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Profile(\"{}\")", self.0)
    }
}

#[pyfunction]
fn uniform(p: usize) -> PyResult<PyRankLottery> {
    core::lottery::uniform(p).map(PyRankLottery).map_err(err)
}

#[pyfunction]
fn vt(n: usize, p: usize) -> PyResult<PyRankLottery> {
    core::lottery::vt(n, p).map(PyRankLottery).map_err(err)
}

#[pyfunction]
fn rd(n: usize, p: usize) -> PyResult<PyRankLottery> {
    core::lottery::rd(n, p).map(PyRankLottery).map_err(err)
}

#[pyfunction]
fn dual(lottery: &PyRankLottery) -> PyRankLottery {
    lottery.dual()
}

#[pyfunction]
fn is_feasible<'py>(py: Python<'py>, lottery: &PyRankLottery, n: usize) -> PyResult<Bound<'py, PyAny>> {
    let report = py.detach(|| core::feasibility::is_feasible(&lottery.0, n)).map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
fn is_maximal<'py>(py: Python<'py>, lottery: &PyRankLottery, n: usize) -> PyResult<Bound<'py, PyAny>> {
    let report = py.detach(|| core::maximality::is_maximal(&lottery.0, n)).map_err(err)?;
    to_py(py, &report)
}

/// Outcome lottery implementing the guarantee at one profile, as a string,
/// or None when the profile blocks it.
#[pyfunction]
fn implement(lottery: &PyRankLottery, profile: &PyProfile) -> PyResult<Option<String>> {
    Ok(match implement_at(&lottery.0, &profile.0).map_err(err)? {
        Implementation::Implemented(l) => Some(l.to_string()),
        Implementation::Blocked(_) => None,
    })
}

#[pyfunction]
fn canonical(word: &str, n: usize, p: usize) -> PyResult<PyRankLottery> {
    let seq = CanonicalSequence::parse(word, n, p).map_err(err)?;
    canonical_guarantee(&seq).map(PyRankLottery).map_err(err)
}

#[pyfunction]
fn canonical_all(n: usize, p: usize) -> PyResult<Vec<(String, PyRankLottery)>> {
    Ok(enumerate_canonical(n, p)
        .map_err(err)?
        .into_iter()
        .map(|(seq, l)| (seq.word_text(), PyRankLottery(l)))
        .collect())
}

#[pyfunction]
fn worst_case_guarantee(spec: &str, n: usize, p: usize) -> PyResult<Option<PyRankLottery>> {
    let protocol = ProtocolSpec::parse(spec).map_err(err)?;
    let report = protocols::worst_case_guarantee(&protocol, n, p).map_err(err)?;
    Ok(report.achieved.map(PyRankLottery))
}

#[pyfunction]
#[pyo3(signature = (suite, seed = 0))]
fn run_suite<'py>(py: Python<'py>, suite: &str, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let opts = SuiteOptions { seed, ..SuiteOptions::default() };
    let result = py.detach(|| run_named_suite(suite, &opts)).map_err(err)?;
    to_py(py, &result)
}

#[pymodule]
fn guarantees(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRankLottery>()?;
    m.add_class::<PyProfile>()?;
    m.add_function(wrap_pyfunction!(uniform, m)?)?;
    m.add_function(wrap_pyfunction!(vt, m)?)?;
    m.add_function(wrap_pyfunction!(rd, m)?)?;
    m.add_function(wrap_pyfunction!(dual, m)?)?;
    m.add_function(wrap_pyfunction!(is_feasible, m)?)?;
    m.add_function(wrap_pyfunction!(is_maximal, m)?)?;
    m.add_function(wrap_pyfunction!(implement, m)?)?;
    m.add_function(wrap_pyfunction!(canonical, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_all, m)?)?;
    m.add_function(wrap_pyfunction!(worst_case_guarantee, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
